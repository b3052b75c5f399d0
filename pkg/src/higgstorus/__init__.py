"""Higgs bundles on compact complex tori at the matrix level.

Polystability by the commuting-semisimple criterion, joint spectra, Levi
reductions, and Yang-Mills / Einstein-Hermitian metrics.
"""

from .generators import PlantedTruth, gen_negative, gen_planted
from .levi import CentralizerResult, ReductionFrame, centralizer_basis, conjugating_frame, inductive_reduction, levi_type
from .linalg import DEFAULT_TOL, LinAlgFailure, Tolerances, eigendecompose, frobenius_norm, h_adjoint, is_positive_definite, nullspace
from .model import (
    BlockSpec,
    ChangeOfTrivialization,
    GaugeTransform,
    HiggsDatum,
    ParseError,
    apply_trivialization_change,
    conjugate_datum,
    parse,
    serialize,
    validate,
)
from .polystability import (
    InseparableClusters,
    JointSpectrum,
    PolystabilityReport,
    PreconditionError,
    check_polystable,
    combine,
    commutation_residual,
    is_semisimple,
    joint_eigenspaces,
    joint_spectrum,
)
from .yang_mills import (
    FlowResult,
    MetricDatum,
    NotYangMills,
    YMReport,
    apply_gauge,
    construct_ym_metric,
    eh_report,
    flatness_residual,
    flow_solve,
    levi_route_metric,
    ym_residual,
)

__version__ = "0.1.0"

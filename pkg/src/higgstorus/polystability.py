"""Commuting-semisimple test for Higgs data and the joint spectrum invariant.

Semisimplicity is decided in floating point, so every verdict here is
relative to the ``Tolerances`` in use: eigenvalues are grouped by single
linkage at ``tau_cluster``, kernels are measured at ``tau_rank``, and an
eigenbasis whose condition number exceeds ``kappa_max`` is treated as
numerically defective.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .generators import rng_for
from .linalg import (
    DEFAULT_TOL,
    LinAlgFailure,
    Tolerances,
    as_matrix,
    cluster_values,
    commutator,
    condition_number,
    eigendecompose,
    frobenius_norm,
    nullspace,
)
from .model import BlockSpec, HiggsDatum

POLYSTABLE = "polystable"
FAILS_COMMUTATION = "fails_commutation"
FAILS_SEMISIMPLICITY = "fails_semisimplicity"

MAX_ROUNDS = 5


class PreconditionError(ValueError):
    """The family is not commuting and semisimple."""


class InseparableClusters(LinAlgFailure):
    """Random generic combinations failed to split the joint eigenspaces."""


def _family(family) -> list[np.ndarray]:
    if isinstance(family, BlockSpec):
        family = family.higgs
    mats = [as_matrix(t) for t in family]
    if not mats:
        raise ValueError("empty family")
    n = mats[0].shape[0]
    for t in mats:
        if t.shape != (n, n):
            raise ValueError(f"family members must be {n}x{n}, got {t.shape}")
    return mats


def family_scale(family) -> float:
    """``max(1, max |T|_F)``; eigenvalue-level thresholds are multiples of it."""
    return max(1.0, *(frobenius_norm(t) for t in family))


@dataclass(frozen=True, eq=False)
class JointSpectrum:
    """Sorted simultaneous eigenvalue tuples with multiplicities."""

    entries: tuple  # ((values: (d,) complex ndarray, multiplicity), ...)

    @property
    def multiplicities(self) -> list[int]:
        return [m for _, m in self.entries]

    @property
    def size(self) -> int:
        return sum(self.multiplicities)

    def tuples(self) -> np.ndarray:
        return np.array([v for v, _ in self.entries])

    def matches(self, other, atol: float) -> bool:
        """Entrywise agreement: same multiplicities and tuples within ``atol``."""
        other_entries = other.entries if isinstance(other, JointSpectrum) else tuple(other)
        if len(self.entries) != len(other_entries):
            return False
        for (v, m), (w, k) in zip(self.entries, other_entries):
            w = np.asarray(w, dtype=np.complex128)
            if m != k or v.shape != w.shape or np.max(np.abs(v - w)) > atol:
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"tuple": [[float(z.real), float(z.imag)] for z in v], "mult": int(m)} for v, m in self.entries
            ]
        }


def _canonical_cmp(radius: float):
    def cmp(a, b):
        for x, y in zip(a, b):
            if abs(x - y) > radius:
                return -1 if x < y else 1
        return 0

    return cmp


def canonical_order(tuples: Sequence[np.ndarray], radius: float) -> list[int]:
    """Indices sorting tuples by interleaved ``(Re, Im)`` parts, equal within ``radius``."""
    keys = [[x for z in t for x in (z.real, z.imag)] for t in tuples]
    cmp = _canonical_cmp(radius)
    return sorted(range(len(keys)), key=functools.cmp_to_key(lambda i, j: cmp(keys[i], keys[j])))


@dataclass(frozen=True, eq=False)
class JointEigenDecomposition:
    basis: np.ndarray
    group_sizes: tuple
    spectrum: JointSpectrum

    def group_slices(self) -> list[slice]:
        edges = np.cumsum([0, *self.group_sizes])
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


@dataclass
class SemisimplicityAnalysis:
    deficit: int
    eigenbasis_condition: float
    ok: bool


def analyze_semisimplicity(a, tol: Tolerances = DEFAULT_TOL) -> SemisimplicityAnalysis:
    """Compare geometric and algebraic multiplicity on every eigenvalue cluster.

    ``deficit`` sums ``algebraic - geometric`` over clusters. Defective
    eigenvalues of a conjugated Jordan block can split beyond the cluster
    radius (by roughly ``eps**(1/k)`` for a size-``k`` block); their
    eigenvectors then nearly coincide, which the condition number of the
    assembled eigenbasis exposes.
    """
    m = as_matrix(a)
    n = m.shape[0]
    values, _ = eigendecompose(m, tol)
    radius = tol.tau_cluster * max(1.0, frobenius_norm(m))
    eye = np.eye(n)
    deficit = 0
    exact = True
    bases = []
    for idx in cluster_values(values, radius):
        centre = values[idx].mean()
        kernel = nullspace(m - centre * eye, tol)
        deficit += max(0, len(idx) - kernel.shape[1])
        exact &= kernel.shape[1] == len(idx)
        bases.append(kernel)
    cond = condition_number(np.hstack(bases)) if exact else float("inf")
    return SemisimplicityAnalysis(deficit, cond, exact and cond <= tol.kappa_max)


def is_semisimple(a, tol: Tolerances = DEFAULT_TOL) -> bool:
    return analyze_semisimplicity(a, tol).ok


def commutation_residual(block, tol: Tolerances = DEFAULT_TOL) -> float:
    """Largest ``|[T^i, T^k]|_F`` over pairs ``i < k`` (zero when ``d = 1``).

    The value is absolute; compare it against
    ``tol.tau_commute * commutation_scale(block)``.
    """
    mats = _family(block)
    worst = 0.0
    for i in range(len(mats)):
        for k in range(i + 1, len(mats)):
            worst = max(worst, frobenius_norm(commutator(mats[i], mats[k])))
    return worst


def commutation_scale(block) -> float:
    """``max(1, max |T^i|_F^2)``, the natural size of a commutator."""
    return max(1.0, *(frobenius_norm(t) ** 2 for t in _family(block)))


def commutes(block, tol: Tolerances = DEFAULT_TOL) -> bool:
    return commutation_residual(block, tol) <= tol.tau_commute * commutation_scale(block)


def combine(family, coeffs) -> np.ndarray:
    mats = _family(family)
    coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
    if coeffs.size != len(mats):
        raise ValueError(f"{coeffs.size} coefficients for a family of {len(mats)}")
    return np.einsum("i,iab->ab", coeffs, np.stack(mats))


def _require_commuting_semisimple(mats, tol):
    residual = commutation_residual(mats, tol)
    if residual > tol.tau_commute * commutation_scale(mats):
        raise PreconditionError(f"family does not commute (commutator norm {residual:.3e})")
    for i, t in enumerate(mats):
        if not is_semisimple(t, tol):
            raise PreconditionError(f"family member {i} is not semisimple")


def _split(c: np.ndarray, tol: Tolerances) -> list[np.ndarray]:
    """Orthonormal eigenspace bases of a (generic, semisimple) combination."""
    m = c.shape[0]
    values, _ = eigendecompose(c, tol)
    radius = tol.tau_cluster * max(1.0, frobenius_norm(c))
    pieces = []
    for idx in cluster_values(values, radius):
        kernel = nullspace(c - values[idx].mean() * np.eye(m), tol)
        if kernel.shape[1] != len(idx):
            raise InseparableClusters(
                f"combination eigenspace has dimension {kernel.shape[1]} for a cluster of size {len(idx)}"
            )
        pieces.append(kernel)
    return pieces


def _orthonormal(v: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(v)
    return q


def joint_eigenspaces(family, tol: Tolerances = DEFAULT_TOL, seed: int = 0, check: bool = True):
    """Simultaneous eigenspace decomposition of a commuting semisimple family.

    A random combination of the members (coefficients on the unit circle)
    is diagonalized; any group on which some member is not yet scalar is
    split again with fresh coefficients, at most five rounds in total.

    Returns
    -------
    JointEigenDecomposition
        Columns grouped by joint eigenspace in canonical spectrum order,
        orthonormal within each group.

    Raises
    ------
    PreconditionError
        If ``check`` is set and the family fails commutation or semisimplicity.
    InseparableClusters
        If the groups are still not scalar after the last round.
    """
    mats = _family(family)
    if check:
        _require_commuting_semisimple(mats, tol)
    n = mats[0].shape[0]
    scale = family_scale(mats)
    scalar_tol = 10 * tol.tau_cluster * scale
    rng = rng_for(seed, 0x4A45)

    groups = [np.eye(n, dtype=np.complex128)]
    for rounds in range(MAX_ROUNDS + 1):
        basis = np.hstack(groups)
        dual = np.linalg.inv(basis)
        edges = np.cumsum([0, *(g.shape[1] for g in groups)])
        restricted = []
        worst = 0.0
        failing = []
        for a, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
            blocks = [dual[lo:hi] @ t @ basis[:, lo:hi] for t in mats]
            restricted.append(blocks)
            size = hi - lo
            off = max(frobenius_norm(r - np.trace(r) / size * np.eye(size)) for r in blocks)
            worst = max(worst, off)
            if off > scalar_tol:
                failing.append(a)
        if not failing:
            break
        if rounds == MAX_ROUNDS:
            raise InseparableClusters(
                f"joint eigenspaces not separated after {MAX_ROUNDS} rounds (worst residual {worst:.3e})"
            )
        new_groups = []
        for a, g in enumerate(groups):
            if a not in failing:
                new_groups.append(g)
                continue
            coeffs = np.exp(2j * np.pi * rng.random(len(mats)))
            c = np.einsum("i,iab->ab", coeffs, np.stack(restricted[a]))
            new_groups.extend(_orthonormal(g @ w) for w in _split(c, tol))
        groups = new_groups

    tuples = [np.array([np.trace(r) / r.shape[0] for r in blocks]) for blocks in restricted]

    # Coalesce groups whose tuples coincide at the clustering radius.
    radius = tol.tau_cluster * scale
    merged_groups, merged_tuples = [], []
    for g, t in zip(groups, tuples):
        for k, u in enumerate(merged_tuples):
            if np.max(np.abs(u - t)) <= radius:
                size_u, size_t = merged_groups[k].shape[1], g.shape[1]
                merged_tuples[k] = (u * size_u + t * size_t) / (size_u + size_t)
                merged_groups[k] = _orthonormal(np.hstack([merged_groups[k], g]))
                break
        else:
            merged_groups.append(g)
            merged_tuples.append(t)

    order = canonical_order(merged_tuples, radius)
    groups = [merged_groups[k] for k in order]
    tuples = [merged_tuples[k] for k in order]
    basis = np.hstack(groups)
    cond = condition_number(basis)
    if cond > tol.kappa_max:
        raise InseparableClusters(f"joint eigenbasis condition number {cond:.3e} exceeds kappa_max")
    sizes = tuple(g.shape[1] for g in groups)
    spectrum = JointSpectrum(tuple((t, m) for t, m in zip(tuples, sizes)))
    return JointEigenDecomposition(basis, sizes, spectrum)


def joint_spectrum(family, tol: Tolerances = DEFAULT_TOL, seed: int = 0, check: bool = True) -> JointSpectrum:
    return joint_eigenspaces(family, tol, seed, check).spectrum


@dataclass
class PolystabilityReport:
    commutation_residual: float
    semisimple_verdicts: list
    verdict: str
    spectrum: list | None = None
    semisimple_deficits: list = field(default_factory=list)
    block_commutation_residuals: list = field(default_factory=list)
    block_commutation_scales: list = field(default_factory=list)

    @property
    def polystable(self) -> bool:
        return self.verdict == POLYSTABLE

    def to_dict(self) -> dict:
        return {
            "commutation_residual": self.commutation_residual,
            "block_commutation_residuals": self.block_commutation_residuals,
            "block_commutation_scales": self.block_commutation_scales,
            "semisimple_verdicts": self.semisimple_verdicts,
            "semisimple_deficits": self.semisimple_deficits,
            "verdict": self.verdict,
            "spectrum": None if self.spectrum is None else [s.to_dict() for s in self.spectrum],
        }


def check_polystable(datum: HiggsDatum, tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> PolystabilityReport:
    """Decide polystability block by block: pairwise commutation, then semisimplicity."""
    residuals, scales, verdicts, deficits = [], [], [], []
    for block in datum.blocks:
        residuals.append(commutation_residual(block, tol))
        scales.append(commutation_scale(block))
        analyses = [analyze_semisimplicity(t, tol) for t in block.higgs]
        verdicts.append([a.ok for a in analyses])
        deficits.append(
            [
                {
                    "deficit": a.deficit,
                    "eigenbasis_condition": a.eigenbasis_condition if np.isfinite(a.eigenbasis_condition) else None,
                }
                for a in analyses
            ]
        )
    worst = max(residuals)
    if any(r > tol.tau_commute * c for r, c in zip(residuals, scales)):
        verdict = FAILS_COMMUTATION
    elif not all(all(v) for v in verdicts):
        verdict = FAILS_SEMISIMPLICITY
    else:
        verdict = POLYSTABLE
    spectra = None
    if verdict == POLYSTABLE:
        spectra = [joint_spectrum(b.higgs, tol, seed, check=False) for b in datum.blocks]
    return PolystabilityReport(worst, verdicts, verdict, spectra, deficits, residuals, scales)

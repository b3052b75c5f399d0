"""Centralizers of matrix families and the Levi reduction they determine.

For a commuting semisimple family with joint eigenspace multiplicities
``m_a`` the centralizer is ``gl(m_1) + ... + gl(m_k)`` in a joint eigenbasis;
the multiset ``{m_a}`` is its Levi type.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DEFAULT_TOL, Tolerances, cluster_values, commutator, eigendecompose, frobenius_norm, nullspace
from .model import encode_matrix
from .polystability import (
    JointSpectrum,
    PreconditionError,
    _family,
    _require_commuting_semisimple,
    family_scale,
    joint_eigenspaces,
)


@dataclass(frozen=True, eq=False)
class CentralizerResult:
    basis: tuple  # matrices orthonormal for <X, Y> = tr(X^dagger Y)
    dim: int
    levi_type: tuple | None = None

    def to_dict(self, include_basis: bool = True) -> dict:
        out = {"dim": self.dim, "levi_type": None if self.levi_type is None else list(self.levi_type)}
        if include_basis:
            out["basis"] = [encode_matrix(x) for x in self.basis]
        return out

    def stacked(self) -> np.ndarray:
        """Basis as columns of ``vec(X)`` (column-major)."""
        n = self.basis[0].shape[0] if self.basis else 0
        if not self.basis:
            return np.zeros((n * n, 0), dtype=np.complex128)
        return np.stack([x.reshape(-1, order="F") for x in self.basis], axis=1)

    def projection_residual(self, x: np.ndarray) -> float:
        """Distance from ``x`` to the span of the basis, in Frobenius norm."""
        v = np.asarray(x, dtype=np.complex128).reshape(-1, order="F")
        q = self.stacked()
        return float(np.linalg.norm(v - q @ (q.conj().T @ v)))


def commutation_operator(family) -> np.ndarray:
    """Stacked matrix of ``vec(X) -> vec([X, T^i])`` over the family.

    Uses ``vec(X T) = (T^T kron I) vec X`` and ``vec(T X) = (I kron T) vec X``.
    """
    mats = _family(family)
    n = mats[0].shape[0]
    eye = np.eye(n)
    return np.vstack([np.kron(t.T, eye) - np.kron(eye, t) for t in mats])


def levi_type(spectrum: JointSpectrum) -> tuple:
    return tuple(sorted(spectrum.multiplicities, reverse=True))


def centralizer_basis(family, tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> CentralizerResult:
    """Orthonormal basis of ``{X : [X, T^i] = 0 for all i}``.

    Any square family is accepted. When the family also commutes and every
    member is semisimple, the Levi type is attached and the dimension is
    checked against the sum of squared multiplicities.
    """
    mats = _family(family)
    n = mats[0].shape[0]
    kernel = nullspace(commutation_operator(mats), tol)
    basis = tuple(kernel[:, k].reshape((n, n), order="F") for k in range(kernel.shape[1]))
    dim = len(basis)
    try:
        _require_commuting_semisimple(mats, tol)
    except PreconditionError:
        return CentralizerResult(basis, dim, None)
    lt = levi_type(joint_eigenspaces(mats, tol, seed, check=False).spectrum)
    expected = sum(m * m for m in lt)
    if dim != expected:
        raise ArithmeticError(f"centralizer dimension {dim} disagrees with Levi type {lt} (expected {expected})")
    return CentralizerResult(basis, dim, lt)


@dataclass(frozen=True, eq=False)
class ReductionFrame:
    frame: np.ndarray
    group_sizes: tuple
    spectrum: JointSpectrum

    def canonical_form(self, i: int) -> np.ndarray:
        """Block-scalar matrix of component ``i`` in canonical order."""
        return np.diag(np.repeat([v[i] for v, _ in self.spectrum.entries], self.group_sizes))

    def residual(self, family) -> float:
        g_inv = np.linalg.inv(self.frame)
        return max(
            frobenius_norm(g_inv @ t @ self.frame - self.canonical_form(i)) for i, t in enumerate(_family(family))
        )


def conjugating_frame(family, tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> ReductionFrame:
    """Frame ``g`` with every ``g^{-1} T^i g`` block-scalar in canonical order.

    Columns are orthonormal within each joint eigenspace. Any other valid
    frame equals ``g h`` with ``h`` block-diagonal in the group sizes.
    """
    mats = _family(family)
    dec = joint_eigenspaces(mats, tol, seed)
    frame = ReductionFrame(dec.basis, dec.group_sizes, dec.spectrum)
    residual = frame.residual(mats)
    if residual > 1e-7 * family_scale(mats):
        raise ArithmeticError(f"frame leaves residual {residual:.3e} off block-scalar form")
    return frame


@dataclass
class ReductionStage:
    generator: int
    dim: int
    levi_type: tuple


def inductive_reduction(family, tol: Tolerances = DEFAULT_TOL) -> list[ReductionStage]:
    """Reduce one generator at a time.

    Stage ``i`` is the centralizer of ``T^i`` inside the stage ``i-1``
    subalgebra, computed as a nullspace in the coordinates of the previous
    basis. Its Levi type comes separately from refining the eigenspace
    partition of the previous stage by the eigenvalues of ``T^i``.
    """
    mats = _family(family)
    n = mats[0].shape[0]
    _require_commuting_semisimple(mats, tol)
    scale = family_scale(mats)
    radius = tol.tau_cluster * scale

    span = np.eye(n * n, dtype=np.complex128)
    parts = [np.eye(n, dtype=np.complex128)]
    stages = []
    for i, t in enumerate(mats):
        images = np.stack(
            [commutator(span[:, k].reshape((n, n), order="F"), t).reshape(-1, order="F") for k in range(span.shape[1])],
            axis=1,
        )
        coords = nullspace(images, tol)
        span = np.linalg.qr(span @ coords)[0]

        refined = []
        for v in parts:
            # span(v) is T^i-invariant and v has orthonormal columns.
            r = v.conj().T @ t @ v
            values, _ = eigendecompose(r, tol)
            for idx in cluster_values(values, radius):
                k = nullspace(r - values[idx].mean() * np.eye(r.shape[0]), tol)
                refined.append(np.linalg.qr(v @ k)[0])
        parts = refined
        lt = tuple(sorted((p.shape[1] for p in parts), reverse=True))
        stages.append(ReductionStage(i, span.shape[1], lt))
    return stages


"""Dense complex-matrix kernel with explicit tolerance handling.

Every threshold is relative to ``max(1, norm)`` of the matrix it is applied to.
Matrices are plain ``numpy`` arrays of dtype ``complex128``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


class LinAlgFailure(RuntimeError):
    """A numerical routine did not deliver its residual contract."""


@dataclass(frozen=True)
class Tolerances:
    """Thresholds shared by every numerical decision in the package.

    Parameters
    ----------
    tau_commute : float
        Relative commutator threshold.
    tau_rank : float
        Singular-value cutoff, relative to the largest singular value.
    tau_cluster : float
        Single-linkage radius for grouping eigenvalues.
    kappa_max : float
        Ceiling for condition numbers of metrics and eigenbases.
    """

    tau_commute: float = 1e-9
    tau_rank: float = 1e-10
    tau_cluster: float = 1e-7
    kappa_max: float = 1e8

    def __post_init__(self):
        for name in ("tau_commute", "tau_rank", "tau_cluster"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if not (np.isfinite(self.kappa_max) and self.kappa_max >= 1):
            raise ValueError(f"kappa_max must be >= 1, got {self.kappa_max!r}")


DEFAULT_TOL = Tolerances()


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("non-finite entry")
    return m


def _square(a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.complex128), "fro"))


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def eigendecompose(a, tol: Tolerances = DEFAULT_TOL):
    """Eigenvalues and right eigenvectors of a square matrix.

    Uses the LAPACK Schur-based ``geev`` driver. Every returned pair is
    checked against ``|A v - lambda v| <= tau_rank * max(1, |A|)``.

    Returns
    -------
    values : (n,) complex ndarray
    vectors : (n, n) complex ndarray
        Unit-norm eigenvectors stored column-wise.

    Raises
    ------
    ValueError
        If ``a`` is not square.
    LinAlgFailure
        If LAPACK fails to converge or a pair breaks the residual bound.
    """
    m = _square(a)
    try:
        values, vectors = sla.eig(m, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise LinAlgFailure(f"eigensolver did not converge: {exc}") from exc
    vectors = vectors / np.linalg.norm(vectors, axis=0, keepdims=True)
    residual = np.linalg.norm(m @ vectors - vectors * values, axis=0)
    bound = tol.tau_rank * max(1.0, frobenius_norm(m))
    worst = float(residual.max())
    if worst > bound:
        raise LinAlgFailure(f"eigenpair residual {worst:.3e} exceeds {bound:.3e}")
    return values, vectors


def nullspace(a, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical kernel of ``a``.

    A right singular vector is kept when its singular value is below
    ``tau_rank * max(1, sigma_max)``. Columns beyond the row count belong to
    the kernel unconditionally. The result may have zero columns.
    """
    m = as_matrix(a)
    # A tall matrix needs only the thin factorization: its vh is already square.
    _, s, vh = np.linalg.svd(m, full_matrices=m.shape[0] < m.shape[1])
    cutoff = tol.tau_rank * max(1.0, float(s[0]) if s.size else 0.0)
    rank = int(np.count_nonzero(s > cutoff))
    return np.conj(vh[rank:]).T.copy()


def is_hermitian(h, tol: Tolerances = DEFAULT_TOL) -> bool:
    m = _square(h)
    return frobenius_norm(m - dagger(m)) <= tol.tau_rank * max(1.0, frobenius_norm(m))


def is_positive_definite(h, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Hermitian within ``tau_rank`` with every eigenvalue above ``tau_rank * max(1, |H|)``."""
    m = _square(h)
    if not is_hermitian(m, tol):
        return False
    herm = 0.5 * (m + dagger(m))
    smallest = float(np.linalg.eigvalsh(herm)[0])
    return smallest > tol.tau_rank * max(1.0, frobenius_norm(m))


def condition_number(a) -> float:
    s = np.linalg.svd(np.asarray(a, dtype=np.complex128), compute_uv=False)
    if s[-1] == 0:
        return float("inf")
    return float(s[0] / s[-1])


def h_adjoint(t, h, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Adjoint of ``t`` for the inner product ``<u, v>_H = u^dagger H v``.

    Returns ``H^{-1} T^dagger H``.
    """
    t = _square(t)
    h = _square(h)
    if t.shape != h.shape:
        raise ValueError(f"shape mismatch: T {t.shape} vs H {h.shape}")
    if not is_hermitian(h, tol):
        raise ValueError("metric is not Hermitian")
    if not is_positive_definite(h, tol):
        raise ValueError("metric is not positive definite")
    return metric_adjoint(t, h)


def metric_adjoint(t: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Unchecked ``H^{-1} T^dagger H``; callers guarantee ``h`` is a valid metric."""
    return np.linalg.solve(h, dagger(t) @ h)


def cluster_values(values, radius: float) -> list[np.ndarray]:
    """Single-linkage clusters of complex numbers at the given radius.

    Returns index arrays, ordered by their smallest member index.
    """
    values = np.asarray(values, dtype=np.complex128)
    n = values.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    close = np.abs(values[:, None] - values[None, :]) <= radius
    for i in range(n):
        for j in range(i + 1, n):
            if close[i, j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(idx) for _, idx in sorted(groups.items(), key=lambda kv: kv[1][0])]


def hermitian_sqrt(h: np.ndarray, inverse: bool = False) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (h + dagger(h)))
    if np.any(w <= 0):
        raise ValueError("matrix is not positive definite")
    p = -0.5 if inverse else 0.5
    return (v * w**p) @ dagger(v)

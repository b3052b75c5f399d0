"""Exact oracles, independent of the numerical code paths they check."""

import numpy as np
import sympy as sp

X = sp.Symbol("x")


def exact_is_semisimple(a) -> bool:
    """Diagonalizable over C iff the squarefree part of the charpoly kills A."""
    m = sp.Matrix(np.asarray(a).real.round().astype(int).tolist())
    p = m.charpoly(X).as_expr()
    p = sp.Poly(p, X)
    q = sp.quo(p, sp.gcd(p, p.diff(X)))
    acc = sp.zeros(*m.shape)
    for c in q.all_coeffs():
        acc = acc * m + c * sp.eye(m.shape[0])
    return acc.is_zero_matrix


def exact_centralizer_dim(family) -> int:
    """``n^2 - rank`` of the entrywise linear system ``X T = T X``."""
    mats = [sp.Matrix(np.asarray(t).real.round().astype(int).tolist()) for t in family]
    n = mats[0].shape[0]
    syms = sp.symbols(f"x0:{n * n}")
    xm = sp.Matrix(n, n, syms)
    eqs = []
    for t in mats:
        eqs.extend(list(xm * t - t * xm))
    a, _ = sp.linear_eq_to_matrix(eqs, syms)
    return n * n - a.rank()


def exact_commutator_norm(a, b) -> float:
    ma, mb = sp.Matrix(a), sp.Matrix(b)
    c = ma * mb - mb * ma
    return float(sp.sqrt(sum(abs(z) ** 2 for z in c)))


def exact_eigenvalues(a) -> dict:
    """Eigenvalues with algebraic multiplicity of an integer matrix."""
    return sp.Matrix(np.asarray(a).real.round().astype(int).tolist()).eigenvals()


def unimodular(rng, n: int) -> np.ndarray:
    """Random integer matrix with determinant 1 (unit lower times unit upper)."""
    lower = np.tril(rng.integers(-1, 2, size=(n, n)), -1) + np.eye(n, dtype=int)
    upper = np.triu(rng.integers(-1, 2, size=(n, n)), 1) + np.eye(n, dtype=int)
    return lower @ upper


def integer_inverse(s: np.ndarray) -> np.ndarray:
    inv = sp.Matrix(s.tolist()).inv()
    return np.array(inv.tolist(), dtype=int)


def jordan_matrix(rng, n: int) -> np.ndarray:
    """Integer Jordan form on ``n`` coordinates with at least one block of size >= 2."""
    sizes = []
    left = n
    first = int(rng.integers(2, n + 1))
    sizes.append(first)
    left -= first
    while left:
        k = int(rng.integers(1, left + 1))
        sizes.append(k)
        left -= k
    j = np.zeros((n, n), dtype=int)
    pos = 0
    for k in sizes:
        lam = int(rng.integers(-2, 3))
        for r in range(k):
            j[pos + r, pos + r] = lam
            if r + 1 < k:
                j[pos + r, pos + r + 1] = 1
        pos += k
    return j


def integer_family(rng, kind: str, n: int) -> np.ndarray:
    """Integer test matrix: ``random`` entries, ``diag`` (conjugated, repeated eigenvalues), ``jordan``."""
    if kind == "random":
        return rng.integers(-2, 3, size=(n, n))
    s = unimodular(rng, n)
    s_inv = integer_inverse(s)
    if kind == "diag":
        core = np.diag(rng.integers(-2, 3, size=n))
    else:
        core = jordan_matrix(rng, n)
    return s @ core @ s_inv

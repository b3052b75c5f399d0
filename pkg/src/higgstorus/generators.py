"""Seeded instance generators.

Planted instances are simultaneously diagonalizable by construction; negative
instances break exactly one of the two polystability conditions. All
randomness flows from a Philox counter-based generator keyed by the seed,
with one spawned stream per block so block order never perturbs another
block's draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import SCHEMA, BlockSpec, HiggsDatum, ParseError, decode_matrix, encode_matrix, load_json

GRID = np.arange(-5, 6)
NEGATIVE_KINDS = ("nilpotent", "noncommuting", "nonsemisimple_mixed")


def rng_for(seed: int, *spawn_key: int) -> np.random.Generator:
    """Philox stream for ``seed`` (any 64-bit integer) and an optional spawn path."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.Philox(ss))


def spectrum_sort_key(values) -> tuple:
    vals = np.asarray(values, dtype=np.complex128)
    return tuple(x for z in vals for x in (float(z.real), float(z.imag)))


@dataclass(frozen=True, eq=False)
class PlantedBlock:
    spectrum: tuple  # ((tuple ndarray of d complex, multiplicity), ...) sorted lexicographically
    conjugator: np.ndarray

    @property
    def eigenspace_dims(self) -> list[int]:
        return [m for _, m in self.spectrum]


@dataclass(frozen=True, eq=False)
class PlantedTruth:
    blocks: tuple

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "blocks": [
                {
                    "spectrum": [
                        {"tuple": [[float(z.real), float(z.imag)] for z in tup], "mult": int(m)}
                        for tup, m in b.spectrum
                    ],
                    "conjugator": encode_matrix(b.conjugator),
                }
                for b in self.blocks
            ],
        }


def parse_truth(data) -> PlantedTruth:
    obj = load_json(data, "truth file")
    blocks = obj.get("blocks")
    if not isinstance(blocks, list) or not blocks:
        raise ParseError("$.blocks: expected a non-empty array")
    out = []
    for j, b in enumerate(blocks):
        try:
            spectrum = tuple(
                (np.array([complex(re, im) for re, im in e["tuple"]]), int(e["mult"])) for e in b["spectrum"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"$.blocks[{j}].spectrum: {exc}") from exc
        out.append(PlantedBlock(spectrum, decode_matrix(b.get("conjugator"), f"$.blocks[{j}].conjugator")))
    return PlantedTruth(tuple(out))


def random_conjugator(rng: np.random.Generator, n: int, cond_bound: float = 10.0) -> np.ndarray:
    """Random complex matrix with condition number at most ``cond_bound``."""
    def haar(k):
        z = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        q, r = np.linalg.qr(z)
        d = np.diag(r)
        return q * (d / np.abs(d))

    s = np.exp(rng.uniform(0.0, np.log(cond_bound), size=n))
    s[0] = 1.0
    return (haar(n) * s) @ haar(n).conj().T


def _random_composition(rng, n: int) -> list[int]:
    parts = int(rng.integers(1, n + 1))
    cuts = np.sort(rng.choice(np.arange(1, n), size=parts - 1, replace=False)) if parts > 1 else np.array([], int)
    bounds = [0, *cuts.tolist(), n]
    return [b - a for a, b in zip(bounds[:-1], bounds[1:])]


def _random_spectrum(rng, n: int, d: int) -> list:
    mults = _random_composition(rng, n)
    seen = set()
    entries = []
    for m in mults:
        while True:
            tup = rng.choice(GRID, size=d) + 1j * rng.choice(GRID, size=d)
            key = spectrum_sort_key(tup)
            if key not in seen:
                seen.add(key)
                break
        entries.append((tup.astype(np.complex128), m))
    return entries


def _check_spectrum(spectrum, n: int, d: int, j: int) -> list:
    entries = []
    seen = set()
    for tup, m in spectrum:
        tup = np.asarray(tup, dtype=np.complex128).reshape(-1)
        if tup.size != d:
            raise ValueError(f"block {j}: spectrum tuple has arity {tup.size}, expected {d}")
        if int(m) < 1:
            raise ValueError(f"block {j}: multiplicities must be positive")
        key = spectrum_sort_key(tup)
        if key in seen:
            raise ValueError(f"block {j}: repeated spectrum tuple {tup}")
        seen.add(key)
        entries.append((tup, int(m)))
    if sum(m for _, m in entries) != n:
        raise ValueError(f"block {j}: multiplicities sum to {sum(m for _, m in entries)}, expected {n}")
    return entries


def gen_planted(
    d: int,
    sizes: Sequence[int],
    spectra: Sequence | None = None,
    seed: int = 0,
    *,
    identity_conjugator: bool = False,
    cond_bound: float = 10.0,
) -> tuple[HiggsDatum, PlantedTruth]:
    """Polystable datum with known joint spectrum and conjugator.

    Block ``j`` gets ``T^i = S D^i S^{-1}`` where the diagonal matrices ``D^i``
    list the planted eigenvalue tuples with their multiplicities. Unless
    ``spectra`` is given, tuples are drawn from the grid
    ``{-5..5} + i{-5..5}``; separation is at least 1.

    Parameters
    ----------
    spectra : list, optional
        Per block, a list of ``(tuple_of_d_values, multiplicity)`` pairs.
    identity_conjugator : bool
        Use ``S = Id`` (the datum is then diagonal).
    cond_bound : float
        Bound on ``cond(S)``; at most 100.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    sizes = [int(n) for n in sizes]
    if not sizes or any(n < 1 for n in sizes):
        raise ValueError("sizes must be a non-empty list of positive integers")
    if spectra is not None and len(spectra) != len(sizes):
        raise ValueError(f"spectra given for {len(spectra)} blocks, sizes has {len(sizes)}")
    if not 1.0 <= cond_bound <= 100.0:
        raise ValueError("cond_bound must lie in [1, 100]")

    blocks, truth = [], []
    for j, n in enumerate(sizes):
        rng = rng_for(seed, j)
        if spectra is None:
            entries = _random_spectrum(rng, n, d)
        else:
            entries = _check_spectrum(spectra[j], n, d, j)
        diag = np.concatenate([np.tile(tup[:, None], (1, m)) for tup, m in entries], axis=1)
        s = np.eye(n, dtype=np.complex128) if identity_conjugator else random_conjugator(rng, n, cond_bound)
        s_inv = np.linalg.inv(s)
        higgs = tuple((s * diag[i]) @ s_inv for i in range(d))
        blocks.append(BlockSpec(label=f"E{j + 1}", rank=1, multiplicity=n, slope=0.0, higgs=higgs))
        ordered = tuple(sorted(entries, key=lambda e: spectrum_sort_key(e[0])))
        truth.append(PlantedBlock(ordered, s))
    return HiggsDatum(d, tuple(blocks)), PlantedTruth(tuple(truth))


def jordan_block(n: int, value: complex = 0.0) -> np.ndarray:
    return value * np.eye(n, dtype=np.complex128) + np.eye(n, k=1, dtype=np.complex128)


def _grid_value(rng) -> complex:
    return complex(rng.choice(GRID), rng.choice(GRID))


def gen_negative(kind: str, size: int, d: int, seed: int = 0) -> HiggsDatum:
    """Single-block datum violating exactly one polystability condition.

    ``nilpotent``
        ``T^1`` is the nilpotent Jordan block of full size; the other
        components are scalars.
    ``noncommuting``
        ``T^1, T^2`` restrict to ``[[0,1],[1,0]]`` and ``[[1,0],[0,-1]]`` on
        the first two coordinates (commutator norm ``2 sqrt 2``); every
        member stays semisimple. Needs ``d >= 2``.
    ``nonsemisimple_mixed``
        ``{J, p_2(J), ..., p_d(J)}`` for a Jordan block ``J`` and random
        integer polynomials ``p_i``; commuting by construction.
    """
    if kind not in NEGATIVE_KINDS:
        raise ValueError(f"unknown negative kind {kind!r}; expected one of {NEGATIVE_KINDS}")
    if size < 2:
        raise ValueError("size must be >= 2")
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = rng_for(seed, 0)
    eye = np.eye(size, dtype=np.complex128)

    if kind == "nilpotent":
        higgs = [jordan_block(size)] + [_grid_value(rng) * eye for _ in range(d - 1)]
    elif kind == "noncommuting":
        if d < 2:
            raise ValueError("noncommuting fixtures need d >= 2")
        pair = [np.array([[0, 1], [1, 0]], dtype=np.complex128), np.array([[1, 0], [0, -1]], dtype=np.complex128)]
        higgs = []
        for i in range(d):
            t = np.diag([_grid_value(rng) for _ in range(size)]).astype(np.complex128)
            if i < 2:
                t[:2, :2] = pair[i]
            higgs.append(t)
    else:
        j = jordan_block(size, _grid_value(rng))
        higgs = [j]
        for _ in range(d - 1):
            coeffs = rng.integers(-2, 3, size=size)
            p = np.zeros_like(j)
            power = eye.copy()
            for c in coeffs:
                p = p + c * power
                power = power @ j
            higgs.append(p)

    block = BlockSpec(label="E1", rank=1, multiplicity=size, slope=0.0, higgs=tuple(higgs))
    return HiggsDatum(d, (block,))

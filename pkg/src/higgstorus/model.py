"""Higgs data on a complex torus as per-block tuples of multiplicity matrices.

A polystable bundle splits as a sum of stable summands tensored with
multiplicity spaces ``C^{n_j}``. Holomorphic endomorphisms only act on the
multiplicity factors, so a Higgs field in a fixed trivialization of the
cotangent bundle is recorded by ``d`` square matrices per block. Ranks and
slopes of the stable summands are opaque metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import DEFAULT_TOL, Tolerances, as_matrix

SCHEMA = "higgs-torus/1"


class ParseError(ValueError):
    """Input bytes are not a well-formed, valid document."""


@dataclass(frozen=True, eq=False)
class BlockSpec:
    label: str
    rank: int
    multiplicity: int
    slope: float
    higgs: tuple

    def __post_init__(self):
        object.__setattr__(self, "higgs", tuple(np.asarray(t, dtype=np.complex128) for t in self.higgs))

    def __eq__(self, other):
        if not isinstance(other, BlockSpec):
            return NotImplemented
        return (
            self.label == other.label
            and self.rank == other.rank
            and self.multiplicity == other.multiplicity
            and self.slope == other.slope
            and len(self.higgs) == len(other.higgs)
            and all(a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.higgs, other.higgs))
        )

    def with_higgs(self, higgs) -> "BlockSpec":
        return BlockSpec(self.label, self.rank, self.multiplicity, self.slope, tuple(higgs))


@dataclass(frozen=True, eq=False)
class HiggsDatum:
    dim: int
    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    def __eq__(self, other):
        if not isinstance(other, HiggsDatum):
            return NotImplemented
        return self.dim == other.dim and self.blocks == other.blocks

    @property
    def multiplicities(self) -> list[int]:
        return [b.multiplicity for b in self.blocks]

    def scale(self) -> float:
        """``max(1, max |T_0|_F^2)`` over every block and component.

        ``T_0`` is the trace-free part of ``T``; commutators, and hence every
        residual compared against multiples of this number, ignore scalar
        shifts of the Higgs components.
        """
        norms = []
        for b in self.blocks:
            eye = np.eye(b.multiplicity)
            norms.extend(np.linalg.norm(t - np.trace(t) / b.multiplicity * eye) ** 2 for t in b.higgs)
        return float(max([1.0, *norms]))


@dataclass
class Violation:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, path, message):
        self.violations.append(Violation(path, message))

    def messages(self) -> list[str]:
        return [v.message for v in self.violations]


def validate(datum: HiggsDatum, tol: Tolerances = DEFAULT_TOL) -> ValidationReport:
    """Check every structural invariant of ``datum``; never raises."""
    report = ValidationReport()
    if not isinstance(datum.dim, (int, np.integer)) or datum.dim < 1:
        report.add("dim", "dim must be a positive integer")
    if not datum.blocks:
        report.add("blocks", "blocks list is empty")
        return report

    labels = [b.label for b in datum.blocks]
    if len(set(labels)) != len(labels):
        report.add("blocks", "labels not distinct")
    slopes = {b.slope for b in datum.blocks}
    if len(slopes) > 1:
        report.add("blocks", "slopes differ: not a polystable decomposition input")

    for j, block in enumerate(datum.blocks):
        path = f"blocks[{j}]"
        if not isinstance(block.label, str) or not block.label:
            report.add(f"{path}.label", "label must be a non-empty string")
        if block.rank < 1:
            report.add(f"{path}.rank", "rank must be >= 1")
        if block.multiplicity < 1:
            report.add(f"{path}.multiplicity", "multiplicity must be >= 1")
        if not np.isfinite(block.slope):
            report.add(f"{path}.slope", "non-finite slope")
        if len(block.higgs) != datum.dim:
            report.add(f"{path}.higgs", "higgs arity mismatch")
        n = block.multiplicity
        for i, t in enumerate(block.higgs):
            if t.shape != (n, n):
                report.add(f"{path}.higgs[{i}]", f"matrix shape {t.shape} does not match multiplicity {n}")
            elif not np.all(np.isfinite(t)):
                report.add(f"{path}.higgs[{i}]", "non-finite entry")
    return report


# -- JSON encoding ---------------------------------------------------------

def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(obj, path: str = "matrix") -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ParseError(f"{path}: matrix must be a non-empty array of rows")
    rows = []
    width = None
    for r, row in enumerate(obj):
        if not isinstance(row, list) or not row:
            raise ParseError(f"{path}[{r}]: row must be a non-empty array")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"{path}: ragged rows")
        vals = []
        for c, pair in enumerate(row):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
            ):
                raise ParseError(f"{path}[{r}][{c}]: entry must be a [re, im] pair of numbers")
            if not (np.isfinite(pair[0]) and np.isfinite(pair[1])):
                raise ParseError(f"{path}[{r}][{c}]: non-finite entry")
            vals.append(complex(float(pair[0]), float(pair[1])))
        rows.append(vals)
    return np.array(rows, dtype=np.complex128)


def dumps(obj) -> bytes:
    """Canonical JSON bytes: compact separators, trailing newline."""
    return (json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n").encode("utf-8")


def load_json(data: bytes | str, what: str = "document") -> dict:
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed {what}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"{what} must be a JSON object")
    schema = obj.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ParseError(f"unsupported schema {schema!r}")
    return obj


def datum_to_dict(datum: HiggsDatum) -> dict:
    return {
        "schema": SCHEMA,
        "dim": int(datum.dim),
        "blocks": [
            {
                "label": b.label,
                "rank": int(b.rank),
                "slope": float(b.slope),
                "multiplicity": int(b.multiplicity),
                "higgs": [encode_matrix(t) for t in b.higgs],
            }
            for b in datum.blocks
        ],
    }


def serialize(datum: HiggsDatum) -> bytes:
    return dumps(datum_to_dict(datum))


def _int_field(obj, key, path):
    value = obj.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"{path}.{key}: expected an integer")
    return value


def parse(data: bytes | str, tol: Tolerances = DEFAULT_TOL, check: bool = True) -> HiggsDatum:
    """Inverse of :func:`serialize`; raises :class:`ParseError` on any defect.

    With ``check=False`` only syntax is enforced and invariant violations are
    left for :func:`validate` to report.
    """
    obj = load_json(data, "Higgs datum")
    dim = _int_field(obj, "dim", "$")
    blocks_obj = obj.get("blocks")
    if not isinstance(blocks_obj, list):
        raise ParseError("$.blocks: expected an array")
    if not blocks_obj:
        raise ParseError("$.blocks: empty blocks list")
    blocks = []
    for j, b in enumerate(blocks_obj):
        path = f"$.blocks[{j}]"
        if not isinstance(b, dict):
            raise ParseError(f"{path}: expected an object")
        label = b.get("label")
        if not isinstance(label, str):
            raise ParseError(f"{path}.label: expected a string")
        slope = b.get("slope", 0.0)
        if not isinstance(slope, (int, float)) or isinstance(slope, bool):
            raise ParseError(f"{path}.slope: expected a number")
        higgs = b.get("higgs")
        if not isinstance(higgs, list):
            raise ParseError(f"{path}.higgs: expected an array")
        mats = [decode_matrix(m, f"{path}.higgs[{i}]") for i, m in enumerate(higgs)]
        blocks.append(
            BlockSpec(
                label=label,
                rank=_int_field(b, "rank", path),
                multiplicity=_int_field(b, "multiplicity", path),
                slope=float(slope),
                higgs=tuple(mats),
            )
        )
    datum = HiggsDatum(dim=dim, blocks=tuple(blocks))
    if not check:
        return datum
    report = validate(datum, tol)
    if not report.ok:
        raise ParseError("; ".join(str(v) for v in report.violations))
    return datum


# -- transformations -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChangeOfTrivialization:
    """Invertible ``d x d`` change of frame of the cotangent bundle."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_matrix(self.matrix))

    def check(self, d: int, tol: Tolerances = DEFAULT_TOL):
        if self.matrix.shape != (d, d):
            raise ValueError(f"trivialization change must be {d}x{d}, got {self.matrix.shape}")
        if abs(np.linalg.det(self.matrix)) <= tol.tau_rank:
            raise ValueError("trivialization change is singular")

    def inverse(self) -> "ChangeOfTrivialization":
        return ChangeOfTrivialization(np.linalg.inv(self.matrix))


@dataclass(frozen=True, eq=False)
class GaugeTransform:
    """Block-diagonal automorphism, one invertible matrix per block."""

    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(as_matrix(g) for g in self.blocks))

    def check(self, sizes: Sequence[int], tol: Tolerances = DEFAULT_TOL):
        if len(self.blocks) != len(sizes):
            raise ValueError(f"gauge has {len(self.blocks)} blocks, datum has {len(sizes)}")
        for j, (g, n) in enumerate(zip(self.blocks, sizes)):
            if g.shape != (n, n):
                raise ValueError(f"gauge block {j} has shape {g.shape}, expected ({n}, {n})")
            s = np.linalg.svd(g, compute_uv=False)
            if s[-1] <= tol.tau_rank * max(1.0, s[0]):
                raise ValueError(f"gauge block {j} is singular")

    def __matmul__(self, other: "GaugeTransform") -> "GaugeTransform":
        return GaugeTransform(tuple(a @ b for a, b in zip(self.blocks, other.blocks)))


def apply_trivialization_change(
    datum: HiggsDatum, change: ChangeOfTrivialization, tol: Tolerances = DEFAULT_TOL
) -> HiggsDatum:
    """Recombine components: ``T'^i = sum_k A[i, k] T^k`` in every block."""
    change.check(datum.dim, tol)
    a = change.matrix
    blocks = []
    for b in datum.blocks:
        stack = np.stack(b.higgs)
        new = np.einsum("ik,kab->iab", a, stack)
        blocks.append(b.with_higgs(list(new)))
    return HiggsDatum(datum.dim, tuple(blocks))


def conjugate_datum(datum: HiggsDatum, gauge: GaugeTransform, tol: Tolerances = DEFAULT_TOL) -> HiggsDatum:
    """Replace every ``T^i_j`` by ``g_j^{-1} T^i_j g_j``."""
    gauge.check(datum.multiplicities, tol)
    blocks = []
    for b, g in zip(datum.blocks, gauge.blocks):
        blocks.append(b.with_higgs([np.linalg.solve(g, t @ g) for t in b.higgs]))
    return HiggsDatum(datum.dim, tuple(blocks))


def gauge_to_dict(gauge: GaugeTransform) -> dict:
    return {"schema": SCHEMA, "blocks": [encode_matrix(g) for g in gauge.blocks]}


def parse_gauge(data) -> GaugeTransform:
    obj = load_json(data, "gauge file")
    blocks = obj.get("blocks")
    if not isinstance(blocks, list) or not blocks:
        raise ParseError("$.blocks: expected a non-empty array")
    return GaugeTransform(tuple(decode_matrix(m, f"$.blocks[{j}]") for j, m in enumerate(blocks)))


def trivialization_to_dict(change: ChangeOfTrivialization) -> dict:
    return {"schema": SCHEMA, "matrix": encode_matrix(change.matrix)}


def parse_trivialization(data) -> ChangeOfTrivialization:
    obj = load_json(data, "trivialization file")
    if "matrix" not in obj:
        raise ParseError("$.matrix: missing")
    return ChangeOfTrivialization(decode_matrix(obj["matrix"], "$.matrix"))

"""Delsarte-Goethals matrix sets and the frames built from them.

Frame entries are kept as Z4 exponents; an entry at row ``t`` of column
``(P, b)`` equals ``normalization * 1j ** exponent``.  Columns are ordered
lexicographically in ``(c_0, ..., c_r, b)``, so column 0 is the all-ones
column ``(P=0, b=0)``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .field import FieldElement, basis, check_degree, modulus_coefficients
from .gf2 import BitMatrix, BitVector, bit_table, popcount

FRAME_FORMAT = "dg-frame/1"
COLUMN_ORDERING = "lex(c_0..c_r,b); column 0 is (P=0, b=0)"
DEFAULT_COLUMN_LIMIT = 1 << 16

_POWERS_OF_I = np.array([1, 1j, -1, -1j], dtype=np.complex128)


class MaterializationError(RuntimeError):
    """Raised when a dense frame would exceed the configured column limit."""


class FrameFormatError(ValueError):
    pass


def check_parameters(m: int, r: int):
    check_degree(m)
    if m % 2 == 0:
        raise ValueError(f"m must be odd, got {m}")
    if not 0 <= r <= (m - 1) // 2:
        raise ValueError(f"r must satisfy 0 <= r <= {(m - 1) // 2}, got {r}")


def bilinear_form(c: tuple[FieldElement, ...], x: FieldElement,
                  y: FieldElement) -> int:
    """``tr(c_0 x y + sum_j c_j (x y^(2^j) + x^(2^j) y))``."""
    acc = c[0] * x * y
    for j, cj in enumerate(c[1:], start=1):
        acc = acc + cj * (x * y.frobenius(j) + x.frobenius(j) * y)
    return acc.trace()


def form_matrix(c: tuple[FieldElement, ...]) -> BitMatrix:
    """Matrix of the bilinear form on the polynomial basis, entry by entry."""
    m = c[0].m
    beta = basis(m)
    rows = []
    for u in range(m):
        row = 0
        for v in range(m):
            row |= bilinear_form(c, beta[u], beta[v]) << v
        rows.append(row)
    return BitMatrix(tuple(rows), symmetric=True)


@dataclass(frozen=True)
class DGSet:
    """The family DG(m, r), indexed by packed coefficient tuples.

    Index ``p`` packs ``(c_0, ..., c_r)`` with ``c_0`` most significant, each
    coefficient taking ``m`` bits.  The map ``p -> P_p`` is GF(2)-linear, so
    ``P_p xor P_q == P_(p xor q)``.
    """

    m: int
    r: int
    rows: np.ndarray   # (2**((r+1)m), m) packed rows, uint64
    diagonals: np.ndarray  # (2**((r+1)m),) packed diagonals

    def __len__(self):
        return self.rows.shape[0]

    def matrix(self, p: int) -> BitMatrix:
        return BitMatrix(tuple(int(x) for x in self.rows[p]), symmetric=True)

    def coefficients(self, p: int) -> tuple[FieldElement, ...]:
        m, r = self.m, self.r
        mask = (1 << m) - 1
        return tuple(FieldElement((p >> ((r - j) * m)) & mask, m)
                     for j in range(r + 1))

    def index_of(self, c: tuple[FieldElement, ...]) -> int:
        if len(c) != self.r + 1 or any(x.m != self.m for x in c):
            raise ValueError("coefficient tuple does not match this set")
        p = 0
        for x in c:
            p = (p << self.m) | x.value
        return p


def build_dg_set(m: int, r: int) -> DGSet:
    check_parameters(m, r)
    nbits = (r + 1) * m
    generators = []
    for k in range(nbits):
        j, s = r - k // m, k % m
        c = tuple(FieldElement((1 << s) if i == j else 0, m)
                  for i in range(r + 1))
        generators.append(form_matrix(c).rows)
    generators = np.array(generators, dtype=np.uint64)

    idx = np.arange(1 << nbits, dtype=np.int64)
    rows = np.zeros((1 << nbits, m), dtype=np.uint64)
    for k in range(nbits):
        hit = ((idx >> k) & 1).astype(bool)
        rows[hit] ^= generators[k]
    shifts = np.arange(m, dtype=np.uint64)
    diag_bits = (rows >> shifts) & np.uint64(1)
    diagonals = (diag_bits << shifts).sum(axis=1).astype(np.uint64)
    return DGSet(m, r, rows, diagonals)


@dataclass(frozen=True, order=True)
class ColumnIndex:
    """Column label: packed DG-set index ``p`` and offset vector ``b``."""

    p: int
    b: int


class Frame:
    """The Delsarte-Goethals frame G(m, r).

    Parameters
    ----------
    m, r : int
        Frame parameters; ``m`` odd with a stored field modulus.
    column_limit : int
        Largest column count that may be materialized densely.
    exponents : ndarray, optional
        Explicit Z4 exponent matrix (e.g. read from a file).  When given it
        replaces the computed entries, so a tampered body is visible to the
        design-rule checks.
    """

    def __init__(self, m: int, r: int, column_limit: int = DEFAULT_COLUMN_LIMIT,
                 exponents: np.ndarray | None = None):
        check_parameters(m, r)
        self.m = m
        self.r = r
        self.column_limit = column_limit
        self.num_rows = 1 << m
        self.num_cols = 1 << ((r + 2) * m)
        self.normalization = 2.0 ** (-m / 2)
        self.normalization_sq = 2.0 ** -m
        self._exponents = None
        self.is_explicit = exponents is not None
        if exponents is not None:
            exponents = np.asarray(exponents, dtype=np.uint8)
            if exponents.shape != (self.num_rows, self.num_cols):
                raise ValueError(
                    f"exponent matrix has shape {exponents.shape}, expected "
                    f"{(self.num_rows, self.num_cols)}")
            if (exponents > 3).any():
                raise ValueError("exponents must lie in {0, 1, 2, 3}")
            self._exponents = exponents
            self._exponents.setflags(write=False)

    def __repr__(self):
        return f"Frame(m={self.m}, r={self.r})"

    @cached_property
    def dg_set(self) -> DGSet:
        return build_dg_set(self.m, self.r)

    @property
    def shape(self) -> tuple[int, int]:
        return self.num_rows, self.num_cols

    @property
    def redundancy(self) -> float:
        return self.num_cols / self.num_rows

    @property
    def is_materialized(self) -> bool:
        return self._exponents is not None

    # -- indexing -------------------------------------------------------

    def column_number(self, col: ColumnIndex) -> int:
        self._check_index(col)
        return (col.p << self.m) | col.b

    def column_index(self, j: int) -> ColumnIndex:
        if not 0 <= j < self.num_cols:
            raise IndexError(f"column {j} outside 0..{self.num_cols - 1}")
        return ColumnIndex(j >> self.m, j & ((1 << self.m) - 1))

    def _check_index(self, col: ColumnIndex):
        if not (0 <= col.p < (1 << ((self.r + 1) * self.m))
                and 0 <= col.b < (1 << self.m)):
            raise IndexError(f"{col} is not a column of {self!r}")

    # -- entries ----------------------------------------------------------

    @cached_property
    def _quad_forms(self) -> np.ndarray:
        """``t P t^T mod 4`` for every P (rows) and every t (columns)."""
        rows = self.dg_set.rows
        t = np.arange(self.num_rows, dtype=np.uint64)
        tbits = bit_table(self.m)
        hits = popcount(rows[:, None, :] & t[None, :, None])
        return ((hits * tbits[None, :, :]).sum(axis=2) % 4).astype(np.int64)

    def _column_exponents_computed(self, p: int, b: int) -> np.ndarray:
        t = np.arange(self.num_rows, dtype=np.uint64)
        d = int(self.dg_set.diagonals[p])
        base = d.bit_count() + 2 * b.bit_count()
        e = base + self._quad_forms[p] + 2 * popcount(np.uint64(b) & t)
        return (e % 4).astype(np.uint8)

    def column_exponents(self, col: ColumnIndex | int) -> np.ndarray:
        if not isinstance(col, ColumnIndex):
            col = self.column_index(int(col))
        self._check_index(col)
        if self._exponents is not None:
            return self._exponents[:, (col.p << self.m) | col.b].copy()
        return self._column_exponents_computed(col.p, col.b)

    def entry_exponent(self, col: ColumnIndex, t: BitVector | int) -> int:
        """Z4 exponent of one entry, evaluated without building the frame."""
        self._check_index(col)
        if isinstance(t, BitVector):
            if t.length != self.m:
                raise ValueError(f"row label has length {t.length}, "
                                 f"expected {self.m}")
            t = t.value
        if not 0 <= t < self.num_rows:
            raise IndexError(f"row {t} outside 0..{self.num_rows - 1}")
        if self._exponents is not None:
            return int(self._exponents[t, (col.p << self.m) | col.b])
        P = self.dg_set.matrix(col.p)
        q = 0
        for u in range(self.m):
            if (t >> u) & 1:
                q += (P.rows[u] & t).bit_count()
        e = (P.diagonal.value.bit_count() + 2 * col.b.bit_count() + q
             + 2 * (col.b & t).bit_count())
        return e % 4

    def entry(self, col: ColumnIndex, t: BitVector | int) -> complex:
        return complex(self.normalization
                       * _POWERS_OF_I[self.entry_exponent(col, t)])

    def exponents(self) -> np.ndarray:
        """Dense (num_rows, num_cols) Z4 exponent matrix."""
        if self._exponents is None:
            if self.num_cols > self.column_limit:
                raise MaterializationError(
                    f"G({self.m},{self.r}) has {self.num_cols} columns, above "
                    f"the limit of {self.column_limit}")
            npb = 1 << ((self.r + 1) * self.m)
            nb = self.num_rows
            t = np.arange(nb, dtype=np.uint64)
            b = np.arange(nb, dtype=np.uint64)
            wd = popcount(self.dg_set.diagonals)                  # (npb,)
            wb = popcount(b)                                       # (nb,)
            bt = popcount(b[:, None] & t[None, :])                 # (nb, nt)
            e = (wd[:, None, None] + 2 * wb[None, :, None]
                 + self._quad_forms[:, None, :] + 2 * bt[None, :, :]) % 4
            exps = np.ascontiguousarray(
                e.transpose(2, 0, 1).reshape(nb, npb * nb).astype(np.uint8))
            exps.setflags(write=False)
            self._exponents = exps
        return self._exponents

    def matrix(self) -> np.ndarray:
        """Dense complex frame, normalized to unit-norm columns."""
        return self.normalization * _POWERS_OF_I[self.exponents()]

    def columns(self, js) -> np.ndarray:
        """Complex columns ``js`` as a (num_rows, len(js)) array."""
        js = np.asarray(js, dtype=np.int64)
        if self._exponents is not None:
            e = self._exponents[:, js]
        else:
            e = np.stack([self.column_exponents(int(j)) for j in js], axis=1) \
                if js.size else np.zeros((self.num_rows, 0), dtype=np.uint8)
        return self.normalization * _POWERS_OF_I[e]

    # -- group law --------------------------------------------------------

    def group_product(self, a: ColumnIndex, b: ColumnIndex) -> ColumnIndex:
        return column_group_product(self, a, b)


def column_group_product(frame: Frame, a: ColumnIndex,
                         b: ColumnIndex) -> ColumnIndex:
    """Index of the pointwise product of two unnormalized columns."""
    frame._check_index(a)
    frame._check_index(b)
    diag = frame.dg_set.diagonals
    carry = int(diag[a.p]) & int(diag[b.p])
    return ColumnIndex(a.p ^ b.p, a.b ^ b.b ^ carry)


def frame_entry(frame: Frame, col: ColumnIndex, t: BitVector | int) -> complex:
    return frame.entry(col, t)


def synthesize_frame(m: int, r: int, materialize: bool = True,
                     column_limit: int = DEFAULT_COLUMN_LIMIT) -> Frame:
    frame = Frame(m, r, column_limit=column_limit)
    if materialize:
        frame.exponents()
    return frame


# -- file formats ---------------------------------------------------------

def frame_header(frame: Frame) -> dict:
    return {
        "format": FRAME_FORMAT,
        "m": frame.m,
        "r": frame.r,
        "num_rows": frame.num_rows,
        "num_cols": frame.num_cols,
        "normalization": frame.normalization,
        "modulus": modulus_coefficients(frame.m),
        "column_ordering": COLUMN_ORDERING,
    }


def frame_to_dict(frame: Frame, include_body: bool = True) -> dict:
    doc = {"header": frame_header(frame)}
    if include_body:
        exps = frame.exponents()
        doc["exponents"] = ["".join("0123"[e] for e in row) for row in exps]
    return doc


def save_frame(frame: Frame, path, include_body: bool = True):
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(frame_to_dict(frame, include_body), fh, indent=1)
        fh.write("\n")


def frame_from_dict(doc: dict, column_limit: int = DEFAULT_COLUMN_LIMIT) -> Frame:
    from .schemas import validate

    validate(doc, "frame")
    header = doc["header"]
    m, r = header["m"], header["r"]
    try:
        check_parameters(m, r)
    except ValueError as exc:
        raise FrameFormatError(str(exc)) from exc
    if header["modulus"] != modulus_coefficients(m):
        raise FrameFormatError("modulus does not match the stored field")
    expected = (1 << m, 1 << ((r + 2) * m))
    if (header["num_rows"], header["num_cols"]) != expected:
        raise FrameFormatError(
            f"header dimensions {header['num_rows']}x{header['num_cols']} "
            f"do not match G({m},{r})")
    body = doc.get("exponents")
    if body is None:
        return Frame(m, r, column_limit=column_limit)
    if len(body) != expected[0] or any(len(row) != expected[1] for row in body):
        raise FrameFormatError("exponent body has the wrong shape")
    exps = np.array([np.frombuffer(row.encode("ascii"), dtype=np.uint8) - 48
                     for row in body], dtype=np.uint8)
    return Frame(m, r, column_limit=column_limit, exponents=exps)


def load_frame(path, column_limit: int = DEFAULT_COLUMN_LIMIT) -> Frame:
    try:
        with Path(path).open(encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FrameFormatError(f"{path}: not valid JSON ({exc})") from exc
    return frame_from_dict(doc, column_limit)


def write_frame_csv(frame: Frame, path):
    """One line per entry: row, column, real part, imaginary part."""
    G = frame.matrix()
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "real", "imag"])
        for t in range(G.shape[0]):
            for j in range(G.shape[1]):
                z = G[t, j]
                writer.writerow([t, j, repr(float(z.real)), repr(float(z.imag))])

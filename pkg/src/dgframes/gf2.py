"""Exact GF(2) vectors and matrices packed into Python integers.

Bit ``u`` of a packed vector holds coordinate ``u``.  A matrix is stored as a
tuple of packed rows, so row ``u`` bit ``v`` is entry ``(u, v)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class BitVector:
    """Fixed-length binary tuple."""

    value: int
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be positive")
        if self.value < 0 or self.value >> self.length:
            raise ValueError(
                f"value {self.value} does not fit in {self.length} bits")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        bits = list(bits)
        value = 0
        for u, bit in enumerate(bits):
            if bit not in (0, 1):
                raise ValueError(f"bit {u} is {bit!r}, expected 0 or 1")
            value |= bit << u
        return cls(value, len(bits))

    @classmethod
    def from_string(cls, s: str) -> "BitVector":
        """Parse ``"1011"`` with the leftmost character as coordinate 0."""
        return cls.from_bits(int(ch) for ch in s)

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(0, length)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> u) & 1 for u in range(self.length))

    def __len__(self):
        return self.length

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, u: int) -> int:
        if not 0 <= u < self.length:
            raise IndexError(u)
        return (self.value >> u) & 1

    def __xor__(self, other: "BitVector") -> "BitVector":
        return xor(self, other)

    def __and__(self, other: "BitVector") -> "BitVector":
        return pointwise_and(self, other)

    def __str__(self):
        return "".join(str(b) for b in self.bits)


def _check_lengths(a: BitVector, b: BitVector):
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} != {b.length}")


def hamming_weight(v: BitVector | int) -> int:
    if isinstance(v, BitVector):
        v = v.value
    return int(v).bit_count()


def xor(a: BitVector, b: BitVector) -> BitVector:
    _check_lengths(a, b)
    return BitVector(a.value ^ b.value, a.length)


def pointwise_and(a: BitVector, b: BitVector) -> BitVector:
    _check_lengths(a, b)
    return BitVector(a.value & b.value, a.length)


def dot_f2(a: int, b: int) -> int:
    """Inner product over GF(2) of two packed vectors."""
    return (a & b).bit_count() & 1


@dataclass(frozen=True)
class BitMatrix:
    """Square binary matrix with packed rows."""

    rows: tuple[int, ...]
    symmetric: bool = False

    def __post_init__(self):
        m = len(self.rows)
        if m < 1:
            raise ValueError("matrix must have at least one row")
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        for u, row in enumerate(self.rows):
            if row < 0 or row >> m:
                raise ValueError(f"row {u} has bits outside {m} columns")
        if self.symmetric and not self.is_symmetric():
            raise ValueError("matrix flagged symmetric but is not")

    @property
    def size(self) -> int:
        return len(self.rows)

    @classmethod
    def from_array(cls, array, symmetric: bool = False) -> "BitMatrix":
        a = np.asarray(array)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("entries must be 0 or 1")
        weights = 1 << np.arange(a.shape[1], dtype=object)
        rows = tuple(int(np.dot(row.astype(object), weights)) for row in a)
        return cls(rows, symmetric)

    @classmethod
    def zeros(cls, m: int) -> "BitMatrix":
        return cls((0,) * m, True)

    @classmethod
    def identity(cls, m: int) -> "BitMatrix":
        return cls(tuple(1 << u for u in range(m)), True)

    def to_array(self) -> np.ndarray:
        m = self.size
        return np.array([[(row >> v) & 1 for v in range(m)]
                         for row in self.rows], dtype=np.int64)

    def entry(self, u: int, v: int) -> int:
        return (self.rows[u] >> v) & 1

    def is_symmetric(self) -> bool:
        m = self.size
        return all(self.entry(u, v) == self.entry(v, u)
                   for u in range(m) for v in range(u + 1, m))

    @property
    def diagonal(self) -> BitVector:
        return BitVector(sum(self.entry(u, u) << u for u in range(self.size)),
                         self.size)

    def __xor__(self, other: "BitMatrix") -> "BitMatrix":
        _check_sizes(self, other)
        return BitMatrix(tuple(a ^ b for a, b in zip(self.rows, other.rows)),
                         self.symmetric and other.symmetric)

    def __and__(self, other: "BitMatrix") -> "BitMatrix":
        _check_sizes(self, other)
        return BitMatrix(tuple(a & b for a, b in zip(self.rows, other.rows)),
                         self.symmetric and other.symmetric)


def _check_sizes(a: BitMatrix, b: BitMatrix):
    if a.size != b.size:
        raise ValueError(f"dimension mismatch: {a.size} != {b.size}")


def rank_f2(M: BitMatrix | Sequence[int]) -> int:
    """Rank over GF(2) by elimination on packed rows."""
    rows = list(M.rows if isinstance(M, BitMatrix) else M)
    rank = 0
    while rows:
        pivot = rows.pop()
        if pivot == 0:
            continue
        rank += 1
        low = pivot & -pivot
        rows = [r ^ pivot if r & low else r for r in rows]
    return rank


def rank_f2_batch(rows: np.ndarray) -> np.ndarray:
    """Ranks of a stack of packed matrices.

    Parameters
    ----------
    rows : ndarray of shape (batch, m), unsigned integer
        Packed rows of each matrix; requires m <= 63.

    Returns
    -------
    ndarray of shape (batch,)
    """
    work = np.array(rows, dtype=np.uint64, copy=True)
    if work.ndim != 2:
        raise ValueError("expected a (batch, m) array of packed rows")
    batch, m = work.shape
    rank = np.zeros(batch, dtype=np.int64)
    active = np.ones((batch, m), dtype=bool)
    for col in range(m):
        bit = np.uint64(1 << col)
        has = ((work & bit) != 0) & active
        found = has.any(axis=1)
        piv = np.argmax(has, axis=1)
        idx = np.nonzero(found)[0]
        if idx.size == 0:
            continue
        prow = work[idx, piv[idx]]
        active[idx, piv[idx]] = False
        rank[idx] += 1
        sub = work[idx]
        hit = ((sub & bit) != 0) & active[idx]
        sub ^= np.where(hit, prow[:, None], np.uint64(0))
        work[idx] = sub
    return rank


def quad_form_mod4(P: BitMatrix, t: BitVector) -> int:
    """Evaluate ``t P t^T`` over the integers, reduced mod 4."""
    if P.size != t.length:
        raise ValueError(f"dimension mismatch: {P.size} != {t.length}")
    total = 0
    for u in range(P.size):
        if (t.value >> u) & 1:
            total += (P.rows[u] & t.value).bit_count()
    return total % 4


def carry_matrix(P: BitMatrix, P2: BitMatrix) -> BitMatrix:
    """Carry term ``Q`` with ``P + P2 = (P xor P2) + 2 Q`` over the integers."""
    _check_sizes(P, P2)
    if not (P.is_symmetric() and P2.is_symmetric()):
        raise ValueError("carry_matrix expects symmetric inputs")
    return BitMatrix(tuple(a & b for a, b in zip(P.rows, P2.rows)), True)


def bit_table(m: int) -> np.ndarray:
    """Row ``t`` holds the bits of the integer ``t``; shape (2**m, m)."""
    t = np.arange(1 << m, dtype=np.int64)
    return ((t[:, None] >> np.arange(m)) & 1).astype(np.int64)


def popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)

"""Arithmetic in GF(2^m) with a polynomial basis, for the shipped m only."""

from __future__ import annotations

from dataclasses import dataclass

# Primitive moduli as bit masks (bit i = coefficient of x^i).
MODULI = {
    3: 0b1011,        # x^3 + x + 1
    5: 0b100101,      # x^5 + x^2 + 1
    7: 0b10000011,    # x^7 + x + 1
}


class UnsupportedFieldError(ValueError):
    pass


def check_degree(m: int) -> int:
    if m not in MODULI:
        raise UnsupportedFieldError(
            f"no stored modulus for m={m}; supported: {sorted(MODULI)}")
    return MODULI[m]


def modulus_coefficients(m: int) -> list[int]:
    """Coefficients of the modulus, constant term first."""
    poly = check_degree(m)
    return [(poly >> i) & 1 for i in range(m + 1)]


def gf_mul(a: int, b: int, m: int) -> int:
    poly = check_degree(m)
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a >> m:
            a ^= poly
    return result


def gf_pow(a: int, e: int, m: int) -> int:
    result = 1
    while e:
        if e & 1:
            result = gf_mul(result, a, m)
        a = gf_mul(a, a, m)
        e >>= 1
    return result


def gf_trace(a: int, m: int) -> int:
    """Absolute trace: the sum of the Frobenius conjugates of ``a``."""
    acc = 0
    x = a
    for _ in range(m):
        acc ^= x
        x = gf_mul(x, x, m)
    if acc not in (0, 1):
        raise ArithmeticError(f"trace of {a} left the prime field: {acc}")
    return acc


@dataclass(frozen=True)
class FieldElement:
    """Element of GF(2^m); ``value`` packs the polynomial-basis coordinates."""

    value: int
    m: int

    def __post_init__(self):
        check_degree(self.m)
        if not 0 <= self.value < (1 << self.m):
            raise ValueError(f"{self.value} is not an element of GF(2^{self.m})")

    @classmethod
    def zero(cls, m: int) -> "FieldElement":
        return cls(0, m)

    @classmethod
    def one(cls, m: int) -> "FieldElement":
        return cls(1, m)

    def _same_field(self, other: "FieldElement"):
        if not isinstance(other, FieldElement) or other.m != self.m:
            raise TypeError("operands belong to different fields")

    def __add__(self, other: "FieldElement") -> "FieldElement":
        self._same_field(other)
        return FieldElement(self.value ^ other.value, self.m)

    __sub__ = __add__

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        self._same_field(other)
        return FieldElement(gf_mul(self.value, other.value, self.m), self.m)

    def __pow__(self, e: int) -> "FieldElement":
        if e < 0:
            return self.inverse() ** (-e)
        return FieldElement(gf_pow(self.value, e, self.m), self.m)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse")
        return FieldElement(gf_pow(self.value, (1 << self.m) - 2, self.m),
                            self.m)

    def __truediv__(self, other: "FieldElement") -> "FieldElement":
        return self * other.inverse()

    def frobenius(self, j: int = 1) -> "FieldElement":
        """``self ** (2**j)``."""
        x = self.value
        for _ in range(j % self.m):
            x = gf_mul(x, x, self.m)
        return FieldElement(x, self.m)

    def trace(self) -> int:
        return gf_trace(self.value, self.m)

    def __bool__(self):
        return self.value != 0


def trace(x: FieldElement) -> int:
    return x.trace()


def basis(m: int) -> list[FieldElement]:
    """Polynomial basis 1, x, ..., x^(m-1)."""
    check_degree(m)
    return [FieldElement(1 << u, m) for u in range(m)]

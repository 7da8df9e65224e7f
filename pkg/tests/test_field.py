import pytest

from dgframes.field import (MODULI, FieldElement, UnsupportedFieldError,
                            basis, gf_mul, gf_trace, modulus_coefficients)


@pytest.mark.parametrize("m", sorted(MODULI))
def test_multiplicative_group_is_cyclic_of_full_order(m):
    x = FieldElement(2, m)
    seen = {(x ** e).value for e in range((1 << m) - 1)}
    assert len(seen) == (1 << m) - 1
    assert (x ** ((1 << m) - 1)).value == 1


@pytest.mark.parametrize("m", [3, 5])
def test_field_axioms_exhaustive(m):
    n = 1 << m
    for a in range(n):
        for b in range(n):
            assert gf_mul(a, b, m) == gf_mul(b, a, m)
        if a:
            x = FieldElement(a, m)
            assert (x * x.inverse()).value == 1
    for a, b, c in [(3, 5, 6), (1, 7, 2), (n - 1, n - 2, 5)]:
        a, b, c = (FieldElement(v % n, m) for v in (a, b, c))
        assert (a * (b + c)) == (a * b + a * c)
        assert (a * b) * c == a * (b * c)


def test_trace_is_balanced_and_linear():
    m = 3
    traces = [gf_trace(a, m) for a in range(8)]
    assert traces.count(1) == 4
    for a in range(8):
        for b in range(8):
            assert gf_trace(a ^ b, m) == traces[a] ^ traces[b]


@pytest.mark.parametrize("m", sorted(MODULI))
def test_frobenius_fixes_trace(m):
    for a in range(0, 1 << m, 7):
        x = FieldElement(a, m)
        assert x.frobenius(1).trace() == x.trace()
        assert x.frobenius(m) == x


def test_unsupported_degree():
    with pytest.raises(UnsupportedFieldError):
        FieldElement(1, 9)
    with pytest.raises(UnsupportedFieldError):
        modulus_coefficients(4)


def test_modulus_and_basis():
    assert modulus_coefficients(3) == [1, 1, 0, 1]
    assert [b.value for b in basis(5)] == [1, 2, 4, 8, 16]
    with pytest.raises(ZeroDivisionError):
        FieldElement(0, 3).inverse()
    with pytest.raises(TypeError):
        FieldElement(1, 3) * FieldElement(1, 5)

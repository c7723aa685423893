from fractions import Fraction

import pytest
import sympy

from algdyn.errors import FamilyMismatch, ParseError
from algdyn.group_ring import RingElement, adjoint, convolve, l1_norm, quotient_convolve
from algdyn.groups import GroupSpec, QuotientParams, build_quotient
from algdyn.quotient_operator import convolution_matrix
from algdyn.torus import TorusPoint

Z = GroupSpec.free_abelian(1)
F2 = GroupSpec.free(2)


def ring(group, *terms):
    return RingElement.from_terms(group, terms)


def test_identity_is_neutral():
    g = ring(F2, ("a b", 2), ("b^-1", Fraction(-1, 3)))
    one = RingElement.one(F2)
    assert convolve(g, one) == g
    assert convolve(one, g) == g


def test_convolution_examples():
    f = ring(Z, ("a", 1), ("e", -2))
    assert convolve(f, adjoint(f))[Z.identity()] == 5
    assert convolve(ring(F2, ("a", 1)), ring(F2, ("b", 1))) == ring(F2, ("a b", 1))


def test_convolution_matches_double_sum():
    g = ring(F2, ("a", 2), ("b a", -1), ("e", 3))
    h = ring(F2, ("a^-1", 1), ("b", Fraction(1, 2)))
    expected: dict = {}
    for x, a in g.coeffs.items():
        for y, b in h.coeffs.items():
            expected[x * y] = expected.get(x * y, 0) + a * b
    assert convolve(g, h) == RingElement(F2, expected)


def test_adjoint_examples():
    f = ring(F2, ("e", 3), ("a", -1))
    assert adjoint(f) == ring(F2, ("e", 3), ("a^-1", -1))
    assert adjoint(adjoint(f)) == f
    a, b = ring(F2, ("a", 1)), ring(F2, ("b", 1))
    assert adjoint(convolve(a, b)) == convolve(adjoint(b), adjoint(a)) == ring(F2, ("b^-1 a^-1", 1))


def test_l1_norm_examples():
    assert l1_norm(RingElement.one(Z)) == 1
    assert l1_norm(ring(Z, ("a", 1), ("e", -2))) == 3
    assert l1_norm(ring(F2, ("e", 5), ("a", -1), ("b", -1))) == 7


def test_zero_coefficients_are_not_stored():
    f = ring(Z, ("a", 1), ("a", -1), ("e", 2))
    assert f.support() == [Z.identity()]


def test_entries_roundtrip():
    f = ring(F2, ("a^2 b^-1", Fraction(3, 7)), ("e", -1))
    assert RingElement.from_entries(F2, f.to_entries()) == f
    with pytest.raises(ParseError):
        RingElement.from_entries(F2, [["a", 1, 0]])


def test_family_mismatch():
    with pytest.raises(FamilyMismatch):
        convolve(RingElement.one(Z), RingElement.one(F2))


def test_quotient_convolve_examples():
    q = build_quotient(Z, QuotientParams(moduli=(4,)))
    psi = [Fraction(1), 0, 0, 0]
    assert quotient_convolve(psi, RingElement.one(Z), q) == psi
    # (psi . 1_a)(C) = psi(C - 1): the indicator moves from coset 0 to coset 1
    assert quotient_convolve(psi, ring(Z, ("a", 1)), q) == [0, 1, 0, 0]


def test_quotient_convolve_by_exact_inverse_is_identity():
    q = build_quotient(Z, QuotientParams(moduli=(5,)))
    f = ring(Z, ("e", 3), ("a", -1), ("a^2", 1))
    A = sympy.Matrix(convolution_matrix(adjoint(f), q).dense)
    Ainv = A.inv()
    psi = [Fraction(k, 7) for k in (1, -2, 0, 5, 3)]
    out = quotient_convolve(psi, f, q)
    back = [sum(Fraction(str(out[i])) * Fraction(str(Ainv[i, j])) for i in range(5)) for j in range(5)]
    assert back == psi


def test_quotient_convolve_equals_matrix_action():
    q = build_quotient(F2, QuotientParams(generators=((1, 0, 2), (1, 2, 0))))
    g = ring(F2, ("a", 2), ("b^-1", -1), ("e", 1))
    A = convolution_matrix(adjoint(g), q)  # matrix of psi -> psi . g
    for C in range(q.index):
        basis = [0] * q.index
        basis[C] = 1
        assert quotient_convolve(basis, g, q) == A.dense[C]


def test_torus_convolution_requires_integer_coefficients():
    q = build_quotient(Z, QuotientParams(moduli=(3,)))
    x = TorusPoint((1, 2, 0), 3)
    assert quotient_convolve(x, ring(Z, ("e", 3)), q) == TorusPoint.zero(3)
    with pytest.raises(ValueError):
        quotient_convolve(x, ring(Z, ("e", Fraction(1, 2))), q)

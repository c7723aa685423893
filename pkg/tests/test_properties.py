from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algdyn.dynamics import QuotientDynamics, window_distribution_of
from algdyn.entropy_mc import l1_distance
from algdyn.group_ring import RingElement, adjoint, convolve, quotient_convolve
from algdyn.groups import GroupSpec, QuotientParams, build_quotient, random_element
from algdyn.quotient_operator import FixedPointGroup, convolution_matrix
from algdyn.torus import TorusPoint

Z2 = GroupSpec.free_abelian(2)
F2 = GroupSpec.free(2)
H = GroupSpec.heisenberg()
FAMILIES = {"Z2": Z2, "F2": F2, "H": H}
QUOTIENTS = {
    "Z2": QuotientParams(moduli=(3, 4)),
    "F2": QuotientParams(generators=((1, 0, 2, 3), (1, 2, 3, 0))),
    "H": QuotientParams(modulus=2),
}


def elements(spec):
    small = st.integers(-3, 3)
    if spec.family == "free":
        return st.lists(st.sampled_from([1, -1, 2, -2]), max_size=5).map(spec.element)
    if spec.family == "heisenberg":
        return st.tuples(small, small, small).map(spec.element)
    return st.tuples(small, small).map(spec.element)


def ring_elements(spec, max_size=5):
    coef = st.fractions(min_value=-5, max_value=5, max_denominator=4)
    return st.dictionaries(elements(spec), coef, max_size=max_size).map(lambda d: RingElement(spec, d))


def int_ring_elements(spec, max_size=4):
    return st.dictionaries(elements(spec), st.integers(-4, 4), max_size=max_size).map(lambda d: RingElement(spec, d))


@pytest.mark.parametrize("name", list(FAMILIES))
def test_group_axioms_on_ten_thousand_triples(name):
    spec = FAMILIES[name]
    rng = np.random.default_rng(0)
    e = spec.identity()
    for _ in range(10_000):
        g, h, k = (random_element(spec, rng) for _ in range(3))
        assert (g * h) * k == g * (h * k)
        assert g * e == g == e * g
        assert g * g.inverse() == e


@pytest.mark.parametrize("name", list(FAMILIES))
def test_ring_laws(name):
    spec = FAMILIES[name]

    @settings(max_examples=150)
    @given(ring_elements(spec), ring_elements(spec), ring_elements(spec))
    def check(g, h, k):
        assert convolve(convolve(g, h), k) == convolve(g, convolve(h, k))
        assert convolve(g, h).l1_norm() <= g.l1_norm() * h.l1_norm()
        assert adjoint(convolve(g, h)) == convolve(adjoint(h), adjoint(g))
        assert adjoint(adjoint(g)) == g
        assert adjoint(g).l1_norm() == g.l1_norm()
        assert convolve(g, h + k) == convolve(g, h) + convolve(g, k)

    check()


@pytest.mark.parametrize("name", list(FAMILIES))
def test_quotient_convolution_composes(name):
    spec = FAMILIES[name]
    q = build_quotient(spec, QUOTIENTS[name])

    @settings(max_examples=60)
    @given(ring_elements(spec, 3), ring_elements(spec, 3),
           st.lists(st.integers(-5, 5), min_size=q.index, max_size=q.index))
    def check(g, h, psi):
        lhs = quotient_convolve(psi, convolve(g, h), q)
        rhs = quotient_convolve(quotient_convolve(psi, g, q), h, q)
        assert lhs == rhs

    check()


@pytest.mark.parametrize("name", list(FAMILIES))
def test_torus_convolution_is_well_defined_mod_one(name):
    spec = FAMILIES[name]
    q = build_quotient(spec, QUOTIENTS[name])

    @settings(max_examples=60)
    @given(int_ring_elements(spec), st.lists(st.integers(-20, 20), min_size=q.index, max_size=q.index),
           st.integers(1, 12))
    def check(g, num, den):
        x = TorusPoint(tuple(num), den)
        shifted = TorusPoint(tuple(v + den for v in num), den)  # same point in R/Z
        assert quotient_convolve(x, g, q) == quotient_convolve(shifted, g, q)
        rational = quotient_convolve([Fraction(v, den) for v in num], g, q)
        assert quotient_convolve(x, g, q) == TorusPoint.from_fractions(rational)

    check()


@pytest.mark.parametrize("name,f", [
    ("Z2", [("e", 5), ("a", -1), ("b", -1), ("a^-1", -1), ("b^-1", -1)]),
    ("F2", [("e", 4), ("a", -1), ("b", 2)]),
    ("H", [("e", 5), ("(1,0,0)", -1), ("(0,1,1)", 2)]),
])
def test_xi_is_a_homomorphism(name, f):
    spec = FAMILIES[name]
    q = build_quotient(spec, QUOTIENTS[name])
    fix = FixedPointGroup(convolution_matrix(RingElement.from_terms(spec, f), q))
    vec = st.lists(st.integers(-50, 50), min_size=q.index, max_size=q.index)

    @settings(max_examples=80)
    @given(vec, vec)
    def check(h1, h2):
        assert fix.xi([a + b for a, b in zip(h1, h2)]) == fix.xi(h1) + fix.xi(h2)
        assert fix.matrix.annihilates(fix.xi(h1))

    check()


def test_xi_of_the_matrix_rows_vanishes():
    spec = Z2
    f = RingElement.from_terms(spec, [("e", 5), ("a", -1), ("b", -1), ("a^-1", -1), ("b^-1", -1)])
    A = convolution_matrix(f, build_quotient(spec, QUOTIENTS["Z2"]))
    fix = FixedPointGroup(A)
    for row in A.dense:
        assert fix.xi(row) == TorusPoint.zero(A.n)


@settings(max_examples=40)
@given(st.lists(st.integers(-3, 3), min_size=6, max_size=6), st.lists(st.integers(-3, 3), min_size=6, max_size=6))
def test_l1_is_a_metric_on_window_laws(a, b):
    q = build_quotient(GroupSpec.free_abelian(1), QuotientParams(moduli=(6,)))
    Z = q.group
    W = (Z.identity(), Z.parse("a"))
    p, r = window_distribution_of(a, q, W), window_distribution_of(b, q, W)
    mid = window_distribution_of([0] * 6, q, W)
    assert l1_distance(p, r) == l1_distance(r, p)
    assert 0 <= l1_distance(p, r) <= 2
    assert l1_distance(p, r) <= l1_distance(p, mid) + l1_distance(mid, r)
    # marginalising can only bring laws closer
    assert l1_distance(p.marginal([0]), r.marginal([0])) <= l1_distance(p, r)


def test_roundtrip_on_random_fixed_points_per_family():
    rng = np.random.default_rng(1)
    for name, terms in [("Z2", [("e", 6), ("a", 1), ("b^-1", -2)]), ("F2", [("e", -5), ("a b", 1), ("b", 1)]),
                        ("H", [("e", 4), ("(0,1,0)", 1), ("(1,1,0)", -1)])]:
        spec = FAMILIES[name]
        dyn = QuotientDynamics(RingElement.from_terms(spec, terms), build_quotient(spec, QUOTIENTS[name]))
        for _ in range(100):
            x = dyn.fix.sample(rng)
            assert dyn.xi(dyn.P(x)) == x

from fractions import Fraction

import pytest

from algdyn.errors import NotCertified, TruncationTooLoose
from algdyn.expansive import (
    dominance_certificate,
    fhat,
    inverse_residual,
    neumann_inverse,
    off_window_mass,
    select_window,
)
from algdyn.group_ring import RingElement, adjoint, convolve
from algdyn.groups import GroupSpec

import oracles

Z = GroupSpec.free_abelian(1)
Z2 = GroupSpec.free_abelian(2)
F2 = GroupSpec.free(2)


def ring(group, *terms):
    return RingElement.from_terms(group, terms)


THREE_MINUS_A = ring(Z, ("e", 3), ("a", -1))


def test_certificates():
    c = dominance_certificate(THREE_MINUS_A)
    assert c.certified and c.margin == Fraction(2, 3)
    five = ring(Z2, ("e", 5), ("a", -1), ("b", -1), ("a^-1", -1), ("b^-1", -1))
    assert dominance_certificate(five).margin == Fraction(1, 5)
    assert not dominance_certificate(ring(Z, ("e", 1), ("a", -1)))
    assert not dominance_certificate(ring(Z, ("a", 1)))


def test_neumann_geometric_case():
    inv = neumann_inverse(THREE_MINUS_A, Fraction(1, 1000))
    # tail (1/2)(1/3)^(K+1) <= 1/1000 first holds at K = 5
    assert inv.order == 5
    assert inv.tail_bound == Fraction(1, 1458)
    expected = oracles.geometric_inverse(3, 5)
    assert inv.approx == RingElement(Z, {Z.generator(0, k): v for k, v in expected.items()})
    assert inverse_residual(THREE_MINUS_A, inv) <= 3 * inv.tail_bound


def test_neumann_exact_inverse():
    inv = neumann_inverse(ring(Z, ("e", 3)), Fraction(1, 10**9))
    assert inv.approx == ring(Z, ("e", Fraction(1, 3)))
    assert inv.tail_bound == 0


def test_neumann_refuses_uncertified():
    with pytest.raises(NotCertified):
        neumann_inverse(ring(Z, ("e", 1), ("a", -1)), Fraction(1, 10))


@pytest.mark.parametrize("f", [
    THREE_MINUS_A,
    ring(Z2, ("e", 5), ("a", -1), ("b", -1), ("a^-1", -1), ("b^-1", -1)),
    ring(Z, ("e", -4), ("a", 1), ("a^-2", 2)),
])
def test_residual_shrinks_with_tolerance(f):
    last = None
    for k in range(1, 7):
        inv = neumann_inverse(f, Fraction(1, 10**k))
        res = inverse_residual(f, inv)
        # direct convolution as a second opinion
        direct = convolve(f, inv.approx) - RingElement.one(f.group)
        assert res == direct.l1_norm()
        assert res <= f.l1_norm() * inv.tail_bound
        if last is not None:
            assert inv.tail_bound <= last
        last = inv.tail_bound


def test_neumann_on_free_group():
    f = ring(F2, ("e", 5), ("a", -1), ("b", -1))
    inv = neumann_inverse(f, Fraction(1, 10))
    assert inverse_residual(f, inv) <= 7 * inv.tail_bound


def test_fhat():
    inv = neumann_inverse(THREE_MINUS_A, Fraction(1, 1000))
    fh = fhat(inv)
    assert fh.tail_bound == inv.tail_bound
    assert fh.approx == adjoint(inv.approx)
    assert fh.approx[Z.generator(0, -2)] == Fraction(1, 27)
    assert fh.approx.l1_norm() == inv.approx.l1_norm()
    err = convolve(fh.approx, adjoint(THREE_MINUS_A)) - RingElement.one(Z)
    assert err.l1_norm() <= 4 * fh.tail_bound


def test_select_window_examples():
    fh = fhat(neumann_inverse(THREE_MINUS_A, Fraction(1, 10**6)))
    W = select_window(fh, 4, Fraction(1, 10))
    assert W == [Z.identity(), Z.parse("a^-1"), Z.parse("a^-2")]
    assert 4 * (off_window_mass(fh, W) + fh.tail_bound) < Fraction(1, 10)
    exact = fhat(neumann_inverse(ring(Z, ("e", 3)), 1))
    assert select_window(exact, 100, Fraction(1, 1000)) == [Z.identity()]
    assert select_window(fh, 1, 10) == [Z.identity()]


def test_select_window_needs_tight_truncation():
    fh = fhat(neumann_inverse(THREE_MINUS_A, Fraction(1, 10)))
    with pytest.raises(TruncationTooLoose):
        select_window(fh, 4, Fraction(1, 10))


@pytest.mark.parametrize("M,delta", [(1, Fraction(1, 3)), (4, Fraction(1, 10)), (7, Fraction(1, 50)), (12, Fraction(1, 100))])
def test_select_window_bound_holds(M, delta):
    f = ring(Z2, ("e", 5), ("a", -1), ("b", -1), ("a^-1", -1), ("b^-1", -1))
    fh = fhat(neumann_inverse(f, delta / (4 * M)))
    W = select_window(fh, M, delta)
    assert M * (off_window_mass(fh, W) + fh.tail_bound) < delta
    # dropping the last greedy pick breaks the bound, so W is minimal
    if len(W) > 1:
        assert M * (off_window_mass(fh, W[:-1]) + fh.tail_bound) >= delta

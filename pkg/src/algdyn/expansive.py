"""Invertibility of f in l^1 via strict diagonal dominance, truncated
Neumann-series inverses with rigorous tail bounds, and window selection."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import NotCertified, TruncationTooLoose
from .group_ring import RingElement, adjoint, common_denominator, convolve_int
from .groups import GroupElement


@dataclass(frozen=True)
class Certificate:
    certified: bool
    margin: Fraction | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.certified


@dataclass(frozen=True)
class TruncatedInverse:
    """``approx`` with ``||exact - approx||_1 <= tail_bound``.

    ``leading_unit`` is the identity coefficient ``c`` with ``f = c(1_e - u)``
    and ``order`` the number of Neumann terms kept minus one.
    """

    approx: RingElement
    tail_bound: Fraction
    leading_unit: Fraction
    order: int
    ratio: Fraction


def dominance_certificate(f: RingElement) -> Certificate:
    if f.is_zero():
        raise ValueError("f must be nonzero")
    if not f.integer_valued:
        raise ValueError("f must be integer valued")
    e = f.group.identity()
    lead = abs(f[e])
    off = f.l1_norm() - lead
    if lead == 0:
        return Certificate(False, None, "f(e) = 0")
    if off >= lead:
        return Certificate(False, None, f"off-identity mass {off} >= |f(e)| = {lead}")
    return Certificate(True, 1 - off / lead)


def neumann_inverse(f: RingElement, tail_tol) -> TruncatedInverse:
    """Truncated ``f^-1 = c^-1 sum_k u^k`` with ``u = 1_e - f/c``.

    The order K is the least one with ``|c|^-1 r^(K+1) / (1 - r) <= tail_tol``
    where ``r = ||u||_1 < 1``.
    """
    tail_tol = Fraction(tail_tol)
    if tail_tol <= 0:
        raise ValueError("tail_tol must be positive")
    cert = dominance_certificate(f)
    if not cert:
        raise NotCertified(f"f is not dominance-certified: {cert.reason}")
    group = f.group
    e = group.identity()
    c = f[e]
    one = RingElement.one(group)
    r = (f.l1_norm() - abs(c)) / abs(c)
    if r == 0:
        return TruncatedInverse(one * (1 / c), Fraction(0), c, 0, r)
    K = 0
    scale = 1 / (abs(c) * (1 - r))
    while scale * r ** (K + 1) > tail_tol:
        K += 1
    # u = g / c with g = c 1_e - f; sum_{k<=K} u^k / c = (sum_k g^k c^(K-k)) / c^(K+1)
    ci = int(c)
    g = {x: -int(v) for x, v in f.coeffs.items() if x != e}
    total = {e: ci**K}
    power = {e: 1}
    for k in range(1, K + 1):
        power = convolve_int(power, g)
        w = ci ** (K - k)
        for x, v in power.items():
            total[x] = total.get(x, 0) + v * w
    den = ci ** (K + 1)
    approx = RingElement(group, {x: Fraction(v, den) for x, v in total.items() if v})
    return TruncatedInverse(approx, scale * r ** (K + 1), c, K, r)


def fhat(inv: TruncatedInverse) -> TruncatedInverse:
    """The adjoint of the truncated inverse; adjoint is an l^1 isometry."""
    return TruncatedInverse(adjoint(inv.approx), inv.tail_bound, inv.leading_unit, inv.order, inv.ratio)


def inverse_residual(f: RingElement, inv: TruncatedInverse) -> Fraction:
    """``||f * approx - 1_e||_1``, which is at most ``||f||_1 * tail_bound``."""
    num, D = common_denominator(inv.approx)
    fi, Df = common_denominator(f)
    prod = convolve_int(fi, num)
    e = f.group.identity()
    prod[e] = prod.get(e, 0) - D * Df
    return Fraction(sum(abs(v) for v in prod.values()), D * Df)


def select_window(fh: TruncatedInverse, M: int, delta) -> list[GroupElement]:
    """Greedy window: largest coefficients first until
    ``M * (mass off W + tail_bound) < delta``. The identity is always in W."""
    delta = Fraction(delta)
    if M < 1 or delta <= 0:
        raise ValueError("M must be a positive integer and delta positive")
    if M * fh.tail_bound >= delta:
        raise TruncationTooLoose(
            f"M * tail_bound = {float(M * fh.tail_bound):.3g} >= delta = {float(delta):.3g}; "
            "tighten the truncation"
        )
    e = fh.approx.group.identity()
    ranked = sorted(
        fh.approx.coeffs.items(), key=lambda kv: (-abs(kv[1]), kv[0].sort_key())
    )
    window = [e]
    off = fh.approx.l1_norm() - abs(fh.approx[e])
    for g, c in ranked:
        if M * (off + fh.tail_bound) < delta:
            break
        if g == e:
            continue
        window.append(g)
        off -= abs(c)
    return window


def off_window_mass(fh: TruncatedInverse, window) -> Fraction:
    ws = set(window)
    return sum((abs(c) for g, c in fh.approx.coeffs.items() if g not in ws), Fraction(0))

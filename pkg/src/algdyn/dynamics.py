"""Lift, encoding and decoding maps on finite quotients, window statistics,
and the two samplers of Haar measure on X_f.

For a fixed point ``x`` of a quotient, ``lift_L`` picks the representative
of each coordinate in ``[-1 + kappa, kappa)``, ``map_P`` is ``L(x) . f*``
(an integer vector bounded by ``M``), and ``map_xi`` sends an integer
vector ``h`` to ``h A^-1 mod 1``; ``map_xi(map_P(x)) == x`` exactly.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import LiftCutHit, NotAFixedPoint, RejectionRateExceeded
from .expansive import TruncatedInverse, neumann_inverse, fhat as fhat_of
from .group_ring import RingElement, adjoint
from .groups import FiniteQuotient, GroupElement
from .quotient_operator import FixedPointGroup, QuotientMatrix, convolution_matrix
from .torus import TorusPoint

# the double closest to 1/sqrt(2); as an exact rational its denominator is 2^53
DEFAULT_KAPPA = Fraction(0.7071067811865476)

CHUNK = 4096


@dataclass(frozen=True)
class LiftConfig:
    kappa: Fraction
    bound_M: int

    def __post_init__(self):
        k = Fraction(self.kappa)
        if not 0 < k < 1:
            raise ValueError("kappa must lie in (0, 1)")
        if self.bound_M < 1:
            raise ValueError("bound_M must be a positive integer")
        object.__setattr__(self, "kappa", k)

    @property
    def alphabet(self) -> range:
        return range(-self.bound_M, self.bound_M + 1)

    @classmethod
    def for_quotient(cls, f: RingElement, exponent: int, kappa=None) -> "LiftConfig":
        """Lift cut that provably misses every fixed-point coordinate.

        Coordinates of fixed points are multiples of ``1/exponent``; a cut
        ``a/b`` in lowest terms can only meet one when ``b`` divides the
        exponent. In that case fall back to ``1/(2*exponent + 1)``.
        """
        k = DEFAULT_KAPPA if kappa is None else Fraction(kappa)
        if exponent % k.denominator == 0:
            k = Fraction(1, 2 * exponent + 1)
        return cls(k, bound_for(f))


def bound_for(f: RingElement) -> int:
    """``M = ceil(||f||_1)``; ``|P(x)| <= ||L(x)||_inf ||f*||_1 < ||f||_1``."""
    return math.ceil(f.l1_norm())


def _lift_numerators(x: TorusPoint, kappa: Fraction) -> list[int]:
    a, b = kappa.numerator, kappa.denominator
    den = x.den
    cut = a * den
    out = []
    for v in x.num:
        s = v * b
        if s == cut:
            raise LiftCutHit(f"coordinate {Fraction(v, den)} equals the lift cut {kappa}")
        out.append(v if s < cut else v - den)
    return out


def lift_L(x: TorusPoint, cfg: LiftConfig) -> list[Fraction]:
    return [Fraction(v, x.den) for v in _lift_numerators(x, cfg.kappa)]


def _encode(x: TorusPoint, A: QuotientMatrix, cfg: LiftConfig) -> list[int]:
    lifted = _lift_numerators(x, cfg.kappa)
    raw = A.apply(lifted)
    den = x.den
    out = []
    for v in raw:
        q, r = divmod(v, den)
        if r:
            raise NotAFixedPoint("L(x) . f* is not integral: x is not a fixed point")
        out.append(q)
    return out


def map_P(x: TorusPoint, f: RingElement, q: FiniteQuotient, cfg: LiftConfig) -> list[int]:
    return _encode(x, convolution_matrix(f, q), cfg)


def map_xi(h: Sequence[int], f: RingElement, q: FiniteQuotient) -> TorusPoint:
    return FixedPointGroup(convolution_matrix(f, q)).xi(h)


# ---------------------------------------------------------------------------
# Window statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowDistribution:
    """Empirical law on ``A^W``: ``counts[tuple] / total``."""

    window: tuple[GroupElement, ...]
    counts: dict[tuple[int, ...], int]
    total: int
    aliased: bool = False

    def prob(self, key: tuple[int, ...]) -> Fraction:
        return Fraction(self.counts.get(key, 0), self.total)

    @property
    def probs(self) -> dict[tuple[int, ...], Fraction]:
        return {k: Fraction(v, self.total) for k, v in sorted(self.counts.items())}

    def marginal(self, positions: Sequence[int]) -> "WindowDistribution":
        """Push forward onto the sub-window at ``positions``."""
        out: Counter = Counter()
        for k, v in self.counts.items():
            out[tuple(k[i] for i in positions)] += v
        return WindowDistribution(tuple(self.window[i] for i in positions), dict(out), self.total, self.aliased)

    def merge(self, other: "WindowDistribution") -> "WindowDistribution":
        if other.window != self.window:
            raise ValueError("window mismatch")
        out = Counter(self.counts)
        out.update(other.counts)
        return WindowDistribution(self.window, dict(out), self.total + other.total, self.aliased or other.aliased)

    def to_json(self) -> dict:
        return {
            "window": [str(w) for w in self.window],
            "total": self.total,
            "aliased": self.aliased,
            "counts": [[list(k), v] for k, v in sorted(self.counts.items())],
        }


def window_permutations(q: FiniteQuotient, W: Sequence[GroupElement]) -> list[list[int]]:
    """``perms[j][C] = C * W[j]^-1``."""
    return [q.translation(w.inverse()) for w in W]


def is_aliased(q: FiniteQuotient, W: Sequence[GroupElement]) -> bool:
    return len({q.project(w) for w in W}) < len(W)


def window_distribution_of(psi: Sequence[int], q: FiniteQuotient, W: Sequence[GroupElement]) -> WindowDistribution:
    """Law of ``C -> (psi(C w^-1))_{w in W}`` under the uniform measure on cosets."""
    perms = window_permutations(q, W)
    counts = Counter(tuple(psi[p[C]] for p in perms) for C in range(q.index))
    return WindowDistribution(tuple(W), dict(counts), q.index, is_aliased(q, W))


def phi_window(x: TorusPoint, W: Sequence[GroupElement], f: RingElement, q: FiniteQuotient, cfg: LiftConfig) -> list[tuple[int, ...]]:
    """The window tuple of ``P(x)`` at every coset."""
    P = map_P(x, f, q, cfg)
    perms = window_permutations(q, W)
    return [tuple(P[p[C]] for p in perms) for C in range(q.index)]


def window_distribution(x: TorusPoint, W: Sequence[GroupElement], f: RingElement, q: FiniteQuotient, cfg: LiftConfig) -> WindowDistribution:
    return window_distribution_of(map_P(x, f, q, cfg), q, W)


class QuotientDynamics:
    """Cached matrix, fixed-point group and lift configuration for one quotient."""

    def __init__(self, f: RingElement, q: FiniteQuotient, kappa=None):
        self.f = f
        self.q = q
        self.matrix = convolution_matrix(f, q)
        self.fix = FixedPointGroup(self.matrix)
        self.config = LiftConfig.for_quotient(f, self.fix.exponent, kappa)

    def lift(self, x: TorusPoint) -> list[Fraction]:
        return lift_L(x, self.config)

    def P(self, x: TorusPoint) -> list[int]:
        return _encode(x, self.matrix, self.config)

    def xi(self, h: Sequence[int]) -> TorusPoint:
        return self.fix.xi(h)

    def window_distribution(self, x: TorusPoint, W: Sequence[GroupElement]) -> WindowDistribution:
        return window_distribution_of(self.P(x), self.q, W)

    def identity_window_sampler(self, W: Sequence[GroupElement]) -> "_FixedPointWindowSampler":
        return _FixedPointWindowSampler(self, W)


class _FixedPointWindowSampler:
    """Draws ``phi^W(x)`` at the identity coset for uniform fixed points ``x``,
    touching only the coordinates that tuple depends on."""

    def __init__(self, dyn: QuotientDynamics, W: Sequence[GroupElement]):
        q = dyn.q
        self.dyn = dyn
        targets = [q.project(w.inverse()) for w in W]  # identity coset times w^-1
        fstar = adjoint(dyn.f)
        # P(C) = sum_b L(C b^-1) f*(b)
        terms = []
        coords: dict[int, int] = {}
        for C in targets:
            row = []
            for b, c in fstar.items():
                src = q.mul(C, q.project(b.inverse()))
                slot = coords.setdefault(src, len(coords))
                row.append((slot, int(c)))
            terms.append(row)
        self.coords = sorted(coords, key=coords.get)
        self.terms = terms

    def draw(self, rng: np.random.Generator) -> tuple[int, ...]:
        fix = self.dyn.fix
        e = fix.exponent
        kappa = self.dyn.config.kappa
        a, b = kappa.numerator, kappa.denominator
        cut = a * e
        nums = fix.numerators(fix.draw(rng), self.coords)
        lifted = []
        for v in nums:
            s = v * b
            if s == cut:
                raise LiftCutHit("fixed-point coordinate equals the lift cut")
            lifted.append(v if s < cut else v - e)
        out = []
        for row in self.terms:
            tot = sum(lifted[s] * c for s, c in row)
            qv, r = divmod(tot, e)
            if r:
                raise NotAFixedPoint("non-integral encoding")
            out.append(qv)
        return tuple(out)


# ---------------------------------------------------------------------------
# Bernoulli pushforward sampler
# ---------------------------------------------------------------------------


class BernoulliWindowSampler:
    """Samples of ``phi^W`` under the pushforward of uniform noise on
    ``[-n, n]`` through ``y -> pi(y . fhat)``.

    Only the finitely many noise coordinates that reach the window through
    the truncated ``fhat`` are drawn. Coordinates of ``x`` are computed in
    floating point with error at most ``n * tail_bound`` plus rounding;
    samples whose lifted value falls within that error of the cut are
    rejected and redrawn.
    """

    def __init__(self, f: RingElement, fh: TruncatedInverse, n: int, W: Sequence[GroupElement], kappa=DEFAULT_KAPPA):
        if n < 1:
            raise ValueError("n must be a positive integer")
        self.f = f
        self.n = n
        self.window = tuple(W)
        self.kappa = float(Fraction(kappa))
        self.M = bound_for(f)
        fstar = adjoint(f)
        # phi^W(x)(w) = P(x)(w^-1);  P(x)(g) = sum_b L(x)(g b^-1) f*(b)
        need: dict[GroupElement, int] = {}
        p_terms = []
        for w in self.window:
            g = w.inverse()
            row = []
            for b, c in fstar.items():
                t = g * b.inverse()
                row.append((need.setdefault(t, len(need)), float(c)))
            p_terms.append(row)
        ts = sorted(need, key=need.get)
        # x(t) = sum_a y(t a^-1) fhat(a)
        ys: dict[GroupElement, int] = {}
        entries = []
        for i, t in enumerate(ts):
            for a, c in fh.approx.items():
                j = ys.setdefault(t * a.inverse(), len(ys))
                entries.append((j, i, float(c)))
        self.noise_support = len(ys)
        self.coef = np.zeros((len(ys), len(ts)))
        for j, i, c in entries:
            self.coef[j, i] += c
        self.p_terms = p_terms
        l1 = float(fh.approx.l1_norm())
        self.error = n * float(fh.tail_bound) + 8 * np.finfo(float).eps * n * l1 * max(1, len(ys))
        self.rejected = 0
        self.drawn = 0

    def _batch(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        y = rng.integers(-self.n, self.n + 1, size=(size, self.noise_support))
        x = y @ self.coef
        frac = x - np.floor(x)
        near = np.abs(frac - self.kappa) <= self.error
        ok = ~near.any(axis=1)
        lifted = np.where(frac < self.kappa, frac, frac - 1.0)
        P = np.empty((size, len(self.p_terms)))
        for k, row in enumerate(self.p_terms):
            P[:, k] = sum(lifted[:, s] * c for s, c in row)
        Pi = np.rint(P)
        bad = np.abs(P - Pi) > 1e-6
        if bad[ok].any():
            raise RuntimeError("encoded symbol is not integral within tolerance; truncation too loose")
        return Pi.astype(np.int64)[ok], ok

    def sample_counts(self, rng: np.random.Generator, nsamples: int) -> Counter:
        counts: Counter = Counter()
        got = 0
        while got < nsamples:
            want = nsamples - got
            P, ok = self._batch(rng, want)
            self.drawn += want
            self.rejected += int((~ok).sum())
            if self.drawn >= 1000 and self.rejected > 0.1 * self.drawn:
                raise RejectionRateExceeded(
                    f"rejected {self.rejected} of {self.drawn} draws; tighten the truncation"
                )
            for row in map(tuple, P.tolist()):
                counts[row] += 1
            got += len(P)
        return counts

    def sample(self, rng: np.random.Generator) -> tuple[int, ...]:
        c = self.sample_counts(rng, 1)
        return next(iter(c))


def sample_haar_bernoulli(f: RingElement, fh: TruncatedInverse, n: int, W: Sequence[GroupElement], rng, kappa=DEFAULT_KAPPA) -> tuple[int, ...]:
    return BernoulliWindowSampler(f, fh, n, W, kappa).sample(rng)


def bernoulli_truncation(f: RingElement, n: int, resolution=Fraction(1, 10**9)) -> TruncatedInverse:
    """``fhat`` truncated so that ``n * tail_bound <= resolution``."""
    return fhat_of(neumann_inverse(f, Fraction(resolution) / n))


# ---------------------------------------------------------------------------
# Reference marginals
# ---------------------------------------------------------------------------


def _chunk_rngs(seed, nsamples: int) -> list[tuple[np.random.Generator, int]]:
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(0, 2**63))
    nchunks = max(1, math.ceil(nsamples / CHUNK))
    children = np.random.SeedSequence(seed).spawn(nchunks)
    sizes = [CHUNK] * (nchunks - 1) + [nsamples - CHUNK * (nchunks - 1)]
    return [(np.random.default_rng(s), k) for s, k in zip(children, sizes)]


def reference_marginal_bernoulli(
    f: RingElement, W: Sequence[GroupElement], n: int, nsamples: int, seed, threads: int = 1,
    kappa=DEFAULT_KAPPA, fh: TruncatedInverse | None = None,
) -> WindowDistribution:
    if nsamples < 1:
        raise ValueError("nsamples must be >= 1")
    fh = fh if fh is not None else bernoulli_truncation(f, n)

    def run(job):
        rng, k = job
        return BernoulliWindowSampler(f, fh, n, W, kappa).sample_counts(rng, k)

    jobs = _chunk_rngs(seed, nsamples)
    results = _map(run, jobs, threads)
    total: Counter = Counter()
    for c in results:
        total.update(c)
    return WindowDistribution(tuple(W), dict(total), nsamples)


def reference_marginal_fixed_points(
    dyn: QuotientDynamics, W: Sequence[GroupElement], nsamples: int, seed, threads: int = 1
) -> WindowDistribution:
    if nsamples < 1:
        raise ValueError("nsamples must be >= 1")
    sampler = dyn.identity_window_sampler(W)

    def run(job):
        rng, k = job
        return Counter(sampler.draw(rng) for _ in range(k))

    results = _map(run, _chunk_rngs(seed, nsamples), threads)
    total: Counter = Counter()
    for c in results:
        total.update(c)
    return WindowDistribution(tuple(W), dict(total), nsamples, is_aliased(dyn.q, W))


def reference_marginal(f: RingElement, W, sampler: dict, nsamples: int, seed, threads: int = 1, group=None) -> WindowDistribution:
    """``sampler`` is ``{"bernoulli": n}`` or ``{"fixed_points": QuotientParams}``."""
    if "bernoulli" in sampler:
        return reference_marginal_bernoulli(f, W, int(sampler["bernoulli"]), nsamples, seed, threads)
    from .groups import build_quotient

    q = build_quotient(group or f.group, sampler["fixed_points"])
    return reference_marginal_fixed_points(QuotientDynamics(f, q), W, nsamples, seed, threads)


def _map(fn, jobs, threads):
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def total_variation(p: WindowDistribution, q: WindowDistribution) -> Fraction:
    """Half the l^1 distance."""
    from .entropy_mc import l1_distance

    return l1_distance(p, q) / 2

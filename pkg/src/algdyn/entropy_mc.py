"""Model counting at desk scale: how many symbolic configurations on a finite
quotient reproduce the window statistics of X_f up to epsilon, and the
combinatorial upper bound those counts must obey."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .dynamics import (
    LiftConfig,
    WindowDistribution,
    _encode,
    is_aliased,
    window_distribution_of,
    window_permutations,
)
from .errors import BoundInapplicable, EnumerationCapExceeded
from .group_ring import RingElement
from .groups import FiniteQuotient, GroupElement
from .quotient_operator import FixedPointGroup, convolution_matrix

ENUMERATION_CAP = 10**8
FIXED_POINT_CAP = 10**6


def _finite(x: float) -> float | None:
    # JSON has no infinities; log(0) is reported as null
    return x if math.isfinite(x) else None


def _as_fraction(x) -> Fraction:
    # floats go through their shortest repr so 0.4 means 2/5
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def l1_distance(p: WindowDistribution, q: WindowDistribution) -> Fraction:
    if tuple(p.window) != tuple(q.window):
        raise ValueError("window mismatch")
    keys = set(p.counts) | set(q.counts)
    num = sum(abs(p.counts.get(k, 0) * q.total - q.counts.get(k, 0) * p.total) for k in keys)
    return Fraction(num, p.total * q.total)


def shannon_entropy(p) -> float:
    """``-sum p log p`` in nats for a WindowDistribution, mapping or sequence."""
    if isinstance(p, WindowDistribution):
        vals = [Fraction(v, p.total) for v in p.counts.values()]
    elif isinstance(p, Mapping):
        vals = list(p.values())
    else:
        vals = list(p)
    if any(v < 0 for v in vals):
        raise ValueError("negative mass")
    total = sum(vals)
    if abs(float(total) - 1) > 1e-12:
        raise ValueError(f"masses sum to {float(total)}, not 1")
    return -math.fsum(float(v) * math.log(float(v)) for v in vals if v > 0)


def binary_entropy(x) -> float:
    x = float(x)
    if not 0 <= x <= 1:
        raise ValueError("binary entropy needs x in [0, 1]")
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log(x) - (1 - x) * math.log1p(-x)


@dataclass(frozen=True)
class MicrocountReport:
    index: int
    window: tuple[GroupElement, ...]
    epsilon: Fraction
    bound_M: int
    count: int
    log_count_over_index: float
    fix_count: int
    bound_value: float | None
    """Per-index log of the combinatorial upper bound, when it applies."""
    reference: WindowDistribution
    support_size: int
    aliased: bool = False

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "window": [str(w) for w in self.window],
            "epsilon": str(self.epsilon),
            "bound_M": self.bound_M,
            "count": str(self.count),
            "log_count_over_index": _finite(self.log_count_over_index),
            "fix_count": str(self.fix_count),
            "bound_value": self.bound_value,
            "aliased": self.aliased,
        }


class _Counter:
    """Vectorized strict-inequality test ``||ref - psi^W zeta||_1 < eps``.

    With reference counts ``c_t`` over ``S`` samples and candidate counts
    ``k_t`` over ``N`` cosets the test is the integer inequality
    ``sum_t |k_t S - c_t N| * den < num * S * N`` where tuples outside the
    reference support contribute ``S * (N - sum_{t in R} k_t)``.
    """

    def __init__(self, q: FiniteQuotient, W, reference: WindowDistribution, epsilon: Fraction, M: int):
        self.N = q.index
        self.K = 2 * M + 1
        self.M = M
        self.perms = np.array(window_permutations(q, W), dtype=np.int64)  # |W| x N
        self.weights = self.K ** np.arange(len(W), dtype=np.int64)
        if len(W) * math.log2(self.K) > 62:
            raise EnumerationCapExceeded("window too large to encode tuples in 64 bits")
        reach, self.unreachable = {}, 0
        for key, c in reference.counts.items():
            if all(-M <= v <= M for v in key):
                reach[sum((v + M) * self.K**j for j, v in enumerate(key))] = c
            else:
                # reference mass on tuples no candidate can produce
                self.unreachable += c
        codes = sorted(reach)
        self.ref_codes = np.array(codes, dtype=np.int64)
        self.ref_counts = np.array([reach[c] for c in codes], dtype=np.int64)
        self.S = reference.total
        self.num, self.den = epsilon.numerator, epsilon.denominator
        if 2 * self.S * self.N * self.den >= 2**62 or self.num * self.S * self.N >= 2**62:
            raise EnumerationCapExceeded("reference too large for exact 64-bit comparison")

    def passes(self, psi: np.ndarray) -> np.ndarray:
        """Boolean mask over the rows of ``psi`` (values in ``[-M, M]``)."""
        rows = psi.shape[0]
        codes = np.zeros((rows, self.N), dtype=np.int64)
        for j, perm in enumerate(self.perms):
            codes += (psi[:, perm] + self.M) * self.weights[j]
        R = len(self.ref_codes)
        k = np.zeros((rows, R + 1), dtype=np.int64)
        if R:
            pos = np.searchsorted(self.ref_codes, codes)
            pos_c = np.minimum(pos, R - 1)
            hit = self.ref_codes[pos_c] == codes
            slot = np.where(hit, pos_c, R)
        else:
            slot = np.full(codes.shape, R)
        np.add.at(k, (np.repeat(np.arange(rows), self.N), slot.ravel()), 1)
        inside = np.abs(k[:, :R] * self.S - self.ref_counts[None, :] * self.N).sum(axis=1)
        outside = self.S * k[:, R] + self.unreachable * self.N
        return (inside + outside) * self.den < self.num * self.S * self.N


def _candidates(K: int, N: int, lead: int, M: int, chunk: int = 1 << 16):
    """All vectors in ``[-M, M]^N`` with first entry ``lead - M``, lexicographic."""
    rest = N - 1
    total = K**rest
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        out = np.empty((len(idx), N), dtype=np.int64)
        out[:, 0] = lead - M
        for pos in range(N - 1, 0, -1):
            out[:, pos] = idx % K - M
            idx //= K
        yield out


def exhaustive_model_count(
    f: RingElement,
    q: FiniteQuotient,
    W: Sequence[GroupElement],
    reference: WindowDistribution,
    epsilon,
    cfg: LiftConfig,
    cap: int = ENUMERATION_CAP,
    threads: int = 1,
    fix_count: int | None = None,
) -> MicrocountReport:
    W = tuple(W)
    if tuple(reference.window) != W:
        raise ValueError("reference window differs from W")
    eps = _as_fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    M, N = cfg.bound_M, q.index
    K = 2 * M + 1
    if K**N > cap:
        raise EnumerationCapExceeded(
            f"(2M+1)^N = {K}^{N} exceeds the enumeration cap {cap}; use a Monte-Carlo estimate"
        )
    counter = _Counter(q, W, reference, eps, M)

    def run(lead: int) -> int:
        return sum(int(counter.passes(block).sum()) for block in _candidates(K, N, lead, M))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            count = sum(pool.map(run, range(K)))
    else:
        count = sum(run(lead) for lead in range(K))
    if fix_count is None:
        fix_count = FixedPointGroup(convolution_matrix(f, q)).order
    s = len(f.coeffs)
    bound = None
    if 2 * eps * s < 1:
        bound = _log_bound(fix_count, N, eps, s, M) / N
    return MicrocountReport(
        index=N,
        window=W,
        epsilon=eps,
        bound_M=M,
        count=count,
        log_count_over_index=math.log(count) / N if count else -math.inf,
        fix_count=fix_count,
        bound_value=bound,
        reference=reference,
        support_size=s,
        aliased=is_aliased(q, W),
    )


def count_encoded_fixed_points(
    f: RingElement,
    q: FiniteQuotient,
    W: Sequence[GroupElement],
    reference: WindowDistribution,
    epsilon,
    cfg: LiftConfig,
    cap: int = FIXED_POINT_CAP,
) -> int:
    """Fixed points ``x`` whose encoding ``P(x)`` passes the epsilon test."""
    eps = _as_fraction(epsilon)
    A = convolution_matrix(f, q)
    fix = FixedPointGroup(A)
    if fix.order > cap:
        raise EnumerationCapExceeded(
            f"{fix.order} fixed points exceed the cap {cap}; use estimate_encoded_fixed_points"
        )
    W = tuple(W)
    count = 0
    for x in fix:
        dist = window_distribution_of(_encode(x, A, cfg), q, W)
        if l1_distance(dist, reference) < eps:
            count += 1
    return count


def estimate_encoded_fixed_points(
    f: RingElement, q: FiniteQuotient, W, reference: WindowDistribution, epsilon, cfg: LiftConfig,
    nsamples: int, rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte-Carlo estimate and binomial standard error for large ``Fix``.

    Not exact; never used where an exact count is required.
    """
    eps = _as_fraction(epsilon)
    A = convolution_matrix(f, q)
    fix = FixedPointGroup(A)
    hits = 0
    for _ in range(nsamples):
        x = fix.sample(rng)
        if l1_distance(window_distribution_of(_encode(x, A, cfg), q, tuple(W)), reference) < eps:
            hits += 1
    p = hits / nsamples
    return p * fix.order, math.sqrt(p * (1 - p) / nsamples) * fix.order


# ---------------------------------------------------------------------------
# The combinatorial upper bound
# ---------------------------------------------------------------------------


def _log_bound(fix_count: int, N: int, eps: Fraction, s: int, M: int) -> float:
    t = 2 * eps * s * N
    return math.log(fix_count) + math.log(math.comb(N, math.floor(t))) + float(t) * math.log(2 * M + 1)


@dataclass(frozen=True)
class BoundCheck:
    holds: bool
    count: int
    log_count: float
    log_bound: float
    stirling_lhs: float
    stirling_rhs: float
    detail: str

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "count": str(self.count),
            "log_count": _finite(self.log_count),
            "log_bound": self.log_bound,
            "stirling_lhs": _finite(self.stirling_lhs),
            "stirling_rhs": self.stirling_rhs,
            "detail": self.detail,
        }


def theorem31_bound_check(report: MicrocountReport, f: RingElement) -> BoundCheck:
    """``count <= |Fix| * C(N, floor(t)) * (2M+1)^t`` with ``t = 2 eps s N``.

    The comparison is exact: with ``t = a/b`` both sides are raised to the
    power ``b``. The per-index Stirling form
    ``log(count)/N <= log|Fix|/N + H(2 eps s) + 2 eps s log(2M+1)``
    is reported alongside as floats.
    """
    s = len(f.coeffs)
    x = 2 * report.epsilon * s
    if x >= 1:
        raise BoundInapplicable(f"2 * epsilon * |supp f| = {x} >= 1")
    N, M = report.index, report.bound_M
    t = x * N
    a, b = t.numerator, t.denominator
    rhs_base = report.fix_count * math.comb(N, math.floor(t))
    if report.count == 0:
        holds = True
    else:
        holds = report.count**b <= rhs_base**b * (2 * M + 1) ** a
    log_count = math.log(report.count) if report.count else -math.inf
    log_bound = _log_bound(report.fix_count, N, report.epsilon, s, M)
    st_rhs = math.log(report.fix_count) / N + binary_entropy(x) + float(x) * math.log(2 * M + 1)
    return BoundCheck(
        holds=holds,
        count=report.count,
        log_count=log_count,
        log_bound=log_bound,
        stirling_lhs=log_count / N,
        stirling_rhs=st_rhs,
        detail=f"count={report.count} vs |Fix|*C({N},{math.floor(t)})*{2 * M + 1}^({t})",
    )

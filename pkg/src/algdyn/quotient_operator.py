"""The operator ``psi -> psi . f*`` on Z^(coset space), its exact determinant,
Smith form, the finite group of fixed points and the growth-rate series."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
from gmpy2 import mpz

from . import linalg
from .errors import DegenerateQuotient, DeterminantMismatch, NotCertified
from .expansive import dominance_certificate
from .group_ring import RingElement, adjoint
from .groups import AbelianQuotient, FiniteQuotient, GroupSpec, QuotientParams, build_quotient
from .torus import TorusPoint

DENSE_LIMIT = 4096
DENSE_MODULAR_LIMIT = 400


class QuotientMatrix:
    """Integer matrix of right convolution by ``f*`` on a finite quotient.

    Row ``C`` holds ``f*(b)`` at column ``C*b``, so a row vector ``x``
    maps to ``x A = x . f*``. Rows are stored sparsely; ``dense`` is
    materialized on demand up to ``DENSE_LIMIT``.
    """

    def __init__(self, rows: list[dict[int, int]], quotient: FiniteQuotient | None = None, f: RingElement | None = None):
        self.rows = rows
        self.n = len(rows)
        self.quotient = quotient
        self.f = f

    @classmethod
    def from_dense(cls, A: Sequence[Sequence[int]]) -> "QuotientMatrix":
        return cls([{j: int(v) for j, v in enumerate(row) if v} for row in A])

    @cached_property
    def dense(self) -> list[list[int]]:
        if self.n > DENSE_LIMIT:
            raise MemoryError(f"dense form refused above index {DENSE_LIMIT}")
        out = [[0] * self.n for _ in range(self.n)]
        for i, row in enumerate(self.rows):
            for j, v in row.items():
                out[i][j] = v
        return out

    def apply(self, x: Sequence[int]) -> list[int]:
        """Integer row vector times the matrix."""
        out = [0] * self.n
        for xi, row in zip(x, self.rows):
            if xi:
                for j, v in row.items():
                    out[j] += xi * v
        return out

    def annihilates(self, x: TorusPoint) -> bool:
        """``x A = 0 mod 1``."""
        return all(v % x.den == 0 for v in self.apply(x.num))

    def row_sums(self) -> list[int]:
        return [sum(r.values()) for r in self.rows]


def convolution_matrix(f: RingElement, q: FiniteQuotient) -> QuotientMatrix:
    if not f.integer_valued:
        raise ValueError("f must be integer valued")
    fstar = adjoint(f)
    rows: list[dict[int, int]] = [dict() for _ in range(q.index)]
    for beta, c in fstar.items():
        ci = int(c)
        perm = q.translation(beta)
        for C, C2 in enumerate(perm):
            row = rows[C]
            v = row.get(C2, 0) + ci
            if v:
                row[C2] = v
            else:
                row.pop(C2, None)
    return QuotientMatrix(rows, q, f)


# ---------------------------------------------------------------------------
# Determinants
# ---------------------------------------------------------------------------


def fraction_free_determinant(A: QuotientMatrix | Sequence[Sequence[int]]) -> int:
    """Unit-pivot sparse elimination, then Bareiss on the remaining core."""
    if not isinstance(A, QuotientMatrix):
        A = QuotientMatrix.from_dense(A)
    return linalg.UnitPivotElimination(A.rows, A.n).det()


def _primes_1_mod(m: int, bound_sq: int) -> list[int]:
    from sympy import isprime

    out, prod = [], 1
    t = ((1 << linalg.PRIME_BITS) - 2) // m
    while prod * prod <= 4 * bound_sq:
        p = 1 + m * t
        t -= 1
        if t < 1:
            raise RuntimeError(f"ran out of primes congruent to 1 mod {m}")
        if isprime(p):
            out.append(p)
            prod *= p
    return out


def _root_of_unity(m: int, p: int) -> int:
    from sympy import factorint

    qs = list(factorint(m))
    for g in range(2, p):
        w = pow(g, (p - 1) // m, p)
        if all(pow(w, m // r, p) != 1 for r in qs):
            return w
    raise ValueError(f"no primitive {m}-th root of unity mod {p}")


def _prod_mod(vals: np.ndarray, p: int) -> int:
    vals = vals.astype(np.int64) % p
    while vals.size > 1:
        if vals.size % 2:
            vals = np.append(vals, 1)
        vals = (vals[0::2] * vals[1::2]) % p
    return int(vals[0]) if vals.size else 1


def fourier_modular_determinant(A: QuotientMatrix) -> int:
    """Multi-prime determinant for abelian quotients.

    Over F_p with ``p = 1 mod lcm(moduli)`` the translation operators are
    simultaneously diagonal, so ``det A mod p`` is the product of the
    character values of ``f*``. Residues are combined by CRT past twice the
    Hadamard bound.
    """
    q = A.quotient
    if not isinstance(q, AbelianQuotient) or A.f is None:
        raise TypeError("fourier_modular_determinant needs a matrix built on an abelian quotient")
    moduli = q.moduli
    m = math.lcm(*moduli)
    bound_sq = 1
    for row in A.rows:
        bound_sq *= sum(v * v for v in row.values())
    primes = _primes_1_mod(m, bound_sq)
    ks = np.indices(moduli).reshape(len(moduli), -1).T.astype(np.int64)
    terms = []
    for beta, c in adjoint(A.f).items():
        e = np.zeros(len(ks), dtype=np.int64)
        for j, (nj, bj) in enumerate(zip(moduli, beta.word)):
            e = (e + ks[:, j] * ((m // nj) * (bj % nj))) % m
        terms.append((int(c), e))
    residues = []
    for p in primes:
        w = _root_of_unity(m, p)
        table = np.empty(m, dtype=np.int64)
        acc = 1
        for t in range(m):
            table[t] = acc
            acc = acc * w % p
        vals = np.zeros(len(ks), dtype=np.int64)
        for c, e in terms:
            vals = (vals + (c % p) * table[e]) % p
        residues.append(_prod_mod(vals, p))
    return linalg.crt_symmetric(residues, primes)


def modular_determinant(A: QuotientMatrix | Sequence[Sequence[int]]) -> int:
    if isinstance(A, QuotientMatrix):
        if isinstance(A.quotient, AbelianQuotient) and A.f is not None:
            return fourier_modular_determinant(A)
        if A.n > DENSE_MODULAR_LIMIT:
            return sparse_modular_determinant(A)
        return linalg.modular_det(A.dense)
    return linalg.modular_det(A)


def sparse_modular_determinant(A: QuotientMatrix) -> int:
    """Per-prime sparse Gaussian elimination with any nonzero pivot."""
    bound_sq = 1
    for row in A.rows:
        bound_sq *= sum(v * v for v in row.values())
    primes = linalg.primes_for_bound(bound_sq)
    residues = [_sparse_det_mod_p(A.rows, A.n, p) for p in primes]
    return linalg.crt_symmetric(residues, primes)


def _sparse_det_mod_p(rows, n, p) -> int:
    work = [{c: v % p for c, v in r.items() if v % p} for r in rows]
    cols: list[set[int]] = [set() for _ in range(n)]
    for r, row in enumerate(work):
        for c in row:
            cols[c].add(r)
    row_order, col_order = [], []
    det = 1
    alive = set(range(n))
    while alive:
        r = min(alive, key=lambda i: (len(work[i]), i))
        if not work[r]:
            return 0
        c = min(work[r], key=lambda j: (len(cols[j]), j))
        pv = work[r][c]
        det = det * pv % p
        inv = pow(pv, -1, p)
        prow = work[r]
        for r2 in sorted(cols[c] - {r}):
            row2 = work[r2]
            mlt = row2[c] * inv % p
            for c2, v in prow.items():
                nv = (row2.get(c2, 0) - mlt * v) % p
                if nv:
                    if c2 not in row2:
                        cols[c2].add(r2)
                    row2[c2] = nv
                elif c2 in row2:
                    del row2[c2]
                    cols[c2].discard(r2)
        for c2 in prow:
            cols[c2].discard(r)
        alive.discard(r)
        row_order.append(r)
        col_order.append(c)
    sign = linalg.perm_sign(row_order) * linalg.perm_sign(col_order)
    return sign * det % p


def exact_determinant(A: QuotientMatrix | Sequence[Sequence[int]]) -> int:
    """Exact determinant by two independent routes that must agree."""
    ff = fraction_free_determinant(A)
    mod = modular_determinant(A)
    if ff != mod:
        raise DeterminantMismatch(f"fraction-free {ff} != modular {mod}")
    return ff


# ---------------------------------------------------------------------------
# Smith form and fixed points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmithDecomposition:
    """``U A V = diag(divisors)`` with unimodular ``U`` and ``V``."""

    U: list[list[int]]
    divisors: list[int]
    V: list[list[int]]

    @property
    def order(self) -> int:
        return math.prod(self.divisors)


def smith_normal_form(A: QuotientMatrix | Sequence[Sequence[int]]) -> SmithDecomposition:
    dense = A.dense if isinstance(A, QuotientMatrix) else A
    U, d, V = linalg.smith_normal_form(dense)
    return SmithDecomposition(U, d, V)


def _uniform_below(rng: np.random.Generator, d: int) -> int:
    if d <= 0:
        raise ValueError("modulus must be positive")
    if d < (1 << 62):
        return int(rng.integers(0, d))
    nbytes = (d.bit_length() + 7) // 8
    excess = nbytes * 8 - d.bit_length()
    while True:
        x = int.from_bytes(rng.bytes(nbytes), "little") >> excess
        if x < d:
            return x


class FixedPointGroup:
    """The finite group ``{x : x A = 0 mod 1}`` with an explicit basis.

    ``generators[i]`` has order ``orders[i]``; every fixed point is
    ``sum_i w_i generators[i]`` for a unique ``0 <= w_i < orders[i]``.
    Generators are stored as numerators over the common denominator
    ``exponent``.
    """

    def __init__(self, A: QuotientMatrix):
        self.matrix = A
        self.n = A.n
        elim = linalg.UnitPivotElimination(A.rows, A.n)
        self.elimination = elim
        if elim.core_size:
            U, d, V = linalg.smith_normal_form(elim.core)
        else:
            U, d, V = [], [], []
        if any(x == 0 for x in d):
            raise DegenerateQuotient("convolution matrix is singular: infinitely many fixed points")
        self.divisors = [1] * (self.n - elim.core_size) + list(d)
        self.exponent = d[-1] if d else 1
        e = self.exponent
        k = elim.core_size
        # e * S^-1 = V diag(e/d) U
        scaled_U = [[(e // d[i]) * x for x in U[i]] for i in range(k)]
        self._e_core_inverse = linalg.matmul(V, scaled_U) if k else []
        gens, orders = [], []
        for i in range(k):
            if d[i] > 1:
                gens.append(elim.back_propagate(scaled_U[i], e))
                orders.append(d[i])
        self.generator_numerators = gens
        self.orders = orders

    @property
    def order(self) -> int:
        return math.prod(self.orders)

    @property
    def generators(self) -> list[TorusPoint]:
        return [TorusPoint(tuple(g), self.exponent) for g in self.generator_numerators]

    def xi(self, h: Sequence[int]) -> TorusPoint:
        """``h A^-1 mod 1`` for an integer vector ``h``."""
        e = self.exponent
        if len(h) != self.n:
            raise ValueError(f"vector length {len(h)} does not match dimension {self.n}")
        res = self.elimination.forward_residual(h, e)
        z_core = [sum(r * m for r, m in zip(res, col)) % e for col in zip(*self._e_core_inverse)] if res else []
        return TorusPoint(tuple(self.elimination.back_propagate(z_core, e)), e)

    def point(self, w: Sequence[int]) -> TorusPoint:
        return TorusPoint(tuple(self.numerators(w)), self.exponent)

    def numerators(self, w: Sequence[int], coords: Sequence[int] | None = None) -> list[int]:
        e = mpz(self.exponent)
        idx = range(self.n) if coords is None else coords
        out = [mpz(0)] * len(idx)
        for wi, g in zip(w, self._generators_z):
            if wi:
                wz = mpz(wi)
                out = [o + wz * g[C] for o, C in zip(out, idx)]
        return [int(x % e) for x in out]

    @cached_property
    def _generators_z(self) -> list[list]:
        return [[mpz(v) for v in g] for g in self.generator_numerators]

    def draw(self, rng: np.random.Generator) -> list[int]:
        return [_uniform_below(rng, d) for d in self.orders]

    def sample(self, rng: np.random.Generator) -> TorusPoint:
        return self.point(self.draw(rng))

    def __iter__(self) -> Iterator[TorusPoint]:
        import itertools

        for w in itertools.product(*(range(d) for d in self.orders)):
            yield self.point(w)

    def contains(self, x: TorusPoint) -> bool:
        return self.matrix.annihilates(x)


def sample_fixed_point(source: SmithDecomposition | FixedPointGroup, rng: np.random.Generator) -> TorusPoint:
    """Uniform fixed point.

    From a dense Smith decomposition ``U A V = D``: draw ``z_i`` uniform in
    ``{0, 1/d_i, ..., (d_i - 1)/d_i}`` and return ``z U mod 1``.
    """
    if isinstance(source, FixedPointGroup):
        return source.sample(rng)
    d = source.divisors
    if any(x == 0 for x in d):
        raise DegenerateQuotient("zero elementary divisor: infinitely many fixed points")
    L = math.lcm(*d) if d else 1
    z = [_uniform_below(rng, di) * (L // di) for di in d]
    n = len(source.U[0]) if source.U else 0
    num = [0] * n
    for zi, row in zip(z, source.U):
        if zi:
            for j, u in enumerate(row):
                num[j] += zi * u
    return TorusPoint(tuple(num), L)


def fixed_point_count(f: RingElement, q: FiniteQuotient, force: bool = False) -> int:
    if not force:
        cert = dominance_certificate(f)
        if not cert:
            raise NotCertified(f"f is not dominance-certified: {cert.reason}")
    det = exact_determinant(convolution_matrix(f, q))
    if det == 0:
        raise DegenerateQuotient(f"degenerate quotient {q.label()}: determinant is zero")
    return abs(det)


@dataclass(frozen=True)
class GrowthPoint:
    label: str
    index: int
    count: int
    log_count_over_index: float


def growth_rate_series(
    f: RingElement,
    group: GroupSpec,
    family: Sequence[QuotientParams],
    threads: int = 1,
) -> list[GrowthPoint]:
    cert = dominance_certificate(f)
    if not cert:
        raise NotCertified(f"f is not dominance-certified: {cert.reason}")

    def one(params: QuotientParams) -> GrowthPoint:
        q = build_quotient(group, params)
        count = fixed_point_count(f, q, force=True)
        return GrowthPoint(q.label(), q.index, count, math.log(count) / q.index)

    if threads > 1 and len(family) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, family))
    return [one(p) for p in family]


def limsup_tail(series: Sequence[GrowthPoint]) -> float:
    """Max of the values over the last ceil(len/2) terms."""
    if not series:
        raise ValueError("empty series")
    half = math.ceil(len(series) / 2)
    return max(p.log_count_over_index for p in series[-half:])

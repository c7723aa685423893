"""Exact integer linear algebra.

Dense routines (Bareiss determinant, multi-modular determinant, Smith form
with transforms) plus :class:`UnitPivotElimination`, a sparse elimination
that only pivots on entries equal to +-1. Unit pivots keep every
intermediate integral, so what remains is a small dense core whose
determinant and Smith form carry all the arithmetic information of the
original matrix.
"""

from __future__ import annotations

import heapq
import math
from functools import lru_cache
from typing import Sequence

import numpy as np
from gmpy2 import divexact, mpz

Matrix = list[list[int]]

PRIME_BITS = 31


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> Matrix:
    Bt = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def perm_sign(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    sign = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# Determinants
# ---------------------------------------------------------------------------


def bareiss_det(A: Sequence[Sequence[int]]) -> int:
    """Fraction-free Gaussian elimination (GMP integers)."""
    M = [[mpz(x) for x in row] for row in A]
    n = len(M)
    if n == 0:
        return 1
    sign = 1
    prev = mpz(1)
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = M[k][k]
        rowk = M[k]
        for i in range(k + 1, n):
            rowi = M[i]
            a = rowi[k]
            if a:
                for j in range(k + 1, n):
                    rowi[j] = divexact(pivot * rowi[j] - a * rowk[j], prev)
            elif pivot != prev:
                for j in range(k + 1, n):
                    rowi[j] = divexact(pivot * rowi[j], prev)
            rowi[k] = 0
        prev = pivot
    return sign * int(M[n - 1][n - 1])


def hadamard_bound_sq(A: Sequence[Sequence[int]]) -> int:
    """Square of the Hadamard bound ``prod_i ||row_i||_2``."""
    out = 1
    for row in A:
        out *= sum(int(x) * int(x) for x in row)
    return out


@lru_cache(maxsize=None)
def _prime_block(start: int, count: int) -> tuple[int, ...]:
    from sympy import prevprime

    out = []
    p = start
    for _ in range(count):
        p = prevprime(p)
        out.append(p)
    return tuple(out)


def primes_for_bound(bound_sq: int, bits: int = PRIME_BITS) -> list[int]:
    """Distinct primes below ``2**bits`` whose product ``P`` has ``P**2 > 4 * bound_sq``."""
    out: list[int] = []
    prod = 1
    start = 1 << bits
    block = 64
    while prod * prod <= 4 * bound_sq:
        for p in _prime_block(start, block):
            out.append(p)
            prod *= p
            if prod * prod > 4 * bound_sq:
                break
        else:
            start = out[-1]
            continue
        break
    return out


def crt_symmetric(residues: Sequence[int], moduli: Sequence[int]) -> int:
    """Chinese remaindering, returning the representative in ``(-P/2, P/2]``."""
    x, P = 0, 1
    for r, p in zip(residues, moduli):
        t = ((r - x) * pow(P, -1, p)) % p
        x += P * t
        P *= p
    if x > P // 2:
        x -= P
    return x


def det_mod_p(A: np.ndarray, p: int) -> int:
    """Determinant of an int64 matrix modulo a prime ``p < 2**31``."""
    M = np.array(A, dtype=np.int64) % p
    n = M.shape[0]
    det = 1
    for k in range(n):
        nz = np.nonzero(M[k:, k])[0]
        if nz.size == 0:
            return 0
        piv = k + int(nz[0])
        if piv != k:
            M[[k, piv]] = M[[piv, k]]
            det = -det
        pv = int(M[k, k])
        det = det * pv % p
        if k + 1 < n:
            inv = pow(pv, -1, p)
            factors = (M[k + 1 :, k] * inv) % p
            M[k + 1 :, k:] = (M[k + 1 :, k:] - np.outer(factors, M[k, k:]) % p) % p
    return det % p


def modular_det(A: Sequence[Sequence[int]], primes: Sequence[int] | None = None) -> int:
    """Multi-prime determinant; the prime product exceeds twice the Hadamard bound."""
    n = len(A)
    if n == 0:
        return 1
    if primes is None:
        primes = primes_for_bound(hadamard_bound_sq(A))
    big = max((abs(int(x)) for row in A for x in row), default=0)
    if big < (1 << 62):
        arr = np.array([[int(x) for x in row] for row in A], dtype=np.int64)
        residues = [det_mod_p(arr, p) for p in primes]
    else:
        residues = [det_mod_p(np.array([[int(x) % p for x in row] for row in A], dtype=np.int64), p) for p in primes]
    return crt_symmetric(residues, primes)


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------


def smith_normal_form(A: Sequence[Sequence[int]]) -> tuple[Matrix, list[int], Matrix]:
    """Return ``(U, d, V)`` with ``U A V = diag(d)``, U and V unimodular,
    ``d_i | d_(i+1)`` and ``d_i >= 0``."""
    D = [list(map(int, row)) for row in A]
    n = len(D)
    m = len(D[0]) if n else 0
    U = identity(n)
    V = identity(m)

    def swap_rows(i, j):
        D[i], D[j] = D[j], D[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in D:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst += q * row_src
        if q:
            D[dst] = [a + q * b for a, b in zip(D[dst], D[src])]
            U[dst] = [a + q * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, q):  # col_dst += q * col_src
        if q:
            for row in D:
                row[dst] += q * row[src]
            for row in V:
                row[dst] += q * row[src]

    for t in range(min(n, m)):
        while True:
            best = None
            for i in range(t, n):
                for j in range(t, m):
                    v = D[i][j]
                    if v and (best is None or abs(v) < best[0]):
                        best = (abs(v), i, j)
                        if best[0] == 1:
                            break
                if best and best[0] == 1:
                    break
            if best is None:
                return U, [D[i][i] if i < m else 0 for i in range(min(n, m))], V
            _, i, j = best
            swap_rows(t, i)
            swap_cols(t, j)
            dirty = False
            for i in range(t + 1, n):
                if D[i][t]:
                    add_row(i, t, -(D[i][t] // D[t][t]))
                    dirty = dirty or D[i][t] != 0
            for j in range(t + 1, m):
                if D[t][j]:
                    add_col(j, t, -(D[t][j] // D[t][t]))
                    dirty = dirty or D[t][j] != 0
            if dirty:
                continue
            piv = D[t][t]
            bad = next(
                (i for i in range(t + 1, n) if any(D[i][j] % piv for j in range(t + 1, m))),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if D[t][t] < 0:
            D[t] = [-x for x in D[t]]
            U[t] = [-x for x in U[t]]
    return U, [D[i][i] for i in range(min(n, m))], V


def unimodular_inverse(U: Sequence[Sequence[int]]) -> Matrix:
    """Exact inverse of a unimodular integer matrix (Gauss-Jordan over Q)."""
    from fractions import Fraction

    n = len(U)
    M = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(U)]
    for k in range(n):
        piv = next(i for i in range(k, n) if M[i][k] != 0)
        M[k], M[piv] = M[piv], M[k]
        pv = M[k][k]
        M[k] = [x / pv for x in M[k]]
        for i in range(n):
            if i != k and M[i][k] != 0:
                a = M[i][k]
                M[i] = [x - a * y for x, y in zip(M[i], M[k])]
    out = []
    for row in M:
        vals = row[n:]
        if any(v.denominator != 1 for v in vals):
            raise ValueError("matrix is not unimodular")
        out.append([int(v) for v in vals])
    return out


# ---------------------------------------------------------------------------
# Sparse unit-pivot elimination
# ---------------------------------------------------------------------------


class UnitPivotElimination:
    """Eliminate +-1 pivots from a sparse square integer matrix.

    Row operations ``row[r2] -= m * row[r]`` are recorded in order. After
    elimination the matrix ``A~ = E A`` consists of frozen pivot rows, each
    with a unit at its pivot column and zeros at earlier pivot columns, and
    core rows supported on the core columns only. ``core`` is that dense
    block. Pivots are chosen greedily by Markowitz cost.
    """

    def __init__(self, rows: Sequence[dict[int, int]], n: int | None = None):
        n = len(rows) if n is None else n
        self.n = n
        work = [dict(r) for r in rows]
        cols: list[set[int]] = [set() for _ in range(n)]
        for r, row in enumerate(work):
            for c in row:
                cols[c].add(r)
        alive_r = [True] * n
        alive_c = [True] * n
        heap: list[tuple[int, int, int]] = []

        def push_row(r):
            row = work[r]
            lr = len(row) - 1
            for c, v in row.items():
                if v == 1 or v == -1:
                    heapq.heappush(heap, (lr * (len(cols[c]) - 1), r, c))

        for r in range(n):
            push_row(r)

        pivots: list[tuple[int, int, int]] = []
        frozen: list[dict[int, int]] = []
        ops: list[tuple[int, int, int]] = []
        while heap:
            cost, r, c = heapq.heappop(heap)
            if not (alive_r[r] and alive_c[c]):
                continue
            pv = work[r].get(c)
            if pv != 1 and pv != -1:
                continue
            actual = (len(work[r]) - 1) * (len(cols[c]) - 1)
            if actual > cost:
                heapq.heappush(heap, (actual, r, c))
                continue
            prow = work[r]
            targets = sorted(cols[c] - {r})
            for r2 in targets:
                row2 = work[r2]
                m = row2[c] * pv
                ops.append((r2, r, m))
                for c2, v in prow.items():
                    nv = row2.get(c2, 0) - m * v
                    if nv:
                        if c2 not in row2:
                            cols[c2].add(r2)
                        row2[c2] = nv
                    elif c2 in row2:
                        del row2[c2]
                        cols[c2].discard(r2)
            for c2 in prow:
                cols[c2].discard(r)
            alive_r[r] = False
            alive_c[c] = False
            pivots.append((r, c, pv))
            frozen.append(prow)
            work[r] = {}
            for r2 in targets:
                push_row(r2)

        self.pivots = pivots
        self.frozen = frozen
        self.ops = ops
        self.core_rows = [r for r in range(n) if alive_r[r]]
        self.core_cols = [c for c in range(n) if alive_c[c]]
        self.core: Matrix = [[work[r].get(c, 0) for c in self.core_cols] for r in self.core_rows]
        row_order = [p[0] for p in pivots] + self.core_rows
        col_order = [p[1] for p in pivots] + self.core_cols
        self._perm_sign = perm_sign(row_order) * perm_sign(col_order)
        self._unit_sign = math.prod(p[2] for p in pivots) if pivots else 1

    @property
    def core_size(self) -> int:
        return len(self.core_rows)

    def det(self) -> int:
        return self._perm_sign * self._unit_sign * bareiss_det(self.core)

    def fill(self) -> int:
        return sum(len(r) for r in self.frozen)

    def _mpz_ops(self):
        if getattr(self, "_ops_z", None) is None:
            self._ops_z = [(r2, r, mpz(m)) for r2, r, m in reversed(self.ops)]
            self._frozen_z = [
                (c, mpz(pv), [(c2, mpz(v)) for c2, v in frow.items()])
                for (r, c, pv), frow in zip(self.pivots, self.frozen)
            ]
        return self._ops_z, self._frozen_z

    def forward_residual(self, h: Sequence[int], modulus: int | None = None) -> list[int]:
        """Residual on the core columns after solving the pivot part of ``y A~ = h``."""
        _, frozen = self._mpz_ops()
        res = [mpz(x) for x in h]
        mod = mpz(modulus) if modulus is not None else None
        for c, pv, frow in frozen:
            y = pv * res[c]
            if mod is not None:
                y %= mod
            if y:
                for c2, v in frow:
                    res[c2] -= y * v
                if mod is not None:
                    for c2, _ in frow:
                        res[c2] %= mod
        out = [res[c] for c in self.core_cols]
        if mod is not None:
            out = [x % mod for x in out]
        return [int(x) for x in out]

    def back_propagate(self, z_core: Sequence[int], modulus: int) -> list[int]:
        """Given ``z`` on the core rows (pivot rows zero), return ``z E mod modulus``."""
        ops, _ = self._mpz_ops()
        mod = mpz(modulus)
        z = [mpz(0)] * self.n
        for r, v in zip(self.core_rows, z_core):
            z[r] = mpz(v) % mod
        for r2, r, m in ops:
            v = z[r2]
            if v:
                z[r] = (z[r] - m * v) % mod
        return [int(x) for x in z]

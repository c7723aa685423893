"""Reference computations that share no code with the package under test."""

from __future__ import annotations

import cmath
import itertools
import math
from fractions import Fraction

import mpmath
import sympy


def heisenberg_mul(g, h):
    a, b, c = g
    x, y, z = h
    return (a + x, b + y, c + z + a * y)


def free_reduce(word):
    out = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def sympy_det(A) -> int:
    return int(sympy.Matrix(A).det(method="bareiss"))


def sympy_invariants(A) -> list[int]:
    """Elementary divisors as gcd ratios of k x k minors (tiny matrices only)."""
    n = len(A)
    M = sympy.Matrix(A)
    dets = [1]
    for k in range(1, n + 1):
        g = 0
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.combinations(range(n), k):
                g = math.gcd(g, int(M.extract(list(rows), list(cols)).det()))
        dets.append(g)
    return [dets[k] // dets[k - 1] if dets[k - 1] else 0 for k in range(1, n + 1)]


def cyclic_matrix(coeffs: dict[int, int], n: int) -> list[list[int]]:
    """Right convolution by f* on Z/n, row-vector convention.

    Row C carries f*(g) at column C + g; f*(g) = f(-g).
    """
    A = [[0] * n for _ in range(n)]
    for k, c in coeffs.items():
        for C in range(n):
            A[C][(C - k) % n] += c
    return A


def torus_fixed_points(A) -> int:
    """Count x in (Z/D)^n / D with x A = 0 mod 1, where D = |det A|."""
    n = len(A)
    D = abs(sympy_det(A))
    if D == 0:
        raise ValueError("singular")
    count = 0
    for x in itertools.product(range(D), repeat=n):
        if all(sum(x[i] * A[i][j] for i in range(n)) % D == 0 for j in range(n)):
            count += 1
    return count


def character_product(coeffs: dict[tuple[int, ...], int], moduli) -> float:
    """|prod over characters of sum_k f(k) exp(2 pi i <k, theta>)|."""
    total = 1.0 + 0j
    for theta in itertools.product(*(range(n) for n in moduli)):
        z = sum(c * cmath.exp(2j * math.pi * sum(k[j] * theta[j] / moduli[j] for j in range(len(moduli))))
                for k, c in coeffs.items())
        total *= z
    return abs(total)


def mahler_linear_in_x(a0, a1, dps: int = 30) -> float:
    """m(a0(y) + a1(y) x) via Jensen: the integral of log max(|a0|, |a1|) over |y| = 1.

    ``a0`` and ``a1`` are dicts exponent -> coefficient (Laurent in y).
    """
    mpmath.mp.dps = dps

    def ev(poly, t):
        return sum(c * mpmath.expjpi(2 * k * t) for k, c in poly.items())

    def integrand(t):
        return mpmath.log(max(abs(ev(a0, t)), abs(ev(a1, t))))

    return float(mpmath.quad(integrand, [0, 0.25, 0.5, 0.75, 1]))


def permutation_closure(gens):
    """All products of the generating permutations, by breadth-first search."""
    n = len(gens[0])
    ident = tuple(range(n))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = tuple(g[p[i]] for i in range(n))
                if q not in seen:
                    seen.add(q)
                    nxt.append(q)
        frontier = nxt
    return seen


def geometric_inverse(c: int, K: int) -> dict[int, Fraction]:
    """Coefficients of sum_{k<=K} c^-(k+1) a^k, the truncated inverse of c - a on Z."""
    return {k: Fraction(1, c ** (k + 1)) for k in range(K + 1)}


def model_count(N: int, M: int, shifts, reference: dict, epsilon: Fraction) -> int:
    """Count psi: Z/N -> [-M, M] whose window law is within epsilon of ``reference``.

    ``shifts`` are the window exponents k (window element a^k); the tuple at
    coset C is (psi(C - k))_k. ``reference`` maps tuples to probabilities.
    """
    count = 0
    for psi in itertools.product(range(-M, M + 1), repeat=N):
        law: dict = {}
        for C in range(N):
            key = tuple(psi[(C - k) % N] for k in shifts)
            law[key] = law.get(key, 0) + Fraction(1, N)
        keys = set(law) | set(reference)
        if sum(abs(law.get(t, 0) - reference.get(t, 0)) for t in keys) < epsilon:
            count += 1
    return count

"""Log Fuglede-Kadison determinant estimates and the two abelian oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DeterminantMismatch, FamilyMismatch, NearSingularCharacter
from .group_ring import RingElement
from .groups import FREE_ABELIAN, QuotientParams, build_quotient
from .quotient_operator import (
    GrowthPoint,
    convolution_matrix,
    exact_determinant,
    growth_rate_series,
)

NEAR_ZERO = 1e-12
EXACT_INDEX_LIMIT = 12
GRID_POINTS = 2**20


def _check_abelian(f: RingElement):
    if f.group.family != FREE_ABELIAN:
        raise FamilyMismatch(f"character oracles need a free abelian group, got {f.group}")
    if not f.integer_valued:
        raise ValueError("f must be integer valued")


def _terms(f: RingElement) -> tuple[np.ndarray, np.ndarray]:
    exps = np.array([g.word for g, _ in f.items()], dtype=np.int64).reshape(len(f.coeffs), f.group.rank)
    coefs = np.array([float(c) for _, c in f.items()])
    return exps, coefs


def symbol_abs(f: RingElement, axes: Sequence[np.ndarray]) -> np.ndarray:
    """``|F(theta)|`` on the product grid of the given angle axes (in turns)."""
    exps, coefs = _terms(f)
    shape = tuple(len(a) for a in axes)
    total = np.zeros(shape, dtype=complex)
    for k, c in zip(exps, coefs):
        # separable phase: outer product of one exponential per axis
        term = np.array(c, dtype=complex)
        for j, a in enumerate(axes):
            term = np.multiply.outer(term, np.exp(2j * np.pi * k[j] * a))
        total += term
    return np.abs(total)


@dataclass(frozen=True)
class CharacterDeterminant:
    """``|det|`` of a circulant convolution operator from its characters."""

    moduli: tuple[int, ...]
    log_abs: float
    min_abs: float
    exact: int | None = None

    @property
    def index(self) -> int:
        return math.prod(self.moduli)


def character_determinant_abelian(f: RingElement, moduli: Sequence[int], verify: bool = True) -> CharacterDeterminant:
    """Product of ``|F(k)|`` over all characters ``k`` of ``Z^d / diag(moduli)``.

    The log sum uses ``math.fsum``, which is exactly rounded and independent
    of summation order. For index at most 12 the integer is reconstructed and,
    with ``verify``, checked against the exact determinant.
    """
    _check_abelian(f)
    moduli = tuple(int(n) for n in moduli)
    if len(moduli) != f.group.rank or any(n < 1 for n in moduli):
        raise ValueError(f"need {f.group.rank} positive moduli, got {moduli}")
    axes = [np.arange(n) / n for n in moduli]
    vals = symbol_abs(f, axes).ravel()
    lo = float(vals.min())
    if lo < NEAR_ZERO:
        raise NearSingularCharacter(f"|F(k)| = {lo:.3g} at some character of moduli {moduli}")
    log_abs = math.fsum(np.log(vals).tolist())
    exact = None
    if math.prod(moduli) <= EXACT_INDEX_LIMIT:
        exact = round(math.exp(log_abs))
        if verify:
            det = abs(exact_determinant(convolution_matrix(f, build_quotient(f.group, QuotientParams(moduli=moduli)))))
            if det != exact:
                raise DeterminantMismatch(f"character product {exact} != exact determinant {det}")
    return CharacterDeterminant(moduli, log_abs, lo, exact)


def default_grid(d: int) -> int:
    return max(2, int(round(GRID_POINTS ** (1 / d))))


def mahler_measure(f: RingElement, N: int) -> float:
    """Equispaced ``N^d`` grid average of ``log|F|`` over the unit torus."""
    _check_abelian(f)
    if N < 1:
        raise ValueError("grid size must be positive")
    d = f.group.rank
    axes = [np.arange(N) / N for _ in range(d)]
    # chunk the first axis to bound memory
    step = max(1, GRID_POINTS // max(1, N ** (d - 1)))
    parts = []
    for start in range(0, N, step):
        vals = symbol_abs(f, [axes[0][start:start + step]] + axes[1:])
        lo = float(vals.min())
        if lo < NEAR_ZERO:
            raise NearSingularCharacter(f"|F| = {lo:.3g} on the grid; f is not zero-free on the torus")
        parts.append(math.fsum(np.log(vals).ravel().tolist()))
    return math.fsum(parts) / N**d


def mahler_with_delta(f: RingElement, N: int) -> tuple[float, float]:
    """``(m_N, |m_N - m_{N/2}|)``; ``N`` must be even."""
    if N % 2:
        raise ValueError("grid size must be even")
    fine = mahler_measure(f, N)
    return fine, abs(fine - mahler_measure(f, N // 2))


@dataclass(frozen=True)
class FkReport:
    series: list[tuple[int, float]]
    oracle_value: float | None
    gap: float | None
    oracle: str
    points: list[GrowthPoint] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "series": [{"label": p.label, "index": p.index, "count": str(p.count), "log_det_over_index": p.log_count_over_index} for p in self.points],
            "oracle": self.oracle,
            "oracle_value": self.oracle_value,
            "gap": self.gap,
        }


def fk_estimate(f: RingElement, family: Sequence[QuotientParams], threads: int = 1, grid: int | None = None) -> FkReport:
    points = growth_rate_series(f, f.group, family, threads=threads)
    series = [(p.index, p.log_count_over_index) for p in points]
    abelian = f.group.family == FREE_ABELIAN and all(p.moduli is not None for p in family)
    if not abelian:
        return FkReport(series, None, None, "no oracle", points)
    N = grid or default_grid(f.group.rank)
    m = mahler_measure(f, N)
    gap = abs(series[-1][1] - m) if series else None
    return FkReport(series, m, gap, f"mahler grid {N}^{f.group.rank}", points)

"""Exact points of the torus (R/Z)^N with a common denominator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


@dataclass(frozen=True)
class TorusPoint:
    """A point ``num / den mod 1`` in lowest common terms.

    ``num`` entries lie in ``[0, den)``. Two points are equal exactly when
    their coordinates are equal in R/Z.
    """

    num: tuple[int, ...]
    den: int

    def __post_init__(self):
        den = int(self.den)
        if den < 1:
            raise ValueError("denominator must be positive")
        num = [int(x) % den for x in self.num]
        g = math.gcd(den, *num) if num else den
        if g > 1:
            num = [x // g for x in num]
            den //= g
        object.__setattr__(self, "num", tuple(num))
        object.__setattr__(self, "den", den)

    @classmethod
    def from_fractions(cls, coords: Iterable) -> "TorusPoint":
        fr = [Fraction(c) for c in coords]
        den = math.lcm(*(f.denominator for f in fr)) if fr else 1
        return cls(tuple(f.numerator * (den // f.denominator) for f in fr), den)

    @classmethod
    def zero(cls, n: int) -> "TorusPoint":
        return cls((0,) * n, 1)

    @property
    def coords(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(x, self.den) for x in self.num)

    def __len__(self) -> int:
        return len(self.num)

    def __getitem__(self, i: int) -> Fraction:
        return Fraction(self.num[i], self.den)

    def __add__(self, other: "TorusPoint") -> "TorusPoint":
        den = math.lcm(self.den, other.den)
        a, b = den // self.den, den // other.den
        return TorusPoint(tuple(x * a + y * b for x, y in zip(self.num, other.num)), den)

    def __neg__(self) -> "TorusPoint":
        return TorusPoint(tuple(-x for x in self.num), self.den)

    def __sub__(self, other: "TorusPoint") -> "TorusPoint":
        return self + (-other)

    def scaled(self, k: int) -> "TorusPoint":
        return TorusPoint(tuple(k * x for x in self.num), self.den)

    def to_strings(self) -> list[str]:
        return [str(Fraction(x, self.den)) for x in self.num]


def torus_from_numerators(num: Sequence[int], den: int) -> TorusPoint:
    return TorusPoint(tuple(num), den)

"""Finitely supported rational functions on a group, with convolution."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

from .errors import FamilyMismatch, ParseError
from .groups import FiniteQuotient, GroupElement, GroupSpec
from .torus import TorusPoint


class RingElement:
    """A finitely supported map ``group -> Q``.

    Zero coefficients are never stored. ``g * h`` is convolution,
    ``(g*h)(x) = sum_b g(b) h(b^-1 x)``; multiplying by a number scales.
    """

    __slots__ = ("group", "coeffs", "_hash")

    def __init__(self, group: GroupSpec, coeffs: Mapping[GroupElement, object] | None = None):
        self.group = group
        clean: dict[GroupElement, Fraction] = {}
        for g, c in (coeffs or {}).items():
            if g.group != group:
                raise FamilyMismatch(f"element of {g.group} in a ring element over {group}")
            c = Fraction(c)
            if c:
                clean[g] = clean.get(g, Fraction(0)) + c
        self.coeffs = {g: c for g, c in clean.items() if c}
        self._hash = None

    # -- constructors ----------------------------------------------------

    @classmethod
    def delta(cls, g: GroupElement, coeff=1) -> "RingElement":
        return cls(g.group, {g: coeff})

    @classmethod
    def one(cls, group: GroupSpec) -> "RingElement":
        return cls.delta(group.identity())

    @classmethod
    def from_terms(cls, group: GroupSpec, terms: Iterable[tuple[str, object]]) -> "RingElement":
        """``[("a", 1), ("e", -2)]`` -> ``a - 2*1_e`` (words parsed in ``group``)."""
        out: dict[GroupElement, Fraction] = {}
        for word, c in terms:
            g = group.parse(word)
            out[g] = out.get(g, Fraction(0)) + Fraction(c)
        return cls(group, out)

    @classmethod
    def from_entries(cls, group: GroupSpec, entries: Sequence[Sequence]) -> "RingElement":
        """Inverse of :meth:`to_entries`: a list of ``[word, numerator, denominator]``."""
        out: dict[GroupElement, Fraction] = {}
        for i, entry in enumerate(entries):
            if not isinstance(entry, (list, tuple)) or len(entry) not in (2, 3):
                raise ParseError(f"ring element entry {i} must be [word, numerator, denominator]")
            word = entry[0]
            if not isinstance(word, str):
                raise ParseError(f"ring element entry {i}: word must be a string")
            try:
                num = int(entry[1])
                den = int(entry[2]) if len(entry) == 3 else 1
            except (TypeError, ValueError):
                raise ParseError(f"ring element entry {i}: bad coefficient {entry[1:]!r}") from None
            if den == 0:
                raise ParseError(f"ring element entry {i}: zero denominator")
            g = group.parse(word)
            out[g] = out.get(g, Fraction(0)) + Fraction(num, den)
        return cls(group, out)

    def to_entries(self) -> list[list]:
        return [
            [str(g), c.numerator, c.denominator]
            for g, c in sorted(self.coeffs.items(), key=lambda kv: kv[0].sort_key())
        ]

    # -- queries ---------------------------------------------------------

    @property
    def integer_valued(self) -> bool:
        return all(c.denominator == 1 for c in self.coeffs.values())

    def support(self) -> list[GroupElement]:
        return sorted(self.coeffs, key=GroupElement.sort_key)

    def __getitem__(self, g: GroupElement) -> Fraction:
        return self.coeffs.get(g, Fraction(0))

    def l1_norm(self) -> Fraction:
        return sum((abs(c) for c in self.coeffs.values()), Fraction(0))

    def is_zero(self) -> bool:
        return not self.coeffs

    def items(self):
        return sorted(self.coeffs.items(), key=lambda kv: kv[0].sort_key())

    # -- algebra ---------------------------------------------------------

    def _check(self, other: "RingElement"):
        if other.group != self.group:
            raise FamilyMismatch(f"ring elements over {self.group} and {other.group}")

    def __add__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        out = dict(self.coeffs)
        for g, c in other.coeffs.items():
            out[g] = out.get(g, Fraction(0)) + c
        return RingElement(self.group, out)

    def __neg__(self) -> "RingElement":
        return RingElement(self.group, {g: -c for g, c in self.coeffs.items()})

    def __sub__(self, other: "RingElement") -> "RingElement":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, RingElement):
            return convolve(self, other)
        if isinstance(other, (int, Rational)):
            return RingElement(self.group, {g: c * other for g, c in self.coeffs.items()})
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Rational)):
            return self * other
        return NotImplemented

    def adjoint(self) -> "RingElement":
        return adjoint(self)

    def __eq__(self, other) -> bool:
        return isinstance(other, RingElement) and self.group == other.group and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.group, frozenset(self.coeffs.items())))
        return self._hash

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for g, c in self.items():
            parts.append(f"{c}*[{g}]")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"RingElement({self.group}, {self})"


def convolve(g: RingElement, h: RingElement) -> RingElement:
    g._check(h)
    out: dict[GroupElement, Fraction] = {}
    for x, a in g.coeffs.items():
        for y, b in h.coeffs.items():
            z = x * y
            out[z] = out.get(z, Fraction(0)) + a * b
    return RingElement(g.group, out)


def convolve_int(g: Mapping[GroupElement, int], h: Mapping[GroupElement, int]) -> dict[GroupElement, int]:
    """Convolution of integer coefficient maps; zeros are dropped."""
    out: dict[GroupElement, int] = {}
    get = out.get
    for x, a in g.items():
        for y, b in h.items():
            z = x * y
            out[z] = get(z, 0) + a * b
    return {z: c for z, c in out.items() if c}


def common_denominator(g: RingElement) -> tuple[dict[GroupElement, int], int]:
    """``(numerators, D)`` with ``g = numerators / D``."""
    D = math.lcm(*(c.denominator for c in g.coeffs.values())) if g.coeffs else 1
    return {x: c.numerator * (D // c.denominator) for x, c in g.coeffs.items()}, D


def adjoint(g: RingElement) -> RingElement:
    """``g*(x) = g(x^-1)`` (coefficients are real)."""
    return RingElement(g.group, {x.inverse(): c for x, c in g.coeffs.items()})


def l1_norm(g: RingElement) -> Fraction:
    return g.l1_norm()


def quotient_convolve(psi, g: RingElement, q: FiniteQuotient):
    """``(psi . g)(C) = sum_b psi(C b^-1) g(b)`` on the coset space of ``q``.

    ``psi`` is either a sequence of rationals (returns a list of Fractions)
    or a :class:`TorusPoint` (returns a TorusPoint; ``g`` must then be
    integer valued).
    """
    if g.group != q.group:
        raise FamilyMismatch(f"ring element over {g.group} acting on a quotient of {q.group}")
    if isinstance(psi, TorusPoint):
        if not g.integer_valued:
            raise ValueError("convolution of a torus vector needs an integer-valued ring element")
        if len(psi) != q.index:
            raise ValueError(f"vector length {len(psi)} does not match quotient index {q.index}")
        out = [0] * q.index
        for beta, c in g.coeffs.items():
            ci = int(c)
            perm = q.translation(beta)
            for C, v in enumerate(psi.num):
                out[perm[C]] += ci * v
        return TorusPoint(tuple(out), psi.den)
    psi = [Fraction(v) for v in psi]
    if len(psi) != q.index:
        raise ValueError(f"vector length {len(psi)} does not match quotient index {q.index}")
    out_r = [Fraction(0)] * q.index
    for beta, c in g.coeffs.items():
        perm = q.translation(beta)
        for C, v in enumerate(psi):
            if v:
                out_r[perm[C]] += c * v
    return out_r

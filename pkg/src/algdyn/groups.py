"""Concrete residually finite groups and their finite quotients.

Three families are supported: free abelian groups Z^d, free groups F_k and
the integer Heisenberg group. Elements are kept in a unique normal form so
that equality of elements is equality of tuples.

Generators are written with lowercase letters, skipping ``e`` which always
denotes the identity: ``a, b, c, d, f, g, ...``.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .errors import FamilyMismatch, ParseError, QuotientTooLarge

FREE_ABELIAN = "free_abelian"
FREE = "free"
HEISENBERG = "heisenberg"
FAMILIES = (FREE_ABELIAN, FREE, HEISENBERG)

LETTERS = "abcdfghijklmnopqrstuvwxyz"

DEFAULT_QUOTIENT_CAP = 10**6


@dataclass(frozen=True)
class GroupSpec:
    """A group family. ``rank`` is the number of generators (2 for Heisenberg)."""

    family: str
    rank: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown group family {self.family!r}")
        if self.family == HEISENBERG:
            object.__setattr__(self, "rank", 2)
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.rank > len(LETTERS):
            raise ValueError(f"at most {len(LETTERS)} generators are supported")

    @classmethod
    def free_abelian(cls, d: int) -> "GroupSpec":
        return cls(FREE_ABELIAN, d)

    @classmethod
    def free(cls, k: int) -> "GroupSpec":
        return cls(FREE, k)

    @classmethod
    def heisenberg(cls) -> "GroupSpec":
        return cls(HEISENBERG, 2)

    def __str__(self) -> str:
        if self.family == FREE_ABELIAN:
            return f"Z^{self.rank}"
        if self.family == FREE:
            return f"F_{self.rank}"
        return "H3(Z)"

    # -- elements ---------------------------------------------------------

    def identity(self) -> "GroupElement":
        if self.family == FREE_ABELIAN:
            return GroupElement(self, (0,) * self.rank)
        if self.family == FREE:
            return GroupElement(self, ())
        return GroupElement(self, (0, 0, 0))

    def generators(self) -> list["GroupElement"]:
        return [self.generator(i) for i in range(self.rank)]

    def generator(self, i: int, power: int = 1) -> "GroupElement":
        if not 0 <= i < self.rank:
            raise ValueError(f"generator index {i} out of range for {self}")
        if self.family == FREE_ABELIAN:
            v = [0] * self.rank
            v[i] = power
            return GroupElement(self, tuple(v))
        if self.family == FREE:
            letter = i + 1 if power > 0 else -(i + 1)
            return GroupElement(self, (letter,) * abs(power))
        v = [0, 0]
        v[i] = power
        return GroupElement(self, (v[0], v[1], 0))

    def element(self, payload: Sequence[int]) -> "GroupElement":
        """Build an element from a raw payload, reducing free words."""
        payload = tuple(int(x) for x in payload)
        if self.family == FREE_ABELIAN:
            if len(payload) != self.rank:
                raise ValueError(f"expected a vector of length {self.rank}")
            return GroupElement(self, payload)
        if self.family == HEISENBERG:
            if len(payload) != 3:
                raise ValueError("Heisenberg elements are integer triples")
            return GroupElement(self, payload)
        for x in payload:
            if x == 0 or abs(x) > self.rank:
                raise ValueError(f"invalid letter {x} for {self}")
        return GroupElement(self, _free_reduce(payload))

    def parse(self, text: str) -> "GroupElement":
        """Parse ``"a^2 b^-1"``, ``"(1,0)"``, ``"(1,1,1)"`` or ``"e"``."""
        s = text.strip()
        if s.startswith("("):
            if self.family == FREE:
                raise ParseError(f"tuple syntax {text!r} is not valid for a free group")
            inner = s[1:-1] if s.endswith(")") else None
            if inner is None:
                raise ParseError(f"unbalanced parenthesis in {text!r}")
            try:
                payload = [int(tok) for tok in inner.split(",")]
            except ValueError:
                bad = next(t for t in inner.split(",") if not _is_int(t))
                raise ParseError(f"bad coordinate {bad.strip()!r} in {text!r}") from None
            try:
                return self.element(payload)
            except ValueError as exc:
                raise ParseError(f"{text!r}: {exc}") from None
        result = self.identity()
        for token in re.split(r"[\s*]+", s):
            if token in ("", "e", "1"):
                continue
            m = _TOKEN.fullmatch(token)
            if m is None:
                raise ParseError(f"malformed token {token!r} in word {text!r}")
            letter, power = m.group(1), int(m.group(2) or 1)
            idx = LETTERS.find(letter)
            if idx < 0 or idx >= self.rank:
                raise ParseError(f"unknown generator {letter!r} in word {text!r} for {self}")
            result = result * self.generator(idx, power)
        return result

    def format(self, g: "GroupElement") -> str:
        if self.family == FREE:
            if not g.word:
                return "e"
            parts = []
            i = 0
            w = g.word
            while i < len(w):
                j = i
                while j < len(w) and w[j] == w[i]:
                    j += 1
                letter = LETTERS[abs(w[i]) - 1]
                power = (j - i) * (1 if w[i] > 0 else -1)
                parts.append(letter if power == 1 else f"{letter}^{power}")
                i = j
            return " ".join(parts)
        return "(" + ",".join(str(x) for x in g.word) + ")"


_TOKEN = re.compile(r"([a-z])(?:\^(-?\d+))?")


def _is_int(tok: str) -> bool:
    try:
        int(tok)
    except ValueError:
        return False
    return True


def _free_reduce(word: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class GroupElement:
    group: GroupSpec
    word: tuple[int, ...]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.word == other.word and (self.group is other.group or self.group == other.group)

    def __hash__(self) -> int:
        return hash(self.word)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return element_mul(self, other)

    def inverse(self) -> "GroupElement":
        return element_inv(self)

    def is_identity(self) -> bool:
        return self == self.group.identity()

    def sort_key(self) -> tuple:
        return (sum(abs(x) for x in self.word), len(self.word), self.word)

    def __str__(self) -> str:
        return self.group.format(self)

    def __repr__(self) -> str:
        return f"GroupElement({self.group}, {self})"


def element_mul(g: GroupElement, h: GroupElement) -> GroupElement:
    if g.group is not h.group and g.group != h.group:
        raise FamilyMismatch(f"cannot multiply elements of {g.group} and {h.group}")
    fam = g.group.family
    if fam == FREE_ABELIAN:
        return GroupElement(g.group, tuple(x + y for x, y in zip(g.word, h.word)))
    if fam == FREE:
        a, b = g.word, h.word
        i, n, la = 0, min(len(a), len(b)), len(a)
        while i < n and a[la - 1 - i] == -b[i]:
            i += 1
        return GroupElement(g.group, a[: la - i] + b[i:])
    a, b, c = g.word
    a2, b2, c2 = h.word
    return GroupElement(g.group, (a + a2, b + b2, c + c2 + a * b2))


def element_inv(g: GroupElement) -> GroupElement:
    fam = g.group.family
    if fam == FREE_ABELIAN:
        return GroupElement(g.group, tuple(-x for x in g.word))
    if fam == FREE:
        return GroupElement(g.group, tuple(-x for x in reversed(g.word)))
    a, b, c = g.word
    # (a,b,c)(-a,-b,z) = (0,0,c+z-ab)
    return GroupElement(g.group, (-a, -b, a * b - c))


# ---------------------------------------------------------------------------
# Finite quotients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuotientParams:
    """Parameters of a finite-index normal subgroup.

    Exactly one of ``moduli`` (free abelian, diagonal lattice), ``modulus``
    (Heisenberg, all coordinates mod n) or ``generators`` (free group,
    0-based permutation images of the generators) is set.
    """

    moduli: tuple[int, ...] | None = None
    modulus: int | None = None
    generators: tuple[tuple[int, ...], ...] | None = None

    def label(self) -> str:
        if self.moduli is not None:
            return "moduli=" + "x".join(str(n) for n in self.moduli)
        if self.modulus is not None:
            return f"modulus={self.modulus}"
        assert self.generators is not None
        return "perms=" + ";".join(format_cycles(p) for p in self.generators)

    def to_json(self) -> dict:
        if self.moduli is not None:
            return {"moduli": list(self.moduli)}
        if self.modulus is not None:
            return {"modulus": self.modulus}
        assert self.generators is not None
        return {"generators": [list(p) for p in self.generators]}


def parse_cycles(text: str, degree: int | None = None) -> tuple[int, ...]:
    """Parse 1-based cycle notation such as ``"(1 2)(3 4 5)"`` into 0-based images."""
    cycles = re.findall(r"\(([^()]*)\)", text)
    if re.sub(r"\([^()]*\)", "", text).strip():
        raise ParseError(f"malformed cycle notation {text!r}")
    parsed = []
    for cyc in cycles:
        try:
            pts = [int(x) for x in re.split(r"[\s,]+", cyc.strip()) if x]
        except ValueError:
            raise ParseError(f"malformed cycle {cyc!r} in {text!r}") from None
        if any(p < 1 for p in pts) or len(set(pts)) != len(pts):
            raise ParseError(f"bad cycle {cyc!r} in {text!r}")
        parsed.append(pts)
    top = max((max(c) for c in parsed if c), default=1)
    n = degree if degree is not None else top
    if top > n:
        raise ParseError(f"cycle point {top} exceeds degree {n}")
    img = list(range(n))
    seen: set[int] = set()
    for cyc in parsed:
        if seen & set(cyc):
            raise ParseError(f"cycles in {text!r} are not disjoint")
        seen |= set(cyc)
        for i, p in enumerate(cyc):
            img[p - 1] = cyc[(i + 1) % len(cyc)] - 1
    return tuple(img)


def format_cycles(perm: Sequence[int]) -> str:
    seen = set()
    out = []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            continue
        cyc = []
        i = start
        while i not in seen:
            seen.add(i)
            cyc.append(i + 1)
            i = perm[i]
        out.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(out) or "()"


def _perm_mul(p: tuple[int, ...], q: tuple[int, ...]) -> tuple[int, ...]:
    # apply p first, then q
    return tuple(q[i] for i in p)


def _perm_inv(p: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for i, x in enumerate(p):
        inv[x] = i
    return tuple(inv)


class FiniteQuotient:
    """The coset space of a finite-index normal subgroup.

    Cosets are identified with elements of the finite image group and
    numbered densely from 0; coset 0 is the identity coset.
    """

    group: GroupSpec
    params: QuotientParams
    index: int
    is_abelian: bool = False

    def project(self, g: GroupElement) -> int:
        raise NotImplementedError

    def mul(self, i: int, j: int) -> int:
        raise NotImplementedError

    def inv(self, i: int) -> int:
        raise NotImplementedError

    @property
    def elements(self) -> list:
        raise NotImplementedError

    def translate(self, C: int, g: GroupElement) -> int:
        """Right translation of coset ``C`` by ``g``."""
        return self.mul(C, self.project(g))

    def translation(self, g: GroupElement) -> list[int]:
        """The permutation ``C -> C*g`` of coset indices."""
        k = self.project(g)
        return [self.mul(C, k) for C in range(self.index)]

    def label(self) -> str:
        return self.params.label()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.group}, {self.label()}, index={self.index})"


class AbelianQuotient(FiniteQuotient):
    is_abelian = True

    def __init__(self, group: GroupSpec, moduli: Sequence[int]):
        if len(moduli) != group.rank:
            raise ValueError(f"{group} needs {group.rank} moduli, got {len(moduli)}")
        if any(n < 1 for n in moduli):
            raise ValueError("moduli must be >= 1")
        self.group = group
        self.moduli = tuple(int(n) for n in moduli)
        self.params = QuotientParams(moduli=self.moduli)
        self.index = math.prod(self.moduli)
        strides = []
        s = 1
        for n in reversed(self.moduli):
            strides.append(s)
            s *= n
        self.strides = tuple(reversed(strides))

    def encode(self, v: Sequence[int]) -> int:
        return sum((x % n) * s for x, n, s in zip(v, self.moduli, self.strides))

    def decode(self, i: int) -> tuple[int, ...]:
        return tuple((i // s) % n for n, s in zip(self.moduli, self.strides))

    def project(self, g: GroupElement) -> int:
        if g.group != self.group:
            raise FamilyMismatch(f"{g.group} element projected to a quotient of {self.group}")
        return self.encode(g.word)

    def mul(self, i: int, j: int) -> int:
        return self.encode([x + y for x, y in zip(self.decode(i), self.decode(j))])

    def inv(self, i: int) -> int:
        return self.encode([-x for x in self.decode(i)])

    def translation(self, g: GroupElement) -> list[int]:
        shift = self.decode(self.project(g))
        return [self.encode([x + y for x, y in zip(self.decode(C), shift)]) for C in range(self.index)]

    @cached_property
    def elements(self) -> list[tuple[int, ...]]:
        return [self.decode(i) for i in range(self.index)]


class HeisenbergQuotient(FiniteQuotient):
    def __init__(self, group: GroupSpec, n: int):
        if n < 1:
            raise ValueError("modulus must be >= 1")
        self.group = group
        self.n = int(n)
        self.params = QuotientParams(modulus=self.n)
        self.index = self.n**3
        self.is_abelian = self.n == 1

    def encode(self, t: Sequence[int]) -> int:
        n = self.n
        return ((t[0] % n) * n + t[1] % n) * n + t[2] % n

    def decode(self, i: int) -> tuple[int, int, int]:
        n = self.n
        return (i // (n * n), (i // n) % n, i % n)

    def project(self, g: GroupElement) -> int:
        if g.group != self.group:
            raise FamilyMismatch(f"{g.group} element projected to a quotient of {self.group}")
        return self.encode(g.word)

    def mul(self, i: int, j: int) -> int:
        a, b, c = self.decode(i)
        a2, b2, c2 = self.decode(j)
        return self.encode((a + a2, b + b2, c + c2 + a * b2))

    def inv(self, i: int) -> int:
        a, b, c = self.decode(i)
        return self.encode((-a, -b, a * b - c))

    @cached_property
    def elements(self) -> list[tuple[int, int, int]]:
        return [self.decode(i) for i in range(self.index)]


class PermutationQuotient(FiniteQuotient):
    """Quotient of a free group by the kernel of a map onto a permutation group."""

    def __init__(self, group: GroupSpec, images: Sequence[Sequence[int]], cap: int = DEFAULT_QUOTIENT_CAP):
        if len(images) != group.rank:
            raise ValueError(f"{group} needs {group.rank} generator images, got {len(images)}")
        perms = [tuple(int(x) for x in p) for p in images]
        m = len(perms[0]) if perms else 0
        for p in perms:
            if len(p) != m or sorted(p) != list(range(m)):
                raise ValueError(f"{p} is not a permutation of 0..{m - 1}")
        self.group = group
        self.images = tuple(perms)
        self.params = QuotientParams(generators=self.images)
        ident = tuple(range(m))
        elems = [ident]
        where = {ident: 0}
        queue = deque([ident])
        while queue:
            p = queue.popleft()
            for s in perms:
                q = _perm_mul(p, s)
                if q not in where:
                    where[q] = len(elems)
                    elems.append(q)
                    if len(elems) > cap:
                        raise QuotientTooLarge(f"image group order exceeds the cap {cap}")
                    queue.append(q)
        self._elements = elems
        self._where = where
        self.index = len(elems)
        self._gen_idx = [where[p] for p in perms]
        self._gen_inv_idx = [where[_perm_inv(p)] for p in perms]
        self.is_abelian = all(
            _perm_mul(p, q) == _perm_mul(q, p) for p in perms for q in perms
        )

    @property
    def elements(self) -> list[tuple[int, ...]]:
        return self._elements

    def project(self, g: GroupElement) -> int:
        if g.group != self.group:
            raise FamilyMismatch(f"{g.group} element projected to a quotient of {self.group}")
        p = self._elements[0]
        for x in g.word:
            p = _perm_mul(p, self.images[x - 1] if x > 0 else _perm_inv(self.images[-x - 1]))
        return self._where[p]

    def mul(self, i: int, j: int) -> int:
        return self._where[_perm_mul(self._elements[i], self._elements[j])]

    def inv(self, i: int) -> int:
        return self._where[_perm_inv(self._elements[i])]


def build_quotient(spec: GroupSpec, params: QuotientParams, cap: int = DEFAULT_QUOTIENT_CAP) -> FiniteQuotient:
    if spec.family == FREE_ABELIAN:
        if params.moduli is None:
            raise ValueError(f"{spec} quotients need 'moduli'")
        return AbelianQuotient(spec, params.moduli)
    if spec.family == HEISENBERG:
        if params.modulus is None:
            raise ValueError("Heisenberg quotients need 'modulus'")
        return HeisenbergQuotient(spec, params.modulus)
    if params.generators is None:
        raise ValueError(f"{spec} quotients need permutation 'generators'")
    return PermutationQuotient(spec, params.generators, cap=cap)


def coset_translate(q: FiniteQuotient, C: int, g: GroupElement) -> int:
    if not 0 <= C < q.index:
        raise IndexError(f"coset {C} out of range for index {q.index}")
    return q.translate(C, g)


def random_element(spec: GroupSpec, rng, size: int = 3) -> GroupElement:
    """A random element of moderate length, for property tests."""
    if spec.family == FREE:
        letters = [int(x) for x in rng.integers(1, spec.rank + 1, size=size)]
        signs = [1 if s else -1 for s in rng.integers(0, 2, size=size)]
        return spec.element([l * s for l, s in zip(letters, signs)])
    if spec.family == FREE_ABELIAN:
        return spec.element([int(x) for x in rng.integers(-size, size + 1, size=spec.rank)])
    return spec.element([int(x) for x in rng.integers(-size, size + 1, size=3)])

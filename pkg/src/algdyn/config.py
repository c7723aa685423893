"""Experiment configuration documents.

A config is one JSON object. Exact numbers are written as ``"p/q"`` strings
(plain integers and decimal strings are accepted too). Every validation
failure raises :class:`ParseError` naming the offending field path.

Example::

    {
      "group": {"family": "free_abelian", "rank": 1},
      "f": [["a", 1], ["e", -2]],
      "quotients": [{"cyclic": [1, 24]}],
      "seed": 7
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import ParseError
from .group_ring import RingElement
from .groups import FAMILIES, GroupElement, GroupSpec, QuotientParams, parse_cycles


def _where(path: str, msg: str) -> ParseError:
    return ParseError(f"{path}: {msg}")


def parse_rational(value: Any, path: str) -> Fraction:
    if isinstance(value, bool):
        raise _where(path, f"expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise _where(path, f"not a rational number: {value!r}") from None
    raise _where(path, f"expected a number or 'p/q' string, got {type(value).__name__}")


def parse_positive_rational(value: Any, path: str) -> Fraction:
    r = parse_rational(value, path)
    if r <= 0:
        raise _where(path, f"must be positive, got {value!r}")
    return r


def parse_int(value: Any, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _where(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise _where(path, f"must be >= {minimum}, got {value}")
    return value


def parse_group(obj: Any, path: str = "group") -> GroupSpec:
    if not isinstance(obj, dict):
        raise _where(path, "expected an object with 'family' and 'rank'")
    fam = obj.get("family")
    if fam not in FAMILIES:
        raise _where(f"{path}.family", f"unknown family {fam!r}; expected one of {', '.join(FAMILIES)}")
    rank = parse_int(obj.get("rank", 2 if fam == "heisenberg" else 1), f"{path}.rank", 1)
    return GroupSpec(fam, rank)


def parse_word(group: GroupSpec, word: Any, path: str) -> GroupElement:
    if not isinstance(word, str):
        raise _where(path, f"expected a word string, got {word!r}")
    try:
        return group.parse(word)
    except ParseError as exc:
        raise _where(path, str(exc)) from None


def parse_ring_element(group: GroupSpec, obj: Any, path: str = "f") -> RingElement:
    """A list of ``[word, coefficient]`` pairs; the coefficient may be ``"p/q"``."""
    if not isinstance(obj, list) or not obj:
        raise _where(path, "expected a non-empty list of [word, coefficient] pairs")
    coeffs: dict[GroupElement, Fraction] = {}
    for i, entry in enumerate(obj):
        p = f"{path}[{i}]"
        if not isinstance(entry, list) or len(entry) != 2:
            raise _where(p, "expected [word, coefficient]")
        g = parse_word(group, entry[0], f"{p}[0]")
        coeffs[g] = coeffs.get(g, Fraction(0)) + parse_rational(entry[1], f"{p}[1]")
    out = RingElement(group, coeffs)
    if out.is_zero():
        raise _where(path, "ring element is zero")
    return out


def parse_window(group: GroupSpec, obj: Any, path: str) -> tuple[GroupElement, ...]:
    if not isinstance(obj, list) or not obj:
        raise _where(path, "expected a non-empty list of words")
    W = tuple(parse_word(group, w, f"{path}[{i}]") for i, w in enumerate(obj))
    if len(set(W)) != len(W):
        raise _where(path, "window has repeated elements")
    return W


_FORM_FAMILY = {
    "cyclic": "free_abelian",
    "diagonal": "free_abelian",
    "moduli": "free_abelian",
    "modulus": "heisenberg",
    "generators": "free",
}


def parse_quotient(group: GroupSpec, obj: Any, path: str) -> list[QuotientParams]:
    """One entry of a quotient list; range shorthands expand to several."""
    if not isinstance(obj, dict):
        raise _where(path, "expected an object")
    for key, fam in _FORM_FAMILY.items():
        if key in obj and group.family != fam:
            raise _where(path, f"'{key}' quotients need a {fam.replace('_', ' ')} group, not {group}")
    if "cyclic" in obj:
        lo, hi = _range(obj["cyclic"], f"{path}.cyclic")
        return [QuotientParams(moduli=(n,) + (1,) * (group.rank - 1)) for n in range(lo, hi + 1)]
    if "diagonal" in obj:
        ns = obj["diagonal"]
        if not isinstance(ns, list):
            raise _where(f"{path}.diagonal", "expected a list of moduli")
        return [QuotientParams(moduli=(parse_int(n, f"{path}.diagonal[{i}]", 1),) * group.rank) for i, n in enumerate(ns)]
    if "moduli" in obj:
        ms = obj["moduli"]
        if not isinstance(ms, list) or len(ms) != group.rank:
            raise _where(f"{path}.moduli", f"expected {group.rank} moduli")
        return [QuotientParams(moduli=tuple(parse_int(n, f"{path}.moduli[{i}]", 1) for i, n in enumerate(ms)))]
    if "modulus" in obj:
        return [QuotientParams(modulus=parse_int(obj["modulus"], f"{path}.modulus", 1))]
    if "generators" in obj:
        gens = obj["generators"]
        if not isinstance(gens, list) or len(gens) != group.rank:
            raise _where(f"{path}.generators", f"expected {group.rank} permutations")
        degree = obj.get("degree")
        images = []
        for i, g in enumerate(gens):
            p = f"{path}.generators[{i}]"
            if isinstance(g, str):
                try:
                    images.append(parse_cycles(g, degree))
                except ParseError as exc:
                    raise _where(p, str(exc)) from None
            elif isinstance(g, list):
                images.append(tuple(parse_int(v, f"{p}[{j}]", 0) for j, v in enumerate(g)))
            else:
                raise _where(p, "expected cycle notation or an image list")
        n = max(len(x) for x in images)
        images = [x + tuple(range(len(x), n)) for x in images]
        for i, img in enumerate(images):
            if sorted(img) != list(range(n)):
                raise _where(f"{path}.generators[{i}]", "not a permutation")
        return [QuotientParams(generators=tuple(images))]
    raise _where(path, "expected one of 'cyclic', 'diagonal', 'moduli', 'modulus', 'generators'")


def _range(obj: Any, path: str) -> tuple[int, int]:
    if not isinstance(obj, list) or len(obj) != 2:
        raise _where(path, "expected [first, last]")
    lo = parse_int(obj[0], f"{path}[0]", 1)
    hi = parse_int(obj[1], f"{path}[1]", lo)
    return lo, hi


def parse_quotients(group: GroupSpec, obj: Any, path: str = "quotients") -> list[QuotientParams]:
    if not isinstance(obj, list) or not obj:
        raise _where(path, "expected a non-empty list of quotients")
    out: list[QuotientParams] = []
    for i, q in enumerate(obj):
        out.extend(parse_quotient(group, q, f"{path}[{i}]"))
    return out


@dataclass
class ExperimentConfig:
    group: GroupSpec
    f: RingElement
    quotients: list[QuotientParams]
    seed: int | None
    sections: dict[str, Any] = field(default_factory=dict)
    source: str = "<memory>"

    def section(self, name: str) -> dict[str, Any]:
        sec = self.sections.get(name, {})
        if not isinstance(sec, dict):
            raise _where(name, "expected an object")
        return sec

    def require_seed(self, command: str) -> int:
        if self.seed is None:
            raise _where("seed", f"'{command}' is stochastic and needs a seed (config 'seed' or --seed)")
        return self.seed


def parse_config(doc: Any, source: str = "<memory>") -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be a JSON object")
    group = parse_group(doc.get("group"))
    if "f" not in doc:
        raise _where("f", "missing")
    f = parse_ring_element(group, doc["f"])
    quotients = parse_quotients(group, doc["quotients"]) if "quotients" in doc else []
    seed = doc.get("seed")
    if seed is not None:
        seed = parse_int(seed, "seed", 0)
    known = {"group", "f", "quotients", "seed"}
    sections = {k: v for k, v in doc.items() if k not in known}
    return ExperimentConfig(group, f, quotients, seed, sections, source)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return parse_config(doc, str(path))

"""The acceptance suite: nine checks of exact identities, oracle agreement
and reproducibility. Each check returns a deterministic payload; wall-clock
times are kept apart so that payloads can be compared byte for byte."""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import linalg
from .dynamics import QuotientDynamics, reference_marginal_bernoulli, reference_marginal_fixed_points
from .entropy_mc import (
    count_encoded_fixed_points,
    exhaustive_model_count,
    l1_distance,
    theorem31_bound_check,
)
from .errors import BoundInapplicable
from .expansive import (
    dominance_certificate,
    fhat,
    inverse_residual,
    neumann_inverse,
    select_window,
)
from .fk_det import character_determinant_abelian, mahler_measure
from .group_ring import RingElement
from .groups import GroupSpec, QuotientParams, build_quotient, parse_cycles
from .quotient_operator import (
    convolution_matrix,
    exact_determinant,
    fixed_point_count,
    fraction_free_determinant,
    growth_rate_series,
    modular_determinant,
    smith_normal_form,
)
from .torus import TorusPoint

DEFAULT_SEED = 20240521

# exhaustive count for criterion 7 at epsilon = 2/5, W = {e, a}, pinned by
# the enumeration itself for the default seed
FROZEN_MICROCOUNT = {DEFAULT_SEED: 18}

Z1 = GroupSpec.free_abelian(1)
Z2 = GroupSpec.free_abelian(2)
HEIS = GroupSpec.heisenberg()
F2 = GroupSpec.free(2)

FIVE_POINT = [("e", 5), ("a", -1), ("a^-1", -1), ("b", -1), ("b^-1", -1)]


def a_minus_2() -> RingElement:
    return RingElement.from_terms(Z1, [("a", 1), ("e", -2)])


def three_minus_a() -> RingElement:
    return RingElement.from_terms(Z1, [("e", 3), ("a", -1)])


def five_point(group: GroupSpec) -> RingElement:
    return RingElement.from_terms(group, FIVE_POINT)


def s4_quotient() -> QuotientParams:
    return QuotientParams(generators=(parse_cycles("(1 2)", 4), parse_cycles("(1 2 3 4)", 4)))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    payload: dict[str, Any]
    seconds: float = 0.0
    limit_seconds: float | None = None

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} ({self.seconds:.1f}s)"

    def to_json(self) -> dict:
        return {"criterion": self.number, "name": self.name, "passed": self.passed, "payload": self.payload}


def canonical_bytes(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str).encode()


def _seed(master: int, *path: int) -> list[int]:
    return [master, *path]


def brute_force_fixed_count(f: RingElement, q) -> int:
    """Count ``x`` in ``((1/D) Z / Z)^n`` with ``x A = 0 mod 1`` for ``D = |det A|``."""
    A = convolution_matrix(f, q)
    D = abs(exact_determinant(A))
    return sum(
        1 for num in itertools.product(range(D), repeat=q.index) if A.annihilates(TorusPoint(num, D))
    )


# ---------------------------------------------------------------------------


def criterion_1(seed: int, threads: int) -> tuple[bool, dict]:
    f = a_minus_2()
    rows, ok = [], True
    for n in range(1, 25):
        q = build_quotient(Z1, QuotientParams(moduli=(n,)))
        count = fixed_point_count(f, q)
        chi = character_determinant_abelian(f, (n,), verify=False)
        good = count == 2**n - 1 and abs(chi.log_abs - math.log(2**n - 1)) <= 1e-12 * max(1.0, chi.log_abs)
        if chi.exact is not None:
            good &= chi.exact == count
        brute = brute_force_fixed_count(f, q) if n <= 3 else None
        if brute is not None:
            good &= brute == count
        ok &= good
        rows.append({"n": n, "count": str(count), "brute_force": brute, "ok": good})
    return ok, {"rows": rows}


def criterion_2(seed: int, threads: int) -> tuple[bool, dict]:
    f = a_minus_2()
    series = growth_rate_series(f, Z1, [QuotientParams(moduli=(n,)) for n in range(2, 25)], threads=threads)
    vals = [p.log_count_over_index for p in series]
    gap = abs(vals[-1] - math.log(2))
    monotone = all(b > a for a, b in zip(vals, vals[1:]))
    return gap < 1e-5 and monotone, {
        "series": [[p.index, repr(p.log_count_over_index)] for p in series],
        "gap_at_24": repr(gap),
        "monotone": monotone,
    }


def criterion_3(seed: int, threads: int) -> tuple[bool, dict]:
    f = five_point(Z2)
    exact_rows, ok = [], True
    for m in [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)]:
        det = abs(exact_determinant(convolution_matrix(f, build_quotient(Z2, QuotientParams(moduli=m)))))
        chi = character_determinant_abelian(f, m, verify=False)
        good = chi.exact == det
        ok &= good
        exact_rows.append({"moduli": list(m), "exact": str(det), "character": str(chi.exact), "ok": good})
    log_rows = []
    last = None
    for n in (4, 8, 16, 32, 64):
        det = abs(exact_determinant(convolution_matrix(f, build_quotient(Z2, QuotientParams(moduli=(n, n))))))
        chi = character_determinant_abelian(f, (n, n), verify=False)
        exact_log = _log_int(det)
        rel = abs(exact_log - chi.log_abs) / abs(exact_log)
        good = rel <= 1e-9
        ok &= good
        last = exact_log / (n * n)
        log_rows.append({"moduli": [n, n], "log_exact": repr(exact_log), "log_character": repr(chi.log_abs), "relative": repr(rel), "ok": good})
    m512 = mahler_measure(f, 512)
    m256 = mahler_measure(f, 256)
    gap = abs(last - m512)
    delta = abs(m512 - m256)
    ok &= gap < 1e-3 and delta < 1e-6
    return ok, {
        "exact": exact_rows,
        "log": log_rows,
        "log_det_over_index_64": repr(last),
        "mahler_512": repr(m512),
        "mahler_256": repr(m256),
        "gap": repr(gap),
        "mahler_delta": repr(delta),
    }


def _log_int(n: int) -> float:
    """``log n`` for integers far beyond float range."""
    bits = n.bit_length()
    shift = max(0, bits - 60)
    return math.log(n >> shift) + shift * math.log(2)


def criterion_4(seed: int, threads: int) -> tuple[bool, dict]:
    rng = np.random.default_rng(np.random.SeedSequence(_seed(seed, 4)))
    rows, ok = [], True
    for i in range(100):
        dim = int(rng.integers(1, 13))
        A = rng.integers(-9, 10, size=(dim, dim)).tolist()
        d1 = fraction_free_determinant(A)
        d2 = modular_determinant(A)
        good = d1 == d2
        snf = smith_normal_form(A)
        if d1 != 0:
            good &= math.prod(snf.divisors) == abs(d1)
        D = linalg.matmul(linalg.matmul(snf.U, A), snf.V)
        good &= all(D[r][c] == (snf.divisors[r] if r == c else 0) for r in range(dim) for c in range(dim))
        ok &= good
        rows.append({"dim": dim, "det": str(d1), "ok": good})
    return ok, {"instances": rows}


def roundtrip_cases() -> list[tuple[str, RingElement, QuotientParams]]:
    return [
        ("Z/2520", three_minus_a(), QuotientParams(moduli=(2520,))),
        ("Z^2 mod (12,12)", five_point(Z2), QuotientParams(moduli=(12, 12))),
        ("Heisenberg mod 3", five_point(HEIS), QuotientParams(modulus=3)),
        ("F_2 -> S_4", five_point(F2), s4_quotient()),
    ]


def roundtrip_failures(dyn: QuotientDynamics, nsamples: int, seed) -> tuple[int, int]:
    """(failures, largest |P| seen) over ``nsamples`` uniform fixed points."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    fails, top = 0, 0
    for _ in range(nsamples):
        x = dyn.fix.sample(rng)
        P = dyn.P(x)
        big = max(map(abs, P))
        top = max(top, big)
        if dyn.xi(P) != x or big > dyn.config.bound_M:
            fails += 1
    return fails, top


def criterion_5(seed: int, threads: int, nsamples: int = 1000) -> tuple[bool, dict]:
    rows, ok = [], True
    for k, (name, f, params) in enumerate(roundtrip_cases()):
        assert dominance_certificate(f)
        dyn = QuotientDynamics(f, build_quotient(f.group, params))
        fails, top = roundtrip_failures(dyn, nsamples, _seed(seed, 5, k))
        ok &= fails == 0
        rows.append({
            "quotient": name,
            "index": dyn.q.index,
            "fixed_points": str(dyn.fix.order),
            "samples": nsamples,
            "failures": fails,
            "max_abs_P": top,
            "M": dyn.config.bound_M,
        })
    return ok, {"cases": rows}


def criterion_6(seed: int, threads: int, nsamples: int = 100_000) -> tuple[bool, dict]:
    f = three_minus_a()
    W = [Z1.parse(w) for w in ("e", "a", "a^2")]
    s_bern, s_fix = _seed(seed, 6, 0), _seed(seed, 6, 1)
    bern = reference_marginal_bernoulli(f, W, 100, nsamples, s_bern, threads=threads)
    dyn = QuotientDynamics(f, build_quotient(Z1, QuotientParams(moduli=(2520,))))
    fixed = reference_marginal_fixed_points(dyn, W, nsamples, s_fix, threads=threads)
    tv = l1_distance(bern, fixed) / 2
    return tv <= Fraction(1, 20), {
        "seeds": {"bernoulli": s_bern, "fixed_points": s_fix},
        "kappa": str(dyn.config.kappa),
        "tv": str(tv),
        "tv_float": repr(float(tv)),
        "bernoulli": bern.to_json(),
        "fixed_points": fixed.to_json(),
    }


def criterion_7(seed: int, threads: int, nsamples: int = 100_000) -> tuple[bool, dict]:
    f = a_minus_2()
    q = build_quotient(Z1, QuotientParams(moduli=(6,)))
    small = QuotientDynamics(f, q)
    cfg = small.config
    big = QuotientDynamics(f, build_quotient(Z1, QuotientParams(moduli=(2520,))))
    e, a = Z1.parse("e"), Z1.parse("a")
    ref_ea = reference_marginal_fixed_points(big, [e, a], nsamples, _seed(seed, 7, 0), threads=threads)
    ref_e = ref_ea.marginal([0])
    eps_grid = [Fraction(1, 5), Fraction(2, 5), Fraction(4, 5), Fraction(8, 5)]
    ok = True
    runs = []
    counts: dict[tuple[str, Fraction], int] = {}
    for label, W, ref in (("{e,a}", (e, a), ref_ea), ("{e}", (e,), ref_e)):
        for eps in eps_grid:
            rep = exhaustive_model_count(f, q, W, ref, eps, cfg, threads=threads, fix_count=small.fix.order)
            enc = count_encoded_fixed_points(f, q, W, ref, eps, cfg)
            counts[(label, eps)] = rep.count
            row = {"window": label, "epsilon": str(eps), "count": rep.count, "encoded": enc,
                   "sound": rep.count >= enc}
            ok &= rep.count >= enc
            try:
                chk = theorem31_bound_check(rep, f)
                row["bound"] = chk.to_json()
                ok &= chk.holds
            except BoundInapplicable as exc:
                row["bound"] = f"inapplicable: {exc}"
            runs.append(row)
    eps_monotone = all(
        counts[(lab, x)] <= counts[(lab, y)] for lab in ("{e,a}", "{e}") for x, y in zip(eps_grid, eps_grid[1:])
    )
    window_monotone = all(counts[("{e,a}", x)] <= counts[("{e}", x)] for x in eps_grid)
    ok &= eps_monotone and window_monotone

    # window chosen per the counting argument: M * (off-window mass of fhat) < delta
    # with delta = eps / 8 (rho_* mu_f is Lebesgue for this f)
    selected = []
    for eps in eps_grid:
        if 2 * eps * len(f.coeffs) >= 1:
            continue
        fh = fhat(neumann_inverse(f, eps / (80 * cfg.bound_M)))
        Ws = tuple(select_window(fh, cfg.bound_M, eps / 8))
        ref_s = reference_marginal_fixed_points(big, Ws, nsamples, _seed(seed, 7, 1), threads=threads)
        rep = exhaustive_model_count(f, q, Ws, ref_s, eps, cfg, threads=threads, fix_count=small.fix.order)
        enc = count_encoded_fixed_points(f, q, Ws, ref_s, eps, cfg)
        chk = theorem31_bound_check(rep, f)
        ok &= chk.holds and rep.count >= enc
        selected.append({"epsilon": str(eps), "window": [str(w) for w in Ws], "count": rep.count,
                         "encoded": enc, "bound": chk.to_json()})

    pinned = FROZEN_MICROCOUNT.get(seed)
    observed = counts[("{e,a}", Fraction(2, 5))]
    if pinned is not None:
        ok &= observed == pinned
    return ok, {
        "reference_seed": _seed(seed, 7, 0),
        "kappa": str(cfg.kappa),
        "M": cfg.bound_M,
        "fix_count": small.fix.order,
        "runs": runs,
        "epsilon_monotone": eps_monotone,
        "window_monotone": window_monotone,
        "selected_windows": selected,
        "regression": {"observed": observed, "pinned": pinned},
    }


def criterion_8(seed: int, threads: int) -> tuple[bool, dict]:
    ok = True
    certs = []
    for name, f, expect, margin in (
        ("3 - a on Z", three_minus_a(), True, Fraction(2, 3)),
        ("5 - a - b - a^-1 - b^-1 on F_2", five_point(F2), True, Fraction(1, 5)),
        ("1 - a on Z", RingElement.from_terms(Z1, [("e", 1), ("a", -1)]), False, None),
    ):
        c = dominance_certificate(f)
        good = c.certified == expect and (margin is None or c.margin == margin)
        ok &= good
        certs.append({"f": name, "certified": c.certified, "margin": str(c.margin), "ok": good})
    tols = [Fraction(1, 10**k) for k in range(1, 7)]
    runs = []
    cases = [("3 - a on Z", three_minus_a(), tols), ("five-point on Z^2", five_point(Z2), tols),
             # the Neumann support on F_2 grows like 3^K; only the loosest tolerance is tractable
             ("five-point on F_2", five_point(F2), tols[:1])]
    for name, f, tl in cases:
        for tol in tl:
            inv = neumann_inverse(f, tol)
            res = inverse_residual(f, inv)
            bound = f.l1_norm() * inv.tail_bound
            good = res <= bound and inv.tail_bound <= tol
            ok &= good
            runs.append({"f": name, "tol": str(tol), "order": inv.order, "residual": repr(float(res)),
                         "bound": repr(float(bound)), "ok": good})
    return ok, {"certificates": certs, "neumann": runs}


CRITERIA: dict[int, tuple[str, Callable, float | None]] = {
    1: ("exact periodic-point counts on Z", criterion_1, 1.0),
    2: ("growth-rate convergence on Z", criterion_2, None),
    3: ("triple determinant agreement on Z^2", criterion_3, 60.0),
    4: ("exact linear algebra cross-validation", criterion_4, None),
    5: ("roundtrip identities", criterion_5, None),
    6: ("sampler cross-validation", criterion_6, 120.0),
    7: ("microcount soundness", criterion_7, 600.0),
    8: ("certification behaviour", criterion_8, None),
}

# criteria whose code paths depend on the worker count
THREADED = (2, 5, 6, 7)


def run_criterion(number: int, seed: int = DEFAULT_SEED, threads: int = 1) -> CriterionResult:
    name, fn, limit = CRITERIA[number]
    t0 = time.perf_counter()
    passed, payload = fn(seed, threads)
    dt = time.perf_counter() - t0
    if limit is not None and dt > limit:
        passed = False
        payload = dict(payload, runtime_exceeded=True)
    return CriterionResult(number, name, passed, payload, dt, limit)


def criterion_9(seed: int, reference: dict[int, CriterionResult] | None = None,
                thread_counts=(1, 4), numbers=THREADED) -> CriterionResult:
    """Recompute the thread-sensitive criteria at each worker count, twice at
    the first, and require byte-identical payloads."""
    t0 = time.perf_counter()
    digests: dict[int, list[bytes]] = {n: [] for n in numbers}
    for n in numbers:
        if reference is not None and n in reference:
            digests[n].append(canonical_bytes(reference[n].to_json()))
        runs = list(thread_counts) + ([thread_counts[0]] if reference is None else [])
        for t in runs:
            digests[n].append(canonical_bytes(run_criterion(n, seed, t).to_json()))
    same = {n: all(d == v[0] for d in v) for n, v in digests.items()}
    payload = {"thread_counts": list(thread_counts), "identical": {str(n): s for n, s in same.items()}}
    return CriterionResult(9, "determinism across runs and thread counts", all(same.values()), payload,
                           time.perf_counter() - t0)


def run_suite(seed: int = DEFAULT_SEED, threads: int = 1, numbers=None, log=print) -> list[CriterionResult]:
    numbers = list(numbers or range(1, 10))
    results: dict[int, CriterionResult] = {}
    for n in numbers:
        if n == 9:
            res = criterion_9(seed, results)
        else:
            res = run_criterion(n, seed, threads)
        results[n] = res
        if log is not None:
            log(res.line)
    return [results[n] for n in numbers]

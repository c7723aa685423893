"""``algdyn`` command line front-end.

Every command reads a JSON config (see :mod:`algdyn.config`) and writes its
reports into ``--out``. Report files depend only on the config, the seed and
the code; wall-clock data goes to ``metadata.json``. Refusals exit with
status 2 and print ``{"error": <code>, "message": ...}`` to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, acceptance, plotting
from .config import (
    ExperimentConfig,
    load_config,
    parse_int,
    parse_positive_rational,
    parse_quotient,
    parse_window,
)
from .dynamics import (
    BernoulliWindowSampler,
    bound_for,
    QuotientDynamics,
    bernoulli_truncation,
    reference_marginal_bernoulli,
    reference_marginal_fixed_points,
)
from .entropy_mc import (
    count_encoded_fixed_points,
    exhaustive_model_count,
    theorem31_bound_check,
)
from .errors import AlgDynError, BoundInapplicable, EnumerationCapExceeded, NotCertified, ParseError
from .expansive import dominance_certificate, inverse_residual, neumann_inverse
from .fk_det import fk_estimate
from .groups import build_quotient
from .quotient_operator import growth_rate_series

COMMANDS = ("certify", "fixcount", "fkdet", "sample", "marginal", "microcount", "verify")


class Refusal(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"


class Reporter:
    def __init__(self, out: Path):
        self.out = out
        self.files: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def json(self, name: str, obj: Any) -> Path:
        return self._write(name, _dump(obj))

    def csv(self, name: str, header: list[str], rows: list[list[Any]]) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return self._write(name, buf.getvalue())

    def jsonl(self, name: str, rows) -> Path:
        return self._write(name, "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))

    def _write(self, name: str, text: str) -> Path:
        path = self.out / name
        path.write_text(text)
        self.files.append(name)
        return path

    def figure(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_certify(cfg: ExperimentConfig, rep: Reporter, args) -> int:
    cert = dominance_certificate(cfg.f)
    body: dict[str, Any] = {
        "f": cfg.f.to_entries(),
        "group": str(cfg.group),
        "certified": cert.certified,
        "margin": None if cert.margin is None else str(cert.margin),
    }
    if not cert.certified:
        body["reason"] = cert.reason
        rep.json("certify.json", body)
        raise Refusal(NotCertified.code, f"f is not dominance-certified: {cert.reason}")
    sec = cfg.section("certify")
    tols = sec.get("tolerances", [])
    if not isinstance(tols, list):
        raise ParseError("certify.tolerances: expected a list")
    runs = []
    for i, t in enumerate(tols):
        tol = parse_positive_rational(t, f"certify.tolerances[{i}]")
        inv = neumann_inverse(cfg.f, tol)
        res = inverse_residual(cfg.f, inv)
        runs.append({
            "tolerance": str(tol),
            "order": inv.order,
            "tail_bound": str(inv.tail_bound),
            "residual": repr(float(res)),
            "residual_within_bound": res <= cfg.f.l1_norm() * inv.tail_bound,
        })
    if runs:
        body["neumann"] = runs
    rep.json("certify.json", body)
    print(json.dumps({"certified": True, "margin": str(cert.margin)}))
    return 0


def _quotients(cfg: ExperimentConfig, command: str):
    if not cfg.quotients:
        raise ParseError(f"quotients: '{command}' needs a non-empty quotient list")
    return cfg.quotients


def cmd_fixcount(cfg: ExperimentConfig, rep: Reporter, args) -> int:
    series = growth_rate_series(cfg.f, cfg.group, _quotients(cfg, "fixcount"), threads=args.threads)
    rows = [[p.label, p.index, str(p.count), repr(p.log_count_over_index)] for p in series]
    rep.csv("fixcount.csv", ["quotient", "index", "count", "log_count_over_index"], rows)
    plotting.plot_growth([p.index for p in series], [p.log_count_over_index for p in series],
                         rep.figure("fixcount.png"), title=f"periodic points, {cfg.group}")
    for p in series:
        print(f"{p.label},{p.index},{p.count}")
    return 0


def cmd_fkdet(cfg: ExperimentConfig, rep: Reporter, args) -> int:
    grid = cfg.section("fkdet").get("grid")
    if grid is not None:
        grid = parse_int(grid, "fkdet.grid", 2)
    report = fk_estimate(cfg.f, _quotients(cfg, "fkdet"), threads=args.threads, grid=grid)
    body = report.to_json()
    body["f"] = cfg.f.to_entries()
    body["group"] = str(cfg.group)
    rep.json("fkdet.json", body)
    rep.csv("fkdet.csv", ["index", "log_det_over_index"], [[i, repr(v)] for i, v in report.series])
    plotting.plot_growth([i for i, _ in report.series], [v for _, v in report.series],
                         rep.figure("fkdet.png"), oracle=report.oracle_value, oracle_label=report.oracle,
                         title=f"log det estimate, {cfg.group}")
    print(json.dumps({"oracle": report.oracle, "oracle_value": report.oracle_value, "gap": report.gap}))
    return 0


def _window(cfg: ExperimentConfig, sec: dict, name: str, required: bool = True):
    if "window" not in sec:
        if required:
            raise ParseError(f"{name}.window: missing")
        return None
    return parse_window(cfg.group, sec["window"], f"{name}.window")


def _single_quotient(cfg: ExperimentConfig, obj: Any, path: str):
    qs = parse_quotient(cfg.group, obj, path)
    if len(qs) != 1:
        raise ParseError(f"{path}: expected a single quotient")
    return qs[0]


def cmd_sample(cfg: ExperimentConfig, rep: Reporter, args) -> int:
    sec = cfg.section("sample")
    seed = cfg.require_seed("sample")
    count = parse_int(sec.get("count", 10), "sample.count", 1)
    route = sec.get("route", "fixed_points")
    W = _window(cfg, sec, "sample", required=route == "bernoulli")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rows = []
    if route == "fixed_points":
        params = _single_quotient(cfg, sec.get("quotient"), "sample.quotient")
        dyn = QuotientDynamics(cfg.f, build_quotient(cfg.group, params))
        if W is None:
            for i in range(count):
                x = dyn.fix.sample(rng)
                rows.append({"sample": i, "point": x.to_strings()})
        else:
            sampler = dyn.identity_window_sampler(W)
            for i in range(count):
                rows.append({"sample": i, "window": [str(w) for w in W], "symbols": list(sampler.draw(rng))})
    elif route == "bernoulli":
        n = parse_int(sec.get("n"), "sample.n", 1)
        sampler = BernoulliWindowSampler(cfg.f, bernoulli_truncation(cfg.f, n), n, W)
        for i in range(count):
            rows.append({"sample": i, "window": [str(w) for w in W], "symbols": list(sampler.sample(rng))})
    else:
        raise ParseError(f"sample.route: unknown route {route!r}; expected 'fixed_points' or 'bernoulli'")
    rep.jsonl("samples.jsonl", rows)
    return 0


def _marginal(cfg: ExperimentConfig, sec: dict, name: str, W, seed, threads):
    sampler = sec.get("sampler")
    nsamples = parse_int(sec.get("nsamples", 10_000), f"{name}.nsamples", 1)
    if not isinstance(sampler, dict) or len(sampler) != 1:
        raise ParseError(f"{name}.sampler: expected {{'bernoulli': n}} or {{'fixed_points': quotient}}")
    if "bernoulli" in sampler:
        n = parse_int(sampler["bernoulli"], f"{name}.sampler.bernoulli", 1)
        return reference_marginal_bernoulli(cfg.f, W, n, nsamples, seed, threads=threads), f"bernoulli(n={n})"
    if "fixed_points" in sampler:
        params = _single_quotient(cfg, sampler["fixed_points"], f"{name}.sampler.fixed_points")
        dyn = QuotientDynamics(cfg.f, build_quotient(cfg.group, params))
        return reference_marginal_fixed_points(dyn, W, nsamples, seed, threads=threads), f"fixed_points({params.label()})"
    raise ParseError(f"{name}.sampler: unknown sampler {next(iter(sampler))!r}")


def cmd_marginal(cfg: ExperimentConfig, rep: Reporter, args) -> int:
    sec = cfg.section("marginal")
    seed = cfg.require_seed("marginal")
    W = _window(cfg, sec, "marginal")
    dist, label = _marginal(cfg, sec, "marginal", W, [seed, 0], args.threads)
    body = dist.to_json()
    body["sampler"] = label
    body["seed"] = seed
    rep.json("marginal.json", body)
    items = sorted(dist.counts.items())
    plotting.plot_marginal([str(k) for k, _ in items], [v / dist.total for _, v in items],
                           rep.figure("marginal.png"), title=f"window marginal, {label}")
    return 0


def cmd_microcount(cfg: ExperimentConfig, rep: Reporter, args) -> int:
    sec = cfg.section("microcount")
    seed = cfg.require_seed("microcount")
    W = _window(cfg, sec, "microcount")
    eps_list = sec.get("epsilon", ["2/5"])
    if not isinstance(eps_list, list) or not eps_list:
        raise ParseError("microcount.epsilon: expected a non-empty list")
    epsilons = [parse_positive_rational(e, f"microcount.epsilon[{i}]") for i, e in enumerate(eps_list)]
    cap = parse_int(sec.get("cap", 10**8), "microcount.cap", 1)
    ref_sec = sec.get("reference")
    if not isinstance(ref_sec, dict):
        raise ParseError("microcount.reference: expected an object with 'sampler' and 'nsamples'")
    quotients = [build_quotient(cfg.group, p) for p in _quotients(cfg, "microcount")]
    K = 2 * bound_for(cfg.f) + 1
    for params, q in zip(cfg.quotients, quotients):
        if K**q.index > cap:
            raise EnumerationCapExceeded(
                f"{params.label()}: (2M+1)^N = {K}^{q.index} exceeds the enumeration cap {cap}"
            )
    reference, label = _marginal(cfg, ref_sec, "microcount.reference", W, [seed, 0], args.threads)
    reports, rows = [], []
    for params, q in zip(cfg.quotients, quotients):
        dyn = QuotientDynamics(cfg.f, q)
        rates, bounds = [], []
        for eps in epsilons:
            r = exhaustive_model_count(cfg.f, dyn.q, W, reference, eps, dyn.config, cap=cap,
                                       threads=args.threads, fix_count=dyn.fix.order)
            body = r.to_json()
            body["quotient"] = params.label()
            try:
                body["encoded_fixed_points"] = count_encoded_fixed_points(cfg.f, dyn.q, W, reference, eps, dyn.config)
            except AlgDynError as exc:
                body["encoded_fixed_points"] = f"{exc.code}: {exc}"
            try:
                body["bound_check"] = theorem31_bound_check(r, cfg.f).to_json()
            except BoundInapplicable as exc:
                body["bound_check"] = f"inapplicable: {exc}"
            reports.append(body)
            rows.append([params.label(), r.index, str(eps), str(r.count), repr(r.log_count_over_index),
                         str(r.fix_count), "" if r.bound_value is None else repr(r.bound_value)])
            rates.append(r.log_count_over_index)
            bounds.append(r.bound_value)
        plotting.plot_microcount([float(e) for e in epsilons], rates, rep.figure(f"microcount_{dyn.q.index}.png"),
                                 bounds=bounds, title=f"model counts, {params.label()}")
    rep.json("microcount.json", {"reference_sampler": label, "seed": seed, "reference": reference.to_json(),
                                 "reports": reports})
    rep.csv("microcount.csv", ["quotient", "index", "epsilon", "count", "log_count_over_index", "fix_count",
                               "bound_per_index"], rows)
    return 0


def cmd_verify(cfg: ExperimentConfig | None, rep: Reporter, args) -> int:
    seed = args.seed if args.seed is not None else acceptance.DEFAULT_SEED
    numbers = None
    if cfg is not None:
        seed = cfg.seed if cfg.seed is not None else seed
        sec = cfg.section("verify")
        if "criteria" in sec:
            numbers = [parse_int(n, f"verify.criteria[{i}]", 1) for i, n in enumerate(sec["criteria"])]
            bad = [n for n in numbers if n not in range(1, 10)]
            if bad:
                raise ParseError(f"verify.criteria: unknown criteria {bad}")
    results = acceptance.run_suite(seed=seed, threads=args.threads, numbers=numbers)
    rep.json("verify.json", {"seed": seed, "results": [r.to_json() for r in results]})
    args.timings = {str(r.number): round(r.seconds, 3) for r in results}
    return 0 if all(r.passed for r in results) else 1


HANDLERS = {
    "certify": cmd_certify,
    "fixcount": cmd_fixcount,
    "fkdet": cmd_fkdet,
    "sample": cmd_sample,
    "marginal": cmd_marginal,
    "microcount": cmd_microcount,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="algdyn", description="Periodic points, determinants and model counts for principal algebraic actions.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="JSON experiment config (optional for verify)")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", type=Path, default=Path("algdyn-out"))
    p.add_argument("--version", action="version", version=f"algdyn {__version__}")
    return p


def _refuse(code: str, message: str) -> int:
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)
    return 2


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        return _refuse("parse_error", "--threads must be >= 1")
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        cfg = None
        if args.config is not None:
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
        elif args.command != "verify":
            raise ParseError("--config is required")
        rep = Reporter(args.out)
        status = HANDLERS[args.command](cfg, rep, args)
    except Refusal as exc:
        return _refuse(exc.code, str(exc))
    except AlgDynError as exc:
        return _refuse(exc.code, str(exc))
    except ValueError as exc:
        return _refuse("invalid_input", str(exc))
    except OSError as exc:
        return _refuse("io_error", str(exc))
    meta = {
        "command": args.command,
        "version": __version__,
        "started": started.isoformat(),
        "seconds": round(time.perf_counter() - t0, 3),
        "threads": args.threads,
        "files": rep.files,
    }
    if getattr(args, "timings", None):
        meta["criterion_seconds"] = args.timings
    (args.out / "metadata.json").write_text(_dump(meta))
    return status


if __name__ == "__main__":
    sys.exit(main())

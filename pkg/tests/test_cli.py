import csv
import json
import subprocess
import sys

import pytest

from algdyn.cli import main
from algdyn.config import load_config, parse_config
from algdyn.errors import ParseError

A_MINUS_2 = {"group": {"family": "free_abelian", "rank": 1}, "f": [["a", 1], ["e", -2]]}
THREE_MINUS_A = {"group": {"family": "free_abelian", "rank": 1}, "f": [["e", 3], ["a", -1]]}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def run(tmp_path, command, doc, *extra, out="out"):
    cfg = write(tmp_path, doc)
    return main([command, "--config", str(cfg), "--out", str(tmp_path / out), *extra])


def stderr_error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


# -- config parsing -----------------------------------------------------------


def test_parse_config_expands_ranges():
    cfg = parse_config({**A_MINUS_2, "quotients": [{"cyclic": [2, 5]}], "seed": 3})
    assert [q.moduli for q in cfg.quotients] == [(2,), (3,), (4,), (5,)]
    assert cfg.f.l1_norm() == 3 and cfg.seed == 3


def test_parse_config_quotient_forms():
    z2 = {"group": {"family": "free_abelian", "rank": 2}, "f": [["e", 5], ["a", -1]]}
    assert parse_config({**z2, "quotients": [{"diagonal": [2, 3]}]}).quotients[1].moduli == (3, 3)
    assert parse_config({**z2, "quotients": [{"moduli": [2, 7]}]}).quotients[0].moduli == (2, 7)
    h = {"group": {"family": "heisenberg"}, "f": [["e", 5], ["(1,0,0)", -1]], "quotients": [{"modulus": 3}]}
    assert parse_config(h).quotients[0].modulus == 3
    f2 = {"group": {"family": "free", "rank": 2}, "f": [["e", 5], ["a b", -1]],
          "quotients": [{"generators": ["(1 2)", "(1 2 3)"]}, {"generators": [[1, 0, 2], [0, 2, 1]]}]}
    qs = parse_config(f2).quotients
    assert qs[0].generators == ((1, 0, 2), (1, 2, 0))
    assert qs[1].generators == ((1, 0, 2), (0, 2, 1))


@pytest.mark.parametrize("doc,where", [
    ({**A_MINUS_2, "f": [["a^x", 1]]}, "f[0][0]"),
    ({**A_MINUS_2, "f": [["a", "1/0"]]}, "f[0][1]"),
    ({**A_MINUS_2, "f": [["a", 1], ["a", -1]]}, "f:"),
    ({**A_MINUS_2, "quotients": [{"cyclic": [5, 2]}]}, "quotients[0].cyclic[1]"),
    ({**A_MINUS_2, "quotients": [{"modulus": 3}]}, "quotients"),
    ({**A_MINUS_2, "group": {"family": "lie"}}, "group.family"),
    ({**A_MINUS_2, "seed": -1}, "seed"),
    ({"group": {"family": "free", "rank": 2}, "f": [["e", 3]], "quotients": [{"generators": ["(1 2)", [0, 0, 1]]}]},
     "quotients[0].generators[1]"),
])
def test_parse_errors_name_the_field(doc, where):
    with pytest.raises(ParseError) as exc:
        parse_config(doc)
    assert where in str(exc.value)


def test_json_syntax_errors_report_line_and_column(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "group": {"family": "free_abelian"},\n  "f": [["a", 1],]\n}')
    with pytest.raises(ParseError, match=r"bad\.json:3:\d+"):
        load_config(p)


# -- commands -----------------------------------------------------------------


def test_certify(tmp_path, capsys):
    assert run(tmp_path, "certify", {**THREE_MINUS_A, "certify": {"tolerances": ["1/1000"]}}) == 0
    assert json.loads(capsys.readouterr().out) == {"certified": True, "margin": "2/3"}
    body = json.loads((tmp_path / "out" / "certify.json").read_text())
    assert body["neumann"][0]["order"] == 5
    assert body["neumann"][0]["tail_bound"] == "1/1458"
    assert body["neumann"][0]["residual_within_bound"] is True
    meta = json.loads((tmp_path / "out" / "metadata.json").read_text())
    assert "certify.json" in meta["files"]


def test_certify_refuses_non_dominant(tmp_path, capsys):
    doc = {"group": {"family": "free_abelian", "rank": 1}, "f": [["e", 1], ["a", -1]]}
    assert run(tmp_path, "certify", doc) == 2
    assert stderr_error(capsys)["error"] == "not_certified"


def test_fixcount_writes_csv_and_figure(tmp_path):
    assert run(tmp_path, "fixcount", {**A_MINUS_2, "quotients": [{"cyclic": [1, 8]}]}) == 0
    rows = list(csv.DictReader((tmp_path / "out" / "fixcount.csv").open()))
    assert [int(r["count"]) for r in rows] == [2**n - 1 for n in range(1, 9)]
    assert (tmp_path / "out" / "fixcount.png").stat().st_size > 0


def test_fkdet(tmp_path):
    doc = {**A_MINUS_2, "quotients": [{"cyclic": [4, 16]}], "fkdet": {"grid": 1024}}
    assert run(tmp_path, "fkdet", doc) == 0
    body = json.loads((tmp_path / "out" / "fkdet.json").read_text())
    assert body["oracle_value"] == pytest.approx(0.6931471805599453, abs=1e-14)
    assert body["gap"] < 1e-5
    assert (tmp_path / "out" / "fkdet.png").exists()


def test_sample_routes(tmp_path):
    doc = {**THREE_MINUS_A, "seed": 5, "sample": {"count": 4, "quotient": {"moduli": [6]}}}
    assert run(tmp_path, "sample", doc) == 0
    rows = [json.loads(line) for line in (tmp_path / "out" / "samples.jsonl").read_text().splitlines()]
    assert len(rows) == 4 and len(rows[0]["point"]) == 6
    doc["sample"] = {"count": 3, "route": "bernoulli", "n": 10, "window": ["e", "a"]}
    assert run(tmp_path, "sample", doc, out="b") == 0
    rows = [json.loads(line) for line in (tmp_path / "b" / "samples.jsonl").read_text().splitlines()]
    assert all(len(r["symbols"]) == 2 for r in rows)


def test_stochastic_commands_need_a_seed(tmp_path, capsys):
    doc = {**THREE_MINUS_A, "sample": {"quotient": {"moduli": [6]}}}
    assert run(tmp_path, "sample", doc) == 2
    err = stderr_error(capsys)
    assert err["error"] == "parse_error" and "seed" in err["message"]
    assert run(tmp_path, "sample", doc, "--seed", "1") == 0


def test_marginal_is_identical_across_thread_counts(tmp_path):
    doc = {**THREE_MINUS_A, "seed": 11,
           "marginal": {"window": ["e", "a"], "nsamples": 20000, "sampler": {"bernoulli": 20}}}
    assert run(tmp_path, "marginal", doc, "--threads", "1", out="t1") == 0
    assert run(tmp_path, "marginal", doc, "--threads", "4", out="t4") == 0
    for name in ("marginal.json", "marginal.png"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t4" / name).read_bytes()


def test_microcount(tmp_path):
    doc = {**A_MINUS_2, "seed": 2, "quotients": [{"cyclic": [3, 4]}],
           "microcount": {"window": ["e", "a"], "epsilon": ["1/5", "2/5"],
                          "reference": {"sampler": {"fixed_points": {"moduli": [60]}}, "nsamples": 5000}}}
    assert run(tmp_path, "microcount", doc) == 0
    body = json.loads((tmp_path / "out" / "microcount.json").read_text())
    assert len(body["reports"]) == 4
    for r in body["reports"]:
        assert int(r["encoded_fixed_points"]) <= int(r["count"])
    applicable = [r for r in body["reports"] if isinstance(r["bound_check"], dict)]
    assert applicable and all(r["bound_check"]["holds"] for r in applicable)
    assert (tmp_path / "out" / "microcount_3.png").exists()


def test_microcount_refuses_before_working(tmp_path, capsys):
    doc = {**A_MINUS_2, "seed": 2, "quotients": [{"cyclic": [20, 20]}],
           "microcount": {"window": ["e"], "reference": {"sampler": {"bernoulli": 10}, "nsamples": 100}}}
    assert run(tmp_path, "microcount", doc) == 2
    assert stderr_error(capsys)["error"] == "enumeration_cap_exceeded"


def test_missing_config_and_bad_threads(tmp_path, capsys):
    assert main(["fixcount", "--out", str(tmp_path)]) == 2
    assert stderr_error(capsys)["error"] == "parse_error"
    assert main(["fixcount", "--config", str(tmp_path / "nope.json")]) == 2
    assert stderr_error(capsys)["error"] == "io_error"
    assert main(["verify", "--threads", "0"]) == 2


def test_verify_subset(tmp_path):
    doc = {**A_MINUS_2, "seed": 20240521, "verify": {"criteria": [1, 2, 4]}}
    assert run(tmp_path, "verify", doc) == 0
    body = json.loads((tmp_path / "out" / "verify.json").read_text())
    assert [r["criterion"] for r in body["results"]] == [1, 2, 4]
    assert all(r["passed"] for r in body["results"])


def test_console_script_entry_point(tmp_path):
    cfg = write(tmp_path, {**A_MINUS_2, "quotients": [{"cyclic": [4, 4]}]})
    proc = subprocess.run([sys.executable, "-m", "algdyn.cli", "fixcount", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "moduli=4,4,15"

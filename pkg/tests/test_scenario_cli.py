import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from cmpplab.cli import main
from cmpplab.scenario import (BUILTIN_SCENARIOS, Row, ScenarioError,
                              parse_scenario_text, report_write,
                              resolve_scenario, run_scenario)

GOOD_SCENARIO = """
# a small self-contained scenario
[scenario]
name = smoke

[base]
claim = exp(rate=0.2)
mixing = gamma(rate=2, shape=2)

[change]
alpha = "ln(theta)"
gamma = "ln(x/5)"
xi = "(27/8)*theta^2*exp(-theta)"
level = 2

[run]
jobs = validate, derive-q, premium

[mc]
paths = 2000
seed = 11
horizon = 1.0

[output]
format = csv
"""


# ---------------------------------------------------------------------------
# scenario parsing

def test_parse_good_scenario():
    scn = parse_scenario_text(GOOD_SCENARIO)
    assert scn.name == "smoke"
    assert scn.level == 2
    assert scn.paths == 2000
    assert scn.seed == 11
    assert scn.jobs == ("validate", "derive-q", "premium")


def test_parse_reports_line_numbers():
    bad = "[base]\nclaim = exp(rate=0.2)\nmixing = gamma(rate=2, shape=2)\n[change]\nalpha = ln(theta)\n"
    with pytest.raises(ScenarioError) as exc:
        parse_scenario_text(bad, source="bad.scn")
    assert "bad.scn:5" in str(exc.value)      # unquoted expression


def test_parse_unknown_job():
    bad = GOOD_SCENARIO.replace("validate, derive-q, premium", "validate, frobnicate")
    with pytest.raises(ScenarioError) as exc:
        parse_scenario_text(bad)
    assert "frobnicate" in str(exc.value)


def test_parse_missing_base():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario_text("[scenario]\nname = x\n")
    assert "[base]" in str(exc.value)


def test_builtins_resolve():
    for name in BUILTIN_SCENARIOS:
        scn = resolve_scenario(name)
        assert scn.name == name


def test_unknown_scenario_is_error():
    with pytest.raises(ScenarioError) as exc:
        resolve_scenario("no-such-scenario")
    assert "no-such-scenario" in str(exc.value)


# ---------------------------------------------------------------------------
# report writing

def rows_sample():
    return [
        Row(scenario="s", job="j", quantity="q1", estimate=1.0 / 3.0,
            stderr=0.25, oracle=1.0 / 3.0, verdict="pass", seed=7),
        Row(scenario="s", job="j", quantity="q2", detail="theta^2"),
    ]


def test_csv_header_only_for_empty(tmp_path):
    path = tmp_path / "empty.csv"
    report_write([], "csv", str(path))
    lines = path.read_text().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("scenario,job,quantity,estimate,stderr,oracle")


def test_csv_roundtrip_17_digits(tmp_path):
    path = tmp_path / "r.csv"
    vals = list(np.random.default_rng(5).uniform(-1e6, 1e6, 25)) + [1.0 / 3.0, 2.0 / 7.0]
    rows = [Row(scenario="s", job="j", quantity=f"v{i}", estimate=float(v))
            for i, v in enumerate(vals)]
    report_write(rows, "csv", str(path))
    with open(path) as fh:
        got = [float(r["estimate"]) for r in csv.DictReader(fh)]
    assert got == [float(v) for v in vals]     # bit-exact recovery


def test_jsonl_roundtrip(tmp_path):
    path = tmp_path / "r.jsonl"
    rows = rows_sample()
    report_write(rows, "json-lines", str(path))
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert records[0]["estimate"] == 1.0 / 3.0
    assert records[1]["estimate"] is None
    assert records[1]["detail"] == "theta^2"


def test_oracle_and_estimate_both_render(tmp_path):
    path = tmp_path / "r.csv"
    report_write(rows_sample(), "csv", str(path))
    with open(path) as fh:
        rec = next(csv.DictReader(fh))
    assert rec["estimate"] != "" and rec["oracle"] != ""


# ---------------------------------------------------------------------------
# run_scenario and exit codes

def test_run_scenario_file(tmp_path):
    scn_path = tmp_path / "smoke.scn"
    scn_path.write_text(GOOD_SCENARIO)
    out = tmp_path / "report.csv"
    code = run_scenario(str(scn_path), {"output": str(out)})
    assert code == 0
    text = out.read_text()
    assert "theta^2" in text
    assert "gamma(rate=3, shape=4)" in text
    assert "10*theta^2" in text


def test_run_builtin_62_report_contents(tmp_path):
    # the 6.2 reweighting rows have heavy-tailed weights; the builtin only
    # passes reliably at its default path budget, so keep that here
    out = tmp_path / "r62.csv"
    code = run_scenario("example-6.2",
                        {"paths": 20_000, "output": str(out),
                         "seed": 20190521})
    assert code == 0
    rows = list(csv.DictReader(open(out)))
    byq = {r["quantity"]: r for r in rows}
    assert byq["g"]["detail"] == "theta^2"
    assert byq["q_mixing"]["detail"] == "gamma(rate=3, shape=4)"
    assert byq["p(Q_theta)"]["detail"] == "10*theta^2"
    # annotations present but never thresholds
    assert float(byq["p(Q)"]["paper_value"]) == 810.0
    assert float(byq["E_Q[N_1]"]["paper_value"]) == 81.0
    assert byq["p(Q)"]["verdict"] == "pass"
    assert float(byq["p(Q)"]["estimate"]) == pytest.approx(200.0 / 9.0, rel=1e-9)


def test_unknown_scenario_exit_2(tmp_path, capsys):
    code = run_scenario("no-such-scenario", {})
    assert code == 2
    err = capsys.readouterr().err
    assert "no-such-scenario" in err


def test_malformed_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("[base]\nclaim = exp(rate=0.2)\n")  # missing mixing
    assert run_scenario(str(bad), {}) == 2
    assert "mixing" in capsys.readouterr().err


def test_failing_verdict_exit_1(tmp_path):
    failing = GOOD_SCENARIO.replace('xi = "(27/8)*theta^2*exp(-theta)"',
                                    'xi = "theta^2"')
    scn_path = tmp_path / "failing.scn"
    scn_path.write_text(failing)
    out = tmp_path / "failing.csv"
    assert run_scenario(str(scn_path), {"output": str(out)}) == 1
    assert any(r["verdict"] == "fail" for r in csv.DictReader(open(out)))


def test_byte_identical_reruns(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (out1, out2):
        run_scenario("example-6.1a", {"paths": 2000, "seed": 99,
                                      "output": str(out)})
    assert out1.read_bytes() == out2.read_bytes()


def test_seed_changes_report(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    run_scenario("example-6.1a", {"paths": 2000, "seed": 1, "output": str(out1)})
    run_scenario("example-6.1a", {"paths": 2000, "seed": 2, "output": str(out2)})
    assert out1.read_bytes() != out2.read_bytes()


def test_overrides_in_metadata(tmp_path):
    out = tmp_path / "r.csv"
    run_scenario("example-6.2", {"paths": 2000, "seed": 4242, "horizon": 1.5,
                                 "output": str(out)})
    rows = list(csv.DictReader(open(out)))
    metas = {r["quantity"]: r["detail"] for r in rows if r["job"] == "meta"}
    assert metas["override:paths"] == "2000"
    assert metas["override:seed"] == "4242"
    assert metas["override:horizon"] == "1.5"
    assert all(r["seed"] == "4242" for r in rows)
    # the horizon override propagates into job quantities
    assert any(r["quantity"] == "E_P[S_1.5]" for r in rows)


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CMPPLAB_OUTPUT_DIR", str(tmp_path))
    code = run_scenario("example-6.1a", {"paths": 2000, "seed": 3})
    assert code == 0
    assert (tmp_path / "example-6.1a.csv").exists()


def test_builtin_param_override(tmp_path):
    out = tmp_path / "r63.csv"
    code = run_scenario("example-6.3", {"paths": 5000, "output": str(out),
                                        "params": {"c": 1.0}})
    assert code == 0
    rows = list(csv.DictReader(open(out)))
    byq = {r["quantity"]: r for r in rows}
    assert byq["q_mixing"]["detail"] == "uniform(lo=0, hi=1)"
    assert float(byq["E_Q[X_1]"]["estimate"]) == pytest.approx(2.0, rel=1e-9)


# ---------------------------------------------------------------------------
# CLI surface

def test_cli_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in BUILTIN_SCENARIOS:
        assert name in out


def test_cli_run_and_exit_codes(tmp_path, capsys):
    out = tmp_path / "cli.csv"
    code = main(["run", "example-6.1a", "--paths", "2000", "--seed", "7",
                 "--output", str(out), "--format", "csv"])
    assert code == 0
    assert out.exists()
    assert main(["run", "definitely-not-real"]) == 2


def test_cli_usage_error_exit_2(capsys):
    assert main(["run"]) == 2


def test_cli_param_flag(tmp_path):
    out = tmp_path / "c2.csv"
    code = main(["run", "example-6.3", "--paths", "5000", "--param", "c=2",
                 "--output", str(out)])
    assert code == 0
    rows = list(csv.DictReader(open(out)))
    byq = {r["quantity"]: r for r in rows}
    # claims become gamma(rate=3, shape=2); the tilt still lands in catalog
    assert byq["q_claim"]["detail"] == "gamma(rate=1, shape=2)"


def test_module_invocation(tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "cmpplab", "run", "example-6.1a",
         "--paths", "2000", "--seed", "5", "--output", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()

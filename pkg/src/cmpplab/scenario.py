"""Scenario files, builtin scenarios, and the job runners behind the CLI.

A scenario file is line-oriented text: ``[section]`` headers and
``key = value`` pairs, with ``#`` comments.  Expression values are
quoted strings; distribution values use the catalog literal syntax.

    [scenario]
    name = my-model

    [base]
    claim = exp(rate=0.2)
    mixing = gamma(rate=2, shape=2)
    h = "theta"                       # optional intensity map

    [change]
    alpha = "ln(theta)"
    gamma = "ln(x/5)"
    xi = "(27/8)*theta^2*exp(-theta)"
    params = c = 1, k = 2             # optional named constants
    level = 2                         # integrability level, default 1

    [run]
    jobs = validate, derive-q, premium

    [mc]
    paths = 100000
    seed = 20190521
    horizon = 2.0

    [output]
    format = csv                      # csv | json-lines
    path = reports/out.csv

Four builtin scenarios ship with the package (example-6.1a, example-6.1b,
example-6.2, example-6.3): classical premium-principle constructions on a
common test model.  Their ``paper_value`` annotations record the values
quoted in the source material for comparison; annotations are data, never
pass thresholds.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .dist import expectation, parse_distribution
from .expr import RealFn, parse
from .model import (BaseModel, DerivedModel, MeasureChange, derive_q_model,
                    measure_change, validate_change)
from .premium import esscher_change, expected_value_change, premium_density
from .sim import BASE_P, DERIVED_Q
from .verify import (check_martingale, check_reweighting, degeneracy_test,
                     f_aggregate, f_count, f_count_eq, f_one, mc_estimate,
                     process_v, singularity_probe)

JOB_NAMES = ("simulate", "validate", "derive-q", "verify-reweighting",
             "verify-martingale", "degeneracy", "singularity", "premium")

OUTPUT_DIR_ENV = "CMPPLAB_OUTPUT_DIR"


class ScenarioError(ValueError):
    """Scenario parse or validation problem, with a line-level location."""

    def __init__(self, message: str, source: str = "<scenario>", line: int = 0):
        super().__init__(f"{source}:{line}: {message}" if line else f"{source}: {message}")
        self.source = source
        self.line = line


@dataclass(frozen=True)
class Row:
    """One report record."""

    scenario: str
    job: str
    quantity: str
    estimate: Optional[float] = None
    stderr: Optional[float] = None
    oracle: Optional[float] = None
    paper_value: Optional[float] = None
    verdict: str = "info"            # pass | fail | info | inconclusive
    seed: Optional[int] = None
    detail: str = ""


REPORT_COLUMNS = ("scenario", "job", "quantity", "estimate", "stderr",
                  "oracle", "paper_value", "verdict", "seed", "detail")


@dataclass(frozen=True)
class Scenario:
    name: str
    base: BaseModel
    change: MeasureChange
    level: int = 1
    jobs: Tuple[str, ...] = ("validate", "derive-q", "premium")
    paths: int = 100_000
    seed: int = 20190521
    horizon: float = 2.0
    out_format: str = "csv"
    out_path: Optional[str] = None
    paper_values: Dict[str, float] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# scenario file parsing

def _parse_kv(line: str, source: str, lineno: int) -> Tuple[str, str]:
    if "=" not in line:
        raise ScenarioError(f"expected 'key = value', got {line!r}", source, lineno)
    key, _, value = line.partition("=")
    return key.strip(), value.strip()


def _unquote(value: str, source: str, lineno: int) -> str:
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "'\"":
        return value[1:-1]
    raise ScenarioError(f"expression values must be quoted, got {value!r}",
                        source, lineno)


def _parse_params(value: str, source: str, lineno: int) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for piece in value.split(","):
        piece = piece.strip()
        if not piece:
            continue
        name, _, num = piece.partition("=")
        name = name.strip()
        if not name.isidentifier():
            raise ScenarioError(f"bad parameter name {name!r}", source, lineno)
        try:
            out[name] = float(num.strip())
        except ValueError:
            raise ScenarioError(f"bad parameter value {num.strip()!r}",
                                source, lineno) from None
    return out


def parse_scenario_text(text: str, source: str = "<scenario>") -> Scenario:
    sections: Dict[str, Dict[str, Tuple[str, int]]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"malformed section header {line!r}", source, lineno)
            current = line[1:-1].strip().lower()
            sections.setdefault(current, {})
            continue
        if current is None:
            raise ScenarioError("key outside any [section]", source, lineno)
        key, value = _parse_kv(line, source, lineno)
        sections[current][key.lower()] = (value, lineno)

    def get(section: str, key: str, default=None):
        return sections.get(section, {}).get(key, (default, 0))

    name, _ = get("scenario", "name", "unnamed")
    if "base" not in sections:
        raise ScenarioError("missing [base] section", source)
    for required in ("claim", "mixing"):
        if required not in sections["base"]:
            raise ScenarioError(f"[base] is missing {required!r}", source)

    claim_text, ln = sections["base"]["claim"]
    try:
        claim = parse_distribution(claim_text)
    except Exception as e:
        raise ScenarioError(f"bad claim law: {e}", source, ln) from e
    mixing_text, ln = sections["base"]["mixing"]
    try:
        mixing = parse_distribution(mixing_text)
    except Exception as e:
        raise ScenarioError(f"bad mixing law: {e}", source, ln) from e

    params: Dict[str, float] = {}
    if "change" in sections and "params" in sections["change"]:
        ptext, ln = sections["change"]["params"]
        params = _parse_params(ptext, source, ln)

    def parse_fn(section: str, key: str, var: str, default: str) -> RealFn:
        value, ln = get(section, key)
        if value is None:
            return parse(default, var=var, params=params)
        try:
            return parse(_unquote(value, source, ln), var=var, params=params)
        except ScenarioError:
            raise
        except Exception as e:
            raise ScenarioError(f"bad {key!r} expression: {e}", source, ln) from e

    rate_fn = parse_fn("base", "h", "theta", "theta")
    try:
        base = BaseModel(claim_law=claim, mixing_law=mixing, rate_fn=rate_fn)
    except Exception as e:
        raise ScenarioError(f"invalid base model: {e}", source) from e
    change = MeasureChange(
        alpha=parse_fn("change", "alpha", "theta", "0"),
        gamma=parse_fn("change", "gamma", "x", "0"),
        xi=parse_fn("change", "xi", "theta", "1"),
    )

    level_text, ln = get("change", "level", "1")
    try:
        level = int(level_text)
    except ValueError:
        raise ScenarioError(f"bad level {level_text!r}", source, ln) from None

    jobs_text, ln = get("run", "jobs", "validate, derive-q, premium")
    jobs = tuple(j.strip() for j in jobs_text.split(",") if j.strip())
    for j in jobs:
        if j not in JOB_NAMES:
            raise ScenarioError(f"unknown job {j!r} (known: {', '.join(JOB_NAMES)})",
                                source, ln)

    def get_number(section, key, default, conv, what):
        value, ln2 = get(section, key, None)
        if value is None:
            return default
        try:
            return conv(value)
        except ValueError:
            raise ScenarioError(f"bad {what} {value!r}", source, ln2) from None

    paths = get_number("mc", "paths", 100_000, int, "path count")
    seed = get_number("mc", "seed", 20190521, int, "seed")
    horizon = get_number("mc", "horizon", 2.0, float, "horizon")
    if paths < 100:
        raise ScenarioError("mc.paths must be at least 100", source)

    out_format, ln = get("output", "format", "csv")
    if out_format not in ("csv", "json-lines"):
        raise ScenarioError(f"unknown output format {out_format!r}", source, ln)
    out_path, _ = get("output", "path", None)

    return Scenario(name=name, base=base, change=change, level=level, jobs=jobs,
                    paths=paths, seed=seed, horizon=horizon,
                    out_format=out_format, out_path=out_path)


def load_scenario_file(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ScenarioError(f"cannot read scenario file: {e}", path) from e
    return parse_scenario_text(text, source=path)


# ---------------------------------------------------------------------------
# builtin scenarios

_TEST_BASE_JOBS = ("validate", "derive-q", "premium", "simulate",
                   "verify-reweighting", "verify-martingale")


def _base_62() -> BaseModel:
    return BaseModel(parse_distribution("exp(rate=0.2)"),
                     parse_distribution("gamma(rate=2,shape=2)"))


def _builtin_61a(params: Dict[str, float]) -> Scenario:
    c = params.get("c", 0.05)
    base = _base_62()
    return Scenario(name="example-6.1a", base=base,
                    change=esscher_change(c, base), level=1,
                    jobs=_TEST_BASE_JOBS)


def _builtin_61b(params: Dict[str, float]) -> Scenario:
    c = params.get("c", math.log(2.0))
    return Scenario(name="example-6.1b", base=_base_62(),
                    change=expected_value_change(c), level=1,
                    jobs=_TEST_BASE_JOBS + ("singularity",))


def _builtin_62(params: Dict[str, float]) -> Scenario:
    return Scenario(
        name="example-6.2", base=_base_62(),
        change=measure_change(alpha="ln(theta)", gamma="ln(x/5)",
                              xi="(27/8)*theta^2*exp(-theta)"),
        level=2, jobs=_TEST_BASE_JOBS + ("degeneracy",),
        paper_values={"E_Q[N_1]": 81.0, "p(Q)": 810.0},
    )


def _builtin_63(params: Dict[str, float]) -> Scenario:
    c = params.get("c", 1.0)
    base = BaseModel(parse_distribution(f"gamma(rate={c + 1.0},shape=2)"),
                     parse_distribution("beta(a=2,b=1)"))
    change = measure_change(
        alpha="ln(c+theta) + 2*ln((c+1)/(c+1+theta))",
        gamma="c*x - 2*ln(c+1)", xi="1/(2*theta)", params={"c": c})
    return Scenario(name="example-6.3", base=base, change=change, level=2,
                    jobs=_TEST_BASE_JOBS)


BUILTIN_SCENARIOS: Dict[str, Callable[[Dict[str, float]], Scenario]] = {
    "example-6.1a": _builtin_61a,
    "example-6.1b": _builtin_61b,
    "example-6.2": _builtin_62,
    "example-6.3": _builtin_63,
}


def resolve_scenario(name_or_path: str, params: Optional[Dict[str, float]] = None) -> Scenario:
    params = params or {}
    if name_or_path in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[name_or_path](params)
    if os.path.exists(name_or_path):
        return load_scenario_file(name_or_path)
    raise ScenarioError(
        f"unknown scenario {name_or_path!r}: not a builtin "
        f"({', '.join(sorted(BUILTIN_SCENARIOS))}) and no such file")


# ---------------------------------------------------------------------------
# job runners

def _annotate(scn: Scenario, row: Row) -> Row:
    pv = scn.paper_values.get(row.quantity)
    return replace(row, paper_value=pv) if pv is not None else row


def _job_validate(scn: Scenario, derived) -> List[Row]:
    rep = validate_change(scn.base, scn.change, scn.level)
    mk = lambda **kw: _annotate(scn, Row(scenario=scn.name, job="validate",
                                         seed=scn.seed, **kw))
    rows = [
        mk(quantity="gamma_norm", estimate=rep.gamma_norm, oracle=1.0,
           verdict="pass" if abs(rep.gamma_norm - 1.0) <= 1e-8 else "fail"),
        mk(quantity="xi_norm", estimate=rep.xi_norm, oracle=1.0,
           verdict="pass" if abs(rep.xi_norm - 1.0) <= 1e-8 else "fail"),
        mk(quantity="xi_positive", estimate=float(rep.xi_positive),
           verdict="pass" if rep.xi_positive else "fail"),
        mk(quantity=f"claim_gate_l{scn.level}", estimate=rep.claim_gate,
           verdict="pass" if math.isfinite(rep.claim_gate) else "fail"),
        mk(quantity=f"mixing_gate_l{scn.level}", estimate=rep.mixing_gate,
           verdict="pass" if math.isfinite(rep.mixing_gate) else "fail"),
        mk(quantity="admissible", estimate=float(rep.verdict),
           verdict="pass" if rep.verdict else "fail",
           detail="; ".join(rep.failures)),
    ]
    return rows


def _job_derive_q(scn: Scenario, derived: DerivedModel) -> List[Row]:
    mk = lambda **kw: _annotate(scn, Row(scenario=scn.name, job="derive-q",
                                         seed=scn.seed, **kw))
    return [
        mk(quantity="g", detail=str(derived.g)),
        mk(quantity="q_claim", detail=derived.q_claim.literal()),
        mk(quantity="q_mixing", detail=derived.q_mixing.literal()),
        mk(quantity="E_Q[X_1]", estimate=derived.q_claim.moment(1)),
    ]


def _job_premium(scn: Scenario, derived: DerivedModel) -> List[Row]:
    quote = premium_density(scn.base, derived)
    e_g = expectation(derived.q_mixing, derived.g)
    # independent recomputation of p(Q), quadrature on both factors
    pq_oracle = e_g * expectation(derived.q_claim, lambda x: x)
    pq_ok = math.isfinite(quote.p_derived) and \
        abs(quote.p_derived - pq_oracle) <= 1e-8 * max(1.0, abs(pq_oracle))
    med = float(scn.base.mixing_law.quantile(0.5))
    p_p = quote.per_theta_base(med)
    p_q = quote.per_theta_derived(med)
    mk = lambda **kw: _annotate(scn, Row(scenario=scn.name, job="premium",
                                         seed=scn.seed, **kw))
    return [
        mk(quantity="p(P)", estimate=quote.p_base),
        mk(quantity="p(Q)", estimate=quote.p_derived, oracle=pq_oracle,
           verdict="pass" if pq_ok else "fail",
           detail=f"method={quote.method}"),
        mk(quantity="E_Q[N_1]", estimate=e_g),
        mk(quantity="p(P_theta)", detail=str(quote.per_theta_base)),
        mk(quantity="p(Q_theta)", detail=str(quote.per_theta_derived)),
        mk(quantity="cond13", estimate=quote.cond13_margin,
           verdict="pass" if quote.cond13 else "fail",
           detail=f"p(P)={quote.p_base:.6g} < p(Q)={quote.p_derived:.6g}"
                  if quote.cond13 else "no strict loading"),
        mk(quantity=f"cond14@theta={med:.6g}", estimate=p_q - p_p,
           verdict="pass" if (math.isfinite(p_q) and p_p < p_q) else "fail",
           detail=f"p(P_theta)={p_p:.6g}, p(Q_theta)={p_q:.6g}"),
    ]


def _job_simulate(scn: Scenario, derived: DerivedModel) -> List[Row]:
    t = scn.horizon
    e_x = scn.base.claim_law.moment(1)
    e_rate = expectation(scn.base.mixing_law, scn.base.rate_fn)
    quote = premium_density(scn.base, derived)
    mk = lambda **kw: _annotate(scn, Row(scenario=scn.name, job="simulate",
                                         seed=scn.seed, **kw))
    rows = []
    rep = mc_estimate(f_aggregate(), scn.base, derived, BASE_P, t,
                      scn.paths, scn.seed, oracle=t * e_rate * e_x)
    rows.append(mk(quantity=f"E_P[S_{t:g}]", estimate=rep.estimate,
                   stderr=rep.stderr, oracle=rep.oracle, verdict=rep.verdict))
    rep = mc_estimate(f_count(), scn.base, derived, BASE_P, t,
                      scn.paths, scn.seed, oracle=t * e_rate)
    rows.append(mk(quantity=f"E_P[N_{t:g}]", estimate=rep.estimate,
                   stderr=rep.stderr, oracle=rep.oracle, verdict=rep.verdict))
    rep = mc_estimate(f_aggregate(), scn.base, derived, DERIVED_Q, t,
                      scn.paths, scn.seed, oracle=t * quote.p_derived)
    rows.append(mk(quantity=f"E_Q[S_{t:g}]", estimate=rep.estimate,
                   stderr=rep.stderr, oracle=rep.oracle, verdict=rep.verdict))
    return rows


def _job_reweighting(scn: Scenario, derived: DerivedModel) -> List[Row]:
    t = scn.horizon / 2.0
    battery = [f_one(), f_count(), f_aggregate(), f_count_eq(0)]
    mk = lambda **kw: _annotate(scn, Row(scenario=scn.name, job="verify-reweighting",
                                         seed=scn.seed, **kw))
    rows = []
    for f in battery:
        res = check_reweighting(f, scn.base, scn.change, t=t, n=scn.paths,
                                seed=scn.seed, horizon=t)
        rows.append(mk(
            quantity=f"gap[{f.name}]@t={t:g}", estimate=res.difference,
            stderr=res.pooled_stderr, oracle=0.0, verdict=res.verdict,
            detail=(f"direct={res.direct.estimate:.6g}+-{res.direct.stderr:.3g}, "
                    f"weighted={res.weighted.estimate:.6g}+-{res.weighted.stderr:.3g}")))
    return rows


def _job_martingale(scn: Scenario, derived: DerivedModel) -> List[Row]:
    h = scn.horizon
    pairs = [(h / 4.0, h / 2.0), (h / 2.0, h)]
    table = check_martingale(process_v(scn.change), scn.base, derived, DERIVED_Q,
                             pairs, n=scn.paths, seed=scn.seed)
    mk = lambda **kw: _annotate(scn, Row(scenario=scn.name, job="verify-martingale",
                                         seed=scn.seed, **kw))
    rows = [mk(quantity=f"V[{c.s:g}->{c.t:g}]@{c.event}", estimate=c.estimate,
               stderr=c.stderr, oracle=0.0,
               verdict="pass" if c.cell_pass else "fail", detail=f"z={c.z:.2f}")
            for c in table.cells]
    rows.append(mk(quantity="V martingale (family verdict)",
                   estimate=max(abs(c.z) for c in table.cells),
                   oracle=table.z_threshold, verdict=table.verdict,
                   detail=f"{len(table.cells)} cells, Bonferroni level "
                          f"{table.family_level:g}"))
    return rows


def _job_degeneracy(scn: Scenario, derived: DerivedModel) -> List[Row]:
    res = degeneracy_test(scn.base, scn.change, n=scn.paths, seed=scn.seed)
    grid = scn.base.mixing_law.interior_grid(16)
    gvals = np.array([derived.g(t) for t in grid])
    predicted_degenerate = bool(np.allclose(gvals, gvals[0], rtol=1e-12, atol=0.0))
    agrees = res.is_martingale == predicted_degenerate
    return [_annotate(scn, Row(
        scenario=scn.name, job="degeneracy", seed=scn.seed,
        quantity="centered-aggregate martingale dichotomy",
        estimate=res.witness_estimate, stderr=res.witness_stderr,
        oracle=res.witness_oracle,
        verdict="pass" if agrees else "fail",
        detail=f"g(Theta) degenerate={predicted_degenerate}; {res.describe()}"))]


def _job_singularity(scn: Scenario, derived: DerivedModel) -> List[Row]:
    horizons = [scn.horizon * 5, scn.horizon * 25]
    theta = float(scn.base.mixing_law.quantile(0.5))
    n = max(1000, scn.paths // 25)
    rows_out = []
    mk = lambda **kw: _annotate(scn, Row(scenario=scn.name, job="singularity",
                                         seed=scn.seed, **kw))
    for r in singularity_probe(scn.base, scn.change, horizons, n=n,
                               seed=scn.seed, theta_fixed=theta):
        verdict = "info"
        if r.drift_oracle is not None:
            verdict = "pass" if abs(r.drift - r.drift_oracle) <= 3.0 * r.drift_stderr \
                else "fail"
        rows_out.append(mk(
            quantity=f"log-density drift T={r.horizon:g} under {r.side}",
            estimate=r.drift, stderr=r.drift_stderr, oracle=r.drift_oracle,
            verdict=verdict,
            detail=(f"theta={theta:.6g}, q10={r.q10:.4g}, q50={r.q50:.4g}, "
                    f"q90={r.q90:.4g}, frac<-5={r.frac_below:.4f}, "
                    f"frac>+5={r.frac_above:.4f}")))
    return rows_out


_JOB_RUNNERS = {
    "validate": _job_validate,
    "derive-q": _job_derive_q,
    "premium": _job_premium,
    "simulate": _job_simulate,
    "verify-reweighting": _job_reweighting,
    "verify-martingale": _job_martingale,
    "degeneracy": _job_degeneracy,
    "singularity": _job_singularity,
}


# ---------------------------------------------------------------------------
# report writing

def _format_float(x: Optional[float]) -> str:
    if x is None:
        return ""
    return f"{x:.17g}"


def report_write(rows: List[Row], out_format: str, destination: str) -> None:
    """Write rows as CSV (fixed header) or JSON lines, floats at 17
    significant digits so a reader recovers them bit-exactly."""
    import csv
    import json

    parent = os.path.dirname(os.path.abspath(destination))
    try:
        os.makedirs(parent, exist_ok=True)
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            if out_format == "csv":
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(REPORT_COLUMNS)
                for r in rows:
                    writer.writerow([
                        r.scenario, r.job, r.quantity,
                        _format_float(r.estimate), _format_float(r.stderr),
                        _format_float(r.oracle), _format_float(r.paper_value),
                        r.verdict, "" if r.seed is None else str(r.seed), r.detail,
                    ])
            elif out_format == "json-lines":
                for r in rows:
                    record = {
                        "scenario": r.scenario, "job": r.job, "quantity": r.quantity,
                        "estimate": r.estimate, "stderr": r.stderr,
                        "oracle": r.oracle, "paper_value": r.paper_value,
                        "verdict": r.verdict, "seed": r.seed, "detail": r.detail,
                    }
                    fh.write(json.dumps(record) + "\n")
            else:
                raise ScenarioError(f"unknown output format {out_format!r}")
    except OSError as e:
        raise ScenarioError(f"cannot write report to {destination!r}: {e}") from e


# ---------------------------------------------------------------------------
# the scenario runner

def run_scenario(name_or_path: str, overrides: Optional[dict] = None,
                 stderr=None) -> int:
    """Execute a scenario's jobs and write its report.

    Returns the exit code: 0 when every tested row passes, 1 when any
    verdict fails, 2 on scenario parse/validation errors (diagnostics go
    to ``stderr``).
    """
    import sys
    stderr = stderr if stderr is not None else sys.stderr
    overrides = dict(overrides or {})
    params = dict(overrides.pop("params", {}) or {})
    try:
        scn = resolve_scenario(name_or_path, params)
        for key in ("seed", "paths"):
            if key in overrides and overrides[key] is not None:
                scn = replace(scn, **{key: int(overrides[key])})
        if overrides.get("horizon") is not None:
            scn = replace(scn, horizon=float(overrides["horizon"]))
        if overrides.get("format") is not None:
            fmt = overrides["format"]
            if fmt not in ("csv", "json-lines"):
                raise ScenarioError(f"unknown output format {fmt!r}")
            scn = replace(scn, out_format=fmt)
        if overrides.get("output") is not None:
            scn = replace(scn, out_path=str(overrides["output"]))
        if scn.paths < 100:
            raise ScenarioError("mc.paths must be at least 100")

        # report rows are a pure function of (scenario, params, seed, paths,
        # horizon); where the report is written or how it is encoded is not
        # part of its content, so only result-affecting overrides are recorded
        rows: List[Row] = [
            Row(scenario=scn.name, job="meta", quantity=f"override:{k}",
                seed=scn.seed, detail=str(v))
            for k, v in sorted(overrides.items())
            if v is not None and k in ("seed", "paths", "horizon")
        ]
        rows += [Row(scenario=scn.name, job="meta", quantity=f"param:{k}",
                     seed=scn.seed, detail=repr(v)) for k, v in sorted(params.items())]

        report = validate_change(scn.base, scn.change, scn.level)
        rows += _job_validate(scn, None)
        derived = None
        if report.verdict:
            derived = derive_q_model(scn.base, scn.change)
        for job in scn.jobs:
            if job == "validate":
                continue  # always ran first
            if derived is None:
                rows.append(Row(scenario=scn.name, job=job, seed=scn.seed,
                                quantity="skipped", verdict="fail",
                                detail="change failed validation"))
                continue
            rows += _JOB_RUNNERS[job](scn, derived)
    except ScenarioError as e:
        print(f"error: {e}", file=stderr)
        return 2

    out_path = scn.out_path
    if out_path is None:
        out_dir = os.environ.get(OUTPUT_DIR_ENV, ".")
        ext = "csv" if scn.out_format == "csv" else "jsonl"
        out_path = os.path.join(out_dir, f"{scn.name}.{ext}")
    try:
        report_write(rows, scn.out_format, out_path)
    except ScenarioError as e:
        print(f"error: {e}", file=stderr)
        return 2

    return 1 if any(r.verdict == "fail" for r in rows) else 0

"""Run orchestration, delimited output and the JSON run manifest.

A run produces one row per grid time under a single fixed CSV schema
(``scenarios.CSV_COLUMNS``): trace runs fill the entropy/rate columns and
leave the state-minimised ones as nan, divisibility runs do the opposite.
Floats are written as shortest round-trip decimals, booleans as 0/1,
infinities as ``inf``/``-inf`` and unavailable fields as ``nan``, so a
rerun of the same configuration is byte-identical.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__ as _version
from .jcdyn import ConfigError
from .memdiv import (
    blp_contractive,
    cp_divisible,
    constant_verdict_intervals,
    divisibility_series,
    p_divisible,
)
from .eprod import entropy_production_series
from .scenarios import CSV_COLUMNS, Scenario, scenario_to_string


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: str
    tolerance: str
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"[{status}] {self.name}: measured {self.measured} (tolerance {self.tolerance})"
        if self.detail and not self.passed:
            msg += f" -- {self.detail}"
        return msg


@dataclass
class RunReport:
    scenario: Scenario
    kind: str                       # "trace" or "divisibility"
    rows: list[dict] = field(default_factory=list)
    checks: list[CheckResult] = field(default_factory=list)
    intervals: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _nan_row(t: float, gt: float) -> dict:
    row = {c: math.nan for c in CSV_COLUMNS}
    row["t"], row["gt"] = t, gt
    return row


def run_trace(scenario: Scenario, threads: int = 1) -> RunReport:
    """Single-initial-state time series of all entropy rates and observables.

    The divisibility booleans come along for free (the rate sets are already
    on hand); the state-minimised columns stay nan.
    """
    started = time.perf_counter()
    rho0 = scenario.resolve_initial_state()
    run = entropy_production_series(rho0, scenario.params, scenario.cfg, threads=threads)
    rows = []
    for sample, rs in zip(run.samples, run.rate_sets):
        row = _nan_row(sample.t, sample.gt)
        for name in ("sigma_es", "sigma_el", "sigma_co", "sigma_fp", "di_ab",
                     "sdot_a", "sdot_b", "edot_b", "edot_int", "pdot_a", "beta_b_eff"):
            row[name] = getattr(sample, name)
        row["masked"] = sample.masked
        if not rs.singular:
            row.update(gamma1=rs.gamma1, gamma2=rs.gamma2, gamma3=rs.gamma3,
                       omega_shift=rs.omega_shift, big_gamma=rs.big_gamma,
                       cp_div=cp_divisible(rs, scenario.cfg.sign_band),
                       p_div=p_divisible(rs, scenario.cfg.sign_band,
                                         scenario.cfg.p_criterion_variant),
                       blp=blp_contractive(rs, scenario.cfg.sign_band))
        rows.append(row)
    report = RunReport(scenario=scenario, kind="trace", rows=rows)
    report.wall_time = time.perf_counter() - started
    return report


def run_divisibility(scenario: Scenario, threads: int = 1) -> RunReport:
    """Per-time divisibility verdicts with the state-minimised and map rates."""
    started = time.perf_counter()
    run = divisibility_series(scenario.params, scenario.cfg)
    rows = []
    for v, rs in zip(run.verdicts, run.rate_sets):
        row = _nan_row(v.t, v.gt)
        row["masked"] = v.masked
        row["sigma_min"] = v.sigma_min
        row["sigma_map"] = v.sigma_map
        if not v.masked:
            row.update(gamma1=rs.gamma1, gamma2=rs.gamma2, gamma3=rs.gamma3,
                       omega_shift=rs.omega_shift, big_gamma=rs.big_gamma,
                       cp_div=v.cp_div, p_div=v.p_div, blp=v.blp)
        rows.append(row)
    report = RunReport(scenario=scenario, kind="divisibility", rows=rows)
    report.intervals = {
        attr: [[lo, hi, bool(flag)] for lo, hi, flag in constant_verdict_intervals(run, attr)]
        for attr in ("cp_div", "p_div", "blp")
    }
    report.wall_time = time.perf_counter() - started
    return report


def _format_value(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    x = float(v)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def csv_text(report: RunReport) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in report.rows:
        lines.append(",".join(_format_value(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def write_csv(report: RunReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(report))


def manifest_dict(report: RunReport, csv_name: str, figures: list[str]) -> dict:
    sc = report.scenario
    series = {
        "trace": [
            {"x": "gt", "y": y, "label": lbl} for y, lbl in (
                ("sigma_es", "entropy flow rate (bath energy)"),
                ("sigma_el", "entropy flow rate (effective temperature)"),
                ("sigma_co", "entropy rate vs shifted-gap Gibbs state"),
                ("sigma_fp", "entropy rate vs instantaneous fixed point"),
                ("di_ab", "mutual-information rate"),
            )
        ],
        "divisibility": [
            {"x": "gt", "y": "sigma_min", "label": "minimum entropy rate over initial states"},
            {"x": "gt", "y": "sigma_map", "label": "map entropy production (grid minimum)"},
        ],
    }[report.kind]
    return {
        "generator": f"jcthermo {_version}",
        "kind": report.kind,
        "scenario": {
            "name": sc.name,
            "initial_state": sc.initial_state,
            "config": scenario_to_string(sc),
        },
        "csv": csv_name,
        "columns": list(CSV_COLUMNS),
        "requested_columns": list(sc.outputs),
        "axes": {"x": "gt", "x_label": "g t (dimensionless time)"},
        "series": series,
        "intervals": report.intervals,
        "figures": figures,
        "checks": [
            {"name": c.name, "passed": c.passed, "measured": c.measured,
             "tolerance": c.tolerance, "detail": c.detail}
            for c in report.checks
        ],
        "wall_time_s": round(report.wall_time, 3),
    }


def write_manifest(report: RunReport, path, csv_name: str, figures: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest_dict(report, csv_name, figures), fh, indent=2, sort_keys=True)
        fh.write("\n")


def column(report: RunReport, name: str) -> np.ndarray:
    """One CSV column as a float array (booleans as 0/1, None as nan)."""
    if name not in CSV_COLUMNS:
        raise ConfigError(f"unknown column {name!r}")
    out = np.empty(len(report.rows))
    for i, row in enumerate(report.rows):
        v = row[name]
        out[i] = math.nan if v is None else float(v)
    return out

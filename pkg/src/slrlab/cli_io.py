"""Config files, CSV serialization, SVG plots, and the command line.

Config files are line-oriented ``key = value`` text: '#' starts a
comment, blank lines are ignored, unknown keys are rejected with the
offending line number.  Serialization is canonical (fixed key order,
repr floats), so parse(format(cfg)) is the identity and formatted
configs are byte-stable.

Trajectory CSVs carry the exact header

    k,loss,grad_norm_sq,min_grad_sq,g_k,eta_k,u_k,sum_eta,envelope_det,envelope_case

one row per recorded eval point, with floats printed to 17 significant
digits so values round-trip exactly.  The last row's u_k is nan (no
step leaves the final iterate) and the k=0 row's envelopes are inf/nan
(the partial step-size sum is empty there).  All writers are
deterministic byte for byte for identical inputs.

Exit codes: 0 success, 1 invalid configuration or failed validation,
2 runtime error.  The environment variable SLRLAB_SEED, when set,
overrides master_seed for every command that runs the optimizer.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import harness, problems, sf, stats, validator
from .optimizer import SCHEDULE_FAMILIES, RNG_ALGORITHM, StepSizeSchedule, run, split_seed
from .validator import ConditionReport, TheoremCase

TRAJECTORY_HEADER = "k,loss,grad_norm_sq,min_grad_sq,g_k,eta_k,u_k,sum_eta,envelope_det,envelope_case"
REPORT_HEADER = "k,mean_a,mean_b,t,df,p,significant,wins_a"

_REQUIRED = object()

_PROBLEM_FIELDS: dict[str, dict[str, tuple[type, object]]] = {
    "quadratic": {"dim": (int, _REQUIRED), "cond": (float, 1.0), "sigma": (float, 0.0), "seed": (int, 0)},
    "rosenbrock": {"sigma": (float, 0.0)},
    "logreg": {"n": (int, _REQUIRED), "d": (int, _REQUIRED), "reg": (float, 0.0), "seed": (int, 0)},
}
_SF_FIELDS: dict[str, dict[str, tuple[type, object]]] = {
    "constant": {"value": (float, _REQUIRED)},
    "uniform_root": {"c1": (float, _REQUIRED), "c2": (float, _REQUIRED)},
}
_CASE_TOKENS = {c.value: c for c in TheoremCase}


class ConfigError(ValueError):
    """Invalid configuration; message names the key and line."""


@dataclass(frozen=True)
class ExperimentConfig:
    problem_family: str
    problem_params: tuple[tuple[str, int | float], ...]
    schedule_family: str
    eta: float
    sf_kind: str
    sf_params: tuple[tuple[str, float], ...]
    iterations: int
    eval_every: int = 10
    n_seeds: int = 40
    master_seed: int = 0
    checkpoints: tuple[int, ...] | str = "auto"
    out_dir: str = "out"
    theorem_case: TheoremCase | None = None

    def problem_param(self, name: str):
        return dict(self.problem_params)[name]

    def sf_param(self, name: str) -> float:
        return dict(self.sf_params)[name]


def _parse_scalar(raw: str, typ: type, key: str, line: int):
    raw = raw.strip()
    if typ is int:
        try:
            return int(raw, 10)
        except ValueError:
            raise ConfigError(f"line {line}: {key}: expected an integer, got {raw!r}") from None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {line}: {key}: expected a number, got {raw!r}") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text; rejects unknown keys, bad types, bad values."""
    entries: dict[str, tuple[str, int]] = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {rawline.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {rawline.strip()!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)

    def take(key: str) -> tuple[str, int] | None:
        return entries.pop(key, None)

    def need(key: str) -> tuple[str, int]:
        got = take(key)
        if got is None:
            raise ConfigError(f"missing required key {key!r}")
        return got

    raw, line = need("problem")
    if raw not in _PROBLEM_FIELDS:
        raise ConfigError(f"line {line}: problem: unknown family {raw!r}")
    problem_family = raw
    problem_params = []
    for name, (typ, default) in _PROBLEM_FIELDS[problem_family].items():
        got = take(f"problem.{name}")
        if got is None:
            if default is _REQUIRED:
                raise ConfigError(f"missing required key 'problem.{name}' for problem = {problem_family}")
            problem_params.append((name, default))
        else:
            problem_params.append((name, _parse_scalar(got[0], typ, f"problem.{name}", got[1])))

    raw, line = need("schedule")
    if raw not in SCHEDULE_FAMILIES:
        raise ConfigError(f"line {line}: schedule: unknown family {raw!r}")
    schedule_family = raw
    raw, line = need("schedule.eta")
    eta = _parse_scalar(raw, float, "schedule.eta", line)
    if not eta > 0:
        raise ConfigError(f"line {line}: schedule.eta: must be > 0")

    raw, line = need("sf")
    if raw not in _SF_FIELDS:
        raise ConfigError(f"line {line}: sf: unknown kind {raw!r}")
    sf_kind = raw
    sf_params = []
    sf_lines = {}
    for name, (typ, default) in _SF_FIELDS[sf_kind].items():
        got = take(f"sf.{name}")
        if got is None:
            raise ConfigError(f"missing required key 'sf.{name}' for sf = {sf_kind}")
        sf_params.append((name, _parse_scalar(got[0], typ, f"sf.{name}", got[1])))
        sf_lines[name] = got[1]
    spd = dict(sf_params)
    if sf_kind == "constant" and not spd["value"] > 0:
        raise ConfigError(f"line {sf_lines['value']}: sf.value: must be > 0")
    if sf_kind == "uniform_root":
        if not spd["c1"] > 0:
            raise ConfigError(f"line {sf_lines['c1']}: sf.c1: must be > 0")
        if not spd["c2"] > spd["c1"]:
            raise ConfigError(f"line {sf_lines['c2']}: sf.c2: must exceed sf.c1")

    raw, line = need("iterations")
    iterations = _parse_scalar(raw, int, "iterations", line)
    if iterations < 1:
        raise ConfigError(f"line {line}: iterations: must be >= 1")
    iter_line = line

    got = take("eval_every")
    if got is None:
        eval_every = 10
    else:
        eval_every = _parse_scalar(got[0], int, "eval_every", got[1])
        if eval_every < 1:
            raise ConfigError(f"line {got[1]}: eval_every: must be >= 1")
    if iterations % eval_every != 0:
        raise ConfigError(f"line {iter_line}: iterations: must be a multiple of eval_every ({eval_every})")

    got = take("n_seeds")
    n_seeds = 40 if got is None else _parse_scalar(got[0], int, "n_seeds", got[1])
    if n_seeds < 1:
        raise ConfigError(f"line {got[1]}: n_seeds: must be >= 1")

    raw, line = need("master_seed")
    master_seed = _parse_scalar(raw, int, "master_seed", line)

    got = take("checkpoints")
    if got is None or got[0].strip() == "auto":
        checkpoints: tuple[int, ...] | str = "auto"
    else:
        try:
            ks = tuple(int(part.strip(), 10) for part in got[0].split(","))
        except ValueError:
            raise ConfigError(f"line {got[1]}: checkpoints: expected 'auto' or comma-separated integers") from None
        for k in ks:
            if k % eval_every != 0 or not (0 <= k <= iterations):
                raise ConfigError(f"line {got[1]}: checkpoints: {k} is not a recorded eval point")
        checkpoints = ks

    got = take("out_dir")
    out_dir = "out" if got is None else got[0]

    got = take("theorem_case")
    if got is None:
        theorem_case = None
    else:
        if got[0] not in _CASE_TOKENS:
            raise ConfigError(
                f"line {got[1]}: theorem_case: expected one of {sorted(_CASE_TOKENS)}, got {got[0]!r}"
            )
        theorem_case = _CASE_TOKENS[got[0]]

    if entries:
        key = min(entries, key=lambda k: entries[k][1])
        raise ConfigError(f"line {entries[key][1]}: unknown key {key!r}")

    return ExperimentConfig(
        problem_family=problem_family,
        problem_params=tuple(problem_params),
        schedule_family=schedule_family,
        eta=eta,
        sf_kind=sf_kind,
        sf_params=tuple(sf_params),
        iterations=iterations,
        eval_every=eval_every,
        n_seeds=n_seeds,
        master_seed=master_seed,
        checkpoints=checkpoints,
        out_dir=out_dir,
        theorem_case=theorem_case,
    )


def _fmt_value(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def format_config(cfg: ExperimentConfig) -> str:
    """Canonical text for a config; parse(format(cfg)) == cfg."""
    lines = [f"problem = {cfg.problem_family}"]
    for name, value in cfg.problem_params:
        lines.append(f"problem.{name} = {_fmt_value(value)}")
    lines.append(f"schedule = {cfg.schedule_family}")
    lines.append(f"schedule.eta = {_fmt_value(cfg.eta)}")
    lines.append(f"sf = {cfg.sf_kind}")
    for name, value in cfg.sf_params:
        lines.append(f"sf.{name} = {_fmt_value(value)}")
    lines.append(f"iterations = {cfg.iterations}")
    lines.append(f"eval_every = {cfg.eval_every}")
    lines.append(f"n_seeds = {cfg.n_seeds}")
    lines.append(f"master_seed = {cfg.master_seed}")
    if cfg.checkpoints == "auto":
        lines.append("checkpoints = auto")
    else:
        lines.append("checkpoints = " + ",".join(str(k) for k in cfg.checkpoints))
    lines.append(f"out_dir = {cfg.out_dir}")
    if cfg.theorem_case is not None:
        lines.append(f"theorem_case = {cfg.theorem_case.value}")
    return "\n".join(lines) + "\n"


def build_problem(cfg: ExperimentConfig) -> problems.ProblemSpec:
    p = dict(cfg.problem_params)
    if cfg.problem_family == "quadratic":
        return problems.make_quadratic(p["dim"], p["cond"], p["sigma"], p["seed"])
    if cfg.problem_family == "rosenbrock":
        return problems.make_rosenbrock(p["sigma"])
    return problems.make_logreg_nonconvex(p["n"], p["d"], p["reg"], p["seed"])


def build_schedule(cfg: ExperimentConfig) -> StepSizeSchedule:
    return StepSizeSchedule(cfg.schedule_family, cfg.eta)


def build_sf(cfg: ExperimentConfig) -> sf.SFSpec:
    p = dict(cfg.sf_params)
    if cfg.sf_kind == "constant":
        return sf.constant(p["value"])
    return sf.uniform_root(p["c1"], p["c2"])


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and parse a config file, applying the SLRLAB_SEED override."""
    text = Path(path).read_text()
    cfg = parse_config(text)
    env = os.environ.get("SLRLAB_SEED")
    if env is not None:
        try:
            seed = int(env, 10)
        except ValueError:
            raise ConfigError(f"SLRLAB_SEED: expected an integer, got {env!r}") from None
        cfg = ExperimentConfig(**{**cfg.__dict__, "master_seed": seed})
    return cfg


# ---------------------------------------------------------------------------
# CSV serialization


def _f17(x: float) -> str:
    return f"{float(x):.17g}"


def write_trajectory_csv(traj, path: str | Path, case_env: harness.RateEnvelope | None = None) -> None:
    """Write one trajectory with the fixed 10-column schema."""
    ks = traj.eval_points
    env_det = np.full(len(ks), np.inf)
    pos = traj.sum_eta > 0
    env_det[pos] = 1.0 / traj.sum_eta[pos]
    case_vals = np.full(len(ks), np.nan)
    if case_env is not None:
        lookup = {int(k): float(v) for k, v in zip(case_env.ks, case_env.values)}
        for i, k in enumerate(ks):
            if int(k) in lookup:
                case_vals[i] = lookup[int(k)]
    g_series = traj.g_series if traj.g_series is not None else np.full(len(ks), np.nan)
    lines = [TRAJECTORY_HEADER]
    for i, k in enumerate(ks):
        lines.append(
            ",".join(
                [
                    str(int(k)),
                    _f17(traj.loss[i]),
                    _f17(traj.grad_norm_sq[i]),
                    _f17(traj.min_grad_sq[i]),
                    _f17(g_series[i]),
                    _f17(traj.eta_eval[i]),
                    _f17(traj.u_eval[i]),
                    _f17(traj.sum_eta[i]),
                    _f17(env_det[i]),
                    _f17(case_vals[i]),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Read a trajectory CSV back into column arrays."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise ValueError(f"{path}: not a trajectory CSV (bad header)")
    names = TRAJECTORY_HEADER.split(",")
    cols: dict[str, list[float]] = {n: [] for n in names}
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(names):
            raise ValueError(f"{path}: malformed row {line!r}")
        for n, p in zip(names, parts):
            cols[n].append(float(p))
    out = {n: np.array(v) for n, v in cols.items()}
    out["k"] = out["k"].astype(int)
    return out


def write_condition_reports_csv(reports: list[ConditionReport], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["condition", "holds", "first_violation_k", "detail"])
        for r in reports:
            w.writerow(
                [
                    r.condition_name,
                    "true" if r.holds else "false",
                    "" if r.first_violation_k is None else r.first_violation_k,
                    r.detail,
                ]
            )


def write_report(report: stats.ComparisonReport, path: str | Path) -> None:
    """Comparison report as CSV with '#'-prefixed metadata lines."""
    meta = [
        ("metric", report.metric),
        ("correction", report.correction),
        ("fwer", repr(report.fwer)),
        ("paired", "true" if report.paired else "false"),
        ("n_a", report.n_a),
        ("n_b", report.n_b),
        ("excluded_a", report.excluded_a),
        ("excluded_b", report.excluded_b),
        ("config_digest_a", report.config_digest_a),
        ("config_digest_b", report.config_digest_b),
        ("notes", json.dumps(report.notes)),
    ]
    lines = [f"# {k} = {v}" for k, v in meta]
    lines.append(REPORT_HEADER)
    for i, k in enumerate(report.checkpoints):
        wins = "" if report.wins_a is None else str(report.wins_a[i])
        lines.append(
            ",".join(
                [
                    str(k),
                    _f17(report.mean_a[i]),
                    _f17(report.mean_b[i]),
                    _f17(report.t[i]),
                    _f17(report.df[i]),
                    _f17(report.p[i]),
                    "true" if report.significant[i] else "false",
                    wins,
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_report(path: str | Path) -> stats.ComparisonReport:
    """Inverse of write_report."""
    lines = Path(path).read_text().splitlines()
    meta: dict[str, str] = {}
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, value = lines[i][1:].strip().partition(" = ")
        meta[key] = value
        i += 1
    if i >= len(lines) or lines[i] != REPORT_HEADER:
        raise ValueError(f"{path}: not a comparison report CSV")
    checkpoints, mean_a, mean_b, ts, dfs, ps, sig, wins = [], [], [], [], [], [], [], []
    any_wins = False
    for line in lines[i + 1 :]:
        parts = line.split(",")
        checkpoints.append(int(parts[0]))
        mean_a.append(float(parts[1]))
        mean_b.append(float(parts[2]))
        ts.append(float(parts[3]))
        dfs.append(float(parts[4]))
        ps.append(float(parts[5]))
        sig.append(parts[6] == "true")
        if parts[7] != "":
            any_wins = True
            wins.append(int(parts[7]))
    return stats.ComparisonReport(
        metric=meta["metric"],
        correction=meta["correction"],
        fwer=float(meta["fwer"]),
        paired=meta["paired"] == "true",
        checkpoints=checkpoints,
        mean_a=mean_a,
        mean_b=mean_b,
        t=ts,
        df=dfs,
        p=ps,
        significant=sig,
        wins_a=wins if any_wins else None,
        n_a=int(meta["n_a"]),
        n_b=int(meta["n_b"]),
        excluded_a=int(meta["excluded_a"]),
        excluded_b=int(meta["excluded_b"]),
        config_digest_a=meta["config_digest_a"],
        config_digest_b=meta["config_digest_b"],
        notes=json.loads(meta["notes"]),
    )


def report_text(report: stats.ComparisonReport) -> str:
    """Human-readable comparison summary."""
    lines = [
        f"metric: {report.metric}   correction: {report.correction} (fwer={report.fwer:g})   "
        f"paired: {'yes' if report.paired else 'no'}",
        f"arms: a={report.config_digest_a} (n={report.n_a}, excluded {report.excluded_a})   "
        f"b={report.config_digest_b} (n={report.n_b}, excluded {report.excluded_b})",
    ]
    for note in report.notes:
        lines.append(f"note: {note}")
    n_sig = sum(report.significant)
    a_ahead = sum(1 for x, y in zip(report.mean_a, report.mean_b) if x < y)
    lines.append(
        f"direction (not a gate): arm a has the lower mean at {a_ahead} of {len(report.checkpoints)} checkpoints"
    )
    lines.append(f"significant after correction: {n_sig} of {len(report.checkpoints)} checkpoints")
    lines.append("")
    lines.append(f"{'k':>10} {'mean_a':>13} {'mean_b':>13} {'t':>10} {'df':>8} {'p':>12} {'sig':>4} {'wins_a':>7}")
    for i, k in enumerate(report.checkpoints):
        wins = "-" if report.wins_a is None else str(report.wins_a[i])
        lines.append(
            f"{k:>10d} {report.mean_a[i]:>13.6g} {report.mean_b[i]:>13.6g} {report.t[i]:>10.4g} "
            f"{report.df[i]:>8.4g} {report.p[i]:>12.6g} {'yes' if report.significant[i] else 'no':>4} {wins:>7}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SVG rendering

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]
_W, _H = 840, 520
_ML, _MR, _MT, _MB = 72, 24, 40, 52


def render_svg(
    series: dict[str, tuple[np.ndarray, np.ndarray]],
    path: str | Path,
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    title: str | None = None,
) -> None:
    """Render line series to a standalone SVG: one polyline per series.

    Non-finite points (and non-positive ones on log axes) are dropped
    per series.  Output is deterministic for identical inputs.
    """
    if not series:
        raise ValueError("render_svg requires at least one series")

    def tf(vals: np.ndarray, log: bool) -> np.ndarray:
        return np.log10(vals) if log else vals

    cleaned: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for name, (xs, ys) in series.items():
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.shape != ys.shape:
            raise ValueError(f"series {name!r}: x and y lengths differ")
        keep = np.isfinite(xs) & np.isfinite(ys)
        if logx:
            keep &= xs > 0
        if logy:
            keep &= ys > 0
        if keep.sum() >= 1:
            cleaned[name] = (xs[keep], ys[keep])
    if not cleaned:
        raise ValueError("no plottable points in any series")

    all_x = np.concatenate([tf(v[0], logx) for v in cleaned.values()])
    all_y = np.concatenate([tf(v[1], logy) for v in cleaned.values()])
    x0, x1 = float(all_x.min()), float(all_x.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    if x0 == x1:
        x0, x1 = x0 - 1.0, x1 + 1.0
    if y0 == y1:
        y0, y1 = y0 - 1.0, y1 + 1.0

    def px(v: float) -> float:
        return _ML + (v - x0) / (x1 - x0) * (_W - _ML - _MR)

    def py(v: float) -> float:
        return _H - _MB - (v - y0) / (y1 - y0) * (_H - _MT - _MB)

    def tick_label(v: float, log: bool) -> str:
        return f"{10.0**v:.3g}" if log else f"{v:.4g}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{title}</text>'
        )
    # Axes box and ticks.
    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" fill="none" stroke="#333"/>'
    )
    for t in np.linspace(x0, x1, 5):
        xp = px(float(t))
        parts.append(f'<line x1="{xp:.2f}" y1="{_H - _MB}" x2="{xp:.2f}" y2="{_H - _MB + 5}" stroke="#333"/>')
        parts.append(
            f'<text x="{xp:.2f}" y="{_H - _MB + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">'
            f"{tick_label(float(t), logx)}</text>"
        )
    for t in np.linspace(y0, y1, 5):
        yp = py(float(t))
        parts.append(f'<line x1="{_ML - 5}" y1="{yp:.2f}" x2="{_ML}" y2="{yp:.2f}" stroke="#333"/>')
        parts.append(
            f'<text x="{_ML - 8}" y="{yp + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="11">'
            f"{tick_label(float(t), logy)}</text>"
        )
    if xlabel:
        parts.append(
            f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{xlabel}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="16" y="{(_MT + _H - _MB) / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="13" transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.1f})">{ylabel}</text>'
        )
    for i, (name, (xs, ys)) in enumerate(cleaned.items()):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(v):.2f},{py(w):.2f}" for v, w in zip(tf(xs, logx), tf(ys, logy)))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = _MT + 16 + 16 * i
        parts.append(f'<line x1="{_ML + 10}" y1="{ly - 4}" x2="{_ML + 34}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{_ML + 40}" y="{ly}" font-family="sans-serif" font-size="12">{name}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# Commands


def _traj_filename(i: int) -> str:
    return f"run_seed{i:03d}.csv"


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    schedule = build_schedule(cfg)
    sf_spec = build_sf(cfg)
    horizon = min(cfg.iterations, 100_000)
    gating: list[ConditionReport] = list(validator.check_assumption2(schedule, horizon))
    out = [validator.format_reports(gating).rstrip("\n")]

    if cfg.sf_kind == "uniform_root":
        res = validator.classify_prop1(cfg.sf_param("c1"), cfg.sf_param("c2"))
        out.append(f"prop1_regime = {res.label} | mean_direction = {res.mean_direction.value}")

    if cfg.theorem_case is not None:
        problem = build_problem(cfg)
        profile = sf.moment_profile(sf_spec, horizon)
        case_reports = validator.check_theorem_case(
            profile, cfg.theorem_case, problem.B, problem.L, schedule, horizon
        )
        gating.extend(case_reports)
        out.append(validator.format_reports(case_reports).rstrip("\n"))
        acc = validator.acceleration_check(profile, cfg.theorem_case)
        inc = validator.increment_check(profile, cfg.theorem_case)
        out.append(validator.format_reports([acc, inc]).rstrip("\n"))

    print("\n".join(out))
    return 1 if any(not r.holds for r in gating) else 0


def _run_all(cfg: ExperimentConfig):
    problem = build_problem(cfg)
    schedule = build_schedule(cfg)
    sf_spec = build_sf(cfg)
    seeds = [split_seed(cfg.master_seed, i) for i in range(cfg.n_seeds)]
    trajs = [
        run(problem, schedule, sf_spec, cfg.iterations, eval_every=cfg.eval_every, seed=s)
        for s in seeds
    ]
    for t in trajs:
        harness.attach_gk(t, schedule)
    return problem, schedule, sf_spec, seeds, trajs


def _metadata_text(cfg: ExperimentConfig, digest: str, seeds: list[int]) -> str:
    lines = [
        "# run metadata",
        f"config_digest = {digest}",
        f"rng_algorithm = {RNG_ALGORITHM}",
        "seeds = " + ",".join(str(s) for s in seeds),
        "",
        format_config(cfg).rstrip("\n"),
    ]
    return "\n".join(lines) + "\n"


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out if args.out is not None else cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, _, _, seeds, trajs = _run_all(cfg)
    for i, t in enumerate(trajs):
        write_trajectory_csv(t, out_dir / _traj_filename(i))
    (out_dir / "metadata.txt").write_text(_metadata_text(cfg, trajs[0].config_digest, seeds))
    diverged = sum(t.diverged for t in trajs)
    print(f"wrote {len(trajs)} trajectories to {out_dir}" + (f" ({diverged} diverged)" if diverged else ""))
    return 0


def _cmd_compare(args) -> int:
    cfg_a = load_config(args.config_a)
    cfg_b = load_config(args.config_b)
    same = ("problem_family", "problem_params", "schedule_family", "eta", "iterations",
            "eval_every", "n_seeds", "master_seed", "checkpoints")
    for name in same:
        if getattr(cfg_a, name) != getattr(cfg_b, name):
            raise ConfigError(f"compare: configs must agree on {name!r} (only the sf block may differ)")
    if cfg_a.n_seeds < 2:
        raise ConfigError("compare: n_seeds must be >= 2")

    problem = build_problem(cfg_a)
    schedule = build_schedule(cfg_a)
    checkpoints = None if cfg_a.checkpoints == "auto" else list(cfg_a.checkpoints)
    set_a = stats.run_multi_seed(
        problem, schedule, build_sf(cfg_a), cfg_a.iterations,
        n_seeds=cfg_a.n_seeds, master_seed=cfg_a.master_seed,
        eval_every=cfg_a.eval_every, checkpoints=checkpoints,
    )
    set_b = stats.run_multi_seed(
        problem, schedule, build_sf(cfg_b), cfg_b.iterations,
        n_seeds=cfg_b.n_seeds, master_seed=cfg_b.master_seed,
        eval_every=cfg_b.eval_every, checkpoints=checkpoints,
    )
    for ta, tb in zip(set_a.trajectories, set_b.trajectories):
        if ta.grad_stream_digest != tb.grad_stream_digest:
            raise RuntimeError("paired gradient streams diverged between arms; stream split broken")

    report = stats.compare(set_a, set_b, metric=args.metric)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report(report, out_dir / "report.csv")
    text = "paired gradient streams verified identical per seed\n" + report_text(report)
    (out_dir / "report.txt").write_text(text)
    print(text.rstrip("\n"))
    return 0


def _cmd_envelope(args) -> int:
    cfg = load_config(args.config)
    case = _CASE_TOKENS.get(args.case) if args.case else cfg.theorem_case
    if case is None:
        raise ConfigError("envelope: pass --case or set theorem_case in the config")

    problem = build_problem(cfg)
    schedule = build_schedule(cfg)
    sf_spec = build_sf(cfg)
    traj = run(problem, schedule, sf_spec, cfg.iterations, eval_every=cfg.eval_every,
               seed=split_seed(cfg.master_seed, 0))
    harness.attach_gk(traj, schedule)

    profile = sf.moment_profile(sf_spec, cfg.iterations)
    checks = validator.check_theorem_case(profile, case, problem.B, problem.L, schedule, cfg.iterations)
    certified = all(r.holds for r in checks) and traj.certified
    env = harness.trajectory_envelope(traj, case, sf_spec, schedule)
    env.certified = certified

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(traj, out_dir / "trajectory.csv", case_env=env)

    lines = [f"case = {case.value}", f"certified = {'yes' if certified else 'no'}", ""]
    lines.append(validator.format_reports(checks).rstrip("\n"))
    lines.append(validator.format_reports(
        [validator.acceleration_check(profile, case), validator.increment_check(profile, case)]
    ).rstrip("\n"))
    if traj.diverged:
        lines.append(f"diagnostic = unavailable (run diverged at k={traj.truncated_at})")
    else:
        mask = traj.eval_points >= 1
        k_lo = max(cfg.eval_every, cfg.iterations // 100)
        diag = harness.little_o_diagnostic(traj.min_grad_sq[mask], env, k_lo, cfg.iterations)
        lines.append(
            f"diagnostic = {diag.verdict.value} | window k in [{diag.k_lo}, {diag.k_hi}] | "
            f"slope = {diag.window_slope:.4g} | r_lo = {diag.r_lo:.6g} | r_hi = {diag.r_hi:.6g}"
        )
    (out_dir / "diagnostic.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def _cmd_plot(args) -> int:
    in_dir = Path(args.input)
    files = sorted(in_dir.glob("*.csv"))
    series: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    first = True
    for f in files:
        try:
            cols = read_trajectory_csv(f)
        except ValueError:
            continue  # not a trajectory file (e.g. report.csv)
        series[f.stem] = (cols["k"].astype(float), cols["min_grad_sq"])
        if first:
            series["envelope_det"] = (cols["k"].astype(float), cols["envelope_det"])
            if np.isfinite(cols["envelope_case"]).any():
                series["envelope_case"] = (cols["k"].astype(float), cols["envelope_case"])
            first = False
    if not series:
        raise ConfigError(f"plot: no trajectory CSVs found in {in_dir}")
    render_svg(series, args.out, xlabel="iteration k", ylabel="min grad norm^2 / envelope",
               logx=True, logy=True, title="trajectories and envelopes")
    print(f"wrote {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slrlab",
        description="SGD with a multiplicative stochastic learning rate: runs, validation, envelopes, comparisons.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check schedule and theorem-case conditions for a config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("run", help="run the configured experiment and write trajectory CSVs")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output directory (default: out_dir from the config)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="paired multi-seed comparison of two configs")
    p.add_argument("--config-a", required=True)
    p.add_argument("--config-b", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metric", default="loss", choices=list(stats.METRICS))
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("envelope", help="run once and compare against a theorem-case envelope")
    p.add_argument("--config", required=True)
    p.add_argument("--case", default=None, choices=sorted(_CASE_TOKENS))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_envelope)

    p = sub.add_parser("plot", help="render trajectory CSVs from a directory to SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()

"""Multi-seed experiments and their statistical comparison.

Two arms are compared checkpoint by checkpoint with Welch's unequal
variance t-test and a Bonferroni family-wise correction.  Arms built
from the same master seed share per-seed gradient streams (the SF
stream is split off separately), so a paired comparison isolates the
effect of the stochasticity factor.

The two-sided p-value uses the exact identity
p = I_x(df/2, 1/2) with x = df/(df + t^2), where I is the regularized
incomplete beta function, evaluated here with the standard continued
fraction (Lentz's algorithm).  No statistics library is involved, which
keeps the p-values reproducible to the last bit across environments;
the continued fraction is tolerance 1e-12 or better over the df range
that seed counts produce.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import problems as pb
from . import sf as sfmod
from .optimizer import StepSizeSchedule, Trajectory, config_digest, run, split_seed

_BETA_EPS = 1e-14
_BETA_FPMIN = 1e-300
_BETA_MAXIT = 300


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta (Numerical Recipes form,
    # modified Lentz evaluation).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_FPMIN:
        d = _BETA_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise RuntimeError(f"incomplete beta continued fraction failed to converge (a={a}, b={b}, x={x})")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0, 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc_reg requires a > 0 and b > 0")
    if x < 0.0 or x > 1.0:
        raise ValueError("betainc_reg requires 0 <= x <= 1")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t; exactly 1.0 at t = 0."""
    if df <= 0:
        raise ValueError("df must be > 0")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return betainc_reg(0.5 * df, 0.5, x)


def t_cdf(t: float, df: float) -> float:
    """CDF of Student's t with df degrees of freedom."""
    half_p = 0.5 * t_two_sided_p(t, df)
    return 1.0 - half_p if t >= 0 else half_p


def welch_t(a: np.ndarray, b: np.ndarray) -> tuple[float, float, float]:
    """Welch's t statistic, Welch-Satterthwaite df, two-sided p.

    Degenerate inputs follow fixed conventions: two samples with zero
    variance and equal means give (0, n_a+n_b-2, 1); zero variances
    with different means give p = 0 with an infinite t, and a warning
    is issued because the test statistic is off its support.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("welch_t requires at least 2 samples per side")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("welch_t requires finite samples")
    na, nb = len(a), len(b)
    ma, mb = float(a.mean()), float(b.mean())
    va, vb = float(a.var(ddof=1)), float(b.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        df_conv = float(na + nb - 2)
        if ma == mb:
            return 0.0, df_conv, 1.0
        warnings.warn("welch_t: zero variances with unequal means; p = 0 by convention")
        return math.copysign(math.inf, ma - mb), df_conv, 0.0
    se2 = va / na + vb / nb
    t = (ma - mb) / math.sqrt(se2)
    df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    return t, df, t_two_sided_p(t, df)


def bonferroni(p_values: list[float], fwer: float = 0.05) -> list[bool]:
    """Significance flags p_i <= fwer / m (boundary inclusive)."""
    m = len(p_values)
    if m == 0:
        raise ValueError("bonferroni requires at least one p-value")
    if not (0.0 < fwer < 1.0):
        raise ValueError("fwer must be in (0, 1)")
    if any(not (0.0 <= p <= 1.0) for p in p_values):
        raise ValueError("p-values must lie in [0, 1]")
    thresh = fwer / m
    return [p <= thresh for p in p_values]


@dataclass(eq=False)
class RunSet:
    """Trajectories of one configuration across seeds."""

    config_digest: str
    iterations: int
    eval_every: int
    master_seed: int
    seeds: list[int]
    trajectories: list[Trajectory]
    checkpoints: list[int]


def auto_checkpoints(iterations: int, eval_every: int, n: int = 10) -> list[int]:
    """n log-spaced eval points in [eval_every, iterations], deduplicated."""
    if iterations < eval_every:
        raise ValueError("iterations must be >= eval_every")
    targets = np.logspace(np.log10(eval_every), np.log10(iterations), n)
    ks = []
    for t in targets:
        k = int(round(t / eval_every)) * eval_every
        k = min(max(k, eval_every), iterations)
        if k not in ks:
            ks.append(k)
    return ks


def run_multi_seed(
    problem: pb.ProblemSpec,
    schedule: StepSizeSchedule,
    sf_spec: sfmod.SFSpec,
    iterations: int,
    n_seeds: int = 40,
    master_seed: int = 0,
    eval_every: int = 10,
    checkpoints: list[int] | None = None,
) -> RunSet:
    """Run one configuration under n_seeds split seeds.

    Seed i is split_seed(master_seed, i); the split is collision-checked
    so the set never silently contains duplicate streams.
    """
    if n_seeds < 2:
        raise ValueError("n_seeds must be >= 2")
    seeds = [split_seed(master_seed, i) for i in range(n_seeds)]
    if len(set(seeds)) != n_seeds:
        raise ValueError("seed split collision; choose a different master_seed")
    if checkpoints is None:
        checkpoints = auto_checkpoints(iterations, eval_every)
    for k in checkpoints:
        if k % eval_every != 0 or not (0 <= k <= iterations):
            raise ValueError(f"checkpoint {k} is not a valid eval point")
    trajectories = [
        run(problem, schedule, sf_spec, iterations, eval_every=eval_every, seed=s) for s in seeds
    ]
    return RunSet(
        config_digest=config_digest(problem, schedule, sf_spec, iterations, eval_every),
        iterations=iterations,
        eval_every=eval_every,
        master_seed=int(master_seed),
        seeds=seeds,
        trajectories=trajectories,
        checkpoints=list(checkpoints),
    )


METRICS = ("loss", "min_grad_sq")


def _metric_at(traj: Trajectory, metric: str, k: int) -> float:
    idx = k // traj.eval_every
    if k % traj.eval_every != 0 or idx >= len(traj.eval_points):
        raise ValueError(f"k={k} is not a recorded eval point")
    return float(getattr(traj, metric)[idx])


@dataclass
class ComparisonReport:
    """Checkpointed Welch/Bonferroni comparison of two run sets."""

    metric: str
    correction: str
    fwer: float
    paired: bool
    checkpoints: list[int]
    mean_a: list[float]
    mean_b: list[float]
    t: list[float]
    df: list[float]
    p: list[float]
    significant: list[bool]
    wins_a: list[int] | None
    n_a: int
    n_b: int
    excluded_a: int
    excluded_b: int
    config_digest_a: str
    config_digest_b: str
    notes: list[str] = field(default_factory=list)


def compare(
    a: RunSet,
    b: RunSet,
    metric: str = "loss",
    checkpoints: list[int] | None = None,
    fwer: float = 0.05,
    paired: bool = True,
) -> ComparisonReport:
    """Welch-compare two run sets checkpoint by checkpoint.

    Diverged trajectories are excluded from the tests and counted in
    the report.  Paired mode additionally requires the two sets to
    share their seed list, which with the stream design means shared
    gradient noise.  Direction (who is ahead) is reported via the means
    and win counts, never gated on.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    if a.iterations != b.iterations or a.eval_every != b.eval_every:
        raise ValueError("run sets must share horizon and eval cadence")
    if checkpoints is None:
        if a.checkpoints != b.checkpoints:
            raise ValueError("run sets disagree on checkpoints; pass them explicitly")
        checkpoints = list(a.checkpoints)
    if len(checkpoints) == 0:
        raise ValueError("need at least one checkpoint")
    for k in checkpoints:
        if k % a.eval_every != 0 or not (0 <= k <= a.iterations):
            raise ValueError(f"checkpoint {k} is not a valid eval point")
    if paired and a.seeds != b.seeds:
        raise ValueError("paired comparison requires identical seed lists")

    ok_a = [t for t in a.trajectories if not t.diverged]
    ok_b = [t for t in b.trajectories if not t.diverged]
    notes: list[str] = []
    if len(ok_a) < len(a.trajectories) or len(ok_b) < len(b.trajectories):
        notes.append(
            f"excluded diverged runs: {len(a.trajectories) - len(ok_a)} from a, "
            f"{len(b.trajectories) - len(ok_b)} from b"
        )
    if len(ok_a) < 2 or len(ok_b) < 2:
        raise ValueError("fewer than 2 non-diverged runs on one side; nothing to test")

    wins: list[int] | None = [] if paired else None
    mean_a, mean_b, ts, dfs, ps = [], [], [], [], []
    for k in checkpoints:
        xs = np.array([_metric_at(t, metric, k) for t in ok_a])
        ys = np.array([_metric_at(t, metric, k) for t in ok_b])
        t_stat, df, p = welch_t(xs, ys)
        mean_a.append(float(xs.mean()))
        mean_b.append(float(ys.mean()))
        ts.append(t_stat)
        dfs.append(df)
        ps.append(p)
        if paired:
            pa = {t.seed: _metric_at(t, metric, k) for t in ok_a}
            pbv = {t.seed: _metric_at(t, metric, k) for t in ok_b}
            shared = [s for s in a.seeds if s in pa and s in pbv]
            wins.append(sum(1 for s in shared if pa[s] < pbv[s]))

    return ComparisonReport(
        metric=metric,
        correction="bonferroni",
        fwer=float(fwer),
        paired=paired,
        checkpoints=list(checkpoints),
        mean_a=mean_a,
        mean_b=mean_b,
        t=ts,
        df=dfs,
        p=ps,
        significant=bonferroni(ps, fwer),
        wins_a=wins,
        n_a=len(ok_a),
        n_b=len(ok_b),
        excluded_a=len(a.trajectories) - len(ok_a),
        excluded_b=len(b.trajectories) - len(ok_b),
        config_digest_a=a.config_digest,
        config_digest_b=b.config_digest,
        notes=notes,
    )

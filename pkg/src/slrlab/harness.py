"""Convergence-rate bookkeeping: the g_k recurrence, envelopes, and a
little-o trend diagnostic.

The g_k sequence is the weighted gradient-norm average driving the
nonconvex rate argument: with w_k = 2*eta_k / sum_{t<=k} eta_t,

    g_0 = y_0,    g_{k+1} = (1 - w_k) g_k + w_k y_k,

where y_k = ||grad f(x_k)||^2.  Note w_0 = 2 exactly, so g_1 = y_0,
and for k >= 1 a decreasing schedule gives w_k <= 1, making every later
g_k a convex combination of past y's; hence g_k >= min_{t<k} y_t.  The
weights depend only on step-size ratios, so rescaling the schedule
leaves the sequence unchanged.

Envelopes are the theoretical decay curves for min_t ||grad f(x_t)||^2
up to the unknown problem constant, one per theorem case, evaluated
from the SF moment closed forms and the partial sums of the schedule:

    case11a: 1 / ((E[u_k] - Var[u_k]) * S_k)     S_k = sum_{t<k} eta_t
    case11b: 1 / (E[u_k] * S_k)
    case12:  (E[u_k] - Var[u_k]) / S_k
    deterministic: 1 / S_k

With the constant factor u = 1 every case collapses to the baseline.

The little-o diagnostic is an honest surrogate for the asymptotic
statement min_grad = o(envelope): it fits the log-log slope of the
ratio over the trailing half of the window and reports one of
ConsistentWithLittleO / Inconclusive / Violation.  A finite horizon
cannot prove a limit; the verdict is a trend call, nothing more.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import sf as sfmod
from .optimizer import StepSizeSchedule, Trajectory, step_size, step_sizes
from .validator import TheoremCase


class Verdict(Enum):
    CONSISTENT = "ConsistentWithLittleO"
    INCONCLUSIVE = "Inconclusive"
    VIOLATION = "Violation"


def _gk_core(values: np.ndarray, ks: np.ndarray, schedule: StepSizeSchedule) -> np.ndarray:
    """g-recurrence over gradient norms observed at iteration indices ks."""
    values = np.asarray(values, dtype=float)
    ks = np.asarray(ks, dtype=int)
    if len(values) == 0:
        raise ValueError("gradient-norm series must be non-empty")
    if len(values) != len(ks):
        raise ValueError("values and indices must have equal length")
    if not np.isfinite(values).all():
        raise ValueError("gradient norms must be finite")
    if (values < 0).any():
        raise ValueError("gradient norms must be >= 0")
    eta = step_sizes(schedule, int(ks[-1]) + 1)
    csum = np.cumsum(eta)
    g = np.empty(len(values) + 1)
    g[0] = values[0]
    for i, k in enumerate(ks):
        w = 2.0 * eta[k] / csum[k]
        g[i + 1] = (1.0 - w) * g[i] + w * values[i]
    return g


def gk_sequence(grad_norm_sq: np.ndarray, schedule: StepSizeSchedule) -> np.ndarray:
    """Apply the recurrence to a per-iteration series; returns len+1 values.

    g[0] = grad_norm_sq[0], and because w_0 = 2 the recurrence forces
    g[1] = grad_norm_sq[0] as well (no clamping is applied).
    """
    grad_norm_sq = np.asarray(grad_norm_sq, dtype=float)
    return _gk_core(grad_norm_sq, np.arange(len(grad_norm_sq)), schedule)


def attach_gk(traj: Trajectory, schedule: StepSizeSchedule) -> np.ndarray:
    """Fill traj.g_series from its recorded gradient norms.

    When eval_every > 1 the recurrence runs over the recorded points
    using the true weights w_k at their iteration indices; this is the
    documented cadence surrogate and coincides with the exact sequence
    at eval_every = 1.  Rows recorded after divergence (non-finite
    gradient norms) are excluded.
    """
    vals = traj.grad_norm_sq
    ks = traj.eval_points
    good = np.isfinite(vals)
    g = _gk_core(vals[good], ks[good], schedule)
    out = np.full(len(vals), np.nan)
    out[good] = g[: good.sum()]
    traj.g_series = out
    return out


@dataclass(eq=False)
class RateEnvelope:
    """Envelope values over iteration indices ks (all >= 1)."""

    case: TheoremCase
    ks: np.ndarray
    values: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    sum_eta: np.ndarray
    certified: bool | None = None


def envelope(case: TheoremCase, sf_spec: sfmod.SFSpec, schedule: StepSizeSchedule, k: int) -> float:
    """Envelope value at a single iteration index k >= 1."""
    if k < 1:
        raise ValueError("envelope requires k >= 1")
    env = envelope_series(case, sf_spec, schedule, np.array([k]))
    return float(env.values[0])


def envelope_series(
    case: TheoremCase,
    sf_spec: sfmod.SFSpec,
    schedule: StepSizeSchedule,
    ks: np.ndarray,
) -> RateEnvelope:
    """Envelope over a sorted array of iteration indices, each >= 1."""
    ks = np.asarray(ks, dtype=int)
    if len(ks) == 0:
        raise ValueError("ks must be non-empty")
    if (ks < 1).any():
        raise ValueError("envelope requires k >= 1")
    k_max = int(ks.max())
    profile = sfmod.moment_profile(sf_spec, k_max)
    mean = profile.mean[ks]
    var = profile.variance[ks]
    # S_k = sum_{t<k} eta_t, exclusive of k.
    csum = np.cumsum(step_sizes(schedule, k_max))
    s = csum[ks - 1]

    if case is TheoremCase.DETERMINISTIC:
        values = 1.0 / s
    elif case is TheoremCase.CASE_11B:
        values = 1.0 / (mean * s)
    elif case in (TheoremCase.CASE_11A, TheoremCase.CASE_12):
        gap = mean - var
        if (gap <= 0).any():
            bad = int(ks[np.argmax(gap <= 0)])
            raise ValueError(f"mean - variance <= 0 at k={bad}; envelope undefined for {case.value}")
        values = 1.0 / (gap * s) if case is TheoremCase.CASE_11A else gap / s
    else:
        raise ValueError(f"unknown case {case!r}")

    return RateEnvelope(case=case, ks=ks, values=values, mean=mean, variance=var, sum_eta=s)


def trajectory_envelope(traj: Trajectory, case: TheoremCase, sf_spec: sfmod.SFSpec, schedule: StepSizeSchedule) -> RateEnvelope:
    """Envelope aligned with a trajectory's recorded points at k >= 1."""
    ks = traj.eval_points[traj.eval_points >= 1]
    return envelope_series(case, sf_spec, schedule, ks)


@dataclass(eq=False)
class LittleODiagnostic:
    """Trend report for ratios min_grad_sq / envelope over a window."""

    ks: np.ndarray
    ratios: np.ndarray
    k_lo: int
    k_hi: int
    r_lo: float
    r_hi: float
    window_slope: float
    verdict: Verdict


def little_o_diagnostic(
    min_grad_sq: np.ndarray,
    env: RateEnvelope,
    k_lo: int,
    k_hi: int,
) -> LittleODiagnostic:
    """Classify the trend of r_k = min_grad_sq / envelope on [k_lo, k_hi].

    min_grad_sq must be aligned with env.ks.  The slope is the least
    squares fit of log r against log k over the trailing half
    [k_hi/2, k_hi].  Verdicts:

    * ConsistentWithLittleO: slope <= -0.05 and r(k_hi) < r(k_lo)
    * Violation: slope >= +0.05 and r(k_hi) > 2 * r(k_lo)
    * Inconclusive otherwise (including too few usable points)
    """
    min_grad_sq = np.asarray(min_grad_sq, dtype=float)
    if min_grad_sq.shape != env.ks.shape:
        raise ValueError("min_grad_sq must align with the envelope grid")
    if not (0 < k_lo < k_hi):
        raise ValueError("need 0 < k_lo < k_hi")

    ratios = min_grad_sq / env.values
    window = (env.ks >= k_lo) & (env.ks <= k_hi)
    if window.sum() < 2:
        raise ValueError("window [k_lo, k_hi] covers fewer than 2 recorded points")
    wks = env.ks[window]
    wr = ratios[window]
    k_lo_eff = int(wks[0])
    k_hi_eff = int(wks[-1])
    r_lo = float(wr[0])
    r_hi = float(wr[-1])

    tail = (wks >= k_hi_eff / 2) & (wr > 0) & np.isfinite(wr)
    if tail.sum() >= 2:
        slope = float(np.polyfit(np.log(wks[tail]), np.log(wr[tail]), 1)[0])
    else:
        slope = np.nan

    verdict = Verdict.INCONCLUSIVE
    if np.isfinite(slope):
        if slope <= -0.05 and r_hi < r_lo:
            verdict = Verdict.CONSISTENT
        elif slope >= 0.05 and r_hi > 2.0 * r_lo:
            verdict = Verdict.VIOLATION

    return LittleODiagnostic(
        ks=wks,
        ratios=wr,
        k_lo=k_lo_eff,
        k_hi=k_hi_eff,
        r_lo=r_lo,
        r_hi=r_hi,
        window_slope=slope,
        verdict=verdict,
    )

"""SGD with a multiplicative stochastic learning rate.

The iterate update is x_{k+1} = x_k - eta_k * u_k * g_k where eta_k is
a deterministic step-size schedule, u_k a stochasticity-factor draw,
and g_k a stochastic gradient.  Iteration counting starts at k = 0.

Randomness discipline: each run owns a 64-bit seed.  Two independent
sub-streams are derived from it by spawn-key splitting (stream 0 feeds
the gradient noise, stream 1 the stochasticity factor), so changing the
SF family leaves the gradient draw sequence untouched.  Runs sharing a
seed are therefore exactly paired across SF arms.  The generator is
numpy PCG64 seeded through SeedSequence; within-version determinism is
what the trajectories rely on, and the algorithm tag is recorded on
every trajectory.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import problems as pb
from . import sf as sfmod

CONSTANT = "constant"
INVERSE_K = "inverse_k"
INVERSE_SQRT_K = "inverse_sqrt_k"
SCHEDULE_FAMILIES = (CONSTANT, INVERSE_K, INVERSE_SQRT_K)

RNG_ALGORITHM = "pcg64-seedseq-v1"
GRAD_STREAM = 0
SF_STREAM = 1

LOSS_DIVERGENCE_LIMIT = 1e12


def split_seed(master_seed: int, index: int) -> int:
    """Child seed i of a master seed: split(master, i).

    Implemented as the first 64-bit word of
    SeedSequence(master, spawn_key=(i,)), so distinct indices give
    statistically independent children and the rule is reproducible
    from the documented constants alone.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def stream_generator(seed: int, stream: int) -> np.random.Generator:
    """PCG64 generator for one named sub-stream of a run seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class StepSizeSchedule:
    """Deterministic positive step sizes eta_k, k >= 0.

    families: constant (eta), inverse_k (eta/(k+1)),
    inverse_sqrt_k (eta/sqrt(k+1)).
    """

    family: str
    eta: float

    def __post_init__(self) -> None:
        if self.family not in SCHEDULE_FAMILIES:
            raise ValueError(f"unknown schedule family: {self.family!r}")
        if not (self.eta > 0):
            raise ValueError("eta must be > 0")


def step_size(schedule: StepSizeSchedule, k: int) -> float:
    """eta_k for k >= 0."""
    if k < 0:
        raise ValueError("iteration index must be >= 0")
    if schedule.family == CONSTANT:
        return schedule.eta
    if schedule.family == INVERSE_K:
        return schedule.eta / (k + 1.0)
    return float(schedule.eta / np.sqrt(k + 1.0))


def step_sizes(schedule: StepSizeSchedule, k_max: int) -> np.ndarray:
    """Vector of eta_k for k = 0..k_max-1."""
    ks = np.arange(float(k_max))
    if schedule.family == CONSTANT:
        return np.full(k_max, schedule.eta)
    if schedule.family == INVERSE_K:
        return schedule.eta / (ks + 1.0)
    return schedule.eta / np.sqrt(ks + 1.0)


def sgd_step(x: np.ndarray, g: np.ndarray, eta_k: float, u_k: float) -> np.ndarray:
    """One update x - eta_k * u_k * g."""
    if not (eta_k > 0 and u_k > 0):
        raise ValueError("eta_k and u_k must be > 0")
    return x - (eta_k * u_k) * g


def config_digest(
    problem: pb.ProblemSpec,
    schedule: StepSizeSchedule,
    sf_spec: sfmod.SFSpec,
    iterations: int,
    eval_every: int,
) -> str:
    """Short stable digest of everything that defines a run but the seed."""
    blob = json.dumps(
        {
            "problem": problem.family,
            "params": problem.params,
            "schedule": [schedule.family, repr(schedule.eta)],
            "sf": [sf_spec.kind, repr(sf_spec.value), repr(sf_spec.c1), repr(sf_spec.c2)],
            "iterations": int(iterations),
            "eval_every": int(eval_every),
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(eq=False)
class Trajectory:
    """Everything recorded about one run.

    Full-objective quantities (loss, gradient norm) are evaluated every
    ``eval_every`` iterations; the running minimum of the squared
    gradient norm is updated at those eval points only.  ``eta_series``
    and ``u_series`` cover every executed iteration.  ``u_eval`` holds
    the draw used at each recorded iterate; its final entry is nan
    because no step leaves the last iterate.
    """

    eval_points: np.ndarray
    loss: np.ndarray
    grad_norm_sq: np.ndarray
    min_grad_sq: np.ndarray
    sum_eta: np.ndarray
    eta_eval: np.ndarray
    u_eval: np.ndarray
    eta_series: np.ndarray
    u_series: np.ndarray
    iterations: int
    eval_every: int
    seed: int
    config_digest: str
    certified: bool
    diverged: bool
    truncated_at: int | None
    rng_algorithm: str = RNG_ALGORITHM
    grad_stream_digest: str = ""
    g_series: np.ndarray | None = field(default=None)


def run(
    problem: pb.ProblemSpec,
    schedule: StepSizeSchedule,
    sf_spec: sfmod.SFSpec,
    iterations: int,
    eval_every: int = 10,
    x0: np.ndarray | None = None,
    seed: int = 0,
) -> Trajectory:
    """Run SGD with multiplicative stochastic learning rate.

    Divergence (non-finite iterate, or loss above 1e12 at an eval
    point) truncates the run and flags the trajectory instead of
    raising.  ``certified`` drops to False if the problem declares a
    domain box and any iterate leaves it, or if the run diverges.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if eval_every < 1:
        raise ValueError("eval_every must be >= 1")
    if iterations % eval_every != 0:
        raise ValueError("eval_every must divide iterations")

    x = np.ones(problem.dim) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x.shape != (problem.dim,):
        raise ValueError(f"x0 must have shape ({problem.dim},)")

    grad_rng = stream_generator(seed, GRAD_STREAM)
    sf_rng = stream_generator(seed, SF_STREAM)
    digest = hashlib.sha256()

    eval_ks: list[int] = []
    losses: list[float] = []
    gnorms: list[float] = []
    mins: list[float] = []
    sums: list[float] = []

    eta_series = np.empty(iterations)
    u_series = np.empty(iterations)
    sum_eta = 0.0
    running_min = np.inf
    certified = True
    diverged = False
    truncated_at: int | None = None
    executed = 0

    def record(k: int) -> bool:
        nonlocal running_min, diverged, truncated_at
        f_val = pb.loss(problem, x) if np.isfinite(x).all() else np.nan
        if np.isfinite(f_val):
            g = pb.full_gradient(problem, x)
            g2 = float(g @ g)
            running_min = min(running_min, g2)
        else:
            g2 = np.nan
        eval_ks.append(k)
        losses.append(f_val)
        gnorms.append(g2)
        mins.append(running_min)
        sums.append(sum_eta)
        if not np.isfinite(f_val) or f_val > LOSS_DIVERGENCE_LIMIT:
            diverged = True
            truncated_at = k
            return False
        return True

    for k in range(iterations):
        if k % eval_every == 0 and not record(k):
            break
        eta_k = float(step_size(schedule, k))
        u_k = float(sfmod.sample(sf_spec, k, sf_rng))
        gs = pb.stochastic_gradient(problem, x, grad_rng)
        if isinstance(gs.draw, np.ndarray):
            digest.update(gs.draw.tobytes())
        elif gs.draw is not None:
            digest.update(struct.pack("<q", gs.draw))
        x = sgd_step(x, gs.vector, eta_k, u_k)
        eta_series[k] = eta_k
        u_series[k] = u_k
        sum_eta += eta_k
        executed = k + 1
        if problem.domain_box is not None:
            lo, hi = problem.domain_box
            if (x < lo).any() or (x > hi).any():
                certified = False
        if not np.isfinite(x).all():
            diverged = True
            truncated_at = k + 1
            break
    else:
        if not diverged:
            record(iterations)

    if diverged:
        certified = False

    ks = np.array(eval_ks, dtype=int)
    eta_eval = np.array([float(step_size(schedule, int(k))) for k in ks])
    u_eval = np.array([u_series[k] if k < executed else np.nan for k in ks])

    return Trajectory(
        eval_points=ks,
        loss=np.array(losses),
        grad_norm_sq=np.array(gnorms),
        min_grad_sq=np.array(mins),
        sum_eta=np.array(sums),
        eta_eval=eta_eval,
        u_eval=u_eval,
        eta_series=eta_series[:executed],
        u_series=u_series[:executed],
        iterations=iterations,
        eval_every=eval_every,
        seed=int(seed),
        config_digest=config_digest(problem, schedule, sf_spec, iterations, eval_every),
        certified=certified,
        diverged=diverged,
        truncated_at=truncated_at,
        grad_stream_digest=digest.hexdigest(),
    )

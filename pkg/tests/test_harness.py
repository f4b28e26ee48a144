import numpy as np
import pytest

from slrlab import harness, optimizer, problems, sf
from slrlab.harness import Verdict
from slrlab.optimizer import StepSizeSchedule
from slrlab.validator import TheoremCase


def test_gk_single_observation():
    g = harness.gk_sequence(np.array([4.0]), StepSizeSchedule("inverse_k", 1.0))
    np.testing.assert_array_equal(g, [4.0, 4.0])


def test_gk_two_observations_exact():
    # w_0 = 2 forces g_1 = y_0; w_1 = 2*(1/2)/(3/2) = 2/3 gives
    # g_2 = (1/3)*4 + (2/3)*1 = 2 exactly
    g = harness.gk_sequence(np.array([4.0, 1.0]), StepSizeSchedule("inverse_k", 1.0))
    np.testing.assert_array_equal(g, [4.0, 4.0, 2.0])


def test_gk_first_weight_is_two_regardless_of_schedule():
    for sched in (StepSizeSchedule("constant", 0.3),
                  StepSizeSchedule("inverse_k", 2.0),
                  StepSizeSchedule("inverse_sqrt_k", 0.7)):
        g = harness.gk_sequence(np.array([7.0, 3.0, 5.0]), sched)
        assert g[0] == 7.0 and g[1] == 7.0


def test_gk_dominates_running_min():
    rng = np.random.default_rng(0)
    y = rng.uniform(0.1, 5.0, size=200)
    g = harness.gk_sequence(y, StepSizeSchedule("inverse_k", 1.0))
    for k in range(1, len(g)):
        assert g[k] >= y[:k].min() - 1e-12


def test_gk_invariant_under_schedule_rescale():
    rng = np.random.default_rng(1)
    y = rng.uniform(0.1, 5.0, size=300)
    a = harness.gk_sequence(y, StepSizeSchedule("inverse_k", 0.1))
    b = harness.gk_sequence(y, StepSizeSchedule("inverse_k", 1.0))
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_gk_rejects_empty_and_nonfinite():
    with pytest.raises(ValueError):
        harness.gk_sequence(np.array([]), StepSizeSchedule("inverse_k", 1.0))
    with pytest.raises(ValueError):
        harness.gk_sequence(np.array([1.0, np.nan]), StepSizeSchedule("inverse_k", 1.0))


def test_attach_gk_on_run():
    pb = problems.make_quadratic(dim=3, cond=10.0, sigma=0.2)
    sched = StepSizeSchedule("inverse_k", 0.2)
    traj = optimizer.run(pb, sched, sf.uniform_root(0.3, 0.8),
                         iterations=400, eval_every=10, seed=6)
    g = harness.attach_gk(traj, sched)
    assert traj.g_series is g
    assert g.shape == traj.grad_norm_sq.shape
    assert np.isfinite(g).all()
    # at recorded points past the first, the average dominates the best seen
    for i in range(1, len(g)):
        assert g[i] >= traj.grad_norm_sq[:i].min() - 1e-12


def test_envelope_deterministic_case_is_inverse_sum():
    sched = StepSizeSchedule("inverse_k", 1.0)
    spec = sf.constant(1.0)
    # S_3 = 1 + 1/2 + 1/3
    val = harness.envelope(TheoremCase.DETERMINISTIC, spec, sched, 3)
    assert val == pytest.approx(1.0 / (1 + 0.5 + 1 / 3), rel=1e-15)


def test_envelope_constant_unit_factor_collapses_to_baseline():
    sched = StepSizeSchedule("inverse_k", 0.5)
    ks = np.arange(1, 200)
    base = harness.envelope_series(TheoremCase.DETERMINISTIC, sf.constant(1.0), sched, ks)
    for case in (TheoremCase.CASE_11B, TheoremCase.CASE_12):
        env = harness.envelope_series(case, sf.constant(1.0), sched, ks)
        np.testing.assert_array_equal(env.values, base.values)


def test_envelope_case12_worked_value():
    # k = 2, eta = 1/(k+1), roots of (0.3, 0.8):
    # S_2 = 1 + 1/2, E[u_2] and V[u_2] from the closed forms
    spec = sf.uniform_root(0.3, 0.8)
    sched = StepSizeSchedule("inverse_k", 1.0)
    lo, hi = 0.3 ** (1 / 3), 0.8 ** (1 / 3)
    mean = (lo + hi) / 2
    var = (hi - lo) ** 2 / 12
    expected = (mean - var) / 1.5
    val = harness.envelope(TheoremCase.CASE_12, spec, sched, 2)
    assert val == pytest.approx(expected, rel=1e-15)
    assert val == pytest.approx(0.5288601640300792, rel=1e-12)


def test_envelope_case12_beats_baseline():
    spec = sf.uniform_root(0.3, 0.8)
    sched = StepSizeSchedule("inverse_k", 1.0)
    ks = np.arange(1, 1000)
    env = harness.envelope_series(TheoremCase.CASE_12, spec, sched, ks)
    base = harness.envelope_series(TheoremCase.DETERMINISTIC, spec, sched, ks)
    assert (env.values < base.values).all()


def test_envelope_case11b_divides_by_mean():
    spec = sf.uniform_root(2.0, 4.0)
    sched = StepSizeSchedule("constant", 0.1)
    k = 5
    prof = sf.moment_profile(spec, k)
    expected = 1.0 / (prof.mean[k] * (0.1 * 5))
    assert harness.envelope(TheoremCase.CASE_11B, spec, sched, k) == pytest.approx(expected, rel=1e-15)


def test_envelope_case11a_gap_formula():
    # wide super-one roots early on keep mean - variance > 0
    spec = sf.uniform_root(2.0, 3.0)
    sched = StepSizeSchedule("constant", 0.05)
    k = 4
    prof = sf.moment_profile(spec, k)
    gap = prof.mean[k] - prof.variance[k]
    expected = 1.0 / (gap * (0.05 * 4))
    assert harness.envelope(TheoremCase.CASE_11A, spec, sched, k) == pytest.approx(expected, rel=1e-15)


def test_envelope_rejects_nonpositive_gap():
    # at k = 1 the support (0.01, 10) has variance far above the mean
    spec = sf.uniform_root(0.0001, 100.0)
    sched = StepSizeSchedule("inverse_k", 1.0)
    with pytest.raises(ValueError, match="k="):
        harness.envelope(TheoremCase.CASE_11A, spec, sched, 1)
    with pytest.raises(ValueError, match="k="):
        harness.envelope(TheoremCase.CASE_12, spec, sched, 1)


def test_envelope_requires_positive_k():
    spec = sf.constant(1.0)
    sched = StepSizeSchedule("inverse_k", 1.0)
    with pytest.raises(ValueError):
        harness.envelope(TheoremCase.DETERMINISTIC, spec, sched, 0)
    with pytest.raises(ValueError):
        harness.envelope_series(TheoremCase.DETERMINISTIC, spec, sched, np.array([0, 1]))


def test_trajectory_envelope_alignment():
    pb = problems.make_quadratic(dim=2, cond=10.0, sigma=0.1)
    sched = StepSizeSchedule("inverse_k", 0.1)
    spec = sf.uniform_root(0.3, 0.8)
    traj = optimizer.run(pb, sched, spec, iterations=100, eval_every=10, seed=2)
    env = harness.trajectory_envelope(traj, TheoremCase.CASE_12, spec, sched)
    np.testing.assert_array_equal(env.ks, traj.eval_points[1:])
    # sum_eta recorded in the run matches the series' own cumulative sums
    np.testing.assert_allclose(env.sum_eta, traj.sum_eta[1:], rtol=1e-12)


def _flat_env(ks):
    return harness.RateEnvelope(
        case=TheoremCase.DETERMINISTIC, ks=ks, values=np.ones(len(ks)),
        mean=np.ones(len(ks)), variance=np.zeros(len(ks)), sum_eta=np.ones(len(ks)),
    )


def test_little_o_flat_ratios_inconclusive():
    ks = np.arange(1, 2001)
    diag = harness.little_o_diagnostic(np.ones(2000), _flat_env(ks), 100, 2000)
    assert diag.verdict is Verdict.INCONCLUSIVE
    assert diag.window_slope == pytest.approx(0.0, abs=1e-12)


def test_little_o_decaying_ratios_consistent():
    ks = np.arange(1, 2001)
    vals = 1.0 / ks  # ratio = min_grad / env = 1/k
    diag = harness.little_o_diagnostic(vals.astype(float), _flat_env(ks), 100, 2000)
    assert diag.verdict is Verdict.CONSISTENT
    assert diag.window_slope == pytest.approx(-1.0, abs=1e-6)
    assert diag.r_hi < diag.r_lo


def test_little_o_growing_ratios_violation():
    ks = np.arange(1, 2001)
    vals = ks.astype(float)  # ratio grows linearly
    diag = harness.little_o_diagnostic(vals, _flat_env(ks), 100, 2000)
    assert diag.verdict is Verdict.VIOLATION
    assert diag.r_hi > 2 * diag.r_lo


def test_little_o_mild_growth_stays_inconclusive():
    ks = np.arange(1, 2001)
    vals = ks.astype(float) ** 0.01
    diag = harness.little_o_diagnostic(vals, _flat_env(ks), 100, 2000)
    assert diag.verdict is Verdict.INCONCLUSIVE


def test_little_o_window_validation():
    ks = np.arange(1, 101)
    env = _flat_env(ks)
    with pytest.raises(ValueError):
        harness.little_o_diagnostic(np.ones(100), env, 50, 40)  # k_lo >= k_hi
    with pytest.raises(ValueError):
        harness.little_o_diagnostic(np.ones(100), env, 200, 300)  # outside grid
    with pytest.raises(ValueError):
        harness.little_o_diagnostic(np.ones(99), env, 10, 90)  # misaligned lengths


def test_little_o_on_real_run():
    pb = problems.make_quadratic(dim=5, cond=10.0, sigma=0.0)
    sched = StepSizeSchedule("inverse_k", 0.1)
    spec = sf.uniform_root(0.3, 0.8)
    traj = optimizer.run(pb, sched, spec, iterations=20_000, eval_every=10, seed=1)
    env = harness.trajectory_envelope(traj, TheoremCase.CASE_12, spec, sched)
    diag = harness.little_o_diagnostic(traj.min_grad_sq[1:], env, 200, 20_000)
    assert diag.verdict is Verdict.CONSISTENT

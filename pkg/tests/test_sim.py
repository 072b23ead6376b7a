import numpy as np
import pytest
from scipy import stats

from cogradar.agent import AgentConfig
from cogradar.array import ArrayGeometry, SpatialFrequency, make_grid
from cogradar.beamform import channel_vector, omni_weights
from cogradar.clutter import DisturbanceModel, draw_disturbances
from cogradar.errors import ValidationError
from cogradar.numerics import RngStream
from cogradar.sim import (
    Scenario,
    Target,
    calibrate_disturbance_power,
    paper_scenario,
    run_episode,
    run_false_alarm_trials,
    run_monte_carlo,
    run_omni_baseline,
    run_paired,
    snr_to_alpha,
    synthesize_echoes,
)


def small(**kw):
    """Tiny reference-like scenario: 2x2 arrays, short episodes."""
    base = paper_scenario(2, 2).replace(k_pulses=6, k_sec=32, mc_runs=4, pd_window=3, calibration_draws=64)
    return base.replace(**kw)


def test_paper_scenario():
    sc = paper_scenario()
    assert sc.targets[0] == Target(SpatialFrequency(-0.4, -0.4), -5.0)
    assert sc.targets[2] == Target(SpatialFrequency(0.25, -0.05), -10.0)
    assert [t.snr_db for t in sc.targets] == [-5.0, -8.0, -10.0, -9.0]
    assert (sc.k_pulses, sc.p_fa, sc.p_t, sc.k_sec, sc.mc_runs) == (50, 1e-5, 1.0, 512, 200)
    assert sc.grid == make_grid(20, 20, -0.5, 0.05)
    assert sc.geometry == ArrayGeometry(10, 10)
    assert sc.agent == AgentConfig()


def test_scenario_validation():
    t = Target((0.0, 0.0), 0.0)
    with pytest.raises(ValidationError):
        Scenario(targets=(t, t))
    with pytest.raises(ValidationError):
        Scenario(targets=(Target((0.01, 0.0), 0.0),))
    with pytest.raises(ValidationError):
        Scenario(k_pulses=0)
    with pytest.raises(ValidationError):
        Scenario(mc_runs=0)
    with pytest.raises(ValidationError):
        Scenario(reward_bins="x")


def test_scenario_helpers():
    sc = paper_scenario()
    assert sc.with_sides(3).geometry.n == 81
    assert sc.with_target_snr(1, 3.0).targets[1].snr_db == 3.0
    assert sc.target_bins == [42, 210, 309, 377]


# ---------------------------------------------------------------- amplitudes


def test_alpha_magnitudes():
    assert abs(snr_to_alpha(0.0, 1.0, RngStream(0))) == pytest.approx(1.0)
    assert abs(snr_to_alpha(-10.0, 1.0, RngStream(0))) == pytest.approx(10 ** -0.5)
    assert abs(snr_to_alpha(3.0, 4.0, RngStream(0))) == pytest.approx(np.sqrt(10 ** 0.3 * 4.0))


def test_alpha_phase_uniform():
    phases = [np.angle(snr_to_alpha(0.0, 1.0, RngStream(k))) for k in range(3000)]
    assert stats.kstest((np.array(phases) + np.pi) / (2 * np.pi), "uniform").pvalue > 1e-3


def test_alpha_needs_power():
    with pytest.raises(ValidationError):
        snr_to_alpha(0.0, 0.0, RngStream(0))


def test_calibration_matches_direct_mean():
    sc = small(disturbance=DisturbanceModel((0.4,), (0.3j,)))
    rng = RngStream(5)
    est = calibrate_disturbance_power(sc, rng, draws=300, chunk=100)
    direct = np.concatenate([
        draw_disturbances(sc.disturbance, sc.geometry, 100, rng.child(j)) for j in range(3)
    ])
    assert est == pytest.approx(np.mean(np.abs(direct) ** 2), rel=1e-12)


# ---------------------------------------------------------------- echoes


def test_echoes_without_targets_are_clutter():
    sc = small(targets=())
    y = synthesize_echoes(sc, omni_weights(4, 1.0), [], RngStream(3))
    ref = draw_disturbances(sc.disturbance, sc.geometry, sc.grid.size, RngStream(3))
    assert np.array_equal(y, ref)


def test_echoes_zero_clutter_hook():
    sc = small(targets=(Target((0.1, -0.2), 0.0),))
    wts = omni_weights(4, 1.0)
    alpha = 0.3 + 0.4j
    y = synthesize_echoes(sc, wts, [alpha], RngStream(3), clutter_scale=0.0)
    b = sc.target_bins[0]
    assert np.allclose(y[b], alpha * channel_vector(wts, (0.1, -0.2), sc.geometry), rtol=0, atol=1e-15)
    others = np.delete(y, b, axis=0)
    assert not np.any(others)


def test_echoes_deterministic():
    sc = small()
    a = synthesize_echoes(sc, omni_weights(4, 1.0), [1, 1, 1, 1], RngStream(8))
    b = synthesize_echoes(sc, omni_weights(4, 1.0), [1, 1, 1, 1], RngStream(8))
    assert np.array_equal(a, b)


def test_echoes_need_one_alpha_per_target():
    with pytest.raises(ValidationError):
        synthesize_echoes(small(), omni_weights(4, 1.0), [1.0], RngStream(0))


# ---------------------------------------------------------------- episodes


def test_strong_targets_without_clutter():
    sc = paper_scenario(3, 3).replace(k_pulses=8, k_sec=16)
    sc = sc.replace(targets=tuple(Target(t.freq, 20.0) for t in sc.targets))
    tr = run_episode(sc, RngStream(1), power=1.0, clutter_scale=0.0)
    assert tr.target_detected.all()
    assert np.all(tr.rewards[1:] >= len(sc.targets) - 0.01)


def test_swerling0_amplitude_is_constant():
    sc = small(targets=(Target((0.0, 0.0), 0.0),), k_pulses=5)
    rng = RngStream(2)
    tr = run_episode(sc, rng, power=1.0, policy="omni", clutter_scale=0.0)
    alpha = snr_to_alpha(0.0, 1.0, rng.child(0, 0))
    assert np.allclose(tr.target_alpha_hat[:, 0], alpha, rtol=1e-12)
    assert np.all(tr.target_alpha_hat[:, 0] == tr.target_alpha_hat[0, 0])


def test_episode_invariants():
    sc = small()
    tr = run_episode(sc, RngStream(4), power=1.0)
    assert len(tr) == sc.k_pulses
    assert tr.actions[0] == 1  # a_0
    assert np.all((tr.actions >= 0) & (tr.actions <= sc.agent.m_max))
    assert np.all((tr.states >= 0) & (tr.states <= sc.agent.m_max))
    assert np.all(np.isfinite(tr.rewards)) and np.all(np.abs(tr.rewards) <= sc.grid.size)
    assert np.array_equal(tr.states, np.minimum(tr.detected.sum(axis=1), sc.agent.m_max))
    assert len(tr.weights) == sc.k_pulses and tr.weights[0] == "omni"


def test_weights_follow_algorithm():
    sc = small(k_pulses=10)
    tr = run_episode(sc, RngStream(6), power=1.0)
    for k in range(1, sc.k_pulses):
        a, s_prev = tr.actions[k], tr.states[k - 1]
        if s_prev != 0 and a > 0:
            assert tr.weights[k].startswith("max_power:")
            assert len(tr.weights[k].split(":")[1].split(";")) == a
        else:
            assert tr.weights[k] == "omni"


def test_omni_policy_never_beamforms():
    tr = run_episode(small(), RngStream(4), power=1.0, policy="omni")
    assert set(tr.weights) == {"omni"}
    assert not tr.actions.any()


def test_unknown_policy():
    with pytest.raises(ValidationError):
        run_episode(small(), RngStream(0), power=1.0, policy="greedy")


def test_no_targets_false_alarms():
    sc = small(targets=(), p_fa=1e-3, k_pulses=10, k_sec=128)
    tr = run_episode(sc, RngStream(9), power=1.0)
    assert tr.states.mean() < 3
    res = run_false_alarm_trials(sc, 8000, seed=1)
    assert res.trials == 8000
    assert res.rate < 5e-3


def test_run_episode_self_calibrates():
    sc = small()
    a = run_episode(sc, RngStream(3))
    b = run_episode(sc, RngStream(3), power=calibrate_disturbance_power(sc, RngStream(3).child(0)))
    assert np.array_equal(a.rewards, b.rewards)


# ---------------------------------------------------------------- Monte Carlo


def test_single_run_frequencies_are_binary():
    res = run_monte_carlo(small(mc_runs=1), seed=0)
    assert set(np.unique(res.detection_frequency)) <= {0.0, 1.0}


def test_merge_equals_single_aggregate():
    sc = small(mc_runs=4)
    whole = run_monte_carlo(sc, seed=3)
    a = run_monte_carlo(sc, seed=3, runs=range(2), power=whole.power)
    b = run_monte_carlo(sc, seed=3, runs=range(2, 4), power=whole.power)
    for merged in (a.merge(b), b.merge(a)):
        assert np.array_equal(merged.detection_frequency, whole.detection_frequency)
        assert np.array_equal(merged.mean_reward, whole.mean_reward)
        assert np.array_equal(merged.target_pd(), whole.target_pd())


def test_merge_rejects_overlap():
    sc = small(mc_runs=2)
    a = run_monte_carlo(sc, seed=0, power=1.0)
    with pytest.raises(ValidationError):
        a.merge(a)


def test_workers_do_not_change_results():
    sc = small(mc_runs=3)
    one = run_monte_carlo(sc, seed=5, workers=1)
    two = run_monte_carlo(sc, seed=5, workers=2)
    assert np.array_equal(one.detected, two.detected)
    assert np.array_equal(one.rewards, two.rewards)


def test_paired_equals_separate_runs():
    sc = small(mc_runs=2)
    rl, omni = run_paired(sc, seed=7)
    assert np.array_equal(rl.detected, run_monte_carlo(sc, seed=7).detected)
    assert np.array_equal(omni.detected, run_omni_baseline(sc, seed=7).detected)


def test_pd_window_average():
    res = run_monte_carlo(small(mc_runs=2), seed=1)
    curves = res.target_curves
    assert curves.shape == (6, 4)
    assert np.allclose(res.target_pd(), curves[-3:].mean(axis=0))
    assert np.all((res.target_pd() >= 0) & (res.target_pd() <= 1))


def test_false_alarm_intervals():
    sc = small(targets=(), p_fa=0.05, k_sec=64)
    res = run_false_alarm_trials(sc, 1000, seed=2)
    lo, hi = res.interval()
    assert lo <= res.rate <= hi
    band = res.sigma_band(4.0)
    assert band[0] < 0.05 < band[1]

"""Scenarios, echo synthesis, the SARSA closed loop and Monte Carlo aggregation.

Random streams are laid out so that outcomes depend only on the seed and the
run index, never on worker count or on which policies are simulated
together::

    RngStream(seed).child(0, chunk)        disturbance-power calibration
    RngStream(seed).child(1, run)          one episode
        .child(0, target)                  target phase
        .child(1)                          epsilon-greedy draws
        .child(2, pulse).child(0)          primary clutter, one draw per bin
        .child(2, pulse).child(1)          secondary snapshots
    RngStream(seed).child(2, pulse)        target-free false-alarm trials
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agent import AgentConfig, QTable, observe_state, reward, sarsa_update, select_action, top_m_bins
from .array import AngleGrid, ArrayGeometry, SpatialFrequency, make_grid
from .beamform import channel_matrix, max_power_weights, omni_weights
from .clutter import DisturbanceModel, draw_disturbances, paper_model
from .detector import QuadFormEstimator, SteeringCache, scan
from .errors import ValidationError
from .numerics import RngStream, chi2_threshold

logger = logging.getLogger(__name__)

__all__ = [
    "Target",
    "Scenario",
    "EpisodeTrace",
    "MonteCarloResult",
    "paper_scenario",
    "snr_to_alpha",
    "calibrate_disturbance_power",
    "synthesize_echoes",
    "run_episode",
    "run_monte_carlo",
    "run_omni_baseline",
    "run_paired",
    "FalseAlarmResult",
    "run_false_alarm_trials",
]

_CALIBRATION, _RUN, _H0 = 0, 1, 2
_PHASE, _AGENT, _PULSE = 0, 1, 2
_PRIMARY, _SECONDARY = 0, 1

POLICIES = ("rl", "omni")


@dataclass(frozen=True)
class Target:
    freq: SpatialFrequency
    snr_db: float

    def __post_init__(self):
        object.__setattr__(self, "freq", SpatialFrequency(float(self.freq[0]), float(self.freq[1])))


@dataclass(frozen=True)
class Scenario:
    """Everything one experiment needs.

    Fields beyond the core radar parameters select between documented
    modelling variants; the defaults are the reference configuration.
    """

    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    grid: AngleGrid = field(default_factory=lambda: make_grid(20, 20, -0.5, 0.05))
    targets: tuple = ()
    disturbance: DisturbanceModel = field(default_factory=paper_model)
    p_fa: float = 1e-5
    p_t: float = 1.0
    k_pulses: int = 50
    agent: AgentConfig = field(default_factory=AgentConfig)
    k_sec: int = 512
    mc_runs: int = 200
    burn_in: int | None = None
    alpha_mode: str = "ls"
    reward_bins: str = "detected"
    pd_window: int = 10
    calibration_draws: int = 10_000
    relative_loading: float = 1e-6
    literal_beam: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.k_pulses < 1:
            raise ValidationError("k_pulses must be at least 1")
        if self.mc_runs < 1:
            raise ValidationError("mc_runs must be at least 1")
        if self.k_sec < 0:
            raise ValidationError("k_sec must be non-negative")
        if not 0.0 < self.p_fa <= 1.0:
            raise ValidationError("p_fa must lie in (0, 1]")
        if not self.p_t > 0:
            raise ValidationError("p_t must be positive")
        if self.alpha_mode not in ("ls", "paper_literal"):
            raise ValidationError(f"unknown alpha_mode {self.alpha_mode!r}")
        if self.reward_bins not in ("detected", "action"):
            raise ValidationError(f"unknown reward_bins {self.reward_bins!r}")
        if self.pd_window < 1:
            raise ValidationError("pd_window must be at least 1")
        if self.calibration_draws < 1:
            raise ValidationError("calibration_draws must be at least 1")
        bins = [self.grid.locate(t.freq) for t in self.targets]
        if len(set(bins)) != len(bins):
            raise ValidationError("targets must occupy distinct bins")

    @property
    def target_bins(self) -> list:
        return [self.grid.locate(t.freq) for t in self.targets]

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def with_sides(self, side: int) -> "Scenario":
        geom = dataclasses.replace(self.geometry, tx_side=side, rx_side=side)
        return self.replace(geometry=geom)

    def with_target_snr(self, index: int, snr_db: float) -> "Scenario":
        targets = list(self.targets)
        targets[index] = Target(targets[index].freq, snr_db)
        return self.replace(targets=tuple(targets))


PAPER_TARGETS = (
    ((-0.4, -0.4), -5.0),
    ((0.0, 0.0), -8.0),
    ((0.25, -0.05), -10.0),
    ((0.4, 0.35), -9.0),
)


def paper_scenario(tx_side: int = 10, rx_side: int = 10) -> Scenario:
    """Four targets on a 20 x 20 grid, AR(6) clutter, P_FA 1e-5, K = 50 pulses."""
    return Scenario(
        geometry=ArrayGeometry(tx_side, rx_side, 0.5),
        grid=make_grid(20, 20, -0.5, 0.05),
        targets=tuple(Target(SpatialFrequency(*f), snr) for f, snr in PAPER_TARGETS),
        disturbance=paper_model(),
        p_fa=1e-5,
        p_t=1.0,
        k_pulses=50,
        agent=AgentConfig(),
        k_sec=512,
        mc_runs=200,
    )


def snr_to_alpha(snr_db: float, disturbance_power: float, rng) -> complex:
    """Swerling-0 amplitude: fixed modulus from the SNR, one uniform phase."""
    if not disturbance_power > 0:
        raise ValidationError("disturbance_power must be positive")
    mag = np.sqrt(10.0 ** (snr_db / 10.0) * disturbance_power)
    return complex(mag * np.exp(2j * np.pi * rng.random()))


def calibrate_disturbance_power(scenario: Scenario, rng, draws: int | None = None,
                                chunk: int = 256) -> float:
    """Mean per-channel disturbance power, estimated from independent draws."""
    draws = scenario.calibration_draws if draws is None else draws
    total = 0.0
    for j, lo in enumerate(range(0, draws, chunk)):
        count = min(chunk, draws - lo)
        c = draw_disturbances(scenario.disturbance, scenario.geometry, count, rng.child(j),
                              scenario.burn_in)
        total += float(np.sum(c.real ** 2 + c.imag ** 2))
    return total / (draws * scenario.geometry.n)


def _add_targets(y, wts, alphas, bins, steering):
    if not bins:
        return y
    idx = np.asarray(bins)
    h = channel_matrix(wts, steering.a_t[idx], steering.a_r[idx])
    y[idx] += np.asarray(alphas)[:, None] * h
    return y


def synthesize_echoes(scenario: Scenario, wts, alphas, rng, clutter_scale: float = 1.0,
                      steering: SteeringCache | None = None) -> np.ndarray:
    """Received vector for every bin: its own clutter draw plus any target echo.

    Returns:
        ndarray: (L*I, N); target bins carry ``alpha * h`` on top of clutter.
    """
    if len(alphas) != len(scenario.targets):
        raise ValidationError("need one amplitude per target")
    steering = steering or SteeringCache(scenario.grid, scenario.geometry)
    y = draw_disturbances(scenario.disturbance, scenario.geometry, scenario.grid.size, rng,
                          scenario.burn_in)
    if clutter_scale != 1.0:
        y *= clutter_scale
    return _add_targets(y, wts, alphas, scenario.target_bins, steering)


@dataclass
class EpisodeTrace:
    """Per-step record of one episode (step k = 1..K maps to row k-1).

    ``states[k]`` is the state observed after pulse k, ``actions[k]`` the
    action in force while pulse k was transmitted and ``rewards[k]`` the
    reward it earned.
    """

    policy: str
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    n_detections: np.ndarray
    weights: list
    detected: np.ndarray  # (K, L*I) bool
    target_detected: np.ndarray  # (K, n_targets) bool
    target_lambda: np.ndarray  # (K, n_targets)
    target_alpha_hat: np.ndarray  # (K, n_targets) complex
    q_history: np.ndarray  # (K, M+1, M+1), Q after each update

    def __len__(self):
        return len(self.states)


class _Context:
    def __init__(self, scenario: Scenario, power: float):
        self.scenario = scenario
        self.steering = SteeringCache(scenario.grid, scenario.geometry)
        self.delta = chi2_threshold(scenario.p_fa)
        self.bins = scenario.target_bins
        self.omni = omni_weights(scenario.geometry.n_t, scenario.p_t)
        self.freqs = scenario.grid.freqs
        self.power = power


class _Learner:
    """One policy's state within an episode."""

    def __init__(self, policy, ctx: _Context, rng):
        sc = ctx.scenario
        self.policy = policy
        self.ctx = ctx
        self.rng = rng
        self.cfg = sc.agent
        self.q = QTable.zeros(sc.agent.m_max)
        self.s = min(1, sc.agent.m_max)
        self.a = min(1, sc.agent.m_max) if policy == "rl" else 0
        self.wts = ctx.omni
        K, B, M = sc.k_pulses, sc.grid.size, sc.agent.m_max
        self.trace = EpisodeTrace(
            policy=policy,
            states=np.zeros(K, dtype=int),
            actions=np.zeros(K, dtype=int),
            rewards=np.zeros(K),
            n_detections=np.zeros(K, dtype=int),
            weights=[],
            detected=np.zeros((K, B), dtype=bool),
            target_detected=np.zeros((K, len(ctx.bins)), dtype=bool),
            target_lambda=np.zeros((K, len(ctx.bins))),
            target_alpha_hat=np.zeros((K, len(ctx.bins)), dtype=complex),
            q_history=np.zeros((K, M + 1, M + 1)),
        )

    def step(self, k, clutter, est, alphas):
        ctx, sc, tr = self.ctx, self.ctx.scenario, self.trace
        y = _add_targets(clutter.copy(), self.wts, alphas, ctx.bins, ctx.steering)
        dmap = scan(sc.grid, y, self.wts, sc.geometry, est, ctx.delta, sc.alpha_mode, ctx.steering)
        s_next = observe_state(dmap, self.cfg.m_max)
        if sc.reward_bins == "detected":
            chosen = np.flatnonzero(dmap.detected)
        else:
            chosen = top_m_bins(dmap, self.a)
        r = reward(dmap, chosen)

        tr.states[k] = s_next
        tr.actions[k] = self.a
        tr.rewards[k] = r
        tr.n_detections[k] = dmap.n_detections
        tr.weights.append(self.wts.describe())
        tr.detected[k] = dmap.detected
        if ctx.bins:
            tr.target_detected[k] = dmap.detected[ctx.bins]
            tr.target_lambda[k] = dmap.lam[ctx.bins]
            tr.target_alpha_hat[k] = dmap.alpha_hat[ctx.bins]

        if self.policy == "rl":
            eps = self.cfg.epsilon_at(k, sc.k_pulses)
            a_next = select_action(self.q, s_next, self.cfg, self.rng, eps)
            sarsa_update(self.q, self.s, self.a, r, s_next, a_next, self.cfg)
            self.s, self.a = s_next, a_next
            if s_next != 0 and a_next > 0:
                chosen_bins = top_m_bins(dmap, a_next)
                self.wts = max_power_weights(ctx.freqs[chosen_bins], sc.geometry, sc.p_t,
                                             literal=sc.literal_beam, bins=chosen_bins)
            else:
                self.wts = ctx.omni
        tr.q_history[k] = self.q.q


def _simulate(scenario: Scenario, rng: RngStream, policies, power: float,
              clutter_scale: float = 1.0) -> dict:
    for p in policies:
        if p not in POLICIES:
            raise ValidationError(f"unknown policy {p!r}")
    ctx = _Context(scenario, power)
    alphas = [snr_to_alpha(t.snr_db, power, rng.child(_PHASE, j))
              for j, t in enumerate(scenario.targets)]
    learners = [_Learner(p, ctx, rng.child(_AGENT)) for p in policies]
    sc = scenario
    for k in range(sc.k_pulses):
        pulse = rng.child(_PULSE, k)
        clutter = draw_disturbances(sc.disturbance, sc.geometry, sc.grid.size,
                                    pulse.child(_PRIMARY), sc.burn_in)
        secondary = draw_disturbances(sc.disturbance, sc.geometry, sc.k_sec,
                                      pulse.child(_SECONDARY), sc.burn_in) if sc.k_sec else None
        if clutter_scale != 1.0:
            clutter *= clutter_scale
            if secondary is not None:
                secondary *= clutter_scale
        est = QuadFormEstimator(secondary, relative_loading=sc.relative_loading,
                                fallback_power=power)
        for learner in learners:
            learner.step(k, clutter, est, alphas)
    return {lr.policy: lr.trace for lr in learners}


def run_episode(scenario: Scenario, rng: RngStream, power: float | None = None,
                policy: str = "rl", clutter_scale: float = 1.0) -> EpisodeTrace:
    """Run one episode of the closed loop.

    Args:
        scenario: experiment definition.
        rng: episode stream.
        power: per-channel disturbance power used to set target amplitudes;
            calibrated from ``rng.child(0)`` when omitted.
        policy: ``"rl"`` for the SARSA beamformer, ``"omni"`` for the baseline.
        clutter_scale: test hook scaling every clutter draw (0 removes clutter
            while keeping the calibrated target amplitudes).
    """
    if power is None:
        power = calibrate_disturbance_power(scenario, rng.child(_CALIBRATION))
    return _simulate(scenario, rng, (policy,), power, clutter_scale)[policy]


@dataclass
class MonteCarloResult:
    """Aggregate over independent episodes, kept in run-index order.

    Attributes:
        detected: (runs, K, L*I) detection flags.
        rewards: (runs, K) rewards.
        q_tables: (runs, K, M+1, M+1) Q history.
    """

    policy: str
    run_ids: np.ndarray
    detected: np.ndarray
    rewards: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    q_tables: np.ndarray
    target_bins: list
    pd_window: int
    power: float

    @property
    def runs(self) -> int:
        return len(self.run_ids)

    @property
    def detection_frequency(self) -> np.ndarray:
        """(K, L*I) fraction of runs with a detection in each bin at each step."""
        return self.detected.mean(axis=0)

    @property
    def target_curves(self) -> np.ndarray:
        """(K, n_targets) detection frequency at the target bins."""
        return self.detection_frequency[:, self.target_bins]

    def target_pd(self, window: int | None = None) -> np.ndarray:
        """Per-target P_D: detection frequency averaged over the last ``window`` steps.

        The window is clipped to the episode length.
        """
        window = self.pd_window if window is None else window
        return self.target_curves[-window:].mean(axis=0)

    @property
    def mean_reward(self) -> np.ndarray:
        return self.rewards.mean(axis=0)

    @property
    def mean_q(self) -> np.ndarray:
        return self.q_tables.mean(axis=0)

    def merge(self, other: "MonteCarloResult") -> "MonteCarloResult":
        if other.policy != self.policy or other.target_bins != self.target_bins:
            raise ValidationError("cannot merge results of different experiments")
        if set(self.run_ids) & set(other.run_ids):
            raise ValidationError("run ids overlap")
        ids = np.concatenate([self.run_ids, other.run_ids])
        order = np.argsort(ids, kind="stable")

        def cat(a, b):
            return np.concatenate([a, b])[order]

        return MonteCarloResult(
            self.policy, ids[order], cat(self.detected, other.detected),
            cat(self.rewards, other.rewards), cat(self.states, other.states),
            cat(self.actions, other.actions), cat(self.q_tables, other.q_tables),
            self.target_bins, self.pd_window, self.power,
        )


def _episode_job(args):
    scenario, seed, run, power, policies = args
    traces = _simulate(scenario, RngStream(seed).child(_RUN, run), policies, power)
    return run, traces


def _collect(scenario, seed, runs, power, policies, workers):
    jobs = [(scenario, seed, int(r), power, policies) for r in runs]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_episode_job, jobs))
    else:
        results = [_episode_job(j) for j in jobs]
    out = {}
    for policy in policies:
        traces = [tr[policy] for _, tr in results]
        out[policy] = MonteCarloResult(
            policy=policy,
            run_ids=np.array([r for r, _ in results], dtype=int),
            detected=np.stack([t.detected for t in traces]),
            rewards=np.stack([t.rewards for t in traces]),
            states=np.stack([t.states for t in traces]),
            actions=np.stack([t.actions for t in traces]),
            q_tables=np.stack([t.q_history for t in traces]),
            target_bins=scenario.target_bins,
            pd_window=scenario.pd_window,
            power=power,
        )
    return out


def _prepare(scenario, seed, runs, power):
    if runs is None:
        runs = range(scenario.mc_runs)
    if power is None:
        power = calibrate_disturbance_power(scenario, RngStream(seed).child(_CALIBRATION))
        logger.info("calibrated per-channel disturbance power %.6g", power)
    return list(runs), power


def run_monte_carlo(scenario: Scenario, seed: int = 0, runs=None, workers: int = 1,
                    power: float | None = None) -> MonteCarloResult:
    """SARSA beamformer over ``scenario.mc_runs`` episodes (or the given run ids)."""
    runs, power = _prepare(scenario, seed, runs, power)
    return _collect(scenario, seed, runs, power, ("rl",), workers)["rl"]


def run_omni_baseline(scenario: Scenario, seed: int = 0, runs=None, workers: int = 1,
                      power: float | None = None) -> MonteCarloResult:
    """Omnidirectional baseline on the same streams as ``run_monte_carlo``."""
    runs, power = _prepare(scenario, seed, runs, power)
    return _collect(scenario, seed, runs, power, ("omni",), workers)["omni"]


def run_paired(scenario: Scenario, seed: int = 0, runs=None, workers: int = 1,
               power: float | None = None):
    """Both methods on shared clutter draws; identical to running them separately.

    Returns:
        tuple: ``(rl_result, omni_result)``.
    """
    runs, power = _prepare(scenario, seed, runs, power)
    out = _collect(scenario, seed, runs, power, POLICIES, workers)
    return out["rl"], out["omni"]


@dataclass(frozen=True)
class FalseAlarmResult:
    trials: int
    exceedances: int
    p_fa: float

    @property
    def rate(self) -> float:
        return self.exceedances / self.trials

    def interval(self, level: float = 0.95):
        """Exact (Clopper-Pearson) confidence interval for the empirical rate."""
        from scipy.stats import binomtest

        ci = binomtest(self.exceedances, self.trials, self.p_fa).proportion_ci(level, method="exact")
        return float(ci.low), float(ci.high)

    def sigma_band(self, n_sigma: float = 4.0):
        """``p_fa +/- n_sigma * sqrt(p_fa (1 - p_fa) / trials)``."""
        half = n_sigma * np.sqrt(self.p_fa * (1.0 - self.p_fa) / self.trials)
        return self.p_fa - half, self.p_fa + half


def _h0_job(args):
    scenario, seed, pulse = args
    sc = scenario
    rng = RngStream(seed).child(_H0, pulse)
    clutter = draw_disturbances(sc.disturbance, sc.geometry, sc.grid.size, rng.child(_PRIMARY), sc.burn_in)
    secondary = draw_disturbances(sc.disturbance, sc.geometry, sc.k_sec, rng.child(_SECONDARY),
                                  sc.burn_in) if sc.k_sec else None
    est = QuadFormEstimator(secondary, relative_loading=sc.relative_loading, fallback_power=1.0)
    wts = omni_weights(sc.geometry.n_t, sc.p_t)
    dmap = scan(sc.grid, clutter, wts, sc.geometry, est, chi2_threshold(sc.p_fa), sc.alpha_mode)
    return dmap.n_detections


def run_false_alarm_trials(scenario: Scenario, trials: int, seed: int = 0,
                           workers: int = 1) -> FalseAlarmResult:
    """Empirical false-alarm rate of the omni scan on target-free data.

    Each pulse contributes one trial per grid bin, so the trial count is
    rounded up to a whole number of pulses.
    """
    if trials < 1:
        raise ValidationError("trials must be positive")
    pulses = -(-trials // scenario.grid.size)
    jobs = [(scenario, seed, k) for k in range(pulses)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_h0_job, jobs))
    else:
        counts = [_h0_job(j) for j in jobs]
    return FalseAlarmResult(pulses * scenario.grid.size, int(sum(counts)), scenario.p_fa)

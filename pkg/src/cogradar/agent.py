"""Tabular SARSA over detection-count states and bin-count actions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "AgentConfig",
    "QTable",
    "observe_state",
    "select_action",
    "top_m_bins",
    "reward",
    "sarsa_update",
]


@dataclass(frozen=True)
class AgentConfig:
    """SARSA hyper-parameters.

    Attributes:
        alpha: learning rate in (0, 1].
        gamma: discount factor in [0, 1).
        epsilon: exploration rate in [0, 1].
        m_max: largest state/action index M.
        epsilon_decay: decay epsilon linearly to ``epsilon_min`` over an episode.
        epsilon_min: floor of the decay schedule.
    """

    alpha: float = 0.5
    gamma: float = 0.8
    epsilon: float = 0.1
    m_max: int = 10
    epsilon_decay: bool = False
    epsilon_min: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValidationError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValidationError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 <= self.epsilon_min <= 1.0:
            raise ValidationError(f"epsilon_min must lie in [0, 1], got {self.epsilon_min}")
        if int(self.m_max) != self.m_max or self.m_max < 0:
            raise ValidationError(f"m_max must be a non-negative integer, got {self.m_max}")

    def epsilon_at(self, step: int, n_steps: int) -> float:
        """Exploration rate for 0-based ``step`` of an ``n_steps`` episode."""
        if not self.epsilon_decay or n_steps <= 1:
            return self.epsilon
        frac = step / (n_steps - 1)
        return self.epsilon + frac * (min(self.epsilon_min, self.epsilon) - self.epsilon)


@dataclass
class QTable:
    q: np.ndarray
    m_max: int

    @classmethod
    def zeros(cls, m_max: int) -> "QTable":
        return cls(np.zeros((m_max + 1, m_max + 1)), int(m_max))

    def greedy(self, s: int) -> int:
        return int(np.argmax(self.q[s]))  # first maximum, i.e. lowest index on ties

    def rows(self):
        for s in range(self.m_max + 1):
            for a in range(self.m_max + 1):
                yield s, a, float(self.q[s, a])


def observe_state(dmap, m_max: int) -> int:
    """Number of bins over threshold, saturated at ``m_max``."""
    detected = getattr(dmap, "detected", dmap)
    return int(min(int(np.count_nonzero(detected)), m_max))


def select_action(q: QTable, s: int, cfg: AgentConfig, rng, epsilon: float | None = None) -> int:
    """Epsilon-greedy choice from row ``s``.

    One uniform draw decides between exploring and exploiting; a second draw
    picks the action only when exploring.
    """
    if not 0 <= s <= q.m_max:
        raise ValidationError(f"state {s} outside 0..{q.m_max}")
    eps = cfg.epsilon if epsilon is None else epsilon
    if rng.random() < eps:
        return int(rng.integers(0, q.m_max + 1))
    return q.greedy(s)


def top_m_bins(dmap, m: int) -> list:
    """Flat indices of the ``m`` largest statistics; ties go to the lower index."""
    lam = np.asarray(getattr(dmap, "lam", dmap), dtype=float)
    if not 0 <= m <= lam.size:
        raise ValidationError(f"m={m} outside 0..{lam.size}")
    if m == 0:
        return []
    order = np.argsort(-lam, kind="stable")
    return [int(b) for b in order[:m]]


def reward(dmap, selected) -> float:
    """Sum of P_D estimates over ``selected`` bins minus the sum over all others."""
    pd_hat = np.asarray(getattr(dmap, "pd_hat", dmap), dtype=float)
    mask = np.zeros(pd_hat.size, dtype=bool)
    mask[list(selected)] = True
    return float(pd_hat[mask].sum() - pd_hat[~mask].sum())


def sarsa_update(q: QTable, s: int, a: int, r: float, s_next: int, a_next: int,
                 cfg: AgentConfig) -> QTable:
    """``Q(s,a) += alpha (r + gamma Q(s',a') - Q(s,a))``, in place; returns ``q``."""
    target = r + cfg.gamma * q.q[s_next, a_next]
    q.q[s, a] += cfg.alpha * (target - q.q[s, a])
    return q

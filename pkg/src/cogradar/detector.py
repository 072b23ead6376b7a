"""Robust Wald-type detection on a bank of angle bins.

The disturbance covariance is never formed. Each bin only needs the
quadratic form h^H Gamma_hat h, which is accumulated from secondary
(target-free) snapshots as the mean of |h^H c_j|^2 plus diagonal loading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array import steering_matrix
from .beamform import channel_matrix
from .errors import DegenerateEstimatorError, DomainError, ValidationError
from .numerics import marcum_q1

__all__ = [
    "QuadFormEstimator",
    "DetectionMap",
    "quad_form",
    "wald_statistic",
    "estimate_alpha",
    "estimate_pd",
    "scan",
]

ALPHA_MODES = ("ls", "paper_literal")

# bins whose channel energy is below this fraction of the strongest bin count as unilluminated
_NULL_GAIN = 1e-20


class QuadFormEstimator:
    """Streaming estimate of ``h^H Gamma_hat h`` from secondary snapshots.

    ``Gamma_hat = (1/K) sum_j c_j c_j^H + loading * I``. When ``loading`` is
    None it defaults to ``relative_loading`` times the mean per-channel
    snapshot power; ``fallback_power`` supplies that power when every
    snapshot is zero.

    Args:
        secondary: (K, N) array of target-free snapshots (K may be 0).
        loading: explicit diagonal loading, or None for the automatic value.
        relative_loading: factor for the automatic loading.
        fallback_power: per-channel power used when the snapshots carry none.
    """

    def __init__(self, secondary=None, loading=None, relative_loading=1e-6, fallback_power=0.0):
        snaps = np.zeros((0, 0), dtype=complex) if secondary is None else np.asarray(secondary, dtype=complex)
        if snaps.ndim == 1:
            snaps = snaps[None, :]
        self.secondary = snaps
        if loading is None:
            power = 0.0
            if snaps.size:
                power = float(np.mean(np.abs(snaps) ** 2))
            if power == 0.0:
                power = float(fallback_power)
            loading = relative_loading * power
        if loading < 0:
            raise DomainError("loading must be non-negative")
        self.loading = float(loading)

    @property
    def k_sec(self) -> int:
        return self.secondary.shape[0]

    def restrict(self, channels) -> "QuadFormEstimator":
        """Estimator over a subset of channels (used when h is zero elsewhere)."""
        sub = QuadFormEstimator.__new__(QuadFormEstimator)
        sub.secondary = self.secondary[:, channels] if self.k_sec else self.secondary
        sub.loading = self.loading
        return sub

    def __call__(self, h) -> np.ndarray | float:
        return quad_form(self, h)


def quad_form(est: QuadFormEstimator, h, secondary=None):
    """``(1/K) sum_j |h^H c_j|^2 + loading * ||h||^2`` for one or many h.

    Args:
        est: estimator; its snapshots are replaced by ``secondary`` if given.
        h: (N,) vector or (B, N) stack of channel vectors.

    Raises:
        DegenerateEstimatorError: no snapshots and zero loading.
    """
    if secondary is not None:
        est = QuadFormEstimator(secondary, loading=est.loading)
    if est.k_sec == 0 and est.loading == 0.0:
        raise DegenerateEstimatorError("estimator has no snapshots and no loading")
    hh = np.asarray(h, dtype=complex)
    single = hh.ndim == 1
    hh = np.atleast_2d(hh)
    energy = np.sum(np.abs(hh) ** 2, axis=1)
    out = est.loading * energy
    if est.k_sec:
        if est.secondary.shape[1] != hh.shape[1]:
            raise ValidationError("snapshot length does not match h")
        proj = hh.conj() @ est.secondary.T  # (B, K): h^H c_j
        out = out + np.mean(proj.real ** 2 + proj.imag ** 2, axis=1)
    return float(out[0]) if single else out


def wald_statistic(h, y, qf: float) -> float:
    """Robust Wald statistic ``2 |h^H y|^2 / qf``."""
    if not qf > 0:
        raise DomainError(f"quadratic form must be positive, got {qf}")
    h = np.asarray(h)
    y = np.asarray(y)
    if h.shape != y.shape:
        raise ValidationError("h and y lengths differ")
    return 2.0 * abs(np.vdot(h, y)) ** 2 / qf


def estimate_alpha(h, y, mode: str = "ls") -> complex:
    """Amplitude estimate: ``h^H y / ||h||^2`` (ls) or ``h^H y / ||h||`` (paper_literal)."""
    h = np.asarray(h)
    energy = float(np.real(np.vdot(h, h)))
    if energy == 0.0:
        raise DomainError("h must be nonzero")
    hy = np.vdot(h, y)
    if mode == "ls":
        return complex(hy / energy)
    if mode == "paper_literal":
        return complex(hy / np.sqrt(energy))
    raise ValueError(f"unknown alpha mode {mode!r}")


def _noncentrality(alpha_abs2, energy, qf):
    return 2.0 * alpha_abs2 * energy ** 2 / qf


def estimate_pd(h, y, qf: float, delta: float, mode: str = "ls") -> float:
    """Asymptotic detection probability ``Q1(sqrt(zeta), sqrt(delta))``.

    ``zeta = 2 |alpha|^2 ||h||^4 / qf``; in ``ls`` mode this equals the Wald
    statistic of the same data.
    """
    if not qf > 0:
        raise DomainError(f"quadratic form must be positive, got {qf}")
    alpha = estimate_alpha(h, y, mode)
    energy = float(np.real(np.vdot(h, h)))
    zeta = _noncentrality(abs(alpha) ** 2, energy, qf)
    return marcum_q1(np.sqrt(zeta), np.sqrt(delta))


@dataclass
class DetectionMap:
    """Per-bin outcome of one pulse.

    ``detected`` is exactly ``lam > delta``.
    """

    grid: object
    lam: np.ndarray
    detected: np.ndarray
    pd_hat: np.ndarray
    alpha_hat: np.ndarray
    delta: float

    @property
    def n_detections(self) -> int:
        return int(np.count_nonzero(self.detected))

    def records(self):
        freqs = self.grid.freqs
        for b in range(self.grid.size):
            l, i = self.grid.unflatten(b)
            yield {
                "l": l,
                "i": i,
                "nu_x": float(freqs[b, 0]),
                "nu_y": float(freqs[b, 1]),
                "lambda": float(self.lam[b]),
                "detected": bool(self.detected[b]),
                "pd_hat": float(self.pd_hat[b]),
                "alpha_hat": complex(self.alpha_hat[b]),
            }


class SteeringCache:
    """Transmit/receive steering rows for every bin of a grid."""

    def __init__(self, grid, geometry):
        freqs = grid.freqs
        self.a_t = steering_matrix(geometry.tx_side, freqs)
        self.a_r = steering_matrix(geometry.rx_side, freqs)
        self.n_r = geometry.n_r


def _channels(columns, n_r):
    return (columns[:, None] * n_r + np.arange(n_r)[None, :]).ravel()


def scan(grid, signals, wts, geometry, est: QuadFormEstimator, delta: float,
         mode: str = "ls", steering: SteeringCache | None = None) -> DetectionMap:
    """Run the detector on every bin of ``grid`` for one pulse.

    Args:
        grid: ``AngleGrid``.
        signals: (L*I, N) array, row b holding the received vector of bin b.
        wts: ``BeamWeights`` in effect for this pulse.
        geometry: ``ArrayGeometry``.
        est: quadratic-form estimator holding this pulse's secondary data.
        delta: detection threshold.
        mode: amplitude-estimate mode for the P_D estimate.
        steering: optional precomputed steering rows.

    Raises:
        ValidationError: signal count differs from the number of bins.
    """
    if mode not in ALPHA_MODES:
        raise ValueError(f"unknown alpha mode {mode!r}")
    y = np.asarray(signals, dtype=complex)
    if y.ndim != 2 or y.shape[0] != grid.size:
        raise ValidationError(f"expected {grid.size} bin signals, got shape {y.shape}")
    if y.shape[1] != geometry.n:
        raise ValidationError(f"signal length {y.shape[1]} differs from N={geometry.n}")
    steering = steering or SteeringCache(grid, geometry)

    columns = wts.support()
    if len(columns) < wts.n_t:
        # h vanishes outside the blocks fed by nonzero columns of W
        channels = _channels(columns, geometry.n_r)
        h = channel_matrix(wts, steering.a_t, steering.a_r, columns)
        y = y[:, channels]
        est = est.restrict(channels)
    else:
        h = channel_matrix(wts, steering.a_t, steering.a_r)

    energy = np.sum(np.abs(h) ** 2, axis=1)
    qf = quad_form(est, h) if h.shape[1] else np.zeros(len(h))
    hy = np.einsum("bn,bn->b", h.conj(), y)
    # Lambda is scale-free in h, so bins sitting in a beam null (rounding-level
    # gain) would otherwise be scored along an arbitrary direction
    floor = _NULL_GAIN * (energy.max() if energy.size else 0.0)
    valid = (qf > 0) & (energy > floor)
    safe_qf = np.where(valid, qf, 1.0)
    safe_energy = np.where(valid, energy, 1.0)
    lam = np.where(valid, 2.0 * np.abs(hy) ** 2 / safe_qf, 0.0)
    if mode == "ls":
        alpha = np.where(valid, hy / safe_energy, 0.0)
    else:
        alpha = np.where(valid, hy / np.sqrt(safe_energy), 0.0)
    zeta = np.where(valid, _noncentrality(np.abs(alpha) ** 2, energy, safe_qf), 0.0)
    pd_hat = marcum_q1(np.sqrt(zeta), np.sqrt(delta))
    return DetectionMap(grid, lam, lam > delta, pd_hat, alpha, float(delta))

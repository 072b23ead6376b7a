"""Transmit beamforming weights and per-bin channel vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array import steering_matrix, steering_planar
from .errors import DomainError
from .numerics import principal_eigenpair

__all__ = [
    "BeamWeights",
    "omni_weights",
    "max_power_weights",
    "beampattern",
    "beampattern_grid",
    "channel_vector",
    "channel_matrix",
]


@dataclass(frozen=True)
class BeamWeights:
    """An N_T x N_T beamforming matrix.

    ``kind`` and ``selected`` only describe how the weights were built and are
    carried into episode traces.
    """

    w: np.ndarray
    kind: str = "custom"
    selected: tuple = field(default=())

    @property
    def n_t(self) -> int:
        return self.w.shape[0]

    @property
    def total_power(self) -> float:
        return float(np.real(np.trace(self.w @ self.w.conj().T)))

    def support(self) -> np.ndarray:
        """Indices of the columns of W that are not identically zero."""
        return np.flatnonzero(np.any(self.w != 0, axis=0))

    def describe(self) -> str:
        if self.kind == "max_power":
            return "max_power:" + ";".join(str(b) for b in self.selected)
        return self.kind


def omni_weights(n_t: int, p_t: float) -> BeamWeights:
    """Equal power on every element with orthonormal waveforms: sqrt(p_t/n_t) I."""
    if n_t < 1 or not p_t > 0:
        raise DomainError("omni_weights needs n_t >= 1 and p_t > 0")
    return BeamWeights(np.sqrt(p_t / n_t) * np.eye(n_t, dtype=complex), kind="omni")


def max_power_weights(selected, geometry, p_t: float, literal: bool = False,
                      tol: float = 1e-10, max_iter: int = 10_000, bins=()) -> BeamWeights:
    """Rank-one weights steering all power along the dominant direction of the selection.

    Builds ``A = sum_j conj(a_T(f_j)) a_T(f_j)^T`` (or ``a a^H`` with
    ``literal=True``), takes its principal eigenvector ``v`` and returns W with
    first column ``sqrt(p_t) v`` and zeros elsewhere, so that
    ``W W^H = p_t v v^H``.

    Args:
        selected: sequence of spatial frequencies (pairs).
        geometry: ``ArrayGeometry``; the transmit side is used.
        p_t: total transmit power.
        literal: build A from ``a a^H`` instead of the conjugated form.
        bins: flat bin indices of ``selected``, recorded in the descriptor.

    Raises:
        DomainError: empty selection.
    """
    freqs = np.asarray(list(selected), dtype=float).reshape(-1, 2)
    if len(freqs) == 0:
        raise DomainError("max_power_weights needs at least one selected bin; use omni_weights")
    a_t = steering_matrix(geometry.tx_side, freqs)  # rows are a_T(f_j)
    if literal:
        mat = a_t.T @ a_t.conj()
    else:
        mat = a_t.conj().T @ a_t
    _, v = principal_eigenpair(mat, tol=tol, max_iter=max_iter)
    w = np.zeros((geometry.n_t, geometry.n_t), dtype=complex)
    w[:, 0] = np.sqrt(p_t) * v
    return BeamWeights(w, kind="max_power", selected=tuple(int(b) for b in bins))


def beampattern(wts: BeamWeights, f, geometry) -> float:
    """Transmit power toward ``f``: ``a_T^T W W^H conj(a_T) = ||W^T a_T||^2``."""
    a_t = steering_planar(geometry.tx_side, f)
    u = wts.w.T @ a_t
    return float(np.real(np.vdot(u, u)))


def beampattern_grid(wts: BeamWeights, freqs, geometry) -> np.ndarray:
    a_t = steering_matrix(geometry.tx_side, freqs)
    u = a_t @ wts.w
    return np.sum(np.abs(u) ** 2, axis=1)


def channel_vector(wts: BeamWeights, f, geometry) -> np.ndarray:
    """Per-bin channel ``(W^T a_T(f)) kron a_R(f)``, length N_T * N_R."""
    a_t = steering_planar(geometry.tx_side, f)
    a_r = steering_planar(geometry.rx_side, f)
    return np.kron(wts.w.T @ a_t, a_r)


def channel_matrix(wts: BeamWeights, a_t, a_r, columns=None) -> np.ndarray:
    """Channel vectors for many bins at once.

    Args:
        a_t: (B, N_T) transmit steering rows.
        a_r: (B, N_R) receive steering rows.
        columns: optional subset of W's columns; the result then holds only the
            matching N_R-long blocks of each channel vector.

    Returns:
        ndarray: (B, len(columns) * N_R); with ``columns=None`` this is (B, N).
    """
    wa = a_t @ wts.w  # row b is (W^T a_T(f_b))^T
    if columns is not None:
        wa = wa[:, columns]
    return (wa[:, :, None] * a_r[:, None, :]).reshape(len(a_t), -1)

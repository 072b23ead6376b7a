"""Planar-array geometry, steering vectors and the spatial-frequency bin grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "ArrayGeometry",
    "SpatialFrequency",
    "AngleGrid",
    "angles_to_freq",
    "steering_axis",
    "steering_planar",
    "steering_matrix",
    "make_grid",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """Square transmit and receive planar arrays.

    Attributes:
        tx_side: elements per side of the transmit array, N_T = tx_side**2.
        rx_side: elements per side of the receive array, N_R = rx_side**2.
        spacing_wavelengths: element spacing d/lambda.
    """

    tx_side: int = 10
    rx_side: int = 10
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if int(self.tx_side) != self.tx_side or self.tx_side < 1:
            raise ValidationError(f"tx_side must be a positive integer, got {self.tx_side}")
        if int(self.rx_side) != self.rx_side or self.rx_side < 1:
            raise ValidationError(f"rx_side must be a positive integer, got {self.rx_side}")
        if not self.spacing_wavelengths > 0:
            raise ValidationError("spacing_wavelengths must be positive")

    @property
    def n_t(self) -> int:
        return self.tx_side ** 2

    @property
    def n_r(self) -> int:
        return self.rx_side ** 2

    @property
    def n(self) -> int:
        return self.n_t * self.n_r


class SpatialFrequency(NamedTuple):
    nu_x: float
    nu_y: float


def angles_to_freq(theta: float, phi: float, spacing_wavelengths: float = 0.5) -> SpatialFrequency:
    """Map (theta, phi) in radians to spatial frequencies for the given spacing."""
    s = np.sin(theta)
    return SpatialFrequency(
        float(spacing_wavelengths * s * np.cos(phi)),
        float(spacing_wavelengths * s * np.sin(phi)),
    )


def steering_axis(n: int, nu: float) -> np.ndarray:
    """Uniform linear steering vector ``exp(j 2 pi nu k)``, k = 0..n-1."""
    if n < 1:
        raise DomainError("n must be at least 1")
    return np.exp(2j * np.pi * nu * np.arange(n))


def _outer_product(ax, ay):
    """Batched ``ax[..., i] * ay[..., j]`` in plain real arithmetic.

    Spelled out as (ac - bd) + (ad + bc)j so every entry is rounded exactly like
    a scalar complex product; SIMD complex kernels may fuse and differ by an ulp.
    """
    out = np.empty(ax.shape + ay.shape[-1:], dtype=complex)
    xr, xi = ax.real[..., :, None], ax.imag[..., :, None]
    yr, yi = ay.real[..., None, :], ay.imag[..., None, :]
    out.real = xr * yr - xi * yi
    out.imag = xr * yi + xi * yr
    return out


def steering_planar(side: int, f: SpatialFrequency) -> np.ndarray:
    """Planar steering vector ``a_x kron a_y`` of length side**2 (x-major)."""
    return _outer_product(steering_axis(side, f[0]), steering_axis(side, f[1])).ravel()


def steering_matrix(side: int, freqs) -> np.ndarray:
    """Stack planar steering vectors for many frequencies.

    Args:
        side: array side length.
        freqs: array of shape (B, 2) holding (nu_x, nu_y) rows.

    Returns:
        ndarray: shape (B, side**2); row b equals ``steering_planar(side, freqs[b])``.
    """
    freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
    k = np.arange(side)
    ax = np.exp(2j * np.pi * freqs[:, 0:1] * k)
    ay = np.exp(2j * np.pi * freqs[:, 1:2] * k)
    return _outer_product(ax, ay).reshape(len(freqs), side * side)


@dataclass(frozen=True)
class AngleGrid:
    """L x I grid of spatial-frequency bins, laid out row-major in (l, i).

    Bin ``(l, i)`` sits at ``(start + l*step, start + i*step)``; its flat
    index is ``l * I + i``.
    """

    L: int
    I: int  # noqa: E741
    start: float = -0.5
    step: float = 0.05

    @property
    def size(self) -> int:
        return self.L * self.I

    @property
    def nu_x_axis(self) -> np.ndarray:
        return np.round(self.start + self.step * np.arange(self.L), 12)

    @property
    def nu_y_axis(self) -> np.ndarray:
        return np.round(self.start + self.step * np.arange(self.I), 12)

    @property
    def freqs(self) -> np.ndarray:
        """(L*I, 2) array of bin frequencies in flat order."""
        gx, gy = np.meshgrid(self.nu_x_axis, self.nu_y_axis, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    @property
    def bins(self):
        """List of ``(l, i, SpatialFrequency)`` in flat order."""
        fx, fy = self.nu_x_axis, self.nu_y_axis
        return [(l, i, SpatialFrequency(float(fx[l]), float(fy[i])))
                for l in range(self.L) for i in range(self.I)]

    def flat_index(self, l: int, i: int) -> int:
        return l * self.I + i

    def unflatten(self, b: int):
        return divmod(int(b), self.I)

    def frequency(self, b: int) -> SpatialFrequency:
        l, i = self.unflatten(b)
        return SpatialFrequency(float(self.nu_x_axis[l]), float(self.nu_y_axis[i]))

    def locate(self, f: SpatialFrequency, atol: float = 1e-9) -> int:
        """Flat index of the bin centred on ``f``; raises if ``f`` is off-grid."""
        l = int(round((f[0] - self.start) / self.step))
        i = int(round((f[1] - self.start) / self.step))
        if not (0 <= l < self.L and 0 <= i < self.I):
            raise ValidationError(f"frequency {tuple(f)} is outside the grid")
        if abs(self.nu_x_axis[l] - f[0]) > atol or abs(self.nu_y_axis[i] - f[1]) > atol:
            raise ValidationError(f"frequency {tuple(f)} is not a bin centre")
        return self.flat_index(l, i)


def make_grid(L: int, I: int, start: float = -0.5, step: float = 0.05) -> AngleGrid:  # noqa: E741
    """Build an ``AngleGrid`` inside the unambiguous interval [-0.5, 0.5)."""
    if L < 1 or I < 1:
        raise DomainError("grid dimensions must be positive")
    if step <= 0 and max(L, I) > 1:
        raise DomainError("step must be positive")
    last = start + (max(L, I) - 1) * step
    if start < -0.5 - 1e-12 or last >= 0.5 - 1e-12:
        raise DomainError(f"grid [{start}, {last}] leaves the interval [-0.5, 0.5)")
    return AngleGrid(int(L), int(I), float(start), float(step))

"""Separable 2D autoregressive disturbance with complex-t innovations.

The field obeys the quarter-plane recursion

    c[nx, ny] = sum_i rho_x[i] c[nx-i, ny] + sum_j rho_y[j] c[nx, ny-j] + w[nx, ny]

over a zero-initialised grid enlarged by a burn-in margin on the leading
edges. Rows run along the receive elements, columns along the transmit
elements, and fields are vectorised column-major so that a field of shape
(N_R, N_T) lines up with ``kron(W.T a_T, a_R)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import ValidationError

logger = logging.getLogger(__name__)

__all__ = [
    "DisturbanceModel",
    "ClutterField",
    "StabilityReport",
    "paper_model",
    "sample_innovation",
    "sample_innovations",
    "generate_field",
    "generate_fields",
    "draw_disturbance",
    "draw_disturbances",
    "psd",
    "psd_grid",
    "stability_report",
]

PAPER_MODULI = (0.5, 0.6, 0.7, 0.4, 0.5, 0.6)
PAPER_TURNS = (0.4, 0.2, 0.0, 0.1, 0.3, 0.35)

# fields generated per batch; fixed so the draw order never depends on batch size
_CHUNK = 64


@dataclass(frozen=True)
class DisturbanceModel:
    """AR coefficients along each axis plus the innovation law.

    Attributes:
        rho_x: AR coefficients along the row (receive) axis, length p.
        rho_y: AR coefficients along the column (transmit) axis, length q.
        shape: tail parameter of the complex-t innovation, > 1.
        sigma_w2: innovation scale.
        psd_form: ``"paper"`` for the product-of-sums denominator or
            ``"separable"`` for ``|1-A|^-2 |1-B|^-2``.
        polar: the (moduli, turns) pairs per axis when built by ``from_polar``;
            kept so configurations serialize back exactly.
    """

    rho_x: tuple = ()
    rho_y: tuple = ()
    shape: float = 2.0
    sigma_w2: float = 1.0
    psd_form: str = "paper"
    polar: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "rho_x", tuple(complex(r) for r in self.rho_x))
        object.__setattr__(self, "rho_y", tuple(complex(r) for r in self.rho_y))
        if not self.shape > 1:
            raise ValidationError(f"shape must exceed 1, got {self.shape}")
        if not self.sigma_w2 > 0:
            raise ValidationError(f"sigma_w2 must be positive, got {self.sigma_w2}")
        if self.psd_form not in ("paper", "separable"):
            raise ValidationError(f"unknown psd_form {self.psd_form!r}")

    @property
    def p(self) -> int:
        return len(self.rho_x)

    @property
    def q(self) -> int:
        return len(self.rho_y)

    @property
    def default_burn_in(self) -> int:
        return 4 * max(self.p, self.q)

    @classmethod
    def from_polar(cls, x_moduli, x_turns, y_moduli=None, y_turns=None, **kwargs):
        """Build from ``modulus * exp(-j 2 pi turn)`` pairs for each axis."""
        if y_moduli is None:
            y_moduli, y_turns = x_moduli, x_turns
        if len(x_moduli) != len(x_turns) or len(y_moduli) != len(y_turns):
            raise ValidationError("moduli and turns must pair up")
        rx = tuple(m * np.exp(-2j * np.pi * t) for m, t in zip(x_moduli, x_turns))
        ry = tuple(m * np.exp(-2j * np.pi * t) for m, t in zip(y_moduli, y_turns))
        polar = (
            (tuple(map(float, x_moduli)), tuple(map(float, x_turns))),
            (tuple(map(float, y_moduli)), tuple(map(float, y_turns))),
        )
        return cls(rx, ry, polar=polar, **kwargs)

    def polar_pairs(self):
        """((moduli, turns) along x, (moduli, turns) along y)."""
        if self.polar is not None:
            return self.polar

        def conv(rho):
            rho = np.asarray(rho, dtype=complex)
            return tuple(np.abs(rho).tolist()), tuple(np.mod(-np.angle(rho) / (2 * np.pi), 1.0).tolist())

        return conv(self.rho_x), conv(self.rho_y)


def paper_model() -> DisturbanceModel:
    """Order-6 coefficients on both axes, shape 2, unit innovation scale."""
    return DisturbanceModel.from_polar(PAPER_MODULI, PAPER_TURNS, shape=2.0, sigma_w2=1.0)


@dataclass(frozen=True)
class ClutterField:
    values: np.ndarray  # (rows, cols) complex

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def vectorize(self) -> np.ndarray:
        return self.values.ravel(order="F")


def sample_innovations(model: DisturbanceModel, rng, size) -> np.ndarray:
    """Complex-t innovations via the compound-Gaussian construction.

    texture ~ InverseGamma(shape, shape), w = sqrt(texture * sigma_w2) * g,
    g ~ CN(0, 1).
    """
    texture = model.shape / rng.standard_gamma(model.shape, size)
    g = rng.complex_normal(size)
    return np.sqrt(texture * model.sigma_w2) * g


def sample_innovation(model: DisturbanceModel, rng) -> complex:
    return complex(sample_innovations(model, rng, (1,))[0])


def _recurse(w, rho_x, rho_y):
    """Run the quarter-plane recursion on a stack of innovation fields (B, R, C)."""
    rx = np.asarray(rho_x, dtype=complex)
    ry = np.asarray(rho_y, dtype=complex)
    if rx.size == 0 and ry.size == 0:
        return w.copy()
    rows_first = np.moveaxis(w, 1, 0)  # (R, B, C)
    out = np.empty(rows_first.shape, dtype=complex)
    denom = np.concatenate(([1.0], -ry))
    for i in range(rows_first.shape[0]):
        u = rows_first[i].copy()
        for k in range(1, min(rx.size, i) + 1):
            u += rx[k - 1] * out[i - k]
        out[i] = lfilter([1.0], denom, u, axis=-1) if ry.size else u
    return np.moveaxis(out, 0, 1)


def generate_fields(model: DisturbanceModel, rows: int, cols: int, count: int, rng,
                    burn_in: int | None = None, innovations=None) -> np.ndarray:
    """Generate ``count`` independent fields, shape (count, rows, cols).

    Args:
        innovations: optional test hook replacing the random innovations; shape
            (count, rows + burn_in, cols + burn_in).
    """
    if rows < 1 or cols < 1:
        raise ValidationError("rows and cols must be positive")
    if burn_in is None:
        burn_in = model.default_burn_in
    if burn_in < 0:
        raise ValidationError("burn_in must be non-negative")
    R, C = rows + burn_in, cols + burn_in
    if innovations is not None:
        w = np.asarray(innovations, dtype=complex).reshape(count, R, C)
        return _recurse(w, model.rho_x, model.rho_y)[:, burn_in:, burn_in:]
    out = np.empty((count, rows, cols), dtype=complex)
    for lo in range(0, count, _CHUNK):
        hi = min(count, lo + _CHUNK)
        w = sample_innovations(model, rng, (hi - lo, R, C))
        out[lo:hi] = _recurse(w, model.rho_x, model.rho_y)[:, burn_in:, burn_in:]
    return out


def generate_field(model: DisturbanceModel, rows: int, cols: int, burn_in: int | None, rng,
                   innovations=None) -> ClutterField:
    if innovations is not None:
        innovations = np.asarray(innovations)[None]
    values = generate_fields(model, rows, cols, 1, rng, burn_in, innovations)[0]
    return ClutterField(values)


def draw_disturbances(model: DisturbanceModel, geometry, count: int, rng,
                      burn_in: int | None = None) -> np.ndarray:
    """``count`` disturbance vectors of length N, shape (count, N)."""
    fields = generate_fields(model, geometry.n_r, geometry.n_t, count, rng, burn_in)
    # column-major vec of each (N_R, N_T) field
    return fields.transpose(0, 2, 1).reshape(count, geometry.n)


def draw_disturbance(model: DisturbanceModel, geometry, rng, burn_in: int | None = None) -> np.ndarray:
    return generate_field(model, geometry.n_r, geometry.n_t, burn_in, rng).vectorize()


# ---------------------------------------------------------------------------
# spectra and stability


def _ar_response(rho, nu):
    rho = np.asarray(rho, dtype=complex)
    nu = np.asarray(nu, dtype=float)
    if rho.size == 0:
        return np.zeros(nu.shape, dtype=complex)
    n = np.arange(1, rho.size + 1)
    return np.exp(-2j * np.pi * nu[..., None] * n) @ rho


def psd_grid(model: DisturbanceModel, nu_x, nu_y) -> np.ndarray:
    """PSD on an outer-product grid, shape (len(nu_x), len(nu_y)).

    Singular points (denominator modulus below 1e-12) evaluate to +inf.
    """
    ax = _ar_response(model.rho_x, nu_x)[:, None]
    ay = _ar_response(model.rho_y, nu_y)[None, :]
    if model.psd_form == "paper":
        den = np.abs(1.0 - ax * ay)
    else:
        den = np.abs(1.0 - ax) * np.abs(1.0 - ay)
    singular = den < 1e-12
    with np.errstate(divide="ignore"):
        out = np.where(singular, np.inf, model.sigma_w2 / np.where(singular, 1.0, den) ** 2)
    if singular.any():
        logger.warning("PSD denominator is singular at %d grid points", int(singular.sum()))
    return out


def psd(model: DisturbanceModel, f) -> float:
    """PSD at a single spatial frequency; ``inf`` flags a singular denominator."""
    return float(psd_grid(model, [f[0]], [f[1]])[0, 0])


@dataclass(frozen=True)
class StabilityReport:
    stable_x: bool
    stable_y: bool
    root_moduli_x: list
    root_moduli_y: list

    @property
    def stable(self) -> bool:
        return self.stable_x and self.stable_y


def _root_moduli(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.size == 0:
        return []
    # 1 - sum rho_i z^i, highest power first
    coeffs = np.concatenate((-rho[::-1], [1.0]))
    return sorted(float(abs(r)) for r in np.roots(coeffs))


def _schur_cohn_stable(rho) -> bool:
    """True when every root of 1 - sum rho_i z^i lies outside the closed unit disk.

    Equivalent to the AR polynomial 1 + sum a_i z^-i (a_i = -rho_i) being
    minimum phase; checked by the Levinson step-down recursion, which needs
    all reflection coefficients strictly inside the unit circle.
    """
    a = -np.asarray(rho, dtype=complex)
    while a.size:
        k = a[-1]
        if abs(k) >= 1.0:
            return False
        inner = a[:-1]
        a = (inner - k * np.conj(inner[::-1])) / (1.0 - abs(k) ** 2)
    return True


def stability_report(model: DisturbanceModel) -> StabilityReport:
    return StabilityReport(
        stable_x=_schur_cohn_stable(model.rho_x),
        stable_y=_schur_cohn_stable(model.rho_y),
        root_moduli_x=_root_moduli(model.rho_x),
        root_moduli_y=_root_moduli(model.rho_y),
    )

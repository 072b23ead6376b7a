"""Special functions, a dominant-eigenpair solver and seeded random streams."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ive

from .errors import ConvergenceError, DomainError, ValidationError

__all__ = [
    "RngStream",
    "marcum_q1",
    "chi2_threshold",
    "principal_eigenpair",
    "as_hermitian",
]


class RngStream:
    """A reproducible random stream addressed by ``(seed, stream_id)``.

    ``stream_id`` is a path of non-negative integers. Children extend the path,
    so every (run, pulse, purpose) combination owns an independent generator
    whose output does not depend on how work is scheduled.

    Example:
        >>> run = RngStream(7).child(3)
        >>> pulse = run.child(12, 0)
        >>> pulse.stream_id
        (3, 12, 0)
    """

    def __init__(self, seed: int, stream_id=()):
        if isinstance(stream_id, (int, np.integer)):
            stream_id = (int(stream_id),)
        stream_id = tuple(int(s) for s in stream_id)
        if seed < 0 or any(s < 0 for s in stream_id):
            raise DomainError("seed and stream ids must be non-negative")
        self.seed = int(seed)
        self.stream_id = stream_id
        seq = np.random.SeedSequence(self.seed, spawn_key=self.stream_id)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def child(self, *ids: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id + tuple(ids))

    def random(self, size=None):
        return self.generator.random(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)

    def standard_gamma(self, shape, size=None):
        return self.generator.standard_gamma(shape, size)

    def complex_normal(self, size):
        """Circular complex Gaussian samples with unit variance, E|z|^2 = 1."""
        if isinstance(size, (int, np.integer)):
            size = (int(size),)
        pairs = self.generator.standard_normal(tuple(size) + (2,))
        return pairs.view(np.complex128)[..., 0] * np.sqrt(0.5)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


# ---------------------------------------------------------------------------
# Marcum Q


def _bessel_tail(ratio, x, start):
    """Sum_{k>=start} ratio**k * ive(k, x) for 0 <= ratio <= 1.

    Terms are non-increasing in k, so summation stops once a term can no
    longer move the partial sum; the tail beyond a term t is bounded by
    roughly t * (1 + sqrt(x)) because ive decays like a Gaussian of width
    sqrt(x) once k exceeds sqrt(x).
    """
    total = np.zeros_like(x)
    active = np.ones(x.shape, dtype=bool)
    k0 = start
    chunk = 32
    while active.any():
        idx = np.flatnonzero(active)
        k = np.arange(k0, k0 + chunk, dtype=float)
        r = ratio[idx, None]
        xs = x[idx, None]
        with np.errstate(under="ignore", divide="ignore"):
            terms = np.where(r > 0, r ** k, np.where(k == 0, 1.0, 0.0)) * ive(k, xs)
        total[idx] += terms.sum(axis=1)
        last = terms[:, -1]
        done = last * (1.0 + np.sqrt(x[idx])) <= 1e-17 * total[idx]
        done |= last == 0.0
        active[idx[done]] = False
        k0 += chunk
        if k0 > 10_000_000:  # pragma: no cover - unreachable for finite input
            raise ConvergenceError("Marcum Q series did not terminate", float(last.max()))
    return total


def marcum_q1(a, b):
    """First-order Marcum Q function Q1(a, b).

    Evaluated with exponentially scaled modified Bessel functions, which keeps
    every term bounded for any ``a*b``:

        Q1 = exp(-(a-b)^2/2) * sum_{k>=0} (a/b)^k ive(k, ab)            (a < b)
        Q1 = 1 - exp(-(a-b)^2/2) * sum_{k>=1} (b/a)^k ive(k, ab)        (a >= b)

    Args:
        a: Non-centrality, ``a >= 0``. Scalar or array.
        b: Threshold, ``b >= 0``. Scalar or array, broadcast against ``a``.

    Returns:
        float or ndarray: probability in [0, 1].

    Raises:
        DomainError: non-finite or negative input.
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(a_arr)) and np.all(np.isfinite(b_arr))):
        raise DomainError("marcum_q1 requires finite arguments")
    if np.any(a_arr < 0) or np.any(b_arr < 0):
        raise DomainError("marcum_q1 requires non-negative arguments")
    a_arr, b_arr = np.broadcast_arrays(a_arr, b_arr)
    scalar = a_arr.ndim == 0
    a_flat = a_arr.ravel()
    b_flat = b_arr.ravel()
    out = np.empty(a_flat.shape)

    zero_b = b_flat == 0.0
    zero_a = (a_flat == 0.0) & ~zero_b
    out[zero_b] = 1.0
    out[zero_a] = np.exp(-0.5 * b_flat[zero_a] ** 2)

    rest = ~(zero_a | zero_b)
    below = rest & (a_flat < b_flat)
    above = rest & (a_flat >= b_flat)
    if below.any():
        aa, bb = a_flat[below], b_flat[below]
        s = _bessel_tail(aa / bb, aa * bb, 0)
        out[below] = np.exp(-0.5 * (aa - bb) ** 2) * s
    if above.any():
        aa, bb = a_flat[above], b_flat[above]
        s = _bessel_tail(bb / aa, aa * bb, 1)
        out[above] = 1.0 - np.exp(-0.5 * (aa - bb) ** 2) * s
    np.clip(out, 0.0, 1.0, out=out)
    if scalar:
        return float(out[0])
    return out.reshape(a_arr.shape)


def chi2_threshold(p_fa: float) -> float:
    """Detection threshold for a chi-squared(2) statistic at false-alarm rate ``p_fa``.

    The two-degree-of-freedom CDF is ``1 - exp(-x/2)``, so the inverse is
    closed form: ``-2 ln p_fa``.
    """
    if not (isinstance(p_fa, (int, float, np.floating)) and math.isfinite(p_fa)):
        raise DomainError(f"p_fa must be a finite number, got {p_fa!r}")
    if not 0.0 < p_fa <= 1.0:
        raise DomainError(f"p_fa must lie in (0, 1], got {p_fa}")
    return -2.0 * math.log(p_fa) + 0.0


# ---------------------------------------------------------------------------
# Hermitian eigen-solver


def as_hermitian(m, rtol=1e-12) -> np.ndarray:
    """Return ``m`` as a complex square array after checking conjugate symmetry."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {arr.shape}")
    scale = np.max(np.abs(arr)) if arr.size else 0.0
    if np.max(np.abs(arr - arr.conj().T)) > rtol * max(scale, np.finfo(float).tiny):
        raise ValidationError("matrix is not Hermitian within tolerance")
    return arr


def _start_vector(n):
    # fixed pseudo-random start: an all-ones start is exactly orthogonal to
    # steering vectors at Fourier-spaced frequencies
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(0x5EED, spawn_key=(n,))))
    v = 1.0 + 0.25 * (gen.standard_normal(n) + 1j * gen.standard_normal(n))
    return v / np.linalg.norm(v)


_SQUARE_EVERY = 32


def principal_eigenpair(m, tol: float = 1e-10, max_iter: int = 10_000):
    """Dominant eigenpair of a Hermitian positive semidefinite matrix by power iteration.

    Iterates until ``||M v - lam v|| <= tol * lam``. The returned vector has unit
    norm and its largest-magnitude entry is real and positive.

    Args:
        m: Hermitian PSD matrix (array-like).
        tol: Relative residual tolerance, > 0.
        max_iter: Iteration cap.

    Returns:
        tuple: ``(eigenvalue, eigenvector)``.

    Raises:
        ValidationError: ``m`` is not square Hermitian.
        ConvergenceError: tolerance not met within ``max_iter`` iterations.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    mat = as_hermitian(m)
    n = mat.shape[0]
    v = _start_vector(n)
    lam = 0.0
    residual = np.inf
    # iterate with M^(2^s); squaring after each stalled block keeps near-ties
    # in the top of the spectrum from costing thousands of steps
    work = mat
    for it in range(1, max_iter + 1):
        w = mat @ v
        lam = float(np.vdot(v, w).real)
        residual = float(np.linalg.norm(w - lam * v))
        if residual <= tol * lam or (lam <= 0.0 and residual == 0.0):
            break
        if it % _SQUARE_EVERY == 0:
            work = work @ work
            scale = np.linalg.norm(work)
            if scale > 0:
                work = work / scale
        if work is not mat:
            w = work @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # start vector lies in the null space; M is zero or rank-deficient
            if not np.any(mat):
                break
            v = mat[:, np.argmax(np.linalg.norm(mat, axis=0))]
            v = v / np.linalg.norm(v)
            continue
        v = w / norm
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} steps", residual)
    k = int(np.argmax(np.abs(v)))
    if np.abs(v[k]) > 0:
        v = v * (np.conj(v[k]) / np.abs(v[k]))
        v[k] = abs(v[k])
    return lam, v

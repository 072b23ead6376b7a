import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogradar.errors import ConvergenceError, DomainError, ValidationError
from cogradar.numerics import (
    RngStream,
    as_hermitian,
    chi2_threshold,
    marcum_q1,
    principal_eigenpair,
)

mpmath.mp.dps = 40


def marcum_oracle(a, b):
    """Q1 by direct quadrature of the Rician tail at high precision."""
    a, b = mpmath.mpf(a), mpmath.mpf(b)
    if b == 0:
        return 1.0
    f = lambda x: x * mpmath.exp(-(x * x + a * a) / 2) * mpmath.besseli(0, a * x)  # noqa: E731
    return float(mpmath.quad(f, [b, b + 5, b + 15, mpmath.inf]))


# ---------------------------------------------------------------- rng streams


def test_same_path_same_numbers():
    a = RngStream(11).child(3, 4).random(5)
    b = RngStream(11).child(3, 4).random(5)
    assert np.array_equal(a, b)


def test_sibling_streams_differ():
    root = RngStream(11)
    assert not np.array_equal(root.child(0).random(5), root.child(1).random(5))


def test_child_path_is_flat():
    assert np.array_equal(RngStream(2).child(1).child(5).random(3), RngStream(2).child(1, 5).random(3))


def test_complex_normal_moments():
    z = RngStream(0).complex_normal(200_000)
    assert abs(np.mean(np.abs(z) ** 2) - 1.0) < 0.02
    assert abs(np.mean(z * z)) < 0.01  # circular


# ---------------------------------------------------------------- marcum Q


@pytest.mark.parametrize(
    "a,b",
    [(0.0, 1.0), (1.0, 0.5), (1.0, 2.0), (3.0, 3.0), (5.0, 2.0), (2.0, 5.0), (0.3, 4.7)],
)
def test_marcum_against_quadrature(a, b):
    assert marcum_q1(a, b) == pytest.approx(marcum_oracle(a, b), abs=1e-12)


def test_marcum_b_zero_is_one():
    assert marcum_q1(2.5, 0.0) == 1.0


def test_marcum_a_zero_rayleigh():
    for b in (0.1, 1.0, 3.0, 6.0):
        assert marcum_q1(0.0, b) == pytest.approx(math.exp(-b * b / 2), rel=1e-14)


def test_marcum_no_signal_at_threshold_gives_pfa():
    delta = chi2_threshold(1e-5)
    assert marcum_q1(0.0, math.sqrt(delta)) == pytest.approx(1e-5, rel=1e-12)


def test_marcum_large_arguments_stay_finite():
    vals = marcum_q1(np.array([40.0, 60.0, 200.0]), np.array([38.0, 65.0, 150.0]))
    assert np.all(np.isfinite(vals))
    assert vals[0] > 0.9 and vals[1] < 1e-5 and vals[2] == pytest.approx(1.0)


def test_marcum_vectorised_matches_scalar():
    a = np.linspace(0, 5, 7)
    b = np.linspace(0.5, 4, 7)
    vec = marcum_q1(a, b)
    assert np.array_equal(vec, [marcum_q1(x, y) for x, y in zip(a, b)])


@pytest.mark.parametrize("a,b", [(-1.0, 1.0), (1.0, -0.1), (np.nan, 1.0), (1.0, np.inf)])
def test_marcum_domain(a, b):
    with pytest.raises(DomainError):
        marcum_q1(a, b)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 8), st.floats(0, 8), st.floats(0.01, 2))
def test_marcum_monotone(a, b, d):
    # increasing in a, decreasing in b
    assert marcum_q1(a + d, b) >= marcum_q1(a, b) - 1e-14
    assert marcum_q1(a, b + d) <= marcum_q1(a, b) + 1e-14


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 30), st.floats(0, 30))
def test_marcum_in_unit_interval(a, b):
    assert 0.0 <= marcum_q1(a, b) <= 1.0


# ---------------------------------------------------------------- threshold


def test_threshold_closed_form():
    assert chi2_threshold(1e-5) == pytest.approx(23.025850929940457, abs=1e-12)
    assert chi2_threshold(0.01) == pytest.approx(-2 * math.log(0.01), abs=1e-14)


def test_threshold_at_one_is_zero():
    assert chi2_threshold(1.0) == 0.0


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5, float("nan")])
def test_threshold_domain(p):
    with pytest.raises(DomainError):
        chi2_threshold(p)


# ---------------------------------------------------------------- eigen


def _random_hermitian(n, rng):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return x @ x.conj().T


@pytest.mark.parametrize("n", [1, 2, 5, 16, 64])
def test_eigenpair_matches_eigh(n):
    rng = np.random.default_rng(n)
    m = _random_hermitian(n, rng)
    lam, v = principal_eigenpair(m)
    w, vecs = np.linalg.eigh(m)
    assert lam == pytest.approx(w[-1], rel=1e-8)
    assert abs(abs(np.vdot(vecs[:, -1], v)) - 1.0) < 1e-8
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_eigenpair_phase_convention():
    rng = np.random.default_rng(4)
    _, v = principal_eigenpair(_random_hermitian(6, rng))
    k = np.argmax(np.abs(v))
    assert v[k].imag == 0.0 and v[k].real > 0


def test_eigenpair_rank_one_fourier_direction():
    # an all-ones start would be orthogonal to this steering vector
    a = np.exp(2j * np.pi * 0.25 * np.arange(8))
    lam, v = principal_eigenpair(np.outer(a, a.conj()))
    assert lam == pytest.approx(8.0, rel=1e-10)
    assert abs(np.vdot(a, v)) == pytest.approx(np.sqrt(8.0), rel=1e-10)


def test_eigenpair_zero_matrix():
    lam, v = principal_eigenpair(np.zeros((3, 3)))
    assert lam == 0.0 and np.linalg.norm(v) == pytest.approx(1.0)


def test_eigenpair_not_hermitian():
    with pytest.raises(ValidationError):
        principal_eigenpair(np.array([[1.0, 2.0], [0.0, 1.0]]))


@pytest.mark.parametrize("gap", [1e-2, 1e-4, 1e-6])
def test_eigenpair_near_tie(gap):
    # top two eigenvalues 1 and 1 - gap in a random basis
    rng = np.random.default_rng(9)
    q, _ = np.linalg.qr(rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12)))
    vals = np.r_[1.0, 1.0 - gap, rng.uniform(0, 0.9, 10)]
    m = (q * vals) @ q.conj().T
    m = (m + m.conj().T) / 2
    lam, v = principal_eigenpair(m)
    assert lam == pytest.approx(1.0, rel=1e-8)
    assert np.linalg.norm(m @ v - lam * v) <= 1e-10 * lam


def test_eigenpair_steering_near_tie():
    # random bin selections of the kind the agent proposes
    from cogradar.array import ArrayGeometry, make_grid, steering_matrix

    grid = make_grid(20, 20)
    rng = np.random.default_rng(20240)
    for _ in range(300):
        bins = rng.choice(grid.size, size=int(rng.integers(1, 11)), replace=False)
        a = steering_matrix(6, grid.freqs[bins]).conj()
        m = a.T @ a.conj()
        lam, v = principal_eigenpair(m)
        assert lam == pytest.approx(np.linalg.eigvalsh(m)[-1], rel=1e-8)


def test_eigenpair_convergence_error():
    # nearly degenerate top pair converges far too slowly for 3 iterations
    m = np.diag([1.0, 0.999999, 0.1]).astype(complex)
    with pytest.raises(ConvergenceError) as info:
        principal_eigenpair(m, tol=1e-14, max_iter=3)
    assert info.value.residual > 0


def test_as_hermitian_accepts_and_rejects():
    m = np.array([[2, 1j], [-1j, 3]])
    assert np.array_equal(as_hermitian(m), m)
    with pytest.raises(ValidationError):
        as_hermitian(np.array([[2, 1j], [1j, 3]]))

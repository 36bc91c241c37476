import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from stablelearn.errors import DimensionMismatch, NonSPD
from stablelearn.riccati import (dare_residual, dlqr, inverse_form_residual,
                                 riccati_equivalent_form_check, solve_dare)

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


@pytest.mark.parametrize("method", ["sda", "fixed-point"])
def test_golden_ratio(method):
    sol = solve_dare([[1.0]], [[1.0]], [[1.0]], [[1.0]], method=method)
    assert sol.P[0, 0] == pytest.approx(GOLDEN, abs=1e-10)
    assert sol.K[0, 0] == pytest.approx(-GOLDEN / (1.0 + GOLDEN), abs=1e-10)
    assert sol.closed_loop_radius < 1.0


def test_r_and_r_inv_agree():
    A = np.array([[1.2, 0.5], [0.0, 0.8]])
    a = solve_dare(A, None, np.eye(2), 3.0 * np.eye(2))
    b = solve_dare(A, None, np.eye(2), R_inv=np.eye(2) / 3.0)
    np.testing.assert_allclose(a.P, b.P, rtol=1e-12)
    np.testing.assert_allclose(a.K, b.K, rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_matches_scipy(n, m, seed):
    rng = np.random.default_rng(seed)
    A = 1.5 * rng.standard_normal((n, n)) / np.sqrt(n)
    B = rng.standard_normal((n, m))
    M = rng.standard_normal((n, n))
    Q = M @ M.T + np.eye(n)
    R = np.diag(rng.uniform(0.5, 2.0, m))
    try:
        ref = scipy.linalg.solve_discrete_are(A, B, Q, R)
    except (np.linalg.LinAlgError, ValueError):
        return
    sol = solve_dare(A, B, Q, R)
    assert np.linalg.norm(sol.P - ref) <= 1e-7 * np.linalg.norm(ref)
    assert dare_residual(A, B, Q, R, sol.P) <= 1e-9
    assert sol.closed_loop_radius < 1.0
    K_ref = -np.linalg.solve(R + B.T @ ref @ B, B.T @ ref @ A)
    np.testing.assert_allclose(sol.K, K_ref, rtol=1e-6, atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.sampled_from([1e-3, 1e-6, 1e-9]), st.integers(0, 2**32 - 1))
def test_tiny_input_weight(n, delta, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    sol = solve_dare(A, None, np.eye(n), R_inv=2.0 * delta * np.eye(n))
    assert sol.residual <= 1e-9
    assert sol.closed_loop_radius < 1.0
    assert riccati_equivalent_form_check(A, sol.P, np.eye(n), delta, np.eye(n)) <= 1e-9


def test_stable_a_with_tiny_weight_is_lyapunov_solution():
    # with G -> 0 and stable A, P solves P = Q + A^T P A
    A = np.array([[0.5, 0.2], [0.0, -0.3]])
    sol = solve_dare(A, None, np.eye(2), R_inv=1e-14 * np.eye(2))
    ref = scipy.linalg.solve_discrete_lyapunov(A.T, np.eye(2))
    np.testing.assert_allclose(sol.P, ref, rtol=1e-10)


def test_dlqr_returns_gain():
    K = dlqr([[2.0]], [[1.0]], [[1.0]], [[1.0]])
    assert abs(2.0 + K[0, 0]) < 1.0


def test_inverse_form_residual_zero_at_solution():
    sol = solve_dare([[1.0]], [[1.0]], [[1.0]], [[1.0]])
    assert inverse_form_residual(np.eye(1), np.eye(1), np.eye(1), sol.P) < 1e-14


def test_validation():
    with pytest.raises(ValueError):
        solve_dare(np.eye(2), None, np.eye(2))
    with pytest.raises(ValueError):
        solve_dare(np.eye(2), None, np.eye(2), np.eye(2), R_inv=np.eye(2))
    with pytest.raises(DimensionMismatch):
        solve_dare(np.eye(2), np.ones((3, 1)), np.eye(2), np.eye(1))
    with pytest.raises(NonSPD):
        solve_dare(np.eye(2), None, -np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        solve_dare(np.eye(2), None, np.eye(2), np.eye(2), method="qz")

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stablelearn.densela import operator_norm, spectral_radius
from stablelearn.errors import DefectiveMatrix, DimensionMismatch, NonSPD
from stablelearn.stabproj import (clip_eigenvalues, delta_sweep, epsilon_bound,
                                  rate_function, rate_upper, reverse_i_projection,
                                  serialize_rate, structure_check)

EXAMPLE = np.array([[1.01, 10.0], [0.01, 1.0]])


def scalar_rate(tp, t):
    return 0.5 * (tp - t) ** 2 / (1.0 - t ** 2)


def grid_minimiser(f, lo, hi, points=200_001, rounds=3):
    """Refined grid search for the minimiser of a scalar function."""
    for _ in range(rounds):
        xs = np.linspace(lo, hi, points)
        k = int(np.argmin(f(xs)))
        step = xs[1] - xs[0]
        lo, hi = xs[max(k - 2, 0)], xs[min(k + 2, points - 1)]
    return xs[k] if step < 1e-12 else 0.5 * (lo + hi)


def random_unstable(rng, n):
    A = rng.standard_normal((n, n))
    rho = spectral_radius(A)
    return A * (rng.uniform(1.01, 3.0) / rho)


class TestRateFunction:
    def test_scalar_formula(self):
        assert rate_function([[1.5]], [[0.5]]).value == pytest.approx(scalar_rate(1.5, 0.5), rel=1e-14)

    def test_zero_on_diagonal(self):
        theta = np.array([[0.3, 0.1], [0.0, -0.4]])
        assert rate_function(theta, theta).value == 0.0

    def test_infinite_off_stable_set(self):
        r = rate_function(np.eye(2) * 0.5, np.eye(2) * 1.1)
        assert r.is_infinite
        assert serialize_rate(float(r)) == "inf"
        assert rate_function(np.eye(2) * 0.5, np.eye(2)).is_infinite

    def test_upper_bound_is_rate_at_zero(self):
        tp = EXAMPLE
        assert rate_upper(tp) == pytest.approx(rate_function(tp, np.zeros((2, 2))).value)

    def test_noise_covariance_checked(self):
        with pytest.raises(NonSPD):
            rate_function(np.eye(2), np.eye(2) * 0.1, -np.eye(2))
        with pytest.raises(DimensionMismatch):
            rate_function(np.eye(2), np.eye(3) * 0.1)


class TestProjection:
    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_all_ones_at_two_over_n(self, n):
        proj = reverse_i_projection(np.full((n, n), 2.0 / n))
        np.testing.assert_allclose(proj.theta_star, np.full((n, n), 1.0 / (2 * n)), atol=1e-4)

    @pytest.mark.parametrize("n,alpha_n", [(2, 1.25), (3, 1.5), (4, 1.8)])
    def test_all_ones_other_scales_match_ray_oracle(self, n, alpha_n):
        # On the ray c * ones the only nonzero eigenvalue is lam = c n and the
        # rate reduces to 0.5 (alpha n - lam)^2 / (1 - lam^2).
        alpha = alpha_n / n
        proj = reverse_i_projection(np.full((n, n), alpha))
        lam = grid_minimiser(lambda l: 0.5 * (alpha_n - l) ** 2 / (1.0 - l ** 2), 0.0, 0.999999)
        np.testing.assert_allclose(proj.theta_star, np.full((n, n), lam / n), atol=1e-4)
        # the minimiser 1 / (alpha n^2) only equals 1 / (2n) at alpha = 2 / n
        assert lam / n == pytest.approx(1.0 / (alpha * n * n), abs=1e-6)

    def test_scalar_against_grid(self):
        proj = reverse_i_projection([[1.5]])
        best = grid_minimiser(lambda t: scalar_rate(1.5, t), -0.999999, 0.999999)
        assert best == pytest.approx(2.0 / 3.0, abs=1e-6)
        assert proj.theta_star[0, 0] == pytest.approx(best, abs=1e-4)
        assert proj.rate_at_star == pytest.approx(scalar_rate(1.5, 2.0 / 3.0), rel=1e-6)

    def test_stable_passthrough(self):
        theta = np.array([[0.5, 2.0], [0.0, 0.3]])
        proj = reverse_i_projection(theta)
        assert proj.was_already_stable
        assert np.array_equal(proj.theta_star, theta)
        assert proj.rate_at_star == 0.0 and proj.epsilon == 0.0
        assert proj.P_delta is None

    def test_boundary_input_is_projected(self):
        proj = reverse_i_projection(np.eye(2))
        assert not proj.was_already_stable
        assert proj.spectral_radius_star < 1.0

    def test_example_matrix(self):
        proj = reverse_i_projection(EXAMPLE)
        assert proj.spectral_radius_star < 1.0
        assert proj.riccati_residual <= 1e-9
        d = proj.to_dict()
        assert set(d) >= {"theta_star", "spectral_radius", "rate", "epsilon", "was_already_stable"}

    def test_delta_must_be_positive(self):
        with pytest.raises(ValueError):
            reverse_i_projection(EXAMPLE, delta=0.0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_stable_and_pinsker(self, n, seed):
        rng = np.random.default_rng(seed)
        tp = random_unstable(rng, n)
        M = rng.standard_normal((n, n))
        S_w = M @ M.T + 0.5 * np.eye(n)
        proj = reverse_i_projection(tp, S_w)
        assert proj.spectral_radius_star < 1.0
        dist = operator_norm(tp - proj.theta_star)
        assert dist <= proj.epsilon * (1 + 1e-9) + 1e-12
        assert epsilon_bound(tp, proj, S_w) == pytest.approx(proj.epsilon, rel=1e-12)
        assert proj.epsilon_sqrt_kappa == pytest.approx(proj.epsilon / math.sqrt(2.0), rel=1e-12)

    def test_projection_beats_nearby_stable_candidates(self):
        rng = np.random.default_rng(11)
        tp = random_unstable(rng, 3)
        proj = reverse_i_projection(tp)
        for _ in range(200):
            cand = proj.theta_star + 0.05 * rng.standard_normal((3, 3))
            r = rate_function(tp, cand)
            assert r.value >= proj.rate_at_star * (1 - 1e-6)


class TestDeltaSweep:
    def test_monotone_and_bracket(self):
        sweep = delta_sweep(EXAMPLE)
        rates = sweep.bracket.rates
        assert all(b <= a * (1 + 1e-7) for a, b in zip(rates, rates[1:]))
        traces = sweep.bracket.trace_objectives
        assert all(b >= a * (1 - 1e-7) for a, b in zip(traces, traces[1:]))
        assert sweep.bracket.r_lower <= sweep.bracket.r_upper

    def test_small_delta_converges(self):
        two = np.full((2, 2), 1.0)
        a = reverse_i_projection(two, delta=1e-9).theta_star
        b = reverse_i_projection(two, delta=1e-10).theta_star
        assert np.max(np.abs(a - b)) < 1e-7

    def test_rejects_bad_deltas(self):
        with pytest.raises(ValueError):
            delta_sweep(EXAMPLE, deltas=(1e-9, 1e-6))
        with pytest.raises(ValueError):
            delta_sweep(EXAMPLE, deltas=(1e-3, -1.0))


class TestClipping:
    def test_example_reproduction(self):
        clipped = clip_eigenvalues(EXAMPLE, 0.99)
        assert spectral_radius(clipped) == pytest.approx(0.99, abs=1e-6)
        assert operator_norm(EXAMPLE - clipped) >= 4.0
        np.testing.assert_allclose(clipped, [[0.84, 4.77], [0.005, 0.84]], atol=1e-2)

    def test_stable_unchanged_and_complex_pairs(self):
        A = np.diag([0.5, 0.2])
        assert np.array_equal(clip_eigenvalues(A), A)
        R = 1.2 * np.array([[np.cos(1.0), -np.sin(1.0)], [np.sin(1.0), np.cos(1.0)]])
        C = clip_eigenvalues(R, 0.9)
        assert np.isrealobj(C)
        np.testing.assert_allclose(np.abs(np.linalg.eigvals(C)), [0.9, 0.9], rtol=1e-12)

    def test_defective(self):
        with pytest.raises(DefectiveMatrix):
            clip_eigenvalues(np.array([[1.5, 1.0], [0.0, 1.5]]))

    def test_cap_range(self):
        with pytest.raises(ValueError):
            clip_eigenvalues(EXAMPLE, 1.0)


class TestStructure:
    def test_kernel_preserved(self):
        rng = np.random.default_rng(2)
        U = rng.standard_normal((4, 2))
        V = rng.standard_normal((2, 4))
        tp = U @ V
        tp *= 2.0 / spectral_radius(tp)
        proj = reverse_i_projection(tp)
        rep = structure_check(tp, proj)
        assert rep.kernel_dim == 2
        assert rep.kernel_leak < 1e-8
        assert rep.reconstruction_error < 1e-8
        assert rep.lambda_det > 0

    def test_lambda_identity_for_stable(self):
        theta = np.diag([0.5, 0.1])
        rep = structure_check(theta, reverse_i_projection(theta))
        assert np.array_equal(rep.lambda_matrix, np.eye(2))

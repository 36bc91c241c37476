"""Rate function, reverse I-projection onto the stable matrices, and the
eigenvalue-clipping baseline.

The projection of an unstable ``theta_prime`` is approximated by

    theta_star = theta_prime + dlqr(theta_prime, I, Q, (2 delta S_w)^{-1})
               = (I + 2 delta S_w P_delta)^{-1} theta_prime,

which converges to the exact minimiser of ``rate_function(theta_prime, .)``
over the stable set as ``delta -> 0``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .densela import (as_square, check_spd, condition_number, frobenius_norm,
                      operator_norm, solve_linear, spectral_radius,
                      stability_class)
from .errors import (DefectiveMatrix, DimensionMismatch, MonotonicityViolation,
                     StructureViolation)
from .lyapunov import solve_dlyap
from .riccati import solve_dare

DEFAULT_DELTA = 1e-9
DEFAULT_RADIUS_CAP = 0.99
MONOTONE_RTOL = 1e-7


@dataclass(frozen=True)
class RateValue:
    """``value`` is ``math.inf`` when ``theta`` is not stable."""

    value: float
    theta_prime: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)

    @property
    def is_infinite(self):
        return math.isinf(self.value)

    def __float__(self):
        return self.value


def serialize_rate(value):
    """Portable form of a rate: finite floats pass through, infinity is ``"inf"``."""
    return "inf" if math.isinf(value) else float(value)


@dataclass(frozen=True)
class ProjectionResult:
    theta_star: np.ndarray
    delta: float
    P_delta: np.ndarray | None
    gain: np.ndarray
    rate_at_star: float
    spectral_radius_star: float
    epsilon: float
    epsilon_sqrt_kappa: float
    was_already_stable: bool
    S_w: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)
    riccati_residual: float = 0.0
    riccati_iterations: int = 0

    @property
    def lambda_matrix(self):
        """``I + 2 delta S_w P_delta``, so that ``lambda_matrix @ theta_star == theta_prime``."""
        n = self.theta_star.shape[0]
        if self.P_delta is None:
            return np.eye(n)
        return np.eye(n) + 2.0 * self.delta * self.S_w @ self.P_delta

    def to_dict(self):
        return {
            "theta_star": self.theta_star.tolist(),
            "spectral_radius": self.spectral_radius_star,
            "rate": serialize_rate(self.rate_at_star),
            "epsilon": self.epsilon,
            "epsilon_sqrt_kappa": self.epsilon_sqrt_kappa,
            "was_already_stable": self.was_already_stable,
            "delta": self.delta,
            "gain": self.gain.tolist(),
            "riccati_residual": self.riccati_residual,
            "riccati_iterations": self.riccati_iterations,
        }


@dataclass(frozen=True)
class RadiusBracket:
    r_lower: float
    r_upper: float
    deltas: tuple
    rates: tuple
    trace_objectives: tuple


@dataclass(frozen=True)
class DeltaSweep:
    bracket: RadiusBracket
    projections: list


@dataclass(frozen=True)
class StructureReport:
    lambda_matrix: np.ndarray
    lambda_det: float
    reconstruction_error: float
    kernel_basis: np.ndarray
    kernel_leak: float

    @property
    def kernel_dim(self):
        return self.kernel_basis.shape[1]


def _identity_if_none(M, n):
    return np.eye(n) if M is None else M


def _prepare(theta_prime, S_w, Q=None):
    theta_prime = as_square(theta_prime, "theta_prime")
    n = theta_prime.shape[0]
    S_w = as_square(_identity_if_none(S_w, n), "S_w")
    if S_w.shape != (n, n):
        raise DimensionMismatch(f"S_w is {S_w.shape}, theta_prime is {theta_prime.shape}")
    check_spd(S_w, "S_w")
    if Q is None:
        return theta_prime, S_w
    Q = as_square(Q, "Q")
    if Q.shape != (n, n):
        raise DimensionMismatch(f"Q is {Q.shape}, theta_prime is {theta_prime.shape}")
    check_spd(Q, "Q")
    return theta_prime, S_w, Q


def _rate(theta_prime, theta, S_w, S_theta):
    D = theta_prime - theta
    return 0.5 * float(np.trace(solve_linear(S_w, D @ S_theta @ D.T)))


def rate_function(theta_prime, theta, S_w=None):
    """``0.5 tr(S_w^{-1} (theta' - theta) S_theta (theta' - theta)^T)``.

    ``S_theta`` is the stationary covariance of ``theta`` driven by noise of
    covariance ``S_w`` (identity by default). Unstable ``theta`` gives an
    infinite rate.
    """
    theta_prime, S_w = _prepare(theta_prime, S_w)
    theta = as_square(theta, "theta")
    if theta.shape != theta_prime.shape:
        raise DimensionMismatch(f"theta is {theta.shape}, theta_prime is {theta_prime.shape}")
    if stability_class(theta) != "stable":
        return RateValue(math.inf, theta_prime, theta)
    S_theta = solve_dlyap(theta, S_w).S
    return RateValue(_rate(theta_prime, theta, S_w, S_theta), theta_prime, theta)


def rate_upper(theta_prime, S_w=None):
    """Rate against the zero matrix, ``0.5 ||S_w^{-1/2} theta' S_w^{1/2}||_F^2``."""
    theta_prime, S_w = _prepare(theta_prime, S_w)
    return _rate(theta_prime, np.zeros_like(theta_prime), S_w, S_w)


def reverse_i_projection(theta_prime, S_w=None, Q=None, delta=DEFAULT_DELTA):
    """Project ``theta_prime`` onto the stable matrices.

    Stable inputs are returned unchanged. Otherwise the LQR-shifted matrix
    ``theta_prime + K`` is returned, where ``K`` is the optimal gain for the
    pair ``(theta_prime, I)`` with state weight ``Q`` and input weight
    ``(2 delta S_w)^{-1}``.
    """
    n = as_square(theta_prime, "theta_prime").shape[0]
    theta_prime, S_w, Q = _prepare(theta_prime, S_w, _identity_if_none(Q, n))
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    kappa = condition_number(S_w, symmetric_pd=True)
    rho = spectral_radius(theta_prime)

    if stability_class(rho=rho) == "stable":
        return ProjectionResult(
            theta_star=theta_prime.copy(), delta=delta, P_delta=None,
            gain=np.zeros((n, n)), rate_at_star=0.0, spectral_radius_star=rho,
            epsilon=0.0, epsilon_sqrt_kappa=0.0, was_already_stable=True,
            S_w=S_w, Q=Q)

    sol = solve_dare(theta_prime, None, Q, R_inv=2.0 * delta * S_w)
    theta_star = theta_prime + sol.K
    rate = rate_function(theta_prime, theta_star, S_w).value
    return ProjectionResult(
        theta_star=theta_star, delta=delta, P_delta=sol.P, gain=sol.K,
        rate_at_star=rate, spectral_radius_star=sol.closed_loop_radius,
        epsilon=math.sqrt(2.0 * kappa * rate),
        epsilon_sqrt_kappa=math.sqrt(kappa * rate),
        was_already_stable=False, S_w=S_w, Q=Q,
        riccati_residual=sol.residual, riccati_iterations=sol.iterations)


def delta_sweep(theta_prime, S_w=None, Q=None, deltas=(1e-3, 1e-6, 1e-9)):
    """Project for each ``delta`` (strictly decreasing) and bracket the
    attainable rate radius.

    Raises :class:`MonotonicityViolation` if the rate grows as ``delta``
    shrinks, or the trace objective ``tr(Q S_theta_star)`` shrinks, by more
    than ``1e-7`` relative.
    """
    deltas = tuple(float(d) for d in deltas)
    if not deltas or any(d <= 0 for d in deltas):
        raise ValueError("deltas must be positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    theta_prime, S_w = _prepare(theta_prime, S_w)
    n = theta_prime.shape[0]
    Q = np.eye(n) if Q is None else Q

    projections = [reverse_i_projection(theta_prime, S_w, Q, d) for d in deltas]
    rates = tuple(p.rate_at_star for p in projections)
    traces = tuple(float(np.trace(Q @ solve_dlyap(p.theta_star, S_w).S)) for p in projections)

    # deltas decrease along the list: rates must not increase, traces must not decrease
    for i in range(1, len(deltas)):
        if rates[i] > rates[i - 1] + MONOTONE_RTOL * max(abs(rates[i - 1]), 1.0):
            raise MonotonicityViolation(
                f"rate increased from {rates[i - 1]!r} (delta={deltas[i - 1]:g}) "
                f"to {rates[i]!r} (delta={deltas[i]:g})")
        if traces[i] < traces[i - 1] - MONOTONE_RTOL * max(abs(traces[i - 1]), 1.0):
            raise MonotonicityViolation(
                f"trace objective decreased from {traces[i - 1]!r} to {traces[i]!r}")

    bracket = RadiusBracket(r_lower=min(rates), r_upper=rate_upper(theta_prime, S_w),
                            deltas=deltas, rates=rates, trace_objectives=traces)
    return DeltaSweep(bracket=bracket, projections=projections)


def epsilon_bound(theta_hat, projection, S_w=None):
    """``sqrt(2 kappa(S_w) I(theta_hat, P(theta_hat)))``; bounds
    ``||theta_hat - P(theta_hat)||_2``."""
    theta_hat, S_w = _prepare(theta_hat, S_w)
    if projection.was_already_stable:
        return 0.0
    kappa = condition_number(S_w, symmetric_pd=True)
    rate = rate_function(theta_hat, projection.theta_star, S_w).value
    return math.sqrt(2.0 * kappa * rate)


def clip_eigenvalues(theta_prime, radius_cap=DEFAULT_RADIUS_CAP):
    """Scale every eigenvalue with modulus above ``radius_cap`` back onto the
    circle of that radius, keeping its argument and eigenvector."""
    theta_prime = as_square(theta_prime, "theta_prime")
    if not 0.0 < radius_cap < 1.0:
        raise ValueError(f"radius_cap must lie in (0, 1), got {radius_cap}")
    lam, V = np.linalg.eig(theta_prime)
    big = np.abs(lam) > radius_cap
    if not np.any(big):
        return theta_prime.copy()
    if np.linalg.cond(V) >= 1e10:
        raise DefectiveMatrix("eigenvector basis is numerically singular")
    lam = np.where(big, lam * (radius_cap / np.where(big, np.abs(lam), 1.0)), lam)
    return np.real(V @ np.diag(lam) @ np.linalg.inv(V))


def structure_check(theta_prime, projection, kernel_rtol=1e-10, tol=1e-8):
    """Verify ``theta_star = Lambda^{-1} theta_prime`` with
    ``Lambda = I + 2 delta S_w P_delta`` and that the kernel of
    ``theta_prime`` is mapped to zero."""
    theta_prime = as_square(theta_prime, "theta_prime")
    Lam = projection.lambda_matrix
    det = float(np.linalg.det(Lam))
    if not det > 0 or not np.isfinite(det):
        raise StructureViolation(f"Lambda is not invertible (det={det!r})")

    scale = max(frobenius_norm(theta_prime), np.finfo(float).tiny)
    recon = frobenius_norm(Lam @ projection.theta_star - theta_prime) / scale
    if recon > tol:
        raise StructureViolation(f"Lambda theta_star differs from theta_prime by {recon:.3e}")

    _, s, Vt = np.linalg.svd(theta_prime)
    null = s <= kernel_rtol * max(s[0], np.finfo(float).tiny)
    basis = Vt[null].T
    leak = 0.0
    if basis.size:
        leak = operator_norm(projection.theta_star @ basis)
        if leak > tol:
            raise StructureViolation(f"kernel of theta_prime leaks: ||theta_star v|| = {leak:.3e}")
    return StructureReport(lambda_matrix=Lam, lambda_det=det, reconstruction_error=recon,
                           kernel_basis=basis, kernel_leak=leak)

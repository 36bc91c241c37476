"""Stationary state covariance from the discrete Lyapunov equation
``S = theta S theta^T + S_w``."""

from dataclasses import dataclass

import numpy as np

from .densela import (as_square, check_spd, frobenius_norm, solve_linear,
                      spectral_radius, stability_class, symmetrize)
from .errors import DimensionMismatch, NonConvergence, UnstableInput

KRON_MAX_N = 40
DOUBLING_MAX_ITER = 200


@dataclass(frozen=True)
class StationaryCovariance:
    S: np.ndarray
    residual: float
    method: str

    @property
    def trace(self):
        return float(np.trace(self.S))


def lyapunov_residual(theta, S_w, S):
    """Relative residual ``||S - theta S theta^T - S_w||_F / ||S||_F``."""
    R = S - theta @ S @ theta.T - S_w
    return frobenius_norm(R) / max(frobenius_norm(S), np.finfo(float).tiny)


def _kron_solve(theta, S_w):
    n = theta.shape[0]
    # row-major vec: vec(theta S theta^T) = (theta kron theta) vec(S)
    lhs = np.eye(n * n) - np.kron(theta, theta)
    return solve_linear(lhs, S_w.reshape(-1)).reshape(n, n)


def _doubling_solve(theta, S_w):
    A = theta.copy()
    S = S_w.copy()
    for _ in range(DOUBLING_MAX_ITER):
        step = A @ S @ A.T
        S = S + step
        if frobenius_norm(step) <= np.finfo(float).eps * frobenius_norm(S):
            return S
        A = A @ A
        if not np.all(np.isfinite(A)):
            break
    raise NonConvergence(
        f"Lyapunov doubling did not converge in {DOUBLING_MAX_ITER} iterations")


def solve_stein(A, C, method=None):
    """Solve ``X = A X A^T + C`` for stable ``A`` and any square ``C``.

    No definiteness checks; used for defect corrections where ``C`` is an
    indefinite residual.
    """
    if method is None:
        method = "kron" if A.shape[0] <= KRON_MAX_N else "doubling"
    if method == "kron":
        return _kron_solve(A, C)
    return _doubling_solve(A, C)


def solve_dlyap(theta, S_w, method=None):
    """Solve ``S = theta S theta^T + S_w`` for stable ``theta`` and SPD ``S_w``.

    ``method`` is ``"kron"`` (exact vectorised solve), ``"doubling"`` (squaring
    iteration) or ``None`` to pick kron for ``n <= 40``.
    """
    theta = as_square(theta, "theta")
    S_w = as_square(S_w, "S_w")
    if theta.shape != S_w.shape:
        raise DimensionMismatch(f"theta is {theta.shape}, S_w is {S_w.shape}")
    check_spd(S_w, "S_w")
    rho = spectral_radius(theta)
    if stability_class(rho=rho) != "stable":
        raise UnstableInput(f"theta has spectral radius {rho:.12g}; no stationary covariance")

    if method is None:
        method = "kron" if theta.shape[0] <= KRON_MAX_N else "doubling"
    if method == "kron":
        S = _kron_solve(theta, S_w)
    elif method == "doubling":
        S = _doubling_solve(theta, S_w)
    else:
        raise ValueError(f"unknown method {method!r}")
    S = symmetrize(S)
    return StationaryCovariance(S=S, residual=lyapunov_residual(theta, S_w, S), method=method)

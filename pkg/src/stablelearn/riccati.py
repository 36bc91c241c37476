"""Discrete algebraic Riccati equation and the LQR gain.

The solvers work on the inverse form

    P = Q + A^T P (I + G P)^{-1} A,      G = B R^{-1} B^T,

which is equivalent to the textbook DARE by the matrix inversion lemma. Only
``R^{-1}`` is ever needed, so weights like ``R = (2 delta S_w)^{-1}`` with
``delta = 1e-9`` are passed as ``R_inv = 2 delta S_w`` and never formed.

Gains follow the ``u = K x`` convention: the closed loop is ``A + B K``.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .densela import (as_matrix, as_square, check_spd, frobenius_norm,
                      solve_linear, spectral_radius, symmetrize)
from .errors import DimensionMismatch, NonConvergence, SingularMatrix
from .lyapunov import solve_stein

logger = logging.getLogger(__name__)

MAX_ITER = 10000
STEP_RTOL = 1e-12
RESIDUAL_RTOL = 1e-10
NEWTON_STEPS = 4


@dataclass(frozen=True)
class DareSolution:
    P: np.ndarray
    K: np.ndarray
    residual: float
    iterations: int
    closed_loop_radius: float
    method: str

    @property
    def stability_margin(self):
        return 1.0 - self.closed_loop_radius


def inverse_form_residual(A, G, Q, P):
    """Relative residual of ``P = Q + A^T P (I + G P)^{-1} A``."""
    n = P.shape[0]
    W = np.eye(n) + G @ P
    rhs = Q + A.T @ P @ solve_linear(W, A)
    return frobenius_norm(P - rhs) / max(frobenius_norm(P), np.finfo(float).tiny)


def dare_residual(A, B, Q, R, P):
    """Relative residual of the textbook form
    ``P = Q + A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A``."""
    BtPA = B.T @ P @ A
    rhs = Q + A.T @ P @ A - BtPA.T @ solve_linear(R + B.T @ P @ B, BtPA)
    return frobenius_norm(P - rhs) / max(frobenius_norm(P), np.finfo(float).tiny)


def _gain(A, B, R_inv, P):
    """``K = -(I + R^{-1} B^T P B)^{-1} R^{-1} B^T P A``, an m x m solve."""
    m = B.shape[1]
    BtP = B.T @ P
    return -solve_linear(np.eye(m) + R_inv @ BtP @ B, R_inv @ BtP @ A)


def _defect(A, B, R_inv, Q, P):
    """``F(P) = Q + A^T P (A + B K) - P`` and the closed loop ``A + B K``.

    Equal to the inverse form since ``A + B K = (I + G P)^{-1} A``, but going
    through the m x m gain system avoids the ill-conditioned ``I + G P`` when
    ``P`` is large and ``G`` rank deficient.
    """
    Ac = A + B @ _gain(A, B, R_inv, P)
    return symmetrize(Q + A.T @ P @ Ac - P), Ac


def closed_loop_residual(A, B, R_inv, Q, P):
    """Relative size of ``F(P)`` computed through the gain."""
    F, _ = _defect(A, B, R_inv, Q, P)
    return frobenius_norm(F) / max(frobenius_norm(P), np.finfo(float).tiny)


def _newton_refine(A, B, R_inv, Q, P):
    """Newton defect correction: solve ``X - Ac^T X Ac = F(P)``, ``P += X``.

    Doubling loses accuracy when ``P`` spans many orders of magnitude (tiny
    ``G``); a few Newton steps restore it.
    """
    F, Ac = _defect(A, B, R_inv, Q, P)
    best = frobenius_norm(F)
    for _ in range(NEWTON_STEPS):
        if best <= np.finfo(float).eps * frobenius_norm(P):
            break
        if not spectral_radius(Ac) < 1.0:
            break
        P_new = symmetrize(P + solve_stein(Ac.T, F))
        F_new, Ac_new = _defect(A, B, R_inv, Q, P_new)
        size = frobenius_norm(F_new)
        if not size < best:
            break
        P, F, Ac, best = P_new, F_new, Ac_new, size
    return P


def _sda(A, G, Q, max_iter):
    """Structure-preserving doubling; ``H_k`` converges quadratically to P."""
    n = A.shape[0]
    I = np.eye(n)
    Ak, Gk, Hk = A.copy(), G.copy(), Q.copy()
    for k in range(1, max_iter + 1):
        W = I + Gk @ Hk
        try:
            WA = solve_linear(W, Ak)
            WG = solve_linear(W, Gk)
        except SingularMatrix as exc:
            raise NonConvergence(f"doubling step {k}: {exc}") from exc
        H_next = symmetrize(Hk + Ak.T @ Hk @ WA)
        G_next = symmetrize(Gk + Ak @ WG @ Ak.T)
        Ak = Ak @ WA
        if not np.all(np.isfinite(H_next)):
            raise NonConvergence(f"doubling diverged at step {k}")
        step = frobenius_norm(H_next - Hk)
        Hk, Gk = H_next, G_next
        if step <= STEP_RTOL * frobenius_norm(Hk):
            return Hk, k
    raise NonConvergence(f"doubling did not converge in {max_iter} steps")


def _fixed_point(A, G, Q, max_iter, P0=None):
    """Value iteration ``P <- Q + A^T P (I + G P)^{-1} A`` from ``P0 = Q``."""
    n = A.shape[0]
    I = np.eye(n)
    P = Q.copy() if P0 is None else P0.copy()
    for k in range(1, max_iter + 1):
        P_next = symmetrize(Q + A.T @ P @ solve_linear(I + G @ P, A))
        if not np.all(np.isfinite(P_next)):
            raise NonConvergence(f"value iteration diverged at step {k}")
        step = frobenius_norm(P_next - P)
        P = P_next
        if step <= STEP_RTOL * frobenius_norm(P):
            return P, k
        if k % 50 == 0 and inverse_form_residual(A, G, Q, P) <= RESIDUAL_RTOL:
            return P, k
    raise NonConvergence(f"value iteration did not converge in {max_iter} steps")


def _validate(A, B, Q, R, R_inv):
    A = as_square(A, "A")
    n = A.shape[0]
    B = np.eye(n) if B is None else as_matrix(B, "B")
    if B.shape[0] != n:
        raise DimensionMismatch(f"B has {B.shape[0]} rows, A is {n}x{n}")
    m = B.shape[1]
    Q = as_square(Q, "Q")
    if Q.shape != (n, n):
        raise DimensionMismatch(f"Q is {Q.shape}, expected {(n, n)}")
    check_spd(Q, "Q")
    if (R is None) == (R_inv is None):
        raise ValueError("pass exactly one of R and R_inv")
    if R is not None:
        R = as_square(R, "R")
        if R.shape != (m, m):
            raise DimensionMismatch(f"R is {R.shape}, expected {(m, m)}")
        check_spd(R, "R")
        R_inv = symmetrize(np.linalg.inv(R))
    else:
        R_inv = as_square(R_inv, "R_inv")
        if R_inv.shape != (m, m):
            raise DimensionMismatch(f"R_inv is {R_inv.shape}, expected {(m, m)}")
        check_spd(R_inv, "R_inv")
    return A, B, symmetrize(Q), R_inv


def solve_dare(A, B, Q, R=None, *, R_inv=None, method="sda", max_iter=MAX_ITER):
    """Stabilising solution of the discrete algebraic Riccati equation.

    Parameters
    ----------
    A : (n, n) array_like
    B : (n, m) array_like or None
        ``None`` means the identity.
    Q : (n, n) SPD array_like
    R : (m, m) SPD array_like, optional
    R_inv : (m, m) SPD array_like, optional
        The inverse input weight. Give this instead of ``R`` when ``R`` is too
        large to represent accurately.
    method : {"sda", "fixed-point"}
        ``"sda"`` falls back to value iteration if doubling fails.

    Returns
    -------
    DareSolution
        ``P``, the gain ``K`` with closed loop ``A + B K``, the relative
        residual ``||Q + A^T P (A + B K) - P||_F / ||P||_F`` and the
        iteration count.
    """
    A, B, Q, R_inv = _validate(A, B, Q, R, R_inv)
    G = symmetrize(B @ R_inv @ B.T)

    if method == "sda":
        try:
            P, iters = _sda(A, G, Q, max_iter)
            used = "sda"
        except NonConvergence as exc:
            logger.warning("doubling failed (%s); falling back to value iteration", exc)
            P, iters = _fixed_point(A, G, Q, max_iter)
            used = "fixed-point"
    elif method == "fixed-point":
        P, iters = _fixed_point(A, G, Q, max_iter)
        used = "fixed-point"
    else:
        raise ValueError(f"unknown method {method!r}")
    P = _newton_refine(A, B, R_inv, Q, P)

    # K = -(R + B^T P B)^{-1} B^T P A = -(I + R^{-1} B^T P B)^{-1} R^{-1} B^T P A
    K = _gain(A, B, R_inv, P)
    rho = spectral_radius(A + B @ K)
    if not rho < 1.0:
        raise NonConvergence(f"Riccati solution is not stabilising (closed-loop radius {rho:.6g})")
    residual = closed_loop_residual(A, B, R_inv, Q, P)
    if residual > 1e-9:
        raise NonConvergence(f"Riccati residual {residual:.3e} too large")
    return DareSolution(P=P, K=K, residual=residual, iterations=iters,
                        closed_loop_radius=rho, method=used)


def dlqr(A, B, Q, R=None, *, R_inv=None):
    """Optimal infinite-horizon LQR gain ``K`` (closed loop ``A + B K``)."""
    return solve_dare(A, B, Q, R, R_inv=R_inv).K


def riccati_equivalent_form_check(A, P, Q, delta, S_w):
    """Relative residual of ``P = Q + A^T P (I + 2 delta S_w P)^{-1} A``."""
    A = as_square(A, "A")
    P = as_square(P, "P")
    Q = as_square(Q, "Q")
    S_w = as_square(S_w, "S_w")
    if delta <= 0:
        raise ValueError("delta must be positive")
    check_spd(P, "P")
    return inverse_form_residual(A, 2.0 * delta * S_w, Q, P)

"""Dense real linear-algebra helpers.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. No function in
this module writes into its arguments.
"""

import io
import warnings

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgWarning

from .errors import (DimensionMismatch, NonConvergence, NonFiniteInput, NonSPD,
                     SingularMatrix)

# rho < 1 - STABILITY_BAND is stable, |rho - 1| <= STABILITY_BAND is boundary
STABILITY_BAND = 1e-12

__all__ = [
    "STABILITY_BAND", "as_matrix", "as_square", "eigenvalues", "spectral_radius",
    "stability_class", "is_stable", "operator_norm", "frobenius_norm",
    "condition_number", "solve_linear", "sqrt_spd", "check_spd", "symmetrize",
    "format_matrix", "parse_matrix", "read_matrix", "write_matrix",
]


def as_matrix(A, name="matrix"):
    """Return ``A`` as a finite 2-D float64 array (scalars become 1x1)."""
    M = np.array(A, dtype=float, ndmin=2, copy=True)
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {M.shape}")
    if M.size == 0:
        raise DimensionMismatch(f"{name} is empty")
    if not np.all(np.isfinite(M)):
        raise NonFiniteInput(f"{name} has NaN or Inf entries")
    return M


def as_square(A, name="matrix"):
    M = as_matrix(A, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    return M


def symmetrize(S):
    return 0.5 * (S + S.T)


def eigenvalues(A):
    """All eigenvalues of a real square matrix as a complex array.

    Backed by LAPACK ``dgeev`` (Hessenberg reduction followed by shifted QR
    with 2x2 deflation). Conjugate pairs are returned exactly conjugated.
    """
    M = as_square(A)
    try:
        lam = scipy.linalg.eigvals(M, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"eigenvalue iteration failed: {exc}") from exc
    return np.asarray(lam, dtype=complex)


def spectral_radius(A):
    lam = eigenvalues(A)
    return float(np.max(np.abs(lam)))


def stability_class(A=None, *, rho=None):
    """Classify as ``"stable"``, ``"boundary"`` or ``"unstable"``."""
    if rho is None:
        rho = spectral_radius(A)
    if rho < 1.0 - STABILITY_BAND:
        return "stable"
    if rho <= 1.0 + STABILITY_BAND:
        return "boundary"
    return "unstable"


def is_stable(A=None, *, rho=None):
    return stability_class(A, rho=rho) == "stable"


def operator_norm(A):
    """Spectral norm: the largest singular value of ``A``."""
    M = as_matrix(A)
    return float(scipy.linalg.svdvals(M, check_finite=False)[0])


def frobenius_norm(A):
    M = as_matrix(A)
    return float(np.sqrt(np.sum(M * M)))


def condition_number(A, symmetric_pd=False):
    """2-norm condition number.

    With ``symmetric_pd`` the input is checked to be SPD and the ratio of the
    extreme eigenvalues is returned.
    """
    M = as_square(A)
    if symmetric_pd:
        lam = check_spd(M)
        return float(lam[-1] / lam[0])
    s = scipy.linalg.svdvals(M, check_finite=False)
    if s[-1] <= np.finfo(float).eps * s[0] or s[-1] == 0.0:
        raise SingularMatrix("matrix is singular to working precision")
    return float(s[0] / s[-1])


def check_spd(S, name="matrix", rtol=0.0):
    """Validate that ``S`` is symmetric positive definite.

    Returns the ascending eigenvalues of the symmetric part.
    """
    M = as_square(S, name)
    scale = max(np.max(np.abs(M)), np.finfo(float).tiny)
    if np.max(np.abs(M - M.T)) > 1e-10 * scale:
        raise NonSPD(f"{name} is not symmetric")
    lam = np.linalg.eigvalsh(symmetrize(M))
    if lam[0] <= rtol * abs(lam[-1]) or lam[0] <= 0.0:
        raise NonSPD(f"{name} is not positive definite (min eigenvalue {lam[0]:.3e})")
    return lam


def solve_linear(A, B):
    """Solve ``A X = B``; raises :class:`SingularMatrix` when ``A`` is
    numerically singular."""
    M = as_square(A, "A")
    rhs = as_matrix(B, "B") if np.ndim(B) != 1 else np.array(B, dtype=float)
    if rhs.shape[0] != M.shape[0]:
        raise DimensionMismatch(f"A is {M.shape}, B has {rhs.shape[0]} rows")
    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        try:
            return scipy.linalg.solve(M, rhs, check_finite=False)
        except (np.linalg.LinAlgError, LinAlgWarning) as exc:
            raise SingularMatrix(f"linear system is singular: {exc}") from exc


def sqrt_spd(S):
    """Symmetric positive definite square root."""
    M = as_square(S)
    lam = check_spd(M)
    _, V = np.linalg.eigh(symmetrize(M))
    R = (V * np.sqrt(lam)) @ V.T
    return symmetrize(R)


# -- matrix text format -----------------------------------------------------

def format_matrix(A):
    M = as_matrix(A)
    out = io.StringIO()
    out.write(f"{M.shape[0]} {M.shape[1]}\n")
    for row in M:
        out.write(" ".join(format(float(x), ".17g") for x in row))
        out.write("\n")
    return out.getvalue()


def parse_matrix(text):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DimensionMismatch("matrix text is empty")
    try:
        rows, cols = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise DimensionMismatch(f"bad matrix header {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != rows:
        raise DimensionMismatch(f"header says {rows} rows, found {len(body)}")
    data = []
    for ln in body:
        vals = [float(tok) for tok in ln.split()]
        if len(vals) != cols:
            raise DimensionMismatch(f"expected {cols} entries per row, got {len(vals)}")
        data.append(vals)
    return as_matrix(np.array(data, dtype=float).reshape(rows, cols))


def read_matrix(path):
    with open(path, encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def write_matrix(path, A):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_matrix(A))


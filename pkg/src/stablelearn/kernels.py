"""Kernel backend selection.

The compiled extension is used for the state recursion when it was built;
otherwise the numpy fallback is imported. Set ``STABLELEARN_PURE_PYTHON=1`` to force the
fallback.
"""

import importlib
import os

_PURE = os.environ.get("STABLELEARN_PURE_PYTHON", "").strip().lower() in {"1", "true", "yes"}


def load_backend(name):
    """Import a backend by name: ``"cython"`` or ``"python"``."""
    if name == "cython":
        return importlib.import_module("stablelearn._kernels")
    if name == "python":
        return importlib.import_module("stablelearn._kernels_py")
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        load_backend("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


if _PURE:
    _impl = load_backend("python")
    BACKEND = "python"
else:
    try:
        _impl = load_backend("cython")
        BACKEND = "cython"
    except ImportError:
        _impl = load_backend("python")
        BACKEND = "python"

_fallback = load_backend("python")

# Past this size the BLAS matvec in the fallback beats the scalar loops.
AR_COMPILED_MAX_N = 48


def ar_recursion(theta, x0, noise):
    """States ``x[t+1] = theta x[t] + noise[t]``, shape ``(T+1, n)``."""
    if theta.shape[0] > AR_COMPILED_MAX_N:
        return _fallback.ar_recursion(theta, x0, noise)
    return _impl.ar_recursion(theta, x0, noise)


# Segment-wise gemm outperforms the compiled triple loop at every size
# measured by benchmarks/bench_kernels.py, so moments always use numpy.
lagged_moments = _fallback.lagged_moments

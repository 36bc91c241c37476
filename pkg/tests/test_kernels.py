import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stablelearn import kernels

BACKENDS = kernels.available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return kernels.load_backend(request.param)


def test_compiled_backend_built():
    assert "cython" in BACKENDS


def test_ar_recursion_hand_case(backend):
    out = backend.ar_recursion(np.array([[0.5]]), np.array([2.0]), np.array([[1.0], [0.0]]))
    np.testing.assert_allclose(out[:, 0], [2.0, 2.0, 1.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 200), st.integers(0, 2**32 - 1))
def test_backends_agree(n, T, seed):
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal((n, n)) * 0.4
    x0 = rng.standard_normal(n)
    noise = rng.standard_normal((T, n))
    mods = [kernels.load_backend(b) for b in BACKENDS]
    outs = [m.ar_recursion(theta, x0, noise) for m in mods]
    for o in outs[1:]:
        np.testing.assert_allclose(o, outs[0], rtol=1e-12, atol=1e-12)
    cps = np.unique(rng.integers(1, T + 1, size=3)).astype(np.int64)
    mom = [m.lagged_moments(outs[0], cps) for m in mods]
    for c, g in mom[1:]:
        np.testing.assert_allclose(c, mom[0][0], rtol=1e-11, atol=1e-11)
        np.testing.assert_allclose(g, mom[0][1], rtol=1e-11, atol=1e-11)


def test_moments_match_direct_sums(backend):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((51, 3))
    cross, gram = backend.lagged_moments(X, np.array([20, 50], dtype=np.int64))
    np.testing.assert_allclose(cross[0], X[1:21].T @ X[:20], atol=1e-12)
    np.testing.assert_allclose(gram[1], X[:50].T @ X[:50], atol=1e-12)


def test_bad_checkpoints(backend):
    X = np.ones((5, 1))
    with pytest.raises(ValueError):
        backend.lagged_moments(X, np.array([3, 2], dtype=np.int64))
    with pytest.raises(ValueError):
        backend.lagged_moments(X, np.array([5], dtype=np.int64))


def test_dispatch_large_state_uses_fallback():
    n = kernels.AR_COMPILED_MAX_N + 1
    theta = np.eye(n) * 0.5
    out = kernels.ar_recursion(theta, np.ones(n), np.zeros((2, n)))
    np.testing.assert_allclose(out[-1], 0.25)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.load_backend("fortran")


def test_environment_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, STABLELEARN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import stablelearn.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for trajectory simulation and least-squares moments.

Must stay call-compatible with ``_kernels_py``.
"""

import numpy as np


def ar_recursion(const double[:, ::1] theta, const double[::1] x0,
                 const double[:, ::1] noise):
    """States of ``x[t+1] = theta x[t] + noise[t]``; returns shape (T+1, n)."""
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t T = noise.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double acc
    if theta.shape[1] != n or x0.shape[0] != n or noise.shape[1] != n:
        raise ValueError("shape mismatch between theta, x0 and noise")
    out = np.empty((T + 1, n), dtype=np.float64)
    cdef double[:, ::1] X = out
    for i in range(n):
        X[0, i] = x0[i]
    with nogil:
        for t in range(T):
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc = acc + theta[i, j] * X[t, j]
                X[t + 1, i] = acc + noise[t, i]
    return out


def lagged_moments(const double[:, ::1] states, const long long[::1] checkpoints):
    """Cumulative ``sum_{t=1..T} x_t x_{t-1}^T`` and ``sum x_{t-1} x_{t-1}^T``
    at each checkpoint ``T`` (strictly increasing, ``1 <= T <= len - 1``).

    Returns arrays of shape (k, n, n).
    """
    cdef Py_ssize_t n = states.shape[1]
    cdef Py_ssize_t k = checkpoints.shape[0]
    cdef Py_ssize_t c, t, i, j
    cdef long long prev = 0
    cdef long long stop
    for c in range(k):
        if checkpoints[c] <= prev or checkpoints[c] > states.shape[0] - 1:
            raise ValueError("checkpoints must be strictly increasing within [1, len(states) - 1]")
        prev = checkpoints[c]
    cross_out = np.zeros((k, n, n), dtype=np.float64)
    gram_out = np.zeros((k, n, n), dtype=np.float64)
    cdef double[:, :, ::1] cross = cross_out
    cdef double[:, :, ::1] gram = gram_out
    cdef double[:, ::1] cacc = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] gacc = np.zeros((n, n), dtype=np.float64)
    t = 1
    with nogil:
        for c in range(k):
            stop = checkpoints[c]
            while t <= stop:
                for i in range(n):
                    for j in range(n):
                        cacc[i, j] += states[t, i] * states[t - 1, j]
                    for j in range(i, n):
                        gacc[i, j] += states[t - 1, i] * states[t - 1, j]
                t += 1
            for i in range(n):
                for j in range(n):
                    cross[c, i, j] = cacc[i, j]
                for j in range(i, n):
                    gram[c, i, j] = gacc[i, j]
                    gram[c, j, i] = gacc[i, j]
    return cross_out, gram_out

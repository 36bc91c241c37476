"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def ar_recursion(theta, x0, noise):
    theta = np.asarray(theta, dtype=float)
    noise = np.asarray(noise, dtype=float)
    n = theta.shape[0]
    if theta.shape[1] != n or np.shape(x0) != (n,) or noise.shape[1] != n:
        raise ValueError("shape mismatch between theta, x0 and noise")
    T = noise.shape[0]
    out = np.empty((T + 1, n))
    out[0] = x0
    x = out[0]
    for t in range(T):
        x = theta @ x + noise[t]
        out[t + 1] = x
    return out


def lagged_moments(states, checkpoints):
    states = np.asarray(states, dtype=float)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    prev = 0
    for c in checkpoints:
        if c <= prev or c > states.shape[0] - 1:
            raise ValueError("checkpoints must be strictly increasing within [1, len(states) - 1]")
        prev = c
    n = states.shape[1]
    k = len(checkpoints)
    cross = np.zeros((k, n, n))
    gram = np.zeros((k, n, n))
    cacc = np.zeros((n, n))
    gacc = np.zeros((n, n))
    start = 1
    for c, stop in enumerate(checkpoints):
        cur = states[start:stop + 1]
        lag = states[start - 1:stop]
        cacc = cacc + cur.T @ lag
        gacc = gacc + lag.T @ lag
        cross[c] = cacc
        gram[c] = 0.5 * (gacc + gacc.T)
        start = stop + 1
    return cross, gram

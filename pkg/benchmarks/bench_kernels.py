"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` wall time per kernel and backend and checks
that both backends return the same arrays.
"""

import argparse
import timeit

import numpy as np

from stablelearn.kernels import available_backends, load_backend

CASES = [(1, 10_000), (5, 10_000), (20, 5_000), (100, 2_000)]


def _inputs(n, T, seed=0):
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal((n, n))
    theta *= 0.9 / np.max(np.abs(np.linalg.eigvals(theta)))
    x0 = rng.standard_normal(n)
    noise = rng.standard_normal((T, n))
    checkpoints = np.unique(np.geomspace(10, T, 8).astype(np.int64))
    return theta, x0, noise, checkpoints


def run(repeat=5):
    backends = {name: load_backend(name) for name in available_backends()}
    rows = []
    for n, T in CASES:
        theta, x0, noise, cps = _inputs(n, T)
        states = backends["python"].ar_recursion(theta, x0, noise)
        ref = None
        for name, mod in backends.items():
            t_ar = min(timeit.repeat(lambda: mod.ar_recursion(theta, x0, noise), number=1, repeat=repeat))
            t_lm = min(timeit.repeat(lambda: mod.lagged_moments(states, cps), number=1, repeat=repeat))
            out = (mod.ar_recursion(theta, x0, noise), *mod.lagged_moments(states, cps))
            if ref is None:
                ref = out
            diff = max(float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1.0)) for a, b in zip(out, ref))
            rows.append((n, T, name, 1e3 * t_ar, 1e3 * t_lm, diff))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"{'n':>4} {'T':>7} {'backend':>8} {'ar_ms':>10} {'moments_ms':>11} {'rel_diff':>10}")
    for n, T, name, t_ar, t_lm, diff in run(args.repeat):
        print(f"{n:>4} {T:>7} {name:>8} {t_ar:>10.3f} {t_lm:>11.3f} {diff:>10.2e}")


if __name__ == "__main__":
    main()

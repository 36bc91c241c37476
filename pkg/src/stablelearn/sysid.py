"""Simulation of ``x[t+1] = theta x[t] + w[t]`` and least-squares
identification of ``theta`` from one trajectory."""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .densela import as_square, check_spd, solve_linear, sqrt_spd, stability_class
from .errors import DimensionMismatch, NonFiniteInput, SingularGram, UnstableInput
from .lyapunov import solve_dlyap

INIT_MODES = ("stationary", "zero", "given")
GRAM_RTOL = 1e-12


@dataclass(frozen=True)
class LinearSystem:
    theta: np.ndarray
    S_w: np.ndarray
    init: str = "stationary"
    x0: np.ndarray | None = None

    def __post_init__(self):
        theta = as_square(self.theta, "theta")
        S_w = as_square(self.S_w, "S_w")
        if theta.shape != S_w.shape:
            raise DimensionMismatch(f"theta is {theta.shape}, S_w is {S_w.shape}")
        check_spd(S_w, "S_w")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        x0 = None
        if self.init == "given":
            if self.x0 is None:
                raise ValueError("init='given' needs x0")
            x0 = np.array(self.x0, dtype=float).reshape(-1)
            if x0.shape != (theta.shape[0],):
                raise DimensionMismatch(f"x0 has {x0.size} entries, expected {theta.shape[0]}")
        if self.init == "stationary" and stability_class(theta) != "stable":
            raise UnstableInput("stationary initialisation needs a stable theta")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "S_w", S_w)
        object.__setattr__(self, "x0", x0)

    @property
    def n(self):
        return self.theta.shape[0]

    def digest(self):
        h = hashlib.sha256()
        h.update(self.init.encode())
        for arr in (self.theta, self.S_w, self.x0):
            if arr is not None:
                h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    seed: int = 0
    system_digest: str = ""

    def __post_init__(self):
        states = np.array(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if states.ndim != 2 or states.shape[0] < 2:
            raise DimensionMismatch("a trajectory needs at least two states")
        if not np.all(np.isfinite(states)):
            raise NonFiniteInput("trajectory has non-finite states")
        object.__setattr__(self, "states", states)

    @property
    def T(self):
        return self.states.shape[0] - 1

    @property
    def n(self):
        return self.states.shape[1]


@dataclass(frozen=True)
class LeastSquaresEstimate:
    theta_hat: np.ndarray
    gram: np.ndarray = field(repr=False)
    T: int
    gram_min_eig: float


def derive_seed(master_seed, *indices):
    """64-bit seed for the stream at ``indices`` under ``master_seed``,
    independent of the order in which streams are requested."""
    if not indices:
        raise ValueError("derive_seed needs at least one index")
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, *(int(i) for i in indices)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def simulate(system, T, seed):
    """Draw ``T`` transitions with Gaussian noise ``N(0, S_w)``.

    The stream is a pure function of ``seed``: the initial state (when
    stationary) is drawn first, then a ``(T, n)`` block of noise.
    """
    T = int(T)
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    n = system.n
    rng = np.random.default_rng(int(seed))
    if system.init == "stationary":
        S = solve_dlyap(system.theta, system.S_w).S
        x0 = sqrt_spd(S) @ rng.standard_normal(n)
    elif system.init == "zero":
        x0 = np.zeros(n)
    else:
        x0 = system.x0.copy()
    noise = rng.standard_normal((T, n)) @ sqrt_spd(system.S_w).T
    states = kernels.ar_recursion(np.ascontiguousarray(system.theta),
                                  np.ascontiguousarray(x0), np.ascontiguousarray(noise))
    return Trajectory(states=states, seed=int(seed), system_digest=system.digest())


def _solve_normal_equations(cross, gram, T):
    n = gram.shape[0]
    lam = np.linalg.eigvalsh(gram)
    min_eig = float(lam[0])
    if min_eig <= GRAM_RTOL * max(float(np.trace(gram)) / n, np.finfo(float).tiny):
        raise SingularGram(f"Gram matrix is singular (min eigenvalue {min_eig:.3e})",
                           min_eigenvalue=min_eig)
    # theta_hat = cross gram^{-1}, gram symmetric
    theta_hat = solve_linear(gram, cross.T).T
    return LeastSquaresEstimate(theta_hat=theta_hat, gram=gram, T=T, gram_min_eig=min_eig)


def least_squares(data):
    """Least-squares estimate ``(sum x_t x_{t-1}^T)(sum x_{t-1} x_{t-1}^T)^{-1}``.

    ``data`` is a :class:`Trajectory`, a ``(T+1, n)`` state array, or a list of
    those; for a list the regression pairs of all trajectories are pooled.
    """
    items = data if isinstance(data, (list, tuple)) else [data]
    cross = gram = None
    T_total = 0
    for item in items:
        traj = item if isinstance(item, Trajectory) else Trajectory(item)
        c, g = kernels.lagged_moments(np.ascontiguousarray(traj.states),
                                      np.array([traj.T], dtype=np.int64))
        cross = c[0] if cross is None else cross + c[0]
        gram = g[0] if gram is None else gram + g[0]
        T_total += traj.T
    return _solve_normal_equations(cross, gram, T_total)


def least_squares_path(trajectory, horizons):
    """Estimates from the prefixes ``x_0..x_T`` for every ``T`` in ``horizons``
    (strictly increasing); one pass over the data."""
    horizons = np.asarray(horizons, dtype=np.int64)
    cross, gram = kernels.lagged_moments(np.ascontiguousarray(trajectory.states), horizons)
    return [_solve_normal_equations(cross[i], gram[i], int(T)) for i, T in enumerate(horizons)]


def normal_equation_residual(trajectory, theta_hat):
    """Relative size of ``sum (x_t - theta_hat x_{t-1}) x_{t-1}^T``."""
    X = trajectory.states
    lag, cur = X[:-1], X[1:]
    R = (cur - lag @ theta_hat.T).T @ lag
    scale = np.linalg.norm(cur.T @ lag) + np.finfo(float).tiny
    return float(np.linalg.norm(R) / scale)


def transformed_estimate(theta_hat, theta_true, T, a_T):
    """``sqrt(T / a_T) (theta_hat - theta_true) + theta_true``."""
    if not a_T > 0:
        raise ValueError("a_T must be positive")
    theta_hat = as_square(theta_hat, "theta_hat")
    theta_true = as_square(theta_true, "theta_true")
    return np.sqrt(T / a_T) * (theta_hat - theta_true) + theta_true


# -- trajectory text format --------------------------------------------------

def format_trajectory(traj):
    lines = [f"{traj.T} {traj.n} {traj.seed}"]
    lines.extend(" ".join(format(float(v), ".17g") for v in row) for row in traj.states)
    return "\n".join(lines) + "\n"


def parse_trajectory(text):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DimensionMismatch("trajectory text is empty")
    try:
        T, n, seed = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise DimensionMismatch(f"bad trajectory header {lines[0]!r}") from exc
    rows = [[float(tok) for tok in ln.split()] for ln in lines[1:]]
    if len(rows) != T + 1 or any(len(r) != n for r in rows):
        raise DimensionMismatch(f"expected {T + 1} rows of {n} values")
    return Trajectory(states=np.array(rows, dtype=float).reshape(T + 1, n), seed=seed)


def read_trajectory(path):
    with open(path, encoding="utf-8") as fh:
        return parse_trajectory(fh.read())


def write_trajectory(path, traj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_trajectory(traj))

"""Monte-Carlo experiments: spectral approximation, error rates and coverage.

Every trial draws from its own stream ``derive_seed(master_seed, ...)``, so the
output does not depend on the number of workers or on scheduling.
"""

import configparser
import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .densela import operator_norm, spectral_radius, stability_class
from .errors import DefectiveMatrix, OversamplingExhausted, RejectionCapExceeded
from .stabproj import clip_eigenvalues, reverse_i_projection
from .sysid import LinearSystem, derive_seed, least_squares, least_squares_path, simulate

SCHEMA_VERSION = 1
EXPERIMENTS = ("spectral", "rates", "coverage", "project-one")
A_RULES = ("sqrtT", "T^0.75")

# Example system with eigenvalues 0.9 and 0.95 +- 0.1i
Y_MATRIX = np.array([[0.95, 0.1, 1.0],
                     [-0.1, 0.95, 0.0],
                     [0.0, 0.0, 0.9]])

# stream tags keep the seed families of different experiment stages apart
_TAG_SPECTRAL, _TAG_SYSTEM, _TAG_TRAJ, _TAG_COVERAGE = 1, 2, 3, 4


def a_T_value(rule, T):
    if rule == "sqrtT":
        return math.sqrt(T)
    if rule == "T^0.75":
        return T ** 0.75
    raise ValueError(f"unknown a_T rule {rule!r}; choose from {A_RULES}")


@dataclass
class ExperimentConfig:
    experiment: str = "spectral"
    n: int = 1
    m: int = 1
    trials: int = 50
    systems: int = 20
    T: int | None = None
    T_max: int | None = None
    T_min: int | None = None
    grid_points: int = 8
    delta: float = 1e-9
    q_scale: float = 1.0
    radius_cap: float = 0.99
    master_seed: int = 0
    a_rule: str = "sqrtT"
    beta: float = 0.1
    theta: float = 0.5
    oversampling_cap: int = 100
    rejection_cap: int = 100_000
    scale_down: bool = False
    workers: int = 1
    output: str | None = None
    format: str = "csv"
    timings: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if self.trials < 0 or self.systems < 1 or self.n < 1 or self.m < 1:
            raise ValueError("trials must be >= 0; n, m and systems must be >= 1")
        if not self.delta > 0 or not self.q_scale > 0:
            raise ValueError("delta and q_scale must be positive")
        if not 0.0 < self.radius_cap < 1.0:
            raise ValueError("radius_cap must lie in (0, 1)")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        T_top = self.T_max or self.T or 2
        if a_T_value(self.a_rule, T_top) / T_top > 0.5 and T_top > 4:
            raise ValueError(f"a_T rule {self.a_rule} gives a_T/T > 0.5 at T={T_top}")

    @classmethod
    def from_mapping(cls, mapping):
        """Build from string-valued ``key = value`` pairs (config files, CLI)."""
        kinds = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            key = key.strip().replace("-", "_")
            if key not in kinds:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(kinds[key], raw)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path, **overrides):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[experiment]\n" + fh.read())
        mapping = dict(parser["experiment"])
        mapping.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(mapping)


def _coerce(kind, raw):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if text.lower() in ("none", ""):
        return None
    kind = str(kind)
    if "bool" in kind:
        return text.lower() in ("1", "true", "yes", "on")
    if "int" in kind:
        return int(float(text)) if "e" in text.lower() else int(text)
    if "float" in kind:
        return float(text)
    return text


@dataclass
class ExperimentRecord:
    trial_id: int
    system_id: int
    seed: int
    n: int
    T: int
    rho_true: float
    rho_ls: float
    rho_proj: float
    rho_clip: float
    err_ls: float
    err_proj: float
    err_clip: float
    rate_at_proj: float
    epsilon: float
    ls_was_stable: bool
    runtime_ls_ms: float = field(default=0.0, compare=False)
    runtime_proj_ms: float = field(default=0.0, compare=False)
    runtime_clip_ms: float = field(default=0.0, compare=False)


TIMING_COLUMNS = ("runtime_ls_ms", "runtime_proj_ms", "runtime_clip_ms")
RECORD_COLUMNS = tuple(f.name for f in fields(ExperimentRecord) if f.name not in TIMING_COLUMNS)


@dataclass
class CoverageSummary:
    T: int
    a_T: float
    beta: float
    trials: int
    nominal: float
    coverage: float
    coverage_literal: float
    eligible_fraction: float
    coverage_eligible: float
    passed: bool


# -- one trial ---------------------------------------------------------------

def _evaluate(theta_true, theta_hat, S_w, Q, delta, radius_cap):
    t0 = time.perf_counter()
    proj = reverse_i_projection(theta_hat, S_w, Q, delta)
    t1 = time.perf_counter()
    try:
        clipped = clip_eigenvalues(theta_hat, radius_cap)
        rho_clip = spectral_radius(clipped)
        err_clip = operator_norm(clipped - theta_true)
    except DefectiveMatrix:
        rho_clip = err_clip = math.nan
    t2 = time.perf_counter()
    values = dict(
        rho_true=spectral_radius(theta_true),
        rho_ls=spectral_radius(theta_hat),
        rho_proj=proj.spectral_radius_star,
        rho_clip=rho_clip,
        err_ls=operator_norm(theta_hat - theta_true),
        err_proj=operator_norm(proj.theta_star - theta_true),
        err_clip=err_clip,
        rate_at_proj=proj.rate_at_star,
        epsilon=proj.epsilon,
        ls_was_stable=proj.was_already_stable,
        runtime_proj_ms=1e3 * (t1 - t0),
        runtime_clip_ms=1e3 * (t2 - t1),
    )
    return values, proj


def _spectral_attempt(args):
    index, config = args
    m = config.m
    theta = np.kron(Y_MATRIX, np.eye(m))
    n = theta.shape[0]
    S_w = np.eye(n)
    T = config.T or int(round(25 * math.sqrt(m)))
    seed = derive_seed(config.master_seed, _TAG_SPECTRAL, index)
    traj = simulate(LinearSystem(theta, S_w), T, seed)
    t0 = time.perf_counter()
    theta_hat = least_squares(traj).theta_hat
    t_ls = 1e3 * (time.perf_counter() - t0)
    if stability_class(theta_hat) == "stable":
        return None
    values, _ = _evaluate(theta, theta_hat, S_w, config.q_scale * np.eye(n),
                          config.delta, config.radius_cap)
    return ExperimentRecord(trial_id=-1, system_id=0, seed=seed, n=n, T=T,
                            runtime_ls_ms=t_ls, **values)


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# -- experiments -------------------------------------------------------------

def run_spectral(config):
    """Trajectories of the (nearly unstable) ``Y kron I_m`` system whose
    least-squares estimate is unstable, with the projected and clipped
    estimates of each."""
    if config.trials == 0:
        return []
    cap = config.oversampling_cap * config.trials
    chunk = max(2 * config.trials, 16)
    accepted = []
    start = 0
    while len(accepted) < config.trials:
        if start >= cap:
            raise OversamplingExhausted(
                f"only {len(accepted)} of {config.trials} unstable estimates in {cap} attempts; "
                f"raise oversampling_cap or lower T")
        stop = min(start + chunk, cap)
        results = _map(_spectral_attempt, [(i, config) for i in range(start, stop)], config.workers)
        accepted.extend(r for r in results if r is not None)
        start = stop
    records = accepted[:config.trials]
    for i, rec in enumerate(records):
        rec.trial_id = i
    return records


def sample_stable_matrix(n, seed, rejection_cap=100_000, scale_down=False):
    """Standard normal ``n x n`` matrix conditioned on being stable.

    With ``scale_down`` an unstable draw is divided by ``1.05 rho`` instead of
    being rejected.
    """
    rng = np.random.default_rng(seed)
    for _ in range(rejection_cap):
        A = rng.standard_normal((n, n))
        rho = spectral_radius(A)
        if stability_class(rho=rho) == "stable":
            return A
        if scale_down:
            return A / (1.05 * rho)
    raise RejectionCapExceeded(
        f"no stable {n}x{n} normal matrix in {rejection_cap} draws; "
        f"use scale_down to rescale unstable draws instead")


def rates_grid(config):
    T_max = config.T_max or 100 * (config.n + 1)
    T_min = config.T_min or max(10, 2 * config.n)
    if T_min >= T_max:
        raise ValueError(f"T_min={T_min} must be below T_max={T_max}")
    grid = np.unique(np.round(np.geomspace(T_min, T_max, config.grid_points)).astype(np.int64))
    return grid


def _rates_trajectory(args):
    system_id, traj_id, theta, config = args
    n = config.n
    S_w = np.eye(n)
    Q = config.q_scale * np.eye(n)
    grid = rates_grid(config)
    seed = derive_seed(config.master_seed, _TAG_TRAJ, system_id, traj_id)
    traj = simulate(LinearSystem(theta, S_w), int(grid[-1]), seed)
    t0 = time.perf_counter()
    estimates = least_squares_path(traj, grid)
    t_ls = 1e3 * (time.perf_counter() - t0) / len(grid)
    out = []
    for est in estimates:
        values, _ = _evaluate(theta, est.theta_hat, S_w, Q, config.delta, config.radius_cap)
        out.append(ExperimentRecord(trial_id=system_id * config.trials + traj_id,
                                    system_id=system_id, seed=seed, n=n, T=est.T,
                                    runtime_ls_ms=t_ls, **values))
    return out


def run_rates(config):
    """Estimation error of least squares and its projection against ``T``
    for random stable systems."""
    if config.trials == 0:
        return []
    thetas = [sample_stable_matrix(config.n, derive_seed(config.master_seed, _TAG_SYSTEM, s),
                                   config.rejection_cap, config.scale_down)
              for s in range(config.systems)]
    jobs = [(s, j, thetas[s], config) for s in range(config.systems) for j in range(config.trials)]
    records = [rec for batch in _map(_rates_trajectory, jobs, config.workers) for rec in batch]
    records.sort(key=lambda r: (r.trial_id, r.T))
    return records


def summarize_by_T(records):
    """Per-horizon mean and range of the errors and projected radius."""
    rows = []
    for T in sorted({r.T for r in records}):
        sel = [r for r in records if r.T == T]
        ls = np.array([r.err_ls for r in sel])
        pj = np.array([r.err_proj for r in sel])
        rows.append(dict(T=T, count=len(sel),
                         mean_err_ls=float(ls.mean()), min_err_ls=float(ls.min()), max_err_ls=float(ls.max()),
                         mean_err_proj=float(pj.mean()), min_err_proj=float(pj.min()),
                         max_err_proj=float(pj.max()),
                         mean_rho_proj=float(np.mean([r.rho_proj for r in sel])),
                         mean_rho_true=float(np.mean([r.rho_true for r in sel]))))
    return rows


def loglog_slope(xs, ys):
    """Least-squares slope of ``log y`` against ``log x``."""
    slope, _ = np.polyfit(np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float)), 1)
    return float(slope)


def _coverage_trial(args):
    index, config, T = args
    theta = np.array([[config.theta]])
    S_w = np.eye(1)
    seed = derive_seed(config.master_seed, _TAG_COVERAGE, T, index)
    est = least_squares(simulate(LinearSystem(theta, S_w), T, seed))
    proj = reverse_i_projection(est.theta_hat, S_w, config.q_scale * np.eye(1), config.delta)
    return operator_norm(theta - proj.theta_star), proj.epsilon


def run_coverage(config, T=None):
    """Empirical frequency of ``||theta - P(theta_hat)||_2 <= eps (sqrt(a_T/T) + 1)``.

    Two radii are reported. ``coverage_literal`` uses ``eps`` as computed from
    the data, which is zero whenever the estimate is already stable.
    ``coverage`` uses ``max(eps, eps_beta)`` with
    ``eps_beta = sqrt(2 kappa log(1/beta) / a_T)``, the smallest ``eps`` for
    which the sample-size condition ``a_T >= 2 kappa log(1/beta) / eps^2``
    holds when its unknown ``o(a_T)`` term is dropped.
    """
    T = int(T or config.T or 500)
    a_T = a_T_value(config.a_rule, T)
    kappa = 1.0
    eps_beta = math.sqrt(2.0 * kappa * math.log(1.0 / config.beta) / a_T)
    scale = math.sqrt(a_T / T) + 1.0
    results = _map(_coverage_trial, [(i, config, T) for i in range(config.trials)], config.workers)
    if not results:
        nan = math.nan
        return CoverageSummary(T, a_T, config.beta, 0, 1 - config.beta, nan, nan, nan, nan, False)
    errs = np.array([r[0] for r in results])
    eps = np.array([r[1] for r in results])
    covered = errs <= np.maximum(eps, eps_beta) * scale
    covered_literal = errs <= eps * scale
    eligible = eps >= eps_beta
    cov = float(covered.mean())
    return CoverageSummary(
        T=T, a_T=a_T, beta=config.beta, trials=len(results), nominal=1.0 - config.beta,
        coverage=cov, coverage_literal=float(covered_literal.mean()),
        eligible_fraction=float(eligible.mean()),
        coverage_eligible=float(covered[eligible].mean()) if eligible.any() else math.nan,
        passed=cov >= 1.0 - config.beta - 0.05)


def run_experiment(config):
    if config.experiment == "spectral":
        return run_spectral(config)
    if config.experiment == "rates":
        return run_rates(config)
    if config.experiment == "coverage":
        return [run_coverage(config)]
    raise ValueError(f"experiment {config.experiment!r} is not a batch experiment")


# -- output ------------------------------------------------------------------

def _cell(value):
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(float(value), ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        if math.isnan(value) or math.isinf(value):
            return _cell(value)
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def _columns(rows, timings):
    if not rows:
        return None
    names = [f.name for f in fields(rows[0])]
    if not timings:
        names = [c for c in names if c not in TIMING_COLUMNS]
    return names


def render(rows, fmt="csv", timings=False, kind=ExperimentRecord):
    """Serialise records (or coverage summaries) to CSV or JSON text.

    Timing columns vary run to run and are left out unless ``timings``.
    """
    names = _columns(rows, timings)
    if names is None:
        names = [f.name for f in fields(kind)]
        if not timings:
            names = [c for c in names if c not in TIMING_COLUMNS]
    if fmt == "json":
        data = [{k: _json_value(v) for k, v in asdict(r).items() if k in names} for r in rows]
        return json.dumps(data, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for r in rows:
        d = asdict(r)
        writer.writerow([_cell(d[c]) for c in names])
    return buf.getvalue()

"""Convergence-rate experiments: error decomposition and log-log slopes.

For each sample size in a grid, many independent datasets are fitted; the
aligned estimation error is split by the stabilizer projector into a fast
component (projector range) and a slow component (null space), and the
per-n quantiles of each are regressed on log n.  The fast component is
expected near slope -1/2 and the slow one near -1/4.

Trials are embarrassingly parallel.  Every (n, trial) pair owns a derived
random stream, so results are byte-identical for a fixed master seed no
matter how many workers run the queue.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import spearmanr

from .errors import ConfigInvalidError, SingularFisherError
from .fisher import fisher_mc
from .groups import FiniteIsometryGroup, group_from_config
from .mle import FitConfig, align, fit
from .model import MixtureModel, orbit_distance, sample
from .randomness import stream
from .stabilizer import StabilizerReport, decompose, stabilizer
from .version import version_string

__all__ = [
    "RateConfig",
    "RateResult",
    "ConsistencyReport",
    "NormalityReport",
    "run",
    "consistency_curve",
    "normality_probe",
    "save_records_csv",
    "save_summary_json",
    "default_workers",
]

CSV_HEADER = "n,trial,e_fast,e_slow,rho,loglik"

# Stream path tags; task data streams are (n, trial) and fit streams
# (n, trial, 1), so n = 0 is reserved for auxiliary draws.
_FISHER_PATH = (0, 0, 2)


@dataclass(frozen=True)
class RateConfig:
    group: dict
    theta_star: tuple
    n_grid: tuple
    trials: int
    mle: FitConfig
    master_seed: int
    quantile: float = 0.5
    sigma: float = 1.0

    def validate(self) -> None:
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) < 4 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigInvalidError("n_grid must be strictly increasing with length >= 4")
        if min(grid) < 1:
            raise ConfigInvalidError("sample sizes must be positive")
        if self.trials < 50:
            raise ConfigInvalidError("trials must be >= 50")
        if not (0.0 < self.quantile < 1.0):
            raise ConfigInvalidError("quantile must be in (0, 1)")
        if self.sigma <= 0:
            raise ConfigInvalidError("sigma must be positive")

    def to_json_dict(self) -> dict:
        return {
            "group": self.group,
            "theta_star": [float(x) for x in self.theta_star],
            "n_grid": [int(n) for n in self.n_grid],
            "trials": self.trials,
            "mle": asdict(self.mle),
            "master_seed": self.master_seed,
            "quantile": self.quantile,
            "sigma": self.sigma,
        }


@dataclass
class RateResult:
    config: dict
    records: np.ndarray  # columns: n, trial, e_fast, e_slow, rho, loglik
    per_n: dict
    slope_fast: float | None
    slope_fast_se: float | None
    slope_slow: float | None
    slope_slow_se: float | None
    fitted_fast: bool
    fitted_slow: bool
    version: str = field(default_factory=version_string)

    def rho_quantiles(self) -> list[float]:
        return [self.per_n[n]["rho"] for n in sorted(self.per_n)]

    def quantile_curve(self, column: str, quantile: float) -> list[float]:
        """Per-n quantiles recomputed from the raw records.

        ``column`` is one of e_fast, e_slow, rho; any quantile can be read
        off without rerunning the experiment.
        """
        col = {"e_fast": 2, "e_slow": 3, "rho": 4}[column]
        out = []
        for n in sorted(self.per_n):
            mask = self.records[:, 0] == n
            out.append(float(np.quantile(self.records[mask, col], quantile)))
        return out


@dataclass
class ConsistencyReport:
    n_grid: list
    rho_quantiles: list
    spearman: float
    decreasing: bool
    passed: bool
    quantile: float


@dataclass
class NormalityReport:
    n: int
    trials: int
    covariance: np.ndarray
    target: np.ndarray
    frobenius_rel_dev: float
    coverage: list[float]

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "covariance": [float(x) for x in self.covariance.ravel()],
            "target": [float(x) for x in self.target.ravel()],
            "frobenius_rel_dev": self.frobenius_rel_dev,
            "coverage": self.coverage,
        }


def default_workers() -> int:
    env = os.environ.get("MRA_LAB_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# Per-process state for the worker pool, built once per worker.
_STATE: dict = {}


def _build_state(payload: dict) -> dict:
    group = group_from_config(payload["group"])
    theta_star = np.asarray(payload["theta_star"], dtype=np.float64)
    report = stabilizer(group, theta_star)
    model = MixtureModel(group, theta_star, payload["sigma"])
    return {
        "group": group,
        "theta_star": theta_star,
        "report": report,
        "model": model,
        "mle": FitConfig(**payload["mle"]),
        "master_seed": payload["master_seed"],
        "sigma": payload["sigma"],
    }


def _init_worker(payload: dict) -> None:
    _STATE["rates"] = _build_state(payload)


def _trial_record(state: dict, n: int, trial: int) -> tuple:
    seed = state["master_seed"]
    data = sample(
        state["model"],
        n,
        stream(seed, n, trial),
        provenance={"master_seed": seed, "stream": [n, trial]},
    )
    result = fit(state["group"], data, state["mle"], stream(seed, n, trial, 1), state["sigma"])
    _, aligned = align(state["group"], result.theta_hat, state["theta_star"])
    v, w = decompose(aligned - state["theta_star"], state["report"])
    rho, _ = orbit_distance(state["group"], result.theta_hat, state["theta_star"])
    return (
        float(n),
        float(trial),
        float(np.linalg.norm(v)),
        float(np.linalg.norm(w)),
        rho,
        result.loglik,
    )


def _pool_task(task: tuple) -> tuple:
    return _trial_record(_STATE["rates"], *task)


def _ols_slope(x: np.ndarray, y: np.ndarray):
    """Least-squares slope of y on x with its standard error."""
    xc = x - x.mean()
    slope = float((xc @ y) / (xc @ xc))
    resid = y - y.mean() - slope * xc
    dof = len(x) - 2
    se = float(np.sqrt((resid @ resid) / dof / (xc @ xc))) if dof > 0 else float("nan")
    return slope, se


def run(config: RateConfig, workers: int | None = None) -> RateResult:
    """Execute the full grid of (n, trial) fits and fit both rate slopes."""
    config.validate()
    payload = config.to_json_dict()
    state = _build_state(payload)
    tasks = [(int(n), t) for n in config.n_grid for t in range(config.trials)]

    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1:
        rows = [_trial_record(state, *task) for task in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(payload,)
        ) as pool:
            rows = list(pool.map(_pool_task, tasks, chunksize=chunk))
    records = np.asarray(rows)

    rank = state["report"].projector_rank
    d = state["group"].dim
    fitted_fast = rank > 0
    fitted_slow = rank < d

    per_n = {}
    for n in config.n_grid:
        mask = records[:, 0] == n
        per_n[int(n)] = {
            "e_fast": float(np.quantile(records[mask, 2], config.quantile)),
            "e_slow": float(np.quantile(records[mask, 3], config.quantile)),
            "rho": float(np.quantile(records[mask, 4], config.quantile)),
        }

    log_n = np.log(np.asarray(config.n_grid, dtype=np.float64))
    slope_fast = slope_fast_se = slope_slow = slope_slow_se = None
    if fitted_fast:
        q = np.asarray([per_n[int(n)]["e_fast"] for n in config.n_grid])
        slope_fast, slope_fast_se = _ols_slope(log_n, np.log(q))
    if fitted_slow:
        q = np.asarray([per_n[int(n)]["e_slow"] for n in config.n_grid])
        slope_slow, slope_slow_se = _ols_slope(log_n, np.log(q))

    return RateResult(
        config=payload,
        records=records,
        per_n=per_n,
        slope_fast=slope_fast,
        slope_fast_se=slope_fast_se,
        slope_slow=slope_slow,
        slope_slow_se=slope_slow_se,
        fitted_fast=fitted_fast,
        fitted_slow=fitted_slow,
    )


def consistency_curve(
    config: RateConfig,
    workers: int | None = None,
    result: RateResult | None = None,
    quantile: float | None = None,
) -> ConsistencyReport:
    """Per-n quantiles of the orbit distance, with the downward-trend verdict.

    ``quantile`` overrides the experiment's aggregation quantile (the curve
    is recomputed from the raw records), defaulting to the config's value.
    """
    if result is None:
        result = run(config, workers=workers)
    q = result.config["quantile"] if quantile is None else quantile
    ns = sorted(result.per_n)
    qs = result.quantile_curve("rho", q)
    rho_corr = float(spearmanr(ns, qs).statistic)
    decreasing = qs[-1] < qs[0]
    return ConsistencyReport(
        n_grid=ns,
        rho_quantiles=qs,
        spearman=rho_corr,
        decreasing=decreasing,
        passed=decreasing and rho_corr <= -0.8,
        quantile=q,
    )


def normality_probe(
    group: FiniteIsometryGroup,
    theta_star,
    n: int,
    trials: int,
    mle_config: FitConfig,
    master_seed: int,
    n_mc_fisher: int = 200000,
    sigma: float = 1.0,
) -> NormalityReport:
    """Covariance of sqrt(n) times the aligned error against the inverse Fisher.

    Requires an invertible Fisher information, i.e. a trivial stabilizer;
    raises ``SingularFisherError`` otherwise.
    """
    if trials < 2:
        raise ConfigInvalidError("trials must be >= 2")
    theta_star = np.asarray(theta_star, dtype=np.float64)
    report = stabilizer(group, theta_star)
    if len(report.members) > 1:
        raise SingularFisherError("theta_star has a nontrivial stabilizer")
    model = MixtureModel(group, theta_star, sigma)
    info = fisher_mc(model, n_mc_fisher, stream(master_seed, *_FISHER_PATH))
    if info.null_basis.shape[1] > 0:
        raise SingularFisherError("estimated Fisher information is numerically singular")
    target = np.linalg.inv(info.matrix)

    errors = np.empty((trials, group.dim))
    covered = np.zeros(group.dim)
    half_width = 1.96 * np.sqrt(np.diag(target) / n)
    for trial in range(trials):
        data = sample(model, n, stream(master_seed, n, trial))
        result = fit(group, data, mle_config, stream(master_seed, n, trial, 1), sigma)
        _, aligned = align(group, result.theta_hat, theta_star)
        errors[trial] = np.sqrt(n) * (aligned - theta_star)
        covered += (np.abs(aligned - theta_star) <= half_width).astype(float)

    centered = errors - errors.mean(axis=0)
    cov = centered.T @ centered / (trials - 1)
    frob = float(np.linalg.norm(cov - target) / np.linalg.norm(target))
    return NormalityReport(
        n=n,
        trials=trials,
        covariance=cov,
        target=target,
        frobenius_rel_dev=frob,
        coverage=[float(c / trials) for c in covered],
    )


def save_records_csv(result: RateResult, path) -> None:
    """Per-trial records; integer columns plain, floats at 17 significant digits."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in result.records:
            fh.write(
                f"{int(row[0])},{int(row[1])},"
                + ",".join(f"{x:.17g}" for x in row[2:])
                + "\n"
            )


def save_summary_json(result: RateResult, path) -> None:
    import json

    doc = {
        "config": result.config,
        "version": result.version,
        "per_n": {str(n): result.per_n[n] for n in sorted(result.per_n)},
        "slopes": {
            "fast": {
                "fitted": result.fitted_fast,
                "slope": result.slope_fast,
                "se": result.slope_fast_se,
            },
            "slow": {
                "fitted": result.fitted_slow,
                "slope": result.slope_slow,
                "se": result.slope_slow_se,
            },
        },
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

"""Monte Carlo harness: RMSE and relative execution time per strategy.

Each run simulates one trajectory and smooths it with every configured
strategy. Runs are independent, so they may execute in a process pool; the
per-run results are always reduced in run order, which keeps every RMSE value
identical between serial and parallel execution.

The worker count comes from the ``workers`` argument, else the
``POLYSMOOTH_WORKERS`` environment variable, else ``os.cpu_count()``.
"""

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import format_config
from .exceptions import NumericalError, PolysmoothError
from .linalg import GaussianBelief
from .models import simulate
from .smoother import smooth
from .strategies import get_strategy

log = logging.getLogger(__name__)

WORKERS_ENV = "POLYSMOOTH_WORKERS"
DIVERGENCE_EIGENVALUE = 1e12
BASELINE = "ekf"


def run_seed(master_seed, run):
    """Per-run simulation seed, a pure function of ``(master_seed, run)``."""
    state = np.random.SeedSequence([int(master_seed), int(run)]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def _diverged(result):
    for means, covs in (
        (result.filtered_means, result.filtered_covariances),
        (result.smoothed_means, result.smoothed_covariances),
    ):
        if not (np.isfinite(means).all() and np.isfinite(covs).all()):
            return True
        if np.linalg.eigvalsh(covs).max() > DIVERGENCE_EIGENVALUE:
            return True
    return False


@dataclass(frozen=True, eq=False)
class RunOutcome:
    """Squared errors and phase times of one strategy on one run (``None`` if diverged)."""

    filter_sq: np.ndarray
    smoother_sq: np.ndarray
    forward_seconds: float
    backward_seconds: float


def _run_one(config, model, run):
    traj = simulate(model, config.true_initial_state, config.steps, run_seed(config.seed, run))
    init = GaussianBelief(config.initial_mean, config.initial_covariance)
    outcomes = {}
    for name in config.strategies:
        strategy = get_strategy(name, **config.strategy_options(name))
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                result = smooth(model, traj.measurements, init, strategy)
        except NumericalError as exc:
            log.debug("run %d, %s diverged: %s", run, name, exc)
            outcomes[name] = None
            continue
        if _diverged(result):
            outcomes[name] = None
            continue
        outcomes[name] = RunOutcome(
            (result.filtered_means - traj.states) ** 2,
            (result.smoothed_means - traj.states) ** 2,
            result.forward_seconds,
            result.backward_seconds,
        )
    return outcomes


_worker_state = {}


def _init_worker(config):
    _worker_state["config"] = config
    _worker_state["model"] = config.model.build()


def _worker_run(run):
    return _run_one(_worker_state["config"], _worker_state["model"], run)


def _worker_count(workers, runs):
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(int(workers), runs))


@dataclass(frozen=True, eq=False)
class RmseReport:
    """Aggregated Monte Carlo statistics.

    ``filter_rmse[m]`` and ``smoother_rmse[m]`` have shape ``(T, n)``;
    averages are the time-mean of those per-step values. A method whose every
    run diverged has NaN entries.
    """

    config: object
    methods: tuple
    filter_rmse: dict
    smoother_rmse: dict
    filter_average: dict
    smoother_average: dict
    filter_ret: dict
    smoother_ret: dict
    diverged: dict
    forward_seconds: dict
    backward_seconds: dict


def run_experiment(config, workers=None):
    """Run ``config.runs`` Monte Carlo runs for every configured strategy."""
    model = config.validate()
    n, T = model.state_dim, config.steps
    methods = tuple(config.strategies)
    sums = {m: [np.zeros((T, n)), np.zeros((T, n))] for m in methods}
    counts = dict.fromkeys(methods, 0)
    fwd = dict.fromkeys(methods, 0.0)
    bwd = dict.fromkeys(methods, 0.0)

    workers = _worker_count(workers, config.runs)
    runs = range(config.runs)
    if workers == 1:
        outcomes = (_run_one(config, model, r) for r in runs)
        pool = None
    else:
        pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(config,))
        outcomes = pool.map(_worker_run, runs, chunksize=max(1, config.runs // (4 * workers)))
    try:
        for per_method in outcomes:
            for m, out in per_method.items():
                if out is None:
                    continue
                sums[m][0] += out.filter_sq
                sums[m][1] += out.smoother_sq
                counts[m] += 1
                fwd[m] += out.forward_seconds
                bwd[m] += out.backward_seconds
    finally:
        if pool is not None:
            pool.shutdown()

    filt, smo, filt_avg, smo_avg = {}, {}, {}, {}
    for m in methods:
        if counts[m] == 0:
            log.warning("every run diverged for strategy %s; reporting it as absent", m)
            filt[m] = smo[m] = np.full((T, n), np.nan)
        else:
            filt[m] = np.sqrt(sums[m][0] / counts[m])
            smo[m] = np.sqrt(sums[m][1] / counts[m])
        filt_avg[m] = filt[m].mean(axis=0)
        smo_avg[m] = smo[m].mean(axis=0)

    base = fwd.get(BASELINE, 0.0) if counts.get(BASELINE) else 0.0
    filt_ret = {m: fwd[m] / base if base > 0 and counts[m] else np.nan for m in methods}
    smo_ret = {m: (fwd[m] + bwd[m]) / base if base > 0 and counts[m] else np.nan for m in methods}
    if BASELINE in methods and counts[BASELINE]:
        filt_ret[BASELINE] = 1.0
    diverged = {m: config.runs - counts[m] for m in methods}
    return RmseReport(config, methods, filt, smo, filt_avg, smo_avg, filt_ret, smo_ret, diverged, fwd, bwd)


def _g(x):
    return format(float(x), ".17g")


def _state_header(n):
    return [f"state{i}" for i in range(1, n + 1)]


def write_reports(report, directory):
    """Write ``rmse_filter.csv``, ``rmse_smoother.csv``, ``summary.csv`` and ``config_echo``.

    Returns the list of written paths.
    """
    directory = Path(directory)
    n = report.config.true_initial_state.size
    try:
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for kind, table in (("filter", report.filter_rmse), ("smoother", report.smoother_rmse)):
            path = directory / f"rmse_{kind}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\r\n")
                w.writerow(["step", "method", "state_index", "rmse"])
                for m in report.methods:
                    if report.diverged[m] == report.config.runs:
                        continue
                    for k, row in enumerate(table[m], start=1):
                        for i, v in enumerate(row, start=1):
                            w.writerow([k, m, i, _g(v)])
            paths.append(path)
        path = directory / "summary.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["method", "kind", *_state_header(n), "ret", "diverged"])
            for m in report.methods:
                for kind, avg, ret in (
                    ("filter", report.filter_average, report.filter_ret),
                    ("smoother", report.smoother_average, report.smoother_ret),
                ):
                    w.writerow([m, kind, *(_g(v) for v in avg[m]), _g(ret[m]), report.diverged[m]])
        paths.append(path)
        path = directory / "config_echo"
        path.write_text(format_config(report.config))
        paths.append(path)
    except OSError as exc:
        raise PolysmoothError(f"cannot write reports to {exc.filename or directory}: {exc.strerror}") from exc
    return paths


def read_summary(path):
    """Parse ``summary.csv`` into ``{(method, kind): (averages, ret, diverged)}``."""
    out = {}
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = len(header) - 4
        for row in reader:
            avg = np.array([float(v) for v in row[2 : 2 + n]])
            out[(row[0], row[1])] = (avg, float(row[2 + n]), int(row[3 + n]))
    return out

"""Error metrics with permutation alignment plus the experiment suites.

Recovered networks carry an arbitrary hidden-unit permutation and
per-unit positive rescaling, so raw matrix distances are meaningless.
The scorer normalizes rows of W and columns of A for both learned and
ground-truth parameters, finds the single optimal assignment on the
combined pairwise squared distances, and reports summed squared
distances for W and A under that one shared permutation.

Three experiment suites mirror the desk-scale studies: sample
efficiency over a grid of n, robustness over a grid of label-noise
levels, and robustness over a grid of condition numbers for W or A.
Each emits deterministic CSV rows (plus a per-grid-point summary file
with normalized errors) and optionally an SVG plot.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigurationError, ShapeError
from .learner import LearnOptions, RecoveryResult, learn_two_layer
from .model import (DistributionSpec, NetworkParams, SampleSet,
                    StandardGaussian, SymmetricMixture,
                    condition_controlled_matrix, generate_samples,
                    random_orthonormal, rng_from)

EXPERIMENTS = ("sample_efficiency", "noise", "conditioning")
CSV_FIELDS = ("experiment", "d", "k", "l", "grid_value", "trial",
              "W_err", "A_err", "mse", "runtime_seconds", "status")
SUMMARY_FIELDS = ("experiment", "d", "k", "l", "grid_value", "trials_ok",
                  "W_err", "A_err", "mse", "W_err_norm", "A_err_norm")


def _normalize_rows(M):
    norms = np.linalg.norm(M, axis=1)
    if np.any(norms == 0):
        raise ShapeError("cannot normalize a zero row")
    return M / norms[:, None]


def align_and_score(learned, truth: NetworkParams) -> tuple[float, float]:
    """Squared recovery errors of (W, A) after the optimal unit matching.

    `learned` is a RecoveryResult or any object with V and A_hat.  Both
    parameter sets are normalized (rows of W, columns of A) first, which
    also makes the score invariant to the per-unit scale freedom of the
    ReLU network.
    """
    V = learned.V if hasattr(learned, "V") else learned[0]
    A_hat = learned.A_hat if hasattr(learned, "A_hat") else learned[1]
    if V.shape != truth.W.shape or A_hat.shape != truth.A.shape:
        raise ShapeError("learned and truth dimensions differ")
    Wl, Wt = _normalize_rows(V), _normalize_rows(truth.W)
    Al, At = _normalize_rows(A_hat.T), _normalize_rows(truth.A.T)
    cost_W = ((Wl[:, None, :] - Wt[None, :, :]) ** 2).sum(axis=2)
    cost_A = ((Al[:, None, :] - At[None, :, :]) ** 2).sum(axis=2)
    rows, cols = linear_sum_assignment(cost_W + cost_A)
    return (float(cost_W[rows, cols].sum()), float(cost_A[rows, cols].sum()))


def mse(result: RecoveryResult, test: SampleSet) -> float:
    """Mean squared residual against the observed labels, averaged over
    samples and output units."""
    resid = result.predict(test.X) - test.Y
    return float(np.mean(resid * resid))


@dataclass
class ExperimentConfig:
    experiment: str
    d: int
    k: int
    l: int | None = None
    grid: tuple = ()
    trials: int = 5
    n: int = 10_000
    noise_sigma: float = 0.0
    distribution: DistributionSpec | None = None
    conditioned: str = "W"           # conditioning experiment target
    options: LearnOptions = field(default_factory=LearnOptions)
    seed: int = 0
    test_n: int = 10_000
    mse_against: str = "noisy"       # or "clean"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}")
        if len(self.grid) == 0:
            raise ConfigurationError("grid must be non-empty")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.l is None:
            self.l = self.k
        if self.mse_against not in ("noisy", "clean"):
            raise ConfigurationError("mse_against must be 'noisy' or 'clean'")
        if self.conditioned not in ("W", "A"):
            raise ConfigurationError("conditioned must be 'W' or 'A'")


@dataclass
class MetricsRow:
    experiment: str
    d: int
    k: int
    l: int
    grid_value: float
    trial: int
    W_err: float
    A_err: float
    mse: float
    runtime_seconds: float
    status: str = "ok"

    def as_csv(self):
        return [self.experiment, self.d, self.k, self.l, self.grid_value,
                self.trial, self.W_err, self.A_err, self.mse,
                self.runtime_seconds, self.status]


def default_mixture(d: int, mean_scale: float = 1.0) -> SymmetricMixture:
    """Two unit-covariance Gaussians based at +-mean_scale * (1, ..., 1).

    mean_scale = 1 is the all-ones mixture of the noise study; the
    conditioning study uses mean_scale = 1/sqrt(d), which keeps the
    component mean at unit norm so fourth-moment estimates stay
    well-behaved at moderate sample sizes.
    """
    return SymmetricMixture(d, ((1.0, mean_scale * np.ones(d), np.eye(d)),))


def _make_instance(config: ExperimentConfig, grid_value, trial: int):
    """Ground truth, sample size, and noise level for one trial."""
    rng = rng_from(config.seed, config.experiment, str(grid_value),
                   str(trial), "instance")
    inst_seed = int(rng.integers(0, 2**63))
    d, k, l = config.d, config.k, config.l
    n, sigma = config.n, config.noise_sigma
    W = random_orthonormal(k, d, rng_from(inst_seed, "W"))
    A = random_orthonormal(l, k, rng_from(inst_seed, "A"))
    if config.experiment == "sample_efficiency":
        n = int(grid_value)
    elif config.experiment == "noise":
        sigma = float(grid_value)
    elif config.experiment == "conditioning":
        target = condition_controlled_matrix(k, float(grid_value),
                                             rng_from(inst_seed, "cond")
                                             .integers(0, 2**63))
        if config.conditioned == "W":
            if k != d:
                raise ConfigurationError("conditioning needs k == d")
            W = target
        else:
            if k != l:
                raise ConfigurationError("conditioning A needs k == l")
            A = target
    return NetworkParams(W, A, sigma), n, inst_seed


def run_trial(config: ExperimentConfig, grid_value, trial: int) -> MetricsRow:
    params, n, inst_seed = _make_instance(config, grid_value, trial)
    spec = config.distribution or StandardGaussian(config.d)
    start = time.perf_counter()
    train = generate_samples(params, spec, n, rng_from(inst_seed, "train")
                             .integers(0, 2**63))
    result = learn_two_layer(train, config.k, config.options,
                             seed=int(rng_from(inst_seed, "algo")
                                      .integers(0, 2**63)))
    test_params = params if config.mse_against == "noisy" else \
        NetworkParams(params.W, params.A, 0.0)
    test = generate_samples(test_params, spec, config.test_n,
                            rng_from(inst_seed, "test").integers(0, 2**63))
    W_err, A_err = align_and_score(result, params)
    err = mse(result, test)
    return MetricsRow(config.experiment, config.d, config.k, config.l,
                      float(grid_value), trial, W_err, A_err, err,
                      time.perf_counter() - start)


def run_experiment(config: ExperimentConfig, out_dir=None,
                   plot: bool = False) -> list[MetricsRow]:
    """Grid x trials sweep; failures become rows tagged with the error
    class so a sweep never dies half way."""
    rows = []
    for grid_value in config.grid:
        for trial in range(config.trials):
            try:
                rows.append(run_trial(config, grid_value, trial))
            except Exception as exc:  # noqa: BLE001 - recorded, run continues
                rows.append(MetricsRow(
                    config.experiment, config.d, config.k, config.l,
                    float(grid_value), trial, np.nan, np.nan, np.nan, np.nan,
                    status=f"error:{type(exc).__name__}"))
    if out_dir is not None:
        write_rows(rows, Path(out_dir) / f"{config.experiment}.csv")
        write_summary(config, rows,
                      Path(out_dir) / f"{config.experiment}_summary.csv")
        if plot:
            plot_experiment(config, rows,
                            Path(out_dir) / f"{config.experiment}.svg")
    return rows


def summarize(config: ExperimentConfig, rows: list[MetricsRow]):
    """Per-grid-point means over successful trials, raw and normalized
    (sqrt of error over the unit count, comparable across dimensions)."""
    out = []
    for grid_value in config.grid:
        ok = [r for r in rows
              if r.grid_value == float(grid_value) and r.status == "ok"]
        if not ok:
            out.append((config.experiment, config.d, config.k, config.l,
                        float(grid_value), 0, np.nan, np.nan, np.nan,
                        np.nan, np.nan))
            continue
        W_err = float(np.mean([r.W_err for r in ok]))
        A_err = float(np.mean([r.A_err for r in ok]))
        err = float(np.mean([r.mse for r in ok]))
        out.append((config.experiment, config.d, config.k, config.l,
                    float(grid_value), len(ok), W_err, A_err, err,
                    float(np.sqrt(W_err / config.k)),
                    float(np.sqrt(A_err / config.k))))
    return out


def write_rows(rows: list[MetricsRow], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for row in rows:
            writer.writerow(row.as_csv())


def write_summary(config: ExperimentConfig, rows: list[MetricsRow], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        for row in summarize(config, rows):
            writer.writerow(row)


def plot_experiment(config: ExperimentConfig, rows: list[MetricsRow], path) -> None:
    """One SVG: each metric against the grid value, mean with min-max band."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    metrics = ("W_err", "A_err", "mse")
    grid = [float(g) for g in config.grid]
    for ax, metric in zip(axes, metrics):
        means, lows, highs = [], [], []
        for g in grid:
            vals = [getattr(r, metric) for r in rows
                    if r.grid_value == g and r.status == "ok"]
            vals = vals or [np.nan]
            means.append(np.mean(vals))
            lows.append(np.min(vals))
            highs.append(np.max(vals))
        ax.plot(grid, means, marker="o")
        ax.fill_between(grid, lows, highs, alpha=0.25)
        ax.set_xlabel(_grid_label(config.experiment))
        ax.set_ylabel(metric)
        if config.experiment == "sample_efficiency":
            ax.set_xscale("log")
    fig.suptitle(config.experiment)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _grid_label(experiment: str) -> str:
    return {"sample_efficiency": "training samples",
            "noise": "label noise sigma",
            "conditioning": "condition number"}[experiment]

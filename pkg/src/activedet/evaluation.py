"""Monte Carlo evaluation of the detectors.

The protocol: draw independent scenario realizations, run each requested
estimator on the same realizations (common random numbers, so estimator
comparisons are paired), threshold the relaxed activity estimates on a
shared grid, pick the error-minimizing threshold per estimator, and report
the activity error probability

    P_err = (missed + false alarms) / (devices * realizations)

over in-cell devices. Realization ``r`` of a sweep always uses the stream
``SeedSequence(seed, spawn_key=(r,))`` regardless of the swept value, the
estimator set, or the worker count, so results are reproducible and
comparisons across swept values are paired as well.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractViolationError
from .priors import gaussian_prior_moments
from .scenario import ScenarioConfig, draw_realization, realization_rng
from .solvers import SolverOptions, run_baseline_ml, run_map, run_ml
from .validation import as_float_vector, check_positive

ESTIMATORS = ("joint-ml", "joint-map", "baseline-ml")

#: Swept-parameter names accepted by :func:`run_experiment`.
SWEEPABLE = ("interferer_density", "pilot_length", "n_antennas")


def default_threshold_grid() -> np.ndarray:
    """The grid {0.01, 0.02, ..., 3.00}."""
    return np.arange(1, 301) / 100.0


def threshold_detect(activity, threshold: float) -> np.ndarray:
    """Binary decisions ``activity >= threshold`` as an int8 array."""
    a = as_float_vector(activity, name="activity")
    check_positive(threshold, "threshold")
    return (a >= threshold).astype(np.int8)


@dataclass
class DetectionOutcome:
    """Decisions against truth for one realization."""

    decisions: np.ndarray
    truth: np.ndarray

    def __post_init__(self) -> None:
        self.decisions = np.asarray(self.decisions)
        self.truth = np.asarray(self.truth)
        if self.decisions.shape != self.truth.shape or self.decisions.ndim != 1:
            raise ContractViolationError(
                f"decisions {self.decisions.shape} and truth {self.truth.shape} "
                "must be 1-D and matched"
            )

    @property
    def errors(self) -> int:
        return int(np.count_nonzero(self.decisions != self.truth))

    @property
    def n_devices(self) -> int:
        return int(self.truth.shape[0])


def error_probability(outcomes) -> float:
    """Total errors over total decisions, pooled across realizations."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ContractViolationError("error_probability needs at least one outcome")
    errors = sum(o.errors for o in outcomes)
    total = sum(o.n_devices for o in outcomes)
    return errors / total


def best_threshold(activities, truths, grid=None) -> tuple[float, float]:
    """Error-minimizing threshold over pooled realizations.

    ``activities`` and ``truths`` are matched sequences of per-realization
    arrays. Returns ``(threshold, error_probability)``; ties resolve to the
    smallest threshold.
    """
    grid = default_threshold_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ContractViolationError("threshold grid must be a nonempty 1-D array")
    if np.any(np.diff(grid) <= 0) or grid[0] <= 0:
        raise ContractViolationError("threshold grid must be positive and strictly increasing")
    activities = list(activities)
    truths = list(truths)
    if len(activities) != len(truths) or not activities:
        raise ContractViolationError("need matched, nonempty activity and truth sequences")

    errors = np.zeros(grid.size, dtype=np.int64)
    total = 0
    for a, truth in zip(activities, truths):
        a = np.asarray(a, dtype=np.float64)
        truth = np.asarray(truth)
        decisions = a[:, None] >= grid[None, :]
        errors += np.count_nonzero(decisions != (truth[:, None] != 0), axis=0)
        total += truth.shape[0]
    rates = errors / total
    k = int(np.argmin(rates))
    return float(grid[k]), float(rates[k])


@dataclass
class SweepCell:
    """One (swept value, estimator) aggregate."""

    parameter: str
    value: float
    estimator: str
    threshold: float
    error_prob: float
    n_realizations: int
    realization_errors: np.ndarray


@dataclass
class SweepResult:
    """All cells of one sweep plus the protocol constants behind them."""

    parameter: str
    values: tuple
    estimators: tuple
    n_realizations: int
    seed: int
    cells: list

    def cell(self, value, estimator: str) -> SweepCell:
        for c in self.cells:
            if c.estimator == estimator and c.value == value:
                return c
        raise KeyError(f"no cell for value {value!r}, estimator {estimator!r}")

    def to_csv(self, path) -> None:
        """One row per cell; stable order (values outer, estimators inner)."""
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["parameter", "value", "estimator", "threshold",
                 "error_prob", "n_realizations", "seed"]
            )
            for c in self.cells:
                writer.writerow(
                    [c.parameter, repr(c.value), c.estimator, repr(c.threshold),
                     repr(c.error_prob), c.n_realizations, self.seed]
                )

    def to_json(self, path) -> None:
        payload = {
            "parameter": self.parameter,
            "values": list(self.values),
            "estimators": list(self.estimators),
            "n_realizations": self.n_realizations,
            "seed": self.seed,
            "cells": [
                {
                    "parameter": c.parameter,
                    "value": c.value,
                    "estimator": c.estimator,
                    "threshold": c.threshold,
                    "error_prob": c.error_prob,
                    "n_realizations": c.n_realizations,
                    "realization_errors": c.realization_errors.tolist(),
                }
                for c in self.cells
            ],
        }
        with open(path, "w") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")


def _simulate_point(args) -> tuple:
    """Worker: one realization, all requested estimators (picklable)."""
    config, estimators, options, seed, index = args
    rng = realization_rng(seed, index)
    realization = draw_realization(config, rng)
    network = realization.network
    sample_cov = realization.sample_cov
    pilots = realization.pilots.in_cell
    estimates = {}
    for name in estimators:
        if name == "joint-ml":
            result = run_ml(sample_cov, pilots, network.pathloss, config.noise_var, options)
        elif name == "baseline-ml":
            result = run_baseline_ml(
                sample_cov, pilots, network.pathloss, config.noise_var, options
            )
        elif name == "joint-map":
            prior = gaussian_prior_moments(
                config.interferer_density,
                config.activity_prob,
                config.cell_radius,
                config.pathloss_exponent,
            )
            result = run_map(
                sample_cov, pilots, network.pathloss, config.noise_var,
                prior, config.activity_prob, config.n_antennas, options,
            )
        else:
            raise ContractViolationError(f"unknown estimator {name!r}")
        estimates[name] = result.activity
    return network.activity, estimates


def run_experiment(
    config: ScenarioConfig,
    swept_parameter: str,
    values,
    estimators=ESTIMATORS,
    n_realizations: int = 200,
    seed: int = 0,
    threshold_grid=None,
    threads: int = 1,
    solver_options: SolverOptions | None = None,
) -> SweepResult:
    """Sweep one scenario parameter and measure per-estimator error probabilities.

    ``swept_parameter`` must be one of ``interferer_density``,
    ``pilot_length``, ``n_antennas``. Integer-valued parameters take
    integer values. Estimator names come from :data:`ESTIMATORS`.
    """
    if swept_parameter not in SWEEPABLE:
        raise ContractViolationError(
            f"swept_parameter must be one of {SWEEPABLE}, got {swept_parameter!r}"
        )
    values = list(values)
    if not values:
        raise ContractViolationError("values must be nonempty")
    estimators = tuple(estimators)
    if not estimators:
        raise ContractViolationError("estimators must be nonempty")
    for name in estimators:
        if name not in ESTIMATORS:
            raise ContractViolationError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")
    n_realizations = int(n_realizations)
    if n_realizations < 1:
        raise ContractViolationError(f"n_realizations must be >= 1, got {n_realizations}")
    threads = int(threads)
    if threads < 1:
        raise ContractViolationError(f"threads must be >= 1, got {threads}")
    grid = default_threshold_grid() if threshold_grid is None else np.asarray(threshold_grid)
    options = solver_options if solver_options is not None else SolverOptions()

    cells = []
    for value in values:
        cfg = config.replace(**{swept_parameter: value})
        tasks = [(cfg, estimators, options, seed, r) for r in range(n_realizations)]
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                drawn = list(pool.map(_simulate_point, tasks, chunksize=8))
        else:
            drawn = [_simulate_point(t) for t in tasks]

        truths = [truth for truth, _ in drawn]
        for name in estimators:
            activities = [estimates[name] for _, estimates in drawn]
            theta, err = best_threshold(activities, truths, grid)
            per_realization = np.array(
                [
                    DetectionOutcome(threshold_detect(a, theta), t).errors / t.shape[0]
                    for a, t in zip(activities, truths)
                ]
            )
            cells.append(
                SweepCell(
                    parameter=swept_parameter,
                    value=value,
                    estimator=name,
                    threshold=theta,
                    error_prob=err,
                    n_realizations=n_realizations,
                    realization_errors=per_realization,
                )
            )
    return SweepResult(
        parameter=swept_parameter,
        values=tuple(values),
        estimators=estimators,
        n_realizations=n_realizations,
        seed=int(seed),
        cells=cells,
    )


def paired_gap_standard_error(a: np.ndarray, b: np.ndarray) -> float:
    """Standard error of ``mean(a - b)`` for paired per-realization error rates."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ContractViolationError("need matched 1-D samples with at least 2 entries")
    diff = a - b
    return float(diff.std(ddof=1) / np.sqrt(diff.size))

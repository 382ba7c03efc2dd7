"""JSON run configuration.

Four blocks mirror the pipeline: ``scenario`` (geometry and dimensions),
``solver`` (sweep limits and tolerances), ``experiment`` (what to sweep and
how many realizations), ``output`` (where results land). Parsing and
serialization round-trip exactly; unknown keys are rejected so typos fail
loudly instead of silently running defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .evaluation import ESTIMATORS, SWEEPABLE
from .exceptions import ConfigurationError
from .scenario import ScenarioConfig
from .solvers import SolverOptions


@dataclass(frozen=True)
class ThresholdGridSpec:
    """Arithmetic detection-threshold grid: start, start + step, ..., stop."""

    start: float = 0.01
    step: float = 0.01
    stop: float = 3.0

    def __post_init__(self) -> None:
        if not (self.start > 0 and self.step > 0 and self.stop >= self.start):
            raise ConfigurationError(
                f"threshold grid needs 0 < start <= stop and step > 0, "
                f"got start={self.start}, step={self.step}, stop={self.stop}"
            )

    def to_array(self) -> np.ndarray:
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep definition and Monte Carlo scale."""

    swept_parameter: str = "interferer_density"
    values: tuple = (0.002, 0.006, 0.01)
    estimators: tuple = ESTIMATORS
    n_realizations: int = 200
    seed: int = 0
    threshold_grid: ThresholdGridSpec = field(default_factory=ThresholdGridSpec)

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.swept_parameter not in SWEEPABLE:
            raise ConfigurationError(
                f"swept_parameter must be one of {SWEEPABLE}, got {self.swept_parameter!r}"
            )
        if not self.values:
            raise ConfigurationError("experiment values must be nonempty")
        for name in self.estimators:
            if name not in ESTIMATORS:
                raise ConfigurationError(
                    f"unknown estimator {name!r}; choose from {ESTIMATORS}"
                )
        if not self.estimators:
            raise ConfigurationError("experiment estimators must be nonempty")
        if int(self.n_realizations) < 1:
            raise ConfigurationError(
                f"n_realizations must be >= 1, got {self.n_realizations}"
            )


@dataclass(frozen=True)
class OutputConfig:
    """Result destinations: a CSV path, optionally a JSON mirror."""

    path: str = "sweep.csv"
    json_path: str | None = None


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    solver: SolverOptions = field(default_factory=SolverOptions)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


_BLOCKS = {
    "scenario": ScenarioConfig,
    "solver": SolverOptions,
    "experiment": ExperimentConfig,
    "output": OutputConfig,
}


def _build_block(cls, data: dict, block: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) in {block!r} block: {', '.join(sorted(unknown))}"
        )
    if cls is ExperimentConfig and "threshold_grid" in data:
        grid = data["threshold_grid"]
        if not isinstance(grid, dict):
            raise ConfigurationError("threshold_grid must be an object with start/step/stop")
        data = dict(data)
        data["threshold_grid"] = _build_block(ThresholdGridSpec, grid, "threshold_grid")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"invalid {block!r} block: {exc}") from exc


def run_config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("run configuration must be a JSON object")
    unknown = set(data) - set(_BLOCKS)
    if unknown:
        raise ConfigurationError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    blocks = {}
    for name, cls in _BLOCKS.items():
        block = data.get(name, {})
        if not isinstance(block, dict):
            raise ConfigurationError(f"{name!r} block must be a JSON object")
        blocks[name] = _build_block(cls, block, name)
    return RunConfig(**blocks)


def run_config_to_dict(config: RunConfig) -> dict:
    data = dataclasses.asdict(config)
    data["experiment"]["values"] = list(data["experiment"]["values"])
    data["experiment"]["estimators"] = list(data["experiment"]["estimators"])
    return data


def load_run_config(path) -> RunConfig:
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path!r} is not valid JSON: {exc}") from exc
    return run_config_from_dict(data)


def save_run_config(config: RunConfig, path) -> None:
    with open(path, "w") as handle:
        json.dump(run_config_to_dict(config), handle, indent=2, sort_keys=True)
        handle.write("\n")

"""Joint activity and interference estimation for grant-free random access.

Covariance-based detection: the received pilot-domain signal has a model
covariance that is linear in the unknown device activities and
per-dimension interference powers, and both ML and MAP estimates come from
coordinate descent with closed-form one-dimensional updates. The package
also ships the stochastic-geometry scenario generator and the Monte Carlo
evaluation pipeline used to measure detection error probabilities.
"""

from .config import (
    ExperimentConfig,
    OutputConfig,
    RunConfig,
    ThresholdGridSpec,
    load_run_config,
    run_config_from_dict,
    run_config_to_dict,
    save_run_config,
)
from .detectors import BaselineMLDetector, JointMAPDetector, JointMLDetector
from .evaluation import (
    ESTIMATORS,
    DetectionOutcome,
    SweepCell,
    SweepResult,
    best_threshold,
    default_threshold_grid,
    error_probability,
    paired_gap_standard_error,
    run_experiment,
    threshold_detect,
)
from .exceptions import (
    ConfigurationError,
    ContractViolationError,
    DegenerateEquationError,
    DegeneratePriorError,
    DivergentMeanError,
    NumericalFailureError,
    SingularUpdateError,
)
from .priors import (
    InterferencePrior,
    ShotNoiseSummary,
    activity_log_prior,
    gaussian_prior_moments,
    map_penalty,
    shot_noise_oracle,
    truncated_shot_noise_moments,
)
from .scenario import (
    NetworkRealization,
    PilotSet,
    Realization,
    ScenarioConfig,
    complex_normal,
    draw_realization,
    realization_rng,
    sample_covariance,
    sample_network,
    sample_pilots,
    save_realization,
    synthesize_received_signal,
)
from .solvers import (
    EstimateResult,
    SolverOptions,
    map_activity_step,
    map_interference_step,
    ml_activity_step,
    ml_interference_step,
    run_baseline_ml,
    run_map,
    run_ml,
)
from .state import CovarianceState

__version__ = "0.1.0"

__all__ = [
    "BaselineMLDetector",
    "ConfigurationError",
    "ContractViolationError",
    "CovarianceState",
    "DegenerateEquationError",
    "DegeneratePriorError",
    "DetectionOutcome",
    "DivergentMeanError",
    "ESTIMATORS",
    "EstimateResult",
    "ExperimentConfig",
    "InterferencePrior",
    "JointMAPDetector",
    "JointMLDetector",
    "NetworkRealization",
    "NumericalFailureError",
    "OutputConfig",
    "PilotSet",
    "Realization",
    "RunConfig",
    "ScenarioConfig",
    "ShotNoiseSummary",
    "SingularUpdateError",
    "SolverOptions",
    "SweepCell",
    "SweepResult",
    "ThresholdGridSpec",
    "activity_log_prior",
    "best_threshold",
    "complex_normal",
    "default_threshold_grid",
    "draw_realization",
    "error_probability",
    "gaussian_prior_moments",
    "load_run_config",
    "map_activity_step",
    "map_interference_step",
    "map_penalty",
    "ml_activity_step",
    "ml_interference_step",
    "paired_gap_standard_error",
    "realization_rng",
    "run_baseline_ml",
    "run_config_from_dict",
    "run_config_to_dict",
    "run_experiment",
    "run_map",
    "run_ml",
    "sample_covariance",
    "sample_network",
    "sample_pilots",
    "save_realization",
    "save_run_config",
    "shot_noise_oracle",
    "synthesize_received_signal",
    "threshold_detect",
    "truncated_shot_noise_moments",
]

"""Estimator-style wrappers around the coordinate-descent solvers.

The detectors follow the scikit-learn protocol: constructor arguments are
stored verbatim, ``fit(Y)`` consumes one received pilot-domain signal
(shape ``pilot_length x n_antennas``) and exposes the estimates as
trailing-underscore attributes, and ``get_params`` / ``set_params`` /
``clone`` work as usual. Detection is transductive (each ``Y`` is its own
problem), so ``fit_predict`` is the prediction surface.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .evaluation import threshold_detect
from .exceptions import ContractViolationError
from .priors import InterferencePrior
from .scenario import sample_covariance
from .solvers import SolverOptions, run_baseline_ml, run_map, run_ml
from .state import CovarianceState
from .validation import as_complex_matrix


class _CovarianceDetector(BaseEstimator):
    """Shared fit machinery; subclasses choose the solver."""

    def __init__(
        self,
        pilots=None,
        pathloss=None,
        noise_var=1.0,
        threshold=0.5,
        max_sweeps=50,
        coordinate_tol=1e-6,
        objective_tol=1e-7,
        monitor_objective=False,
    ):
        self.pilots = pilots
        self.pathloss = pathloss
        self.noise_var = noise_var
        self.threshold = threshold
        self.max_sweeps = max_sweeps
        self.coordinate_tol = coordinate_tol
        self.objective_tol = objective_tol
        self.monitor_objective = monitor_objective

    def _solver_options(self) -> SolverOptions:
        return SolverOptions(
            max_sweeps=self.max_sweeps,
            coordinate_tol=self.coordinate_tol,
            objective_tol=self.objective_tol,
            monitor_objective=self.monitor_objective,
        )

    def _validated_signal(self, received) -> np.ndarray:
        if self.pilots is None or self.pathloss is None:
            raise ContractViolationError(
                f"{type(self).__name__} needs pilots and pathloss before fitting"
            )
        received = as_complex_matrix(received, "received signal")
        pilots = as_complex_matrix(self.pilots, "pilots")
        if received.shape[0] != pilots.shape[0]:
            raise ContractViolationError(
                f"received signal has {received.shape[0]} pilot dimensions, "
                f"pilots have {pilots.shape[0]}"
            )
        return received

    def _solve(self, sample_cov, n_antennas):
        raise NotImplementedError

    def fit(self, Y, y=None):
        """Estimate activities and interference powers from one signal ``Y``."""
        received = self._validated_signal(Y)
        sample_cov = sample_covariance(received)
        result = self._solve(sample_cov, received.shape[1])
        self.activity_ = result.activity
        self.interference_ = result.interference
        self.n_sweeps_ = result.sweeps_used
        self.converged_ = result.converged
        self.objective_ = result.final_objective
        self.objective_trace_ = result.objective_trace
        return self

    def fit_predict(self, Y, y=None) -> np.ndarray:
        """Fit, then threshold the activity estimate into 0/1 decisions."""
        self.fit(Y)
        return threshold_detect(self.activity_, self.threshold)

    def decisions(self, threshold: float | None = None) -> np.ndarray:
        """Re-threshold the fitted activity estimate without refitting."""
        if not hasattr(self, "activity_"):
            raise ContractViolationError("call fit before requesting decisions")
        theta = self.threshold if threshold is None else threshold
        return threshold_detect(self.activity_, theta)

    def score(self, Y, y=None) -> float:
        """Negative fit objective of ``Y`` at the fitted estimates (higher is better)."""
        if not hasattr(self, "activity_"):
            raise ContractViolationError("call fit before scoring")
        received = self._validated_signal(Y)
        state = CovarianceState.from_estimates(
            self.pilots, self.pathloss, self.noise_var, self.activity_, self.interference_
        )
        return -state.objective_ml(sample_covariance(received))


class JointMLDetector(_CovarianceDetector):
    """Joint ML estimation of device activities and interference powers."""

    def _solve(self, sample_cov, n_antennas):
        return run_ml(
            sample_cov, self.pilots, self.pathloss, self.noise_var,
            options=self._solver_options(),
        )


class BaselineMLDetector(_CovarianceDetector):
    """ML activity estimation that models the interference as zero."""

    def _solve(self, sample_cov, n_antennas):
        return run_baseline_ml(
            sample_cov, self.pilots, self.pathloss, self.noise_var,
            options=self._solver_options(),
        )


class JointMAPDetector(_CovarianceDetector):
    """Joint MAP estimation under Gaussian interference and Bernoulli activity priors.

    ``prior`` is an :class:`InterferencePrior`; ``activity_prob`` is the
    Bernoulli access probability. Both are required at fit time.
    """

    def __init__(
        self,
        pilots=None,
        pathloss=None,
        noise_var=1.0,
        threshold=0.5,
        max_sweeps=50,
        coordinate_tol=1e-6,
        objective_tol=1e-7,
        monitor_objective=False,
        prior: InterferencePrior | None = None,
        activity_prob: float = 0.05,
    ):
        super().__init__(
            pilots=pilots,
            pathloss=pathloss,
            noise_var=noise_var,
            threshold=threshold,
            max_sweeps=max_sweeps,
            coordinate_tol=coordinate_tol,
            objective_tol=objective_tol,
            monitor_objective=monitor_objective,
        )
        self.prior = prior
        self.activity_prob = activity_prob

    def _solve(self, sample_cov, n_antennas):
        if self.prior is None:
            raise ContractViolationError("JointMAPDetector needs an InterferencePrior")
        return run_map(
            sample_cov, self.pilots, self.pathloss, self.noise_var,
            self.prior, self.activity_prob, n_antennas,
            options=self._solver_options(),
        )

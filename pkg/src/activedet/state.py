"""Incremental state for the coordinate-descent solvers.

The model covariance is

    Sigma = P diag(a * g) P^H + diag(x) + noise_var * I

with pilots ``P`` (L x N), pathloss ``g``, activity ``a`` and per-dimension
interference ``x``. A solver touches one coordinate of ``a`` or ``x`` at a
time, which perturbs ``Sigma`` by a rank-one term; the state keeps
``Sigma^-1`` and ``log det Sigma`` current through those rank-one updates so
no O(L^3) work happens inside sweeps.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ContractViolationError, SingularUpdateError
from .linalg import log_det_rank_one_increment, rank_one_inverse_update
from .priors import InterferencePrior, map_penalty
from .validation import (
    as_complex_matrix,
    as_float_vector,
    check_hermitian,
    check_index,
    check_positive,
    hermitize,
)

_BOX_TOL = 1e-9


class CovarianceState:
    """Estimates ``(activity, interference)`` with cached ``Sigma^-1`` and ``log det``.

    Freshly constructed states start at ``activity = 0``, ``interference = 0``,
    where ``Sigma = noise_var * I`` and both caches are exact. ``check_every``
    (debugging aid) rebuilds the inverse from scratch every that many updates
    and raises if the cache has drifted.

    The pilot and pathloss arrays are referenced, not copied; treat them as
    immutable while any state built on them is alive.
    """

    def __init__(
        self,
        pilots,
        pathloss,
        noise_var: float,
        check_every: int = 0,
    ) -> None:
        self.pilots = as_complex_matrix(pilots, "pilots")
        dim, n_devices = self.pilots.shape
        self.pathloss = as_float_vector(pathloss, dim=n_devices, name="pathloss")
        if self.pathloss.size and float(self.pathloss.min()) <= 0.0:
            raise ContractViolationError("pathloss entries must be positive")
        self.noise_var = check_positive(noise_var, "noise_var")

        self.activity = np.zeros(n_devices)
        self.interference = np.zeros(dim)
        self.cov_inv = np.eye(dim, dtype=np.complex128) / self.noise_var
        self.log_det = dim * math.log(self.noise_var)

        self._check_every = int(check_every)
        self._updates = 0

    @property
    def dim(self) -> int:
        return self.pilots.shape[0]

    @property
    def n_devices(self) -> int:
        return self.pilots.shape[1]

    @classmethod
    def from_estimates(
        cls, pilots, pathloss, noise_var: float, activity, interference
    ) -> "CovarianceState":
        """Build a state at given estimates via one dense factorization."""
        state = cls(pilots, pathloss, noise_var)
        activity = as_float_vector(activity, dim=state.n_devices, name="activity")
        interference = as_float_vector(interference, dim=state.dim, name="interference")
        if activity.size and (
            float(activity.min()) < -_BOX_TOL or float(activity.max()) > 1.0 + _BOX_TOL
        ):
            raise ContractViolationError("activity entries must lie in [0, 1]")
        if interference.size and float(interference.min()) < -_BOX_TOL:
            raise ContractViolationError("interference entries must be nonnegative")
        state.activity = np.clip(activity, 0.0, 1.0)
        state.interference = np.maximum(interference, 0.0)
        cov = state.rebuild_covariance()
        sign, log_det = np.linalg.slogdet(cov)
        if sign.real <= 0:
            raise SingularUpdateError("model covariance is not positive definite")
        state.cov_inv = hermitize(np.linalg.inv(cov))
        state.log_det = float(log_det)
        return state

    def rebuild_covariance(self) -> np.ndarray:
        """Dense ``Sigma`` at the current estimates (O(L^2 N))."""
        weights = self.activity * self.pathloss
        cov = (self.pilots * weights) @ self.pilots.conj().T
        cov[np.diag_indices(self.dim)] += self.interference + self.noise_var
        return hermitize(cov)

    def refresh_log_det(self) -> None:
        """Replace the cached log-determinant with a dense slogdet."""
        sign, log_det = np.linalg.slogdet(self.rebuild_covariance())
        if sign.real <= 0:
            raise SingularUpdateError("model covariance lost positive definiteness")
        self.log_det = float(log_det)

    def apply_activity_increment(self, i: int, d: float, inv_pilot=None) -> None:
        """Shift ``activity[i]`` by ``d``; rank-one update of both caches.

        ``inv_pilot`` may pass a precomputed ``cov_inv @ pilots[:, i]`` (the
        solvers already have it from the step computation).
        """
        i = check_index(i, self.n_devices, "device index")
        d = float(d)
        if d == 0.0:
            return
        new = self.activity[i] + d
        if new < -_BOX_TOL or new > 1.0 + _BOX_TOL:
            raise ContractViolationError(
                f"activity[{i}] would leave [0, 1]: {self.activity[i]} + {d}"
            )
        v = self.pilots[:, i]
        mv = self.cov_inv @ v if inv_pilot is None else inv_pilot
        c = d * self.pathloss[i]
        self.log_det += log_det_rank_one_increment(self.cov_inv, v, c, mv=mv)
        rank_one_inverse_update(self.cov_inv, v, c, mv=mv)
        self.activity[i] = min(1.0, max(0.0, new))
        self._count_update()

    def apply_interference_increment(self, ell: int, d: float) -> None:
        """Shift ``interference[ell]`` by ``d``; rank-one update of both caches."""
        ell = check_index(ell, self.dim, "dimension index")
        d = float(d)
        if d == 0.0:
            return
        new = self.interference[ell] + d
        if new < -_BOX_TOL:
            raise ContractViolationError(
                f"interference[{ell}] would go negative: {self.interference[ell]} + {d}"
            )
        v = np.zeros(self.dim, dtype=np.complex128)
        v[ell] = 1.0
        mv = np.ascontiguousarray(self.cov_inv[:, ell])
        self.log_det += log_det_rank_one_increment(self.cov_inv, v, d, mv=mv)
        rank_one_inverse_update(self.cov_inv, v, d, mv=mv)
        self.interference[ell] = max(0.0, new)
        self._count_update()

    def objective_ml(self, sample_cov) -> float:
        """``log det Sigma + tr(Sigma^-1 sample_cov)`` at the current estimates."""
        sample_cov = np.asarray(sample_cov)
        if sample_cov.shape != (self.dim, self.dim):
            raise ContractViolationError(
                f"sample covariance shape {sample_cov.shape} does not match dimension {self.dim}"
            )
        trace = float(np.einsum("ij,ji->", self.cov_inv, sample_cov).real)
        return self.log_det + trace

    def objective_map(
        self,
        sample_cov,
        prior: InterferencePrior,
        activity_prob: float,
        n_antennas: int,
    ) -> float:
        """ML objective plus the scaled Gaussian and Bernoulli prior terms."""
        return self.objective_ml(sample_cov) + map_penalty(
            self.interference, self.activity, prior, activity_prob, n_antennas
        )

    def copy(self) -> "CovarianceState":
        """Independent estimates and caches; pilots and pathloss stay shared."""
        dup = CovarianceState.__new__(CovarianceState)
        dup.pilots = self.pilots
        dup.pathloss = self.pathloss
        dup.noise_var = self.noise_var
        dup.activity = self.activity.copy()
        dup.interference = self.interference.copy()
        dup.cov_inv = self.cov_inv.copy()
        dup.log_det = self.log_det
        dup._check_every = self._check_every
        dup._updates = self._updates
        return dup

    def check_consistency(self, tol: float = 1e-6) -> None:
        """Raise unless the caches match a dense rebuild within ``tol``.

        Checks ``max |Sigma^-1 Sigma - I|`` and the log-determinant gap.
        """
        cov = self.rebuild_covariance()
        check_hermitian(cov, name="rebuilt covariance")
        residual = self.cov_inv @ cov
        residual[np.diag_indices(self.dim)] -= 1.0
        max_residual = float(np.abs(residual).max())
        if max_residual > tol:
            raise SingularUpdateError(
                f"cached inverse drifted: max |Sigma^-1 Sigma - I| = {max_residual:.3e}"
            )
        sign, log_det = np.linalg.slogdet(cov)
        if sign.real <= 0:
            raise SingularUpdateError("model covariance lost positive definiteness")
        gap = abs(self.log_det - float(log_det))
        if gap > tol:
            raise SingularUpdateError(f"cached log-determinant drifted by {gap:.3e}")

    def _count_update(self) -> None:
        self._updates += 1
        if self._check_every and self._updates % self._check_every == 0:
            self.check_consistency()

"""Interference statistics and the activity prior.

The aggregate out-of-cell interference power received on one pilot
dimension is a shot noise over a thinned Poisson field: active interferers
of density ``lambda * p_a`` beyond the cell radius, each contributing its
pathloss ``r ** -alpha``. Campbell's theorem gives its mean and variance in
closed form, and a Gaussian with those two moments is the working prior for
the per-dimension interference power in the MAP objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractViolationError, DegeneratePriorError, DivergentMeanError
from .validation import (
    as_float_vector,
    check_activity_values,
    check_nonnegative,
    check_positive,
    check_probability,
)


@dataclass(frozen=True)
class InterferencePrior:
    """Gaussian prior on per-dimension interference power.

    Carries the field parameters the moments were computed from, so a prior
    can be traced back to its scenario.
    """

    mean: float
    variance: float
    interferer_density: float
    activity_prob: float
    cell_radius: float
    pathloss_exponent: float


def _check_field_params(
    interferer_density: float,
    activity_prob: float,
    cell_radius: float,
    pathloss_exponent: float,
) -> tuple[float, float, float, float]:
    density = check_nonnegative(interferer_density, "interferer_density")
    prob = check_probability(activity_prob, "activity_prob", allow_one=True)
    radius = check_positive(cell_radius, "cell_radius")
    alpha = float(pathloss_exponent)
    if not math.isfinite(alpha) or alpha <= 2.0:
        raise DivergentMeanError(
            f"shot-noise mean diverges for pathloss_exponent <= 2, got {alpha!r}"
        )
    return density, prob, radius, alpha


def gaussian_prior_moments(
    interferer_density: float,
    activity_prob: float,
    cell_radius: float,
    pathloss_exponent: float,
) -> InterferencePrior:
    """Closed-form shot-noise moments over the whole plane beyond the cell.

    With active density ``lam = interferer_density * activity_prob``,
    radius ``R`` and exponent ``alpha > 2``:

        mean     = 2 pi lam R^(2 - alpha) / (alpha - 2)
        variance =   pi lam R^(2 - 2 alpha) / (alpha - 1)
    """
    density, prob, radius, alpha = _check_field_params(
        interferer_density, activity_prob, cell_radius, pathloss_exponent
    )
    lam = density * prob
    mean = 2.0 * math.pi * lam * radius ** (2.0 - alpha) / (alpha - 2.0)
    variance = math.pi * lam * radius ** (2.0 - 2.0 * alpha) / (alpha - 1.0)
    return InterferencePrior(
        mean=mean,
        variance=variance,
        interferer_density=density,
        activity_prob=prob,
        cell_radius=radius,
        pathloss_exponent=alpha,
    )


def truncated_shot_noise_moments(
    interferer_density: float,
    activity_prob: float,
    cell_radius: float,
    pathloss_exponent: float,
    truncation_factor: float,
) -> tuple[float, float]:
    """Exact mean and variance when the field stops at ``truncation_factor * R``.

    These are the targets a finite-window Monte Carlo estimate is unbiased
    for, so oracle comparisons against them carry no truncation bias at any
    window size.
    """
    density, prob, radius, alpha = _check_field_params(
        interferer_density, activity_prob, cell_radius, pathloss_exponent
    )
    factor = float(truncation_factor)
    if not factor > 1.0:
        raise ContractViolationError(f"truncation_factor must exceed 1, got {factor!r}")
    lam = density * prob
    outer = factor * radius
    mean = 2.0 * math.pi * lam * (radius ** (2.0 - alpha) - outer ** (2.0 - alpha)) / (alpha - 2.0)
    variance = (
        math.pi * lam * (radius ** (2.0 - 2.0 * alpha) - outer ** (2.0 - 2.0 * alpha))
        / (alpha - 1.0)
    )
    return mean, variance


@dataclass
class ShotNoiseSummary:
    """Monte Carlo summary of the aggregate interference power."""

    mean: float
    variance: float
    bin_edges: np.ndarray
    density: np.ndarray
    n_samples: int


def shot_noise_oracle(
    interferer_density: float,
    activity_prob: float,
    cell_radius: float,
    pathloss_exponent: float,
    truncation_factor: float,
    n_samples: int,
    rng: np.random.Generator,
    bins: int = 80,
) -> ShotNoiseSummary:
    """Sample the aggregate power ``sum_k r_k ** -alpha`` over the annulus.

    Each sample draws a Poisson number of active interferers on
    ``(R, f R]`` (uniform in area) and sums their pathlosses. Sampling is
    chunked and vectorized; mean, unbiased variance, and a fixed-bin
    histogram of the draws come back in one summary.
    """
    density, prob, radius, alpha = _check_field_params(
        interferer_density, activity_prob, cell_radius, pathloss_exponent
    )
    factor = float(truncation_factor)
    if not factor > 1.0:
        raise ContractViolationError(f"truncation_factor must exceed 1, got {factor!r}")
    n_samples = int(n_samples)
    if n_samples < 2:
        raise ContractViolationError(f"n_samples must be >= 2, got {n_samples}")

    outer = factor * radius
    area = math.pi * (outer ** 2 - radius ** 2)
    mean_count = density * prob * area

    # Keep each chunk near 5e6 point draws regardless of the window size.
    per_sample = max(mean_count, 1.0)
    chunk_size = max(1, min(n_samples, int(5e6 / per_sample)))

    totals = np.empty(n_samples)
    done = 0
    while done < n_samples:
        size = min(chunk_size, n_samples - done)
        counts = rng.poisson(mean_count, size=size)
        n_points = int(counts.sum())
        u = rng.random(n_points)
        r = np.sqrt(radius ** 2 + u * (outer ** 2 - radius ** 2))
        owner = np.repeat(np.arange(size), counts)
        totals[done : done + size] = np.bincount(owner, weights=r ** -alpha, minlength=size)
        done += size

    hist, edges = np.histogram(totals, bins=int(bins), density=True)
    return ShotNoiseSummary(
        mean=float(totals.mean()),
        variance=float(totals.var(ddof=1)),
        bin_edges=edges,
        density=hist,
        n_samples=n_samples,
    )


def map_penalty(
    interference,
    activity,
    prior: InterferencePrior,
    activity_prob: float,
    n_antennas: int,
) -> float:
    """Additive prior term of the MAP fit objective.

    ``sum((x - mean)^2) / (2 M var) - log(p / (1 - p)) sum(a) / M`` with
    ``M = n_antennas``; this is exactly the gap between the MAP and ML
    objectives at fixed estimates, and both terms scale as ``1 / M``.
    """
    if prior.variance <= 0.0:
        raise DegeneratePriorError(
            f"interference prior variance must be positive, got {prior.variance!r}"
        )
    prob = check_probability(activity_prob, "activity_prob")
    n_antennas = int(n_antennas)
    if n_antennas < 1:
        raise ContractViolationError(f"n_antennas must be >= 1, got {n_antennas}")
    x = as_float_vector(interference, name="interference")
    a = as_float_vector(activity, name="activity")
    dev = x - prior.mean
    quad = float(dev @ dev) / (2.0 * n_antennas * prior.variance)
    odds = math.log(prob / (1.0 - prob)) * float(a.sum()) / n_antennas
    return quad - odds


def activity_log_prior(activity, activity_prob: float) -> float:
    """Log of the i.i.d. Bernoulli prior at a (possibly relaxed) activity vector.

    ``log p(a) = log(p / (1 - p)) * sum(a) + N * log(1 - p)``, which agrees
    with the exact Bernoulli mass on binary vectors.
    """
    a = as_float_vector(activity, name="activity")
    check_activity_values(a)
    prob = check_probability(activity_prob, "activity_prob")
    return math.log(prob / (1.0 - prob)) * float(a.sum()) + a.shape[0] * math.log(1.0 - prob)

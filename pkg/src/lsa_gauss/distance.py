"""Computable surrogates of the convex distance to a Gaussian.

The supremum over all convex Borel sets is not computable from samples, so
two convex sub-families stand in for it:

* halfspaces, probed by exact 1-D Kolmogorov statistics along random unit
  directions (``projected_ks``);
* centered ellipsoids {x : ||Sigma^(-1/2) x|| <= r}, probed by the radial
  statistic against the chi distribution (``ball_distance``).

Their maximum (``convex_surrogate``) is a lower bound on the convex distance:
any rate in alpha claimed for the full distance is inherited by the
surrogate, which makes slope checks sound. Absolute-constant comparisons are
out of scope by construction.

Each estimate carries the distribution-free confidence half-width
sqrt(ln(2/delta) / (2R)) of the DKW inequality at confidence 1 - delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, ndtr

from .covariance import inv_sqrt

__all__ = [
    "DistanceEstimate",
    "dkw_halfwidth",
    "whiten",
    "ks_1d",
    "projected_ks",
    "ball_distance",
    "convex_surrogate",
    "normal_cdf",
    "chi_sq_cdf",
]


def normal_cdf(t: np.ndarray, sd: float = 1.0) -> np.ndarray:
    """Standard-accuracy Gaussian CDF via the complementary error function."""
    return ndtr(np.asarray(t, dtype=np.float64) / sd)


def chi_sq_cdf(t: np.ndarray, dof: int) -> np.ndarray:
    """Chi-square CDF via the regularized incomplete gamma function."""
    t = np.asarray(t, dtype=np.float64)
    return gammainc(dof / 2.0, np.maximum(t, 0.0) / 2.0)


def dkw_halfwidth(num_samples: int, delta: float) -> float:
    return math.sqrt(math.log(2.0 / delta) / (2.0 * num_samples))


@dataclass(frozen=True)
class DistanceEstimate:
    value: float
    ci_halfwidth: float
    family: str               # halfspace-projected | centered-ball | combined-max
    num_samples: int
    num_directions: int
    seed_info: str

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "ci_halfwidth": self.ci_halfwidth,
            "class": self.family,
            "R": self.num_samples,
            "M": self.num_directions,
            "seed": self.seed_info,
        }


def whiten(samples: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Map each row x to Sigma^(-1/2) x with the symmetric square root."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    return samples @ inv_sqrt(sigma)


def ks_1d(samples: np.ndarray, target_cdf) -> float:
    """sup_t |F_R(t) - F(t)|, evaluated exactly at the sorted jump points."""
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    r = x.size
    if r < 1:
        raise ValueError("need at least one sample")
    f = np.asarray(target_cdf(x), dtype=np.float64)
    grid = np.arange(1, r + 1) / r
    return float(max(np.max(np.abs(f - grid)), np.max(np.abs(f - (grid - 1.0 / r)))))


def projected_ks(
    samples: np.ndarray,
    sigma: np.ndarray,
    num_directions: int,
    rng,
    delta: float = 0.01,
    seed_info: str = "",
) -> DistanceEstimate:
    """Max Kolmogorov distance over random unit directions u, each compared
    with the exact projected law N(0, u^T Sigma u)."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    r, d = samples.shape
    if r < 100:
        raise ValueError("need at least 100 samples")
    if num_directions < 1:
        raise ValueError("need at least one direction")
    dirs = rng.standard_normal((num_directions, d))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = dirs / norms
    value = 0.0
    for u in dirs:
        var = float(u @ sigma @ u)
        assert var > 0.0, "projected variance must be positive for SPD sigma"
        sd = math.sqrt(var)
        value = max(value, ks_1d(samples @ u, lambda t: normal_cdf(t, sd)))
    return DistanceEstimate(
        value=value,
        ci_halfwidth=dkw_halfwidth(r, delta),
        family="halfspace-projected",
        num_samples=r,
        num_directions=num_directions,
        seed_info=seed_info,
    )


def ball_distance(
    samples: np.ndarray,
    sigma: np.ndarray,
    delta: float = 0.01,
    seed_info: str = "",
) -> DistanceEstimate:
    """Kolmogorov distance of the whitened radii against the chi law."""
    white = whiten(samples, sigma)
    r = white.shape[0]
    if r < 100:
        raise ValueError("need at least 100 samples")
    dof = white.shape[1]
    radii = np.linalg.norm(white, axis=1)
    value = ks_1d(radii, lambda t: chi_sq_cdf(np.asarray(t) ** 2, dof))
    return DistanceEstimate(
        value=value,
        ci_halfwidth=dkw_halfwidth(r, delta),
        family="centered-ball",
        num_samples=r,
        num_directions=0,
        seed_info=seed_info,
    )


def convex_surrogate(
    samples: np.ndarray,
    sigma: np.ndarray,
    num_directions: int,
    rng,
    delta: float = 0.01,
    seed_info: str = "",
) -> DistanceEstimate:
    """max(projected_ks, ball_distance): a lower bound on the convex distance
    (both families are convex sets)."""
    proj = projected_ks(samples, sigma, num_directions, rng, delta, seed_info)
    ball = ball_distance(samples, sigma, delta, seed_info)
    return DistanceEstimate(
        value=max(proj.value, ball.value),
        ci_halfwidth=proj.ci_halfwidth,
        family="combined-max",
        num_samples=proj.num_samples,
        num_directions=num_directions,
        seed_info=seed_info,
    )

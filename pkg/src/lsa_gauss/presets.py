"""Canonical instances used by the verification suites and tests.

``s1`` is the unit scalar instance (everything equals 1); it pins the scalar
closed forms. The ``*_skew`` instances carry a skewed two-point zeta
(E[zeta^3] = 15/4 at unit variance) plus feature-magnitude randomness: with
symmetric noise the rescaled error converges at an O(alpha) rate (the leading
Edgeworth term vanishes), so rate-sweep experiments need third moments to
exhibit the sqrt(alpha) scaling they are meant to measure.
"""

from __future__ import annotations

import math

import numpy as np

from .model import (
    DiscreteZeta,
    FiniteSupport,
    GaussianZeta,
    ProblemInstance,
    ScaledRademacher,
    make_instance,
)

__all__ = ["s1", "s1_skew", "skew2", "rademacher_gaussian"]

# Two-point zeta with values (9/2, -2/9) and probs (4/85, 81/85): mean 0 and
# variance 1 exactly, E[zeta^3] = 77/18. The skew level trades the smallest
# detectable distance at the bottom of the sweep grid against the Pearson-tied
# kurtosis that inflates the top; u = 4.5 balances both at R = 2e4.
_SKEW_ZETA = DiscreteZeta(values=[4.5, -2.0 / 9.0], probs=[4.0 / 85.0, 81.0 / 85.0])

# Feature magnitudes sqrt(8/5) / sqrt(11/20) with probs 3/7, 4/7: E[X^2] = 1.
_MAG_HI = math.sqrt(1.6)
_MAG_LO = math.sqrt(0.55)
_MAG_P = 3.0 / 7.0


def s1() -> ProblemInstance:
    """Unit scalar instance: X = 1, zeta = +-1, so Phi = a = c_phi = 1,
    Sigma_eps = 1, E||eps||^3 = 1 and ||eps||_inf = 1."""
    return make_instance(
        dim=1,
        feature_dist=FiniteSupport(points=[[1.0]], probs=[1.0]),
        response_noise=DiscreteZeta(values=[1.0, -1.0], probs=[0.5, 0.5]),
        theta_star=[0.0],
    )


def s1_skew() -> ProblemInstance:
    """Scalar instance with random feature magnitude and skewed zeta.

    Phi = 1 and Sigma_eps = 1 exactly (the scalar closed forms still apply),
    but E[eps^3] != 0, which makes the distance to the Gaussian limit decay at
    the generic sqrt(alpha) rate.
    """
    return make_instance(
        dim=1,
        feature_dist=FiniteSupport(points=[[_MAG_HI], [_MAG_LO]], probs=[_MAG_P, 1 - _MAG_P]),
        response_noise=_SKEW_ZETA,
        theta_star=[0.0],
    )


def skew2() -> ProblemInstance:
    """Two-dimensional rate-sweep instance.

    The first coordinate reproduces the ``s1_skew`` dynamics; the second is an
    independent +-1/2 sign, kept small so its coupling into the first
    coordinate does not drown the sqrt(alpha) signal at the large-alpha end.
    Phi = diag(1, 1/4) and Sigma_eps = Phi.
    """
    points = [
        [_MAG_HI, 0.5],
        [_MAG_HI, -0.5],
        [_MAG_LO, 0.5],
        [_MAG_LO, -0.5],
    ]
    probs = [_MAG_P / 2, _MAG_P / 2, (1 - _MAG_P) / 2, (1 - _MAG_P) / 2]
    return make_instance(
        dim=2,
        feature_dist=FiniteSupport(points=points, probs=probs),
        response_noise=_SKEW_ZETA,
        theta_star=[0.0, 0.0],
    )


def rademacher_gaussian(dim: int, c_phi: float = 1.0, sigma: float = 1.0) -> ProblemInstance:
    """Scaled Rademacher features with Gaussian zeta: Phi = (c_phi^2/d) I."""
    return make_instance(
        dim=dim,
        feature_dist=ScaledRademacher(c_phi=c_phi),
        response_noise=GaussianZeta(sigma=sigma),
        theta_star=np.zeros(dim),
    )

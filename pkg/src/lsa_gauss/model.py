"""Synthetic online linear regression problems.

A problem instance fixes a joint law for the pair (X, Y): a bounded feature
distribution with second moment Phi = E[X X^T], and a well-specified response
Y = X^T theta* + zeta with zeta independent of X, mean zero. Everything the
theory needs is then available in closed form:

* normal equations    Phi theta* = b_bar,  b_bar = E[X Y];
* noise at optimum    eps = (X X^T - Phi) theta* - (X Y - b_bar) = -X zeta;
* noise covariance    Sigma_eps = var(zeta) * Phi;
* third moments       E||eps||^3 = E||X||^3 * E|zeta|^3 (independence).

Three feature generators are shipped because they make every bound checkable
without estimation error in Phi: scaled Rademacher and sphere-uniform features
have (c_phi^2/d) I as exact second moment, and finitely supported laws
enumerate exactly. Instances are immutable and safe to share across workers;
all sampling goes through caller-supplied numpy Generators.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ScaledRademacher",
    "SphereUniform",
    "FiniteSupport",
    "GaussianZeta",
    "UniformZeta",
    "DiscreteZeta",
    "NoNoise",
    "ProblemInstance",
    "AssumptionReport",
    "make_instance",
    "sample_pair",
    "sample_pairs",
    "noise_at_optimum",
    "validate_assumptions",
]

_SINGULAR_TOL = 1e-12


def _frozen_array(values, shape_hint=None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if shape_hint is not None and arr.ndim != shape_hint:
        raise ValueError(f"expected a {shape_hint}-dimensional array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Feature distributions
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ScaledRademacher:
    """Independent +-c_phi/sqrt(d) components; ||X|| = c_phi exactly."""

    c_phi: float = 1.0

    def __post_init__(self):
        if not self.c_phi > 0:
            raise ValueError("c_phi must be positive")


@dataclass(frozen=True)
class SphereUniform:
    """Uniform on the sphere of radius c_phi; E[X X^T] = (c_phi^2/d) I."""

    c_phi: float = 1.0

    def __post_init__(self):
        if not self.c_phi > 0:
            raise ValueError("c_phi must be positive")


@dataclass(frozen=True)
class FiniteSupport:
    """P(X = points[i]) = probs[i]; the feature bound is max_i ||points[i]||.

    An explicit ``c_phi`` may be passed as an asserted bound; support points
    outside it are rejected.
    """

    points: np.ndarray
    probs: np.ndarray
    c_phi: float | None = None

    def __post_init__(self):
        points = np.atleast_2d(_frozen_array(self.points))
        probs = _frozen_array(self.probs, shape_hint=1)
        points.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "probs", probs)
        if points.shape[0] != probs.shape[0]:
            raise ValueError("points and probs must have matching lengths")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        norms = np.linalg.norm(points, axis=1)
        bound = float(norms.max())
        if self.c_phi is None:
            object.__setattr__(self, "c_phi", bound)
        elif bound > self.c_phi * (1 + 1e-12):
            raise ValueError(
                f"support point with norm {bound} exceeds the feature bound {self.c_phi}"
            )


FeatureDistribution = ScaledRademacher | SphereUniform | FiniteSupport


def feature_second_moment(dist: FeatureDistribution, dim: int) -> np.ndarray:
    if isinstance(dist, (ScaledRademacher, SphereUniform)):
        return (dist.c_phi**2 / dim) * np.eye(dim)
    pts = dist.points
    if pts.shape[1] != dim:
        raise ValueError(f"support points have dimension {pts.shape[1]}, expected {dim}")
    return np.einsum("i,ij,ik->jk", dist.probs, pts, pts)


def feature_abs_moment3(dist: FeatureDistribution, dim: int) -> float:
    """E||X||^3 (exact; the shipped generators all have enumerable norms)."""
    if isinstance(dist, (ScaledRademacher, SphereUniform)):
        return dist.c_phi**3
    norms = np.linalg.norm(dist.points, axis=1)
    return float(np.sum(dist.probs * norms**3))


def feature_norm_sup(dist: FeatureDistribution) -> float:
    return float(dist.c_phi)


# ---------------------------------------------------------------------------
# Response noise
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class GaussianZeta:
    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class UniformZeta:
    half_width: float = 1.0

    def __post_init__(self):
        if self.half_width < 0:
            raise ValueError("half_width must be nonnegative")


@dataclass(frozen=True)
class DiscreteZeta:
    """Finitely supported zeta; must be mean zero."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = _frozen_array(self.values, shape_hint=1)
        probs = _frozen_array(self.probs, shape_hint=1)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)
        if values.shape != probs.shape:
            raise ValueError("values and probs must have matching lengths")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        if abs(float(np.dot(values, probs))) > 1e-12:
            raise ValueError("discrete zeta must have mean zero")


@dataclass(frozen=True)
class NoNoise:
    pass


ResponseNoise = GaussianZeta | UniformZeta | DiscreteZeta | NoNoise


def zeta_variance(noise: ResponseNoise) -> float:
    if isinstance(noise, GaussianZeta):
        return noise.sigma**2
    if isinstance(noise, UniformZeta):
        return noise.half_width**2 / 3.0
    if isinstance(noise, DiscreteZeta):
        return float(np.sum(noise.probs * noise.values**2))
    return 0.0


def zeta_abs_moment3(noise: ResponseNoise) -> float:
    if isinstance(noise, GaussianZeta):
        return noise.sigma**3 * 2.0 * math.sqrt(2.0 / math.pi)
    if isinstance(noise, UniformZeta):
        return noise.half_width**3 / 4.0
    if isinstance(noise, DiscreteZeta):
        return float(np.sum(noise.probs * np.abs(noise.values) ** 3))
    return 0.0


def zeta_sup(noise: ResponseNoise) -> float:
    """Essential sup of |zeta|; inf for Gaussian noise (unbounded support)."""
    if isinstance(noise, GaussianZeta):
        return math.inf if noise.sigma > 0 else 0.0
    if isinstance(noise, UniformZeta):
        return noise.half_width
    if isinstance(noise, DiscreteZeta):
        return float(np.abs(noise.values).max())
    return 0.0


# ---------------------------------------------------------------------------
# Problem instance
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ProblemInstance:
    dim: int
    feature_dist: FeatureDistribution
    response_noise: ResponseNoise
    optimum: np.ndarray        # theta*
    design: np.ndarray         # Phi
    intercept: np.ndarray      # b_bar = Phi theta*
    feature_bound: float       # c_phi
    min_eig: float             # a = lambda_min(Phi)
    noise_cov: np.ndarray      # Sigma_eps

    @property
    def design_norm(self) -> float:
        """Operator norm ||Phi||."""
        return float(np.linalg.eigvalsh(self.design)[-1])

    @property
    def noise_cov_min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.noise_cov)[0])

    @property
    def noise_cov_norm(self) -> float:
        return float(np.linalg.eigvalsh(self.noise_cov)[-1])

    @property
    def noise_cov_trace(self) -> float:
        return float(np.trace(self.noise_cov))

    @property
    def degenerate(self) -> bool:
        return self.noise_cov_min_eig <= _SINGULAR_TOL * max(1.0, self.noise_cov_norm)

    @property
    def noise_abs_moment3(self) -> float:
        """E||eps||^3 = E||X||^3 E|zeta|^3, exact for all shipped generators."""
        return feature_abs_moment3(self.feature_dist, self.dim) * zeta_abs_moment3(
            self.response_noise
        )

    @property
    def noise_sup(self) -> float:
        """Essential sup of ||eps||; inf when the zeta law is unbounded."""
        zsup = zeta_sup(self.response_noise)
        return zsup * feature_norm_sup(self.feature_dist) if zsup > 0 else 0.0

    @property
    def max_step(self) -> float:
        """Largest admissible step size 1/c_phi^2."""
        return 1.0 / self.feature_bound**2


def make_instance(
    dim: int,
    feature_dist: FeatureDistribution,
    response_noise: ResponseNoise,
    theta_star,
) -> ProblemInstance:
    """Build an instance with Phi, b_bar and Sigma_eps computed in closed form.

    Raises ``ValueError`` for a singular design (finite support spanning less
    than R^d) or dimensional mismatches.
    """
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    theta = _frozen_array(theta_star, shape_hint=1)
    if theta.shape != (dim,):
        raise ValueError(f"theta_star must have shape ({dim},), got {theta.shape}")
    phi = feature_second_moment(feature_dist, dim)
    eigs = np.linalg.eigvalsh(phi)
    if eigs[0] <= _SINGULAR_TOL * max(1.0, eigs[-1]):
        raise ValueError("design matrix Phi is singular; feature support must span R^d")
    intercept = phi @ theta
    sigma_eps = zeta_variance(response_noise) * phi
    for arr in (phi, intercept, sigma_eps):
        arr.setflags(write=False)
    return ProblemInstance(
        dim=dim,
        feature_dist=feature_dist,
        response_noise=response_noise,
        optimum=theta,
        design=phi,
        intercept=intercept,
        feature_bound=feature_norm_sup(feature_dist),
        min_eig=float(eigs[0]),
        noise_cov=sigma_eps,
    )


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------
def _sample_features(dist: FeatureDistribution, dim: int, count: int, rng) -> np.ndarray:
    if isinstance(dist, ScaledRademacher):
        signs = rng.integers(0, 2, size=(count, dim)).astype(np.float64) * 2.0 - 1.0
        return signs * (dist.c_phi / math.sqrt(dim))
    if isinstance(dist, SphereUniform):
        g = rng.standard_normal((count, dim))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        return dist.c_phi * g / norms
    cum = np.cumsum(dist.probs)
    idx = np.searchsorted(cum, rng.random(count), side="right")
    return dist.points[np.minimum(idx, len(cum) - 1)]


def _sample_zeta(noise: ResponseNoise, count: int, rng) -> np.ndarray:
    if isinstance(noise, GaussianZeta):
        return noise.sigma * rng.standard_normal(count)
    if isinstance(noise, UniformZeta):
        return rng.uniform(-noise.half_width, noise.half_width, size=count)
    if isinstance(noise, DiscreteZeta):
        cum = np.cumsum(noise.probs)
        idx = np.searchsorted(cum, rng.random(count), side="right")
        return noise.values[np.minimum(idx, len(cum) - 1)]
    return np.zeros(count)


def sample_pairs(instance: ProblemInstance, rng, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``count`` i.i.d. pairs; returns (X, Y) with shapes (count, d), (count,)."""
    x = _sample_features(instance.feature_dist, instance.dim, count, rng)
    zeta = _sample_zeta(instance.response_noise, count, rng)
    y = x @ instance.optimum + zeta
    return x, y


def sample_pair(instance: ProblemInstance, rng) -> tuple[np.ndarray, float]:
    x, y = sample_pairs(instance, rng, 1)
    return x[0], float(y[0])


def noise_at_optimum(instance: ProblemInstance, x: np.ndarray, y) -> np.ndarray:
    """eps = (X X^T - Phi) theta* - (X Y - b_bar), evaluated as written.

    Accepts a single pair (shape (d,), scalar y) or a batch ((n, d), (n,)).
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    yb = np.atleast_1d(np.asarray(y, dtype=np.float64))
    t = xb @ instance.optimum
    quad = xb * t[:, None] - instance.intercept
    resp = xb * yb[:, None] - instance.intercept
    eps = quad - resp
    return eps[0] if single else eps


# ---------------------------------------------------------------------------
# Assumption validation
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class AssumptionReport:
    step_size_ok: bool          # alpha in (0, 1/c_phi^2]
    design_pd: bool             # lambda_min(Phi) > 0
    noise_nondegenerate: bool   # lambda_min(Sigma_eps) > 0
    eps_abs_moment3: float      # E||eps||^3 (finite for all shipped models)
    alpha: float
    max_step: float

    @property
    def moment3_finite(self) -> bool:
        return math.isfinite(self.eps_abs_moment3)

    @property
    def trajectory_ok(self) -> bool:
        """Enough for running paths (degenerate noise allowed)."""
        return self.step_size_ok and self.design_pd

    @property
    def ok(self) -> bool:
        return self.trajectory_ok and self.noise_nondegenerate and self.moment3_finite


def validate_assumptions(instance: ProblemInstance, alpha: float) -> AssumptionReport:
    return AssumptionReport(
        step_size_ok=0.0 < alpha <= instance.max_step * (1 + 1e-12),
        design_pd=instance.min_eig > 0,
        noise_nondegenerate=not instance.degenerate,
        eps_abs_moment3=instance.noise_abs_moment3,
        alpha=alpha,
        max_step=instance.max_step,
    )

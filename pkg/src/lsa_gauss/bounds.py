"""Explicit constants and right-hand sides of the approximation bounds.

Every constant is a direct substitution of instance quantities: d, ||Phi||,
a = lambda_min(Phi), lambda_min = lambda_min(Sigma_eps), tr Sigma_eps,
||Sigma_eps||, E||eps||^3, c_phi and the Lyapunov solution norm ||Sigma||.
The one exception is the constant multiplying the swapped-pair term, which
depends on ||{S_n}^{-1/2}|| and is therefore evaluated at the provided
(alpha, n) rather than relaxed to an n-free quantity.

The gamma factor in the swapped-pair constant is Gamma(3/2) = sqrt(pi)/2,
matching the integral bound sum sqrt(k) x^k <~ Gamma(3/2)/(-ln x)^(3/2).

The full right-hand side assembled by ``theorem1_rhs`` is

    sqrt(a)*(C1 + C2 (1 - a a_min/2)^((n-1)/2)/a * ||theta0 - theta*||)
        + C5 * a + C6 * (1 - a a_min)^(2(n+1)),

with C1 = C0 + C2' + C4 and C2 = C1' + C3 (primes marking the delta-indexed
constants). These exceed 1 for unit-scale instances, so the bound is verified
through its scaling, not its absolute value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance import (
    inv_sqrt,
    sigma_alpha_n,
    solve_lyapunov,
    spectral_norm,
)
from .model import ProblemInstance, validate_assumptions

__all__ = [
    "BoundInputs",
    "BoundReport",
    "XiStatistics",
    "compute_constants",
    "theorem1_rhs",
    "upsilon",
    "last_iter_moment_rhs",
    "j1_h1_rhs",
    "remainder_rhs",
    "step_size_for_horizon",
    "geometric_terms_check",
]

_ONE_MINUS_INV_E = 1.0 - math.exp(-1.0)
_GAMMA_3_2 = math.sqrt(math.pi) / 2.0


@dataclass(frozen=True)
class BoundInputs:
    alpha: float
    n: int
    init_offset: float       # ||theta0 - theta*||
    dim: int
    design_norm: float       # ||Phi||
    min_eig: float           # a
    noise_min_eig: float     # lambda_min(Sigma_eps)
    noise_trace: float       # tr Sigma_eps
    noise_norm: float        # ||Sigma_eps||
    noise_abs_moment3: float # E||eps||^3
    feature_bound: float     # c_phi
    lyap_norm: float         # ||Sigma||


@dataclass(frozen=True)
class BoundReport:
    c_delta: np.ndarray      # C_{Delta,0} .. C_{Delta,6}
    c1: float
    c2: float
    c_d: float
    c_d2: float
    theorem1_rhs: float
    inputs: BoundInputs


@dataclass(frozen=True)
class XiStatistics:
    upsilon: float
    xi_norm_bound: float


def _init_offset(instance: ProblemInstance, theta0) -> float:
    if theta0 is None:
        return 0.0
    theta0 = np.asarray(theta0, dtype=np.float64)
    return float(np.linalg.norm(theta0 - instance.optimum))


def _check_bound_preconditions(instance: ProblemInstance, alpha: float, n: int) -> None:
    report = validate_assumptions(instance, alpha)
    if not report.step_size_ok:
        raise ValueError(f"alpha={alpha} violates (0, 1/c_phi^2]")
    if not report.noise_nondegenerate:
        raise ValueError("degenerate noise covariance: the bound constants divide by it")
    if alpha * instance.design_norm * n < 0.5:
        raise ValueError(
            f"precondition alpha*||Phi||*n >= 1/2 fails: {alpha * instance.design_norm * n:.4g}"
        )


def remainder_constants(instance: ProblemInstance) -> tuple[float, float]:
    """(C_D, C_D2) of the swapped-pair remainder bound."""
    c = instance.feature_bound
    a = instance.min_eig
    tr = instance.noise_cov_trace
    c_d = math.sqrt(2.0 * c**6 * tr / a**2 + 4.0 * c**4 * tr / a)
    c_d2 = math.sqrt(2.0 * instance.design_norm * tr) * c
    return c_d, c_d2


def compute_constants(
    instance: ProblemInstance, alpha: float, n: int, theta0=None
) -> BoundReport:
    """All seven delta constants plus C1, C2, C_D, C_D2 and the assembled
    right-hand side at the given (alpha, n, theta0)."""
    _check_bound_preconditions(instance, alpha, n)
    d = instance.dim
    norm_phi = instance.design_norm
    a = instance.min_eig
    lam = instance.noise_cov_min_eig
    tr = instance.noise_cov_trace
    c = instance.feature_bound
    m3 = instance.noise_abs_moment3
    lyap_norm = spectral_norm(solve_lyapunov(instance.design, instance.noise_cov))
    sqrt_d = math.sqrt(d)

    inv_root_norm = spectral_norm(inv_sqrt(sigma_alpha_n(instance, alpha, n)))
    c_d, c_d2 = remainder_constants(instance)

    c0 = 259.0 * sqrt_d * norm_phi**1.5 * m3 / (a * lam**1.5 * _ONE_MINUS_INV_E**1.5)
    c1d = 2.0 * sqrt_d * norm_phi / (math.sqrt(_ONE_MINUS_INV_E) * math.sqrt(lam))
    c2d = c1d * (c * math.sqrt(norm_phi) * math.sqrt(tr) / a) * (
        1.0 + c * math.sqrt(norm_phi) / a
    )
    c3d = 2.0 * math.sqrt(2.0) * c * math.sqrt(tr) * inv_root_norm / a
    c4d = (
        2.0 * c_d * math.sqrt(norm_phi) * math.sqrt(tr)
        / (math.sqrt(_ONE_MINUS_INV_E) * math.sqrt(lam) * a)
        + 4.0 * c_d2 * _GAMMA_3_2 * math.sqrt(tr) * math.sqrt(norm_phi)
        / (math.sqrt(_ONE_MINUS_INV_E) * math.sqrt(lam) * a**1.5)
    )
    c5d = 3.0 * sqrt_d * norm_phi * instance.noise_cov_norm / (2.0 * a * lam)
    c6d = 3.0 * sqrt_d * norm_phi**3 * lyap_norm / (2.0 * a * lam)

    c_delta = np.array([c0, c1d, c2d, c3d, c4d, c5d, c6d])
    big_c1 = c0 + c2d + c4d
    big_c2 = c1d + c3d
    offset = _init_offset(instance, theta0)
    rhs = (
        math.sqrt(alpha)
        * (big_c1 + big_c2 * (1.0 - alpha * a / 2.0) ** ((n - 1) / 2.0) / alpha * offset)
        + c5d * alpha
        + c6d * (1.0 - alpha * a) ** (2 * (n + 1))
    )
    inputs = BoundInputs(
        alpha=alpha,
        n=n,
        init_offset=offset,
        dim=d,
        design_norm=norm_phi,
        min_eig=a,
        noise_min_eig=lam,
        noise_trace=tr,
        noise_norm=instance.noise_cov_norm,
        noise_abs_moment3=m3,
        feature_bound=c,
        lyap_norm=lyap_norm,
    )
    return BoundReport(
        c_delta=c_delta,
        c1=big_c1,
        c2=big_c2,
        c_d=c_d,
        c_d2=c_d2,
        theorem1_rhs=rhs,
        inputs=inputs,
    )


def theorem1_rhs(instance: ProblemInstance, alpha: float, n: int, theta0=None) -> float:
    return compute_constants(instance, alpha, n, theta0).theorem1_rhs


def upsilon(instance: ProblemInstance, alpha: float, n: int) -> XiStatistics:
    """Upsilon_n = alpha^(3/2) ||S_n^(-1/2)||^3 E||eps||^3 sum_k (1-alpha a)^(n-k),
    the third-moment statistic of the summands xi_k."""
    if instance.noise_abs_moment3 == 0.0:
        return XiStatistics(upsilon=0.0, xi_norm_bound=0.0)
    inv_root_norm = spectral_norm(inv_sqrt(sigma_alpha_n(instance, alpha, n)))
    ratio = 1.0 - alpha * instance.min_eig
    if ratio >= 1.0:
        raise ValueError("alpha * a must be positive")
    geo_sum = (1.0 - ratio**n) / (alpha * instance.min_eig) if ratio > 0 else 1.0
    ups = alpha**1.5 * inv_root_norm**3 * instance.noise_abs_moment3 * geo_sum
    return XiStatistics(
        upsilon=ups,
        xi_norm_bound=math.sqrt(alpha) * inv_root_norm * instance.noise_sup,
    )


def last_iter_moment_rhs(instance: ProblemInstance, alpha: float, k: int, theta0=None) -> float:
    """exp(-a alpha k / 2) ||theta0 - theta*|| + ||eps||_inf sqrt(alpha/a).

    Only defined for noise models with finite essential sup; Gaussian zeta is
    rejected rather than silently substituted.
    """
    sup = instance.noise_sup
    if not math.isfinite(sup):
        raise ValueError(
            "||eps||_inf is infinite for this noise model; the moment bound does not apply"
        )
    offset = _init_offset(instance, theta0)
    a = instance.min_eig
    return math.exp(-a * alpha * k / 2.0) * offset + sup * math.sqrt(alpha / a)


def j1_h1_rhs(instance: ProblemInstance, alpha: float) -> tuple[float, float]:
    """Second-moment bounds for the first two ladder rungs J^(1), H^(1)."""
    c = instance.feature_bound
    a = instance.min_eig
    root_tr = math.sqrt(instance.noise_cov_trace)
    root_phi = math.sqrt(instance.design_norm)
    j1 = c * root_phi * root_tr / a * alpha
    h1 = 2.0 * c**2 * instance.design_norm * root_tr / a**2 * alpha
    return j1, h1


def remainder_rhs(
    instance: ProblemInstance,
    alpha: float,
    n: int,
    theta0=None,
    i: int | None = None,
) -> float:
    """Bound for E^(1/2)||D_n||^2 (without ``i``) or E^(1/2)||D_n - D_n^(i)||^2.

    The decay exponent (n-i-1)/2 is undefined for i = n (the inner sum is
    empty there), so it is clamped at zero.
    """
    c = instance.feature_bound
    a = instance.min_eig
    offset = _init_offset(instance, theta0)
    if i is None:
        root = math.sqrt(instance.design_norm)
        lead = c * root * math.sqrt(instance.noise_cov_trace) / a
        return lead * (1.0 + 2.0 * c * root / a) * alpha + (
            1.0 - alpha * a / 2.0
        ) ** n * offset
    if not 1 <= i <= n:
        raise ValueError("i must lie in [1, n]")
    c_d, c_d2 = remainder_constants(instance)
    decay = (1.0 - alpha * a) ** (max(n - i - 1, 0) / 2.0)
    return (
        2.0 * c**2 * alpha * (1.0 - alpha * a / 2.0) ** (n - 1) * offset
        + c_d * alpha**1.5 * decay
        + c_d2 * alpha**2 * math.sqrt(n - i) * decay
    )


def step_size_for_horizon(n: int, c: float, a: float) -> float:
    """Horizon-matched schedule alpha = c log(n) / n (natural log).

    ``a`` is carried so callers can audit the resulting geometric factor
    (1 - alpha a)^(2(n+1)) ~ n^(-2 c a); it does not enter the formula.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    if c <= 0 or a <= 0:
        raise ValueError("c and a must be positive")
    return c * math.log(n) / n


def geometric_terms_check(
    instance: ProblemInstance, alpha: float, n: int, theta0=None
) -> tuple[bool, float, float]:
    """Self-check that both geometric terms of the main bound are subdominant.

    Returns (ok, geometric_part, budget) where the geometric part is the sum
    of the two n-dependent terms of the right-hand side and the budget is
    0.1 sqrt(alpha) C1.
    """
    report = compute_constants(instance, alpha, n, theta0)
    a = instance.min_eig
    geo = (
        math.sqrt(alpha)
        * report.c2
        * (1.0 - alpha * a / 2.0) ** ((n - 1) / 2.0)
        / alpha
        * report.inputs.init_offset
        + report.c_delta[6] * (1.0 - alpha * a) ** (2 * (n + 1))
    )
    budget = 0.1 * math.sqrt(alpha) * report.c1
    return geo <= budget, geo, budget

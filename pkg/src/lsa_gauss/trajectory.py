"""SGD error recursion and its perturbation-expansion decompositions.

Everything here works on a single recorded path of (X_k, eps_k). The error
recursion is

    e_k = (I - alpha X_k X_k^T) e_{k-1} - alpha eps_k,      e_0 = theta_0 - theta*,

and splits exactly, path by path, into

    e_n = Gamma_{1:n} e_0  +  J^(0)_n + J^(1)_n + ... + J^(L)_n + H^(L)_n,

where Gamma products carry the initial condition, J^(0) is the linear proxy
driven by (I - alpha Phi), and each further rung exchanges one matrix
fluctuation (X_k X_k^T - Phi) against the rung below. The identities hold in
exact arithmetic, so tests assert them to float roundoff. All rungs must be
driven by one shared path; the kernels enforce that by construction.

Coupled pairs rerun the ladder with the data at one index swapped for an
independent copy, which is the sensitivity statistic the remainder bounds
control.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import get_kernels
from .model import ProblemInstance, noise_at_optimum, sample_pairs, validate_assumptions

__all__ = [
    "StepConfig",
    "DecompositionLadder",
    "CoupledResult",
    "run_sgd",
    "run_linear_proxy",
    "run_ladder",
    "run_coupled",
    "gamma_apply",
    "g_apply",
    "draw_path",
]


@dataclass(frozen=True)
class StepConfig:
    alpha: float
    horizon: int
    theta0: np.ndarray

    def __post_init__(self):
        theta0 = np.array(self.theta0, dtype=np.float64)
        theta0.setflags(write=False)
        object.__setattr__(self, "theta0", theta0)
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class DecompositionLadder:
    depth: int
    transient: np.ndarray       # Gamma_{1:n} (theta_0 - theta*)
    j_terms: tuple              # (J^(0)_n, ..., J^(depth)_n)
    h_tail: np.ndarray          # H^(depth)_n
    final_error: np.ndarray     # theta_n - theta*

    @property
    def w_term(self) -> np.ndarray:
        """Leading linear statistic W_n = J^(0)_n."""
        return self.j_terms[0]

    @property
    def d_term(self) -> np.ndarray:
        """Remainder D_n = (theta_n - theta*) - W_n."""
        return self.final_error - self.w_term

    def reconstruction_gap(self) -> float:
        total = self.transient + sum(self.j_terms) + self.h_tail
        return float(np.linalg.norm(self.final_error - total))


@dataclass(frozen=True)
class CoupledResult:
    swap_index: int
    error: np.ndarray
    error_swapped: np.ndarray
    d_diff: np.ndarray          # D_n - D_n^(i)


def _check_step(instance: ProblemInstance, config: StepConfig) -> None:
    report = validate_assumptions(instance, config.alpha)
    if not report.trajectory_ok:
        raise ValueError(
            f"step size {config.alpha} violates alpha <= 1/c_phi^2 = {report.max_step}"
        )
    if config.theta0.shape != (instance.dim,):
        raise ValueError("theta0 has the wrong dimension")


def draw_path(instance: ProblemInstance, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Record one path: features X (n, d) and noises eps (n, d)."""
    x, y = sample_pairs(instance, rng, n)
    return x, noise_at_optimum(instance, x, y)


def run_sgd(instance: ProblemInstance, config: StepConfig, rng) -> np.ndarray:
    """Errors theta_k - theta* for k = 0..n, shape (n+1, d)."""
    _check_step(instance, config)
    x, eps = draw_path(instance, config.horizon, rng)
    e0 = config.theta0 - instance.optimum
    hist = get_kernels().sgd_error_history(
        x[None, :, :], eps[None, :, :], config.alpha, e0
    )
    return hist[0]


def run_linear_proxy(
    instance: ProblemInstance, config: StepConfig, noise_sequence: np.ndarray
) -> np.ndarray:
    """J^(0)_n = -alpha sum_k (I - alpha Phi)^(n-k) eps_k for the given noises."""
    eps = np.ascontiguousarray(noise_sequence, dtype=np.float64)
    if eps.shape != (config.horizon, instance.dim):
        raise ValueError("noise_sequence must have shape (horizon, dim)")
    return get_kernels().linear_proxy_paths(eps[None, :, :], config.alpha, instance.design)[0]


def _ladder_from_path(
    instance: ProblemInstance,
    config: StepConfig,
    x: np.ndarray,
    eps: np.ndarray,
    depth: int,
) -> DecompositionLadder:
    e0 = config.theta0 - instance.optimum
    final, transient, j_terms, h_tail = get_kernels().ladder_paths(
        x[None, :, :], eps[None, :, :], config.alpha, instance.design, e0, depth
    )
    return DecompositionLadder(
        depth=depth,
        transient=transient[0],
        j_terms=tuple(j_terms[lev, 0] for lev in range(depth + 1)),
        h_tail=h_tail[0],
        final_error=final[0],
    )


def run_ladder(
    instance: ProblemInstance, config: StepConfig, depth: int, rng
) -> DecompositionLadder:
    """All decomposition components from one shared sample path."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    _check_step(instance, config)
    x, eps = draw_path(instance, config.horizon, rng)
    return _ladder_from_path(instance, config, x, eps, depth)


def run_coupled(
    instance: ProblemInstance,
    config: StepConfig,
    swap_index: int,
    rng,
    depth: int = 1,
) -> CoupledResult:
    """Coupled pair: identical randomness except an independent copy at
    ``swap_index`` (1-based). The swapped data point is drawn from the same
    stream right after the path, so replay is exact for k < i."""
    n = config.horizon
    if not 1 <= swap_index <= n:
        raise ValueError("swap_index must lie in [1, horizon]")
    _check_step(instance, config)
    x, eps = draw_path(instance, n, rng)
    x_swap, eps_swap = draw_path(instance, 1, rng)
    x2 = x.copy()
    eps2 = eps.copy()
    x2[swap_index - 1] = x_swap[0]
    eps2[swap_index - 1] = eps_swap[0]
    base = _ladder_from_path(instance, config, x, eps, depth)
    swapped = _ladder_from_path(instance, config, x2, eps2, depth)
    return CoupledResult(
        swap_index=swap_index,
        error=base.final_error,
        error_swapped=swapped.final_error,
        d_diff=base.d_term - swapped.d_term,
    )


def gamma_apply(instance: ProblemInstance, alpha: float, m: int, k: int, u, rng) -> np.ndarray:
    """Apply the random product Gamma_{m:k} = prod_{i=m}^{k} (I - alpha X_i X_i^T)
    to u; the empty product (m > k) is the identity."""
    u = np.array(u, dtype=np.float64)
    if m > k:
        return u
    x, _ = sample_pairs(instance, rng, k - m + 1)
    for i in range(k - m + 1):
        u = u - alpha * x[i] * float(x[i] @ u)
    return u


def g_apply(instance: ProblemInstance, alpha: float, m: int, k: int, u) -> np.ndarray:
    """Apply the deterministic product G_{m:k} = (I - alpha Phi)^(k-m+1) to u."""
    u = np.array(u, dtype=np.float64)
    if m > k:
        return u
    for _ in range(k - m + 1):
        u = u - alpha * (instance.design @ u)
    return u

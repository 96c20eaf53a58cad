"""The three covariance matrices and their matrix equations.

For the linear proxy J^(0)_n, the covariance of J^(0)_n / sqrt(alpha) is

    S_n = alpha * sum_{k=1}^{n} (I - alpha Phi)^(n-k) Sigma_eps (I - alpha Phi)^(n-k),

computed by the recursion S_n = (I - alpha Phi) S_{n-1} (I - alpha Phi) +
alpha Sigma_eps. Its n -> infinity limit S solves the discrete Riccati
equation Phi S + S Phi - alpha Phi S Phi = Sigma_eps, and as alpha -> 0 that
limit approaches the Lyapunov solution of Phi S + S Phi = Sigma_eps. Both
matrix equations are solved directly on the vectorized d^2 x d^2 Kronecker
system (desk scale is d <= 50); the fixed-point iteration of the recursion is
kept as an independent oracle.

Two textbook-style bounds on these matrices are commonly stated in forms that
fail on small scalar cases; both are reported side by side with corrected
versions:

* the gap ||S_n - S||: the stated geometric exponent 2(n+1) overshoots (the
  tail of the defining series starts at exponent n, giving 2n);
* the lower bound lambda_min(S_n) >= (1 - 1/e) lambda_min(Sigma_eps)/||Phi||:
  the derivation drops a factor (2 - alpha ||Phi||) in (1, 2], so only the
  halved constant is guaranteed.

``prop1_gap`` and ``covariance_lower_bound`` return both constants so callers
can pin the discrepancy explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ProblemInstance, validate_assumptions

__all__ = [
    "CovarianceTriple",
    "Prop1Gap",
    "Prop2Gap",
    "LowerBoundReport",
    "spectral_norm",
    "inv_sqrt",
    "noise_covariance_n",
    "riccati_limit",
    "riccati_fixed_point",
    "solve_lyapunov",
    "sigma_alpha_n",
    "sigma_alpha_limit",
    "covariance_triple",
    "prop1_gap",
    "prop2_gap",
    "covariance_lower_bound",
    "gaussian_comparison_bound",
]

_EIG_FLOOR = 1e-12


def spectral_norm(a: np.ndarray) -> float:
    """Operator norm via eigendecomposition of the symmetrized matrix."""
    sym = 0.5 * (a + a.T)
    return float(np.max(np.abs(np.linalg.eigvalsh(sym))))


def _require_spd(a: np.ndarray, name: str) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-10 * max(1.0, spectral_norm(a))):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(a)[0] <= 0:
        raise ValueError(f"{name} must be positive definite")


def inv_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root A^(-1/2).

    Eigenvalues below 1e-12 * ||A|| are an error, never clamped silently.
    """
    sym = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(sym)
    floor = _EIG_FLOOR * max(w[-1], 1e-300)
    if w[0] < floor:
        raise np.linalg.LinAlgError(
            f"matrix is numerically singular: min eigenvalue {w[0]:.3e} below floor {floor:.3e}"
        )
    return (v / np.sqrt(w)) @ v.T


# ---------------------------------------------------------------------------
# Matrix-level solvers
# ---------------------------------------------------------------------------
def noise_covariance_n(
    phi: np.ndarray, sigma_eps: np.ndarray, alpha: float, n: int
) -> np.ndarray:
    """S_n by the recursion S_k = (I - a Phi) S_{k-1} (I - a Phi) + a Sigma_eps."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = phi.shape[0]
    contraction = np.eye(d) - alpha * phi
    s = np.zeros((d, d))
    for _ in range(n):
        s = contraction @ s @ contraction + alpha * sigma_eps
    return 0.5 * (s + s.T)


def riccati_limit(phi: np.ndarray, sigma_eps: np.ndarray, alpha: float) -> np.ndarray:
    """Solve Phi S + S Phi - alpha Phi S Phi = Sigma_eps by the vectorized
    Kronecker system (size d^2)."""
    d = phi.shape[0]
    eye = np.eye(d)
    system = np.kron(eye, phi) + np.kron(phi, eye) - alpha * np.kron(phi, phi)
    try:
        vec = np.linalg.solve(system, sigma_eps.reshape(-1))
    except np.linalg.LinAlgError as err:  # cannot occur under A2 + A3
        raise np.linalg.LinAlgError(
            "vectorized Riccati system is singular; inputs violate the"
            " contraction assumptions"
        ) from err
    s = vec.reshape(d, d)
    return 0.5 * (s + s.T)


def riccati_fixed_point(
    phi: np.ndarray,
    sigma_eps: np.ndarray,
    alpha: float,
    tol: float = 1e-13,
    max_iter: int = 2_000_000,
) -> np.ndarray:
    """Independent oracle: iterate S <- (I-aPhi) S (I-aPhi) + a Sigma_eps from 0."""
    d = phi.shape[0]
    contraction = np.eye(d) - alpha * phi
    scale = max(spectral_norm(sigma_eps), 1e-300)
    s = np.zeros((d, d))
    for _ in range(max_iter):
        s_next = contraction @ s @ contraction + alpha * sigma_eps
        if spectral_norm(s_next - s) <= tol * scale:
            return 0.5 * (s_next + s_next.T)
        s = s_next
    raise RuntimeError("fixed-point iteration did not converge")


def solve_lyapunov(phi: np.ndarray, sigma_eps: np.ndarray) -> np.ndarray:
    """Solve Phi S + S Phi = Sigma_eps for SPD Phi."""
    phi = np.asarray(phi, dtype=np.float64)
    sigma_eps = np.asarray(sigma_eps, dtype=np.float64)
    _require_spd(phi, "Phi")
    d = phi.shape[0]
    eye = np.eye(d)
    system = np.kron(eye, phi) + np.kron(phi, eye)
    s = np.linalg.solve(system, sigma_eps.reshape(-1)).reshape(d, d)
    return 0.5 * (s + s.T)


def lyapunov_residual(phi: np.ndarray, s: np.ndarray, sigma_eps: np.ndarray) -> float:
    return spectral_norm(phi @ s + s @ phi - sigma_eps)


def riccati_residual(
    phi: np.ndarray, s: np.ndarray, sigma_eps: np.ndarray, alpha: float
) -> float:
    return spectral_norm(phi @ s + s @ phi - alpha * phi @ s @ phi - sigma_eps)


# ---------------------------------------------------------------------------
# Instance-level operations
# ---------------------------------------------------------------------------
def _check_a3(instance: ProblemInstance, alpha: float) -> None:
    if not validate_assumptions(instance, alpha).step_size_ok:
        raise ValueError(f"alpha={alpha} violates (0, 1/c_phi^2] for this instance")


def sigma_alpha_n(instance: ProblemInstance, alpha: float, n: int) -> np.ndarray:
    _check_a3(instance, alpha)
    return noise_covariance_n(instance.design, instance.noise_cov, alpha, n)


def sigma_alpha_limit(instance: ProblemInstance, alpha: float) -> np.ndarray:
    _check_a3(instance, alpha)
    return riccati_limit(instance.design, instance.noise_cov, alpha)


@dataclass(frozen=True)
class CovarianceTriple:
    sigma_alpha_n: np.ndarray
    sigma_alpha: np.ndarray
    sigma_lyap: np.ndarray
    residual_riccati: float
    residual_lyapunov: float


def covariance_triple(instance: ProblemInstance, alpha: float, n: int) -> CovarianceTriple:
    s_n = sigma_alpha_n(instance, alpha, n)
    s_lim = sigma_alpha_limit(instance, alpha)
    s_lyap = solve_lyapunov(instance.design, instance.noise_cov)
    return CovarianceTriple(
        sigma_alpha_n=s_n,
        sigma_alpha=s_lim,
        sigma_lyap=s_lyap,
        residual_riccati=riccati_residual(instance.design, s_lim, instance.noise_cov, alpha),
        residual_lyapunov=lyapunov_residual(instance.design, s_lyap, instance.noise_cov),
    )


@dataclass(frozen=True)
class Prop1Gap:
    measured: float          # ||S_n - S_limit||
    paper_bound: float       # (||Sigma_eps||/a) (1 - alpha a)^(2(n+1)), the stated form
    corrected_bound: float   # (||Sigma_eps||/a) (1 - alpha a)^(2n)


def prop1_gap(instance: ProblemInstance, alpha: float, n: int) -> Prop1Gap:
    s_n = sigma_alpha_n(instance, alpha, n)
    s_lim = sigma_alpha_limit(instance, alpha)
    ratio = 1.0 - alpha * instance.min_eig
    scale = spectral_norm(instance.noise_cov) / instance.min_eig
    return Prop1Gap(
        measured=spectral_norm(s_n - s_lim),
        paper_bound=scale * ratio ** (2 * (n + 1)),
        corrected_bound=scale * ratio ** (2 * n),
    )


@dataclass(frozen=True)
class Prop2Gap:
    measured: float          # ||S_limit - S_lyap||
    bound: float             # alpha ||Phi||^2 ||S_lyap|| / a


def prop2_gap(instance: ProblemInstance, alpha: float) -> Prop2Gap:
    s_lim = sigma_alpha_limit(instance, alpha)
    s_lyap = solve_lyapunov(instance.design, instance.noise_cov)
    bound = alpha * instance.design_norm**2 * spectral_norm(s_lyap) / instance.min_eig
    return Prop2Gap(measured=spectral_norm(s_lim - s_lyap), bound=bound)


@dataclass(frozen=True)
class LowerBoundReport:
    measured_min_eig: float
    paper_const: float       # (lambda_min(Sigma_eps)/||Phi||)(1 - 1/e), the stated form
    corrected_const: float   # half of the above
    precondition_ok: bool    # alpha ||Phi|| n >= 1/2


def covariance_lower_bound(instance: ProblemInstance, alpha: float, n: int) -> LowerBoundReport:
    s_n = sigma_alpha_n(instance, alpha, n)
    paper = (instance.noise_cov_min_eig / instance.design_norm) * (1.0 - math.exp(-1.0))
    return LowerBoundReport(
        measured_min_eig=float(np.linalg.eigvalsh(s_n)[0]),
        paper_const=paper,
        corrected_const=0.5 * paper,
        precondition_ok=alpha * instance.design_norm * n >= 0.5,
    )


def gaussian_comparison_bound(sigma1: np.ndarray, sigma2: np.ndarray) -> float:
    """(3/2) ||Sigma1^(-1/2) Sigma2 Sigma1^(-1/2) - I||_F, the quantity the
    Gaussian comparison step assembles."""
    sigma1 = np.asarray(sigma1, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    _require_spd(sigma1, "Sigma1")
    root = inv_sqrt(sigma1)
    inner = root @ sigma2 @ root - np.eye(sigma1.shape[0])
    return 1.5 * float(np.linalg.norm(inner, ord="fro"))

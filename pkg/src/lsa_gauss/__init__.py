"""Constant-step-size SGD for online linear regression, together with the
covariance solvers, explicit bound constants and Monte Carlo distance
surrogates needed to verify its Gaussian approximation at desk scale."""

from .backend import active_backend
from .model import (
    DiscreteZeta,
    FiniteSupport,
    GaussianZeta,
    NoNoise,
    ProblemInstance,
    ScaledRademacher,
    SphereUniform,
    UniformZeta,
    make_instance,
    noise_at_optimum,
    sample_pair,
    sample_pairs,
    validate_assumptions,
)
from .trajectory import (
    CoupledResult,
    DecompositionLadder,
    StepConfig,
    g_apply,
    gamma_apply,
    run_coupled,
    run_ladder,
    run_linear_proxy,
    run_sgd,
)
from .covariance import (
    CovarianceTriple,
    covariance_lower_bound,
    covariance_triple,
    gaussian_comparison_bound,
    prop1_gap,
    prop2_gap,
    riccati_fixed_point,
    riccati_limit,
    sigma_alpha_limit,
    sigma_alpha_n,
    solve_lyapunov,
)
from .bounds import (
    BoundReport,
    XiStatistics,
    compute_constants,
    j1_h1_rhs,
    last_iter_moment_rhs,
    remainder_rhs,
    step_size_for_horizon,
    theorem1_rhs,
    upsilon,
)
from .distance import (
    DistanceEstimate,
    ball_distance,
    convex_surrogate,
    ks_1d,
    projected_ks,
    whiten,
)
from .experiments import (
    ExperimentConfig,
    SweepResult,
    SweepRow,
    emit,
    fit_loglog_slope,
    rate_sweep,
    run_replicas,
    verify_suite,
)

__version__ = "0.1.0"

"""Acceptance suite: one test per criterion, one printed pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s`. The Monte Carlo criteria use
the seeds fixed below; every tolerance is stated inline.
"""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from lsa_gauss.backend import get_kernels
from lsa_gauss.bounds import (
    j1_h1_rhs,
    last_iter_moment_rhs,
    remainder_rhs,
)
from lsa_gauss.covariance import (
    covariance_lower_bound,
    inv_sqrt,
    lyapunov_residual,
    prop1_gap,
    prop2_gap,
    riccati_fixed_point,
    riccati_limit,
    riccati_residual,
    sigma_alpha_limit,
    sigma_alpha_n,
    solve_lyapunov,
    spectral_norm,
)
from lsa_gauss.distance import (
    ball_distance,
    convex_surrogate,
    dkw_halfwidth,
    projected_ks,
)
from lsa_gauss.experiments import (
    ExperimentConfig,
    derive_stream,
    fit_loglog_slope,
    rate_sweep,
    rms_and_se,
    simulate_coupled,
    simulate_ladder,
    verify_suite,
)
from lsa_gauss.model import noise_at_optimum, sample_pairs
from lsa_gauss.presets import rademacher_gaussian, s1, s1_skew, skew2
from tests.conftest import stream

SEED = 60601
R_MC = 20_000


@contextmanager
def criterion(num: int, desc: str):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {num:02d} FAIL: {desc}")
        raise
    print(f"\nACCEPTANCE {num:02d} PASS: {desc} ({time.perf_counter() - started:.1f}s)")


def dim_instances():
    return {1: s1_skew(), 2: rademacher_gaussian(2), 5: rademacher_gaussian(5)}


def random_spd(dim, rng, lo=0.2, hi=3.0):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return (q * rng.uniform(lo, hi, size=dim)) @ q.T


def test_criterion_01_lyapunov_riccati_exactness():
    with criterion(1, "Lyapunov/Riccati solver exactness on 50 random SPD systems"):
        started = time.perf_counter()
        rng = stream(SEED, 1)
        count = 0
        for dim in (1, 2, 5, 10, 20):
            for _ in range(10):
                phi = random_spd(dim, rng)
                sig = random_spd(dim, rng, lo=0.1, hi=2.0)
                alpha = float(rng.uniform(0.3, 1.0)) / np.linalg.eigvalsh(phi)[-1]
                scale = spectral_norm(sig)
                lyap = solve_lyapunov(phi, sig)
                assert lyapunov_residual(phi, lyap, sig) <= 1e-10 * scale
                ric = riccati_limit(phi, sig, alpha)
                assert riccati_residual(phi, ric, sig, alpha) <= 1e-10 * scale
                oracle = riccati_fixed_point(phi, sig, alpha)
                assert spectral_norm(ric - oracle) <= 1e-9 * (1.0 + spectral_norm(ric))
                count += 1
        assert count == 50
        assert time.perf_counter() - started < 10.0


def test_criterion_02_scalar_closed_forms():
    with criterion(2, "scalar closed forms for the three covariances at 1e-12"):
        inst = s1()
        for alpha in (0.5, 0.1, 0.01):
            assert abs(sigma_alpha_limit(inst, alpha)[0, 0] - 1.0 / (2.0 - alpha)) <= 1e-12
            assert abs(solve_lyapunov(inst.design, inst.noise_cov)[0, 0] - 0.5) <= 1e-12
            for n in (1, 2, 10, 100):
                expected = alpha * (1.0 - (1.0 - alpha) ** (2 * n)) / (1.0 - (1.0 - alpha) ** 2)
                assert abs(sigma_alpha_n(inst, alpha, n)[0, 0] - expected) <= 1e-12


def test_criterion_03_proposition_pins_and_corrected_grid():
    with criterion(3, "documented counterexamples reproduced; corrected bounds on grid"):
        started = time.perf_counter()
        inst1 = s1()
        pin1 = prop1_gap(inst1, 0.5, 2)
        assert pin1.measured == pytest.approx(0.0416667, abs=1e-7)
        assert pin1.paper_bound == pytest.approx(0.015625, abs=1e-12)
        assert pin1.measured > pin1.paper_bound       # stated exponent violated
        assert pin1.measured <= pin1.corrected_bound

        pin_lb = covariance_lower_bound(inst1, 0.5, 2)
        assert pin_lb.measured_min_eig == pytest.approx(0.625, abs=1e-12)
        assert pin_lb.paper_const == pytest.approx(0.63212, abs=1e-5)
        assert pin_lb.measured_min_eig < pin_lb.paper_const   # stated constant violated
        assert pin_lb.measured_min_eig >= pin_lb.corrected_const

        for dim, inst in dim_instances().items():
            for alpha in (0.5, 0.1, 0.01):
                if alpha > inst.max_step:
                    continue   # A3 filter
                for n in (10, 100, 1000):
                    gap = prop1_gap(inst, alpha, n)
                    assert gap.measured <= gap.corrected_bound + 1e-12
                    lb = covariance_lower_bound(inst, alpha, n)
                    if lb.precondition_ok:
                        assert lb.measured_min_eig >= lb.corrected_const - 1e-12
        assert time.perf_counter() - started < 30.0


def test_criterion_04_prop2_inequality_and_slope():
    with criterion(4, "Riccati-to-Lyapunov gap bound and its O(alpha) slope"):
        for dim, inst in dim_instances().items():
            for alpha in (0.5, 0.1, 0.01):
                if alpha > inst.max_step:
                    continue
                gap = prop2_gap(inst, alpha)
                assert gap.measured <= gap.bound + 1e-14
        alphas = [2.0**-k for k in range(3, 11)]
        for inst in (s1(), rademacher_gaussian(2)):
            slope = fit_loglog_slope(alphas, [prop2_gap(inst, a).measured for a in alphas])
            assert 0.9 <= slope <= 1.1


def test_criterion_05_decomposition_identities():
    with criterion(5, "per-path ladder identity at 1e-10 and exact coupled pairs"):
        started = time.perf_counter()
        kernels = get_kernels()
        n = 120
        total_paths = 0
        for dim, inst in dim_instances().items():
            alpha = 0.5 * inst.max_step
            e0 = np.eye(inst.dim)[0]
            for depth in (0, 1, 2):
                batch = 112
                x = np.empty((batch, n, inst.dim))
                eps = np.empty((batch, n, inst.dim))
                for b in range(batch):
                    rng = derive_stream(SEED, 50 + dim, b, depth)
                    xs, ys = sample_pairs(inst, rng, n)
                    x[b] = xs
                    eps[b] = noise_at_optimum(inst, xs, ys)
                final, transient, j_terms, h_tail = kernels.ladder_paths(
                    x, eps, alpha, inst.design, e0, depth
                )
                recon = transient + j_terms.sum(axis=0) + h_tail
                gaps = np.linalg.norm(final - recon, axis=1)
                scale = 1.0 + np.linalg.norm(final, axis=1)
                assert np.all(gaps <= 1e-10 * scale)
                total_paths += batch
        assert total_paths >= 1000

        # coupled-pair identity, exact per path
        inst = dim_instances()[2]
        alpha, horizon = 0.4, 60
        for p in range(100):
            rng = derive_stream(SEED, 60, p, 0)
            xs, ys = sample_pairs(inst, rng, horizon)
            eps = noise_at_optimum(inst, xs, ys)
            xs2, ys2 = sample_pairs(inst, rng, 1)
            eps2 = noise_at_optimum(inst, xs2, ys2)
            i = 1 + p % horizon
            xb, eb = xs.copy(), eps.copy()
            xb[i - 1] = xs2[0]
            eb[i - 1] = eps2[0]
            e0 = np.eye(2)[0][None, :].repeat(1, axis=0)[0]
            h1 = kernels.sgd_error_history(xs[None], eps[None], alpha, e0)[0]
            h2 = kernels.sgd_error_history(xb[None], eb[None], alpha, e0)[0]
            np.testing.assert_array_equal(h1[: i], h2[: i])
            lhs = h1[i] - h2[i]
            rhs = alpha * (
                (np.outer(xs2[0], xs2[0]) - np.outer(xs[i - 1], xs[i - 1])) @ h1[i - 1]
            ) - alpha * (eps[i - 1] - eps2[0])
            assert np.abs(lhs - rhs).max() <= 1e-12 * (1.0 + np.linalg.norm(h1[i - 1]))
        assert time.perf_counter() - started < 20.0


def test_criterion_06_moment_and_remainder_bound_mc():
    with criterion(6, "moment/ladder/remainder MC vs bounds within 4 standard errors"):
        started = time.perf_counter()
        inst1 = s1()
        theta0 = {1: inst1.optimum + 1.0}
        # last-iterate moment bound on the unit scalar instance
        for alpha in (0.1, 0.01):
            for k in (10, 100, 1000):
                stats = simulate_ladder(inst1, alpha, k, theta0[1], SEED, 100 + k, R_MC, depth=1)
                rms, se = rms_and_se(stats.final_sq)
                rhs = last_iter_moment_rhs(inst1, alpha, k, theta0[1])
                assert rms <= rhs + 4.0 * se, (alpha, k, rms, rhs, se)

        # ladder and remainder bounds on s1 and the 2-d Rademacher instance
        for tag, inst in (("s1", inst1), ("rad2", rademacher_gaussian(2))):
            t0 = inst.optimum + np.eye(inst.dim)[0]
            alpha, n = 0.1, 100
            stats = simulate_ladder(inst, alpha, n, t0, SEED, 200, R_MC, depth=1)
            j1_bound, h1_bound = j1_h1_rhs(inst, alpha)
            rms, se = rms_and_se(stats.j1_sq)
            assert rms <= j1_bound + 4.0 * se, (tag, "J1", rms, j1_bound)
            rms, se = rms_and_se(stats.h_sq)
            assert rms <= h1_bound + 4.0 * se, (tag, "H1", rms, h1_bound)
            rms, se = rms_and_se(stats.d_sq)
            d_bound = remainder_rhs(inst, alpha, n, t0)
            assert rms <= d_bound + 4.0 * se, (tag, "D", rms, d_bound)
            for i in (1, n // 2, n - 1):
                sq = simulate_coupled(inst, alpha, n, t0, SEED, 300 + i, R_MC, i)
                rms, se = rms_and_se(sq)
                swap_bound = remainder_rhs(inst, alpha, n, t0, i=i)
                assert rms <= swap_bound + 4.0 * se, (tag, f"D-D^({i})", rms, swap_bound)
        assert time.perf_counter() - started < 300.0


def test_criterion_07_whitening_identity():
    with criterion(7, "whitened linear statistic has identity covariance (5 se)"):
        kernels = get_kernels()
        for dim, inst in dim_instances().items():
            alpha, n = 0.1, 100
            white = inv_sqrt(sigma_alpha_n(inst, alpha, n))
            w = np.empty((R_MC, dim))
            chunk = 2000
            for start in range(0, R_MC, chunk):
                rows = range(start, min(start + chunk, R_MC))
                eps = np.empty((len(rows), n, dim))
                for row, r in enumerate(rows):
                    rng = derive_stream(SEED, 400 + dim, r, 0)
                    xs, ys = sample_pairs(inst, rng, n)
                    eps[row] = noise_at_optimum(inst, xs, ys)
                j0 = kernels.linear_proxy_paths(eps, alpha, inst.design)
                w[start : start + len(rows)] = j0 @ white / math.sqrt(alpha)
            emp = w.T @ w / R_MC
            se = np.std(w[:, :, None] * w[:, None, :], axis=0, ddof=1) / math.sqrt(R_MC)
            assert np.all(np.abs(emp - np.eye(dim)) <= 5.0 * se), (dim, emp)


def test_criterion_08_rate_scaling():
    with criterion(8, "rate sweep slope within [0.35, 0.65], all points conclusive"):
        started = time.perf_counter()
        for tag, inst in (("s1_skew", s1_skew()), ("skew2", skew2())):
            grid = tuple(
                (a, math.ceil(3.0 * math.log(1.0 / a) / (a * inst.min_eig)))
                for a in (0.1, 0.05, 0.025, 0.0125, 0.00625)
            )
            config = ExperimentConfig(
                instance=inst,
                grid=grid,
                replicas=R_MC,
                num_directions=64,
                dkw_delta=0.05,
                master_seed=SEED,
                bootstrap_resamples=20,
            )
            result = rate_sweep(config)
            values = [f"{row.distance:.4f}" for row in result.rows]
            print(f"  {tag}: slope={result.slope:.3f} ci={result.slope_ci} values={values}")
            assert result.all_conclusive, (tag, values)
            assert 0.35 <= result.slope <= 0.65, (tag, result.slope)
        assert time.perf_counter() - started < 900.0


def test_criterion_09_distance_soundness():
    with criterion(9, "distance surrogate soundness: self-distance, symmetry, mean shift"):
        # self-distance within the union-adjusted DKW band at 1% failure
        m, r = 64, R_MC
        sigma = np.array([[1.3, -0.4], [-0.4, 0.9]])
        samples = stream(SEED, 9, 0).standard_normal((r, 2)) @ np.linalg.cholesky(sigma).T
        est = convex_surrogate(samples, sigma, m, stream(SEED, 9, 1), delta=0.01)
        assert est.value <= dkw_halfwidth(r, 0.01 / (m + 1))

        # exact scale equivariance of the projected statistic
        base = projected_ks(samples, sigma, 32, stream(SEED, 9, 2))
        scaled = projected_ks(2.0 * samples, 4.0 * sigma, 32, stream(SEED, 9, 2))
        assert abs(base.value - scaled.value) <= 1e-12

        # exact invariance of the ball statistic under joint linear maps
        amap = np.array([[0.8, -0.5], [0.3, 1.1]])
        ball_a = ball_distance(samples, sigma)
        ball_b = ball_distance(samples @ amap.T, amap @ sigma @ amap.T)
        assert abs(ball_a.value - ball_b.value) <= 1e-9

        # mean-shifted Gaussian: optimal halfspace value 0.38292 +- 0.01
        shifted = stream(SEED, 9, 3).standard_normal((100_000, 2))
        shifted[:, 0] += 1.0
        est = projected_ks(shifted, np.eye(2), 64, stream(SEED, 9, 4))
        assert abs(est.value - 0.38292) <= 0.01


def test_criterion_10_reproducibility(tmp_path):
    with criterion(10, "verify --quick twice with one seed: byte-identical reports"):
        config_doc = {
            "instance": {
                "dim": 1,
                "feature_dist": {
                    "kind": "finite_support",
                    "params": {"points": [[1.0]], "probs": [1.0]},
                },
                "response_noise": {
                    "kind": "discrete",
                    "params": {"values": [1.0, -1.0], "probs": [0.5, 0.5]},
                },
                "theta_star": [0.0],
            },
            "grid": [[0.1, 50]],
            "replicas": 300,
            "master_seed": SEED,
        }
        config = ExperimentConfig.from_json(json.dumps(config_doc))
        report_a = verify_suite(config, quick=True)
        report_b = verify_suite(config, quick=True)
        text_a = report_a.to_json(include_wall_time=False)
        text_b = report_b.to_json(include_wall_time=False)
        assert text_a.encode() == text_b.encode()
        assert report_a.exit_code == 0, report_a.counts

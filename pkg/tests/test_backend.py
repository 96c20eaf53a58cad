import numpy as np
import pytest

from lsa_gauss import _kernels_numpy
from lsa_gauss.backend import active_backend, get_kernels, requested_backend

try:
    from lsa_gauss import _kernels_numba
except ImportError:
    _kernels_numba = None

needs_numba = pytest.mark.skipif(_kernels_numba is None, reason="numba not installed")


def random_inputs(batch=32, n=25, d=3, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((batch, n, d))
    eps = rng.standard_normal((batch, n, d))
    phi = np.diag(rng.uniform(0.2, 1.0, size=d))
    e0 = rng.standard_normal(d)
    return x, eps, 0.3, phi, e0


def test_env_flag_selection(monkeypatch):
    monkeypatch.setenv("LSA_GAUSS_BACKEND", "numpy")
    assert active_backend() == "numpy"
    assert get_kernels() is _kernels_numpy
    monkeypatch.setenv("LSA_GAUSS_BACKEND", "bogus")
    with pytest.raises(ValueError):
        requested_backend()


@needs_numba
def test_env_flag_numba(monkeypatch):
    monkeypatch.setenv("LSA_GAUSS_BACKEND", "numba")
    assert get_kernels() is _kernels_numba
    monkeypatch.delenv("LSA_GAUSS_BACKEND", raising=False)
    assert active_backend() == "numba"


@needs_numba
@pytest.mark.parametrize("d", [1, 2, 5])
def test_backends_agree_sgd(d):
    x, eps, alpha, phi, e0 = random_inputs(d=d, seed=d)
    np.testing.assert_allclose(
        _kernels_numpy.sgd_errors(x, eps, alpha, e0),
        _kernels_numba.sgd_errors(x, eps, alpha, e0),
        rtol=1e-12,
        atol=1e-13,
    )
    np.testing.assert_allclose(
        _kernels_numpy.sgd_error_history(x, eps, alpha, e0),
        _kernels_numba.sgd_error_history(x, eps, alpha, e0),
        rtol=1e-12,
        atol=1e-13,
    )


@needs_numba
@pytest.mark.parametrize("depth", [0, 1, 3])
def test_backends_agree_ladder(depth):
    x, eps, alpha, phi, e0 = random_inputs(seed=depth + 10)
    got_np = _kernels_numpy.ladder_paths(x, eps, alpha, phi, e0, depth)
    got_nb = _kernels_numba.ladder_paths(x, eps, alpha, phi, e0, depth)
    for a, b in zip(got_np, got_nb):
        np.testing.assert_allclose(np.asarray(a), np.asarray(b), rtol=1e-12, atol=1e-13)


@needs_numba
def test_backends_agree_linear_proxy():
    _, eps, alpha, phi, _ = random_inputs(seed=42)
    np.testing.assert_allclose(
        _kernels_numpy.linear_proxy_paths(eps, alpha, phi),
        _kernels_numba.linear_proxy_paths(eps, alpha, phi),
        rtol=1e-12,
        atol=1e-13,
    )


def test_numpy_history_consistent_with_final():
    x, eps, alpha, phi, e0 = random_inputs(seed=3)
    hist = _kernels_numpy.sgd_error_history(x, eps, alpha, e0)
    final = _kernels_numpy.sgd_errors(x, eps, alpha, e0)
    np.testing.assert_array_equal(hist[:, -1, :], final)


def test_full_pipeline_on_numpy_backend(monkeypatch):
    # the pure-numpy fallback must run the public path end to end
    monkeypatch.setenv("LSA_GAUSS_BACKEND", "numpy")
    from lsa_gauss.experiments import ExperimentConfig, run_replicas
    from lsa_gauss.presets import s1

    config = ExperimentConfig(instance=s1(), grid=((0.1, 40),), replicas=150, master_seed=3)
    out = run_replicas(config, (0.1, 40))
    assert out.shape == (150, 1)
    assert np.isfinite(out).all()

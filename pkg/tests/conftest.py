import numpy as np
import pytest

from objectives import quadratic_from_spectrum, synthetic_logistic, synthetic_quadratic
from objectives import reference_cache
from telemetry import reset_telemetry


@pytest.fixture(autouse=True)
def isolated_env(tmp_path, monkeypatch):
    """Disk cache and telemetry under tmp_path; no Redis"""
    monkeypatch.setenv("PRECOND_MOMENTUM_CACHE", str(tmp_path / "reference_cache"))
    monkeypatch.setenv("TELEMETRY_DIR", str(tmp_path / "telemetry"))
    monkeypatch.setenv("TELEMETRY_ENABLED", "false")
    monkeypatch.delenv("REDIS_URL", raising=False)
    reference_cache.reset_client()
    reset_telemetry()
    yield
    reference_cache.reset_client()
    reset_telemetry()


@pytest.fixture
def scalar_quadratic():
    """f(x) = 1/2 x^2"""
    return quadratic_from_spectrum([1.0], x_star=[0.0])


@pytest.fixture
def diag_quadratic():
    """10-d diagonal quadratic, eigenvalues log-spaced in [1, 10]"""
    return synthetic_quadratic(10, 10.0, seed=0)


@pytest.fixture
def rotated_quadratic():
    return synthetic_quadratic(5, 10.0, seed=2, rotate=True)


@pytest.fixture
def small_logistic():
    return synthetic_logistic(n=200, d=5, lam=0.01, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

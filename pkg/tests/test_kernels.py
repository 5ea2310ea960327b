import math

import numpy as np
import pytest

from nilhcf import kernels, random_two_step
from nilhcf.errors import StepFailure
from nilhcf.rk import dopri5

from conftest import crandn

BACKENDS = sorted(kernels.BACKENDS)


def test_backend_switch():
    prev = kernels.set_backend("python")
    try:
        assert kernels.get_backend().__name__.endswith("_kernels_py")
    finally:
        kernels.set_backend(prev)
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
def test_backends_agree(rng):
    for _ in range(20):
        n = int(rng.integers(3, 8))
        mu = random_two_step(n, rng).bracket.data
        lam = crandn(rng, n, n, n)
        A = crandn(rng, n, n)
        py, cc = kernels.BACKENDS["python"], kernels.BACKENDS["compiled"]
        assert np.allclose(py.curvature_matrix(mu, 0.5), cc.curvature_matrix(mu, 0.5), atol=1e-14)
        assert np.allclose(py.pi_action(A, mu), cc.pi_action(A, mu), atol=1e-13)
        assert np.isclose(py.pair_inner(mu, lam, 0.5), cc.pair_inner(mu, lam, 0.5), atol=1e-13)
        assert np.allclose(py.bracket_velocity(mu, 0.5), cc.bracket_velocity(mu, 0.5), atol=1e-14)
        v1, r1 = py.normalized_velocity(mu, 0.5)
        v2, r2 = cc.normalized_velocity(mu, 0.5)
        assert np.allclose(v1, v2, atol=1e-14) and math.isclose(r1, r2, rel_tol=1e-13)


def test_wrappers_accept_readonly_and_noncontiguous(rng):
    mu = random_two_step(4, rng).bracket.data  # read-only
    K = kernels.curvature_matrix(mu.transpose(1, 0, 2).transpose(1, 0, 2), 0.5)
    assert np.allclose(K, K.conj().T)


def test_dopri5_exponential():
    last = None
    for t, y, dy, hit in dopri5(lambda t, y: -y, 0.0, np.array([1.0 + 1j]), 5.0, rtol=1e-10, atol=1e-13,
                                stops=(1.0, 2.5)):
        if hit:
            assert np.allclose(y, np.exp(-t) * (1 + 1j), rtol=1e-8)
        last = (t, y)
    assert last[0] == 5.0


def test_dopri5_lands_on_stops():
    hits = [t for t, _, _, hit in dopri5(lambda t, y: np.ones_like(y), 0.0, np.zeros(1), 1.0, stops=(0.3, 0.7))
            if hit]
    assert hits == [0.3, 0.7, 1.0]


def test_dopri5_step_limit():
    with pytest.raises(StepFailure):
        for _ in dopri5(lambda t, y: -y, 0.0, np.ones(1), 100.0, max_steps=2):
            pass

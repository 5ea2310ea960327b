import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nilhcf import abelian, act, free_two_step, heisenberg, heisenberg3, random_two_step, weighted_h5
from nilhcf.catalog import random_unitary
from nilhcf.curvature import (
    christoffel,
    k_from_bracket,
    k_from_metric,
    k_matrix,
    off_center_norm,
    operator_spectrum,
    q_from_torsion,
    s_tensor,
    static_residual_from_matrix,
    torsion,
    trace_checks,
    unitary_frame,
)
from nilhcf.errors import DimensionMismatch, NotPositiveDefinite

from conftest import crandn

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=3, max_value=6)


def test_heisenberg_k():
    for s in (1, 2, 1 - 2j):
        assert np.allclose(k_matrix(heisenberg3(s)), np.diag([0, 0, abs(s) ** 2 / 2]), atol=1e-15)


def test_abelian_k():
    assert np.all(k_matrix(abelian(3)) == 0)


def test_weighted_h5_k():
    a, b = 1 + 1j, 0.3
    assert np.allclose(k_matrix(weighted_h5(a, b)), np.diag([0, 0, 0, 0, (abs(a) ** 2 + abs(b) ** 2) / 2]))


def test_curvature_operator_fields():
    K = k_from_bracket(heisenberg3(2))
    assert K.trace == pytest.approx(2.0)
    assert K.norm_sq == pytest.approx(4.0)
    assert np.allclose(K.spectrum, [0, 0, 2])
    assert K.source == "bracket"


# ------------------------------------------------------------ torsion


def test_torsion_heisenberg():
    s = 2 + 1j
    T = torsion(heisenberg3(s))
    assert T[0, 1, 2] == -s and T[1, 0, 2] == s
    assert np.allclose(q_from_torsion(heisenberg3(s)), np.diag([0, 0, abs(s) ** 2 / 2]))
    assert np.all(christoffel(heisenberg3(s)) == 0)


def test_torsion_abelian():
    assert np.all(torsion(abelian(3)) == 0)
    assert np.all(q_from_torsion(abelian(3)) == 0)


@pytest.mark.parametrize("desc", [heisenberg3(1), weighted_h5(1, 2j), heisenberg(7), free_two_step(3)])
def test_s_vanishes(desc):
    assert np.abs(s_tensor(desc)).max() == 0


def test_q_equals_k_random(rng):
    for _ in range(20):
        d = random_two_step(int(rng.integers(3, 7)), rng)
        K = k_matrix(d)
        assert np.linalg.norm(q_from_torsion(d) - K) <= 1e-12 * np.linalg.norm(K)
        assert np.linalg.norm(torsion(d) + d.bracket.data) == 0
        assert np.abs(s_tensor(d)).max() == 0


# ------------------------------------------------------------- metrics


def test_metric_identity_matches_bracket(rng):
    d = random_two_step(5, rng)
    assert np.allclose(k_from_metric(d, np.eye(5)).matrix, k_matrix(d), atol=1e-14)


def test_metric_heisenberg_center_scaling():
    lam = 2.5
    K = k_from_metric(heisenberg3(1), np.diag([1, 1, lam])).matrix
    assert K[2, 2] == pytest.approx(lam**2 / 2)
    assert np.allclose(operator_spectrum(K, np.diag([1, 1, lam])), [0, 0, lam / 2])


def test_metric_frame_independence(rng):
    d = random_two_step(6, rng)
    X = crandn(rng, 6, 6)
    h = X @ X.conj().T + np.eye(6)
    K1 = k_from_metric(d, h, "cholesky").matrix
    K2 = k_from_metric(d, h, "eigh").matrix
    assert np.linalg.norm(K1 - K2) <= 1e-10 * np.linalg.norm(K1)
    C = unitary_frame(h)
    assert np.allclose(C.conj().T @ h @ C, np.eye(6), atol=1e-12)


def test_metric_errors():
    with pytest.raises(NotPositiveDefinite):
        k_from_metric(heisenberg3(1), np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(NotPositiveDefinite):
        k_from_metric(heisenberg3(1), np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1.0]]))
    with pytest.raises(DimensionMismatch):
        k_from_metric(heisenberg3(1), np.eye(2))
    with pytest.raises(ValueError):
        unitary_frame(np.eye(2), "qr")


# -------------------------------------------------------------- traces


def test_trace_checks_examples():
    t = trace_checks(heisenberg3(2))
    assert t["trK"] == pytest.approx(2.0) and t["half_norm_sq"] == pytest.approx(2.0)
    assert trace_checks(abelian(3))["trK"] == 0
    assert trace_checks(abelian(3))["static_residual"] == 0
    assert trace_checks(heisenberg3(1))["static_residual"] == pytest.approx(np.sqrt(1 / 6) / 0.5, rel=1e-12)


def test_static_residual_scalar():
    assert static_residual_from_matrix(3.0 * np.eye(4)) == 0


def test_off_center_norm():
    d = heisenberg3(1)
    assert off_center_norm(k_matrix(d), d.center_projector) == 0
    assert off_center_norm(np.eye(3), d.center_projector) == 1


# ----------------------------------------------------------- properties


@given(seeds, dims)
def test_k_hermitian_psd_center_block(seed, n):
    rng = np.random.default_rng(seed)
    d = random_two_step(n, rng)
    K = k_matrix(d)
    assert np.abs(K - K.conj().T).max() <= 1e-12
    assert np.linalg.eigvalsh(K).min() >= -1e-12
    assert off_center_norm(K, d.center_projector) <= 1e-12


@given(seeds, dims)
def test_k_homogeneity(seed, n):
    rng = np.random.default_rng(seed)
    d = random_two_step(n, rng)
    c = complex(*rng.standard_normal(2))
    K = k_matrix(d)
    assert np.linalg.norm(k_matrix(c * d.bracket.data) - abs(c) ** 2 * K) <= 1e-12 * abs(c) ** 2 * np.linalg.norm(K)


@given(seeds, dims)
def test_k_unitary_equivariance(seed, n):
    rng = np.random.default_rng(seed)
    d = random_two_step(n, rng)
    U = random_unitary(n, rng)
    K = k_matrix(d)
    assert np.linalg.norm(k_matrix(act(U, d.bracket)) - U @ K @ U.conj().T) <= 1e-10 * np.linalg.norm(K)


def test_trace_identity_random(rng):
    for _ in range(100):
        d = random_two_step(int(rng.integers(3, 7)), rng, normalize=False)
        t = trace_checks(d)
        assert abs(t["trK"] - t["half_norm_sq"]) <= 1e-12 * t["half_norm_sq"]

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from nilhcf import (
    BracketTensor,
    abelian,
    act,
    bracket_inner,
    catalog,
    derivation_space,
    direct_sum,
    endo_inner,
    free_two_step,
    heisenberg,
    heisenberg3,
    pi_action,
    random_two_step,
    validate,
    weighted_h5,
)
from nilhcf.algebra import center_basis, jacobi_residual, principal_angles
from nilhcf.catalog import random_unitary
from nilhcf.errors import (
    BadParameter,
    DimensionMismatch,
    JacobiViolation,
    NotTwoStep,
    SingularMatrix,
    ValidationError,
)

from conftest import crandn

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=3, max_value=6)


def rel(a, b):
    a, b = np.asarray(getattr(a, "data", a)), np.asarray(getattr(b, "data", b))
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def catalog_all():
    return [
        heisenberg3(1), heisenberg3(2 - 1j), weighted_h5(1, 1), weighted_h5(2, 0.5j), weighted_h5(1, 0),
        heisenberg(5), heisenberg(7), free_two_step(2), free_two_step(3), free_two_step(4), abelian(3),
        direct_sum(heisenberg3(1), abelian(2)),
    ]


# --------------------------------------------------------------- tensors


def test_bracket_tensor_basics():
    mu = BracketTensor.from_entries(3, {(0, 1, 2): 2 + 1j})
    assert mu.data[1, 0, 2] == -(2 + 1j)
    assert mu.norm_sq() == pytest.approx(5.0)
    assert list(mu.entries()) == [(0, 1, 2, 2 + 1j)]
    assert np.allclose(mu(np.eye(3)[0], np.eye(3)[1]), [0, 0, 2 + 1j])
    with pytest.raises(ValueError):
        mu.data[0, 1, 2] = 0
    assert (mu * 2) / 2 == mu
    assert -(-mu) == mu
    assert (mu - mu) == BracketTensor.zero(3)


def test_bracket_tensor_rejects_bad_input():
    with pytest.raises(DimensionMismatch):
        BracketTensor(np.zeros((2, 3, 3)))
    with pytest.raises(ValidationError):
        BracketTensor(np.ones((2, 2, 2)))
    bad = np.zeros((2, 2, 2))
    bad[0, 1, 0] = np.nan
    bad[1, 0, 0] = np.nan
    with pytest.raises(ValidationError):
        BracketTensor(bad)
    with pytest.raises(DimensionMismatch):
        BracketTensor.from_entries(3, {(1, 0, 2): 1})


# -------------------------------------------------------------- validate


def test_validate_heisenberg():
    d = heisenberg3(1)
    assert d.is_two_step
    assert d.center_dim == 1
    assert np.allclose(np.abs(d.center_basis[:, 0]), [0, 0, 1])
    assert d.complement_basis.shape == (3, 2)


def test_validate_abelian():
    d = abelian(3)
    assert d.center_dim == 3 and d.is_two_step
    assert d.complement_basis.shape == (3, 0)


def test_validate_not_two_step():
    d = validate(BracketTensor.from_entries(2, {(0, 1, 1): 1.0}))
    assert not d.is_two_step
    with pytest.raises(NotTwoStep):
        d.require_two_step()


def test_validate_jacobi_violation():
    # [e1,e2] = e1, [e1,e3] = e2 fails Jacobi on (1,2,3)
    mu = BracketTensor.from_entries(3, {(0, 1, 0): 1.0, (0, 2, 1): 1.0})
    with pytest.raises(JacobiViolation) as exc:
        validate(mu)
    assert exc.value.residual > 0.1
    assert sorted(exc.value.triple) == [0, 1, 2]


def test_splitting_is_unitary(rng):
    for _ in range(10):
        d = random_two_step(6, rng)
        U = np.hstack([d.center_basis, d.complement_basis])
        assert np.allclose(U.conj().T @ U, np.eye(6), atol=1e-12)


def test_jacobi_residual_catalog_and_random(rng):
    for d in catalog_all():
        assert jacobi_residual(d.bracket)[0] <= 1e-12
    for _ in range(100):
        n = int(rng.integers(3, 7))
        d = random_two_step(n, rng)
        assert d.jacobi_residual <= 1e-12
        assert d.is_two_step


# ------------------------------------------------------------------- act


def test_act_scalar():
    mu = heisenberg3(1.5 - 0.5j).bracket
    c = 2.0 - 1.0j
    assert rel(act(c * np.eye(3), mu), mu.data / c) < 1e-15


def test_act_heisenberg_center_scaling():
    s = 3.0 + 2j
    out = act(np.diag([1, 1, s]), heisenberg3(1).bracket)
    assert out.data[0, 1, 2] == pytest.approx(s)
    assert np.count_nonzero(np.abs(out.data) > 1e-15) == 2


def test_act_singular():
    with pytest.raises(SingularMatrix):
        act(np.diag([1.0, 1.0, 0.0]), heisenberg3(1).bracket)
    with pytest.raises(DimensionMismatch):
        act(np.eye(2), heisenberg3(1).bracket)


@given(seeds, dims)
def test_act_is_an_action(seed, n):
    rng = np.random.default_rng(seed)
    mu = random_two_step(n, rng).bracket
    phi = np.eye(n) + 0.3 * crandn(rng, n, n)
    psi = np.eye(n) + 0.3 * crandn(rng, n, n)
    assert rel(act(phi @ psi, mu), act(phi, act(psi, mu))) < 1e-10


def test_metric_scaling_correspondence(rng):
    from nilhcf.curvature import k_from_metric, k_matrix, operator_spectrum
    from nilhcf.soliton import functional_F

    mu = random_two_step(5, rng).bracket
    c = 3.7
    K_form = k_from_metric(mu, c * np.eye(5)).matrix
    K_scaled = np.linalg.eigvalsh(k_matrix(mu.data / np.sqrt(c)))
    assert np.allclose(operator_spectrum(K_form, c * np.eye(5)), K_scaled, atol=1e-13)
    assert functional_F(mu / np.sqrt(c)) == pytest.approx(functional_F(mu), rel=1e-13)


# -------------------------------------------------------------------- pi


def test_pi_identity():
    mu = weighted_h5(1 + 1j, 2).bracket
    assert rel(pi_action(np.eye(5), mu), -mu.data) < 1e-15


def test_pi_heisenberg_examples():
    mu = heisenberg3(1).bracket
    assert rel(pi_action(np.diag([0, 0, 1]), mu), mu.data) == 0
    assert rel(pi_action(np.diag([1, 0, 0]), mu), -mu.data) == 0


def test_pi_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        pi_action(np.eye(2), heisenberg3(1).bracket)


@given(seeds, dims)
def test_pi_linear_and_morphism(seed, n):
    rng = np.random.default_rng(seed)
    mu = crandn(rng, n, n, n)
    mu = mu - mu.transpose(1, 0, 2)
    A, B = crandn(rng, n, n), crandn(rng, n, n)
    a = 0.7 - 0.2j
    lin = pi_action(A + a * B, mu).data - pi_action(A, mu).data - a * pi_action(B, mu).data
    assert np.linalg.norm(lin) <= 1e-12 * np.linalg.norm(mu) * (np.linalg.norm(A) + np.linalg.norm(B))
    comm = pi_action(A @ B - B @ A, mu).data
    pApB = pi_action(A, pi_action(B, mu)).data - pi_action(B, pi_action(A, mu)).data
    assert rel(comm, pApB) <= 1e-9


@given(seeds, dims)
def test_pi_adjoint(seed, n):
    rng = np.random.default_rng(seed)
    mu, lam = (random_two_step(n, rng).bracket for _ in range(2))
    A = crandn(rng, n, n)
    lhs = bracket_inner(pi_action(A, mu), lam)
    rhs = bracket_inner(mu, pi_action(A.conj().T, lam))
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), np.linalg.norm(A))


@given(seeds, dims)
def test_act_derivative_is_pi(seed, n):
    rng = np.random.default_rng(seed)
    mu = random_two_step(n, rng).bracket
    A = crandn(rng, n, n)
    A /= np.linalg.norm(A)
    h = 1e-5
    fd = (act(expm(h * A), mu).data - act(expm(-h * A), mu).data) / (2 * h)
    assert rel(fd, pi_action(A, mu)) <= 1e-6


# ---------------------------------------------------------------- pairings


def test_bracket_inner_examples():
    s = 2 - 3j
    assert bracket_inner(heisenberg3(s).bracket, heisenberg3(s).bracket) == pytest.approx(abs(s) ** 2)
    a, b = 1 + 1j, 0.5
    mu = weighted_h5(a, b).bracket
    assert bracket_inner(mu, mu) == pytest.approx(abs(a) ** 2 + abs(b) ** 2)
    with pytest.raises(DimensionMismatch):
        bracket_inner(mu, heisenberg3(1).bracket)


@given(seeds, dims)
def test_bracket_inner_hermitian(seed, n):
    rng = np.random.default_rng(seed)
    mu, lam = (random_two_step(n, rng, normalize=False).bracket for _ in range(2))
    nn = bracket_inner(mu, mu)
    assert abs(nn.imag) <= 1e-14 * nn.real and nn.real > 0
    assert bracket_inner(mu, lam) == pytest.approx(np.conj(bracket_inner(lam, mu)))


def test_endo_inner_examples(rng):
    assert endo_inner(np.eye(4), np.eye(4)) == 4
    e = 1.7
    assert endo_inner(np.diag([0, 0, 0.5]), np.diag([0, 0, e])) == pytest.approx(e / 2)
    A, B = crandn(rng, 4, 4), crandn(rng, 4, 4)
    assert endo_inner(A, B) == pytest.approx(np.conj(endo_inner(B, A)))
    H1, H2 = A + A.conj().T, B + B.conj().T
    assert abs(endo_inner(H1, H2).imag) < 1e-12


# ------------------------------------------------------------- derivations


def test_derivations_abelian():
    assert len(derivation_space(abelian(2).bracket)) == 4


def test_derivations_heisenberg_diagonal():
    basis = derivation_space(heisenberg3(1).bracket)
    B = np.array([b.ravel() for b in basis]).T
    P = B @ B.conj().T

    def in_span(D):
        v = D.ravel()
        return np.linalg.norm(v - P @ v) <= 1e-10 * np.linalg.norm(v)

    assert in_span(np.diag([1.0, 2.0, 3.0]))
    assert in_span(np.diag([0.5, 0.5, 1.0]))
    assert not in_span(np.diag([1.0, 1.0, 1.0]))
    assert not in_span(np.diag([1.0, 0.0, 0.0]))


def _exact_der_dim(entries, n):
    """Kernel dimension of D -> pi(D) mu over the rationals."""
    D = sympy.Matrix(n, n, sympy.symbols(f"d0:{n * n}"))
    mu = sympy.MutableDenseNDimArray.zeros(n, n, n)
    for (i, j, k), v in entries.items():
        mu[i, j, k] = v
        mu[j, i, k] = -v
    eqs = []
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                eqs.append(sum(D[k, m] * mu[i, j, m] - D[m, i] * mu[m, j, k] - D[m, j] * mu[i, m, k]
                               for m in range(n)))
    M = sympy.Matrix([[sympy.diff(e, x) for x in D] for e in eqs])
    return n * n - M.rank()


@pytest.mark.parametrize(
    "entries,n,ctor",
    [
        ({(0, 1, 2): 1}, 3, lambda: heisenberg3(1)),
        ({(0, 1, 4): 1, (2, 3, 4): 1}, 5, lambda: weighted_h5(1, 1)),
        ({(0, 1, 3): 1, (0, 2, 4): 1, (1, 2, 5): 1}, 6, lambda: free_two_step(3)),
    ],
)
def test_derivation_dim_matches_exact_oracle(entries, n, ctor):
    exact = _exact_der_dim(entries, n)
    desc = ctor()
    assert len(desc.derivation_basis) == exact


def test_derivation_dim_heisenberg_is_six():
    # frozen from the exact rational kernel computation
    assert len(derivation_space(heisenberg3(1).bracket)) == 6


def test_derivation_basis_properties(rng):
    mu = random_two_step(6, rng).bracket
    basis = derivation_space(mu)
    G = np.array([[endo_inner(a, b) for b in basis] for a in basis])
    assert np.allclose(G, np.eye(len(basis)), atol=1e-10)
    for D in basis:
        r = np.sqrt(bracket_inner(pi_action(D, mu), pi_action(D, mu)).real)
        assert r <= 1e-10 * mu.norm() * np.linalg.norm(D)


# ---------------------------------------------------------------- catalog


def test_catalog_constructors():
    assert free_two_step(4).dim == 4 + 6
    assert free_two_step(1).dim == 1
    assert weighted_h5(1, 1).center_dim == 1
    d = weighted_h5(1, 0)
    assert d.center_dim == 3
    assert principal_angles(d.center_basis, np.eye(5)[:, 2:]).max() < 1e-12
    assert heisenberg(5).center_dim == 1
    assert catalog("heisenberg3", s=2).bracket.data[0, 1, 2] == 2
    assert direct_sum(heisenberg3(1), heisenberg3(1)).center_dim == 2


@pytest.mark.parametrize(
    "call",
    [
        lambda: catalog("nope"),
        lambda: catalog("heisenberg3", t=1),
        lambda: heisenberg(4),
        lambda: free_two_step(0),
        lambda: abelian(0),
        lambda: heisenberg3("x"),
        lambda: random_two_step(2, np.random.default_rng(0)),
    ],
)
def test_catalog_bad_parameters(call):
    with pytest.raises(BadParameter):
        call()


# ------------------------------------------------------ unitary invariance


@given(seeds, dims)
def test_center_and_derivations_unitarily_invariant(seed, n):
    rng = np.random.default_rng(seed)
    d = random_two_step(n, rng, rotate=False)
    U = random_unitary(n, rng)
    d2 = validate(act(U, d.bracket))
    assert principal_angles(U @ d.center_basis, d2.center_basis).max(initial=0) <= 1e-9
    B1 = np.array([(U @ D @ U.conj().T).ravel() for D in d.derivation_basis]).T
    B2 = np.array([D.ravel() for D in d2.derivation_basis]).T
    assert B1.shape == B2.shape
    assert principal_angles(B1, B2).max(initial=0) <= 1e-9


def test_center_basis_of_zero_bracket():
    Q, comp = center_basis(np.zeros((2, 2, 2)))
    assert Q.shape == (2, 2) and comp.shape == (2, 0)

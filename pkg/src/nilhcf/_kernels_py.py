"""Pure numpy implementation of the flow kernels.

Brackets are dense ``(n, n, n)`` complex arrays ``mu[i, j, k]`` holding the
``k``-th component of ``[e_i, e_j]``; endomorphisms act on column vectors,
``A e_i = sum_m A[m, i] e_m``.
"""
import numpy as np


def pair_inner(mu, lam, pair_weight):
    return pair_weight * np.vdot(lam.ravel(), mu.ravel())


def curvature_matrix(mu, pair_weight):
    # K = 1/2 sum_{r<p} v_rp v_rp^H with v_rp = mu[r, p, :]
    v = mu.reshape(-1, mu.shape[2])
    return (0.5 * pair_weight) * (v.T @ v.conj())


def pi_action(A, mu):
    out = np.einsum("km,ijm->ijk", A, mu)
    out -= np.einsum("mi,mjk->ijk", A, mu)
    out -= np.einsum("mj,imk->ijk", A, mu)
    return out


def bracket_velocity(mu, pair_weight):
    return -pi_action(curvature_matrix(mu, pair_weight), mu)


def normalized_velocity(nu, pair_weight):
    """Return ``(-pi(K + r Id) nu, r)`` with ``r = <pi(K) nu, nu>``."""
    K = curvature_matrix(nu, pair_weight)
    p = pi_action(K, nu)
    r = pair_inner(p, nu, pair_weight).real
    # pi(Id) nu = -nu
    return r * nu - p, r

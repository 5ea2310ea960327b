# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled flow kernels; same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def pair_inner(const double complex[:, :, ::1] mu, const double complex[:, :, ::1] lam, double pair_weight):
    cdef Py_ssize_t n = mu.shape[0], i, j, k
    cdef double complex s = 0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                s += mu[i, j, k] * lam[i, j, k].conjugate()
    return pair_weight * s


cdef void _curvature(const double complex[:, :, ::1] mu, double pair_weight,
                     double complex[:, ::1] K) noexcept nogil:
    cdef Py_ssize_t n = mu.shape[0], r, p, a, b
    cdef double complex va
    # ordered pairs (r, p) and (p, r) contribute equally
    cdef double f = pair_weight
    for a in range(n):
        for b in range(n):
            K[a, b] = 0
    for r in range(n):
        for p in range(r + 1, n):
            for a in range(n):
                va = mu[r, p, a]
                if va == 0:
                    continue
                for b in range(n):
                    K[a, b] += va * mu[r, p, b].conjugate()
    for a in range(n):
        for b in range(n):
            K[a, b] *= f


cdef void _pi(const double complex[:, ::1] A, const double complex[:, :, ::1] mu,
              double complex[:, :, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = mu.shape[0], i, j, k, m
    cdef double complex s
    for i in range(n):
        for j in range(n):
            for k in range(n):
                s = 0
                for m in range(n):
                    s += A[k, m] * mu[i, j, m] - A[m, i] * mu[m, j, k] - A[m, j] * mu[i, m, k]
                out[i, j, k] = s


def curvature_matrix(const double complex[:, :, ::1] mu, double pair_weight):
    cdef Py_ssize_t n = mu.shape[0]
    K = np.empty((n, n), dtype=np.complex128)
    _curvature(mu, pair_weight, K)
    return K


def pi_action(A, const double complex[:, :, ::1] mu):
    cdef Py_ssize_t n = mu.shape[0]
    cdef const double complex[:, ::1] Av = np.ascontiguousarray(A, dtype=np.complex128)
    out = np.empty((n, n, n), dtype=np.complex128)
    _pi(Av, mu, out)
    return out


def bracket_velocity(const double complex[:, :, ::1] mu, double pair_weight):
    cdef Py_ssize_t n = mu.shape[0], i, j, k
    K = np.empty((n, n), dtype=np.complex128)
    out = np.empty((n, n, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] o = out
    _curvature(mu, pair_weight, K)
    _pi(K, mu, o)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                o[i, j, k] = -o[i, j, k]
    return out


def normalized_velocity(const double complex[:, :, ::1] nu, double pair_weight):
    cdef Py_ssize_t n = nu.shape[0], i, j, k
    cdef double complex s = 0
    cdef double r
    K = np.empty((n, n), dtype=np.complex128)
    out = np.empty((n, n, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] o = out
    _curvature(nu, pair_weight, K)
    _pi(K, nu, o)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                s += o[i, j, k] * nu[i, j, k].conjugate()
    r = (pair_weight * s).real
    for i in range(n):
        for j in range(n):
            for k in range(n):
                o[i, j, k] = r * nu[i, j, k] - o[i, j, k]
    return out, r

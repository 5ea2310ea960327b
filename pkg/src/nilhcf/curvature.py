"""Curvature operator of the positive Hermitian curvature flow.

Matrix convention: a Hermitian form ``B`` on C^n is stored as the matrix
``M`` with ``M[a, b] = B(Z_b, conj(Z_a))``, so ``B(x, conj(y)) = y^H M x``.
In a unitary frame this is also the matrix of the associated operator,
which is why ``k_from_bracket`` returns ``K[a, b] = 1/2 sum_{r<p} mu_rp^a
conj(mu_rp^b)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .algebra import AlgebraDescriptor, BracketTensor, _arr, act, bracket_inner
from .conventions import ORDERED_PAIR_WEIGHT
from .errors import DimensionMismatch, NotPositiveDefinite


@dataclass(frozen=True)
class CurvatureOperator:
    matrix: np.ndarray
    source: str = "bracket"

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.matrix) ** 2))

    @property
    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def _bracket(mu) -> np.ndarray:
    if isinstance(mu, AlgebraDescriptor):
        return mu.bracket.data
    return _arr(mu)


def k_matrix(mu) -> np.ndarray:
    """Raw Hermitian matrix of ``K_mu``."""
    return kernels.curvature_matrix(_bracket(mu), ORDERED_PAIR_WEIGHT)


def k_from_bracket(mu) -> CurvatureOperator:
    return CurvatureOperator(k_matrix(mu), "bracket")


# ------------------------------------------------- Chern connection pieces


def complexify(mu) -> np.ndarray:
    """Structure constants on ``g^{1,0} + g^{0,1}``; index ``n + i`` is ``conj(Z_i)``.

    Brackets of a complex Lie group have no mixed ``(1,0)``/``(0,1)`` terms.
    """
    m = _bracket(mu)
    n = m.shape[0]
    C = np.zeros((2 * n,) * 3, dtype=np.complex128)
    C[:n, :n, :n] = m
    C[n:, n:, n:] = m.conj()
    return C


def christoffel(mu) -> np.ndarray:
    """``Gamma[l, r, j] = -mu_{l conj(j)}^{conj(r)}`` in a unitary frame."""
    C = complexify(mu)
    n = C.shape[0] // 2
    return -C[:n, n:, n:].transpose(0, 2, 1)


def torsion(mu) -> np.ndarray:
    """Torsion components ``T[i, p, k] = T_{ip}^k`` of the Chern connection."""
    C = complexify(mu)
    n = C.shape[0] // 2
    mixed = C[:n, n:, n:]  # mixed[i, k, p] = mu_{i conj(k)}^{conj(p)}
    T = -mixed.transpose(0, 2, 1)  # -mu_{i kbar}^{pbar} at [i, p, k]
    T = T + mixed.transpose(2, 0, 1)  # +mu_{p kbar}^{ibar}
    return T - C[:n, :n, :n]


def q_from_torsion(mu) -> np.ndarray:
    """``Q~`` from the torsion contraction, pairs counted once."""
    T = torsion(mu)
    n = T.shape[0]
    v = T.reshape(-1, n)
    # 2 Q~_{i jbar} = sum_{pairs} conj(T^i) T^j; stored transposed (see module doc)
    return (0.5 * ORDERED_PAIR_WEIGHT) * (v.T @ v.conj())


def s_tensor(mu) -> np.ndarray:
    """Chern-Ricci trace ``S``; every term carries a mixed bracket."""
    C = complexify(mu)
    n = C.shape[0] // 2
    H, L = slice(0, n), slice(n, 2 * n)
    S = -np.einsum("kir,kjr->ij", C[L, H, H], C[H, L, L])
    S += np.einsum("kri,krj->ij", C[H, L, L], C[L, H, H])
    S += np.einsum("kkr,rji->ij", C[H, L, H], C[H, L, L])
    S -= np.einsum("kkr,rij->ij", C[H, L, L], C[L, H, H])
    return S.T


# ------------------------------------------------------ arbitrary metrics


def unitary_frame(h, method: str = "cholesky") -> np.ndarray:
    """Return ``C`` with ``C^H h C = Id``; columns are the new frame."""
    h = np.asarray(h, dtype=np.complex128)
    n = h.shape[0]
    if h.shape != (n, n):
        raise DimensionMismatch(f"metric must be square, got {h.shape}")
    if np.abs(h - h.conj().T).max() > 1e-12 * max(1.0, np.abs(h).max()):
        raise NotPositiveDefinite("metric is not Hermitian")
    w = np.linalg.eigvalsh(h)
    if w[0] <= 1e-12 * w[-1] or w[-1] <= 0:
        raise NotPositiveDefinite(f"metric is not positive definite (eigenvalues {w[0]:.3e}..{w[-1]:.3e})")
    if method == "cholesky":
        L = np.linalg.cholesky(h)
        return np.linalg.inv(L).conj().T
    if method == "eigh":
        w, U = np.linalg.eigh(h)
        return U / np.sqrt(w)
    raise ValueError(f"unknown unitarization {method!r}")


def k_from_metric(mu, h, method: str = "cholesky") -> CurvatureOperator:
    """Curvature form of the metric ``h`` (same matrix convention as ``h``)."""
    m = _bracket(mu)
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != (m.shape[0], m.shape[0]):
        raise DimensionMismatch(f"metric shape {h.shape} does not match bracket dim {m.shape[0]}")
    C = unitary_frame(h, method)
    Cinv = np.linalg.inv(C)
    lam = act(Cinv, m)
    K_w = k_matrix(lam)
    M = Cinv.conj().T @ K_w @ Cinv
    return CurvatureOperator(0.5 * (M + M.conj().T), "metric")


def operator_spectrum(K_form, h) -> np.ndarray:
    """Eigenvalues of the operator ``h^-1 K`` (real, sorted)."""
    C = unitary_frame(h)
    A = C.conj().T @ np.asarray(K_form) @ C
    return np.linalg.eigvalsh(0.5 * (A + A.conj().T))


# ---------------------------------------------------------------- traces


def static_residual_from_matrix(K) -> float:
    """``||K - (tr K / n) Id|| / ||K||``; zero for ``K = 0``."""
    K = np.asarray(K)
    nK = np.linalg.norm(K)
    if nK == 0.0:
        return 0.0
    n = K.shape[0]
    return float(np.linalg.norm(K - np.trace(K) / n * np.eye(n)) / nK)


def trace_checks(mu) -> dict:
    K = k_matrix(mu)
    return {
        "trK": float(np.trace(K).real),
        "half_norm_sq": 0.5 * float(bracket_inner(_bracket(mu), _bracket(mu)).real),
        "static_residual": static_residual_from_matrix(K),
    }


def off_center_norm(K, center_projector) -> float:
    """Largest entry of ``K`` touching the complement of the center."""
    P = np.asarray(center_projector)
    Q = np.eye(P.shape[0]) - P
    return float(max(np.abs(Q @ K).max(initial=0.0), np.abs(K @ Q).max(initial=0.0)))


__all__ = [
    "BracketTensor",
    "CurvatureOperator",
    "christoffel",
    "complexify",
    "k_from_bracket",
    "k_from_metric",
    "k_matrix",
    "off_center_norm",
    "operator_spectrum",
    "q_from_torsion",
    "s_tensor",
    "static_residual_from_matrix",
    "torsion",
    "trace_checks",
    "unitary_frame",
]

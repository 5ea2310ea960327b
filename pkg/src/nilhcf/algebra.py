"""Complex Lie brackets given by structure constants.

A bracket on C^n is stored as a dense antisymmetric array ``mu[i, j, k]``,
the k-th coordinate of ``[e_i, e_j]``.  Only the entries with ``i < j`` are
independent; constructors fill in the rest.  Endomorphisms are plain complex
``(n, n)`` arrays acting on column vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

import numpy as np

from . import kernels
from .conventions import JACOBI_RTOL, ORDERED_PAIR_WEIGHT, RANK_RTOL
from .errors import DimensionMismatch, JacobiViolation, SingularMatrix, ValidationError


class BracketTensor:
    """Immutable antisymmetric structure-constant tensor."""

    __slots__ = ("_data",)

    def __init__(self, data, *, check=True):
        arr = np.array(data, dtype=np.complex128, copy=True)
        if arr.ndim != 3 or not (arr.shape[0] == arr.shape[1] == arr.shape[2]):
            raise DimensionMismatch(f"bracket array must have shape (n, n, n), got {arr.shape}")
        if check:
            if not np.all(np.isfinite(arr)):
                raise ValidationError("bracket entries must be finite")
            scale = max(1.0, float(np.abs(arr).max(initial=0.0)))
            if np.abs(arr + arr.transpose(1, 0, 2)).max(initial=0.0) > 1e-14 * scale:
                raise ValidationError("bracket array is not antisymmetric in its first two indices")
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def from_entries(cls, dim: int, entries) -> "BracketTensor":
        """Build from ``{(i, j, k): value}`` with 0-based ``i < j``."""
        if dim < 1:
            raise DimensionMismatch("dimension must be positive")
        arr = np.zeros((dim, dim, dim), dtype=np.complex128)
        for (i, j, k), value in dict(entries).items():
            if not (0 <= i < j < dim and 0 <= k < dim):
                raise DimensionMismatch(f"entry index ({i}, {j}, {k}) invalid for dim {dim} with i < j")
            arr[i, j, k] += value
            arr[j, i, k] -= value
        return cls(arr, check=False)

    @classmethod
    def zero(cls, dim: int) -> "BracketTensor":
        return cls(np.zeros((dim, dim, dim), dtype=np.complex128), check=False)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    def entries(self, atol: float = 0.0) -> Iterator[tuple[int, int, int, complex]]:
        """Yield ``(i, j, k, value)`` for stored entries ``i < j`` with ``|value| > atol``."""
        n = self.dim
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(n):
                    v = self._data[i, j, k]
                    if abs(v) > atol:
                        yield i, j, k, complex(v)

    def norm_sq(self) -> float:
        return bracket_inner(self, self).real

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def __call__(self, x, y):
        """Bracket of two coordinate vectors."""
        return np.einsum("i,j,ijk->k", x, y, self._data)

    def __add__(self, other):
        return BracketTensor(self._data + _arr(other), check=False)

    def __sub__(self, other):
        return BracketTensor(self._data - _arr(other), check=False)

    def __mul__(self, c):
        return BracketTensor(self._data * complex(c), check=False)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return BracketTensor(self._data / complex(c), check=False)

    def __neg__(self):
        return BracketTensor(-self._data, check=False)

    def __eq__(self, other):
        if not isinstance(other, BracketTensor):
            return NotImplemented
        return self._data.shape == other._data.shape and np.array_equal(self._data, other._data)

    __hash__ = None

    def __repr__(self):
        shown = ", ".join(f"[{i+1},{j+1}]_{k+1}={v:.4g}" for i, j, k, v in list(self.entries())[:6])
        return f"BracketTensor(dim={self.dim}, {shown})"


def _arr(mu) -> np.ndarray:
    return mu.data if isinstance(mu, BracketTensor) else np.asarray(mu, dtype=np.complex128)


# ----------------------------------------------------------------- pairings


def bracket_inner(mu, lam) -> complex:
    """Hermitian pairing ``sum_{i<j, k} mu_ij^k conj(lam_ij^k)``."""
    a, b = _arr(mu), _arr(lam)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return kernels.pair_inner(a, b, ORDERED_PAIR_WEIGHT)


def endo_inner(A, B) -> complex:
    """Frobenius pairing ``tr(A B^H)``."""
    A, B = np.asarray(A), np.asarray(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {B.shape}")
    return complex(np.vdot(B.ravel(), A.ravel()))


# ------------------------------------------------------------------ actions


def act(phi, mu) -> BracketTensor:
    """Change of basis ``phi . mu = phi mu(phi^-1 ., phi^-1 .)``."""
    phi = np.asarray(phi, dtype=np.complex128)
    m = _arr(mu)
    if phi.shape != (m.shape[0], m.shape[0]):
        raise DimensionMismatch(f"phi has shape {phi.shape}, bracket dim {m.shape[0]}")
    cond = np.linalg.cond(phi)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularMatrix(f"transformation is singular or ill-conditioned (cond = {cond:.3e})")
    psi = np.linalg.inv(phi)
    out = np.einsum("km,abm,ai,bj->ijk", phi, m, psi, psi, optimize=True)
    out = 0.5 * (out - out.transpose(1, 0, 2))
    return BracketTensor(out, check=False)


def pi_action(A, mu) -> BracketTensor:
    """Infinitesimal action ``A mu(.,.) - mu(A.,.) - mu(., A.)``."""
    A = np.asarray(A, dtype=np.complex128)
    m = _arr(mu)
    if A.shape != (m.shape[0], m.shape[0]):
        raise DimensionMismatch(f"endomorphism has shape {A.shape}, bracket dim {m.shape[0]}")
    return BracketTensor(kernels.pi_action(A, m), check=False)


def pi_matrix(mu) -> np.ndarray:
    """Matrix of ``vec(A) -> pi(A) mu`` restricted to the independent ``i < j`` rows.

    Rows are scaled so that the Euclidean norm of the image equals the
    bracket norm.  Columns follow ``A.ravel()`` (row-major).
    """
    m = _arr(mu)
    n = m.shape[0]
    eye = np.eye(n)
    # (pi(E_ab) mu)[i,j,k] = d_ka mu[i,j,b] - d_ib mu[a,j,k] - d_jb mu[i,a,k]
    full = np.einsum("ka,ijb->abijk", eye, m)
    full = full - np.einsum("ib,ajk->abijk", eye, m)
    full = full - np.einsum("jb,iak->abijk", eye, m)
    iu, ju = np.triu_indices(n, k=1)
    rows = full[:, :, iu, ju, :]  # (n, n, npairs, n)
    scale = np.sqrt(2.0 * ORDERED_PAIR_WEIGHT)
    return scale * rows.reshape(n * n, -1).T


# ------------------------------------------------------------ subspaces


def _null_space(M: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``M``."""
    ncols = M.shape[1]
    if M.size == 0:
        return np.eye(ncols, dtype=np.complex128)
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(ncols, dtype=np.complex128)
    rank = int(np.sum(s > rtol * smax))
    return vh[rank:].conj().T


def center_basis(mu, rtol: float = RANK_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases ``(Q_center, Q_complement)`` as matrix columns."""
    m = _arr(mu)
    n = m.shape[0]
    # column i holds the coefficients of ad_{e_i}
    M = m.reshape(n, n * n).T
    Q = _null_space(M, rtol)
    # complement: orthonormal basis of the orthogonal complement of span(Q)
    if Q.shape[1] == n:
        return Q, np.zeros((n, 0), dtype=np.complex128)
    P = np.eye(n) - Q @ Q.conj().T
    u, s, _ = np.linalg.svd(P)
    comp = u[:, : n - Q.shape[1]]
    return Q, comp


def jacobi_residual(mu) -> tuple[float, tuple[int, int, int]]:
    """Largest Jacobi defect relative to ``||mu||^2`` and where it occurs."""
    m = _arr(mu)
    t = np.einsum("ijm,mlk->ijlk", m, m)
    # [[e_i,e_j],e_l] + [[e_j,e_l],e_i] + [[e_l,e_i],e_j]
    J = t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3)
    mag = np.linalg.norm(J, axis=3)
    nsq = float(bracket_inner(m, m).real)
    if nsq == 0.0:
        return 0.0, (0, 0, 0)
    idx = np.unravel_index(int(np.argmax(mag)), mag.shape)
    return float(mag[idx]) / nsq, tuple(int(x) for x in idx)


def two_step_residual(mu) -> float:
    """``||mu(mu(.,.),.)||`` relative to ``||mu||^2``."""
    m = _arr(mu)
    nsq = float(bracket_inner(m, m).real)
    if nsq == 0.0:
        return 0.0
    t = np.einsum("ijm,mlk->ijlk", m, m)
    return float(np.sqrt(np.sum(np.abs(t) ** 2) * ORDERED_PAIR_WEIGHT)) / nsq


def derivation_space(mu, rtol: float = RANK_RTOL) -> list[np.ndarray]:
    """Frobenius-orthonormal basis of ``Der(mu) = ker(A -> pi(A) mu)``."""
    m = _arr(mu)
    n = m.shape[0]
    N = _null_space(pi_matrix(m), rtol)
    return [N[:, c].reshape(n, n) for c in range(N.shape[1])]


# ----------------------------------------------------------- descriptor


@dataclass(frozen=True)
class AlgebraDescriptor:
    bracket: BracketTensor
    center_basis: np.ndarray
    complement_basis: np.ndarray
    is_two_step: bool
    jacobi_residual: float = 0.0
    name: str | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return self.bracket.dim

    @property
    def center_dim(self) -> int:
        return self.center_basis.shape[1]

    @property
    def center_projector(self) -> np.ndarray:
        Q = self.center_basis
        return Q @ Q.conj().T

    @cached_property
    def derivation_basis(self) -> list[np.ndarray]:
        return derivation_space(self.bracket)

    def require_two_step(self):
        from .errors import NotTwoStep

        if not self.is_two_step:
            raise NotTwoStep(f"{self.name or 'bracket'} is not 2-step nilpotent")
        return self


def validate(raw, *, rtol: float = JACOBI_RTOL, name: str | None = None) -> AlgebraDescriptor:
    """Check the Jacobi identity and compute the center splitting.

    Raises ``JacobiViolation`` with the worst triple.  Failing to be 2-step
    nilpotent is recorded in ``is_two_step``, not raised.
    """
    mu = raw if isinstance(raw, BracketTensor) else BracketTensor(raw)
    res, triple = jacobi_residual(mu)
    if res > rtol:
        raise JacobiViolation(res, triple)
    Q, comp = center_basis(mu)
    n = mu.dim
    m = mu.data
    if Q.shape[1] == n:
        two_step = True
    else:
        # image of mu must lie in the center
        P_perp = comp @ comp.conj().T
        leak = np.einsum("km,ijm->ijk", P_perp, m)
        scale = max(np.abs(m).max(), 1e-300)
        two_step = bool(np.abs(leak).max() <= 1e-9 * scale)
    return AlgebraDescriptor(mu, Q, comp, two_step, res, name)


def principal_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Principal angles between column spans of orthonormal ``A`` and ``B``."""
    if A.shape[1] != B.shape[1]:
        return np.array([np.pi / 2])
    if A.shape[1] == 0:
        return np.zeros(0)
    # sines from the residual of B after projecting onto span(A); accurate near 0
    s = np.linalg.svd(B - A @ (A.conj().T @ B), compute_uv=False)
    return np.sort(np.arcsin(np.clip(s, 0.0, 1.0)))

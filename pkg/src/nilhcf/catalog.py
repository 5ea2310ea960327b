"""Standard brackets.

Indices in docstrings are 1-based to match the usual naming of basis
vectors; the tensors themselves are 0-based.
"""
from __future__ import annotations

import numpy as np

from .algebra import AlgebraDescriptor, BracketTensor, act, validate
from .errors import BadParameter


def _complex(x, name):
    try:
        return complex(x)
    except (TypeError, ValueError):
        raise BadParameter(f"{name} must be a complex number, got {x!r}") from None


def heisenberg3(s=1.0) -> AlgebraDescriptor:
    """Complex Heisenberg algebra, ``[Z1, Z2] = s Z3``."""
    s = _complex(s, "s")
    mu = BracketTensor.from_entries(3, {(0, 1, 2): s})
    return validate(mu, name=f"heisenberg3(s={s:g})")


def weighted_h5(a=1.0, b=1.0) -> AlgebraDescriptor:
    """``[Z1, Z2] = a Z5``, ``[Z3, Z4] = b Z5``."""
    a, b = _complex(a, "a"), _complex(b, "b")
    mu = BracketTensor.from_entries(5, {(0, 1, 4): a, (2, 3, 4): b})
    return validate(mu, name=f"weighted_h5(a={a:g}, b={b:g})")


def heisenberg(dim: int) -> AlgebraDescriptor:
    """Heisenberg algebra of dimension ``2m + 1``: ``[X_i, Y_i] = Z``.

    Basis order is ``X_1..X_m, Y_1..Y_m, Z``.
    """
    if not isinstance(dim, (int, np.integer)) or dim < 3 or dim % 2 == 0:
        raise BadParameter(f"Heisenberg dimension must be odd and >= 3, got {dim!r}")
    m = (dim - 1) // 2
    mu = BracketTensor.from_entries(dim, {(i, m + i, dim - 1): 1.0 for i in range(m)})
    return validate(mu, name=f"heisenberg({dim})")


def free_two_step(m: int) -> AlgebraDescriptor:
    """Free 2-step nilpotent algebra on ``m`` generators, ``[Z_i, Z_j] = W_ij``."""
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise BadParameter(f"number of generators must be >= 1, got {m!r}")
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    n = m + len(pairs)
    mu = BracketTensor.from_entries(n, {(i, j, m + p): 1.0 for p, (i, j) in enumerate(pairs)})
    return validate(mu, name=f"free_two_step({m})")


def abelian(n: int) -> AlgebraDescriptor:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise BadParameter(f"dimension must be >= 1, got {n!r}")
    return validate(BracketTensor.zero(n), name=f"abelian({n})")


def direct_sum(first, second) -> AlgebraDescriptor:
    """Block-diagonal sum; basis of ``first`` comes first."""
    m1 = first.bracket if isinstance(first, AlgebraDescriptor) else first
    m2 = second.bracket if isinstance(second, AlgebraDescriptor) else second
    n1, n2 = m1.dim, m2.dim
    arr = np.zeros((n1 + n2,) * 3, dtype=np.complex128)
    arr[:n1, :n1, :n1] = m1.data
    arr[n1:, n1:, n1:] = m2.data
    return validate(BracketTensor(arr, check=False), name="direct_sum")


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_two_step(
    n: int,
    rng: np.random.Generator,
    generators: int | None = None,
    *,
    rotate: bool = True,
    normalize: bool = True,
) -> AlgebraDescriptor:
    """Random 2-step nilpotent bracket of dimension ``n``.

    ``generators`` (default: random in ``[2, n-1]``) basis vectors bracket
    into the span of the remaining ones with complex Gaussian coefficients.
    With ``rotate`` the result is conjugated by a random unitary so the
    splitting is not aligned with the coordinate axes.
    """
    if n < 3:
        raise BadParameter("random 2-step brackets need n >= 3")
    p = int(rng.integers(2, n)) if generators is None else int(generators)
    if not 2 <= p <= n - 1:
        raise BadParameter(f"generators must lie in [2, {n - 1}], got {p}")
    arr = np.zeros((n, n, n), dtype=np.complex128)
    c = rng.standard_normal((p, p, n - p)) + 1j * rng.standard_normal((p, p, n - p))
    c = c - c.transpose(1, 0, 2)
    arr[:p, :p, p:] = c
    mu = BracketTensor(arr, check=False)
    if rotate:
        mu = act(random_unitary(n, rng), mu)
    if normalize:
        mu = mu / mu.norm()
    return validate(mu, name=f"random_two_step(n={n}, p={p})")


CATALOG = {
    "heisenberg3": heisenberg3,
    "weighted_h5": weighted_h5,
    "heisenberg": heisenberg,
    "free_two_step": free_two_step,
    "abelian": abelian,
    "direct_sum": direct_sum,
}


def catalog(name: str, **params) -> AlgebraDescriptor:
    try:
        ctor = CATALOG[name]
    except KeyError:
        raise BadParameter(f"unknown catalog entry {name!r}; choose from {sorted(CATALOG)}") from None
    try:
        return ctor(**params)
    except TypeError as exc:
        raise BadParameter(f"bad parameters for {name}: {exc}") from None

"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback.  Both expose ``pair_inner``, ``curvature_matrix``, ``pi_action``,
``bracket_velocity`` and ``normalized_velocity`` on C-contiguous complex128
arrays.
"""
import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if _compiled is not None else "python"
_active = BACKENDS[BACKEND]


def get_backend(name=None):
    return BACKENDS[name or BACKEND]


def set_backend(name):
    """Switch the module-level kernels; returns the previous backend name."""
    global BACKEND, _active
    if name not in BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}")
    previous, BACKEND, _active = BACKEND, name, BACKENDS[name]
    return previous


def _c(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def pair_inner(mu, lam, pair_weight):
    return complex(_active.pair_inner(_c(mu), _c(lam), pair_weight))


def curvature_matrix(mu, pair_weight):
    return _active.curvature_matrix(_c(mu), pair_weight)


def pi_action(A, mu):
    return _active.pi_action(_c(A), _c(mu))


def bracket_velocity(mu, pair_weight):
    return _active.bracket_velocity(_c(mu), pair_weight)


def normalized_velocity(nu, pair_weight):
    return _active.normalized_velocity(_c(nu), pair_weight)

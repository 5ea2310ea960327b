"""Positive Hermitian curvature flow on complex 2-step nilpotent Lie groups."""
from .algebra import (
    AlgebraDescriptor,
    BracketTensor,
    act,
    bracket_inner,
    derivation_space,
    endo_inner,
    pi_action,
    validate,
)
from .catalog import abelian, catalog, direct_sum, free_two_step, heisenberg, heisenberg3, random_two_step, weighted_h5
from .conventions import CONVENTION_VERSION
from .kernels import BACKEND

__version__ = "0.1.0"

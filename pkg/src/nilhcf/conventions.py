"""Normalization conventions shared by every module.

Sums written over pairs of basis vectors (the bracket inner product, the
curvature operator, the torsion contraction) run over unordered pairs
``r < p``.  Internally brackets are stored as dense antisymmetric arrays,
so an unordered sum is the ordered sum times ``ORDERED_PAIR_WEIGHT``.
Changing that constant switches every pair sum at once.
"""

ORDERED_PAIR_WEIGHT = 0.5

CONVENTION_VERSION = "hcf+/unordered-pairs/v1"

# Singular values below this fraction of the largest count as zero.
RANK_RTOL = 1e-10

# Jacobi residual tolerance, relative to ||mu||^2.
JACOBI_RTOL = 1e-10

"""Subdiagonal algebras of block upper-triangular matrices: determinants,
factorizations, Szego problems and invariant subspaces."""

__version__ = "0.1.0"

from .algebra import BlockPartition, SubAlg, a_neg, random_element  # noqa: E402
from .beurling import Subspace, beurling_extract, random_invariant_subspace  # noqa: E402
from .factor import (  # noqa: E402
    canonicalize,
    cholesky_in_A,
    factor_via_weighted_projection,
    inner_outer,
    inner_outer_via_projection,
    is_outer,
    riesz_factor,
)
from .fkdet import arens_hoffman_witness, fk_det  # noqa: E402
from .szego import SzegoOptions, szego_l2, szego_lp_general  # noqa: E402

__all__ = [
    "BlockPartition", "SubAlg", "a_neg", "random_element",
    "Subspace", "beurling_extract", "random_invariant_subspace",
    "canonicalize", "cholesky_in_A", "factor_via_weighted_projection", "inner_outer",
    "inner_outer_via_projection", "is_outer", "riesz_factor",
    "arens_hoffman_witness", "fk_det",
    "SzegoOptions", "szego_l2", "szego_lp_general",
]

"""Rank-one decomposition of partially symmetric tensors.

Build the truncated moment functional of a multi-graded tensor, complete it
to a finite-rank form by quasi-Hankel flat extension, and read the
decomposition off joint eigenvectors of the multiplication operators.
"""

from .algebra import (
    Monomial,
    MomentFunctional,
    ParamExpr,
    Point,
    Polynomial,
    Shape,
    apolar_pairing,
    evaluate_poly,
    evaluation_functional,
    star_action,
)
from .decompose import (
    DecomposeOptions,
    Decomposition,
    DecompositionError,
    RankBounds,
    decompose,
    expected_rank,
    hosvd_reduce,
    kruskal_bound,
    map_back,
    multilinear_rank,
    rank_bounds,
    rank_lower_bound,
    rank_upper_bound,
    reconstruct,
    verify,
)
from .eigen import (
    MultiplicationFamily,
    RootSet,
    joint_eigenvectors,
    multiplication_matrix,
    read_coordinates,
    recover_missing_coordinates,
    solve_weights,
)
from .extension import (
    BorderRelation,
    ExtensionResult,
    commutator_residual,
    flat_extension_check,
    known_column_relations,
    propagate_commutation,
    rank_factor_check,
)
from .moment import (
    HankelMatrix,
    MonomialBasis,
    basis_plus,
    build_moment_functional,
    enumerate_monomials,
    functional_to_tensor,
    hankel,
    select_bases,
    shifted_hankel,
)

__version__ = "0.1.0"

"""Nonsymmetric algebraic two-grid methods analysed in a B-inner product.

The submodules build on each other:

* :mod:`bspace`   -- B-inner products, norms, adjoints and predicates
* :mod:`bnormal`  -- B-normality tests and admissible B construction
* :mod:`coarse`   -- coarse-grid correction and compatible transfers
* :mod:`smoother` -- symmetrized smoothers and the smoothing assumption
* :mod:`twogrid`  -- error operators and optimal transfer operators

The verification CLI lives in :mod:`btwogrid.harness`.
"""

__version__ = "0.1.0"

from .bnormal import (
    AdmissibleB,
    EigenStructure,
    admissible_b,
    b_unitary_diagonalize,
    characterize_b_normality,
    diagonalize,
    sample_admissible_b,
)
from .bspace import (
    DEFAULT_TOL,
    HpdMatrix,
    ToleranceProfile,
    as_hpd,
    b_adjoint,
    b_inner,
    b_mat_norm,
    b_vec_norm,
    is_b_normal,
    is_b_orthogonal_matrix,
    is_b_unitary,
)
from .coarse import (
    TransferPair,
    check_projection_b_orthogonality,
    coarse_grid_projection,
    make_transfer_pair,
    p_star,
    projection_b_norm,
    r_star,
)
from .errors import (
    BTwoGridError,
    Defective,
    DimensionMismatch,
    NearSingularA,
    NonFiniteEntries,
    NotBNormal,
    NotHpd,
    NumericalInconsistency,
    OrderingAmbiguous,
    ParseError,
    ProjectionNotBOrthogonal,
    RankDeficient,
    SingularCoarseMatrix,
    SingularSmoother,
    SmoothingAssumptionViolated,
    TrivialProjection,
)
from .smoother import (
    build_smoother_bundle,
    eigenvalue_map,
    eigenvalue_map_check,
    smoothing_assumption_report,
    smoothing_spectrum,
)
from .twogrid import (
    TwoGridConfig,
    e_plus,
    e_plus_property_check,
    e_south,
    generalized_eigenpairs,
    optimal_transfers_hat,
    optimal_transfers_sharp,
    optimality_sweep,
    sharp_admissible_b,
)

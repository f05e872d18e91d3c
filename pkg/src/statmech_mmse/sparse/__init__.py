"""Sparse Gaussian signals with a magnetization prior on the support."""
from .field import ZERO_FIELD, AtomicField, GaussianField, SparseLocalField, sp_field_expectation
from .model import (
    FixedPointBranch,
    SparseParams,
    SparseState,
    fixed_points_for_field,
    psi_of_m,
    sp_critical_point,
    sp_dominant,
    sp_extreme_cases,
    sp_fixed_points,
    sp_fixed_points_discrete,
    sp_free_energy_hs,
    sp_free_energy_per_n,
    sp_local_field,
    sp_log_zhat_fixed_point,
    sp_mmse_per_n,
    sp_mutual_info_per_n,
    sp_state,
)
from .prior import MagnetizationPrior, PriorExponent, prior_objective, sp_curie_weiss_approx, sp_prior_magnetization

LocalFieldDist = SparseLocalField

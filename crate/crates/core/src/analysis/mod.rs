//! Closed-form analysis: resolution probabilities of a slot, their limits,
//! density evolution thresholds and sum rates.

mod asymptotic;
mod density;
mod mpr;
mod rate;

pub use asymptotic::{
    asymptotic_profile, compare_regimes, critical_degree, pi_u_asymptotic, pvtc_capability, region_boundaries, t_ed_mpr,
    AsymptoticRegime, FinitePoint, PayloadRounding, RegimeOrdering, CRITICAL_TOLERANCE, T_CAP,
};
pub use density::{
    converges_at, de_evolve, de_step, de_threshold, de_threshold_with, threshold_ed_mpr, MprProfile, DEFAULT_TOL,
    GRID_MIN, GRID_POINTS, MAX_LOAD, REFINE_FACTOR, REFINE_MARGIN,
};
pub use mpr::{
    joint_pmf_a0_au, ln_pi_u_exact, ln_pi_u_half, pi_u_exact, pi_u_half, pi_u_lower_bound, sandwich_check, PmfEntry,
    PmfTable, Sandwich,
};
pub use rate::{asymptotic_sum_rate, sum_rate};

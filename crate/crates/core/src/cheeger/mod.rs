//! Cheeger constants: exact search on small grids, greedy refinement, and
//! eigenfunction-based estimates.

pub mod bruteforce;
pub mod comb;
pub mod estimator;
pub mod local_search;
pub mod mincut;

pub use bruteforce::{hk_bruteforce, BruteForceResult, DEFAULT_BUDGET};
pub use comb::{comb_spec, counterexample_comb, CombReport, CombRow};
pub use estimator::{
    best_box_partition, box_partition, faber_krahn_lower, hk_upper, hk_upper_for_spec, hk_upper_from,
    p_to_one_sweep, unit_ball_volume, verify_bilateral, BilateralOptions, BilateralReport, BilateralRow,
    CheegerReport, InequalityCheck, PToOneReport, PToOneRow, PartitionBound,
};
pub use local_search::{hk_local_search, LocalSearchResult};
pub use mincut::{h1_exact, CheegerSet};

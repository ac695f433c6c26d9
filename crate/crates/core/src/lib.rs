//! Higher-order Cheeger constants and p-Laplacian eigenvalues on voxelized
//! box-union domains.
//!
//! The pipeline runs bottom-up: [`grid`] voxelizes a domain, [`field`]
//! measures energies and Rayleigh quotients, [`spectrum`] solves for
//! eigenpairs, [`sweep`] rounds a field to its best superlevel set,
//! [`decomposition`] splits one eigenfunction into `k` disjointly supported
//! pieces, and [`cheeger`] turns all of it into bounds on `h_k`.

pub mod cheeger;
pub mod decomposition;
pub mod error;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod spectrum;
pub mod sweep;

pub use cheeger::{
    best_box_partition, box_partition, DEFAULT_BUDGET, comb_spec, counterexample_comb, faber_krahn_lower, h1_exact, hk_bruteforce,
    hk_local_search, hk_upper, hk_upper_for_spec, hk_upper_from, p_to_one_sweep, unit_ball_volume,
    verify_bilateral, BilateralOptions, BilateralReport, BilateralRow, BruteForceResult, CheegerReport, CheegerSet, CombReport,
    CombRow, InequalityCheck, LocalSearchResult, PToOneReport, PToOneRow, PartitionBound,
};
pub use decomposition::{
    assemble_regions, build_scheme, decompose, decompose_with, disjoint_family, multiaxis_decompose_experimental,
    DecomposeOptions, DecompositionCertificate, DisjointFamily, IntervalScheme, MultiaxisReport, Overlap,
    RegionFamily, DELTA_GATE,
};
pub use error::{Error, Result};
pub use field::{
    band_energy, normalized, p_energy, p_mass, p_norm, rayleigh, truncate, Exponent, LevelInterval, ScalarField,
};
pub use grid::{
    build_grid, inscribed_rectangle, BoxRegion, CellSet, DomainSpec, Grid, InscribedRectangle, PerimeterMode,
};
pub use spectrum::{
    first_eigenpair, lambda_upper_from_family, spectrum_p2, Eigenpair, EigenpairMeta, FamilyBound, SpectrumSlice,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
pub use sweep::{check_band_bound, sweep, sweep_profile, BandCheck, SweepResult};

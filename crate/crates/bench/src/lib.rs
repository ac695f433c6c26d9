//! Shared fixtures for the benchmarks.

use cheeger_core::{build_grid, first_eigenpair, DomainSpec, Eigenpair, Exponent, Grid, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Grid of a builtin domain.
pub fn grid(name: &str, resolution: u32) -> Grid {
    let spec = DomainSpec::builtin(name).expect("builtin domain");
    build_grid(&spec, resolution).expect("valid resolution")
}

/// Grid plus its first `p`-eigenpair.
pub fn eigen_fixture(name: &str, resolution: u32, p: f64) -> (Grid, Eigenpair) {
    let g = grid(name, resolution);
    let e = first_eigenpair(&g, Exponent::new(p).expect("p > 1"), DEFAULT_TOL, DEFAULT_MAX_ITER).expect("converges");
    (g, e)
}

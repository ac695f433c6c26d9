//! Level-set rounding: the best superlevel set of a field, and the band
//! energy lower bound that drives it.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{band_energy, band_set, rayleigh, superlevel_set, LevelInterval, ScalarField};
use crate::grid::{CellSet, Grid, PerimeterMode};

/// Best superlevel set of `|psi|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Smallest threshold (on the scale of `|psi|`) attaining the minimum.
    pub t_opt: f64,
    pub set: CellSet,
    pub phi: f64,
    pub phi_of_field: f64,
    /// `p * R(psi)^(1/p)`.
    pub bound: f64,
    /// Lattice factor `(2n)^(1/q)`; `phi <= chain_slack * bound` always holds.
    pub chain_slack: f64,
    pub p: f64,
    pub mode: PerimeterMode,
}

impl SweepResult {
    pub fn discrete_bound(&self) -> f64 {
        self.chain_slack * self.bound
    }
}

/// `(threshold, iso_ratio)` for every distinct positive value of `|psi|`,
/// in descending threshold order.
pub fn sweep_profile(grid: &Grid, psi: &ScalarField, mode: PerimeterMode) -> Result<Vec<(f64, f64)>> {
    if psi.len() != grid.len() {
        return Err(Error::FieldLength {
            expected: grid.len(),
            got: psi.len(),
        });
    }
    if psi.is_zero() {
        return Err(Error::ZeroField);
    }
    let abs: Vec<f64> = psi.values().iter().map(|v| v.abs()).collect();
    let mut order: Vec<usize> = (0..abs.len()).filter(|&c| abs[c] > 0.0).collect();
    order.sort_by(|&a, &b| abs[b].total_cmp(&abs[a]).then(a.cmp(&b)));

    let mut mask = vec![false; grid.len()];
    let mut faces: isize = 0;
    let mut profile = Vec::new();
    let mut pos = 0;
    while pos < order.len() {
        let t = abs[order[pos]];
        while pos < order.len() && abs[order[pos]] == t {
            let c = order[pos];
            faces += grid.join_delta(&mask, c, mode);
            mask[c] = true;
            pos += 1;
        }
        profile.push((t, grid.ratio_from_counts(faces as usize, pos)));
    }
    Ok(profile)
}

/// Scans every superlevel set of `|psi|` in one descending pass and returns
/// the best one. Ties go to the smallest threshold.
///
/// Running on `|psi|` rather than the positive part keeps the bound
/// `phi <= p R(psi)^(1/p)` meaningful for sign-changing fields.
pub fn sweep(grid: &Grid, psi: &ScalarField, p: f64, mode: PerimeterMode) -> Result<SweepResult> {
    let profile = sweep_profile(grid, psi, mode)?;
    let (mut t_opt, mut phi) = profile[0];
    for &(t, r) in &profile[1..] {
        if r <= phi {
            t_opt = t;
            phi = r;
        }
    }
    let abs = psi.abs();
    let set = superlevel_set(&abs, t_opt);
    let q = p / (p - 1.0);
    Ok(SweepResult {
        t_opt,
        set,
        phi,
        phi_of_field: phi,
        bound: p * rayleigh(grid, psi, p)?.powf(1.0 / p),
        chain_slack: (2.0 * grid.dim() as f64).powf(1.0 / q),
        p,
        mode,
    })
}

/// Both sides of the band energy bound
/// `E_f(I) >= (phi(f) |{f >= a}| |I|)^p / |f^{-1}(I)|^(p/q)` for `I = [b, a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandCheck {
    pub interval: LevelInterval,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; infinite when `rhs = 0`.
    pub slack: f64,
    pub phi: f64,
    pub t_opt: f64,
    pub superlevel_volume: f64,
    pub band_volume: f64,
    /// `rhs = 0`, so the bound holds for free.
    pub trivial: bool,
    pub violated: bool,
}

/// One row of the diagnostic table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandCheckRow {
    pub spec: String,
    pub resolution: u32,
    pub p: f64,
    pub mode: PerimeterMode,
    pub t_opt: f64,
    pub phi: f64,
    pub bound: f64,
    pub slack: f64,
}

impl BandCheck {
    pub fn row(&self, grid: &Grid, p: f64, mode: PerimeterMode) -> BandCheckRow {
        BandCheckRow {
            spec: grid.name().to_string(),
            resolution: grid.resolution(),
            p,
            mode,
            t_opt: self.t_opt,
            phi: self.phi,
            bound: self.rhs,
            slack: self.slack,
        }
    }
}

/// Writes diagnostic rows as CSV with a header.
pub fn write_band_rows<W: Write>(rows: &[BandCheckRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn check_band_bound(
    grid: &Grid,
    f: &ScalarField,
    p: f64,
    interval: LevelInterval,
    mode: PerimeterMode,
) -> Result<BandCheck> {
    if let Some((cell, value)) = f.first_negative() {
        return Err(Error::NegativeValue { cell, value });
    }
    if !(interval.lo >= 0.0 && interval.hi > interval.lo) {
        return Err(Error::InvalidArgument(format!(
            "band needs hi > lo >= 0, got [{}, {}]",
            interval.lo, interval.hi
        )));
    }
    let sw = sweep(grid, f, p, mode)?;
    let q = p / (p - 1.0);
    let lhs = band_energy(grid, f, p, interval);
    let superlevel_volume = grid.volume(&superlevel_set(f, interval.hi));
    let band_volume = grid.volume(&band_set(f, interval));
    let rhs = if band_volume == 0.0 {
        0.0
    } else {
        (sw.phi * superlevel_volume * interval.width()).powf(p) / band_volume.powf(p / q)
    };
    let trivial = rhs == 0.0;
    let slack = if trivial { f64::INFINITY } else { lhs / rhs };
    Ok(BandCheck {
        interval,
        lhs,
        rhs,
        slack,
        phi: sw.phi,
        t_opt: sw.t_opt,
        superlevel_volume,
        band_volume,
        trivial,
        violated: slack < 1.0,
    })
}

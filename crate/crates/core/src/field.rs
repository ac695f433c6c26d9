//! Scalar fields on a grid and the measure-theoretic quantities built on
//! them: p-Dirichlet energy, p-norms, level masses, band energies and
//! relative-distance truncation.
//!
//! The gradient model is the face-difference energy. A face of area `A`
//! whose endpoints sit a distance `d` apart contributes
//! `A / d^(p-1) * |f_u - f_v|^p`. Boundary faces use a ghost value `0`
//! placed on the face itself, so `d` is half a cell there. At `p = 1` the
//! weights reduce to `A` and the energy of an indicator is exactly its
//! Dirichlet perimeter.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellSet, Grid};

/// One real value per grid cell, in cell order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { cell });
        }
        Ok(ScalarField { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        ScalarField {
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        ScalarField {
            values: grid.cells().iter().map(|c| f(&c.center)).collect(),
        }
    }

    pub fn indicator(grid: &Grid, set: &CellSet) -> Self {
        let mut values = vec![0.0; grid.len()];
        for c in set.iter() {
            values[c] = 1.0;
        }
        ScalarField { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Cells with a nonzero value.
    pub fn support(&self) -> CellSet {
        CellSet::from_mask(&self.values.iter().map(|&v| v != 0.0).collect::<Vec<_>>())
    }

    /// First cell with a negative value.
    pub fn first_negative(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .find(|(_, &v)| v < 0.0)
            .map(|(i, &v)| (i, v))
    }

    /// Writes `i0 .. i{n-1} value` rows in cell (lexicographic) order.
    pub fn write_columns<W: Write>(&self, grid: &Grid, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..grid.dim()).map(|a| format!("i{a}")).collect();
        writeln!(out, "# {} value", header.join(" "))?;
        for (cell, v) in grid.cells().iter().zip(&self.values) {
            for m in &cell.index {
                write!(out, "{m} ")?;
            }
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }

    /// Reads the format produced by [`ScalarField::write_columns`]. Rows may
    /// come in any order but every grid cell must appear exactly once.
    pub fn read_columns<R: BufRead>(grid: &Grid, input: R) -> Result<Self> {
        let mut values = vec![f64::NAN; grid.len()];
        let mut seen = vec![false; grid.len()];
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: n + 1, message };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != grid.dim() + 1 {
                return Err(parse_err(format!(
                    "expected {} columns, found {}",
                    grid.dim() + 1,
                    cols.len()
                )));
            }
            let index = cols[..grid.dim()]
                .iter()
                .map(|c| c.parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(e.to_string()))?;
            let value: f64 = cols[grid.dim()].parse().map_err(|e| parse_err(format!("{e}")))?;
            let cell = grid
                .cell_at(&index)
                .ok_or_else(|| parse_err(format!("cell {index:?} is not in the grid")))?;
            if seen[cell] {
                return Err(parse_err(format!("cell {index:?} listed twice")));
            }
            seen[cell] = true;
            values[cell] = value;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Parse {
                line: 0,
                message: format!("cell {:?} missing", grid.cells()[missing].index),
            });
        }
        ScalarField::new(grid, values)
    }
}

/// A closed interval of function values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelInterval {
    pub lo: f64,
    pub hi: f64,
}

impl LevelInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        LevelInterval { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Hölder pair `(p, q)` with `1/p + 1/q = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    p: f64,
    q: f64,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidExponent(p));
        }
        Ok(Exponent { p, q: p / (p - 1.0) })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

#[inline]
fn face_term(weight: f64, diff: f64, p: f64) -> f64 {
    if p == 2.0 {
        weight * diff * diff
    } else if p == 1.0 {
        weight * diff.abs()
    } else {
        weight * diff.abs().powf(p)
    }
}

/// Face weights `A / d^(p-1)` for interior and boundary faces.
pub(crate) fn face_weights(grid: &Grid, p: f64) -> (f64, f64) {
    let h = grid.spacing();
    let a = grid.face_area();
    (a / h.powf(p - 1.0), a / (0.5 * h).powf(p - 1.0))
}

/// `sum_faces A/d^(p-1) |f_u - f_v|^p` with zero ghosts on boundary faces.
/// Accepts `p >= 1`.
pub fn p_energy(grid: &Grid, f: &ScalarField, p: f64) -> f64 {
    let (w_in, w_bd) = face_weights(grid, p);
    let v = f.values();
    let interior: f64 = grid
        .interior_faces()
        .iter()
        .map(|face| face_term(w_in, v[face.lower] - v[face.upper], p))
        .sum();
    let boundary: f64 = grid
        .boundary_faces()
        .iter()
        .map(|face| face_term(w_bd, v[face.cell], p))
        .sum();
    interior + boundary
}

/// `(sum_cells |f|^p vol)^(1/p)`.
pub fn p_norm(grid: &Grid, f: &ScalarField, p: f64) -> f64 {
    p_mass(grid, f, p).powf(1.0 / p)
}

/// `sum_cells |f|^p vol`, the p-th power of [`p_norm`].
pub fn p_mass(grid: &Grid, f: &ScalarField, p: f64) -> f64 {
    f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() * grid.cell_volume()
}

pub fn rayleigh(grid: &Grid, f: &ScalarField, p: f64) -> Result<f64> {
    if f.is_zero() {
        return Err(Error::ZeroField);
    }
    Ok(p_energy(grid, f, p) / p_mass(grid, f, p))
}

/// Scales `f` to unit p-norm.
pub fn normalized(grid: &Grid, f: &ScalarField, p: f64) -> Result<ScalarField> {
    if f.is_zero() {
        return Err(Error::ZeroField);
    }
    Ok(f.scaled(1.0 / p_norm(grid, f, p)))
}

/// p-mass of the cells whose value lies in `interval`.
pub fn level_mass(grid: &Grid, f: &ScalarField, p: f64, interval: LevelInterval) -> f64 {
    f.values()
        .iter()
        .filter(|&&v| interval.contains(v))
        .map(|v| v.abs().powf(p))
        .sum::<f64>()
        * grid.cell_volume()
}

/// Energy restricted to faces with at least one endpoint value in
/// `interval`; boundary ghosts count as value `0`.
pub fn band_energy(grid: &Grid, f: &ScalarField, p: f64, interval: LevelInterval) -> f64 {
    let (w_in, w_bd) = face_weights(grid, p);
    let v = f.values();
    let ghost_in = interval.contains(0.0);
    let interior: f64 = grid
        .interior_faces()
        .iter()
        .filter(|face| interval.contains(v[face.lower]) || interval.contains(v[face.upper]))
        .map(|face| face_term(w_in, v[face.lower] - v[face.upper], p))
        .sum();
    let boundary: f64 = grid
        .boundary_faces()
        .iter()
        .filter(|face| ghost_in || interval.contains(v[face.cell]))
        .map(|face| face_term(w_bd, v[face.cell], p))
        .sum();
    interior + boundary
}

/// Cells with value `>= t`.
pub fn superlevel_set(f: &ScalarField, t: f64) -> CellSet {
    CellSet::from_mask(&f.values().iter().map(|&v| v >= t).collect::<Vec<_>>())
}

/// Cells whose value lies in `interval`.
pub fn band_set(f: &ScalarField, interval: LevelInterval) -> CellSet {
    CellSet::from_mask(&f.values().iter().map(|&v| interval.contains(v)).collect::<Vec<_>>())
}

/// Relative distance `inf_{b in I} |a - b| / b` for an interval with `lo > 0`.
pub fn rel_dist(a: f64, interval: LevelInterval) -> Result<f64> {
    if !(interval.lo > 0.0) {
        return Err(Error::NonPositiveInterval {
            lo: interval.lo,
            hi: interval.hi,
        });
    }
    Ok(rel_dist_unchecked(a, interval))
}

#[inline]
pub(crate) fn rel_dist_unchecked(a: f64, interval: LevelInterval) -> f64 {
    if a < interval.lo {
        (interval.lo - a) / interval.lo
    } else if a > interval.hi {
        (a - interval.hi) / interval.hi
    } else {
        0.0
    }
}

/// Relative distance from `a` to the nearest interval of `region`.
pub(crate) fn region_dist(a: f64, region: &[LevelInterval]) -> f64 {
    region
        .iter()
        .map(|&i| rel_dist_unchecked(a, i))
        .fold(f64::INFINITY, f64::min)
}

/// `f * max(0, 1 - dist(f, region) / eps)` cell by cell.
pub fn truncate(
    f: &ScalarField,
    region: &[LevelInterval],
    eps: f64,
) -> Result<ScalarField> {
    if region.is_empty() {
        return Err(Error::InvalidArgument("truncation region is empty".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    if let Some(bad) = region.iter().find(|i| !(i.lo > 0.0)) {
        return Err(Error::NonPositiveInterval { lo: bad.lo, hi: bad.hi });
    }
    if let Some((cell, value)) = f.first_negative() {
        return Err(Error::NegativeValue { cell, value });
    }
    Ok(f.map(|v| v * (1.0 - region_dist(v, region) / eps).max(0.0)))
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::grid::{build_grid, DomainSpec, PerimeterMode};
    use proptest::prelude::*;

    fn square() -> Grid {
        build_grid(&DomainSpec::unit_square(), 4).unwrap()
    }

    proptest! {
        #[test]
        fn coarea_identity_holds_for_every_cell_set(bits in any::<u16>()) {
            let g = square();
            let set = CellSet::new(&g, (0..16).filter(|i| bits >> i & 1 == 1)).unwrap();
            let e = p_energy(&g, &ScalarField::indicator(&g, &set), 1.0);
            prop_assert!((e - g.perimeter(&set, PerimeterMode::Dirichlet)).abs() < 1e-12);
        }

        #[test]
        fn cavalieri_sum_matches_integral(vals in proptest::collection::vec(0u8..20, 16)) {
            let g = square();
            let f = ScalarField::new(&g, vals.iter().map(|&v| f64::from(v) / 4.0).collect()).unwrap();
            let mut levels: Vec<f64> = f.values().to_vec();
            levels.push(0.0);
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            let layered: f64 = levels
                .windows(2)
                .map(|w| (w[1] - w[0]) * g.volume(&superlevel_set(&f, w[1])))
                .sum();
            let direct: f64 = f.values().iter().sum::<f64>() * g.cell_volume();
            prop_assert_eq!(layered, direct);
        }

        #[test]
        fn covering_bands_never_undercount(vals in proptest::collection::vec(0.0f64..1.0, 16), cuts in 1usize..6) {
            let g = square();
            let f = ScalarField::new(&g, vals).unwrap();
            let total = p_energy(&g, &f, 2.0);
            let edges: Vec<f64> = (0..=cuts).map(|j| j as f64 / cuts as f64).collect();
            let banded: f64 = edges
                .windows(2)
                .map(|w| band_energy(&g, &f, 2.0, LevelInterval::new(w[0], w[1])))
                .sum();
            prop_assert!(banded >= total - 1e-12);
        }

        #[test]
        fn rel_dist_vanishes_exactly_inside(a in 0.0f64..4.0, lo in 0.1f64..2.0, w in 0.0f64..2.0) {
            let i = LevelInterval::new(lo, lo + w);
            let d = rel_dist(a, i).unwrap();
            prop_assert_eq!(d == 0.0, i.contains(a));
            // Continuity across the endpoints.
            let eps = 1e-9;
            prop_assert!((rel_dist(lo - eps, i).unwrap() - 0.0).abs() < 1e-8);
            prop_assert!((rel_dist(lo + w + eps, i).unwrap() - 0.0).abs() < 1e-8);
        }

        #[test]
        fn truncation_shrinks_norm_and_support(vals in proptest::collection::vec(0.0f64..2.0, 16), lo in 0.2f64..1.0, eps in 0.01f64..0.5) {
            let g = square();
            let f = ScalarField::new(&g, vals).unwrap();
            let region = [LevelInterval::new(lo, lo * 1.3)];
            let t = truncate(&f, &region, eps).unwrap();
            prop_assert!(p_norm(&g, &t, 2.0) <= p_norm(&g, &f, 2.0) + 1e-15);
            for c in t.support().iter() {
                prop_assert!(region_dist(f.get(c), &region) < eps);
            }
        }
    }
}

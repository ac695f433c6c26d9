//! Splits a nonnegative field into disjointly supported pieces with
//! controlled Rayleigh quotients.
//!
//! Values are bucketed into geometric intervals `(alpha^(i+1), alpha^i]`,
//! each cut into `12k` equal subintervals. Subintervals carrying enough mass
//! relative to the interval above are *heavy*; an interval with at least
//! `6k` heavy subintervals is *balanced*. Every balanced interval donates its
//! heavy subintervals of rank `2, 5, 8, ...` to `2k` regions, leaving the
//! neighbours in between unassigned so that distinct regions stay apart in
//! relative distance. Truncating the field around each region gives `2k`
//! disjointly supported functions, of which the `k` with least energy are
//! kept.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{p_energy, p_mass, p_norm, rayleigh, truncate, Exponent, LevelInterval, ScalarField};
use crate::grid::{Grid, PerimeterMode};
use crate::sweep::sweep;

const RESIDUAL_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-10;
/// Smallest accepted total mass of the balanced intervals' parents.
pub const DELTA_GATE: f64 = 0.1;

/// Heavy-subinterval constant for given `p` and `alpha`.
pub fn heavy_constant(p: Exponent, alpha: f64) -> f64 {
    let (p, q) = (p.p(), p.q());
    let inner = 3.0 * (alpha.powf(p * (1.0 + 1.0 / q)) * (1.0 - alpha)).powf(p) / 12f64.powf(p);
    inner.powf(q / p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subinterval {
    pub j: usize,
    pub range: LevelInterval,
    pub mass: f64,
    pub heavy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub i: i32,
    pub range: LevelInterval,
    pub mass: f64,
    /// Mass of interval `i - 1` (zero above the top interval).
    pub parent_mass: f64,
    /// `c * delta * parent_mass / k`.
    pub heavy_threshold: f64,
    pub subintervals: Vec<Subinterval>,
    pub heavy_count: usize,
    pub balanced: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalScheme {
    pub alpha: f64,
    pub k: usize,
    pub p: Exponent,
    pub phi: f64,
    pub rayleigh: f64,
    pub delta: f64,
    pub c: f64,
    pub i_lo: i32,
    pub i_hi: i32,
    pub intervals: Vec<DyadicInterval>,
    #[serde(rename = "big_delta")]
    pub delta_sum: f64,
    pub residual_mass: f64,
    pub total_mass: f64,
}

/// Tuning knobs for sensitivity experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposeOptions {
    pub alpha: f64,
    /// Overrides the heavy constant.
    pub c: Option<f64>,
    /// Perimeter convention for the sweep that fixes `delta`.
    pub mode: PerimeterMode,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            alpha: 0.5,
            c: None,
            mode: PerimeterMode::Dirichlet,
        }
    }
}

/// Index `i` with `alpha^(i+1) < v <= alpha^i`.
fn interval_index(v: f64, alpha: f64) -> i32 {
    let mut i = (v.ln() / alpha.ln()).floor() as i32;
    while v > alpha.powi(i) {
        i -= 1;
    }
    while v <= alpha.powi(i + 1) {
        i += 1;
    }
    i
}

pub fn build_scheme(
    grid: &Grid,
    f: &ScalarField,
    p: Exponent,
    k: usize,
    opts: &DecomposeOptions,
) -> Result<IntervalScheme> {
    let alpha = opts.alpha;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if f.len() != grid.len() {
        return Err(Error::FieldLength {
            expected: grid.len(),
            got: f.len(),
        });
    }
    if let Some((cell, value)) = f.first_negative() {
        return Err(Error::NegativeValue { cell, value });
    }
    if f.is_zero() {
        return Err(Error::ZeroField);
    }
    let pv = p.p();
    let norm = p_norm(grid, f, pv);
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidArgument(format!("field must have unit p-norm, got {norm}")));
    }

    let phi = sweep(grid, f, pv, opts.mode)?.phi;
    let r = rayleigh(grid, f, pv)?;
    let delta = (phi.powf(pv) / r).powf(p.q() / pv);
    let c = opts.c.unwrap_or_else(|| heavy_constant(p, alpha));

    let vol = grid.cell_volume();
    let cells: Vec<(i32, f64, f64)> = f
        .values()
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| (interval_index(v, alpha), v, v.powf(pv) * vol))
        .collect();
    let total_mass: f64 = cells.iter().map(|c| c.2).sum();
    let i_lo = interval_index(f.max(), alpha);

    // Extend downward in value until what is left is negligible.
    let mut by_index: Vec<(i32, f64)> = cells.iter().map(|c| (c.0, c.2)).collect();
    by_index.sort_by_key(|e| std::cmp::Reverse(e.0));
    let mut tail = 0.0;
    let mut i_hi = i_lo;
    for &(i, m) in &by_index {
        if tail + m >= RESIDUAL_TOL * total_mass {
            i_hi = i;
            break;
        }
        tail += m;
    }
    let i_hi = i_hi.max(i_lo);

    let parts = 12 * k;
    let n_int = (i_hi - i_lo + 1) as usize;
    let mut sub_mass = vec![vec![0.0; parts]; n_int];
    let mut residual_mass = 0.0;
    for &(i, v, m) in &cells {
        if i > i_hi {
            residual_mass += m;
            continue;
        }
        let top = alpha.powi(i);
        let w = top * (1.0 - alpha) / parts as f64;
        let j = (((top - v) / w).floor().max(0.0) as usize).min(parts - 1);
        sub_mass[(i - i_lo) as usize][j] += m;
    }

    let mut intervals = Vec::with_capacity(n_int);
    let mut parent_mass = 0.0;
    let mut delta_sum = 0.0;
    for (slot, masses) in sub_mass.into_iter().enumerate() {
        let i = i_lo + slot as i32;
        let top = alpha.powi(i);
        let w = top * (1.0 - alpha) / parts as f64;
        let heavy_threshold = c * delta * parent_mass / k as f64;
        let subintervals: Vec<Subinterval> = masses
            .iter()
            .enumerate()
            .map(|(j, &mass)| Subinterval {
                j,
                range: LevelInterval::new(top - (j + 1) as f64 * w, top - j as f64 * w),
                mass,
                heavy: mass >= heavy_threshold,
            })
            .collect();
        let mass: f64 = masses.iter().sum();
        let heavy_count = subintervals.iter().filter(|s| s.heavy).count();
        let balanced = heavy_count >= 6 * k;
        if balanced {
            delta_sum += parent_mass;
        }
        intervals.push(DyadicInterval {
            i,
            range: LevelInterval::new(alpha.powi(i + 1), top),
            mass,
            parent_mass,
            heavy_threshold,
            subintervals,
            heavy_count,
            balanced,
        });
        parent_mass = mass;
    }

    Ok(IntervalScheme {
        alpha,
        k,
        p,
        phi,
        rayleigh: r,
        delta,
        c,
        i_lo,
        i_hi,
        intervals,
        delta_sum,
        residual_mass,
        total_mass,
    })
}

#[derive(Serialize)]
struct SchemeRow {
    i: i32,
    j: usize,
    lo: f64,
    hi: f64,
    mass: f64,
    heavy: bool,
    balanced: bool,
}

impl IntervalScheme {
    pub fn epsilon(&self) -> f64 {
        (1.0 - self.alpha) / (12 * self.k) as f64
    }

    pub fn balanced_count(&self) -> usize {
        self.intervals.iter().filter(|i| i.balanced).count()
    }

    /// One CSV row per subinterval: `i, j, lo, hi, mass, heavy, balanced`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for int in &self.intervals {
            for s in &int.subintervals {
                w.serialize(SchemeRow {
                    i: int.i,
                    j: s.j,
                    lo: s.range.lo,
                    hi: s.range.hi,
                    mass: s.mass,
                    heavy: s.heavy,
                    balanced: int.balanced,
                })
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// A subinterval assigned to a region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubintervalRef {
    pub i: i32,
    pub j: usize,
    pub range: LevelInterval,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionFamily {
    pub regions: Vec<Vec<SubintervalRef>>,
    pub epsilon: f64,
    /// Smallest region mass.
    pub density: f64,
    pub separation_ok: bool,
    /// `min lo_upper (1 - eps) / (hi_lower (1 + eps)) - 1` over pairs of
    /// subintervals in different regions; positive means the truncation
    /// windows cannot meet.
    pub separation_margin: f64,
}

impl RegionFamily {
    pub fn masses(&self) -> Vec<f64> {
        self.regions.iter().map(|r| r.iter().map(|s| s.mass).sum()).collect()
    }
}

/// Picks the heavy subintervals of rank `3a - 1` (1-based, ascending `j`)
/// of every balanced interval for regions `a = 1..=2k`.
pub fn assemble_regions(scheme: &IntervalScheme) -> Result<RegionFamily> {
    let k = scheme.k;
    let eps = scheme.epsilon();
    let mut regions: Vec<Vec<SubintervalRef>> = vec![Vec::new(); 2 * k];
    for int in scheme.intervals.iter().filter(|i| i.balanced) {
        let heavy: Vec<&Subinterval> = int.subintervals.iter().filter(|s| s.heavy).collect();
        if heavy.len() < 6 * k {
            return Err(Error::UnbalancedInterval {
                interval: int.i,
                heavy: heavy.len(),
                needed: 6 * k,
            });
        }
        for (a, region) in regions.iter_mut().enumerate() {
            let s = heavy[3 * a + 1];
            region.push(SubintervalRef {
                i: int.i,
                j: s.j,
                range: s.range,
                mass: s.mass,
            });
        }
    }

    let mut margin = f64::INFINITY;
    for a in 0..regions.len() {
        for b in a + 1..regions.len() {
            for s in &regions[a] {
                for t in &regions[b] {
                    let (low, high) = if s.range.hi <= t.range.lo { (s, t) } else { (t, s) };
                    let m = high.range.lo * (1.0 - eps) / (low.range.hi * (1.0 + eps)) - 1.0;
                    margin = margin.min(m);
                }
            }
        }
    }
    let density = regions
        .iter()
        .map(|r| r.iter().map(|s| s.mass).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(RegionFamily {
        regions,
        epsilon: eps,
        density,
        separation_ok: margin >= 0.0,
        separation_margin: margin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCertificate {
    pub delta: f64,
    #[serde(rename = "big_delta")]
    pub delta_sum: f64,
    pub epsilon: f64,
    pub c: f64,
    /// Region density `W`.
    pub density: f64,
    pub rayleigh_f: f64,
    pub phi_f: f64,
    /// `2^(p+1) R(f) / (k eps^p W)`.
    pub region_bound: f64,
    /// `(24k / (1 - alpha))^p 2 R(f) / (c delta Delta)`.
    pub separation_bound: f64,
    /// Measured `max_i R(f_i)`.
    pub max_member_rayleigh: f64,
    /// Allowed ratio of `max_member_rayleigh` to `region_bound`.
    pub slack_factor: f64,
    /// `max_i R(f_i) / (k^p (R(f) / phi(f))^q)`.
    pub effective_constant: f64,
    /// Energies of all `2k` truncations, in region order.
    pub all_energies: Vec<f64>,
    /// `min_i ||f_i||_p^p` over all `2k` truncations.
    pub min_mass: f64,
    /// `2 sum_j E(f_j) / (k min_i ||f_i||_p^p)`.
    pub averaging_bound: f64,
}

impl DecompositionCertificate {
    pub fn holds(&self) -> bool {
        self.max_member_rayleigh <= self.slack_factor * self.region_bound
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisjointFamily {
    pub members: Vec<ScalarField>,
    pub rayleighs: Vec<f64>,
    pub energies: Vec<f64>,
    /// Region index (0-based, of `2k`) behind each member.
    pub regions: Vec<usize>,
    /// The normalized nonnegative field that was split.
    pub source: ScalarField,
    pub certificate: DecompositionCertificate,
}

/// Truncates `f` around each of the `2k` regions and keeps the `k` pieces of
/// least energy.
pub fn disjoint_family(
    grid: &Grid,
    f: &ScalarField,
    scheme: &IntervalScheme,
    regions: &RegionFamily,
) -> Result<DisjointFamily> {
    let k = scheme.k;
    let p = scheme.p.p();
    if !(regions.density > 0.0) {
        return Err(Error::Vacuous(format!(
            "region density is {} with {} balanced intervals",
            regions.density,
            scheme.balanced_count()
        )));
    }
    let eps = regions.epsilon;
    let pieces = regions
        .regions
        .iter()
        .map(|r| {
            let ranges: Vec<LevelInterval> = r.iter().map(|s| s.range).collect();
            truncate(f, &ranges, eps)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut owner: Vec<Option<usize>> = vec![None; grid.len()];
    for (a, piece) in pieces.iter().enumerate() {
        for (cell, &v) in piece.values().iter().enumerate() {
            if v != 0.0 {
                if let Some(b) = owner[cell] {
                    return Err(Error::OverlappingSupports {
                        first: b,
                        second: a,
                        cell,
                    });
                }
                owner[cell] = Some(a);
            }
        }
    }
    if let Some(a) = pieces.iter().position(|f| f.is_zero()) {
        return Err(Error::Vacuous(format!("truncation {a} is identically zero")));
    }

    let energies: Vec<f64> = pieces.iter().map(|g| p_energy(grid, g, p)).collect();
    let masses: Vec<f64> = pieces.iter().map(|g| p_mass(grid, g, p)).collect();
    let mut order: Vec<usize> = (0..pieces.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();

    let members: Vec<ScalarField> = order.iter().map(|&a| pieces[a].clone()).collect();
    let rayleighs: Vec<f64> = order.iter().map(|&a| energies[a] / masses[a]).collect();
    let chosen_energies: Vec<f64> = order.iter().map(|&a| energies[a]).collect();

    let kf = k as f64;
    let r = scheme.rayleigh;
    let region_bound = 2f64.powf(p + 1.0) * r / (kf * eps.powf(p) * regions.density);
    let separation_bound =
        (24.0 * kf / (1.0 - scheme.alpha)).powf(p) * 2.0 * r / (scheme.c * scheme.delta * scheme.delta_sum);
    let max_member_rayleigh = rayleighs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_mass = masses.iter().copied().fold(f64::INFINITY, f64::min);
    let averaging_bound = 2.0 * energies.iter().sum::<f64>() / (kf * min_mass);
    let effective_constant = max_member_rayleigh / (kf.powf(p) * (r / scheme.phi).powf(scheme.p.q()));

    Ok(DisjointFamily {
        members,
        rayleighs,
        energies: chosen_energies,
        regions: order,
        source: f.clone(),
        certificate: DecompositionCertificate {
            delta: scheme.delta,
            delta_sum: scheme.delta_sum,
            epsilon: eps,
            c: scheme.c,
            density: regions.density,
            rayleigh_f: r,
            phi_f: scheme.phi,
            region_bound,
            separation_bound,
            max_member_rayleigh,
            slack_factor: 4.0,
            effective_constant,
            all_energies: energies,
            min_mass,
            averaging_bound,
        },
    })
}

/// Full pipeline with default options.
pub fn decompose(grid: &Grid, f_raw: &ScalarField, p: Exponent, k: usize) -> Result<DisjointFamily> {
    decompose_with(grid, f_raw, p, k, &DecomposeOptions::default())
}

/// Takes `|f_raw|`, normalizes it, and runs scheme, assembly and selection.
/// Fails when the balanced parents carry less than [`DELTA_GATE`] of the
/// mass, which means the grid is too coarse for the construction.
pub fn decompose_with(
    grid: &Grid,
    f_raw: &ScalarField,
    p: Exponent,
    k: usize,
    opts: &DecomposeOptions,
) -> Result<DisjointFamily> {
    if f_raw.is_zero() {
        return Err(Error::ZeroField);
    }
    let pv = p.p();
    let abs = f_raw.abs();
    let f = abs.scaled(1.0 / p_norm(grid, &abs, pv));
    let scheme = build_scheme(grid, &f, p, k, opts)?;
    if scheme.delta_sum < DELTA_GATE {
        return Err(Error::Vacuous(format!(
            "Delta = {:.4} < {DELTA_GATE} ({} of {} intervals balanced, delta = {:.4e})",
            scheme.delta_sum,
            scheme.balanced_count(),
            scheme.intervals.len(),
            scheme.delta
        )));
    }
    let regions = assemble_regions(&scheme)?;
    disjoint_family(grid, &f, &scheme, &regions)
}

/// A pair of experimental members whose supports meet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    /// `(region, axis)` of each member.
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub witness_cell: usize,
    /// The two members agree on every cell.
    pub identical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiaxisReport {
    /// `families[axis][region]`.
    pub families: Vec<Vec<ScalarField>>,
    pub overlaps: Vec<Overlap>,
}

/// Per-axis cutoffs `theta_{i,j}(x) = max(0, 1 - dist(f(x), I_i) / eps)`
/// taken literally: the window only sees the value `f(x)`, never the axis
/// `j`, so the members for different axes coincide. The report lists every
/// overlapping pair rather than patching the construction.
pub fn multiaxis_decompose_experimental(
    grid: &Grid,
    f: &ScalarField,
    p: Exponent,
    k: usize,
) -> Result<MultiaxisReport> {
    let n = grid.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("needs a grid of dimension at least 2".into()));
    }
    let abs = f.abs();
    let fnorm = abs.scaled(1.0 / p_norm(grid, &abs, p.p()));
    let scheme = build_scheme(grid, &fnorm, p, k, &DecomposeOptions::default())?;
    let regions = assemble_regions(&scheme)?;
    let base = disjoint_family(grid, &fnorm, &scheme, &regions)?;
    let windows: Vec<Vec<LevelInterval>> = base
        .regions
        .iter()
        .map(|&a| regions.regions[a].iter().map(|s| s.range).collect())
        .collect();

    let families = (0..n)
        .map(|_axis| {
            windows
                .iter()
                .map(|w| truncate(&fnorm, w, regions.epsilon))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let flat: Vec<((usize, usize), &ScalarField)> = families
        .iter()
        .enumerate()
        .flat_map(|(axis, fam)| fam.iter().enumerate().map(move |(i, g)| ((i, axis), g)))
        .collect();
    let mut overlaps = Vec::new();
    for x in 0..flat.len() {
        for y in x + 1..flat.len() {
            let (a, b) = (flat[x].1.values(), flat[y].1.values());
            if let Some(cell) = (0..a.len()).find(|&c| a[c] != 0.0 && b[c] != 0.0) {
                overlaps.push(Overlap {
                    first: flat[x].0,
                    second: flat[y].0,
                    witness_cell: cell,
                    identical: a == b,
                });
            }
        }
    }
    Ok(MultiaxisReport { families, overlaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, DomainSpec};
    use crate::spectrum::{first_eigenpair, spectrum_p2, DEFAULT_MAX_ITER, DEFAULT_TOL};
    use crate::field::normalized;
    use crate::grid::CellSet;
    use std::f64::consts::PI;

    fn exp(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    fn eigenfield(spec: DomainSpec, res: u32, p: f64) -> (Grid, ScalarField) {
        let g = build_grid(&spec, res).unwrap();
        let e = first_eigenpair(&g, exp(p), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        (g, e.field)
    }

    #[test]
    fn heavy_constant_at_p2() {
        assert!((heavy_constant(exp(2.0), 0.5) - 1.0 / 12288.0).abs() < 1e-18);
    }

    #[test]
    fn interval_index_brackets() {
        for &(v, i) in &[(1.0, 0), (0.75, 0), (0.5, 1), (0.500001, 0), (3.0, -2), (2.0, -1), (0.2, 2)] {
            assert_eq!(interval_index(v, 0.5), i, "v = {v}");
        }
    }

    #[test]
    fn k1_top_interval_layout() {
        let g = build_grid(&DomainSpec::unit_interval(), 8).unwrap();
        // Values in (1/2, 1] land in interval 0 of twelve subintervals of width 1/24.
        let f = normalized(&g, &ScalarField::constant(&g, 1.0), 2.0).unwrap();
        let s = build_scheme(&g, &f, exp(2.0), 1, &DecomposeOptions::default()).unwrap();
        assert_eq!(s.i_lo, 0);
        let top = &s.intervals[0];
        assert_eq!(top.range, LevelInterval::new(0.5, 1.0));
        assert_eq!(top.subintervals.len(), 12);
        for sub in &top.subintervals {
            assert!((sub.range.width() - 1.0 / 24.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_valued_field_has_one_populated_subinterval() {
        let g = build_grid(&DomainSpec::unit_interval(), 8).unwrap();
        let half = CellSet::new(&g, 0..4).unwrap();
        let f = normalized(&g, &ScalarField::indicator(&g, &half), 2.0).unwrap();
        let s = build_scheme(&g, &f, exp(2.0), 1, &DecomposeOptions::default()).unwrap();
        let nonempty: Vec<_> = s.intervals.iter().filter(|i| i.mass > 0.0).collect();
        assert_eq!(nonempty.len(), 1);
        let populated: Vec<_> = nonempty[0].subintervals.iter().filter(|x| x.mass > 0.0).collect();
        assert_eq!(populated.len(), 1);
        assert!((populated[0].mass - 1.0).abs() < 1e-12);
    }

    fn check_scheme_invariants(s: &IntervalScheme) {
        let mut sum = s.residual_mass;
        for int in &s.intervals {
            let sub: f64 = int.subintervals.iter().map(|x| x.mass).sum();
            assert!((sub - int.mass).abs() < 1e-10);
            sum += int.mass;
            let t = s.c * s.delta * int.parent_mass / s.k as f64;
            assert_eq!(t, int.heavy_threshold);
            for x in &int.subintervals {
                assert_eq!(x.heavy, x.mass >= t);
            }
            assert_eq!(int.balanced, int.heavy_count >= 6 * s.k);
        }
        assert!((sum - 1.0).abs() < 1e-10, "{sum}");
        assert!(s.residual_mass < 1e-12);
        for w in s.intervals.windows(2) {
            assert_eq!(w[1].parent_mass, w[0].mass);
        }
    }

    #[test]
    fn scheme_invariants_on_eigenfields() {
        for p in [1.5, 2.0, 3.0] {
            let (g, f) = eigenfield(DomainSpec::unit_interval(), 256, p);
            for k in 1..=3 {
                let s = build_scheme(&g, &f, exp(p), k, &DecomposeOptions::default()).unwrap();
                check_scheme_invariants(&s);
            }
        }
    }

    fn toy_scheme(k: usize, heavy_js: &[usize]) -> IntervalScheme {
        let parts = 12 * k;
        let subintervals = (0..parts)
            .map(|j| Subinterval {
                j,
                range: LevelInterval::new(1.0 - (j + 1) as f64 / (2 * parts) as f64, 1.0 - j as f64 / (2 * parts) as f64),
                mass: 0.01,
                heavy: heavy_js.contains(&j),
            })
            .collect();
        IntervalScheme {
            alpha: 0.5,
            k,
            p: exp(2.0),
            phi: 1.0,
            rayleigh: 1.0,
            delta: 1.0,
            c: 1.0,
            i_lo: 0,
            i_hi: 0,
            intervals: vec![DyadicInterval {
                i: 0,
                range: LevelInterval::new(0.5, 1.0),
                mass: 0.01 * parts as f64,
                parent_mass: 0.0,
                heavy_threshold: 0.0,
                subintervals,
                heavy_count: heavy_js.len(),
                balanced: heavy_js.len() >= 6 * k,
            }],
            delta_sum: 0.0,
            residual_mass: 0.0,
            total_mass: 1.0,
        }
    }

    #[test]
    fn region_ranks_follow_the_skip_rule() {
        let r = assemble_regions(&toy_scheme(1, &[0, 1, 2, 3, 4, 5])).unwrap();
        let picked: Vec<usize> = r.regions.iter().map(|x| x[0].j).collect();
        assert_eq!(picked, vec![1, 4]);
        assert!(r.separation_ok && r.separation_margin > 0.0);

        let r = assemble_regions(&toy_scheme(2, &(0..12).collect::<Vec<_>>())).unwrap();
        let picked: Vec<usize> = r.regions.iter().map(|x| x[0].j).collect();
        assert_eq!(picked, vec![1, 4, 7, 10]);
        assert!(r.separation_margin > 0.0);
    }

    #[test]
    fn no_balanced_interval_means_empty_regions() {
        let r = assemble_regions(&toy_scheme(1, &[0, 1])).unwrap();
        assert!(r.regions.iter().all(|x| x.is_empty()));
        let g = build_grid(&DomainSpec::unit_interval(), 12).unwrap();
        let f = normalized(&g, &ScalarField::constant(&g, 1.0), 2.0).unwrap();
        assert!(matches!(
            disjoint_family(&g, &f, &toy_scheme(1, &[0, 1]), &r),
            Err(Error::Vacuous(_))
        ));
    }

    #[test]
    fn inconsistent_balanced_flag_is_an_error() {
        let mut s = toy_scheme(1, &[0, 1, 2]);
        s.intervals[0].balanced = true;
        assert!(matches!(assemble_regions(&s), Err(Error::UnbalancedInterval { heavy: 3, needed: 6, .. })));
    }

    #[test]
    fn interval_family_bounds_second_eigenvalue() {
        let (g, f) = eigenfield(DomainSpec::unit_interval(), 1024, 2.0);
        let fam = decompose(&g, &f, exp(2.0), 2).unwrap();
        assert_eq!(fam.members.len(), 2);
        let cert = &fam.certificate;
        assert!(fam.rayleighs.iter().all(|&r| r <= cert.separation_bound));
        assert!(cert.holds());
        let lambda2 = spectrum_p2(&g, 2).unwrap().eigenvalues[1];
        assert!((lambda2 - 4.0 * PI * PI).abs() / (4.0 * PI * PI) < 1e-2);
        assert!(cert.max_member_rayleigh >= lambda2);
    }

    #[test]
    fn single_member_obeys_truncation_bound() {
        let (g, f) = eigenfield(DomainSpec::unit_interval(), 256, 2.0);
        let fam = decompose(&g, &f, exp(2.0), 1).unwrap();
        let cert = &fam.certificate;
        assert_eq!(fam.members.len(), 1);
        assert!(fam.rayleighs[0] <= cert.region_bound);
        assert!(cert.effective_constant > 0.0);
    }

    #[test]
    fn sign_and_scale_do_not_matter() {
        let (g, f) = eigenfield(DomainSpec::unit_interval(), 128, 2.0);
        let a = decompose(&g, &f, exp(2.0), 2).unwrap();
        let b = decompose(&g, &f.scaled(-2.0), exp(2.0), 2).unwrap();
        assert_eq!(a.members, b.members);
        assert_eq!(a.regions, b.regions);
    }

    #[test]
    fn averaging_selection() {
        let (g, f) = eigenfield(DomainSpec::unit_square(), 32, 2.0);
        let fam = decompose(&g, &f, exp(2.0), 2).unwrap();
        let cert = &fam.certificate;
        let all: f64 = cert.all_energies.iter().sum();
        let chosen: f64 = fam.energies.iter().sum();
        assert!(chosen <= 0.5 * all);
        assert!(fam.rayleighs.iter().all(|&r| r <= cert.averaging_bound));
        for (x, y) in fam.members.iter().zip(fam.members.iter().skip(1)) {
            assert!(x.support().is_disjoint(&y.support()));
        }
        let src = fam.source.support();
        assert!(fam.members.iter().all(|m| m.support().iter().all(|c| src.contains(c))));
    }

    #[test]
    fn scheme_csv_has_one_row_per_subinterval() {
        let (g, f) = eigenfield(DomainSpec::unit_interval(), 64, 2.0);
        let s = build_scheme(&g, &normalized(&g, &f, 2.0).unwrap(), exp(2.0), 1, &DecomposeOptions::default()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 12 * s.intervals.len());
        assert!(text.starts_with("i,j,lo,hi,mass,heavy,balanced\n"));
    }

    #[test]
    fn multiaxis_members_coincide_across_axes() {
        let (g, f) = eigenfield(DomainSpec::unit_square(), 24, 2.0);
        let rep = multiaxis_decompose_experimental(&g, &f, exp(2.0), 1).unwrap();
        assert_eq!(rep.families.len(), 2);
        assert_eq!(rep.families[0], rep.families[1]);
        assert_eq!(rep.overlaps.len(), 1);
        assert!(rep.overlaps[0].identical);
        let line = build_grid(&DomainSpec::unit_interval(), 16).unwrap();
        let h = ScalarField::constant(&line, 1.0);
        assert!(multiaxis_decompose_experimental(&line, &h, exp(2.0), 1).is_err());
    }
}

//! Upper bounds on `h_k` from the first eigenfunction, closed-form lower
//! bounds, and the comparison tables built from them.

use serde::{Deserialize, Serialize};

use crate::cheeger::bruteforce::hk_bruteforce;
use crate::cheeger::local_search::hk_local_search;
use crate::cheeger::mincut::h1_exact;
use crate::decomposition::{decompose_with, DecomposeOptions, DecompositionCertificate};
use crate::error::{Error, Result};
use crate::field::Exponent;
use crate::grid::{build_grid, inscribed_rectangle, CellSet, DomainSpec, Grid, InscribedRectangle, PerimeterMode};
use crate::spectrum::{first_eigenpair, spectrum_p2, Eigenpair, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::sweep::sweep;

/// One measured inequality `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        InequalityCheck {
            name: name.into(),
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerReport {
    pub spec: String,
    pub resolution: u32,
    pub mode: PerimeterMode,
    pub k: usize,
    pub p: f64,
    pub h_k_upper: f64,
    pub witnesses: Vec<CellSet>,
    pub witness_ratios: Vec<f64>,
    pub h_k_exact: Option<f64>,
    pub faber_krahn_lower: Option<f64>,
    pub lambda_1: f64,
    /// `lambda_k` of the Laplacian, filled in for `p = 2`.
    pub lambda_k_p2: Option<f64>,
    /// Best sweep ratio of the first eigenfunction.
    pub phi_f: f64,
    pub member_rayleighs: Vec<f64>,
    pub member_phis: Vec<f64>,
    pub chain_slack: f64,
    pub certificate: DecompositionCertificate,
    /// `h_k_upper / (k^(1/n) (lambda_1 / phi_f)^(q/p))`.
    pub c_eff: f64,
    pub scaling_rhs: f64,
    /// Set when the pipeline ran on an inscribed box and the witnesses were
    /// carried over.
    pub inscribed: Option<InscribedRectangle>,
    pub checks: Vec<InequalityCheck>,
}

impl CheegerReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Pipeline bound: decompose the first eigenfunction into `k` pieces and
/// sweep each one.
pub fn hk_upper(grid: &Grid, p: Exponent, k: usize, mode: PerimeterMode) -> Result<CheegerReport> {
    let eig = first_eigenpair(grid, p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    hk_upper_from(grid, &eig, k, mode)
}

/// [`hk_upper`] with a precomputed eigenpair.
pub fn hk_upper_from(grid: &Grid, eig: &Eigenpair, k: usize, mode: PerimeterMode) -> Result<CheegerReport> {
    let p = eig.p;
    let pv = p.p();
    let opts = DecomposeOptions {
        mode,
        ..DecomposeOptions::default()
    };
    let family = decompose_with(grid, &eig.field, p, k, &opts)?;
    let sweeps = family
        .members
        .iter()
        .map(|m| sweep(grid, m, pv, mode))
        .collect::<Result<Vec<_>>>()?;
    let eig_sweep = sweep(grid, &eig.field, pv, mode)?;
    let chain_slack = eig_sweep.chain_slack;

    let mut checks = Vec::new();
    for (i, (s, r)) in sweeps.iter().zip(&family.rayleighs).enumerate() {
        checks.push(InequalityCheck::le(
            format!("sweep_bound[{i}]"),
            s.phi,
            chain_slack * pv * r.powf(1.0 / pv),
        ));
    }
    let cert = family.certificate.clone();
    checks.push(InequalityCheck::le(
        "truncation_certificate",
        cert.max_member_rayleigh,
        cert.slack_factor * cert.region_bound,
    ));

    let witnesses: Vec<CellSet> = sweeps.iter().map(|s| s.set.clone()).collect();
    let witness_ratios: Vec<f64> = sweeps.iter().map(|s| s.phi).collect();
    for i in 0..witnesses.len() {
        for j in i + 1..witnesses.len() {
            if let Some(cell) = witnesses[i].intersection_witness(&witnesses[j]) {
                return Err(Error::OverlappingSupports {
                    first: i,
                    second: j,
                    cell,
                });
            }
        }
    }
    let h_k_upper = witness_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_member = family.rayleighs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    checks.push(InequalityCheck::le(
        "hk_chain",
        h_k_upper,
        chain_slack * pv * max_member.powf(1.0 / pv),
    ));

    let n = grid.dim() as f64;
    let faber_krahn = (grid.convex_hint() && mode == PerimeterMode::Dirichlet)
        .then(|| faber_krahn_lower(grid.dim(), k, grid.total_volume()));
    if let Some(fk) = faber_krahn {
        checks.push(InequalityCheck::le("faber_krahn", fk, h_k_upper));
    }
    let lambda_k_p2 = if pv == 2.0 && k <= grid.len() {
        Some(spectrum_p2(grid, k)?.eigenvalues[k - 1])
    } else {
        None
    };
    let scale = (k as f64).powf(1.0 / n) * (eig.lambda / eig_sweep.phi).powf(p.q() / pv);
    let c_eff = h_k_upper / scale;

    Ok(CheegerReport {
        spec: grid.name().to_string(),
        resolution: grid.resolution(),
        mode,
        k,
        p: pv,
        h_k_upper,
        witnesses,
        witness_ratios,
        h_k_exact: None,
        faber_krahn_lower: faber_krahn,
        lambda_1: eig.lambda,
        lambda_k_p2,
        phi_f: eig_sweep.phi,
        member_rayleighs: family.rayleighs.clone(),
        member_phis: sweeps.iter().map(|s| s.phi).collect(),
        chain_slack,
        certificate: cert,
        c_eff,
        scaling_rhs: c_eff * scale,
        inscribed: None,
        checks,
    })
}

/// Runs the pipeline on `spec`, or on its inscribed box when `spec` is a
/// union of several boxes, and re-measures the witnesses inside `spec`.
pub fn hk_upper_for_spec(
    spec: &DomainSpec,
    resolution: u32,
    p: Exponent,
    k: usize,
    mode: PerimeterMode,
) -> Result<CheegerReport> {
    let omega = build_grid(spec, resolution)?;
    if spec.is_single_box() {
        return hk_upper(&omega, p, k, mode);
    }
    let ins = inscribed_rectangle(spec);
    let rect_spec = DomainSpec::new(format!("{}_inscribed", spec.name), vec![ins.rect.clone()], true)?;
    let rect = build_grid(&rect_spec, resolution)?;
    let mut report = hk_upper(&rect, p, k, mode)?;

    let moved = report
        .witnesses
        .iter()
        .map(|w| {
            rect.transfer(w, &omega)
                .ok_or_else(|| Error::InvalidDomain("inscribed box is not aligned with the grid".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = moved.iter().map(|w| omega.iso_ratio(w, mode)).collect();
    if mode == PerimeterMode::Dirichlet {
        for (i, (inside, boxed)) in ratios.iter().zip(&report.witness_ratios).enumerate() {
            report
                .checks
                .push(InequalityCheck::le(format!("domain_monotonicity[{i}]"), *inside, *boxed));
        }
    }
    report.spec = spec.name.clone();
    report.h_k_upper = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report.witnesses = moved;
    report.witness_ratios = ratios;
    report.faber_krahn_lower = None;
    report.checks.retain(|c| c.name != "faber_krahn");
    report.inscribed = Some(ins);
    Ok(report)
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => unit_ball_volume(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}

/// `n (k omega_n / |Omega|)^(1/n)`.
pub fn faber_krahn_lower(n: usize, k: usize, volume: f64) -> f64 {
    let nf = n as f64;
    nf * (k as f64 * unit_ball_volume(n) / volume).powf(1.0 / nf)
}

/// Splits the bounding index box of `grid` into `divisions[d]` nearly equal
/// slabs along each axis and returns the nonempty products, in order.
pub fn box_partition(grid: &Grid, divisions: &[usize]) -> Result<Vec<CellSet>> {
    let n = grid.dim();
    if divisions.len() != n || divisions.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "need {n} positive division counts, got {divisions:?}"
        )));
    }
    let lo: Vec<i64> = (0..n)
        .map(|d| grid.cells().iter().map(|c| c.index[d]).min().unwrap_or(0))
        .collect();
    let hi: Vec<i64> = (0..n)
        .map(|d| grid.cells().iter().map(|c| c.index[d]).max().unwrap_or(0) + 1)
        .collect();
    for d in 0..n {
        if divisions[d] as i64 > hi[d] - lo[d] {
            return Err(Error::InvalidArgument(format!(
                "cannot split {} cells into {} slabs",
                hi[d] - lo[d],
                divisions[d]
            )));
        }
    }
    let parts: usize = divisions.iter().product();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); parts];
    for (c, cell) in grid.cells().iter().enumerate() {
        let mut id = 0;
        for d in 0..n {
            let len = hi[d] - lo[d];
            let slab = ((cell.index[d] - lo[d]) * divisions[d] as i64 / len) as usize;
            id = id * divisions[d] + slab;
        }
        members[id].push(c);
    }
    if members.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("a slab product misses the domain".into()));
    }
    Ok(members.into_iter().map(CellSet::from_sorted_unchecked).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionBound {
    pub value: f64,
    pub divisions: Vec<usize>,
    pub sets: Vec<CellSet>,
}

fn factorizations(k: usize, n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![k]];
    }
    (1..=k)
        .filter(|d| k.is_multiple_of(*d))
        .flat_map(|d| {
            factorizations(k / d, n - 1).into_iter().map(move |mut rest| {
                rest.insert(0, d);
                rest
            })
        })
        .collect()
}

/// Best product-of-slabs family with exactly `k` members.
pub fn best_box_partition(grid: &Grid, k: usize, mode: PerimeterMode) -> Result<PartitionBound> {
    let mut best: Option<PartitionBound> = None;
    for divisions in factorizations(k, grid.dim()) {
        let Ok(sets) = box_partition(grid, &divisions) else {
            continue;
        };
        let value = sets.iter().map(|s| grid.iso_ratio(s, mode)).fold(0.0, f64::max);
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(PartitionBound { value, divisions, sets });
        }
    }
    best.ok_or_else(|| Error::InvalidArgument(format!("no slab family with {k} members fits the grid")))
}

/// Settings for [`verify_bilateral`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilateralOptions {
    pub resolutions: Vec<u32>,
    pub ks: Vec<usize>,
    /// For `k >= 2`, brute force runs only on grids with at most this many
    /// cells (one-dimensional grids are always attempted); `k = 1` is always
    /// exact through minimum cuts.
    pub bruteforce_cells: usize,
    pub budget: u64,
    pub local_rounds: usize,
    /// Largest accepted `max/min` of `h_k^p / lambda_k` across `k`.
    pub ratio_band: f64,
}

impl Default for BilateralOptions {
    fn default() -> Self {
        BilateralOptions {
            resolutions: vec![32],
            ks: vec![1, 2, 4],
            bruteforce_cells: 36,
            budget: crate::cheeger::bruteforce::DEFAULT_BUDGET,
            local_rounds: 10_000,
            ratio_band: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilateralRow {
    pub resolution: u32,
    pub k: usize,
    pub h_upper: f64,
    /// `pipeline`, `pipeline+local`, `partition` or `partition+local`.
    pub h_upper_source: String,
    pub pipeline_upper: Option<f64>,
    pub pipeline_error: Option<String>,
    pub partition_upper: Option<f64>,
    pub h_exact: Option<f64>,
    pub faber_krahn: f64,
    pub lambda_k: Option<f64>,
    /// `h_k^p / lambda_k` with the best available `h_k`.
    pub ratio: Option<f64>,
}

impl BilateralRow {
    pub fn best_h(&self) -> f64 {
        self.h_exact.unwrap_or(self.h_upper)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilateralReport {
    pub spec: String,
    pub p: f64,
    pub rows: Vec<BilateralRow>,
    /// Log-log slope of `h_k` against `k` at the finest resolution.
    pub slope: f64,
    pub c1: f64,
    pub c2: f64,
    pub ratio_spread: Option<f64>,
    pub slope_ok: bool,
    pub band_ok: bool,
}

fn lsq_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |a, &(x, y)| (a.0 + x, a.1 + y));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = points.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = points.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    num / den
}

/// Two-sided table of `h_k` on a convex domain: pipeline and slab upper
/// bounds refined by local search, brute force where affordable, the
/// Faber-Krahn lower bound, and `lambda_k` for `p = 2`.
pub fn verify_bilateral(spec: &DomainSpec, p: Exponent, opts: &BilateralOptions) -> Result<BilateralReport> {
    if !spec.convex_hint {
        return Err(Error::InvalidArgument(format!("'{}' is not marked convex", spec.name)));
    }
    if opts.ks.is_empty() || opts.resolutions.is_empty() {
        return Err(Error::InvalidArgument("need at least one k and one resolution".into()));
    }
    let mode = PerimeterMode::Dirichlet;
    let pv = p.p();
    let n = spec.dimension;
    let volume = spec.volume();
    let k_max = *opts.ks.iter().max().expect("nonempty");
    let mut rows = Vec::new();
    for &res in &opts.resolutions {
        let grid = build_grid(spec, res)?;
        let eig = first_eigenpair(&grid, p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let lambdas = if pv == 2.0 && k_max <= grid.len() {
            Some(spectrum_p2(&grid, k_max)?.eigenvalues)
        } else {
            None
        };
        for &k in &opts.ks {
            let (pipeline_upper, pipeline_error, mut seeds) = match hk_upper_from(&grid, &eig, k, mode) {
                Ok(r) => (Some(r.h_k_upper), None, vec![("pipeline", r.h_k_upper, r.witnesses)]),
                Err(e) => (None, Some(e.to_string()), Vec::new()),
            };
            let partition = best_box_partition(&grid, k, mode).ok();
            if let Some(pb) = &partition {
                seeds.push(("partition", pb.value, pb.sets.clone()));
            }
            let mut best: Option<(f64, String)> = None;
            for (name, value, sets) in seeds {
                let mut consider = |v: f64, label: String| {
                    if best.as_ref().is_none_or(|b| v < b.0) {
                        best = Some((v, label));
                    }
                };
                consider(value, name.to_string());
                if let Ok(ls) = hk_local_search(&grid, mode, &sets, opts.local_rounds) {
                    consider(ls.value, format!("{name}+local"));
                }
            }
            let (h_upper, h_upper_source) =
                best.ok_or_else(|| Error::InvalidArgument(format!("no upper bound for k = {k}")))?;
            let h_exact = if k == 1 {
                Some(h1_exact(&grid, mode)?.value)
            } else if n == 1 || grid.len() <= opts.bruteforce_cells {
                hk_bruteforce(&grid, k, mode, opts.budget).ok().map(|b| b.value)
            } else {
                None
            };
            let lambda_k = lambdas.as_ref().map(|l| l[k - 1]);
            let h = h_exact.unwrap_or(h_upper);
            rows.push(BilateralRow {
                resolution: res,
                k,
                h_upper,
                h_upper_source,
                pipeline_upper,
                pipeline_error,
                partition_upper: partition.map(|pb| pb.value),
                h_exact,
                faber_krahn: faber_krahn_lower(n, k, volume),
                lambda_k,
                ratio: lambda_k.map(|l| h.powf(pv) / l),
            });
        }
    }

    let finest = *opts.resolutions.iter().max().expect("nonempty");
    let last: Vec<&BilateralRow> = rows.iter().filter(|r| r.resolution == finest).collect();
    let slope = if last.len() >= 2 {
        lsq_slope(&last.iter().map(|r| ((r.k as f64).ln(), r.best_h().ln())).collect::<Vec<_>>())
    } else {
        f64::NAN
    };
    let scaled: Vec<f64> = last
        .iter()
        .map(|r| r.best_h() / (r.k as f64 / volume).powf(1.0 / n as f64))
        .collect();
    let c1 = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratios: Option<Vec<f64>> = last.iter().map(|r| r.ratio).collect();
    let ratio_spread = ratios.map(|r| {
        r.iter().copied().fold(f64::NEG_INFINITY, f64::max) / r.iter().copied().fold(f64::INFINITY, f64::min)
    });
    let target = 1.0 / n as f64;
    Ok(BilateralReport {
        spec: spec.name.clone(),
        p: pv,
        rows,
        slope,
        c1,
        c2,
        ratio_spread,
        slope_ok: (slope - target).abs() <= 0.2,
        band_ok: ratio_spread.is_none_or(|s| s <= opts.ratio_band),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PToOneRow {
    pub p: f64,
    pub lambda_1: Option<f64>,
    pub error: Option<String>,
    /// `(h_1 / p)^p`.
    pub classical_lower: f64,
    /// `lambda_1 >= 0.9 (h_1 / p)^p`.
    pub holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PToOneReport {
    pub spec: String,
    pub resolution: u32,
    pub h_1: f64,
    pub rows: Vec<PToOneRow>,
    /// Computed `lambda_1` strictly decrease along the list.
    pub monotone: bool,
}

/// `lambda_1(p)` for a descending list of `p` in `(1, 2]`, next to the exact
/// `h_1` and the classical lower bound `(h_1 / p)^p`. Solver failures are
/// recorded per row.
pub fn p_to_one_sweep(grid: &Grid, p_list: &[f64], mode: PerimeterMode) -> Result<PToOneReport> {
    if p_list.is_empty() || p_list.iter().any(|&p| !(p > 1.0 && p <= 2.0)) {
        return Err(Error::InvalidArgument(format!("exponents must lie in (1, 2], got {p_list:?}")));
    }
    if p_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("exponents must be strictly descending".into()));
    }
    let h_1 = h1_exact(grid, mode)?.value;
    let rows: Vec<PToOneRow> = p_list
        .iter()
        .map(|&pv| {
            let classical_lower = (h_1 / pv).powf(pv);
            let solved = Exponent::new(pv).and_then(|p| first_eigenpair(grid, p, DEFAULT_TOL, DEFAULT_MAX_ITER));
            match solved {
                Ok(e) => PToOneRow {
                    p: pv,
                    lambda_1: Some(e.lambda),
                    error: None,
                    classical_lower,
                    holds: Some(e.lambda >= 0.9 * classical_lower),
                },
                Err(err) => PToOneRow {
                    p: pv,
                    lambda_1: None,
                    error: Some(err.to_string()),
                    classical_lower,
                    holds: None,
                },
            }
        })
        .collect();
    let solved: Vec<f64> = rows.iter().filter_map(|r| r.lambda_1).collect();
    Ok(PToOneReport {
        spec: grid.name().to_string(),
        resolution: grid.resolution(),
        h_1,
        monotone: solved.windows(2).all(|w| w[1] < w[0]),
        rows,
    })
}

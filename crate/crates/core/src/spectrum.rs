//! First p-Laplacian eigenpair, the exact p = 2 spectrum, and variational
//! upper bounds from disjointly supported families.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{face_weights, p_energy, p_mass, rayleigh, Exponent, ScalarField};
use crate::grid::Grid;
use crate::linalg::{axpy, dot, BandedCholesky, BandedSym};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Floor on face differences in the descent metric, relative to the
/// largest difference.
const METRIC_FLOOR: f64 = 1e-4;
const ARMIJO: f64 = 1e-4;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Eigenpair {
    pub lambda: f64,
    pub field: ScalarField,
    pub p: Exponent,
    pub iterations: usize,
    /// Dual norm of the Rayleigh gradient at the returned iterate.
    pub residual: f64,
}

/// Sidecar written next to an exported eigenfield.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenpairMeta {
    pub spec: String,
    pub resolution: u32,
    pub p: f64,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl Eigenpair {
    pub fn meta(&self, grid: &Grid) -> EigenpairMeta {
        EigenpairMeta {
            spec: grid.name().to_string(),
            resolution: grid.resolution(),
            p: self.p.p(),
            lambda: self.lambda,
            residual: self.residual,
            iterations: self.iterations,
        }
    }

    /// Writes the field in column format and the metadata as JSON.
    pub fn export<W1: Write, W2: Write>(&self, grid: &Grid, field_out: W1, meta_out: W2) -> Result<()> {
        self.field.write_columns(grid, field_out)?;
        serde_json::to_writer_pretty(meta_out, &self.meta(grid))?;
        Ok(())
    }
}

/// Sign-preserving `|x|^(e) * sign(x)`; zero at zero.
#[inline]
fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if e == 1.0 {
        x
    } else {
        x.signum() * x.abs().powf(e)
    }
}

/// Gradient of the p-energy with respect to cell values.
fn energy_gradient(grid: &Grid, u: &[f64], p: f64) -> Vec<f64> {
    let (w_in, w_bd) = face_weights(grid, p);
    let mut g = vec![0.0; u.len()];
    for face in grid.interior_faces() {
        let t = p * w_in * signed_pow(u[face.lower] - u[face.upper], p - 1.0);
        g[face.lower] += t;
        g[face.upper] -= t;
    }
    for face in grid.boundary_faces() {
        g[face.cell] += p * w_bd * signed_pow(u[face.cell], p - 1.0);
    }
    g
}

/// Linearized p-Laplacian `sum_f w_f max(|D_f u|, floor)^(p-2) D_f D_f^T`.
fn descent_metric(grid: &Grid, u: &[f64], p: f64) -> Result<BandedCholesky> {
    let (w_in, w_bd) = face_weights(grid, p);
    let interior_d: Vec<f64> = grid
        .interior_faces()
        .iter()
        .map(|f| (u[f.lower] - u[f.upper]).abs())
        .collect();
    let boundary_d: Vec<f64> = grid.boundary_faces().iter().map(|f| u[f.cell].abs()).collect();
    let dmax = interior_d
        .iter()
        .chain(&boundary_d)
        .copied()
        .fold(0.0, f64::max);
    let floor = (METRIC_FLOOR * dmax).max(f64::MIN_POSITIVE);
    let scale = |w: f64, d: f64| w * d.max(floor).powf(p - 2.0);
    let interior: Vec<f64> = interior_d.iter().map(|&d| scale(w_in, d)).collect();
    let boundary: Vec<f64> = boundary_d.iter().map(|&d| scale(w_bd, d)).collect();
    BandedSym::laplacian(grid, &interior, &boundary).cholesky()
}

fn normalize_in_place(grid: &Grid, u: &mut [f64], p: f64) {
    let mass: f64 = u.iter().map(|v| v.abs().powf(p)).sum::<f64>() * grid.cell_volume();
    let s = mass.powf(-1.0 / p);
    u.iter_mut().for_each(|v| *v *= s);
}

fn quotient(grid: &Grid, u: &[f64], p: f64) -> f64 {
    let f = ScalarField::from_vec_unchecked(u.to_vec());
    p_energy(grid, &f, p) / p_mass(grid, &f, p)
}

/// Minimizes the discrete Rayleigh quotient from the constant field.
///
/// Each step moves along the gradient preconditioned by the linearized
/// p-Laplacian at the current iterate (the unit step is one lagged inverse
/// power step; for `p = 2` it is exactly inverse iteration), backtracks until
/// the Armijo condition holds, takes the absolute value and renormalizes.
/// Stops once the relative decrease of the quotient drops below `tol`.
pub fn first_eigenpair(grid: &Grid, p: Exponent, tol: f64, max_iter: usize) -> Result<Eigenpair> {
    let pv = p.p();
    let n = grid.len();
    let vol = grid.cell_volume();
    let mut u = vec![1.0; n];
    normalize_in_place(grid, &mut u, pv);
    let mut r = quotient(grid, &u, pv);

    let fixed_metric = if pv == 2.0 {
        Some(descent_metric(grid, &u, pv)?)
    } else {
        None
    };

    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut grad = energy_gradient(grid, &u, pv);
        for (g, &ui) in grad.iter_mut().zip(&u) {
            *g -= r * pv * vol * signed_pow(ui, pv - 1.0);
        }
        let mut dir = match &fixed_metric {
            Some(m) => m.solve(&grad),
            None => descent_metric(grid, &u, pv)?.solve(&grad),
        };
        dir.iter_mut().for_each(|d| *d = -*d);
        let slope = dot(&grad, &dir);
        residual = (-slope).max(0.0).sqrt();

        let mut step = 1.0 / pv;
        let (cand, r_new) = loop {
            let mut cand = u.clone();
            axpy(step, &dir, &mut cand);
            cand.iter_mut().for_each(|v| *v = v.abs());
            if cand.iter().all(|&v| v == 0.0) {
                step *= 0.5;
                continue;
            }
            normalize_in_place(grid, &mut cand, pv);
            let rc = quotient(grid, &cand, pv);
            if rc <= r + ARMIJO * step * slope || step < 1e-14 {
                break (cand, rc);
            }
            step *= 0.5;
        };

        let decrease = (r - r_new) / r_new;
        if r_new <= r {
            u = cand;
            r = r_new;
        }
        if decrease < tol {
            let field = ScalarField::from_vec_unchecked(u);
            let lambda = rayleigh(grid, &field, pv)?;
            return Ok(Eigenpair {
                lambda,
                field,
                p,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
        last: Box::new(ScalarField::from_vec_unchecked(u)),
    })
}

/// The `m` smallest eigenpairs of the discrete Dirichlet Laplacian
/// (`p = 2`). Fields have unit 2-norm and are pairwise orthogonal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumSlice {
    pub eigenvalues: Vec<f64>,
    pub fields: Vec<ScalarField>,
    /// Relative residuals `|K x - lambda M x| / (lambda |M x|)`.
    pub residuals: Vec<f64>,
}

const DENSE_LIMIT: usize = 400;
const SUBSPACE_TOL: f64 = 1e-11;
const SUBSPACE_MAX_ITER: usize = 2000;

pub fn stiffness(grid: &Grid) -> BandedSym {
    let (w_in, w_bd) = face_weights(grid, 2.0);
    BandedSym::uniform_laplacian(grid, w_in, w_bd)
}

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// Modified Gram-Schmidt, run twice.
fn orthonormalize(cols: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for i in 0..cols.len() {
            let (done, rest) = cols.split_at_mut(i);
            let v = &mut rest[0];
            for q in done.iter() {
                let c = dot(q, v);
                axpy(-c, q, v);
            }
            let norm = dot(v, v).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub fn spectrum_p2(grid: &Grid, m: usize) -> Result<SpectrumSlice> {
    let n = grid.len();
    if m == 0 || m > n {
        return Err(Error::TooManyEigenpairs {
            requested: m,
            cells: n,
        });
    }
    let k = stiffness(grid);
    let vol = grid.cell_volume();

    let (values, mut vectors): (Vec<f64>, Vec<Vec<f64>>) = if n <= DENSE_LIMIT {
        let dense = DMatrix::from_fn(n, n, |i, j| k.get(i, j) / vol);
        let eig = SymmetricEigen::new(dense);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order
            .iter()
            .take(m)
            .map(|&c| (eig.eigenvalues[c], eig.eigenvectors.column(c).iter().copied().collect()))
            .unzip()
    } else {
        subspace_iteration(&k, vol, m)?
    };

    let mut fields = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    for (lambda, v) in values.iter().zip(vectors.iter_mut()) {
        // Unit 2-norm with cell-volume weights.
        let s = 1.0 / (dot(v, v) * vol).sqrt();
        v.iter_mut().for_each(|x| *x *= s);
        fix_sign(v);
        let kv = k.mul(v);
        let res: f64 = kv
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - lambda * vol * b).powi(2))
            .sum::<f64>()
            .sqrt()
            / (lambda * vol * dot(v, v).sqrt());
        residuals.push(res);
        fields.push(ScalarField::from_vec_unchecked(v.clone()));
    }
    Ok(SpectrumSlice {
        eigenvalues: values,
        fields,
        residuals,
    })
}

/// Block inverse iteration with Rayleigh-Ritz on `K x = lambda vol x`.
fn subspace_iteration(k: &BandedSym, vol: f64, m: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = k.len();
    let b = (2 * m + 6).min(n);
    let chol = k.cholesky()?;
    let mut seed = 0x5EED_u64;
    let mut block: Vec<Vec<f64>> = (0..b)
        .map(|_| (0..n).map(|_| splitmix(&mut seed)).collect())
        .collect();
    orthonormalize(&mut block);

    let mut theta = vec![0.0; b];
    for _ in 0..SUBSPACE_MAX_ITER {
        let mut next: Vec<Vec<f64>> = block
            .iter()
            .map(|x| chol.solve(&x.iter().map(|v| v * vol).collect::<Vec<_>>()))
            .collect();
        orthonormalize(&mut next);
        let kx: Vec<Vec<f64>> = next.iter().map(|x| k.mul(x)).collect();
        let h = DMatrix::from_fn(b, b, |i, j| 0.5 * (dot(&next[i], &kx[j]) + dot(&next[j], &kx[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let mut rotated = vec![vec![0.0; n]; b];
        for (dst, &c) in rotated.iter_mut().zip(&order) {
            for (src, &coef) in next.iter().zip(eig.eigenvectors.column(c).iter()) {
                axpy(coef, src, dst);
            }
        }
        theta = order.iter().map(|&c| eig.eigenvalues[c] / vol).collect();
        block = rotated;

        let worst = block
            .iter()
            .zip(&theta)
            .take(m)
            .map(|(x, &t)| {
                let kx = k.mul(x);
                let r: f64 = kx
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (a - t * vol * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                r / (t * vol * dot(x, x).sqrt())
            })
            .fold(0.0, f64::max);
        if worst < SUBSPACE_TOL {
            break;
        }
    }
    block.truncate(m);
    theta.truncate(m);
    Ok((theta, block))
}

/// `max_i R(f_i)` over a family with pairwise disjoint, nonempty supports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyBound {
    pub bound: f64,
    pub rayleighs: Vec<f64>,
    /// Some pair of supports shares a face. On the grid, the span of such a
    /// family can exceed the largest member quotient, so the bound on
    /// `lambda_k` is only guaranteed when this is `false`.
    pub touching: bool,
}

pub fn lambda_upper_from_family(grid: &Grid, family: &[ScalarField], p: f64) -> Result<FamilyBound> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty family".into()));
    }
    let mut owner: Vec<Option<usize>> = vec![None; grid.len()];
    for (i, f) in family.iter().enumerate() {
        if f.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                got: f.len(),
            });
        }
        if f.is_zero() {
            return Err(Error::ZeroField);
        }
        for c in f.support().iter() {
            if let Some(j) = owner[c] {
                return Err(Error::OverlappingSupports {
                    first: j,
                    second: i,
                    cell: c,
                });
            }
            owner[c] = Some(i);
        }
    }
    let touching = grid.interior_faces().iter().any(|f| {
        matches!((owner[f.lower], owner[f.upper]), (Some(a), Some(b)) if a != b)
    });
    let rayleighs = family
        .iter()
        .map(|f| rayleigh(grid, f, p))
        .collect::<Result<Vec<_>>>()?;
    let bound = rayleighs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FamilyBound {
        bound,
        rayleighs,
        touching,
    })
}

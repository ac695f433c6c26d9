//! Banded SPD factorization for face-assembled operators.
//!
//! Cells are numbered lexicographically, so every operator built from
//! face couplings is banded with half-bandwidth [`Grid::bandwidth`]. A plain
//! banded Cholesky is enough for every grid this crate targets.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Symmetric banded matrix stored by rows: row `i` keeps columns
/// `i - bw ..= i`.
#[derive(Clone, Debug)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSym {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `y = A x`.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut acc = 0.0;
            for j in lo..i {
                let a = self.data[self.slot(i, j)];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            acc += self.data[self.slot(i, i)] * x[i];
            y[i] += acc;
        }
        y
    }

    /// Weighted Dirichlet Laplacian: interior face `f` couples its cells with
    /// weight `interior[f]`, boundary face `b` adds `boundary[b]` to the
    /// diagonal of its cell.
    pub fn laplacian(grid: &Grid, interior: &[f64], boundary: &[f64]) -> Self {
        let mut a = BandedSym::zeros(grid.len(), grid.bandwidth());
        for (face, &w) in grid.interior_faces().iter().zip(interior) {
            a.add(face.lower, face.lower, w);
            a.add(face.upper, face.upper, w);
            a.add(face.upper, face.lower, -w);
        }
        for (face, &w) in grid.boundary_faces().iter().zip(boundary) {
            a.add(face.cell, face.cell, w);
        }
        a
    }

    /// Laplacian with one weight for all interior faces and one for all
    /// boundary faces.
    pub fn uniform_laplacian(grid: &Grid, w_interior: f64, w_boundary: f64) -> Self {
        let interior = vec![w_interior; grid.interior_faces().len()];
        let boundary = vec![w_boundary; grid.boundary_faces().len()];
        Self::laplacian(grid, &interior, &boundary)
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.data.clone();
        let idx = |i: usize, j: usize| i * (bw + 1) + (bw - (i - j));
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = l[idx(i, j)];
                for k in klo..j {
                    s -= l[idx(i, k)] * l[idx(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite(i));
                    }
                    l[idx(i, i)] = s.sqrt();
                } else {
                    l[idx(i, j)] = s / l[idx(j, j)];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

/// Lower-triangular banded factor `L` with `A = L L^T`.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.bw + 1) + (self.bw - (i - j))]
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.at(i, k) * y[k];
            }
            y[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.at(k, i) * y[k];
            }
            y[i] = s / self.at(i, i);
        }
        y
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

//! Exact `h_k` on small grids.
//!
//! Perimeter and volume are additive over non-adjacent pieces, so replacing
//! a set by its best connected component never raises its ratio. It is
//! therefore enough to enumerate connected cell sets once, then search for
//! `k` pairwise disjoint ones under each candidate ratio.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellSet, Grid, Link, PerimeterMode};

/// Default cap on enumerated sets plus packing search nodes.
pub const DEFAULT_BUDGET: u64 = 20_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub k: usize,
    pub value: f64,
    pub witnesses: Vec<CellSet>,
    pub ratios: Vec<f64>,
    pub sets_enumerated: u64,
    pub search_nodes: u64,
}

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    #[inline]
    fn test(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    #[inline]
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn disjoint(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == 0)
    }
    fn union_with(&mut self, other: &Bits) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a |= b);
    }
    fn minus_with(&mut self, other: &Bits) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a &= !b);
    }
    /// Set bits with index `>= from`.
    fn count_from(&self, from: usize) -> usize {
        let w = from / 64;
        if w >= self.0.len() {
            return 0;
        }
        let head = (self.0[w] >> (from % 64)).count_ones() as usize;
        head + self.0[w + 1..].iter().map(|x| x.count_ones() as usize).sum::<usize>()
    }
    fn cells(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, &word) in self.0.iter().enumerate() {
            let mut x = word;
            while x != 0 {
                out.push(w * 64 + x.trailing_zeros() as usize);
                x &= x - 1;
            }
        }
        out
    }
}

/// Exact `faces / cells` comparison.
#[inline]
fn cmp_ratio(a: (usize, usize), b: (usize, usize)) -> Ordering {
    (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128))
}

struct Candidate {
    bits: Bits,
    min_cell: usize,
    faces: usize,
    cells: usize,
}

struct Enumerator<'a> {
    grid: &'a Grid,
    mode: PerimeterMode,
    budget: u64,
    count: u64,
    keep: bool,
    sets: Vec<Candidate>,
    best: Option<(usize, usize, Vec<usize>)>,
}

impl Enumerator<'_> {
    fn record(&mut self, sub: &Bits, root: usize, faces: usize, cells: usize) -> Result<()> {
        self.count += 1;
        if self.count > self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        if self.keep {
            self.sets.push(Candidate {
                bits: sub.clone(),
                min_cell: root,
                faces,
                cells,
            });
        } else {
            let better = match &self.best {
                None => true,
                Some((f, c, members)) => match cmp_ratio((faces, cells), (*f, *c)) {
                    Ordering::Less => true,
                    Ordering::Equal => sub.cells() < *members,
                    Ordering::Greater => false,
                },
            };
            if better {
                self.best = Some((faces, cells, sub.cells()));
            }
        }
        Ok(())
    }

    /// Connected sets whose smallest cell is `root`, each produced once:
    /// the extension set only ever gains cells above `root` that are not yet
    /// in the closed neighbourhood of the current set.
    fn extend(
        &mut self,
        sub: &mut Bits,
        closed: &Bits,
        mut ext: Vec<usize>,
        root: usize,
        faces: usize,
        cells: usize,
    ) -> Result<()> {
        self.record(sub, root, faces, cells)?;
        while let Some(w) = ext.pop() {
            let mut next_ext = ext.clone();
            let mut next_closed = closed.clone();
            let mut delta: isize = 0;
            for link in self.grid.links(w) {
                match *link {
                    Link::Cell(u) => {
                        delta += if sub.test(u) { -1 } else { 1 };
                        if u > root && !closed.test(u) {
                            next_ext.push(u);
                        }
                        next_closed.set(u);
                    }
                    Link::Boundary => delta += isize::from(self.mode == PerimeterMode::Dirichlet),
                }
            }
            sub.set(w);
            self.extend(sub, &next_closed, next_ext, root, (faces as isize + delta) as usize, cells + 1)?;
            sub.clear(w);
        }
        Ok(())
    }

    fn run(&mut self) -> Result<()> {
        let n = self.grid.len();
        for root in 0..n {
            let mut sub = Bits::new(n);
            let mut closed = Bits::new(n);
            sub.set(root);
            closed.set(root);
            let mut ext = Vec::new();
            let mut faces = 0;
            for link in self.grid.links(root) {
                match *link {
                    Link::Cell(u) => {
                        faces += 1;
                        closed.set(u);
                        if u > root {
                            ext.push(u);
                        }
                    }
                    Link::Boundary => faces += usize::from(self.mode == PerimeterMode::Dirichlet),
                }
            }
            self.extend(&mut sub, &closed, ext, root, faces, 1)?;
        }
        Ok(())
    }
}

struct Packer<'a> {
    sets: &'a [Candidate],
    /// Indices into `sets`, ordered by smallest cell.
    cands: Vec<usize>,
    suffix_min_size: Vec<usize>,
    n: usize,
    nodes: u64,
    budget: u64,
    chosen: Vec<usize>,
}

impl Packer<'_> {
    fn search(&mut self, start: usize, used: &mut Bits, need: usize) -> Result<bool> {
        if need == 0 {
            return Ok(true);
        }
        for idx in start..self.cands.len() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::BudgetExceeded { budget: self.budget });
            }
            let c = &self.sets[self.cands[idx]];
            // Every later set starts at or after this cell.
            let free_after = (self.n - c.min_cell) - used.count_from(c.min_cell);
            if free_after < need * self.suffix_min_size[idx] {
                return Ok(false);
            }
            if c.bits.disjoint(used) {
                used.union_with(&c.bits);
                self.chosen.push(self.cands[idx]);
                if self.search(idx + 1, used, need - 1)? {
                    return Ok(true);
                }
                self.chosen.pop();
                used.minus_with(&c.bits);
            }
        }
        Ok(false)
    }
}

/// Minimum over `k` pairwise disjoint nonempty cell sets of the largest
/// isoperimetric ratio, with a witness family. `budget` caps the number of
/// enumerated sets and, separately, the number of packing search nodes.
pub fn hk_bruteforce(grid: &Grid, k: usize, mode: PerimeterMode, budget: u64) -> Result<BruteForceResult> {
    if k == 0 || k > grid.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={}",
            grid.len()
        )));
    }
    let mut en = Enumerator {
        grid,
        mode,
        budget,
        count: 0,
        keep: k > 1,
        sets: Vec::new(),
        best: None,
    };
    en.run()?;

    if k == 1 {
        let (faces, cells, members) = en.best.expect("grid has at least one cell");
        let value = grid.ratio_from_counts(faces, cells);
        return Ok(BruteForceResult {
            k,
            value,
            witnesses: vec![CellSet::from_sorted_unchecked(members)],
            ratios: vec![value],
            sets_enumerated: en.count,
            search_nodes: 0,
        });
    }

    let sets = en.sets;
    let mut levels: Vec<(usize, usize)> = sets.iter().map(|c| (c.faces, c.cells)).collect();
    levels.sort_by(|&a, &b| cmp_ratio(a, b));
    levels.dedup_by(|a, b| cmp_ratio(*a, *b) == Ordering::Equal);

    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by_cached_key(|&a| (sets[a].min_cell, sets[a].cells, sets[a].bits.cells()));

    let mut nodes = 0u64;
    let mut feasible = |limit: (usize, usize)| -> Result<Option<Vec<usize>>> {
        let cands: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| cmp_ratio((sets[i].faces, sets[i].cells), limit) != Ordering::Greater)
            .collect();
        let mut suffix_min_size = vec![usize::MAX; cands.len() + 1];
        for i in (0..cands.len()).rev() {
            suffix_min_size[i] = suffix_min_size[i + 1].min(sets[cands[i]].cells);
        }
        let mut packer = Packer {
            sets: &sets,
            cands,
            suffix_min_size,
            n: grid.len(),
            nodes: 0,
            budget: budget.saturating_sub(nodes),
            chosen: Vec::new(),
        };
        let ok = packer.search(0, &mut Bits::new(grid.len()), k)?;
        nodes += packer.nodes;
        Ok(ok.then_some(packer.chosen))
    };

    // Bisection over the distinct ratios; `k` single cells make the largest
    // one feasible.
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    let mut witness = feasible(levels[hi])?.expect("k singletons always pack");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match feasible(levels[mid])? {
            Some(w) => {
                hi = mid;
                witness = w;
            }
            None => lo = mid + 1,
        }
    }

    let worst = witness
        .iter()
        .map(|&i| (sets[i].faces, sets[i].cells))
        .max_by(|&a, &b| cmp_ratio(a, b))
        .expect("k >= 1");
    let witnesses: Vec<CellSet> = witness
        .iter()
        .map(|&i| CellSet::from_sorted_unchecked(sets[i].bits.cells()))
        .collect();
    let ratios = witnesses.iter().map(|w| grid.iso_ratio(w, mode)).collect();
    Ok(BruteForceResult {
        k,
        value: grid.ratio_from_counts(worst.0, worst.1),
        witnesses,
        ratios,
        sets_enumerated: en.count,
        search_nodes: nodes,
    })
}

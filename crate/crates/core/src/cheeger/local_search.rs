//! Greedy improvement of a disjoint family by single-cell moves.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellSet, Grid, Link, PerimeterMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSearchResult {
    pub value: f64,
    pub partition: Vec<CellSet>,
    pub ratios: Vec<f64>,
    pub moves: usize,
}

/// `(worst faces, worst cells, total faces)`, ordered by the exact worst
/// ratio and then by total perimeter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Objective {
    faces: usize,
    cells: usize,
    total: usize,
}

impl Ord for Objective {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.faces as u128 * other.cells as u128)
            .cmp(&(other.faces as u128 * self.cells as u128))
            .then(self.total.cmp(&other.total))
    }
}

impl PartialOrd for Objective {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn objective(faces: &[usize], cells: &[usize]) -> Objective {
    let mut worst = 0;
    for i in 1..faces.len() {
        if faces[i] as u128 * cells[worst] as u128 > faces[worst] as u128 * cells[i] as u128 {
            worst = i;
        }
    }
    Objective {
        faces: faces[worst],
        cells: cells[worst],
        total: faces.iter().sum(),
    }
}

struct State<'a> {
    grid: &'a Grid,
    mode: PerimeterMode,
    owner: Vec<Option<usize>>,
    faces: Vec<usize>,
    cells: Vec<usize>,
}

impl State<'_> {
    /// Face change when `cell` joins set `s`.
    fn join_delta(&self, cell: usize, s: usize) -> isize {
        self.grid
            .links(cell)
            .iter()
            .map(|l| match *l {
                Link::Cell(u) if self.owner[u] == Some(s) => -1,
                Link::Cell(_) => 1,
                Link::Boundary => isize::from(self.mode == PerimeterMode::Dirichlet),
            })
            .sum()
    }

    /// Objective after moving `cell` from its owner to `target`.
    fn try_move(&self, cell: usize, target: Option<usize>) -> Objective {
        let mut faces = self.faces.clone();
        let mut cells = self.cells.clone();
        if let Some(o) = self.owner[cell] {
            faces[o] = (faces[o] as isize - self.join_delta(cell, o)) as usize;
            cells[o] -= 1;
        }
        if let Some(t) = target {
            faces[t] = (faces[t] as isize + self.join_delta(cell, t)) as usize;
            cells[t] += 1;
        }
        objective(&faces, &cells)
    }

    fn apply(&mut self, cell: usize, target: Option<usize>) {
        if let Some(o) = self.owner[cell] {
            self.faces[o] = (self.faces[o] as isize - self.join_delta(cell, o)) as usize;
            self.cells[o] -= 1;
        }
        if let Some(t) = target {
            self.faces[t] = (self.faces[t] as isize + self.join_delta(cell, t)) as usize;
            self.cells[t] += 1;
        }
        self.owner[cell] = target;
    }
}

/// Repeatedly applies the best single-cell move (add a free cell, drop a
/// cell, or hand a cell to another member) while it strictly lowers the
/// worst ratio, or keeps it and lowers total perimeter. Ties between moves go
/// to the smallest cell, then to dropping, then to the lowest member index.
/// Never returns anything worse than the seed.
pub fn hk_local_search(
    grid: &Grid,
    mode: PerimeterMode,
    seed: &[CellSet],
    rounds: usize,
) -> Result<LocalSearchResult> {
    if seed.is_empty() {
        return Err(Error::InvalidArgument("seed family is empty".into()));
    }
    let k = seed.len();
    let mut owner = vec![None; grid.len()];
    for (i, set) in seed.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::InvalidArgument(format!("seed member {i} is empty")));
        }
        for c in set.iter() {
            if c >= grid.len() {
                return Err(Error::CellOutOfRange { index: c, len: grid.len() });
            }
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
    let faces = seed
        .iter()
        .map(|s| grid.perimeter_faces(&s.mask(grid.len()), mode))
        .collect();
    let cells = seed.iter().map(|s| s.len()).collect();
    let mut st = State {
        grid,
        mode,
        owner,
        faces,
        cells,
    };

    let mut current = objective(&st.faces, &st.cells);
    let mut moves = 0;
    for _ in 0..rounds {
        let mut best: Option<(Objective, usize, Option<usize>)> = None;
        for cell in 0..grid.len() {
            let from = st.owner[cell];
            let mut targets: Vec<Option<usize>> = Vec::with_capacity(2 * grid.dim() + 1);
            if from.is_some_and(|o| st.cells[o] > 1) {
                targets.push(None);
            }
            for l in grid.links(cell) {
                if let Link::Cell(u) = *l {
                    if let Some(t) = st.owner[u] {
                        if Some(t) != from && !targets.contains(&Some(t)) {
                            targets.push(Some(t));
                        }
                    }
                }
            }
            if from.is_some_and(|o| st.cells[o] == 1) {
                // Moving the last cell would empty a member.
                targets.clear();
            }
            targets.sort();
            for t in targets {
                let obj = st.try_move(cell, t);
                if best.as_ref().is_none_or(|b| obj < b.0) {
                    best = Some((obj, cell, t));
                }
            }
        }
        match best {
            Some((obj, cell, t)) if obj < current => {
                st.apply(cell, t);
                current = obj;
                moves += 1;
            }
            _ => break,
        }
    }

    let partition: Vec<CellSet> = (0..k)
        .map(|i| CellSet::from_mask(&st.owner.iter().map(|&o| o == Some(i)).collect::<Vec<_>>()))
        .collect();
    let ratios = partition.iter().map(|s| grid.iso_ratio(s, mode)).collect();
    Ok(LocalSearchResult {
        value: grid.ratio_from_counts(current.faces, current.cells),
        partition,
        ratios,
        moves,
    })
}

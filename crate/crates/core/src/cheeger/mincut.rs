//! Exact `h_1` on grids of any size by parametric minimum cuts.
//!
//! For a rational `lambda = F / C`, minimizing `C |dE| - F |E|` over all
//! cell sets is a cut problem; iterating `lambda <- ratio(E)` from the full
//! set (Dinkelbach) reaches the Cheeger constant in a few cuts.

use std::collections::VecDeque;

use petgraph::algo::dinics;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::EdgeRef;
use petgraph::Direction;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{CellSet, Grid, Link, PerimeterMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerSet {
    pub value: f64,
    /// Union of all optimal sets, which is itself optimal.
    pub set: CellSet,
    pub faces: usize,
    pub cuts: usize,
}

/// Largest minimizer of `c |dE| - f |E|`.
fn max_minimizer(grid: &Grid, mode: PerimeterMode, c: u64, f: u64) -> Vec<bool> {
    let n = grid.len();
    let mut g: DiGraph<(), u64> = DiGraph::with_capacity(n + 2, 6 * n);
    let cells: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    let source = g.add_node(());
    let sink = g.add_node(());
    for (i, &node) in cells.iter().enumerate() {
        if f > 0 {
            g.add_edge(source, node, f);
        }
        let mut boundary = 0;
        for link in grid.links(i) {
            match *link {
                Link::Cell(u) => {
                    g.add_edge(node, cells[u], c);
                }
                Link::Boundary if mode == PerimeterMode::Dirichlet => boundary += 1,
                Link::Boundary => {}
            }
        }
        if boundary > 0 {
            g.add_edge(node, sink, c * boundary);
        }
    }
    let (_, flows) = dinics(&g, source, sink);

    // Nodes that can still reach the sink in the residual graph lie on the
    // sink side of every minimum cut; everything else is the largest
    // minimizer.
    let mut reaches_sink = vec![false; g.node_count()];
    reaches_sink[sink.index()] = true;
    let mut queue = VecDeque::from([sink]);
    while let Some(v) = queue.pop_front() {
        // Residual u -> v exists for unsaturated edges u -> v ...
        for e in g.edges_directed(v, Direction::Incoming) {
            let u = e.source();
            if !reaches_sink[u.index()] && flows[e.id().index()] < *e.weight() {
                reaches_sink[u.index()] = true;
                queue.push_back(u);
            }
        }
        // ... and for edges v -> u carrying flow.
        for e in g.edges_directed(v, Direction::Outgoing) {
            let u = e.target();
            if !reaches_sink[u.index()] && flows[e.id().index()] > 0 {
                reaches_sink[u.index()] = true;
                queue.push_back(u);
            }
        }
    }
    cells.iter().map(|c| !reaches_sink[c.index()]).collect()
}

/// Exact `h_1` and the largest Cheeger set.
pub fn h1_exact(grid: &Grid, mode: PerimeterMode) -> Result<CheegerSet> {
    let mut mask = vec![true; grid.len()];
    let mut faces = grid.perimeter_faces(&mask, mode);
    let mut cells = grid.len();
    let mut cuts = 0;
    loop {
        let next = max_minimizer(grid, mode, cells as u64, faces as u64);
        cuts += 1;
        let next_cells = next.iter().filter(|&&b| b).count();
        let next_faces = grid.perimeter_faces(&next, mode);
        // Strictly better iff next_faces / next_cells < faces / cells.
        let better = next_cells > 0 && (next_faces as u128) * (cells as u128) < (faces as u128) * (next_cells as u128);
        if !better {
            // At the optimum the largest minimizer is the union of all
            // optimal sets; it contains the current one.
            if next_cells > 0 && (next_faces as u128) * (cells as u128) == (faces as u128) * (next_cells as u128) {
                mask = next;
                faces = next_faces;
                cells = next_cells;
            }
            break;
        }
        mask = next;
        faces = next_faces;
        cells = next_cells;
    }
    Ok(CheegerSet {
        value: grid.ratio_from_counts(faces, cells),
        set: CellSet::from_mask(&mask),
        faces,
        cuts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheeger::bruteforce::{hk_bruteforce, DEFAULT_BUDGET};
    use crate::grid::{build_grid, DomainSpec};

    #[test]
    fn boxes_are_their_own_cheeger_sets() {
        for res in [1, 4, 16, 64] {
            let g = build_grid(&DomainSpec::unit_square(), res).unwrap();
            let r = h1_exact(&g, PerimeterMode::Dirichlet).unwrap();
            assert_eq!(r.value, 4.0);
            assert_eq!(r.set.len(), g.len());
        }
        let g = build_grid(&DomainSpec::unit_interval(), 1000).unwrap();
        assert_eq!(h1_exact(&g, PerimeterMode::Dirichlet).unwrap().value, 2.0);
    }

    #[test]
    fn agrees_with_enumeration() {
        for spec in [
            DomainSpec::l_shape(),
            DomainSpec::step(),
            DomainSpec::rectangle("rectangle_2x1", &[2.0, 1.0]).unwrap(),
        ] {
            let g = build_grid(&spec, 2).unwrap();
            for mode in [PerimeterMode::Dirichlet, PerimeterMode::Relative] {
                let exact = hk_bruteforce(&g, 1, mode, DEFAULT_BUDGET).unwrap();
                let cut = h1_exact(&g, mode).unwrap();
                assert_eq!(cut.value, exact.value, "{} {mode}", spec.name);
                assert_eq!(g.iso_ratio(&cut.set, mode), cut.value);
            }
        }
    }

    #[test]
    fn relative_mode_takes_everything() {
        let g = build_grid(&DomainSpec::l_shape(), 8).unwrap();
        let r = h1_exact(&g, PerimeterMode::Relative).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.set.len(), g.len());
    }
}

//! Comb domains: a room with thin unit-length teeth. Each tooth is a cheap
//! Cheeger candidate in relative mode while `lambda_k` keeps growing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_grid, BoxRegion, CellSet, DomainSpec, PerimeterMode};
use crate::spectrum::spectrum_p2;

const REPRESENTABLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombRow {
    pub k: usize,
    /// Worst relative ratio over the first `k` teeth.
    pub h_relative_upper: f64,
    /// Same teeth measured with the full perimeter.
    pub h_dirichlet_upper: f64,
    pub lambda_k: f64,
    /// `lambda_k / h_relative_upper^2`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombReport {
    pub spec: DomainSpec,
    pub resolution: u32,
    pub teeth: Vec<CellSet>,
    pub tooth_relative: Vec<f64>,
    pub tooth_dirichlet: Vec<f64>,
    pub rows: Vec<CombRow>,
    pub ratio_increasing: bool,
}

fn on_lattice(x: f64, res: f64) -> bool {
    (x * res - (x * res).round()).abs() <= REPRESENTABLE_TOL
}

/// Builds the comb: a 2D `room` with `teeth` teeth of length 1 on its top
/// side, each centered in an equal slot. `tooth_widths` holds one width for
/// all teeth or one per tooth; every edge must fall on the grid lattice.
pub fn comb_spec(teeth: usize, tooth_widths: &[f64], room: &BoxRegion, resolution: u32) -> Result<DomainSpec> {
    if teeth == 0 {
        return Err(Error::InvalidArgument("need at least one tooth".into()));
    }
    if room.dim() != 2 {
        return Err(Error::InvalidDomain("the room must be two-dimensional".into()));
    }
    let widths: Vec<f64> = match tooth_widths.len() {
        1 => vec![tooth_widths[0]; teeth],
        n if n == teeth => tooth_widths.to_vec(),
        n => {
            return Err(Error::InvalidArgument(format!(
                "{n} widths given for {teeth} teeth"
            )))
        }
    };
    let res = f64::from(resolution);
    let [x0, x1] = room.0[0];
    let [y0, y1] = room.0[1];
    if !(x1 > x0 && y1 > y0) || ![x0, x1, y0, y1].iter().all(|&v| on_lattice(v, res)) {
        return Err(Error::InvalidDomain(format!("room {room:?} is not on the lattice at resolution {resolution}")));
    }
    let slot = (x1 - x0) / teeth as f64;
    let mut boxes = vec![room.clone()];
    for (i, &w) in widths.iter().enumerate() {
        if !(w > 0.0) {
            return Err(Error::InvalidArgument(format!("tooth {i} has width {w}")));
        }
        if w * res < 1.0 - REPRESENTABLE_TOL {
            return Err(Error::InvalidArgument(format!(
                "tooth {i} of width {w} is thinner than one cell at resolution {resolution}"
            )));
        }
        if w >= slot {
            return Err(Error::InvalidArgument(format!("tooth {i} of width {w} fills its slot of width {slot}")));
        }
        let lo = x0 + slot * (i as f64 + 0.5) - w / 2.0;
        let hi = lo + w;
        if !on_lattice(lo, res) || !on_lattice(hi, res) {
            return Err(Error::InvalidArgument(format!(
                "tooth {i} spans [{lo}, {hi}], not on the lattice at resolution {resolution}"
            )));
        }
        boxes.push(BoxRegion::new(vec![[lo, hi], [y1, y1 + 1.0]]));
    }
    DomainSpec::new(format!("comb{teeth}"), boxes, false)
}

/// Tooth witnesses and `lambda_k` on a comb for `k = 1..teeth`. Teeth are
/// taken in order of increasing relative ratio, ties by position.
pub fn counterexample_comb(
    teeth: usize,
    tooth_widths: &[f64],
    room: &BoxRegion,
    resolution: u32,
) -> Result<CombReport> {
    let spec = comb_spec(teeth, tooth_widths, room, resolution)?;
    let grid = build_grid(&spec, resolution)?;
    let top = room.0[1][1];
    let tooth_sets: Vec<CellSet> = spec.boxes[1..]
        .iter()
        .map(|b| {
            let [lo, hi] = b.0[0];
            let cells = grid
                .cells()
                .iter()
                .enumerate()
                .filter(|(_, c)| c.center[1] > top && c.center[0] > lo && c.center[0] < hi)
                .map(|(i, _)| i);
            CellSet::new(&grid, cells)
        })
        .collect::<Result<_>>()?;
    let tooth_relative: Vec<f64> = tooth_sets
        .iter()
        .map(|s| grid.iso_ratio(s, PerimeterMode::Relative))
        .collect();
    let tooth_dirichlet: Vec<f64> = tooth_sets
        .iter()
        .map(|s| grid.iso_ratio(s, PerimeterMode::Dirichlet))
        .collect();
    let mut order: Vec<usize> = (0..teeth).collect();
    order.sort_by(|&a, &b| tooth_relative[a].total_cmp(&tooth_relative[b]).then(a.cmp(&b)));

    let lambdas = spectrum_p2(&grid, teeth)?.eigenvalues;
    let mut rows = Vec::with_capacity(teeth);
    let (mut rel, mut dir) = (0.0f64, 0.0f64);
    for (k, &t) in order.iter().enumerate() {
        rel = rel.max(tooth_relative[t]);
        dir = dir.max(tooth_dirichlet[t]);
        rows.push(CombRow {
            k: k + 1,
            h_relative_upper: rel,
            h_dirichlet_upper: dir,
            lambda_k: lambdas[k],
            ratio: lambdas[k] / (rel * rel),
        });
    }
    let ratio_increasing = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    Ok(CombReport {
        spec,
        resolution,
        teeth: tooth_sets,
        tooth_relative,
        tooth_dirichlet,
        rows,
        ratio_increasing,
    })
}

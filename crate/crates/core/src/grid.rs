//! Box-union domains and their uniform cell-complex discretization.
//!
//! Cells sit on an absolute lattice: along every axis cell `m` covers
//! `[m/r, (m+1)/r]` for resolution `r`. Two grids built at the same
//! resolution therefore agree on the multi-index of every cell they share,
//! which is what lets a sub-box grid be compared against the full domain.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when snapping box coordinates onto the lattice.
const SNAP_TOL: f64 = 1e-9;

/// An axis-aligned box given as one `[lo, hi]` pair per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoxRegion(pub Vec<[f64; 2]>);

impl BoxRegion {
    pub fn new(bounds: Vec<[f64; 2]>) -> Self {
        BoxRegion(bounds)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn volume(&self) -> f64 {
        self.0.iter().map(|[lo, hi]| hi - lo).product()
    }

    fn contains_point(&self, x: &[f64]) -> bool {
        self.0
            .iter()
            .zip(x)
            .all(|([lo, hi], &xi)| *lo < xi && xi < *hi)
    }
}

/// A domain described as a union of axis-aligned boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub name: String,
    pub dimension: usize,
    pub boxes: Vec<BoxRegion>,
    #[serde(default)]
    pub convex_hint: bool,
}

impl DomainSpec {
    pub fn new(name: impl Into<String>, boxes: Vec<BoxRegion>, convex_hint: bool) -> Result<Self> {
        let dimension = boxes.first().map(BoxRegion::dim).unwrap_or(0);
        let spec = DomainSpec {
            name: name.into(),
            dimension,
            boxes,
            convex_hint,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidDomain("dimension must be at least 1".into()));
        }
        if self.boxes.is_empty() {
            return Err(Error::InvalidDomain(format!("'{}' has no boxes", self.name)));
        }
        for (b, region) in self.boxes.iter().enumerate() {
            if region.dim() != self.dimension {
                return Err(Error::InvalidDomain(format!(
                    "box {b} has {} axes, expected {}",
                    region.dim(),
                    self.dimension
                )));
            }
            for (axis, [lo, hi]) in region.0.iter().enumerate() {
                if !lo.is_finite() || !hi.is_finite() || hi <= lo {
                    return Err(Error::InvalidDomain(format!(
                        "box {b} is degenerate on axis {axis}: [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: DomainSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("domain spec serializes")
    }

    /// Exact volume of the union of boxes.
    pub fn volume(&self) -> f64 {
        let arr = Arrangement::new(self);
        arr.cells()
            .filter(|c| arr.covered(c))
            .map(|c| arr.cell_volume(&c))
            .sum()
    }

    pub fn is_single_box(&self) -> bool {
        self.boxes.len() == 1
    }

    pub fn unit_interval() -> Self {
        Self::new("unit_interval", vec![BoxRegion::new(vec![[0.0, 1.0]])], true).unwrap()
    }

    pub fn unit_square() -> Self {
        Self::new(
            "unit_square",
            vec![BoxRegion::new(vec![[0.0, 1.0], [0.0, 1.0]])],
            true,
        )
        .unwrap()
    }

    pub fn rectangle(name: &str, sides: &[f64]) -> Result<Self> {
        let bounds = sides.iter().map(|&s| [0.0, s]).collect();
        Self::new(name, vec![BoxRegion::new(bounds)], true)
    }

    /// Three unit squares forming a corner.
    pub fn l_shape() -> Self {
        Self::new(
            "l_shape",
            vec![
                BoxRegion::new(vec![[0.0, 1.0], [0.0, 1.0]]),
                BoxRegion::new(vec![[0.0, 1.0], [1.0, 2.0]]),
                BoxRegion::new(vec![[1.0, 2.0], [0.0, 1.0]]),
            ],
            false,
        )
        .unwrap()
    }

    /// Two unit squares sharing half of an edge.
    pub fn step() -> Self {
        Self::new(
            "step",
            vec![
                BoxRegion::new(vec![[0.0, 1.0], [0.0, 1.0]]),
                BoxRegion::new(vec![[1.0, 2.0], [0.5, 1.5]]),
            ],
            false,
        )
        .unwrap()
    }

    /// Two unit squares joined by a 0.25 wide, 0.5 long neck.
    pub fn dumbbell() -> Self {
        Self::new(
            "dumbbell",
            vec![
                BoxRegion::new(vec![[0.0, 1.0], [0.0, 1.0]]),
                BoxRegion::new(vec![[1.0, 1.5], [0.5, 0.75]]),
                BoxRegion::new(vec![[1.5, 2.5], [0.0, 1.0]]),
            ],
            false,
        )
        .unwrap()
    }

    pub fn unit_cube() -> Self {
        Self::new(
            "unit_cube",
            vec![BoxRegion::new(vec![[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]])],
            true,
        )
        .unwrap()
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "unit_interval" => Some(Self::unit_interval()),
            "unit_square" => Some(Self::unit_square()),
            "rectangle_2x1" => Self::rectangle("rectangle_2x1", &[2.0, 1.0]).ok(),
            "l_shape" => Some(Self::l_shape()),
            "step" => Some(Self::step()),
            "dumbbell" => Some(Self::dumbbell()),
            "unit_cube" => Some(Self::unit_cube()),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &[
            "unit_interval",
            "unit_square",
            "rectangle_2x1",
            "l_shape",
            "step",
            "dumbbell",
            "unit_cube",
        ]
    }
}

/// The elementary cells cut out by every box coordinate on every axis.
struct Arrangement {
    coords: Vec<Vec<f64>>,
    boxes: Vec<BoxRegion>,
}

impl Arrangement {
    fn new(spec: &DomainSpec) -> Self {
        let coords = (0..spec.dimension)
            .map(|axis| {
                let mut c: Vec<f64> = spec
                    .boxes
                    .iter()
                    .flat_map(|b| b.0[axis].iter().copied())
                    .collect();
                c.sort_by(f64::total_cmp);
                c.dedup();
                c
            })
            .collect();
        Arrangement {
            coords,
            boxes: spec.boxes.clone(),
        }
    }

    fn extents(&self) -> Vec<usize> {
        self.coords.iter().map(|c| c.len() - 1).collect()
    }

    fn cells(&self) -> impl Iterator<Item = Vec<usize>> {
        odometer(self.extents().into_iter().map(|e| (0, e as i64)).collect())
            .map(|idx| idx.into_iter().map(|i| i as usize).collect())
    }

    fn covered(&self, cell: &[usize]) -> bool {
        let mid: Vec<f64> = cell
            .iter()
            .enumerate()
            .map(|(axis, &i)| 0.5 * (self.coords[axis][i] + self.coords[axis][i + 1]))
            .collect();
        self.boxes.iter().any(|b| b.contains_point(&mid))
    }

    fn cell_volume(&self, cell: &[usize]) -> f64 {
        cell.iter()
            .enumerate()
            .map(|(axis, &i)| self.coords[axis][i + 1] - self.coords[axis][i])
            .product()
    }
}

/// Iterates multi-indices over the half-open ranges `[lo, hi)` in
/// lexicographic order (first axis slowest).
fn odometer(ranges: Vec<(i64, i64)>) -> impl Iterator<Item = Vec<i64>> {
    let empty = ranges.iter().any(|(lo, hi)| hi <= lo);
    let mut current: Option<Vec<i64>> = if empty {
        None
    } else {
        Some(ranges.iter().map(|(lo, _)| *lo).collect())
    };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut next = out.clone();
        let mut axis = ranges.len();
        loop {
            if axis == 0 {
                current = None;
                break;
            }
            axis -= 1;
            next[axis] += 1;
            if next[axis] < ranges[axis].1 {
                current = Some(next);
                break;
            }
            next[axis] = ranges[axis].0;
        }
        Some(out)
    })
}

/// Largest axis-aligned box inside the union whose corners lie on the
/// arrangement of the domain's box coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InscribedRectangle {
    pub rect: BoxRegion,
    pub c1: f64,
    pub c2: f64,
}

pub fn inscribed_rectangle(spec: &DomainSpec) -> InscribedRectangle {
    if spec.is_single_box() {
        return InscribedRectangle {
            rect: spec.boxes[0].clone(),
            c1: 1.0,
            c2: 1.0,
        };
    }
    let arr = Arrangement::new(spec);
    let extents = arr.extents();
    let covered: HashMap<Vec<usize>, bool> = arr.cells().map(|c| (c.clone(), arr.covered(&c))).collect();

    // Candidate boxes: every (lo, hi) coordinate pair on every axis.
    let pair_ranges: Vec<Vec<(usize, usize)>> = extents
        .iter()
        .map(|&e| {
            (0..e)
                .flat_map(|lo| (lo + 1..=e).map(move |hi| (lo, hi)))
                .collect()
        })
        .collect();

    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    let choice_ranges = pair_ranges.iter().map(|p| (0, p.len() as i64)).collect();
    for choice in odometer(choice_ranges) {
        let pick: Vec<(usize, usize)> = choice
            .iter()
            .enumerate()
            .map(|(axis, &c)| pair_ranges[axis][c as usize])
            .collect();
        let volume: f64 = pick
            .iter()
            .enumerate()
            .map(|(axis, &(lo, hi))| arr.coords[axis][hi] - arr.coords[axis][lo])
            .product();
        if best.as_ref().is_some_and(|(v, _)| volume <= *v) {
            continue;
        }
        let inside = odometer(pick.iter().map(|&(lo, hi)| (lo as i64, hi as i64)).collect())
            .all(|idx| {
                let idx: Vec<usize> = idx.into_iter().map(|i| i as usize).collect();
                covered[&idx]
            });
        if inside {
            best = Some((volume, pick));
        }
    }

    let (rect_volume, pick) = best.expect("a covered arrangement cell always exists");
    let rect = BoxRegion::new(
        pick.iter()
            .enumerate()
            .map(|(axis, &(lo, hi))| [arr.coords[axis][lo], arr.coords[axis][hi]])
            .collect(),
    );
    InscribedRectangle {
        rect,
        c1: 1.0,
        c2: spec.volume() / rect_volume,
    }
}

/// How faces on the domain boundary count toward a set's perimeter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerimeterMode {
    /// Boundary faces of member cells count.
    #[default]
    Dirichlet,
    /// Only faces strictly inside the domain count.
    Relative,
}

impl fmt::Display for PerimeterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerimeterMode::Dirichlet => f.write_str("dirichlet"),
            PerimeterMode::Relative => f.write_str("relative"),
        }
    }
}

impl FromStr for PerimeterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(PerimeterMode::Dirichlet),
            "relative" => Ok(PerimeterMode::Relative),
            other => Err(Error::InvalidArgument(format!("unknown perimeter mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub index: Vec<i64>,
    pub center: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Face between `lower` and its neighbour `upper` one step further along `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InteriorFace {
    pub lower: usize,
    pub upper: usize,
    pub axis: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub axis: usize,
    pub side: Side,
}

/// What lies across one face of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Link {
    Cell(usize),
    Boundary,
}

/// Uniform grid discretization of a [`DomainSpec`]. Immutable once built.
#[derive(Clone, Debug)]
pub struct Grid {
    name: String,
    dim: usize,
    resolution: u32,
    spacing: f64,
    cell_volume: f64,
    face_area: f64,
    convex_hint: bool,
    cells: Vec<Cell>,
    lookup: HashMap<Vec<i64>, usize>,
    interior_faces: Vec<InteriorFace>,
    boundary_faces: Vec<BoundaryFace>,
    links: Vec<Vec<Link>>,
}

pub fn build_grid(spec: &DomainSpec, resolution: u32) -> Result<Grid> {
    Grid::build(spec, resolution)
}

impl Grid {
    pub fn build(spec: &DomainSpec, resolution: u32) -> Result<Grid> {
        spec.validate()?;
        if resolution == 0 {
            return Err(Error::InvalidArgument("resolution must be at least 1".into()));
        }
        let dim = spec.dimension;
        let r = f64::from(resolution);
        let spacing = 1.0 / r;

        let mut snapped: Vec<Vec<(i64, i64)>> = Vec::with_capacity(spec.boxes.len());
        for (b, region) in spec.boxes.iter().enumerate() {
            let mut ranges = Vec::with_capacity(dim);
            for (axis, &[lo, hi]) in region.0.iter().enumerate() {
                let (slo, shi) = ((lo * r).round(), (hi * r).round());
                if (lo * r - slo).abs() > SNAP_TOL || (hi * r - shi).abs() > SNAP_TOL {
                    log::warn!(
                        "box {b} of '{}' snapped on axis {axis}: [{lo}, {hi}] -> [{}, {}]",
                        spec.name,
                        slo / r,
                        shi / r
                    );
                }
                if shi <= slo {
                    return Err(Error::InvalidDomain(format!(
                        "box {b} is thinner than one cell on axis {axis} at resolution {resolution}"
                    )));
                }
                ranges.push((slo as i64, shi as i64));
            }
            snapped.push(ranges);
        }

        let bbox: Vec<(i64, i64)> = (0..dim)
            .map(|axis| {
                let lo = snapped.iter().map(|b| b[axis].0).min().unwrap();
                let hi = snapped.iter().map(|b| b[axis].1).max().unwrap();
                (lo, hi)
            })
            .collect();

        let mut cells = Vec::new();
        let mut lookup = HashMap::new();
        for index in odometer(bbox) {
            let inside = snapped
                .iter()
                .any(|b| b.iter().zip(&index).all(|(&(lo, hi), &m)| lo <= m && m < hi));
            if inside {
                let center = index.iter().map(|&m| (m as f64 + 0.5) * spacing).collect();
                lookup.insert(index.clone(), cells.len());
                cells.push(Cell { index, center });
            }
        }
        if cells.is_empty() {
            return Err(Error::EmptyGrid);
        }

        let mut interior_faces = Vec::new();
        let mut boundary_faces = Vec::new();
        let mut links = Vec::with_capacity(cells.len());
        for (id, cell) in cells.iter().enumerate() {
            let mut own = Vec::with_capacity(2 * dim);
            for axis in 0..dim {
                for side in [Side::Lower, Side::Upper] {
                    let mut nb = cell.index.clone();
                    nb[axis] += if side == Side::Lower { -1 } else { 1 };
                    match lookup.get(&nb) {
                        Some(&other) => {
                            if side == Side::Upper {
                                interior_faces.push(InteriorFace {
                                    lower: id,
                                    upper: other,
                                    axis,
                                });
                            }
                            own.push(Link::Cell(other));
                        }
                        None => {
                            boundary_faces.push(BoundaryFace { cell: id, axis, side });
                            own.push(Link::Boundary);
                        }
                    }
                }
            }
            links.push(own);
        }

        let grid = Grid {
            name: spec.name.clone(),
            dim,
            resolution,
            spacing,
            cell_volume: spacing.powi(dim as i32),
            face_area: spacing.powi(dim as i32 - 1),
            convex_hint: spec.convex_hint,
            cells,
            lookup,
            interior_faces,
            boundary_faces,
            links,
        };
        grid.check_connected()?;
        Ok(grid)
    }

    fn check_connected(&self) -> Result<()> {
        let mut label = vec![usize::MAX; self.len()];
        let mut sizes = Vec::new();
        let mut representatives = Vec::new();
        for start in 0..self.len() {
            if label[start] != usize::MAX {
                continue;
            }
            let comp = sizes.len();
            let mut size = 0;
            let mut queue = VecDeque::from([start]);
            label[start] = comp;
            while let Some(c) = queue.pop_front() {
                size += 1;
                for &l in &self.links[c] {
                    if let Link::Cell(n) = l {
                        if label[n] == usize::MAX {
                            label[n] = comp;
                            queue.push_back(n);
                        }
                    }
                }
            }
            sizes.push(size);
            representatives.push(self.cells[start].index.clone());
        }
        if sizes.len() > 1 {
            return Err(Error::Disconnected {
                count: sizes.len(),
                sizes,
                representatives,
            });
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn face_area(&self) -> f64 {
        self.face_area
    }

    pub fn convex_hint(&self) -> bool {
        self.convex_hint
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn interior_faces(&self) -> &[InteriorFace] {
        &self.interior_faces
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    /// The `2n` faces of `cell`, ordered (axis 0 lower, axis 0 upper, axis 1 lower, ...).
    pub fn links(&self, cell: usize) -> &[Link] {
        &self.links[cell]
    }

    pub fn cell_at(&self, index: &[i64]) -> Option<usize> {
        self.lookup.get(index).copied()
    }

    pub fn total_volume(&self) -> f64 {
        self.len() as f64 * self.cell_volume
    }

    /// Largest |i - j| over interior faces; the half-bandwidth of any
    /// operator assembled on faces in cell order.
    pub fn bandwidth(&self) -> usize {
        self.interior_faces
            .iter()
            .map(|f| f.upper.abs_diff(f.lower))
            .max()
            .unwrap_or(0)
    }

    pub fn volume(&self, set: &CellSet) -> f64 {
        set.len() as f64 * self.cell_volume
    }

    /// Number of perimeter faces of the set described by `mask`.
    pub fn perimeter_faces(&self, mask: &[bool], mode: PerimeterMode) -> usize {
        let cut = self
            .interior_faces
            .iter()
            .filter(|f| mask[f.lower] != mask[f.upper])
            .count();
        match mode {
            PerimeterMode::Relative => cut,
            PerimeterMode::Dirichlet => {
                cut + self.boundary_faces.iter().filter(|f| mask[f.cell]).count()
            }
        }
    }

    pub fn perimeter(&self, set: &CellSet, mode: PerimeterMode) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        self.perimeter_faces(&set.mask(self.len()), mode) as f64 * self.face_area
    }

    /// Perimeter over volume from integer face and cell counts; `+inf` for
    /// an empty set.
    ///
    /// Since `area / volume` is the resolution, this is the single rounded
    /// division `faces * resolution / cells`: exact whenever the rational is
    /// representable, and ordered like the exact rationals.
    pub fn ratio_from_counts(&self, faces: usize, cells: usize) -> f64 {
        if cells == 0 {
            return f64::INFINITY;
        }
        (faces as f64 * f64::from(self.resolution)) / cells as f64
    }

    pub fn iso_ratio(&self, set: &CellSet, mode: PerimeterMode) -> f64 {
        if set.is_empty() {
            return f64::INFINITY;
        }
        let faces = self.perimeter_faces(&set.mask(self.len()), mode);
        self.ratio_from_counts(faces, set.len())
    }

    /// Change in perimeter face count when `cell` joins the set in `mask`
    /// (negate for removal; `mask[cell]` itself is ignored).
    pub(crate) fn join_delta(&self, mask: &[bool], cell: usize, mode: PerimeterMode) -> isize {
        self.links[cell]
            .iter()
            .map(|l| match *l {
                Link::Cell(n) if mask[n] => -1,
                Link::Cell(_) => 1,
                Link::Boundary => isize::from(mode == PerimeterMode::Dirichlet),
            })
            .sum()
    }

    /// Re-expresses `set` on `target` by multi-index. Returns `None` when a
    /// member cell does not exist in `target`.
    pub fn transfer(&self, set: &CellSet, target: &Grid) -> Option<CellSet> {
        if target.resolution != self.resolution || target.dim != self.dim {
            return None;
        }
        let mapped: Option<Vec<usize>> = set
            .iter()
            .map(|c| target.cell_at(&self.cells[c].index))
            .collect();
        Some(CellSet::from_sorted_unchecked(mapped?))
    }
}

/// A set of cells of one grid, stored as sorted unique indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellSet {
    cells: Vec<usize>,
}

impl CellSet {
    pub fn new(grid: &Grid, cells: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut cells: Vec<usize> = cells.into_iter().collect();
        if let Some(&bad) = cells.iter().find(|&&c| c >= grid.len()) {
            return Err(Error::CellOutOfRange {
                index: bad,
                len: grid.len(),
            });
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(CellSet { cells })
    }

    pub(crate) fn from_sorted_unchecked(mut cells: Vec<usize>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        CellSet { cells }
    }

    pub fn empty() -> Self {
        CellSet::default()
    }

    pub fn full(grid: &Grid) -> Self {
        CellSet {
            cells: (0..grid.len()).collect(),
        }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        CellSet {
            cells: mask
                .iter()
                .enumerate()
                .filter_map(|(i, &m)| m.then_some(i))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.cells
    }

    pub fn mask(&self, len: usize) -> Vec<bool> {
        let mut m = vec![false; len];
        for &c in &self.cells {
            m[c] = true;
        }
        m
    }

    /// First shared cell, if any.
    pub fn intersection_witness(&self, other: &CellSet) -> Option<usize> {
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            match self.cells[i].cmp(&other.cells[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return Some(self.cells[i]),
            }
        }
        None
    }

    pub fn is_disjoint(&self, other: &CellSet) -> bool {
        self.intersection_witness(other).is_none()
    }

    pub fn complement(&self, grid: &Grid) -> CellSet {
        let mask = self.mask(grid.len());
        CellSet::from_mask(&mask.iter().map(|m| !m).collect::<Vec<_>>())
    }
}

//! Raster domain, distance systems and additively weighted Voronoi cells.
//!
//! Labels follow the cell-center argmin rule. Cell measures use the exact
//! area of each site's share of a raster cell after linearizing every
//! distance function at the cell center, which makes `|Ω_i(λ)|` and every
//! cell integral continuous in the weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};
use thiserror::Error;

/// Label of a cell outside the domain.
pub const VACUUM: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("resolution must be at least 2x2, got {nx}x{ny}")]
    BadResolution { nx: usize, ny: usize },
    #[error("bounding box must have positive, finite extent")]
    BadBox,
    #[error("mask has {got} entries, expected {expected}")]
    MaskLength { expected: usize, got: usize },
    #[error("no cell lies inside the domain")]
    EmptyDomain,
    #[error("domain splits into {components} disconnected components")]
    DisconnectedDomain { components: usize },
    #[error("no sites given")]
    NoSites,
    #[error("need at least two sites")]
    SingleSite,
    #[error("sites {0} and {1} share a position")]
    CoincidentSites(usize, usize),
    #[error("site {0} lies outside the domain")]
    SiteOutsideDomain(usize),
    #[error("site {0} has productivity outside (0, inf)")]
    BadProductivity(usize),
    #[error("metric carries {got} scale factors for {expected} sites")]
    ScaleCount { expected: usize, got: usize },
    #[error("scale factor of site {0} must be positive and finite")]
    BadScale(usize),
    #[error("weight of site {0} is not finite")]
    NonFiniteWeight(usize),
    #[error("weight vector has {got} entries, expected {expected}")]
    WeightLength { expected: usize, got: usize },
}

/// Raster discretization of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrid {
    pub bbox: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub cell_area: f64,
    inside: Vec<bool>,
    n_inside: usize,
}

/// Builds a grid over `bbox = [xmin, ymin, xmax, ymax]`, marking cells whose
/// center satisfies `inside`.
pub fn build_grid(
    bbox: [f64; 4],
    resolution: (usize, usize),
    inside: impl Fn([f64; 2]) -> bool,
) -> Result<DomainGrid, GeometryError> {
    let (nx, ny) = resolution;
    check_frame(bbox, nx, ny)?;
    let dx = (bbox[2] - bbox[0]) / nx as f64;
    let dy = (bbox[3] - bbox[1]) / ny as f64;
    let mut mask = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let c = [
                bbox[0] + (ix as f64 + 0.5) * dx,
                bbox[1] + (iy as f64 + 0.5) * dy,
            ];
            mask.push(inside(c));
        }
    }
    grid_from_mask(bbox, resolution, mask)
}

/// Builds a grid from an explicit row-major mask (row index = y).
pub fn grid_from_mask(
    bbox: [f64; 4],
    resolution: (usize, usize),
    mask: Vec<bool>,
) -> Result<DomainGrid, GeometryError> {
    let (nx, ny) = resolution;
    check_frame(bbox, nx, ny)?;
    if mask.len() != nx * ny {
        return Err(GeometryError::MaskLength {
            expected: nx * ny,
            got: mask.len(),
        });
    }
    let n_inside = mask.iter().filter(|&&m| m).count();
    if n_inside == 0 {
        return Err(GeometryError::EmptyDomain);
    }
    let components = count_components(&mask, nx, ny);
    if components > 1 {
        return Err(GeometryError::DisconnectedDomain { components });
    }
    let dx = (bbox[2] - bbox[0]) / nx as f64;
    let dy = (bbox[3] - bbox[1]) / ny as f64;
    Ok(DomainGrid {
        bbox,
        nx,
        ny,
        dx,
        dy,
        cell_area: dx * dy,
        inside: mask,
        n_inside,
    })
}

fn check_frame(bbox: [f64; 4], nx: usize, ny: usize) -> Result<(), GeometryError> {
    if nx < 2 || ny < 2 {
        return Err(GeometryError::BadResolution { nx, ny });
    }
    let ok = bbox.iter().all(|v| v.is_finite()) && bbox[2] > bbox[0] && bbox[3] > bbox[1];
    if !ok {
        return Err(GeometryError::BadBox);
    }
    Ok(())
}

// 4-connected components of the inside mask.
fn count_components(mask: &[bool], nx: usize, ny: usize) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            let (ix, iy) = (c % nx, c / nx);
            let mut visit = |n: usize| {
                if mask[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            };
            if ix > 0 {
                visit(c - 1);
            }
            if ix + 1 < nx {
                visit(c + 1);
            }
            if iy > 0 {
                visit(c - nx);
            }
            if iy + 1 < ny {
                visit(c + nx);
            }
        }
    }
    components
}

impl DomainGrid {
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_inside(&self) -> usize {
        self.n_inside
    }

    pub fn inside_area(&self) -> f64 {
        self.n_inside as f64 * self.cell_area
    }

    pub fn is_inside(&self, cell: usize) -> bool {
        self.inside[cell]
    }

    pub fn inside_mask(&self) -> &[bool] {
        &self.inside
    }

    pub fn center(&self, cell: usize) -> [f64; 2] {
        let (ix, iy) = (cell % self.nx, cell / self.nx);
        [
            self.bbox[0] + (ix as f64 + 0.5) * self.dx,
            self.bbox[1] + (iy as f64 + 0.5) * self.dy,
        ]
    }

    /// Half the diagonal of one cell.
    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.dx.hypot(self.dy)
    }

    /// Cell containing `p`, if `p` lies in the bounding box.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let fx = (p[0] - self.bbox[0]) / self.dx;
        let fy = (p[1] - self.bbox[1]) / self.dy;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (mut ix, mut iy) = (fx as usize, fy as usize);
        // The closing edges of the box belong to the last row/column.
        if ix == self.nx && p[0] <= self.bbox[2] {
            ix -= 1;
        }
        if iy == self.ny && p[1] <= self.bbox[3] {
            iy -= 1;
        }
        (ix < self.nx && iy < self.ny).then_some(iy * self.nx + ix)
    }
}

/// A business district.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: usize,
    pub position: [f64; 2],
    pub productivity: f64,
}

impl Site {
    pub fn new(id: usize, position: [f64; 2], productivity: f64) -> Self {
        Self {
            id,
            position,
            productivity,
        }
    }
}

/// Checks the site preconditions shared by every operation.
pub fn validate_sites(grid: &DomainGrid, sites: &[Site]) -> Result<(), GeometryError> {
    if sites.is_empty() {
        return Err(GeometryError::NoSites);
    }
    for (i, s) in sites.iter().enumerate() {
        if !(s.productivity > 0.0 && s.productivity.is_finite()) {
            return Err(GeometryError::BadProductivity(i));
        }
        match grid.locate(s.position) {
            Some(c) if grid.is_inside(c) => {}
            _ => return Err(GeometryError::SiteOutsideDomain(i)),
        }
        for (j, t) in sites.iter().enumerate().take(i) {
            if t.position == s.position {
                return Err(GeometryError::CoincidentSites(j, i));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    ScaledEuclidean,
}

/// `d_i(x) = s_i ‖x − y_i‖`, with `s_i = 1` for the euclidean family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSystem {
    pub kind: MetricKind,
    scales: Vec<f64>,
}

impl DistanceSystem {
    pub fn euclidean(n_sites: usize) -> Self {
        Self {
            kind: MetricKind::Euclidean,
            scales: vec![1.0; n_sites],
        }
    }

    pub fn scaled(scales: Vec<f64>) -> Result<Self, GeometryError> {
        if let Some(i) = scales.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(GeometryError::BadScale(i));
        }
        Ok(Self {
            kind: MetricKind::ScaledEuclidean,
            scales,
        })
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn scale(&self, i: usize) -> f64 {
        self.scales[i]
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn max_scale(&self) -> f64 {
        self.scales.iter().cloned().fold(0.0, f64::max)
    }

    /// The double-Lipschitz constants `(c, C)` around site `i`.
    pub fn lipschitz_bounds(&self, i: usize) -> (f64, f64) {
        (self.scales[i], self.scales[i])
    }

    #[inline]
    pub fn distance(&self, i: usize, site: [f64; 2], x: [f64; 2]) -> f64 {
        self.scales[i] * (x[0] - site[0]).hypot(x[1] - site[1])
    }

    /// Gradient of `d_i` at `x`; zero at the site itself.
    #[inline]
    pub fn gradient(&self, i: usize, site: [f64; 2], x: [f64; 2]) -> [f64; 2] {
        let (rx, ry) = (x[0] - site[0], x[1] - site[1]);
        let r = rx.hypot(ry);
        if r == 0.0 {
            [0.0, 0.0]
        } else {
            let s = self.scales[i] / r;
            [s * rx, s * ry]
        }
    }

    /// Restriction to a subset of sites.
    pub fn restrict(&self, subset: &[usize]) -> Self {
        Self {
            kind: self.kind,
            scales: subset.iter().map(|&i| self.scales[i]).collect(),
        }
    }

    fn check_len(&self, n: usize) -> Result<(), GeometryError> {
        if self.scales.len() != n {
            return Err(GeometryError::ScaleCount {
                expected: n,
                got: self.scales.len(),
            });
        }
        Ok(())
    }
}

/// A failed triangle inequality `d_i(x) ≤ d_i(y_j) + d_j(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleWitness {
    pub i: usize,
    pub j: usize,
    pub x: [f64; 2],
    pub excess: f64,
}

/// Samples `n_triples` random `(i, j, x)` triples with `x` uniform in random
/// inside cells and returns the worst violation, if any.
pub fn sample_triangle_inequality(
    grid: &DomainGrid,
    sites: &[Site],
    metric: &DistanceSystem,
    n_triples: usize,
    seed: u64,
) -> Option<TriangleWitness> {
    if sites.len() < 2 {
        return None;
    }
    let inside: Vec<usize> = (0..grid.n_cells()).filter(|&c| grid.is_inside(c)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Option<TriangleWitness> = None;
    for _ in 0..n_triples {
        let i = rng.random_range(0..sites.len());
        let mut j = rng.random_range(0..sites.len() - 1);
        if j >= i {
            j += 1;
        }
        let c = grid.center(inside[rng.random_range(0..inside.len())]);
        let x = [
            c[0] + (rng.random::<f64>() - 0.5) * grid.dx,
            c[1] + (rng.random::<f64>() - 0.5) * grid.dy,
        ];
        let lhs = metric.distance(i, sites[i].position, x);
        let rhs = metric.distance(i, sites[i].position, sites[j].position)
            + metric.distance(j, sites[j].position, x);
        let excess = lhs - rhs;
        if excess > 1e-12 * lhs.max(1.0) && worst.as_ref().is_none_or(|w| excess > w.excess) {
            worst = Some(TriangleWitness { i, j, x, excess });
        }
    }
    worst
}

/// Pairwise site distances and the two summary scalars used by the
/// existence conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMetrics {
    /// `d[i][j] = d_i(y_j)`.
    pub d: Vec<Vec<f64>>,
    /// Minimum off-diagonal entry.
    pub d_min: f64,
    /// `min_i max_j d_i(y_j)`.
    pub r: f64,
}

pub fn pairwise_metrics(
    sites: &[Site],
    metric: &DistanceSystem,
) -> Result<PairwiseMetrics, GeometryError> {
    match sites.len() {
        0 => return Err(GeometryError::NoSites),
        1 => return Err(GeometryError::SingleSite),
        _ => {}
    }
    metric.check_len(sites.len())?;
    let d = distance_matrix(sites, metric);
    let n = sites.len();
    let mut d_min = f64::INFINITY;
    let mut r = f64::INFINITY;
    for i in 0..n {
        let mut row_max: f64 = 0.0;
        for j in 0..n {
            if i != j {
                d_min = d_min.min(d[i][j]);
                row_max = row_max.max(d[i][j]);
            }
        }
        r = r.min(row_max);
    }
    Ok(PairwiseMetrics { d, d_min, r })
}

/// `d[i][j] = d_i(y_j)`.
pub fn distance_matrix(sites: &[Site], metric: &DistanceSystem) -> Vec<Vec<f64>> {
    sites
        .iter()
        .enumerate()
        .map(|(i, si)| {
            sites
                .iter()
                .map(|sj| metric.distance(i, si.position, sj.position))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Interior,
    Boundary,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// `(i, j, verdict)` for every ordered pair `i ≠ j`.
    pub pairs: Vec<(usize, usize, Feasibility)>,
    pub overall: Feasibility,
}

/// Classifies each ordered pair by `λ_i − λ_j` against `k·d_i(y_j)` (inside
/// `Λ^k`) and `d_i(y_j)` (inside `Λ`).
pub fn lambda_feasibility(
    sites: &[Site],
    metric: &DistanceSystem,
    weights: &[f64],
    k: f64,
) -> FeasibilityReport {
    assert!(k > 0.0 && k < 1.0, "k must lie in (0, 1)");
    let n = sites.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1));
    let mut overall = Feasibility::Interior;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = metric.distance(i, sites[i].position, sites[j].position);
            let diff = weights[i] - weights[j];
            let verdict = if diff < k * d {
                Feasibility::Interior
            } else if diff < d {
                Feasibility::Boundary
            } else {
                Feasibility::Infeasible
            };
            overall = overall.max(verdict);
            pairs.push((i, j, verdict));
        }
    }
    FeasibilityReport { pairs, overall }
}

/// Largest `t ∈ [0, 1]` such that `t·λ` satisfies
/// `t(λ_i − λ_j) ≤ k·d_i(y_j)` for all pairs.
pub fn radial_shrink_factor(sites: &[Site], metric: &DistanceSystem, weights: &[f64], k: f64) -> f64 {
    let mut t: f64 = 1.0;
    for i in 0..sites.len() {
        for j in 0..sites.len() {
            let diff = weights[i] - weights[j];
            if i != j && diff > 0.0 {
                let d = metric.distance(i, sites[i].position, sites[j].position);
                t = t.min(k * d / diff);
            }
        }
    }
    t
}

/// One site's share of a cell that is split between several sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedCell {
    pub cell: usize,
    /// `(site, fraction of the cell)`; fractions sum to one.
    pub parts: Vec<(u32, f64)>,
    pub interfaces: Vec<Interface>,
}

/// A straight boundary segment of `site`'s share facing `other`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub site: u32,
    pub other: u32,
    pub length: f64,
}

/// Coverage of one cell.
#[derive(Debug, Clone, Copy)]
pub enum Coverage<'a> {
    Outside,
    Whole(usize),
    Split(&'a MixedCell),
}

impl Coverage<'_> {
    /// Calls `f(site, fraction)` for each share of the cell.
    pub fn for_each(&self, mut f: impl FnMut(usize, f64)) {
        match self {
            Coverage::Outside => {}
            Coverage::Whole(s) => f(*s, 1.0),
            Coverage::Split(m) => {
                for &(s, frac) in &m.parts {
                    f(s as usize, frac);
                }
            }
        }
    }
}

const PURE: u32 = u32::MAX;

/// Additively weighted Voronoi partition of the grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tessellation {
    pub weights: Vec<f64>,
    /// Site index per cell (cell-center argmin), `VACUUM` outside.
    pub labels: Vec<u32>,
    pub cell_measure: Vec<f64>,
    /// Sorted neighbor lists; symmetric.
    pub neighbors: Vec<Vec<usize>>,
    /// Sites with positive measure, ascending.
    pub active_set: Vec<usize>,
    mixed: Vec<MixedCell>,
    mixed_index: Vec<u32>,
}

impl Tessellation {
    pub fn n_sites(&self) -> usize {
        self.weights.len()
    }

    pub fn coverage(&self, cell: usize) -> Coverage<'_> {
        let label = self.labels[cell];
        if label == VACUUM {
            Coverage::Outside
        } else if self.mixed_index[cell] == PURE {
            Coverage::Whole(label as usize)
        } else {
            Coverage::Split(&self.mixed[self.mixed_index[cell] as usize])
        }
    }

    /// Cells split between several sites, in ascending cell order.
    pub fn mixed_cells(&self) -> &[MixedCell] {
        &self.mixed
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.cell_measure[i] > 0.0
    }

    pub fn are_adjacent(&self, i: usize, k: usize) -> bool {
        self.neighbors[i].binary_search(&k).is_ok()
    }

    pub fn total_measure(&self) -> f64 {
        self.cell_measure.iter().sum()
    }
}

/// Assigns every inside cell to `argmin_i (d_i(x) − λ_i)` at its center
/// (ties to the lowest index) and computes exact shares of split cells.
pub fn assign_labels(
    grid: &DomainGrid,
    sites: &[Site],
    metric: &DistanceSystem,
    weights: &[f64],
) -> Result<Tessellation, GeometryError> {
    let n = sites.len();
    if n == 0 {
        return Err(GeometryError::NoSites);
    }
    metric.check_len(n)?;
    if weights.len() != n {
        return Err(GeometryError::WeightLength {
            expected: n,
            got: weights.len(),
        });
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
        return Err(GeometryError::NonFiniteWeight(i));
    }

    let rows = crate::map_indices(grid.ny, |iy| label_row(grid, sites, metric, weights, iy));

    let mut labels = Vec::with_capacity(grid.n_cells());
    let mut mixed = Vec::new();
    for (row_labels, row_mixed) in rows {
        labels.extend(row_labels);
        mixed.extend(row_mixed);
    }
    let mut mixed_index = vec![PURE; grid.n_cells()];
    let mut cell_measure = vec![0.0; n];
    let mut neighbor_sets = vec![BTreeSet::new(); n];
    for (m, mc) in mixed.iter().enumerate() {
        mixed_index[mc.cell] = m as u32;
        for f in &mc.interfaces {
            if f.length > 0.0 {
                neighbor_sets[f.site as usize].insert(f.other as usize);
                neighbor_sets[f.other as usize].insert(f.site as usize);
            }
        }
    }
    for cell in 0..grid.n_cells() {
        let label = labels[cell];
        if label == VACUUM {
            continue;
        }
        if mixed_index[cell] == PURE {
            cell_measure[label as usize] += grid.cell_area;
        } else {
            for &(s, frac) in &mixed[mixed_index[cell] as usize].parts {
                cell_measure[s as usize] += frac * grid.cell_area;
            }
        }
        let (ix, iy) = (cell % grid.nx, cell / grid.nx);
        let mut link = |other: usize| {
            let l2 = labels[other];
            if l2 != VACUUM && l2 != label {
                neighbor_sets[label as usize].insert(l2 as usize);
                neighbor_sets[l2 as usize].insert(label as usize);
            }
        };
        if ix + 1 < grid.nx {
            link(cell + 1);
        }
        if iy + 1 < grid.ny {
            link(cell + grid.nx);
        }
    }
    let active_set = (0..n).filter(|&i| cell_measure[i] > 0.0).collect();
    Ok(Tessellation {
        weights: weights.to_vec(),
        labels,
        cell_measure,
        neighbors: neighbor_sets
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect(),
        active_set,
        mixed,
        mixed_index,
    })
}

fn label_row(
    grid: &DomainGrid,
    sites: &[Site],
    metric: &DistanceSystem,
    weights: &[f64],
    iy: usize,
) -> (Vec<u32>, Vec<MixedCell>) {
    let n = sites.len();
    let reach = grid.half_diagonal();
    let mut labels = Vec::with_capacity(grid.nx);
    let mut mixed = Vec::new();
    let mut e = vec![0.0; n];
    let mut candidates = Vec::with_capacity(n);
    for ix in 0..grid.nx {
        let cell = iy * grid.nx + ix;
        if !grid.is_inside(cell) {
            labels.push(VACUUM);
            continue;
        }
        let c = grid.center(cell);
        let mut best = 0;
        for j in 0..n {
            e[j] = metric.distance(j, sites[j].position, c) - weights[j];
            if e[j] < e[best] {
                best = j;
            }
        }
        labels.push(best as u32);
        // A site can only win somewhere in the cell if its value at the center
        // is within the combined Lipschitz reach of the winner's.
        candidates.clear();
        for j in 0..n {
            if e[j] - e[best] < (metric.scale(j) + metric.scale(best)) * reach {
                candidates.push(j);
            }
        }
        if candidates.len() > 1 {
            if let Some(mc) = split_cell(grid, sites, metric, &e, &candidates, cell, c) {
                mixed.push(mc);
            }
        }
    }
    (labels, mixed)
}

type Vertex = ([f64; 2], i64);

fn split_cell(
    grid: &DomainGrid,
    sites: &[Site],
    metric: &DistanceSystem,
    e: &[f64],
    candidates: &[usize],
    cell: usize,
    c: [f64; 2],
) -> Option<MixedCell> {
    let (hx, hy) = (0.5 * grid.dx, 0.5 * grid.dy);
    let u: Vec<[f64; 2]> = candidates
        .iter()
        .map(|&j| metric.gradient(j, sites[j].position, c))
        .collect();
    let mut parts = Vec::new();
    let mut interfaces = Vec::new();
    let square: Vec<Vertex> = vec![
        ([-hx, -hy], -1),
        ([hx, -hy], -1),
        ([hx, hy], -1),
        ([-hx, hy], -1),
    ];
    for (a, &i) in candidates.iter().enumerate() {
        let mut poly = square.clone();
        for (b, &j) in candidates.iter().enumerate() {
            if a == b || poly.is_empty() {
                continue;
            }
            // i beats j where (e_j − e_i) + (u_j − u_i)·x ≥ 0.
            let off = e[j] - e[i];
            let g = [u[b][0] - u[a][0], u[b][1] - u[a][1]];
            if g[0].abs() + g[1].abs() < 1e-14 {
                if off < 0.0 || (off == 0.0 && j < i) {
                    poly.clear();
                }
                continue;
            }
            poly = clip(&poly, off, g, j as i64);
        }
        if poly.len() < 3 {
            continue;
        }
        let area = polygon_area(&poly);
        if area <= 0.0 {
            continue;
        }
        parts.push((i as u32, area));
        let m = poly.len();
        for v in 0..m {
            let (p, tag) = poly[v];
            if tag >= 0 {
                let q = poly[(v + m - 1) % m].0;
                let length = (p[0] - q[0]).hypot(p[1] - q[1]);
                if length > 0.0 {
                    add_interface(&mut interfaces, i as u32, tag as u32, length);
                }
            }
        }
    }
    if parts.len() < 2 {
        return None;
    }
    let total: f64 = parts.iter().map(|p| p.1).sum();
    for p in &mut parts {
        p.1 /= total;
    }
    Some(MixedCell {
        cell,
        parts,
        interfaces,
    })
}

fn add_interface(list: &mut Vec<Interface>, site: u32, other: u32, length: f64) {
    if let Some(f) = list.iter_mut().find(|f| f.site == site && f.other == other) {
        f.length += length;
    } else {
        list.push(Interface {
            site,
            other,
            length,
        });
    }
}

// Sutherland-Hodgman step keeping `off + g·x ≥ 0`. Each vertex carries the
// tag of the edge arriving at it; edges created along the clip line get `tag`.
fn clip(poly: &[Vertex], off: f64, g: [f64; 2], tag: i64) -> Vec<Vertex> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for m in 0..n {
        let (pb, tb) = poly[m];
        let (pa, _) = poly[(m + n - 1) % n];
        let fa = off + g[0] * pa[0] + g[1] * pa[1];
        let fb = off + g[0] * pb[0] + g[1] * pb[1];
        let cross = || {
            let t = fa / (fa - fb);
            [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
        };
        match (fa >= 0.0, fb >= 0.0) {
            (true, true) => out.push((pb, tb)),
            (true, false) => out.push((cross(), tb)),
            (false, true) => {
                out.push((cross(), tag));
                out.push((pb, tb));
            }
            (false, false) => {}
        }
    }
    out
}

fn polygon_area(poly: &[Vertex]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for m in 0..n {
        let p = poly[m].0;
        let q = poly[(m + 1) % n].0;
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(n: usize) -> DomainGrid {
        build_grid([0.0, 0.0, 1.0, 1.0], (n, n), |_| true).unwrap()
    }

    #[test]
    fn full_square_grid_counts() {
        let g = unit_square(64);
        assert_eq!(g.n_inside(), 4096);
        assert!((g.cell_area - 1.0 / 4096.0).abs() < 1e-18);
    }

    #[test]
    fn empty_predicate_is_rejected() {
        let err = build_grid([0.0, 0.0, 1.0, 1.0], (2, 2), |_| false).unwrap_err();
        assert_eq!(err, GeometryError::EmptyDomain);
    }

    #[test]
    fn unit_disk_area() {
        let g = build_grid([-1.0, -1.0, 1.0, 1.0], (128, 128), |p| {
            p[0] * p[0] + p[1] * p[1] < 1.0
        })
        .unwrap();
        let rel = (g.inside_area() - std::f64::consts::PI).abs() / std::f64::consts::PI;
        assert!(rel < 0.02, "rel error {rel}");
    }

    #[test]
    fn two_blobs_are_disconnected() {
        let err = build_grid([0.0, 0.0, 1.0, 1.0], (16, 16), |p| {
            (p[0] - 0.2).abs() < 0.1 || (p[0] - 0.8).abs() < 0.1
        })
        .unwrap_err();
        assert_eq!(err, GeometryError::DisconnectedDomain { components: 2 });
    }

    #[test]
    fn diagonal_touch_is_not_connected() {
        let mask = vec![true, false, false, true];
        let err = grid_from_mask([0.0, 0.0, 1.0, 1.0], (2, 2), mask).unwrap_err();
        assert_eq!(err, GeometryError::DisconnectedDomain { components: 2 });
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let g = unit_square(64);
        let sites = [
            Site::new(0, [0.25, 0.5], 1.0),
            Site::new(1, [0.75, 0.5], 1.0),
        ];
        let t = assign_labels(&g, &sites, &DistanceSystem::euclidean(2), &[0.0, 0.0]).unwrap();
        assert!((t.cell_measure[0] - t.cell_measure[1]).abs() <= g.cell_area);
        assert!((t.total_measure() - 1.0).abs() < 1e-12);
        for cell in 0..g.n_cells() {
            let c = g.center(cell);
            let expect = if c[0] <= 0.5 { 0 } else { 1 };
            assert_eq!(t.labels[cell], expect);
        }
        assert_eq!(t.neighbors, vec![vec![1], vec![0]]);
    }

    #[test]
    fn dominated_site_gets_no_area() {
        let g = unit_square(64);
        let sites = [
            Site::new(0, [0.0 + 0.0001, 0.5], 1.0),
            Site::new(1, [0.9999, 0.5], 1.0),
        ];
        let t = assign_labels(&g, &sites, &DistanceSystem::euclidean(2), &[0.6, -0.6]).unwrap();
        assert_eq!(t.cell_measure[1], 0.0);
        assert_eq!(t.active_set, vec![0]);
    }

    #[test]
    fn non_finite_weight_is_rejected() {
        let g = unit_square(8);
        let sites = [Site::new(0, [0.5, 0.5], 1.0)];
        let err = assign_labels(&g, &sites, &DistanceSystem::euclidean(1), &[f64::NAN]).unwrap_err();
        assert_eq!(err, GeometryError::NonFiniteWeight(0));
    }

    #[test]
    fn split_fractions_match_exact_straight_bisector() {
        // Equal weights put the bisector at x = 0.51, through the middle of a
        // column of cells; the split shares must reproduce the exact areas.
        let g = unit_square(50);
        let sites = [Site::new(0, [0.3, 0.5], 1.0), Site::new(1, [0.72, 0.5], 1.0)];
        let t = assign_labels(&g, &sites, &DistanceSystem::euclidean(2), &[0.0, 0.0]).unwrap();
        assert!((t.cell_measure[0] - 0.51).abs() < 1e-12);
        assert!((t.cell_measure[1] - 0.49).abs() < 1e-12);
        let len: f64 = t
            .mixed_cells()
            .iter()
            .flat_map(|m| m.interfaces.iter())
            .filter(|f| f.site == 0)
            .map(|f| f.length)
            .sum();
        assert!((len - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_metrics_examples() {
        let m = DistanceSystem::euclidean(2);
        let p = pairwise_metrics(
            &[Site::new(0, [0.0, 0.0], 1.0), Site::new(1, [1.0, 0.0], 1.0)],
            &m,
        )
        .unwrap();
        assert_eq!((p.d_min, p.r), (1.0, 1.0));

        let sites = [
            Site::new(0, [0.0, 0.0], 1.0),
            Site::new(1, [1.0, 0.0], 1.0),
            Site::new(2, [3.0, 0.0], 1.0),
        ];
        let p = pairwise_metrics(&sites, &DistanceSystem::euclidean(3)).unwrap();
        assert_eq!((p.d_min, p.r), (1.0, 2.0));

        let one = [Site::new(0, [0.0, 0.0], 1.0)];
        assert_eq!(
            pairwise_metrics(&one, &DistanceSystem::euclidean(1)).unwrap_err(),
            GeometryError::SingleSite
        );
    }

    #[test]
    fn coincident_sites_are_rejected() {
        let g = unit_square(8);
        let sites = [Site::new(0, [0.5, 0.5], 1.0), Site::new(1, [0.5, 0.5], 1.0)];
        assert_eq!(
            validate_sites(&g, &sites).unwrap_err(),
            GeometryError::CoincidentSites(0, 1)
        );
    }

    #[test]
    fn feasibility_examples() {
        let sites = [Site::new(0, [0.0, 0.0], 1.0), Site::new(1, [1.0, 0.0], 1.0)];
        let m = DistanceSystem::euclidean(2);
        assert_eq!(lambda_feasibility(&sites, &m, &[0.0, 0.0], 0.3).overall, Feasibility::Interior);
        assert_eq!(
            lambda_feasibility(&sites, &m, &[0.4, -0.35], 0.5).overall,
            Feasibility::Boundary
        );
        assert_eq!(lambda_feasibility(&sites, &m, &[2.0, 0.0], 0.5).overall, Feasibility::Infeasible);
    }

    #[test]
    fn radial_shrink_lands_on_the_k_boundary() {
        let sites = [Site::new(0, [0.0, 0.0], 1.0), Site::new(1, [1.0, 0.0], 1.0)];
        let m = DistanceSystem::euclidean(2);
        let t = radial_shrink_factor(&sites, &m, &[0.0, -1.5], 0.5);
        assert!((t * 1.5 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scaled_metric_can_break_the_triangle_inequality() {
        let g = unit_square(32);
        let sites = [Site::new(0, [0.2, 0.5], 1.0), Site::new(1, [0.8, 0.5], 1.0)];
        let m = DistanceSystem::scaled(vec![10.0, 0.1]).unwrap();
        let w = sample_triangle_inequality(&g, &sites, &m, 10_000, 1).expect("violation");
        assert_eq!((w.i, w.j), (0, 1));
        assert!(sample_triangle_inequality(&g, &sites, &DistanceSystem::euclidean(2), 10_000, 1).is_none());
    }
}

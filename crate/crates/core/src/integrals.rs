//! Cell functionals: aggregate amenities, resident densities and the
//! boundary integrals behind the semielasticity of `B_i`.

use crate::fields::Geography;
use crate::geometry::{assign_labels, Coverage, GeometryError, Tessellation};
use crate::LogAccumulator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gradients closer than this are treated as parallel.
pub const DEGENERATE_NORMAL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegralError {
    #[error("congestion parameter must be negative, got {0}")]
    NonNegativeBeta(f64),
    #[error("site {site} carries labor {labor} but its commuting area is empty")]
    InactiveSiteWithMass { site: usize, labor: f64 },
    #[error("labor vector has {got} entries, expected {expected}")]
    LaborLength { expected: usize, got: usize },
    #[error("eta needs two distinct sites, got ({0}, {1})")]
    SamePair(usize, usize),
    #[error("k_shrink must lie in (0, 1), got {0}")]
    BadShrink(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The integrand `(b̄(x) / e^{rate·d_i(x)})^{−1/β}` of a cell aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// `−1/β`.
    pub amenity_exponent: f64,
    /// Rate multiplying `d_i(x)` inside the commuting cost.
    pub distance_rate: f64,
    /// The congestion parameter of the outer power `B = I^{−β}`.
    pub beta_eff: f64,
}

impl KernelSpec {
    pub fn new(beta_eff: f64, distance_rate: f64) -> Result<Self, IntegralError> {
        if !(beta_eff < 0.0) {
            return Err(IntegralError::NonNegativeBeta(beta_eff));
        }
        Ok(Self {
            amenity_exponent: -1.0 / beta_eff,
            distance_rate,
            beta_eff,
        })
    }

    #[inline]
    pub fn log_value(&self, log_amenity: f64, distance: f64) -> f64 {
        self.amenity_exponent * log_amenity + self.distance_rate / self.beta_eff * distance
    }
}

/// `I_i = ∫_{Ω_i} kernel` in logs and `B_i = I_i^{−β}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregates {
    /// `log I_i`; `-inf` flags an empty commuting area.
    pub log_integral: Vec<f64>,
    pub beta_eff: f64,
}

impl CellAggregates {
    pub fn is_empty(&self, i: usize) -> bool {
        self.log_integral[i] == f64::NEG_INFINITY
    }

    pub fn empty_sites(&self) -> Vec<usize> {
        (0..self.log_integral.len()).filter(|&i| self.is_empty(i)).collect()
    }

    pub fn integral(&self, i: usize) -> Option<f64> {
        (!self.is_empty(i)).then(|| self.log_integral[i].exp())
    }

    pub fn log_b(&self, i: usize) -> Option<f64> {
        (!self.is_empty(i)).then(|| -self.beta_eff * self.log_integral[i])
    }

    pub fn b(&self, i: usize) -> Option<f64> {
        self.log_b(i).map(f64::exp)
    }
}

/// `log ∫_{Ω_i} kernel_i(x)·e^{extra_rate·d_i(x)} dx` for every site.
///
/// Rows are reduced independently and merged in row order, so the result
/// does not depend on the number of threads.
pub fn log_cell_integrals(
    tess: &Tessellation,
    geo: &Geography,
    kernel: &KernelSpec,
    extra_rate: f64,
) -> Vec<f64> {
    let grid = &geo.grid;
    let n = geo.n_sites();
    let log_area = grid.cell_area.ln();
    let rows = crate::map_indices(grid.ny, |iy| {
        let mut acc = vec![LogAccumulator::default(); n];
        for cell in iy * grid.nx..(iy + 1) * grid.nx {
            let cov = tess.coverage(cell);
            if matches!(cov, Coverage::Outside) {
                continue;
            }
            let c = grid.center(cell);
            let la = geo.amenity.log_value(cell);
            cov.for_each(|i, frac| {
                let d = geo.distance(i, c);
                acc[i].add(kernel.log_value(la, d) + extra_rate * d + log_area + frac.ln());
            });
        }
        acc
    });
    let mut total = vec![LogAccumulator::default(); n];
    for row in rows {
        for (t, r) in total.iter_mut().zip(row) {
            t.merge(r);
        }
    }
    total.iter().map(|a| a.value()).collect()
}

pub fn aggregate_amenities(tess: &Tessellation, geo: &Geography, kernel: &KernelSpec) -> CellAggregates {
    CellAggregates {
        log_integral: log_cell_integrals(tess, geo, kernel, 0.0),
        beta_eff: kernel.beta_eff,
    }
}

/// Exact `∫_{‖x‖<ε} e^{δ‖x‖/β} dx`.
pub fn disk_kernel_oracle(eps: f64, delta: f64, beta: f64) -> f64 {
    let e = (delta * eps / beta).exp();
    2.0 * std::f64::consts::PI
        * ((1.0 - e) * beta * beta / (delta * delta) + eps * e * beta / delta)
}

/// Resident density per cell: `kernel_i(x)/I_i · L_i` on `Ω_i`, zero outside.
pub fn resident_density(
    tess: &Tessellation,
    geo: &Geography,
    kernel: &KernelSpec,
    agg: &CellAggregates,
    labor: &[f64],
) -> Result<Vec<f64>, IntegralError> {
    let n = geo.n_sites();
    if labor.len() != n {
        return Err(IntegralError::LaborLength {
            expected: n,
            got: labor.len(),
        });
    }
    for (i, &l) in labor.iter().enumerate() {
        if l > 0.0 && agg.is_empty(i) {
            return Err(IntegralError::InactiveSiteWithMass { site: i, labor: l });
        }
    }
    let grid = &geo.grid;
    let mut density = vec![0.0; grid.n_cells()];
    for (cell, out) in density.iter_mut().enumerate() {
        let cov = tess.coverage(cell);
        let c = grid.center(cell);
        let la = geo.amenity.log_value(cell);
        cov.for_each(|i, frac| {
            if labor[i] > 0.0 {
                let lk = kernel.log_value(la, geo.distance(i, c));
                *out += frac * (lk - agg.log_integral[i]).exp() * labor[i];
            }
        });
    }
    Ok(density)
}

/// Boundary-integral estimate of `|∂ log B_i / ∂λ_k|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaValue {
    pub value: f64,
    /// Interface pieces skipped because the two gradients nearly coincide.
    pub degenerate_cells: usize,
}

/// `|β|·Σ kernel_i(x)·len/‖∇d_i − ∇d_k‖ / I_i` over the interface between
/// `Ω_i` and `Ω_k`. Exactly zero when the cells are not adjacent.
pub fn eta_boundary_integral(
    tess: &Tessellation,
    geo: &Geography,
    kernel: &KernelSpec,
    agg: &CellAggregates,
    i: usize,
    k: usize,
) -> Result<EtaValue, IntegralError> {
    if i == k {
        return Err(IntegralError::SamePair(i, k));
    }
    let zero = EtaValue {
        value: 0.0,
        degenerate_cells: 0,
    };
    if !tess.are_adjacent(i, k) || agg.is_empty(i) {
        return Ok(zero);
    }
    let grid = &geo.grid;
    let (yi, yk) = (geo.sites[i].position, geo.sites[k].position);
    let mut sum = 0.0;
    let mut degenerate = 0;
    for mc in tess.mixed_cells() {
        for f in &mc.interfaces {
            if f.site as usize != i || f.other as usize != k {
                continue;
            }
            let c = grid.center(mc.cell);
            let ui = geo.metric.gradient(i, yi, c);
            let uk = geo.metric.gradient(k, yk, c);
            let gap = (ui[0] - uk[0]).hypot(ui[1] - uk[1]);
            if gap < DEGENERATE_NORMAL {
                degenerate += 1;
                continue;
            }
            let lk = kernel.log_value(geo.amenity.log_value(mc.cell), geo.distance(i, c));
            sum += (lk - agg.log_integral[i]).exp() * f.length / gap;
        }
    }
    Ok(EtaValue {
        value: kernel.beta_eff.abs() * sum,
        degenerate_cells: degenerate,
    })
}

/// Sampled supremum of the pairwise semielasticities over `Λ^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSupEstimate {
    pub value: f64,
    /// Pair `(i, k)` attaining the maximum, if any pair is adjacent.
    pub argmax: Option<(usize, usize)>,
    pub samples_used: usize,
    pub degenerate_cells: usize,
    /// Always false: a sampled maximum is not a certified bound.
    pub certified: bool,
}

/// Maximum of [`eta_boundary_integral`] over adjacent pairs and sampled
/// weights. The first sample is the standard tessellation `λ = 0`; the rest
/// draw `λ_i − λ_0` uniformly within `±k·d_i(y_0)` and reject vectors that
/// leave `Λ^k`.
pub fn eta_sup_estimate(
    geo: &Geography,
    kernel: &KernelSpec,
    k_shrink: f64,
    n_samples: usize,
    seed: u64,
) -> Result<EtaSupEstimate, IntegralError> {
    if !(k_shrink > 0.0 && k_shrink < 1.0) {
        return Err(IntegralError::BadShrink(k_shrink));
    }
    let n = geo.n_sites();
    let mut best = EtaSupEstimate {
        value: 0.0,
        argmax: None,
        samples_used: 0,
        degenerate_cells: 0,
        certified: false,
    };
    if n < 2 {
        best.samples_used = n_samples.max(1);
        return Ok(best);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = vec![0.0; n];
    for s in 0..n_samples.max(1) {
        if s > 0 && !draw_in_lambda_k(geo, k_shrink, &mut rng, &mut weights) {
            continue;
        }
        let tess = assign_labels(&geo.grid, &geo.sites, &geo.metric, &weights)?;
        let agg = aggregate_amenities(&tess, geo, kernel);
        for i in 0..n {
            for &k in &tess.neighbors[i] {
                let eta = eta_boundary_integral(&tess, geo, kernel, &agg, i, k)?;
                best.degenerate_cells += eta.degenerate_cells;
                if eta.value > best.value {
                    best.value = eta.value;
                    best.argmax = Some((i, k));
                }
            }
        }
        best.samples_used += 1;
    }
    Ok(best)
}

pub(crate) fn draw_in_lambda_k(geo: &Geography, k: f64, rng: &mut ChaCha8Rng, out: &mut [f64]) -> bool {
    let n = out.len();
    for _ in 0..1000 {
        out[0] = 0.0;
        for (i, w) in out.iter_mut().enumerate().skip(1) {
            let span = k * geo.site_distance(i, 0);
            *w = rng.random_range(-span..=span);
        }
        let ok = (0..n).all(|i| {
            (0..n).all(|j| i == j || out[i] - out[j] <= k * geo.site_distance(i, j))
        });
        if ok {
            return true;
        }
    }
    out.iter_mut().for_each(|w| *w = 0.0);
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::amenity_from_function;
    use crate::geometry::{build_grid, Site};
    use std::sync::Arc;

    fn geo(n: usize, sites: Vec<Site>, tau: f64) -> Geography {
        let grid = Arc::new(build_grid([0.0, 0.0, 1.0, 1.0], (n, n), |_| true).unwrap());
        let amen = Arc::new(amenity_from_function(&grid, |_| 1.0).unwrap());
        Geography::euclidean(grid, sites, amen, tau).unwrap()
    }

    #[test]
    fn oracle_examples() {
        let v = disk_kernel_oracle(1.0, 1.0, -1.0);
        let expect = 2.0 * std::f64::consts::PI * (1.0 - 2.0 * (-1.0f64).exp());
        assert!((v - expect).abs() < 1e-14);
        // The closed form evaluates to 1.660276; 1.65568 is an arithmetic slip.
        assert!((v - 1.660276).abs() < 1e-6);
        // Far-field limit 2πβ²/δ².
        let far = disk_kernel_oracle(100.0, 10.0, -0.5);
        let limit = 2.0 * std::f64::consts::PI * 0.25 / 100.0;
        assert!((far - limit).abs() < 1e-12);
    }

    #[test]
    fn weak_commuting_cost_recovers_cell_measure() {
        let g = geo(32, vec![Site::new(0, [0.3, 0.4], 1.0), Site::new(1, [0.7, 0.6], 1.0)], 0.1);
        let t = assign_labels(&g.grid, &g.sites, &g.metric, &[0.0, 0.1]).unwrap();
        let kernel = KernelSpec::new(-0.5, 1e-12).unwrap();
        let agg = aggregate_amenities(&t, &g, &kernel);
        for i in 0..2 {
            let b = agg.b(i).unwrap();
            let expect = t.cell_measure[i].powf(0.5);
            assert!((b - expect).abs() < 1e-10 * expect);
        }
    }

    #[test]
    fn symmetric_sites_have_equal_aggregates() {
        let g = geo(64, vec![Site::new(0, [0.25, 0.5], 1.0), Site::new(1, [0.75, 0.5], 1.0)], 0.1);
        let t = assign_labels(&g.grid, &g.sites, &g.metric, &[0.0, 0.0]).unwrap();
        let agg = aggregate_amenities(&t, &g, &KernelSpec::new(-0.3, 2.0).unwrap());
        let (b0, b1) = (agg.b(0).unwrap(), agg.b(1).unwrap());
        assert!((b0 - b1).abs() < 1e-10 * b0);
    }

    #[test]
    fn empty_cells_are_flagged() {
        let g = geo(32, vec![Site::new(0, [0.01, 0.5], 1.0), Site::new(1, [0.99, 0.5], 1.0)], 0.1);
        let t = assign_labels(&g.grid, &g.sites, &g.metric, &[0.6, -0.6]).unwrap();
        let agg = aggregate_amenities(&t, &g, &KernelSpec::new(-0.3, 2.0).unwrap());
        assert_eq!(agg.empty_sites(), vec![1]);
        assert_eq!(agg.b(1), None);
    }

    #[test]
    fn density_integrates_back_to_labor() {
        let g = geo(64, vec![Site::new(0, [0.25, 0.5], 1.0), Site::new(1, [0.75, 0.5], 1.0)], 0.1);
        let t = assign_labels(&g.grid, &g.sites, &g.metric, &[0.0, 0.0]).unwrap();
        let kernel = KernelSpec::new(-0.3, 2.0).unwrap();
        let agg = aggregate_amenities(&t, &g, &kernel);
        let dens = resident_density(&t, &g, &kernel, &agg, &[0.5, 0.5]).unwrap();
        let total: f64 = dens.iter().sum::<f64>() * g.grid.cell_area;
        assert!((total - 1.0).abs() < 1e-10);
        // Mirror symmetry about x = 1/2.
        for iy in 0..64 {
            for ix in 0..32 {
                let a = dens[iy * 64 + ix];
                let b = dens[iy * 64 + 63 - ix];
                assert!((a - b).abs() < 1e-9 * a.max(b));
            }
        }
        // Peak at the site cell.
        let peak = (0..dens.len()).filter(|&c| g.grid.center(c)[0] < 0.5).max_by(|&a, &b| dens[a].total_cmp(&dens[b])).unwrap();
        assert_eq!(Some(peak), g.grid.locate([0.25, 0.5]));
    }

    #[test]
    fn labor_on_empty_site_is_an_error() {
        let g = geo(32, vec![Site::new(0, [0.01, 0.5], 1.0), Site::new(1, [0.99, 0.5], 1.0)], 0.1);
        let t = assign_labels(&g.grid, &g.sites, &g.metric, &[0.6, -0.6]).unwrap();
        let kernel = KernelSpec::new(-0.3, 2.0).unwrap();
        let agg = aggregate_amenities(&t, &g, &kernel);
        assert_eq!(
            resident_density(&t, &g, &kernel, &agg, &[0.5, 0.5]).unwrap_err(),
            IntegralError::InactiveSiteWithMass { site: 1, labor: 0.5 }
        );
    }

    #[test]
    fn eta_is_zero_for_non_adjacent_pairs() {
        let sites = vec![
            Site::new(0, [0.1, 0.5], 1.0),
            Site::new(1, [0.5, 0.5], 1.0),
            Site::new(2, [0.9, 0.5], 1.0),
        ];
        let g = geo(64, sites, 0.1);
        let t = assign_labels(&g.grid, &g.sites, &g.metric, &[0.0; 3]).unwrap();
        let kernel = KernelSpec::new(-0.3, 2.0).unwrap();
        let agg = aggregate_amenities(&t, &g, &kernel);
        assert!(!t.are_adjacent(0, 2));
        assert_eq!(eta_boundary_integral(&t, &g, &kernel, &agg, 0, 2).unwrap().value, 0.0);
        assert!(eta_boundary_integral(&t, &g, &kernel, &agg, 0, 1).unwrap().value > 0.0);
    }

    #[test]
    fn eta_single_site_is_zero() {
        let g = geo(16, vec![Site::new(0, [0.5, 0.5], 1.0)], 0.1);
        let est = eta_sup_estimate(&g, &KernelSpec::new(-0.3, 2.0).unwrap(), 0.5, 4, 1).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(!est.certified);
    }

    #[test]
    fn one_sample_equals_standard_tessellation_max() {
        let sites = vec![Site::new(0, [0.3, 0.4], 1.0), Site::new(1, [0.7, 0.55], 1.0)];
        let g = geo(64, sites, 0.1);
        let kernel = KernelSpec::new(-0.3, 2.0).unwrap();
        let est = eta_sup_estimate(&g, &kernel, 0.5, 1, 9).unwrap();
        let t = assign_labels(&g.grid, &g.sites, &g.metric, &[0.0, 0.0]).unwrap();
        let agg = aggregate_amenities(&t, &g, &kernel);
        let e01 = eta_boundary_integral(&t, &g, &kernel, &agg, 0, 1).unwrap().value;
        let e10 = eta_boundary_integral(&t, &g, &kernel, &agg, 1, 0).unwrap().value;
        assert_eq!(est.value, e01.max(e10));
    }
}

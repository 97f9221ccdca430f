//! Exogenous geography: amenities, productivities, trade and commuting costs.

use crate::geometry::{
    sample_triangle_inequality, validate_sites, DistanceSystem, DomainGrid, GeometryError, Site,
};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("amenity at cell {cell} is {value}, must be positive and finite")]
    NonPositiveAmenity { cell: usize, value: f64 },
    #[error("amenity raster has {got} values, grid has {expected} cells")]
    RasterSize { expected: usize, got: usize },
    #[error("trade matrix must be square with one row per site ({n} sites, {got} entries)")]
    TradeShape { n: usize, got: usize },
    #[error("trade cost ({i}, {j}) = {value} is not finite")]
    NonFiniteTrade { i: usize, j: usize, value: f64 },
    #[error("trade cost parameter tau = {0} must be non-negative")]
    NegativeTau(f64),
    #[error("metric is asymmetric between sites {i} and {j}: trade costs would not be symmetric")]
    AsymmetricMetric { i: usize, j: usize },
    #[error("commuting decay delta = {0} must be positive")]
    NonPositiveDelta(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Residential amenity `b̄(x)` sampled at inside cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct AmenityField {
    log_samples: Vec<f64>,
    pub b_min: f64,
    pub b_max: f64,
    pub argmin: usize,
    pub argmax: usize,
}

impl AmenityField {
    /// `b̄` at `cell`; `NaN` outside the domain.
    pub fn value(&self, cell: usize) -> f64 {
        self.log_samples[cell].exp()
    }

    pub fn log_value(&self, cell: usize) -> f64 {
        self.log_samples[cell]
    }
}

pub fn amenity_from_function(
    grid: &DomainGrid,
    f: impl Fn([f64; 2]) -> f64,
) -> Result<AmenityField, FieldError> {
    let values: Vec<f64> = (0..grid.n_cells())
        .map(|c| if grid.is_inside(c) { f(grid.center(c)) } else { f64::NAN })
        .collect();
    amenity_from_raster(grid, &values)
}

/// Builds the field from one value per cell (row-major); values outside the
/// domain are ignored.
pub fn amenity_from_raster(grid: &DomainGrid, values: &[f64]) -> Result<AmenityField, FieldError> {
    if values.len() != grid.n_cells() {
        return Err(FieldError::RasterSize {
            expected: grid.n_cells(),
            got: values.len(),
        });
    }
    let mut log_samples = vec![f64::NAN; values.len()];
    let (mut b_min, mut b_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut argmin, mut argmax) = (0, 0);
    for (cell, &v) in values.iter().enumerate() {
        if !grid.is_inside(cell) {
            continue;
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(FieldError::NonPositiveAmenity { cell, value: v });
        }
        log_samples[cell] = v.ln();
        if v < b_min {
            b_min = v;
            argmin = cell;
        }
        if v > b_max {
            b_max = v;
            argmax = cell;
        }
    }
    Ok(AmenityField {
        log_samples,
        b_min,
        b_max,
        argmin,
        argmax,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TradeOrigin {
    FromMetric { tau: f64 },
    Explicit,
}

/// Iceberg trade costs between sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeCostMatrix {
    n: usize,
    values: Vec<f64>,
    pub origin: TradeOrigin,
}

impl TradeCostMatrix {
    /// Wraps a row-major `n × n` matrix. Assumption checks are left to
    /// [`validate_geography`].
    pub fn explicit(n: usize, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != n * n {
            return Err(FieldError::TradeShape {
                n,
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFiniteTrade {
                i: k / n,
                j: k % n,
                value: values[k],
            });
        }
        Ok(Self {
            n,
            values,
            origin: TradeOrigin::Explicit,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn max_in_row(&self, i: usize) -> f64 {
        self.values[i * self.n..(i + 1) * self.n]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn restrict(&self, subset: &[usize]) -> Self {
        let n = subset.len();
        let mut values = Vec::with_capacity(n * n);
        for &i in subset {
            for &j in subset {
                values.push(self.get(i, j));
            }
        }
        Self {
            n,
            values,
            origin: self.origin,
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n.max(1))
    }
}

/// `T_ij = exp(τ d_j(y_i))`.
pub fn trade_costs_from_metric(
    sites: &[Site],
    metric: &DistanceSystem,
    tau: f64,
) -> Result<TradeCostMatrix, FieldError> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(FieldError::NegativeTau(tau));
    }
    let n = sites.len();
    let mut values = vec![1.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dji = metric.distance(j, sites[j].position, sites[i].position);
            let dij = metric.distance(i, sites[i].position, sites[j].position);
            if (dji - dij).abs() > 1e-12 * dji.max(dij) {
                return Err(FieldError::AsymmetricMetric { i, j });
            }
            values[i * n + j] = (tau * dji).exp();
        }
    }
    Ok(TradeCostMatrix {
        n,
        values,
        origin: TradeOrigin::FromMetric { tau },
    })
}

/// `D(x, y_i) = exp(δ d_i(x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutingCost {
    pub delta: f64,
}

impl CommutingCost {
    pub fn new(delta: f64) -> Result<Self, FieldError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(FieldError::NonPositiveDelta(delta));
        }
        Ok(Self { delta })
    }

    pub fn cost(&self, distance: f64) -> f64 {
        (self.delta * distance).exp()
    }
}

/// Everything exogenous about the economy except the behavioral parameters.
#[derive(Debug, Clone)]
pub struct Geography {
    pub grid: Arc<DomainGrid>,
    pub sites: Vec<Site>,
    pub metric: DistanceSystem,
    pub amenity: Arc<AmenityField>,
    pub trade: TradeCostMatrix,
}

impl Geography {
    pub fn new(
        grid: Arc<DomainGrid>,
        sites: Vec<Site>,
        metric: DistanceSystem,
        amenity: Arc<AmenityField>,
        trade: TradeCostMatrix,
    ) -> Result<Self, FieldError> {
        validate_sites(&grid, &sites)?;
        if metric.len() != sites.len() {
            return Err(GeometryError::ScaleCount {
                expected: sites.len(),
                got: metric.len(),
            }
            .into());
        }
        if trade.len() != sites.len() {
            return Err(FieldError::TradeShape {
                n: sites.len(),
                got: trade.len() * trade.len(),
            });
        }
        Ok(Self {
            grid,
            sites,
            metric,
            amenity,
            trade,
        })
    }

    /// Convenience constructor with euclidean distances and metric trade costs.
    pub fn euclidean(
        grid: Arc<DomainGrid>,
        sites: Vec<Site>,
        amenity: Arc<AmenityField>,
        tau: f64,
    ) -> Result<Self, FieldError> {
        let metric = DistanceSystem::euclidean(sites.len());
        let trade = trade_costs_from_metric(&sites, &metric, tau)?;
        Self::new(grid, sites, metric, amenity, trade)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// `d_i(x)`.
    #[inline]
    pub fn distance(&self, i: usize, x: [f64; 2]) -> f64 {
        self.metric.distance(i, self.sites[i].position, x)
    }

    /// `d_i(y_j)`.
    pub fn site_distance(&self, i: usize, j: usize) -> f64 {
        self.distance(i, self.sites[j].position)
    }

    /// The geography seen by the subset `subset` of sites, in that order.
    pub fn restrict(&self, subset: &[usize]) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            sites: subset.iter().map(|&i| self.sites[i].clone()).collect(),
            metric: self.metric.restrict(subset),
            amenity: Arc::clone(&self.amenity),
            trade: self.trade.restrict(subset),
        }
    }
}

/// One assumption check with its witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeographyReport {
    pub checks: Vec<AssumptionCheck>,
}

impl GeographyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Diagnostic pass over the bounds, symmetry and triangle-inequality
/// assumptions. Never fails; failures are listed in the report.
pub fn validate_geography(geo: &Geography, n_triples: usize, seed: u64) -> GeographyReport {
    let mut checks = Vec::new();
    let amen = &geo.amenity;
    checks.push(AssumptionCheck {
        name: "amenity_bounds".into(),
        passed: amen.b_min > 0.0 && amen.b_max.is_finite(),
        detail: format!(
            "b_min = {} at cell {}, b_max = {} at cell {}",
            amen.b_min, amen.argmin, amen.b_max, amen.argmax
        ),
    });

    let (a_min, a_max) = geo.sites.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| {
        (lo.min(s.productivity), hi.max(s.productivity))
    });
    checks.push(AssumptionCheck {
        name: "productivity_bounds".into(),
        passed: a_min > 0.0 && a_max.is_finite(),
        detail: format!("A_min = {a_min}, A_max = {a_max}"),
    });

    let n = geo.n_sites();
    let t = &geo.trade;
    let mut asym = None;
    let mut diag = None;
    let mut below_one = None;
    for i in 0..n {
        if t.get(i, i) != 1.0 && diag.is_none() {
            diag = Some(i);
        }
        for j in 0..n {
            if t.get(i, j) < 1.0 && below_one.is_none() {
                below_one = Some((i, j));
            }
            if j > i && t.get(i, j) != t.get(j, i) && asym.is_none() {
                asym = Some((i, j));
            }
        }
    }
    checks.push(AssumptionCheck {
        name: "trade_symmetry".into(),
        passed: asym.is_none(),
        detail: match asym {
            Some((i, j)) => format!("T[{i}][{j}] = {} but T[{j}][{i}] = {}", t.get(i, j), t.get(j, i)),
            None => "symmetric".into(),
        },
    });
    checks.push(AssumptionCheck {
        name: "trade_diagonal".into(),
        passed: diag.is_none(),
        detail: match diag {
            Some(i) => format!("T[{i}][{i}] = {}", t.get(i, i)),
            None => "all ones".into(),
        },
    });
    checks.push(AssumptionCheck {
        name: "trade_lower_bound".into(),
        passed: below_one.is_none(),
        detail: match below_one {
            Some((i, j)) => format!("T[{i}][{j}] = {} < 1", t.get(i, j)),
            None => "all entries >= 1".into(),
        },
    });

    let mut worst_mult = None;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let excess = t.get(j, k) - t.get(i, j) * t.get(i, k);
                if excess > 1e-12 * t.get(j, k) && worst_mult.is_none() {
                    worst_mult = Some((i, j, k));
                }
            }
        }
    }
    checks.push(AssumptionCheck {
        name: "trade_multiplicative_triangle".into(),
        passed: worst_mult.is_none(),
        detail: match worst_mult {
            Some((i, j, k)) => format!("T[{j}][{k}] > T[{i}][{j}] * T[{i}][{k}]"),
            None => "T_jk <= T_ij T_ik for all triples".into(),
        },
    });

    let witness = sample_triangle_inequality(&geo.grid, &geo.sites, &geo.metric, n_triples, seed);
    checks.push(AssumptionCheck {
        name: "triangle_inequality".into(),
        passed: witness.is_none(),
        detail: match witness {
            Some(w) => format!(
                "d_{}(x) exceeds d_{}(y_{}) + d_{}(x) by {:.3e} at x = ({:.4}, {:.4})",
                w.i, w.i, w.j, w.j, w.excess, w.x[0], w.x[1]
            ),
            None => format!("no violation in {n_triples} sampled triples"),
        },
    });
    GeographyReport { checks }
}

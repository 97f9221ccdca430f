//! Equilibrium weights, welfare and the allocation of labor.
//!
//! Weights are iterated in transformed units `λ̃ = s γ1 λ`, where the weight
//! system reads `λ̃ = g(λ̃)` with
//! `g_i(λ̃) = log Σ_j K_ij B_i^{σ̃φ1} B_j^{σ̃φ2} e^{(γ2/γ1) λ̃_j}`.
//!
//! Two normalizations are reported. `weights`/`welfare` absorb the factor
//! `C_V·V^ν` into the weights; in these units doubling the population scales
//! `welfare` by `2^β`. `real_wage_weights`/`welfare_level` undo the
//! absorption: they satisfy `λ_i = log(w_i/P_i)/δ` and `V = B_i (w_i/P_i)
//! L_i^β` with the gravity-block prices. Labor masses are identical in both.

mod global;
mod market;
mod params;

pub use global::knife_edge_global_solve;
pub use market::{market_equilibrium_solve, market_residual, MarketEquilibrium, Numeraire};
pub use params::{
    composite_params, scalar_composites, variant_transform, CompositeParams, ModelParams, Variant,
    VariantSystem,
};

use crate::fields::{FieldError, Geography};
use crate::geometry::{assign_labels, radial_shrink_factor, GeometryError, Tessellation};
use crate::integrals::{aggregate_amenities, log_cell_integrals, CellAggregates, IntegralError};
use crate::{log_sum_exp, LogAccumulator};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("gamma1 = 0: the weight system is degenerate")]
    DegenerateGamma1,
    #[error("gamma2/gamma1 = {ratio} is too close to 1 to recover the weight level")]
    DegenerateConstantRecovery { ratio: f64 },
    #[error("site {site} has an empty commuting area")]
    EmptyCellInSum { site: usize },
    #[error("no convergence after {iterations} iterations (last step {step:.3e})")]
    NotConverged {
        iterations: usize,
        step: f64,
        last_weights: Vec<f64>,
    },
    #[error("iterates left the feasible weight set twice (iteration {iterations}, site {site} emptied)")]
    LeftFeasibleSet { iterations: usize, site: usize },
    #[error("market block did not converge after {iterations} iterations")]
    MarketNotConverged { iterations: usize },
    #[error("site {site} has no labor")]
    ZeroLabor { site: usize },
    #[error("alpha = {alpha} is not the knife edge 1/(sigma-1) = {cutoff}")]
    NotKnifeEdge { alpha: f64, cutoff: f64 },
    #[error("invalid urban system: {0}")]
    BadSubset(String),
    #[error("{0} is not available for this variant")]
    UnsupportedVariant(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Integral(#[from] IntegralError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Weight on the new iterate, `ϑ`.
    pub damping: f64,
    /// Sup-norm tolerance on `ĝ(λ̂) − λ̂` in transformed units.
    pub tol: f64,
    pub max_iter: usize,
    /// Shrink factor of the set the iterate is projected back into.
    pub k_shrink: f64,
    /// Position (within the urban system) of the normalizing site.
    pub anchor: usize,
    /// Starting weights in original units; standard Voronoi when absent.
    pub initial_weights: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-10,
            max_iter: 5000,
            k_shrink: 0.5,
            anchor: 0,
            initial_weights: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Sup-norm log residual of the weight system, recomputed at the result.
    pub lambda_eq: f64,
    /// Largest relative residual of the gravity block.
    pub market: f64,
    /// `max V_i / min V_i − 1` over active sites.
    pub welfare_spread: f64,
    /// `|Σ population − L| / L`.
    pub population_slack: f64,
    /// Spread of `log(price ratio)/rate − λ_i` over active sites.
    pub real_wage_spread: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    /// Original ids of the sites in the solution, in order.
    pub site_ids: Vec<usize>,
    pub active: Vec<bool>,
    /// `Ā_i` of the sites, carried along for potential weights.
    pub productivity: Vec<f64>,
    pub anchor: usize,
    /// Weights with the welfare factor absorbed.
    pub weights: Vec<f64>,
    /// Welfare in the absorbed normalization.
    pub welfare: f64,
    /// Offset between the two normalizations: `real = weights + offset`.
    pub weight_offset: f64,
    pub real_wage_weights: Vec<f64>,
    pub welfare_level: f64,
    pub labor: Vec<f64>,
    /// Farm population attached to each business district (two-sector).
    pub farmers: Option<Vec<f64>>,
    pub wages: Vec<f64>,
    pub prices: Vec<f64>,
    /// Agricultural prices (two-sector).
    pub agri_prices: Option<Vec<f64>>,
    /// `B_i`; zero for inactive sites.
    pub amenity: Vec<f64>,
    /// `log I_i`; `None` for inactive sites.
    pub log_integrals: Vec<Option<f64>>,
    pub measures: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
    pub converged: bool,
    pub exited_feasible: bool,
    #[serde(skip)]
    pub tessellation: Tessellation,
}

impl EquilibriumSolution {
    /// `λ_i − λ_anchor`.
    pub fn weight_differences(&self) -> Vec<f64> {
        let a = self.weights[self.anchor];
        self.weights.iter().map(|w| w - a).collect()
    }

    pub fn active_sites(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&i| self.active[i]).collect()
    }

    pub fn shares(&self) -> Vec<f64> {
        let total: f64 = self.labor.iter().sum();
        self.labor.iter().map(|l| l / total).collect()
    }
}

pub(crate) struct Evaluation {
    pub tess: Tessellation,
    pub agg: CellAggregates,
    pub g: Vec<f64>,
}

/// Evaluates `g` at transformed weights. With `allow_empty`, empty cells
/// drop out of the sums (the all-site system); otherwise an empty cell is
/// an error.
pub(crate) fn evaluate(
    geo: &Geography,
    comp: &CompositeParams,
    lambda_tilde: &[f64],
    allow_empty: bool,
) -> Result<Evaluation, SolveError> {
    let f = comp.tilde_factor();
    let weights: Vec<f64> = lambda_tilde.iter().map(|l| l / f).collect();
    let tess = assign_labels(&geo.grid, &geo.sites, &geo.metric, &weights)?;
    let agg = aggregate_amenities(&tess, geo, &comp.system.kernel);
    if !allow_empty {
        if let Some(site) = agg.empty_sites().first() {
            return Err(SolveError::EmptyCellInSum { site: *site });
        }
    }
    let g = g_from_aggregates(comp, &agg, lambda_tilde);
    Ok(Evaluation { tess, agg, g })
}

fn g_from_aggregates(comp: &CompositeParams, agg: &CellAggregates, lambda_tilde: &[f64]) -> Vec<f64> {
    let n = lambda_tilde.len();
    let ratio = comp.gamma_ratio();
    let (a1, a2) = (comp.sigma_tilde * comp.phi1, comp.sigma_tilde * comp.phi2);
    (0..n)
        .map(|i| {
            // With φ1 = 0 an empty own cell does not enter the row.
            let own = match agg.log_b(i) {
                Some(lb) => a1 * lb,
                None if a1 == 0.0 => 0.0,
                None => return f64::NAN,
            };
            let mut acc = LogAccumulator::default();
            for j in 0..n {
                if let Some(lb) = agg.log_b(j) {
                    acc.add(comp.log_k(i, j) + own + a2 * lb + ratio * lambda_tilde[j]);
                }
            }
            acc.value()
        })
        .collect()
}

/// The map `g` at transformed weights `λ̃` for the sites of `geo`.
pub fn g_map(lambda_tilde: &[f64], comp: &CompositeParams, geo: &Geography) -> Result<Vec<f64>, SolveError> {
    Ok(evaluate(geo, comp, lambda_tilde, false)?.g)
}

fn check_subset(geo: &Geography, y_star: &[usize]) -> Result<(), SolveError> {
    if y_star.is_empty() {
        return Err(SolveError::BadSubset("empty urban system".into()));
    }
    for (a, &i) in y_star.iter().enumerate() {
        if i >= geo.n_sites() {
            return Err(SolveError::BadSubset(format!("site {i} does not exist")));
        }
        if y_star[..a].contains(&i) {
            return Err(SolveError::BadSubset(format!("site {i} listed twice")));
        }
    }
    Ok(())
}

/// Solves the weight system for the urban system `y_star` (indices into
/// `geo.sites`) by damped iteration of the anchored map
/// `ĝ(λ̂) = g(λ̂) − g_{i0}(λ̂)`.
pub fn fixed_point_solve(
    geo: &Geography,
    params: &ModelParams,
    y_star: &[usize],
    opts: &SolverOptions,
) -> Result<EquilibriumSolution, SolveError> {
    check_subset(geo, y_star)?;
    let sub = geo.restrict(y_star);
    let comp = composite_params(params, &sub.sites, &sub.trade)?;
    let run = iterate(&sub, &comp, opts, false)?;
    let mut sol = recover(&sub, params, &comp, &run.lambda_tilde, false)?;
    sol.site_ids = y_star.iter().map(|&i| geo.sites[i].id).collect();
    sol.anchor = opts.anchor;
    sol.iterations = run.iterations;
    sol.converged = true;
    sol.exited_feasible = run.exited;
    Ok(sol)
}

pub(crate) struct IterationRun {
    pub lambda_tilde: Vec<f64>,
    pub iterations: usize,
    pub exited: bool,
}

/// Damped anchored iteration followed by recovery of the level constant.
/// With `allow_empty` cells may vanish and no feasibility exit applies.
pub(crate) fn iterate(
    geo: &Geography,
    comp: &CompositeParams,
    opts: &SolverOptions,
    allow_empty: bool,
) -> Result<IterationRun, SolveError> {
    let n = geo.n_sites();
    let i0 = opts.anchor;
    if i0 >= n {
        return Err(SolveError::BadSubset(format!("anchor {i0} outside the urban system")));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(SolveError::InvalidParams(format!("damping {} outside (0, 1]", opts.damping)));
    }
    let ratio = comp.gamma_ratio();
    if (1.0 - ratio).abs() < 1e-10 {
        return Err(SolveError::DegenerateConstantRecovery { ratio });
    }
    let f = comp.tilde_factor();

    let mut hat: Vec<f64> = match &opts.initial_weights {
        Some(w) if w.len() == n => w.iter().map(|x| f * (x - w[i0])).collect(),
        Some(w) => {
            return Err(SolveError::BadSubset(format!(
                "initial weights have {} entries for {n} sites",
                w.len()
            )))
        }
        None => vec![0.0; n],
    };
    let mut exited = false;
    let mut eval = match evaluate(geo, comp, &hat, allow_empty) {
        Ok(e) => e,
        Err(SolveError::EmptyCellInSum { .. }) => {
            exited = true;
            hat = reproject(geo, &hat, f, opts.k_shrink);
            evaluate(geo, comp, &hat, allow_empty)?
        }
        Err(e) => return Err(e),
    };

    let mut iterations = 0;
    loop {
        let g0 = eval.g[i0];
        if !g0.is_finite() {
            return Err(SolveError::EmptyCellInSum { site: i0 });
        }
        let ghat: Vec<f64> = eval.g.iter().map(|g| g - g0).collect();
        let step = hat
            .iter()
            .zip(&ghat)
            .map(|(h, g)| (g - h).abs())
            .fold(0.0, f64::max);
        if step < opts.tol {
            break;
        }
        if iterations >= opts.max_iter || !step.is_finite() {
            return Err(SolveError::NotConverged {
                iterations,
                step,
                last_weights: hat.iter().map(|h| h / f).collect(),
            });
        }
        iterations += 1;
        let next: Vec<f64> = hat
            .iter()
            .zip(&ghat)
            .map(|(h, g)| (1.0 - opts.damping) * h + opts.damping * g)
            .collect();
        match evaluate(geo, comp, &next, allow_empty) {
            Ok(e) => {
                hat = next;
                eval = e;
            }
            Err(SolveError::EmptyCellInSum { site }) => {
                if exited {
                    return Err(SolveError::LeftFeasibleSet { iterations, site });
                }
                exited = true;
                hat = reproject(geo, &next, f, opts.k_shrink);
                eval = evaluate(geo, comp, &hat, allow_empty)?;
            }
            Err(e) => return Err(e),
        }
    }
    let c = eval.g[i0] / (1.0 - ratio);
    Ok(IterationRun {
        lambda_tilde: hat.iter().map(|h| h + c).collect(),
        iterations,
        exited,
    })
}

// Radial shrink of the original-unit weights about the anchor into Λ^k.
fn reproject(geo: &Geography, hat: &[f64], f: f64, k: f64) -> Vec<f64> {
    let weights: Vec<f64> = hat.iter().map(|h| h / f).collect();
    let t = radial_shrink_factor(&geo.sites, &geo.metric, &weights, k);
    hat.iter().map(|h| h * t).collect()
}

/// Recovers welfare, labor, prices and diagnostics at converged transformed
/// weights. `allow_empty` admits inactive sites (the all-site system).
pub(crate) fn recover(
    geo: &Geography,
    params: &ModelParams,
    comp: &CompositeParams,
    lambda_tilde: &[f64],
    allow_empty: bool,
) -> Result<EquilibriumSolution, SolveError> {
    let sys = &comp.system;
    let n = geo.n_sites();
    let f = comp.tilde_factor();
    let eval = evaluate(geo, comp, lambda_tilde, allow_empty)?;
    let lambda_eq = (0..n)
        .filter(|&i| eval.g[i].is_finite())
        .map(|i| (lambda_tilde[i] - eval.g[i]).abs())
        .fold(0.0, f64::max);
    let weights: Vec<f64> = lambda_tilde.iter().map(|l| l / f).collect();
    let active: Vec<bool> = (0..n).map(|i| !eval.agg.is_empty(i)).collect();
    let log_i = &eval.agg.log_integral;
    let be = sys.beta_eff;
    let omega = sys.weight_rate;

    // Farm labor per unit of manufacturing labor (two-sector).
    let farm_ratio: Option<Vec<f64>> = match (sys.farm_rate, params.variant) {
        (Some(rate), Variant::TwoSector { mu, .. }) => {
            let m = (1.0 - mu) / mu;
            let log_j = log_cell_integrals(&eval.tess, geo, &sys.kernel, rate);
            Some(
                (0..n)
                    .map(|i| if active[i] { m * (log_j[i] - log_i[i]).exp() } else { 0.0 })
                    .collect(),
            )
        }
        _ => None,
    };
    let log_q = log_sum_exp((0..n).filter(|&i| active[i]).map(|i| {
        let rho = farm_ratio.as_ref().map_or(0.0, |fr| fr[i].ln_1p());
        rho + log_i[i] - omega * weights[i] / be
    }));
    let log_v = be * (params.population.ln() - sys.log_labor_const - log_q);
    let labor: Vec<f64> = (0..n)
        .map(|i| {
            if active[i] {
                (sys.log_labor_const + log_v / be + log_i[i] - omega * weights[i] / be).exp()
            } else {
                0.0
            }
        })
        .collect();
    let farmers = farm_ratio
        .as_ref()
        .map(|fr| (0..n).map(|i| fr[i] * labor[i]).collect::<Vec<f64>>());
    let total: f64 = labor.iter().sum::<f64>() + farmers.as_ref().map_or(0.0, |f| f.iter().sum());
    let population_slack = (total - params.population).abs() / params.population;

    // Undo the absorption of C_V·V^ν into the weights.
    let nu = sys.welfare_exponent;
    let denom = comp.weight_scale * (comp.gamma1 - comp.gamma2) - nu * omega;
    let offset = (sys.log_welfare_const + nu * log_v) / denom;
    let real_wage_weights: Vec<f64> = weights.iter().map(|w| w + offset).collect();
    let log_v_level = log_v + omega * offset;

    // Gravity block on the active sites.
    let act: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
    let act_geo = geo.restrict(&act);
    let act_labor: Vec<f64> = act.iter().map(|&i| labor[i]).collect();
    let market = market_equilibrium_solve(&act_labor, &act_geo, params, Numeraire::default())?;
    let mut wages = vec![0.0; n];
    let mut prices = vec![0.0; n];
    for (a, &i) in act.iter().enumerate() {
        wages[i] = market.wages[a];
        prices[i] = market.prices[a];
    }
    let amenity: Vec<f64> = (0..n).map(|i| eval.agg.b(i).unwrap_or(0.0)).collect();

    let (agri_prices, welfare_i, id_weights) = match params.variant {
        Variant::TwoSector { mu, beta_tilde } => {
            let m = (1.0 - mu) / mu;
            let pa: Vec<f64> = (0..n)
                .map(|i| {
                    if active[i] {
                        m.powf(-beta_tilde) * labor[i].powf(-beta_tilde) * wages[i] / amenity[i]
                    } else {
                        0.0
                    }
                })
                .collect();
            let vi: Vec<f64> = act
                .iter()
                .map(|&i| (wages[i] / prices[i]).powf(mu) * (wages[i] / pa[i]).powf(1.0 - mu))
                .collect();
            let idw: Vec<f64> = act
                .iter()
                .map(|&i| (pa[i] / prices[i]).ln() / sys.price_rate)
                .collect();
            (Some(pa), vi, idw)
        }
        _ => {
            let vi: Vec<f64> = act
                .iter()
                .map(|&i| amenity[i] * wages[i] / prices[i] * labor[i].powf(params.beta))
                .collect();
            let idw: Vec<f64> = act
                .iter()
                .map(|&i| (wages[i] / prices[i]).ln() / sys.price_rate)
                .collect();
            (None, vi, idw)
        }
    };
    let vmax = welfare_i.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let vmin = welfare_i.iter().cloned().fold(f64::INFINITY, f64::min);
    let gaps: Vec<f64> = act
        .iter()
        .zip(&id_weights)
        .map(|(&i, w)| w - weights[i])
        .collect();
    let gmax = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let gmin = gaps.iter().cloned().fold(f64::INFINITY, f64::min);

    Ok(EquilibriumSolution {
        site_ids: geo.sites.iter().map(|s| s.id).collect(),
        active: active.clone(),
        productivity: geo.sites.iter().map(|s| s.productivity).collect(),
        anchor: 0,
        weights,
        welfare: log_v.exp(),
        weight_offset: offset,
        real_wage_weights,
        welfare_level: log_v_level.exp(),
        labor,
        farmers,
        wages,
        prices,
        agri_prices,
        amenity,
        log_integrals: (0..n).map(|i| active[i].then_some(log_i[i])).collect(),
        measures: eval.tess.cell_measure.clone(),
        residuals: Residuals {
            lambda_eq,
            market: market.residual,
            welfare_spread: vmax / vmin - 1.0,
            population_slack,
            real_wage_spread: gmax - gmin,
        },
        iterations: 0,
        converged: false,
        exited_feasible: false,
        tessellation: eval.tess,
    })
}

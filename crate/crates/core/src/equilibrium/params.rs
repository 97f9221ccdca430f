//! Model parameters, variant transforms and composite constants.

use super::SolveError;
use crate::geometry::Site;
use crate::fields::TradeCostMatrix;
use crate::integrals::KernelSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Variant {
    Baseline,
    /// Residents consume at home and import through their business district.
    HomeConsumption,
    /// Cobb-Douglas agriculture with expenditure share `1 − mu` and
    /// decreasing returns `beta_tilde < 0` to farm labor.
    TwoSector { mu: f64, beta_tilde: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub tau: f64,
    pub population: f64,
    pub variant: Variant,
}

impl ModelParams {
    pub fn baseline(sigma: f64, alpha: f64, beta: f64, delta: f64, tau: f64) -> Self {
        Self {
            sigma,
            alpha,
            beta,
            delta,
            tau,
            population: 1.0,
            variant: Variant::Baseline,
        }
    }

    pub fn with_population(mut self, population: f64) -> Self {
        self.population = population;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    /// `1/(σ − 1)`, the spillover strength separating the regimes.
    pub fn alpha_cutoff(&self) -> f64 {
        1.0 / (self.sigma - 1.0)
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: String| Err(SolveError::InvalidParams(msg));
        let finite = [self.sigma, self.alpha, self.beta, self.delta, self.tau, self.population];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if !(self.sigma > 1.0) {
            return bad(format!("sigma = {} must exceed 1", self.sigma));
        }
        if !(self.alpha > -1.0) {
            return bad(format!("alpha = {} must exceed -1", self.alpha));
        }
        if !(self.delta > 0.0) {
            return bad(format!("delta = {} must be positive", self.delta));
        }
        if !(self.tau >= 0.0) {
            return bad(format!("tau = {} must be non-negative", self.tau));
        }
        if !(self.population > 0.0) {
            return bad(format!("population = {} must be positive", self.population));
        }
        match self.variant {
            Variant::Baseline | Variant::HomeConsumption => {
                if !(self.beta < 0.0) {
                    return bad(format!("beta = {} must be negative", self.beta));
                }
            }
            Variant::TwoSector { mu, beta_tilde } => {
                if !(mu > 0.0 && mu < 1.0) {
                    return bad(format!("mu = {mu} must lie in (0, 1)"));
                }
                if !(beta_tilde < 0.0) {
                    return bad(format!("beta_tilde = {beta_tilde} must be negative"));
                }
            }
        }
        Ok(())
    }
}

/// The constants a variant feeds into the common fixed-point machinery.
///
/// Every variant reduces to `L_i = C_L·V^{1/β_e}·I_i·e^{−ω λ_i/β_e}` and
/// `e^{s γ1 λ_i} = C_V·V^ν·Σ_j K_ij B_i^{σ̃φ1} B_j^{σ̃φ2} e^{s γ2 λ_j}` with
/// `s = −(ω/β_e)σ̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantSystem {
    pub kernel: KernelSpec,
    /// Congestion entering the outer power of `B_i` and the `φ`s.
    pub beta_eff: f64,
    /// Congestion entering `γ1` and `γ2`.
    pub congestion: f64,
    /// `ω`: coefficient of `λ_i` in the labor equation.
    pub weight_rate: f64,
    /// Coefficient linking weights to prices: `λ_i = log(price ratio)/rate`.
    pub price_rate: f64,
    /// `ν`: exponent of `V` in the weight system.
    pub welfare_exponent: f64,
    pub log_welfare_const: f64,
    pub log_labor_const: f64,
    /// Extra distance rate of the farm-labor integral (two-sector only).
    pub farm_rate: Option<f64>,
}

pub fn variant_transform(p: &ModelParams) -> Result<VariantSystem, SolveError> {
    p.validate()?;
    let sys = match p.variant {
        Variant::Baseline => VariantSystem {
            kernel: KernelSpec::new(p.beta, p.delta)?,
            beta_eff: p.beta,
            congestion: p.beta,
            weight_rate: p.delta,
            price_rate: p.delta,
            welfare_exponent: (p.sigma - 1.0) * p.alpha / p.beta,
            log_welfare_const: 0.0,
            log_labor_const: 0.0,
            farm_rate: None,
        },
        Variant::HomeConsumption => {
            let rate = p.delta + p.tau;
            VariantSystem {
                kernel: KernelSpec::new(p.beta, rate)?,
                beta_eff: p.beta,
                congestion: p.beta,
                weight_rate: rate,
                price_rate: rate,
                welfare_exponent: (p.sigma - 1.0) * p.alpha / p.beta,
                log_welfare_const: 0.0,
                log_labor_const: 0.0,
                farm_rate: None,
            }
        }
        Variant::TwoSector { mu, beta_tilde } => {
            let m = (1.0 - mu) / mu;
            VariantSystem {
                kernel: KernelSpec::new(beta_tilde, p.delta * (mu - beta_tilde * (1.0 - mu)))?,
                beta_eff: beta_tilde,
                congestion: m * beta_tilde,
                weight_rate: p.delta * mu,
                price_rate: p.delta,
                welfare_exponent: (p.sigma - 1.0) * (p.alpha - beta_tilde) / beta_tilde,
                log_welfare_const: -(p.sigma - 1.0) * p.alpha * m.ln(),
                log_labor_const: -m.ln(),
                farm_rate: Some(p.delta * (1.0 - mu)),
            }
        }
    };
    Ok(sys)
}

/// Composite parameters and the log kernel matrix `log K_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub sigma_tilde: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// `s = −(ω/β_e)σ̃`; transformed weights are `λ̃ = s γ1 λ`.
    pub weight_scale: f64,
    pub n: usize,
    log_k: Vec<f64>,
    pub system: VariantSystem,
}

impl CompositeParams {
    pub fn gamma_ratio(&self) -> f64 {
        self.gamma2 / self.gamma1
    }

    #[inline]
    pub fn log_k(&self, i: usize, j: usize) -> f64 {
        self.log_k[i * self.n + j]
    }

    /// `s γ1`, the map from original to transformed weights.
    pub fn tilde_factor(&self) -> f64 {
        self.weight_scale * self.gamma1
    }
}

/// Scalar composite parameters without a kernel matrix.
pub fn scalar_composites(p: &ModelParams) -> Result<CompositeParams, SolveError> {
    composite_params(p, &[], &TradeCostMatrix::explicit(0, Vec::new())?)
}

pub fn composite_params(
    p: &ModelParams,
    sites: &[Site],
    trade: &TradeCostMatrix,
) -> Result<CompositeParams, SolveError> {
    let system = variant_transform(p)?;
    let s = p.sigma;
    let gamma1 = 1.0 - (s - 1.0) * p.alpha - s * system.congestion;
    let gamma2 = 1.0 + s * p.alpha + (s - 1.0) * system.congestion;
    if gamma1.abs() < 1e-14 {
        return Err(SolveError::DegenerateGamma1);
    }
    let sigma_tilde = (s - 1.0) / (2.0 * s - 1.0);
    let phi1 = (1.0 - (s - 1.0) * p.alpha) / system.beta_eff;
    let phi2 = -(1.0 + s * p.alpha) / system.beta_eff;
    let weight_scale = -(system.weight_rate / system.beta_eff) * sigma_tilde;
    let n = sites.len();
    let mut log_k = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            log_k.push(
                (1.0 - s) * trade.get(i, j).ln()
                    + sigma_tilde * (s - 1.0) * sites[i].productivity.ln()
                    + sigma_tilde * s * sites[j].productivity.ln(),
            );
        }
    }
    Ok(CompositeParams {
        gamma1,
        gamma2,
        sigma_tilde,
        phi1,
        phi2,
        weight_scale,
        n,
        log_k,
        system,
    })
}

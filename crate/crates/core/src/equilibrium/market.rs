//! Gravity block: wages and price indices for given labor masses.

use super::{ModelParams, SolveError};
use crate::fields::Geography;
use crate::log_sum_exp;
use serde::{Deserialize, Serialize};

/// Scale normalization of the homogeneous market system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Numeraire {
    /// `Σ w_i L_i` equals the given value.
    TotalIncome(f64),
    /// `w_i = 1` at the given site.
    Wage(usize),
}

impl Default for Numeraire {
    fn default() -> Self {
        Numeraire::TotalIncome(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketEquilibrium {
    pub wages: Vec<f64>,
    pub prices: Vec<f64>,
    /// Largest relative residual over both blocks.
    pub residual: f64,
    pub iterations: usize,
}

const MARKET_TOL: f64 = 1e-12;
const MARKET_MAX_ITER: usize = 200_000;

/// Solves
/// `w_i^σ L_i = Σ_j T_ij^{1−σ} A_i^{σ−1} P_j^{σ−1} w_j L_j` and
/// `P_i^{1−σ} = Σ_j T_ji^{1−σ} A_j^{σ−1} w_j^{1−σ}` with `A_i = Ā_i L_i^α`.
///
/// Iterates the wage update in logs with `P` recomputed exactly from `w`;
/// the update is monotone and homogeneous of degree one, so it converges in
/// the projective sense and the numeraire fixes the scale at each step.
pub fn market_equilibrium_solve(
    labor: &[f64],
    geo: &Geography,
    params: &ModelParams,
    numeraire: Numeraire,
) -> Result<MarketEquilibrium, SolveError> {
    let n = geo.n_sites();
    if labor.len() != n {
        return Err(SolveError::InvalidParams(format!(
            "labor vector has {} entries for {n} sites",
            labor.len()
        )));
    }
    if let Some(i) = labor.iter().position(|l| !(*l > 0.0)) {
        return Err(SolveError::ZeroLabor { site: i });
    }
    let s = params.sigma;
    let log_l: Vec<f64> = labor.iter().map(|l| l.ln()).collect();
    let log_a: Vec<f64> = (0..n)
        .map(|i| geo.sites[i].productivity.ln() + params.alpha * log_l[i])
        .collect();
    let log_t: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| geo.trade.get(i, j).ln()).collect())
        .collect();

    let prices_of = |lw: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                log_sum_exp((0..n).map(|j| {
                    (1.0 - s) * log_t[j][i] + (s - 1.0) * log_a[j] + (1.0 - s) * lw[j]
                })) / (1.0 - s)
            })
            .collect()
    };
    // log of the right-hand side of the wage block, divided by L_i.
    let wage_rhs = |lw: &[f64], lp: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                (s - 1.0) * log_a[i] - log_l[i]
                    + log_sum_exp(
                        (0..n).map(|j| (1.0 - s) * log_t[i][j] + (s - 1.0) * lp[j] + lw[j] + log_l[j]),
                    )
            })
            .collect()
    };
    let normalize = |lw: &mut [f64]| {
        let shift = match numeraire {
            Numeraire::TotalIncome(total) => {
                log_sum_exp(lw.iter().zip(&log_l).map(|(w, l)| w + l)) - total.ln()
            }
            Numeraire::Wage(k) => lw[k],
        };
        lw.iter_mut().for_each(|w| *w -= shift);
    };

    let mut lw = vec![0.0; n];
    normalize(&mut lw);
    for iter in 0..MARKET_MAX_ITER {
        let lp = prices_of(&lw);
        let rhs = wage_rhs(&lw, &lp);
        let residual = (0..n)
            .map(|i| (s * lw[i] - rhs[i]).exp_m1().abs())
            .fold(0.0, f64::max);
        if residual < MARKET_TOL {
            return Ok(MarketEquilibrium {
                wages: lw.iter().map(|w| w.exp()).collect(),
                prices: lp.iter().map(|p| p.exp()).collect(),
                residual,
                iterations: iter,
            });
        }
        lw = rhs.iter().map(|r| r / s).collect();
        normalize(&mut lw);
    }
    Err(SolveError::MarketNotConverged {
        iterations: MARKET_MAX_ITER,
    })
}

/// Relative residuals of both market blocks at `(w, P)`.
pub fn market_residual(
    labor: &[f64],
    geo: &Geography,
    params: &ModelParams,
    wages: &[f64],
    prices: &[f64],
) -> f64 {
    let n = geo.n_sites();
    let s = params.sigma;
    let a: Vec<f64> = (0..n)
        .map(|i| geo.sites[i].productivity * labor[i].powf(params.alpha))
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let lhs = wages[i].powf(s) * labor[i];
        let rhs: f64 = (0..n)
            .map(|j| {
                geo.trade.get(i, j).powf(1.0 - s) * a[i].powf(s - 1.0) * prices[j].powf(s - 1.0)
                    * wages[j]
                    * labor[j]
            })
            .sum();
        worst = worst.max((lhs / rhs - 1.0).abs());
        let lhs = prices[i].powf(1.0 - s);
        let rhs: f64 = (0..n)
            .map(|j| geo.trade.get(j, i).powf(1.0 - s) * a[j].powf(s - 1.0) * wages[j].powf(1.0 - s))
            .sum();
        worst = worst.max((lhs / rhs - 1.0).abs());
    }
    worst
}

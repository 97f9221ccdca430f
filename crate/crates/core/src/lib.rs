//! Spatial urban-system equilibria on additively weighted Voronoi tessellations.
//!
//! A bounded planar domain is rasterized, residents are assigned to business
//! districts by an additively weighted Voronoi rule, and the equilibrium
//! weights are found as the fixed point of a log-sum map over cell
//! aggregates. The crate also evaluates the sufficient conditions for
//! existence and uniqueness, classifies parameter regimes, and checks whether
//! an equilibrium survives deviations to vacant sites.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod equilibrium;
pub mod fields;
pub mod geometry;
pub mod integrals;
pub mod render;
pub mod sustainability;

pub use analysis::{RegimeReport, UniquenessCheck};
pub use equilibrium::{
    composite_params, fixed_point_solve, market_equilibrium_solve, knife_edge_global_solve,
    variant_transform, CompositeParams, EquilibriumSolution, ModelParams, SolveError,
    SolverOptions, Variant,
};
pub use fields::{AmenityField, Geography, TradeCostMatrix};
pub use geometry::{assign_labels, build_grid, DistanceSystem, DomainGrid, Site, Tessellation};
pub use integrals::{aggregate_amenities, CellAggregates, KernelSpec};

/// Runs `f` for every index in `0..n`, in parallel when the `parallel`
/// feature is on. Output order always matches index order, so reductions
/// over the result are independent of the thread count.
#[cfg(feature = "parallel")]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Numerically stable `log(sum(exp(x)))`; returns `-inf` for an empty or
/// all-`-inf` input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogAccumulator::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Streaming log-sum-exp with a running shift.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogAccumulator {
    shift: f64,
    sum: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogAccumulator {
    pub(crate) fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.shift {
            self.sum = self.sum * (self.shift - x).exp() + 1.0;
            self.shift = x;
        } else {
            self.sum += (x - self.shift).exp();
        }
    }

    pub(crate) fn merge(&mut self, other: LogAccumulator) {
        if other.shift == f64::NEG_INFINITY {
            return;
        }
        if other.shift > self.shift {
            self.sum = self.sum * (self.shift - other.shift).exp() + other.sum;
            self.shift = other.shift;
        } else {
            self.sum += other.sum * (other.shift - self.shift).exp();
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.shift == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.shift + self.sum.ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let xs = [0.1, -2.0, 3.5, 1.25];
        let direct: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(xs) - direct).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_of_nothing_is_neg_inf() {
        assert_eq!(log_sum_exp([]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn merge_agrees_with_sequential_adds() {
        let xs = [700.0, 701.5, -3.0, 699.0];
        let mut a = LogAccumulator::default();
        a.add(xs[0]);
        a.add(xs[1]);
        let mut b = LogAccumulator::default();
        b.add(xs[2]);
        b.add(xs[3]);
        a.merge(b);
        assert!((a.value() - log_sum_exp(xs)).abs() < 1e-12);
    }
}

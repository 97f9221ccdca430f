//! The all-site system at the knife edge `α = 1/(σ−1)`.
//!
//! There `φ1 = 0`, so a site's own aggregate drops out of its row and the
//! map stays defined when cells vanish. Solving over every candidate site
//! at once selects the urban system: sites whose cells end up empty are
//! inactive.

use super::{composite_params, iterate, recover, EquilibriumSolution, ModelParams, SolveError, SolverOptions};
use crate::fields::Geography;

const KNIFE_EDGE_TOL: f64 = 1e-12;

pub fn knife_edge_global_solve(
    geo: &Geography,
    params: &ModelParams,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution, SolveError> {
    params.validate()?;
    let cutoff = params.alpha_cutoff();
    if (params.alpha - cutoff).abs() > KNIFE_EDGE_TOL {
        return Err(SolveError::NotKnifeEdge {
            alpha: params.alpha,
            cutoff,
        });
    }
    let comp = composite_params(params, &geo.sites, &geo.trade)?;
    let run = iterate(geo, &comp, opts, true)?;
    let mut sol = recover(geo, params, &comp, &run.lambda_tilde, true)?;
    sol.anchor = opts.anchor;
    sol.iterations = run.iterations;
    sol.converged = true;
    sol.exited_feasible = run.exited;
    Ok(sol)
}

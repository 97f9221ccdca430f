//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urbsys::analysis::{
    multistart_uniqueness_probe, parameter_sweep, regime_classify, uniqueness_condition,
    ExistenceOptions, LocationMultiplicity, ProbeVerdict, SweepSpec,
};
use urbsys::equilibrium::{
    composite_params, fixed_point_solve, scalar_composites, EquilibriumSolution, ModelParams,
    SolverOptions, Variant,
};
use urbsys::fields::{amenity_from_function, Geography};
use urbsys::geometry::{assign_labels, build_grid, DistanceSystem, Site, VACUUM};
use urbsys::integrals::{
    aggregate_amenities, disk_kernel_oracle, eta_boundary_integral, eta_sup_estimate, KernelSpec,
};
use urbsys::log_sum_exp;
use urbsys::sustainability::{
    enumerate_urban_systems, potential_weight_at, spatial_equilibrium_check, PotentialWeight,
    SubsetSpec, Verdict,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type TwoSiteCase = (&'static [([f64; 2], f64)], [f64; 2], fn([f64; 2]) -> f64, f64);

// `!(x < tol)` so that NaN fails.
macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn square_geo(n: usize, sites: &[([f64; 2], f64)], tau: f64, amenity: fn([f64; 2]) -> f64) -> Geography {
    let grid = Arc::new(build_grid([0.0, 0.0, 1.0, 1.0], (n, n), |_| true).unwrap());
    let amen = Arc::new(amenity_from_function(&grid, amenity).unwrap());
    let sites = sites
        .iter()
        .enumerate()
        .map(|(i, (p, a))| Site::new(i, *p, *a))
        .collect();
    Geography::euclidean(grid, sites, amen, tau).unwrap()
}

fn flat(_: [f64; 2]) -> f64 {
    1.0
}

fn tilted(x: [f64; 2]) -> f64 {
    1.0 + 0.4 * x[0] + 0.2 * x[1] * x[1]
}

fn tessellation_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cells = 0;
    for config in 0..10 {
        let n_sites = rng.random_range(2..=5);
        let grid = build_grid([0.0, 0.0, 1.0, 1.0], (64, 64), |_| true).unwrap();
        let sites: Vec<Site> = (0..n_sites)
            .map(|i| Site::new(i, [rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)], 1.0))
            .collect();
        let weights: Vec<f64> = (0..n_sites).map(|_| rng.random_range(-0.2..0.2)).collect();
        let metric = DistanceSystem::euclidean(n_sites);
        let tess = assign_labels(&grid, &sites, &metric, &weights).map_err(|e| e.to_string())?;
        for cell in 0..grid.n_cells() {
            let c = grid.center(cell);
            let mut best = 0;
            let mut best_v = f64::INFINITY;
            for (i, s) in sites.iter().enumerate() {
                let v = (c[0] - s.position[0]).hypot(c[1] - s.position[1]) - weights[i];
                if v < best_v {
                    best_v = v;
                    best = i;
                }
            }
            ensure!(
                tess.labels[cell] as usize == best,
                "config {config}, cell {cell}: label {} vs brute force {best}",
                tess.labels[cell]
            );
            cells += 1;
        }
    }
    let t = start.elapsed().as_secs_f64();
    ensure!(t < 1.0, "took {t:.3} s");
    Ok(format!("{cells} cells match brute force in {t:.3} s"))
}

fn disk_integral(eps: f64, delta: f64, beta: f64, n: usize) -> f64 {
    let grid = Arc::new(
        build_grid([-eps, -eps, eps, eps], (n, n), |x| x[0].hypot(x[1]) < eps).unwrap(),
    );
    let amen = Arc::new(amenity_from_function(&grid, |_| 1.0).unwrap());
    let geo = Geography::euclidean(grid, vec![Site::new(0, [0.0, 0.0], 1.0)], amen, 0.0).unwrap();
    let tess = assign_labels(&geo.grid, &geo.sites, &geo.metric, &[0.0]).unwrap();
    let agg = aggregate_amenities(&tess, &geo, &KernelSpec::new(beta, delta).unwrap());
    agg.integral(0).unwrap()
}

fn quadrature_vs_closed_form() -> Outcome {
    let mut notes = Vec::new();
    for (eps, delta, beta) in [(1.0, 1.0, -1.0), (0.8, 4.0, -0.5), (0.5, 8.0, -0.3)] {
        let exact = disk_kernel_oracle(eps, delta, beta);
        let coarse = (disk_integral(eps, delta, beta, 256) / exact - 1.0).abs();
        let fine = (disk_integral(eps, delta, beta, 512) / exact - 1.0).abs();
        ensure!(fine < 0.005, "({eps}, {delta}, {beta}): error {fine:.2e} at 512");
        ensure!(
            coarse >= 1.5 * fine,
            "({eps}, {delta}, {beta}): error {coarse:.2e} -> {fine:.2e} on halving h"
        );
        notes.push(format!("{fine:.1e} (x{:.1})", coarse / fine));
    }
    Ok(format!("relative errors at 512: {}", notes.join(", ")))
}

/// Rebuilds the weight system from scratch at the solution's real-wage
/// weights and returns the sup-norm log residual.
fn independent_residual(geo: &Geography, p: &ModelParams, sol: &EquilibriumSolution) -> Result<f64, String> {
    let n = sol.labor.len();
    let sub: Vec<usize> = sol.site_ids.clone();
    let g = geo.restrict(&sub);
    let lam = &sol.real_wage_weights;
    let tess = assign_labels(&g.grid, &g.sites, &g.metric, lam).map_err(|e| e.to_string())?;
    let agg = aggregate_amenities(&tess, &g, &KernelSpec::new(p.beta, p.delta).unwrap());
    let (s, a, b, d) = (p.sigma, p.alpha, p.beta, p.delta);
    let st = (s - 1.0) / (2.0 * s - 1.0);
    let g1 = 1.0 - (s - 1.0) * a - s * b;
    let g2 = 1.0 + s * a + (s - 1.0) * b;
    let phi1 = (1.0 - (s - 1.0) * a) / b;
    let phi2 = -(1.0 + s * a) / b;
    let sc = -(d / b) * st;
    let log_b: Vec<f64> = (0..n).map(|i| agg.log_b(i).ok_or("empty cell")).collect::<Result<_, _>>()?;
    let log_v = b * (p.population.ln() - log_sum_exp((0..n).map(|i| -log_b[i] / b - d * lam[i] / b)));
    ensure!((log_v - sol.welfare_level.ln()).abs() < 1e-9, "welfare {log_v} vs {}", sol.welfare_level.ln());
    for i in 0..n {
        let l = (log_v / b - log_b[i] / b - d * lam[i] / b).exp();
        ensure!((l / sol.labor[i] - 1.0).abs() < 1e-9, "labor {i}: {l} vs {}", sol.labor[i]);
        ensure!((log_b[i] - sol.amenity[i].ln()).abs() < 1e-9, "amenity {i}");
    }
    let nu = (s - 1.0) * a / b;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let rhs = nu * log_v
            + log_sum_exp((0..n).map(|j| {
                (1.0 - s) * g.trade.get(i, j).ln()
                    + st * (s - 1.0) * g.sites[i].productivity.ln()
                    + st * s * g.sites[j].productivity.ln()
                    + st * phi1 * log_b[i]
                    + st * phi2 * log_b[j]
                    + sc * g2 * lam[j]
            }));
        worst = worst.max((sc * g1 * lam[i] - rhs).abs());
    }
    Ok(worst)
}

fn residual_cases() -> Vec<(Geography, ModelParams, Vec<usize>)> {
    let three = [([0.2, 0.3], 1.0), ([0.7, 0.6], 1.1), ([0.4, 0.8], 0.95)];
    vec![
        (
            square_geo(64, &[([0.25, 0.5], 1.0), ([0.75, 0.5], 1.0)], 0.1, flat),
            ModelParams::baseline(5.0, 0.1, -0.3, 2.0, 0.1),
            vec![0, 1],
        ),
        (
            square_geo(64, &[([0.3, 0.4], 1.0), ([0.7, 0.55], 1.1)], 0.2, tilted),
            ModelParams::baseline(5.0, 0.1, -0.3, 2.0, 0.2),
            vec![0, 1],
        ),
        (
            square_geo(64, &three, 0.2, tilted),
            ModelParams::baseline(9.0, 0.2, -0.3, 3.0, 0.2).with_population(4.0),
            vec![0, 1, 2],
        ),
        (
            square_geo(64, &three, 0.1, tilted),
            ModelParams::baseline(4.0, 0.05, -0.4, 1.5, 0.1),
            vec![2, 0],
        ),
    ]
}

fn fixed_point_residual() -> Outcome {
    let mut worst: f64 = 0.0;
    let cases = residual_cases();
    for (k, (geo, p, ys)) in cases.iter().enumerate() {
        let sol = fixed_point_solve(geo, p, ys, &SolverOptions::default()).map_err(|e| format!("case {k}: {e}"))?;
        let r = independent_residual(geo, p, &sol)?;
        ensure!(r < 1e-8, "case {k}: residual {r:.2e}");
        worst = worst.max(r);
        if k == 0 {
            for l in &sol.labor {
                ensure!((l / 0.5 - 1.0).abs() < 1e-8, "symmetric labor {l}");
            }
        }
    }
    Ok(format!("{} solves, worst independent residual {worst:.1e}; symmetric split exact", cases.len()))
}

fn cross_system_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (k, (geo, p, ys)) in residual_cases().iter().enumerate() {
        let sol = fixed_point_solve(geo, p, ys, &SolverOptions::default()).map_err(|e| e.to_string())?;
        let gaps: Vec<f64> = (0..ys.len())
            .map(|i| (sol.wages[i] / sol.prices[i]).ln() / p.delta - sol.weights[i])
            .collect();
        let spread = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        ensure!(spread < 1e-6, "case {k}: spread {spread:.2e}");
        worst = worst.max(spread);
    }
    Ok(format!("worst spread of log(w/P)/delta - lambda: {worst:.1e}"))
}

fn shape_derivative() -> Outcome {
    let configs: [TwoSiteCase; 3] = [
        (&[([0.3, 0.5], 1.0), ([0.7, 0.5], 1.0)], [0.0, 0.0], flat, 3.0),
        (&[([0.25, 0.3], 1.0), ([0.7, 0.65], 1.0)], [0.05, -0.02], tilted, 4.0),
        (&[([0.4, 0.2], 1.0), ([0.55, 0.8], 1.0)], [-0.1, 0.05], tilted, 2.0),
    ];
    let mut worst: f64 = 0.0;
    for (c, (sites, lam, amen, delta)) in configs.iter().enumerate() {
        let geo = square_geo(256, sites, 0.1, *amen);
        let kernel = KernelSpec::new(-0.4, *delta).unwrap();
        let tess = assign_labels(&geo.grid, &geo.sites, &geo.metric, lam).unwrap();
        let agg = aggregate_amenities(&tess, &geo, &kernel);
        let d_min = geo.site_distance(0, 1);
        let h = 1e-3 * d_min;
        for (i, k) in [(0, 1), (1, 0)] {
            let eta = eta_boundary_integral(&tess, &geo, &kernel, &agg, i, k).unwrap().value;
            let log_b_at = |dk: f64| {
                let mut w = lam.to_vec();
                w[k] += dk;
                let t = assign_labels(&geo.grid, &geo.sites, &geo.metric, &w).unwrap();
                aggregate_amenities(&t, &geo, &kernel).log_b(i).unwrap()
            };
            let fd = ((log_b_at(h) - log_b_at(-h)) / (2.0 * h)).abs();
            let rel = (eta / fd - 1.0).abs();
            ensure!(rel < 0.05, "config {c}, pair ({i},{k}): eta {eta:.5} vs fd {fd:.5}");
            worst = worst.max(rel);
        }
    }
    // Non-adjacent pair: the middle site separates the outer two.
    let geo = square_geo(64, &[([0.1, 0.5], 1.0), ([0.5, 0.5], 1.0), ([0.9, 0.5], 1.0)], 0.1, flat);
    let kernel = KernelSpec::new(-0.4, 2.0).unwrap();
    let tess = assign_labels(&geo.grid, &geo.sites, &geo.metric, &[0.0, 0.3, 0.0]).unwrap();
    ensure!(!tess.are_adjacent(0, 2), "outer sites should not touch");
    let agg = aggregate_amenities(&tess, &geo, &kernel);
    let zero = eta_boundary_integral(&tess, &geo, &kernel, &agg, 0, 2).unwrap().value;
    ensure!(zero == 0.0, "non-adjacent eta {zero}");
    // η̂ falls when δ doubles.
    let geo = square_geo(64, &[([0.3, 0.5], 1.0), ([0.7, 0.5], 1.0)], 0.1, flat);
    let mut last = f64::INFINITY;
    let mut seq = Vec::new();
    for delta in [1.0, 2.0, 4.0, 8.0] {
        let e = eta_sup_estimate(&geo, &KernelSpec::new(-0.4, delta).unwrap(), 0.5, 4, 3).unwrap().value;
        ensure!(e < last, "eta_hat {e} did not fall at delta {delta}");
        last = e;
        seq.push(format!("{e:.3}"));
    }
    Ok(format!(
        "worst relative gap to finite differences {:.2}%, non-adjacent 0, eta_hat over delta 1,2,4,8: {}",
        100.0 * worst,
        seq.join(" > ")
    ))
}

fn regime_classification() -> Outcome {
    let r = regime_classify(&ModelParams::baseline(9.0, 0.2, -0.3, 1.0, 0.0)).map_err(|e| e.to_string())?;
    ensure!(r.location_multiplicity == LocationMultiplicity::Multiple, "{r:?}");
    ensure!((r.gamma1 - 2.1).abs() < 1e-12 && (r.gamma2 - 0.4).abs() < 1e-12, "{r:?}");
    ensure!(r.gamma_ratio < 1.0 && r.labor_uniqueness && r.reconciliation, "{r:?}");
    let map = parameter_sweep(&SweepSpec::alpha_sigma(-0.3)).map_err(|e| e.to_string())?;
    for (v, s) in map.boundary.iter().zip(&map.others) {
        ensure!(v[0] == 1.0 / (s - 1.0) && v[1] == *s, "boundary vertex {v:?}");
    }
    for c in &map.cells {
        let expect = if c.alpha == 1.0 / (c.sigma - 1.0) {
            LocationMultiplicity::KnifeEdge
        } else if c.alpha > 1.0 / (c.sigma - 1.0) {
            LocationMultiplicity::Multiple
        } else {
            LocationMultiplicity::Spread
        };
        ensure!(c.location == expect, "cell {c:?}");
    }
    Ok(format!(
        "gamma1 = {}, gamma2 = {}, |g2/g1| = {:.4}, reconciliation; {} boundary vertices exact",
        r.gamma1,
        r.gamma2,
        r.gamma_ratio,
        map.boundary.len()
    ))
}

fn sustainability_trichotomy() -> Outcome {
    let sites = [([0.2, 0.3], 1.0), ([0.75, 0.4], 1.05), ([0.5, 0.8], 1.0)];
    let geo = square_geo(64, &sites, 0.1, tilted);
    let mut verdicts = Vec::new();
    for (alpha, want) in [(0.3, Verdict::Sustainable), (0.1, Verdict::Unsustainable)] {
        let p = ModelParams::baseline(5.0, alpha, -0.5, 2.0, 0.1);
        let sol = fixed_point_solve(&geo, &p, &[0, 1], &SolverOptions::default()).map_err(|e| e.to_string())?;
        let rep = spatial_equilibrium_check(&sol, &geo, &p).map_err(|e| e.to_string())?;
        ensure!(rep.verdict == want, "alpha {alpha}: {:?}", rep.verdict);
        verdicts.push(format!("alpha {alpha}: {:?}", rep.verdict));
    }
    let p = ModelParams::baseline(5.0, 0.25, -0.3, 2.0, 0.1);
    let sol = fixed_point_solve(&geo, &p, &[0, 1], &SolverOptions::default()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        let row: Vec<f64> = (0..2).map(|j| geo.trade.get(i, j)).collect();
        let lp = match potential_weight_at(&sol, &p, geo.sites[i].productivity, &row).map_err(|e| e.to_string())? {
            PotentialWeight::KnifeEdge(v) => v,
            other => return Err(format!("expected a finite weight, got {other:?}")),
        };
        let gap = (lp - sol.weights[i]).abs();
        ensure!(gap < 1e-8, "clone of site {i}: {lp} vs {}", sol.weights[i]);
        worst = worst.max(gap);
    }
    Ok(format!("{}; knife-edge clone gap {worst:.1e}", verdicts.join(", ")))
}

fn multiplicity_exhibit() -> Outcome {
    let start = Instant::now();
    let corners = [([0.25, 0.25], 1.0), ([0.75, 0.25], 1.0), ([0.25, 0.75], 1.0), ([0.75, 0.75], 1.0)];
    let geo = square_geo(128, &corners, 0.1, flat);
    let p = ModelParams::baseline(5.0, 0.3, -0.5, 2.0, 0.1);
    let spec = SubsetSpec {
        sizes: vec![2],
        max_subsets: 256,
        seed: 0,
    };
    let cat = enumerate_urban_systems(&geo, &p, &spec, &SolverOptions::default(), &ExistenceOptions::default())
        .map_err(|e| e.to_string())?;
    let good: Vec<_> = cat
        .sustainable()
        .filter(|e| e.existence_passed && e.existence_min_margin > 0.0)
        .collect();
    let t = start.elapsed().as_secs_f64();
    ensure!(good.len() >= 2, "only {} sustainable systems with positive margins", good.len());
    ensure!(t < 60.0, "took {t:.1} s");
    let margin = good.iter().map(|e| e.existence_min_margin).fold(f64::INFINITY, f64::min);
    Ok(format!(
        "{} distinct sustainable 2-site equilibria (min existence margin {margin:.3}) in {t:.2} s",
        good.len()
    ))
}

fn uniqueness_probe() -> Outcome {
    let sites = [([0.2, 0.3], 1.0), ([0.75, 0.35], 1.15), ([0.45, 0.8], 0.9)];
    let geo = square_geo(64, &sites, 0.1, tilted);
    let mut delta = 1.0;
    let (p, check, eta) = loop {
        let p = ModelParams::baseline(9.0, 0.2, -0.3, delta, 0.1);
        let comp = composite_params(&p, &geo.sites, &geo.trade).map_err(|e| e.to_string())?;
        let eta = eta_sup_estimate(&geo, &comp.system.kernel, 0.5, 8, 5).map_err(|e| e.to_string())?.value;
        let check = uniqueness_condition(&comp, 3, eta).map_err(|e| e.to_string())?;
        if check.holds {
            break (p, check, eta);
        }
        delta *= 2.0;
        ensure!(delta <= 1024.0, "condition never held");
    };
    let rep = multistart_uniqueness_probe(&geo, &p, &[0, 1, 2], 16, 9, &SolverOptions::default())
        .map_err(|e| e.to_string())?;
    ensure!(rep.failures.is_empty(), "failures {:?}", rep.failures);
    ensure!(
        rep.verdict == ProbeVerdict::UniqueUpToNormalization,
        "{} clusters",
        rep.clusters.len()
    );
    Ok(format!(
        "delta = {delta}: eta_hat {eta:.2e}, lhs {:.4} < 1; 16 starts, 1 cluster",
        check.lhs
    ))
}

fn variant_collapse() -> Outcome {
    let geo = square_geo(48, &[([0.2, 0.3], 1.0), ([0.7, 0.6], 1.2), ([0.4, 0.85], 0.9)], 0.0, tilted);
    let base = ModelParams::baseline(5.0, 0.1, -0.3, 2.0, 0.0);
    let home = base.with_variant(Variant::HomeConsumption);
    let o = SolverOptions::default();
    let a = fixed_point_solve(&geo, &base, &[0, 1, 2], &o).map_err(|e| e.to_string())?;
    let b = fixed_point_solve(&geo, &home, &[0, 1, 2], &o).map_err(|e| e.to_string())?;
    ensure!(a.weight_differences() == b.weight_differences(), "weight differences differ");
    // (σ, α, δ, μ, β̃) → (γ1, γ2, s, φ1, φ2), worked by hand.
    let table = [
        ((5.0, 0.1, 1.0, 0.5, -0.2), (1.6, 0.7, 10.0 / 9.0, -3.0, 7.5)),
        ((9.0, 0.2, 2.0, 0.8, -0.3), (0.075, 2.2, 128.0 / 51.0, 2.0, 28.0 / 3.0)),
        ((3.0, 0.0, 1.5, 0.3, -0.1), (1.7, 8.0 / 15.0, 1.8, -10.0, 10.0)),
        ((4.0, 0.4, 0.5, 0.9, -0.5), (1.0 / 45.0, 73.0 / 30.0, 27.0 / 70.0, 0.4, 5.2)),
        ((6.0, -0.1, 3.0, 0.6, -0.25), (2.5, -13.0 / 30.0, 36.0 / 11.0, -6.0, 1.6)),
    ];
    for ((sigma, alpha, delta, mu, bt), (g1, g2, s, f1, f2)) in table {
        let p = ModelParams::baseline(sigma, alpha, -0.3, delta, 0.1)
            .with_variant(Variant::TwoSector { mu, beta_tilde: bt });
        let c = scalar_composites(&p).map_err(|e| e.to_string())?;
        for (name, got, want) in [
            ("gamma1", c.gamma1, g1),
            ("gamma2", c.gamma2, g2),
            ("weight scale", c.weight_scale, s),
            ("phi1", c.phi1, f1),
            ("phi2", c.phi2, f2),
        ] {
            ensure!((got - want).abs() < 1e-12, "{name} at {:?}: {got} vs {want}", (sigma, alpha, delta, mu, bt));
        }
    }
    Ok("home consumption at tau = 0 matches baseline bit for bit; 5 two-sector tuples match".into())
}

fn scale_law() -> Outcome {
    let geo = square_geo(64, &[([0.2, 0.3], 1.0), ([0.7, 0.6], 1.1), ([0.4, 0.85], 0.95)], 0.1, tilted);
    let p = ModelParams::baseline(5.0, 0.1, -0.3, 2.0, 0.1).with_population(1.5);
    let q = p.with_population(3.0);
    let o = SolverOptions::default();
    let a = fixed_point_solve(&geo, &p, &[0, 1, 2], &o).map_err(|e| e.to_string())?;
    let b = fixed_point_solve(&geo, &q, &[0, 1, 2], &o).map_err(|e| e.to_string())?;
    let ratio = b.welfare / a.welfare;
    let err = (ratio / 2f64.powf(p.beta) - 1.0).abs();
    ensure!(err < 1e-8, "welfare ratio {ratio}, error {err:.2e}");
    ensure!(a.tessellation.labels == b.tessellation.labels, "labels changed");
    ensure!(!a.tessellation.labels.contains(&VACUUM), "unexpected outside cells");
    for (x, y) in a.shares().iter().zip(b.shares()) {
        ensure!((x - y).abs() < 1e-12, "shares {x} vs {y}");
    }
    Ok(format!("V ratio {ratio:.12} vs 2^beta, error {err:.1e}; labels and shares unchanged"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("tessellation matches exhaustive argmin", tessellation_oracle),
        ("disk quadrature vs closed form", quadrature_vs_closed_form),
        ("fixed-point residual", fixed_point_residual),
        ("weights vs real wages", cross_system_identity),
        ("shape derivative", shape_derivative),
        ("regime classification", regime_classification),
        ("sustainability trichotomy", sustainability_trichotomy),
        ("multiplicity exhibit", multiplicity_exhibit),
        ("uniqueness probe", uniqueness_probe),
        ("variant collapse", variant_collapse),
        ("scale law", scale_law),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

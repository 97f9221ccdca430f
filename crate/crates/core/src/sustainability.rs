//! Potential weights at vacant sites, the spatial-equilibrium check and the
//! enumeration of urban systems.

use crate::analysis::{
    existence_check, location_multiplicity, AnalysisError, ExistenceOptions, LocationMultiplicity,
    CLUSTER_TOL,
};
use crate::equilibrium::{
    fixed_point_solve, scalar_composites, EquilibriumSolution, ModelParams, SolveError,
    SolverOptions, Variant,
};
use crate::fields::Geography;
use crate::geometry::VACUUM;
use crate::log_sum_exp;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Verdicts within this distance of zero are reported as boundary cases.
pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", content = "value", rename_all = "snake_case")]
pub enum PotentialWeight {
    /// `α > 1/(σ−1)`: the potential weight is `−∞`.
    StrongSpillover,
    /// `α < 1/(σ−1)`: the potential weight is `+∞`.
    WeakSpillover,
    KnifeEdge(f64),
}

impl PotentialWeight {
    pub fn as_f64(&self) -> f64 {
        match self {
            PotentialWeight::StrongSpillover => f64::NEG_INFINITY,
            PotentialWeight::WeakSpillover => f64::INFINITY,
            PotentialWeight::KnifeEdge(v) => *v,
        }
    }
}

fn index_of(solution: &EquilibriumSolution, geo: &Geography, site: usize) -> Option<usize> {
    let id = geo.sites[site].id;
    solution.site_ids.iter().position(|&s| s == id)
}

fn global_index(geo: &Geography, id: usize) -> Option<usize> {
    geo.sites.iter().position(|s| s.id == id)
}

/// The potential weight at `site` (an index into `geo.sites`), in the
/// normalization of `solution.weights`.
pub fn potential_weight(
    solution: &EquilibriumSolution,
    geo: &Geography,
    params: &ModelParams,
    site: usize,
) -> Result<PotentialWeight, AnalysisError> {
    if site >= geo.n_sites() {
        return Err(AnalysisError::BadRequest(format!("site {site} does not exist")));
    }
    if let Some(k) = index_of(solution, geo, site) {
        if solution.active[k] {
            return Err(AnalysisError::SiteNotVacant(site));
        }
    }
    let row: Vec<f64> = solution
        .site_ids
        .iter()
        .map(|&id| {
            global_index(geo, id)
                .map(|j| geo.trade.get(site, j))
                .ok_or_else(|| AnalysisError::BadRequest(format!("solution site {id} not in geography")))
        })
        .collect::<Result<_, _>>()?;
    potential_weight_at(solution, params, geo.sites[site].productivity, &row)
}

/// Potential weight of a vacant site with productivity `productivity` and
/// trade costs `trade_row[j] = T_pj` to the sites of `solution`. At the knife
/// edge it solves
/// `e^{sγ1 λ_p} = Σ_j T_pj^{1−σ} Ā_p^{σ̃(σ−1)} Ā_j^{σ̃σ} I_j e^{sγ2 λ_j}`
/// over the active sites `j`.
pub fn potential_weight_at(
    solution: &EquilibriumSolution,
    params: &ModelParams,
    productivity: f64,
    trade_row: &[f64],
) -> Result<PotentialWeight, AnalysisError> {
    match location_multiplicity(params.alpha, params.sigma) {
        LocationMultiplicity::Multiple => return Ok(PotentialWeight::StrongSpillover),
        LocationMultiplicity::Spread => return Ok(PotentialWeight::WeakSpillover),
        LocationMultiplicity::KnifeEdge => {}
    }
    if matches!(params.variant, Variant::TwoSector { .. }) {
        return Err(SolveError::UnsupportedVariant("the potential weight").into());
    }
    if trade_row.len() != solution.site_ids.len() {
        return Err(AnalysisError::BadRequest("trade row length mismatch".into()));
    }
    let comp = scalar_composites(params)?;
    let s = params.sigma;
    let st = comp.sigma_tilde;
    let f = comp.tilde_factor();
    let ratio = comp.gamma_ratio();
    // Exact knife-edge exponent: σ̃φ2 = −1/β_e, so B_j^{σ̃φ2} = I_j.
    let a2 = st * comp.phi2;
    let log_sum = log_sum_exp((0..trade_row.len()).filter(|&j| solution.active[j]).map(|j| {
        let log_aj = (solution.amenity[j]).ln();
        (1.0 - s) * trade_row[j].ln()
            + st * (s - 1.0) * productivity.ln()
            + st * s * solution.productivity[j].ln()
            + a2 * log_aj
            + ratio * f * solution.weights[j]
    }));
    Ok(PotentialWeight::KnifeEdge(log_sum / f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Sustainable,
    Unsustainable,
    /// Some deviation payoff is zero within [`BOUNDARY_TOL`].
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VacantMargin {
    /// Index into the geography.
    pub site: usize,
    /// Site (index into the geography) whose commuting area contains it.
    pub host: Option<usize>,
    pub potential: PotentialWeight,
    /// `δσ̃σ(λ_p − λ_host + d_host(y_p))` at the knife edge; negative means
    /// no profitable deviation.
    pub lhs: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SustainabilityReport {
    pub verdict: Verdict,
    pub regime: LocationMultiplicity,
    pub vacant: Vec<VacantMargin>,
}

impl SustainabilityReport {
    pub fn sustainable(&self) -> bool {
        self.verdict == Verdict::Sustainable
    }
}

/// Decides whether `solution` survives deviations to the vacant sites of
/// `geo` (those outside the urban system or with empty commuting areas).
pub fn spatial_equilibrium_check(
    solution: &EquilibriumSolution,
    geo: &Geography,
    params: &ModelParams,
) -> Result<SustainabilityReport, AnalysisError> {
    let regime = location_multiplicity(params.alpha, params.sigma);
    let comp = scalar_composites(params)?;
    let vacant_sites: Vec<usize> = (0..geo.n_sites())
        .filter(|&p| index_of(solution, geo, p).is_none_or(|k| !solution.active[k]))
        .collect();
    let mut vacant = Vec::with_capacity(vacant_sites.len());
    for p in vacant_sites {
        let potential = potential_weight(solution, geo, params, p)?;
        let host_local = geo
            .grid
            .locate(geo.sites[p].position)
            .map(|cell| solution.tessellation.labels[cell])
            .filter(|&l| l != VACUUM)
            .map(|l| l as usize);
        let host = host_local.and_then(|k| global_index(geo, solution.site_ids[k]));
        let (lhs, verdict) = match potential {
            PotentialWeight::StrongSpillover => (None, Verdict::Sustainable),
            PotentialWeight::WeakSpillover => (None, Verdict::Unsustainable),
            PotentialWeight::KnifeEdge(lp) => match (host_local, host) {
                (Some(k), Some(h)) => {
                    let scale = comp.tilde_factor();
                    let v = scale * (lp - solution.weights[k] + geo.distance(h, geo.sites[p].position));
                    let verdict = if v.abs() < BOUNDARY_TOL {
                        Verdict::Boundary
                    } else if v < 0.0 {
                        Verdict::Sustainable
                    } else {
                        Verdict::Unsustainable
                    };
                    (Some(v), verdict)
                }
                _ => (None, Verdict::Unsustainable),
            },
        };
        vacant.push(VacantMargin {
            site: p,
            host,
            potential,
            lhs,
            verdict,
        });
    }
    let verdict = if vacant.iter().any(|v| v.verdict == Verdict::Unsustainable) {
        Verdict::Unsustainable
    } else if vacant.iter().any(|v| v.verdict == Verdict::Boundary) {
        Verdict::Boundary
    } else {
        Verdict::Sustainable
    };
    Ok(SustainabilityReport {
        verdict,
        regime,
        vacant,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub sizes: Vec<usize>,
    pub max_subsets: usize,
    pub seed: u64,
}

impl Default for SubsetSpec {
    fn default() -> Self {
        Self {
            sizes: vec![1, 2],
            max_subsets: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    /// Indices into the geography.
    pub subset: Vec<usize>,
    pub solution: EquilibriumSolution,
    pub sustainability: SustainabilityReport,
    pub existence_min_margin: f64,
    pub existence_passed: bool,
}

impl CatalogEntry {
    pub fn sustainable(&self) -> bool {
        self.sustainability.sustainable()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetFailure {
    pub subset: Vec<usize>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCatalog {
    pub entries: Vec<CatalogEntry>,
    pub failures: Vec<SubsetFailure>,
    pub strategy: Strategy,
    pub seed: u64,
    pub candidates: usize,
}

impl EquilibriumCatalog {
    pub fn sustainable(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.iter().filter(|e| e.sustainable())
    }
}

fn combinations(n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), out);
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn subsets(n: usize, spec: &SubsetSpec) -> (Vec<Vec<usize>>, Strategy) {
    let mut sizes: Vec<usize> = spec.sizes.iter().copied().filter(|&k| k >= 1 && k <= n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let total: f64 = sizes.iter().map(|&k| binomial(n, k)).sum();
    if total <= spec.max_subsets as f64 {
        let mut out = Vec::new();
        for &k in &sizes {
            combinations(n, k, &mut out);
        }
        return (out, Strategy::Exhaustive);
    }
    // Seeded sampling: subset sizes in turn, each a uniform draw without
    // replacement of sites, duplicates skipped.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut attempts = 0;
    while out.len() < spec.max_subsets && attempts < 100 * spec.max_subsets {
        let k = sizes[attempts % sizes.len()];
        attempts += 1;
        let mut s = sample(&mut rng, n, k).into_vec();
        s.sort_unstable();
        if !out.contains(&s) {
            out.push(s);
        }
    }
    (out, Strategy::Sampled)
}

/// Solves every enumerated urban system and checks it against deviations.
/// Entries with the same active set and weight differences within
/// [`CLUSTER_TOL`] are merged.
pub fn enumerate_urban_systems(
    geo: &Geography,
    params: &ModelParams,
    spec: &SubsetSpec,
    solver: &SolverOptions,
    existence: &ExistenceOptions,
) -> Result<EquilibriumCatalog, AnalysisError> {
    if spec.sizes.iter().any(|&k| k == 0 || k > geo.n_sites()) {
        return Err(AnalysisError::BadRequest(format!(
            "subset sizes must lie in 1..={}",
            geo.n_sites()
        )));
    }
    let (list, strategy) = subsets(geo.n_sites(), spec);
    let results = crate::map_indices(list.len(), |k| {
        let subset = &list[k];
        let sol = fixed_point_solve(geo, params, subset, solver).map_err(AnalysisError::from)?;
        let sus = spatial_equilibrium_check(&sol, geo, params)?;
        let ex = existence_check(&geo.restrict(subset), params, existence)?;
        Ok::<_, AnalysisError>(CatalogEntry {
            subset: subset.clone(),
            solution: sol,
            sustainability: sus,
            existence_min_margin: ex.min_margin,
            existence_passed: ex.passed,
        })
    });
    let mut entries: Vec<CatalogEntry> = Vec::new();
    let mut failures = Vec::new();
    for (subset, r) in list.iter().zip(results) {
        match r {
            Ok(e) => {
                let dup = entries.iter().any(|x| same_equilibrium(geo, x, &e));
                if !dup {
                    entries.push(e);
                }
            }
            Err(err) => failures.push(SubsetFailure {
                subset: subset.clone(),
                error: err.to_string(),
            }),
        }
    }
    Ok(EquilibriumCatalog {
        entries,
        failures,
        strategy,
        seed: spec.seed,
        candidates: geo.n_sites(),
    })
}

fn active_ids(e: &CatalogEntry) -> Vec<usize> {
    let s = &e.solution;
    let mut ids: Vec<usize> = (0..s.site_ids.len())
        .filter(|&k| s.active[k])
        .map(|k| s.site_ids[k])
        .collect();
    ids.sort_unstable();
    ids
}

fn same_equilibrium(_geo: &Geography, a: &CatalogEntry, b: &CatalogEntry) -> bool {
    if active_ids(a) != active_ids(b) {
        return false;
    }
    let diffs = |e: &CatalogEntry| {
        let s = &e.solution;
        let mut v: Vec<(usize, f64)> = s.site_ids.iter().copied().zip(s.weight_differences()).collect();
        v.sort_by_key(|p| p.0);
        v
    };
    let (da, db) = (diffs(a), diffs(b));
    da.len() == db.len()
        && da
            .iter()
            .zip(&db)
            .all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() < CLUSTER_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapReport {
    pub baseline: Vec<usize>,
    pub swapped: Vec<usize>,
    /// `d_c(y_p)`.
    pub distance: f64,
    /// `Ā_c/Ā_p`.
    pub productivity_ratio: f64,
    pub baseline_margin: f64,
    pub swapped_margin: f64,
    pub swapped_existence_passed: bool,
    pub baseline_solution: Option<EquilibriumSolution>,
    pub swapped_solution: Option<EquilibriumSolution>,
    pub swapped_error: Option<String>,
}

impl SwapReport {
    pub fn succeeded(&self) -> bool {
        self.swapped_solution.is_some() && self.swapped_existence_passed
    }
}

/// Replaces `y_c` by `y_p` in the urban system and re-solves.
pub fn site_swap_experiment(
    geo: &Geography,
    params: &ModelParams,
    y_star: &[usize],
    y_c: usize,
    y_p: usize,
    solver: &SolverOptions,
    existence: &ExistenceOptions,
) -> Result<SwapReport, AnalysisError> {
    let pos = y_star
        .iter()
        .position(|&i| i == y_c)
        .ok_or_else(|| AnalysisError::BadRequest(format!("site {y_c} is not in the urban system")))?;
    if y_p != y_c && y_star.contains(&y_p) {
        return Err(AnalysisError::SiteNotVacant(y_p));
    }
    if y_p >= geo.n_sites() {
        return Err(AnalysisError::BadRequest(format!("site {y_p} does not exist")));
    }
    let mut swapped = y_star.to_vec();
    swapped[pos] = y_p;
    let base_ex = existence_check(&geo.restrict(y_star), params, existence)?;
    let swap_ex = existence_check(&geo.restrict(&swapped), params, existence)?;
    let baseline_solution = fixed_point_solve(geo, params, y_star, solver).ok();
    let (swapped_solution, swapped_error) = match fixed_point_solve(geo, params, &swapped, solver) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(SwapReport {
        baseline: y_star.to_vec(),
        swapped,
        distance: geo.site_distance(y_c, y_p),
        productivity_ratio: geo.sites[y_c].productivity / geo.sites[y_p].productivity,
        baseline_margin: base_ex.min_margin,
        swapped_margin: swap_ex.min_margin,
        swapped_existence_passed: swap_ex.passed,
        baseline_solution,
        swapped_solution,
        swapped_error,
    })
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use urbsys::analysis::{
    multistart_uniqueness_probe, parameter_sweep, regime_classify, existence_hypothesis_check, uniqueness_condition,
};
use urbsys::integrals::{eta_sup_estimate, resident_density};
use urbsys::render::{format_float_raster, label_raster, region_map_svg, tessellation_svg, SvgStyle};
use urbsys::sustainability::{enumerate_urban_systems, spatial_equilibrium_check};
use urbsys::{
    aggregate_amenities, assign_labels, composite_params, fixed_point_solve, knife_edge_global_solve,
    EquilibriumSolution, Geography, SolveError,
};

mod config;
mod output;

use config::Loaded;
use output::{write_catalog_csv, write_json, write_pgm, write_site_csv, write_sweep_csv, write_text};

/// Exit codes are part of the scripting contract.
const EXIT_CONFIG: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_LEFT_FEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "urbsys", version, about = "Urban-system equilibria on weighted Voronoi tessellations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; all cores by default. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the equilibrium of one urban system.
    Solve(Common),
    /// Regime map over (alpha, beta) or (alpha, sigma).
    Sweep(Common),
    /// Print the regime report for the configured parameters.
    Classify(Common),
    /// Solve every candidate urban system and check sustainability.
    Enumerate(Common),
    /// Redraw a saved solution or catalog as SVG.
    Render {
        #[command(flatten)]
        common: Common,
        /// A solution.json or catalog.json written by an earlier run.
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

struct Ctx {
    cfg: Loaded,
    out: PathBuf,
    verbose: bool,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self> {
        let cfg = config::load(&c.config)?;
        if let Some(n) = c.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring the thread pool")?;
        }
        std::fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
        Ok(Self {
            cfg,
            out: c.out.clone(),
            verbose: c.verbose,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Solve(c) => cmd_solve(&Ctx::new(c)?),
        Command::Sweep(c) => cmd_sweep(&Ctx::new(c)?),
        Command::Classify(c) => cmd_classify(&Ctx::new(c)?),
        Command::Enumerate(c) => cmd_enumerate(&Ctx::new(c)?),
        Command::Render { common, input } => cmd_render(&Ctx::new(common)?, input),
    }
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    error: String,
    iterations: usize,
    step: Option<f64>,
    site: Option<usize>,
    urban_system: &'a [usize],
    last_weights: Option<&'a [f64]>,
}

fn cmd_solve(ctx: &Ctx) -> Result<u8> {
    let geo = ctx.cfg.geography()?;
    let params = ctx.cfg.params()?;
    let opts = ctx.cfg.solver_options();
    let global = ctx.cfg.config.solver.global;
    let ys = if global {
        (0..geo.n_sites()).collect()
    } else {
        ctx.cfg.urban_system(geo.n_sites())?
    };
    ctx.log(format!("solving for sites {ys:?} on a {}x{} grid", geo.grid.nx, geo.grid.ny));
    let result = if global {
        knife_edge_global_solve(&geo, &params, &opts)
    } else {
        fixed_point_solve(&geo, &params, &ys, &opts)
    };
    let sol = match result {
        Ok(sol) => sol,
        Err(e) => {
            let (code, diag) = match &e {
                SolveError::NotConverged {
                    iterations,
                    step,
                    last_weights,
                } => (
                    EXIT_NOT_CONVERGED,
                    Diagnostics {
                        error: e.to_string(),
                        iterations: *iterations,
                        step: Some(*step),
                        site: None,
                        urban_system: &ys,
                        last_weights: Some(last_weights),
                    },
                ),
                SolveError::LeftFeasibleSet { iterations, site } => (
                    EXIT_LEFT_FEASIBLE,
                    Diagnostics {
                        error: e.to_string(),
                        iterations: *iterations,
                        step: None,
                        site: Some(ys[*site]),
                        urban_system: &ys,
                        last_weights: None,
                    },
                ),
                _ => return Err(e.into()),
            };
            write_json(&ctx.path("diagnostics.json"), &diag)?;
            eprintln!("error: {e}; diagnostics in {}", ctx.path("diagnostics.json").display());
            return Ok(code);
        }
    };
    ctx.log(format!(
        "converged in {} iterations, residual {:.2e}",
        sol.iterations, sol.residuals.lambda_eq
    ));
    write_solution_artifacts(ctx, &geo, &params, &sol)?;
    if !global && ys.len() < geo.n_sites() {
        match spatial_equilibrium_check(&sol, &geo, &params) {
            Ok(rep) => write_json(&ctx.path("sustainability.json"), &rep)?,
            Err(e) => eprintln!("warning: sustainability check skipped: {e}"),
        }
    }
    Ok(0)
}

fn write_solution_artifacts(
    ctx: &Ctx,
    geo: &Geography,
    params: &urbsys::ModelParams,
    sol: &EquilibriumSolution,
) -> Result<()> {
    let sub = geo.restrict(&sol.site_ids);
    write_json(&ctx.path("solution.json"), sol)?;
    write_site_csv(&ctx.path("sites.csv"), geo, sol)?;
    write_pgm(&ctx.path("labels.pgm"), &geo.grid, &label_raster(&sol.tessellation)?)?;
    let comp = composite_params(params, &sub.sites, &sub.trade)?;
    let agg = aggregate_amenities(&sol.tessellation, &sub, &comp.system.kernel);
    let density = resident_density(&sol.tessellation, &sub, &comp.system.kernel, &agg, &sol.labor)?;
    write_text(&ctx.path("density.txt"), &format_float_raster(&geo.grid, &density))?;
    write_text(&ctx.path("tessellation.svg"), &solution_svg(&sub, sol))?;
    Ok(())
}

fn solution_svg(sub: &Geography, sol: &EquilibriumSolution) -> String {
    let style = SvgStyle {
        site_sizes: Some(sol.labor.iter().map(|l| l.sqrt()).collect()),
        title: Some(format!("urban system {:?}", sol.site_ids)),
    };
    tessellation_svg(&sub.grid, &sol.tessellation, &sub.sites, &style)
}

fn cmd_sweep(ctx: &Ctx) -> Result<u8> {
    let spec = ctx.cfg.sweep_spec()?;
    let map = parameter_sweep(&spec)?;
    ctx.log(format!("{} sweep cells", map.cells.len()));
    write_sweep_csv(&ctx.path("region_map.csv"), &map)?;
    write_text(&ctx.path("region_map.svg"), &region_map_svg(&map))?;
    Ok(0)
}

fn cmd_classify(ctx: &Ctx) -> Result<u8> {
    let params = ctx.cfg.params()?;
    let mut report = regime_classify(&params)?;
    let mut extra = serde_json::Map::new();
    if ctx.cfg.config.geography.is_some() {
        let geo = ctx.cfg.geography()?;
        let ys = ctx.cfg.urban_system(geo.n_sites())?;
        let sub = geo.restrict(&ys);
        let comp = composite_params(&params, &sub.sites, &sub.trade)?;
        let ex = ctx.cfg.existence_options();
        if sub.n_sites() >= 2 && comp.gamma1.abs() > 1e-14 {
            let eta = match ex.eta_override {
                Some(e) => e,
                None => eta_sup_estimate(&sub, &comp.system.kernel, ex.k_shrink, ex.eta_samples, ex.seed)?.value,
            };
            let u = uniqueness_condition(&comp, sub.n_sites(), eta)?;
            report.uniqueness_lhs = Some(u.lhs);
            extra.insert("uniqueness".into(), serde_json::to_value(u)?);
            extra.insert("existence".into(), serde_json::to_value(existence_hypothesis_check(&sub, &params, &ex)?)?);
        }
        if let Some(probe) = &ctx.cfg.config.probe {
            let rep = multistart_uniqueness_probe(
                &geo,
                &params,
                &ys,
                probe.n_starts,
                ctx.cfg.config.solver.seed,
                &ctx.cfg.solver_options(),
            )?;
            write_json(&ctx.path("probe.json"), &rep)?;
            println!(
                "multistart probe          = {} ({} clusters from {} starts)",
                serde_json::to_value(rep.verdict)?.as_str().unwrap_or("?"),
                rep.clusters.len(),
                probe.n_starts
            );
            extra.insert("probe_verdict".into(), serde_json::to_value(rep.verdict)?);
        }
    }
    let r = &report;
    println!("alpha cutoff 1/(sigma-1) = {}", r.alpha_cutoff);
    println!("location multiplicity    = {}", serde_json::to_value(r.location_multiplicity)?.as_str().unwrap_or("?"));
    println!("gamma1 = {}, gamma2 = {}, |gamma2/gamma1| = {}", r.gamma1, r.gamma2, r.gamma_ratio);
    println!("labor uniqueness         = {}", r.labor_uniqueness);
    println!("reconciliation           = {}", r.reconciliation);
    println!(
        "existence hypothesis     = {} ({} vs {})",
        r.existence_holds, r.existence_lhs, r.existence_rhs
    );
    if let Some(u) = r.uniqueness_lhs {
        println!("uniqueness lhs           = {u}");
    }
    let mut doc = serde_json::to_value(&report)?;
    if let Some(obj) = doc.as_object_mut() {
        obj.extend(extra);
    }
    write_json(&ctx.path("classify.json"), &doc)?;
    Ok(0)
}

fn cmd_enumerate(ctx: &Ctx) -> Result<u8> {
    let geo = ctx.cfg.geography()?;
    let params = ctx.cfg.params()?;
    let cat = enumerate_urban_systems(
        &geo,
        &params,
        &ctx.cfg.subset_spec(),
        &ctx.cfg.solver_options(),
        &ctx.cfg.existence_options(),
    )?;
    ctx.log(format!(
        "{} distinct equilibria, {} sustainable, {} failures",
        cat.entries.len(),
        cat.sustainable().count(),
        cat.failures.len()
    ));
    write_json(&ctx.path("catalog.json"), &cat)?;
    write_catalog_csv(&ctx.path("catalog.csv"), &cat)?;
    Ok(0)
}

/// The fields of a saved solution needed to rebuild its tessellation.
#[derive(Deserialize)]
struct SavedSolution {
    site_ids: Vec<usize>,
    weights: Vec<f64>,
    labor: Vec<f64>,
}

fn render_saved(geo: &Geography, saved: &SavedSolution) -> Result<String> {
    if let Some(&bad) = saved.site_ids.iter().find(|&&i| i >= geo.n_sites()) {
        bail!("saved solution names site {bad}, which the config does not define");
    }
    let sub = geo.restrict(&saved.site_ids);
    let tess = assign_labels(&sub.grid, &sub.sites, &sub.metric, &saved.weights)?;
    let style = SvgStyle {
        site_sizes: Some(saved.labor.iter().map(|l| l.max(0.0).sqrt()).collect()),
        title: Some(format!("urban system {:?}", saved.site_ids)),
    };
    Ok(tessellation_svg(&sub.grid, &tess, &sub.sites, &style))
}

fn cmd_render(ctx: &Ctx, input: &Path) -> Result<u8> {
    let geo = ctx.cfg.geography()?;
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let doc: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", input.display()))?;
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| anyhow!("bad input file name {}", input.display()))?;
    if let Some(entries) = doc.get("entries").and_then(|e| e.as_array()) {
        for (k, e) in entries.iter().enumerate() {
            let saved: SavedSolution = serde_json::from_value(e["solution"].clone())
                .with_context(|| format!("catalog entry {k}"))?;
            write_text(&ctx.path(&format!("{stem}_{k:03}.svg")), &render_saved(&geo, &saved)?)?;
        }
        ctx.log(format!("rendered {} catalog entries", entries.len()));
    } else {
        let saved: SavedSolution = serde_json::from_value(doc).context("not a saved solution")?;
        write_text(&ctx.path(&format!("{stem}.svg")), &render_saved(&geo, &saved)?)?;
    }
    Ok(0)
}

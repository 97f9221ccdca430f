//! Run configuration: a TOML document validated before any computation.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use urbsys::analysis::{ExistenceOptions, SweepSpec};
use urbsys::fields::{amenity_from_function, amenity_from_raster, trade_costs_from_metric, Geography};
use urbsys::geometry::{build_grid, grid_from_mask, DistanceSystem, DomainGrid, Site};
use urbsys::render::parse_float_raster;
use urbsys::sustainability::SubsetSpec;
use urbsys::{ModelParams, SolverOptions, TradeCostMatrix, Variant};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geography: Option<GeographyConfig>,
    pub params: ParamsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub existence: ExistenceConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub enumerate: EnumerateConfig,
    pub probe: Option<ProbeConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeographyConfig {
    #[serde(default = "unit_bbox")]
    pub bbox: [f64; 4],
    #[serde(default = "default_resolution")]
    pub resolution: [usize; 2],
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub amenity: AmenityConfig,
    #[serde(default)]
    pub metric: MetricConfig,
    /// Headerless square CSV; trade costs follow the metric when absent.
    pub trade_matrix: Option<PathBuf>,
    pub sites: Vec<SiteConfig>,
}

fn unit_bbox() -> [f64; 4] {
    [0.0, 0.0, 1.0, 1.0]
}

fn default_resolution() -> [usize; 2] {
    [128, 128]
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum DomainConfig {
    #[default]
    Rectangle,
    Disk { center: [f64; 2], radius: f64 },
    /// Text raster in the float format; cells with a positive value are inside.
    Mask { file: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum AmenityConfig {
    Constant { value: f64 },
    /// `base + gradient · x`.
    Linear { base: f64, gradient: [f64; 2] },
    Raster { file: PathBuf },
}

impl Default for AmenityConfig {
    fn default() -> Self {
        AmenityConfig::Constant { value: 1.0 }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum MetricConfig {
    #[default]
    Euclidean,
    ScaledEuclidean { scales: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub position: [f64; 2],
    #[serde(default = "one")]
    pub productivity: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "one")]
    pub population: f64,
    #[serde(default)]
    pub variant: VariantKind,
    pub mu: Option<f64>,
    pub beta_tilde: Option<f64>,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    #[default]
    Baseline,
    HomeConsumption,
    TwoSector,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub k_shrink: f64,
    pub seed: u64,
    pub anchor: usize,
    /// Site indices of the urban system; every site when absent.
    pub urban_system: Option<Vec<usize>>,
    /// Solve over all sites and let empty cells drop out (knife edge only).
    pub global: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            damping: d.damping,
            tol: d.tol,
            max_iter: d.max_iter,
            k_shrink: d.k_shrink,
            seed: 0,
            anchor: d.anchor,
            urban_system: None,
            global: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExistenceConfig {
    pub sharper_trade_bound: bool,
    pub eta_samples: usize,
    pub eta: Option<f64>,
}

impl Default for ExistenceConfig {
    fn default() -> Self {
        let d = ExistenceOptions::default();
        Self {
            sharper_trade_bound: d.use_sharper_trade_bound,
            eta_samples: d.eta_samples,
            eta: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub panel: PanelKind,
    /// `[lo, hi, n]`; panel default when absent.
    pub alpha: Option<(f64, f64, usize)>,
    pub other: Option<(f64, f64, usize)>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelKind {
    /// α against β at `params.sigma`.
    AlphaBeta,
    /// α against σ at `params.beta`.
    AlphaSigma,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnumerateConfig {
    pub sizes: Vec<usize>,
    pub max_subsets: usize,
}

impl Default for EnumerateConfig {
    fn default() -> Self {
        let d = SubsetSpec::default();
        Self {
            sizes: d.sizes,
            max_subsets: d.max_subsets,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default = "sixteen")]
    pub n_starts: usize,
}

fn sixteen() -> usize {
    16
}

/// A parsed config plus the directory its relative paths resolve against.
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let loaded = Loaded { config, base };
    loaded.params()?.validate().map_err(|e| anyhow!("[params]: {e}"))?;
    if let Some(g) = &loaded.config.geography {
        if g.sites.is_empty() {
            bail!("[geography]: at least one [[geography.sites]] entry is required");
        }
    }
    Ok(loaded)
}

impl Loaded {
    pub fn params(&self) -> Result<ModelParams> {
        let p = &self.config.params;
        let variant = match p.variant {
            VariantKind::Baseline => {
                reject_two_sector_keys(p)?;
                Variant::Baseline
            }
            VariantKind::HomeConsumption => {
                reject_two_sector_keys(p)?;
                Variant::HomeConsumption
            }
            VariantKind::TwoSector => Variant::TwoSector {
                mu: p.mu.ok_or_else(|| anyhow!("[params]: two_sector needs `mu`"))?,
                beta_tilde: p
                    .beta_tilde
                    .ok_or_else(|| anyhow!("[params]: two_sector needs `beta_tilde`"))?,
            },
        };
        Ok(ModelParams::baseline(p.sigma, p.alpha, p.beta, p.delta, p.tau)
            .with_population(p.population)
            .with_variant(variant))
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.config.solver;
        SolverOptions {
            damping: s.damping,
            tol: s.tol,
            max_iter: s.max_iter,
            k_shrink: s.k_shrink,
            anchor: s.anchor,
            initial_weights: None,
        }
    }

    pub fn existence_options(&self) -> ExistenceOptions {
        let e = &self.config.existence;
        ExistenceOptions {
            k_shrink: self.config.solver.k_shrink,
            use_sharper_trade_bound: e.sharper_trade_bound,
            eta_samples: e.eta_samples,
            seed: self.config.solver.seed,
            eta_override: e.eta,
        }
    }

    pub fn subset_spec(&self) -> SubsetSpec {
        SubsetSpec {
            sizes: self.config.enumerate.sizes.clone(),
            max_subsets: self.config.enumerate.max_subsets,
            seed: self.config.solver.seed,
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let s = self
            .config
            .sweep
            .as_ref()
            .ok_or_else(|| anyhow!("the sweep command needs a [sweep] section"))?;
        let p = &self.config.params;
        let mut spec = match s.panel {
            PanelKind::AlphaBeta => SweepSpec::alpha_beta(p.sigma),
            PanelKind::AlphaSigma => SweepSpec::alpha_sigma(p.beta),
        };
        if let Some(a) = s.alpha {
            spec.alpha = a;
        }
        if let Some(o) = s.other {
            spec.other = o;
        }
        Ok(spec)
    }

    pub fn urban_system(&self, n_sites: usize) -> Result<Vec<usize>> {
        let ys = match &self.config.solver.urban_system {
            Some(v) => v.clone(),
            None => (0..n_sites).collect(),
        };
        if let Some(&bad) = ys.iter().find(|&&i| i >= n_sites) {
            bail!("[solver]: urban_system names site {bad}, but only {n_sites} sites exist");
        }
        Ok(ys)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn geography(&self) -> Result<Geography> {
        let g = self
            .config
            .geography
            .as_ref()
            .ok_or_else(|| anyhow!("this command needs a [geography] section"))?;
        let res = (g.resolution[0], g.resolution[1]);
        let grid: DomainGrid = match &g.domain {
            DomainConfig::Rectangle => build_grid(g.bbox, res, |_| true)?,
            DomainConfig::Disk { center, radius } => {
                let (c, r) = (*center, *radius);
                build_grid(g.bbox, res, move |x| (x[0] - c[0]).hypot(x[1] - c[1]) < r)?
            }
            DomainConfig::Mask { file } => {
                let raster = self.read_raster(file, g)?;
                grid_from_mask(g.bbox, res, raster.iter().map(|&v| v > 0.0).collect())?
            }
        };
        let grid = Arc::new(grid);
        let amenity = match &g.amenity {
            AmenityConfig::Constant { value } => {
                let v = *value;
                amenity_from_function(&grid, move |_| v)?
            }
            AmenityConfig::Linear { base, gradient } => {
                let (b, gr) = (*base, *gradient);
                amenity_from_function(&grid, move |x| b + gr[0] * x[0] + gr[1] * x[1])?
            }
            AmenityConfig::Raster { file } => {
                let values = self.read_raster(file, g)?;
                amenity_from_raster(&grid, &values)?
            }
        };
        let sites: Vec<Site> = g
            .sites
            .iter()
            .enumerate()
            .map(|(i, s)| Site::new(i, s.position, s.productivity))
            .collect();
        let metric = match &g.metric {
            MetricConfig::Euclidean => DistanceSystem::euclidean(sites.len()),
            MetricConfig::ScaledEuclidean { scales } => DistanceSystem::scaled(scales.clone())?,
        };
        let trade = match &g.trade_matrix {
            None => trade_costs_from_metric(&sites, &metric, self.config.params.tau)?,
            Some(path) => read_trade_csv(&self.resolve(path), sites.len())?,
        };
        Ok(Geography::new(grid, sites, metric, Arc::new(amenity), trade)?)
    }

    fn read_raster(&self, file: &Path, g: &GeographyConfig) -> Result<Vec<f64>> {
        let path = self.resolve(file);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let r = parse_float_raster(&text).with_context(|| format!("parsing {}", path.display()))?;
        if [r.nx, r.ny] != g.resolution {
            bail!(
                "{}: raster is {}x{}, geography.resolution is {}x{}",
                path.display(),
                r.nx,
                r.ny,
                g.resolution[0],
                g.resolution[1]
            );
        }
        Ok(r.values)
    }
}

fn reject_two_sector_keys(p: &ParamsConfig) -> Result<()> {
    if p.mu.is_some() || p.beta_tilde.is_some() {
        bail!("[params]: `mu` and `beta_tilde` only apply to variant = \"two_sector\"");
    }
    Ok(())
}

fn read_trade_csv(path: &Path, n: usize) -> Result<TradeCostMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::with_capacity(n * n);
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), row + 1))?;
        if rec.len() != n {
            bail!("{}: row {} has {} entries, expected {n}", path.display(), row + 1, rec.len());
        }
        for field in rec.iter() {
            values.push(
                field
                    .parse::<f64>()
                    .with_context(|| format!("{}: row {}: bad number {field:?}", path.display(), row + 1))?,
            );
        }
    }
    Ok(TradeCostMatrix::explicit(n, values)?)
}

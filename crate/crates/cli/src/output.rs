//! File writers. Everything here is a pure function of its inputs so that
//! reruns produce byte-identical artifacts.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use urbsys::analysis::RegionMap;
use urbsys::geometry::DomainGrid;
use urbsys::sustainability::EquilibriumCatalog;
use urbsys::{EquilibriumSolution, Geography};

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Binary PGM with one byte per cell. PGM rows run top to bottom, so grid
/// rows are written from `ymax` down.
pub fn write_pgm(path: &Path, grid: &DomainGrid, bytes: &[u8]) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    for row in bytes.chunks(grid.nx).rev() {
        out.extend_from_slice(row);
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per site of the urban system.
pub fn write_site_csv(path: &Path, geo: &Geography, sol: &EquilibriumSolution) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "site",
        "x",
        "y",
        "productivity",
        "active",
        "weight",
        "real_wage_weight",
        "labor",
        "share",
        "wage",
        "price",
        "amenity",
        "measure",
        "farmers",
        "agri_price",
    ])?;
    let shares = sol.shares();
    for (k, &id) in sol.site_ids.iter().enumerate() {
        let s = &geo.sites[id];
        w.write_record([
            id.to_string(),
            s.position[0].to_string(),
            s.position[1].to_string(),
            s.productivity.to_string(),
            sol.active[k].to_string(),
            sol.weights[k].to_string(),
            sol.real_wage_weights[k].to_string(),
            sol.labor[k].to_string(),
            shares[k].to_string(),
            sol.wages[k].to_string(),
            sol.prices[k].to_string(),
            sol.amenity[k].to_string(),
            sol.measures[k].to_string(),
            opt(sol.farmers.as_ref().map(|f| f[k])),
            opt(sol.agri_prices.as_ref().map(|p| p[k])),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, map: &RegionMap) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["alpha", "beta", "sigma", "location", "labor_uniqueness", "gamma_ratio", "category"])?;
    for c in &map.cells {
        let loc = serde_json::to_value(c.location)?;
        w.write_record([
            c.alpha.to_string(),
            c.beta.to_string(),
            c.sigma.to_string(),
            loc.as_str().unwrap_or_default().to_string(),
            c.labor_uniqueness.to_string(),
            c.gamma_ratio.to_string(),
            c.category().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

/// One row per distinct equilibrium; list columns are `;`-separated.
pub fn write_catalog_csv(path: &Path, cat: &EquilibriumCatalog) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "subset",
        "active",
        "verdict",
        "sustainable",
        "existence_min_margin",
        "existence_passed",
        "welfare",
        "labor",
    ])?;
    for e in &cat.entries {
        let active: Vec<usize> = e
            .subset
            .iter()
            .zip(&e.solution.active)
            .filter(|(_, &a)| a)
            .map(|(&i, _)| i)
            .collect();
        let verdict = serde_json::to_value(e.sustainability.verdict)?;
        w.write_record([
            join(&e.subset),
            join(&active),
            verdict.as_str().unwrap_or_default().to_string(),
            e.sustainable().to_string(),
            e.existence_min_margin.to_string(),
            e.existence_passed.to_string(),
            e.solution.welfare.to_string(),
            join(&e.solution.labor),
        ])?;
    }
    w.flush()?;
    Ok(())
}

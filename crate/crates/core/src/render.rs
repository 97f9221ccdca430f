//! Portable rasters and SVG output. All output is a pure function of its
//! inputs, so reruns are byte-identical.

use crate::analysis::RegionMap;
use crate::geometry::{DomainGrid, Site, Tessellation, VACUUM};
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("{0} sites do not fit in a one-byte label raster")]
    TooManySites(usize),
    #[error("raster header must read `nx ny xmin ymin xmax ymax`")]
    BadHeader,
    #[error("expected {expected} raster values, found {found}")]
    ValueCount { expected: usize, found: usize },
    #[error("bad raster value {0:?}")]
    BadValue(String),
}

/// Byte value marking cells outside the domain.
pub const OUTSIDE: u8 = 255;

/// One byte per cell in row-major order (row 0 at `ymin`): the site label,
/// or [`OUTSIDE`].
pub fn label_raster(tess: &Tessellation) -> Result<Vec<u8>, RasterError> {
    if tess.n_sites() > OUTSIDE as usize {
        return Err(RasterError::TooManySites(tess.n_sites()));
    }
    Ok(tess
        .labels
        .iter()
        .map(|&l| if l == VACUUM { OUTSIDE } else { l as u8 })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloatRaster {
    pub nx: usize,
    pub ny: usize,
    pub bbox: [f64; 4],
    pub values: Vec<f64>,
}

/// Text raster: a header line `nx ny xmin ymin xmax ymax`, then one row of
/// whitespace-separated values per line. Cells outside the domain are `nan`.
pub fn format_float_raster(grid: &DomainGrid, values: &[f64]) -> String {
    let [x0, y0, x1, y1] = grid.bbox;
    let mut out = format!("{} {} {x0} {y0} {x1} {y1}\n", grid.nx, grid.ny);
    for row in values.chunks(grid.nx) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_float_raster(text: &str) -> Result<FloatRaster, RasterError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or(RasterError::BadHeader)?.split_whitespace().collect();
    if header.len() != 6 {
        return Err(RasterError::BadHeader);
    }
    let nx: usize = header[0].parse().map_err(|_| RasterError::BadHeader)?;
    let ny: usize = header[1].parse().map_err(|_| RasterError::BadHeader)?;
    let mut bbox = [0.0; 4];
    for (b, h) in bbox.iter_mut().zip(&header[2..]) {
        *b = h.parse().map_err(|_| RasterError::BadHeader)?;
    }
    let values: Vec<f64> = lines
        .flat_map(str::split_whitespace)
        .map(|t| t.parse::<f64>().map_err(|_| RasterError::BadValue(t.to_string())))
        .collect::<Result<_, _>>()?;
    if values.len() != nx * ny {
        return Err(RasterError::ValueCount {
            expected: nx * ny,
            found: values.len(),
        });
    }
    Ok(FloatRaster { nx, ny, bbox, values })
}

const PALETTE: [&str; 12] = [
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5",
    "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f",
];

/// Region-map colors by [`crate::analysis::SweepCell::category`].
pub const CATEGORY_COLORS: [&str; 6] = [
    "#d1e5f0", "#67a9cf", "#fddbc7", "#ef8a62", "#f7f7f7", "#b2182b",
];

const CANVAS: f64 = 512.0;

struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
    height: f64,
}

impl Frame {
    fn new(bbox: [f64; 4]) -> Self {
        let (w, h) = (bbox[2] - bbox[0], bbox[3] - bbox[1]);
        let scale = CANVAS / w.max(h);
        Self {
            x0: bbox[0],
            y0: bbox[1],
            sx: scale,
            sy: scale,
            height: h * scale,
        }
    }

    fn stretched(bbox: [f64; 4]) -> Self {
        Self {
            x0: bbox[0],
            y0: bbox[1],
            sx: CANVAS / (bbox[2] - bbox[0]),
            sy: CANVAS / (bbox[3] - bbox[1]),
            height: CANVAS,
        }
    }

    fn x(&self, x: f64) -> f64 {
        (x - self.x0) * self.sx
    }

    // SVG y grows downward.
    fn y(&self, y: f64) -> f64 {
        self.height - (y - self.y0) * self.sy
    }
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
}

#[derive(Debug, Clone, Default)]
pub struct SvgStyle {
    /// Marker size per site, e.g. proportional to `sqrt(L_i)`; uniform when absent.
    pub site_sizes: Option<Vec<f64>>,
    pub title: Option<String>,
}

/// Cells as run-length rectangles, label boundaries as one path, and sites
/// as square markers.
pub fn tessellation_svg(grid: &DomainGrid, tess: &Tessellation, sites: &[Site], style: &SvgStyle) -> String {
    let f = Frame::new(grid.bbox);
    let (cw, ch) = (grid.dx * f.sx, grid.dy * f.sy);
    let mut out = String::new();
    header(&mut out, (grid.bbox[2] - grid.bbox[0]) * f.sx, f.height);
    if let Some(t) = &style.title {
        let _ = writeln!(out, "<title>{}</title>", escape(t));
    }
    out.push_str("<g stroke=\"none\">\n");
    for iy in 0..grid.ny {
        let mut ix = 0;
        while ix < grid.nx {
            let label = tess.labels[iy * grid.nx + ix];
            let start = ix;
            while ix < grid.nx && tess.labels[iy * grid.nx + ix] == label {
                ix += 1;
            }
            if label == VACUUM {
                continue;
            }
            let x = f.x(grid.bbox[0] + start as f64 * grid.dx);
            let y = f.y(grid.bbox[1] + (iy + 1) as f64 * grid.dy);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{ch:.2}" fill="{}"/>"#,
                (ix - start) as f64 * cw,
                PALETTE[label as usize % PALETTE.len()]
            );
        }
    }
    out.push_str("</g>\n");

    // Cell edges separating different labels.
    let mut d = String::new();
    let label = |ix: usize, iy: usize| tess.labels[iy * grid.nx + ix];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let here = label(ix, iy);
            if ix + 1 < grid.nx && label(ix + 1, iy) != here {
                let x = f.x(grid.bbox[0] + (ix + 1) as f64 * grid.dx);
                let (ya, yb) = (f.y(grid.bbox[1] + iy as f64 * grid.dy), f.y(grid.bbox[1] + (iy + 1) as f64 * grid.dy));
                let _ = write!(d, "M{x:.2} {ya:.2}V{yb:.2}");
            }
            if iy + 1 < grid.ny && label(ix, iy + 1) != here {
                let y = f.y(grid.bbox[1] + (iy + 1) as f64 * grid.dy);
                let (xa, xb) = (f.x(grid.bbox[0] + ix as f64 * grid.dx), f.x(grid.bbox[0] + (ix + 1) as f64 * grid.dx));
                let _ = write!(d, "M{xa:.2} {y:.2}H{xb:.2}");
            }
        }
    }
    if !d.is_empty() {
        let _ = writeln!(out, r##"<path d="{d}" fill="none" stroke="#333333" stroke-width="1"/>"##);
    }

    let max_size = style
        .site_sizes
        .as_ref()
        .map(|s| s.iter().cloned().fold(0.0, f64::max))
        .unwrap_or(1.0);
    for (i, s) in sites.iter().enumerate() {
        let rel = style
            .site_sizes
            .as_ref()
            .map_or(1.0, |v| if max_size > 0.0 { v[i] / max_size } else { 0.0 });
        let half = 2.0 + 8.0 * rel;
        let (x, y) = (f.x(s.position[0]), f.y(s.position[1]));
        let fill = if tess.is_active(i) { "#000000" } else { "#ffffff" };
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="#000000" stroke-width="1"><title>site {}</title></rect>"##,
            x - half,
            y - half,
            2.0 * half,
            2.0 * half,
            s.id
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Regime categories as rectangles with the analytic boundaries as paths.
pub fn region_map_svg(map: &RegionMap) -> String {
    let (a0, a1) = (map.spec.alpha.0, map.spec.alpha.1);
    let (o0, o1) = (map.spec.other.0, map.spec.other.1);
    let (na, no) = (map.alphas.len(), map.others.len());
    // Cells are centered on the sample points.
    let (da, dob) = ((a1 - a0) / (na - 1) as f64, (o1 - o0) / (no - 1) as f64);
    let bbox = [a0 - 0.5 * da, o0 - 0.5 * dob, a1 + 0.5 * da, o1 + 0.5 * dob];
    let f = Frame::stretched(bbox);
    let mut out = String::new();
    header(&mut out, CANVAS, CANVAS);
    out.push_str("<g stroke=\"none\">\n");
    for (k, c) in map.cells.iter().enumerate() {
        let (ia, io) = (k % na, k / na);
        let x = f.x(map.alphas[ia] - 0.5 * da);
        let y = f.y(map.others[io] + 0.5 * dob);
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            da * f.sx,
            dob * f.sy,
            CATEGORY_COLORS[c.category() as usize]
        );
    }
    out.push_str("</g>\n");
    for (curve, color) in [(&map.boundary, "#000000"), (&map.labor_boundary, "#2166ac")] {
        if curve.len() < 2 {
            continue;
        }
        let mut d = String::new();
        for (k, v) in curve.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2}", if k == 0 { 'M' } else { 'L' }, f.x(v[0]), f.y(v[1]));
        }
        let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="2"/>"#);
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

//! Artifact writers. Every artifact carries the tool version and the run
//! configuration that produced it.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stability::Raster;

pub const TOOL: &str = "cyclekit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON envelope around a result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Artifact<C, R> {
    pub tool: String,
    pub version: String,
    pub config: C,
    pub result: R,
}

impl<C, R> Artifact<C, R> {
    pub fn new(config: C, result: R) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            config,
            result,
        }
    }
}

/// Shortest decimal that parses back to the same f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

fn config_line<C: Serialize>(config: &C) -> Result<String> {
    Ok(serde_json::to_string(config)?)
}

/// `# cyclekit <version>` and `# config: {...}` header lines.
pub fn csv_header<C: Serialize>(config: &C) -> Result<String> {
    Ok(format!("# {TOOL} {VERSION}\n# config: {}\n", config_line(config)?))
}

/// CSV table with a commented header carrying the configuration.
pub fn csv_table<C: Serialize>(config: &C, columns: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut s = csv_header(config)?;
    s.push_str(&columns.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    Ok(s)
}

/// Boundary curve as rows `t,re,im`.
pub fn curve_csv<C: Serialize>(config: &C, t: &[f64], z: &[Complex64]) -> Result<String> {
    let rows: Vec<Vec<String>> = t
        .iter()
        .zip(z)
        .map(|(&t, z)| vec![fmt_f64(t), fmt_f64(z.re), fmt_f64(z.im)])
        .collect();
    csv_table(config, &["t", "re", "im"], &rows)
}

/// Raster values as an `ny` x `nx` matrix, top row first.
pub fn raster_csv<C: Serialize>(config: &C, raster: &Raster) -> Result<String> {
    let mut s = csv_header(config)?;
    let w = &raster.window;
    writeln!(
        s,
        "# window: {},{},{},{} pixels: {}x{}",
        fmt_f64(w.re_min),
        fmt_f64(w.re_max),
        fmt_f64(w.im_min),
        fmt_f64(w.im_max),
        raster.nx,
        raster.ny
    )
    .unwrap();
    for row in raster.values.chunks(raster.nx) {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    Ok(s)
}

/// Gray level for a spectral radius: white at 0, black at 1 and beyond,
/// mid gray for failed pixels.
pub fn shade(rho: f64) -> u8 {
    if rho.is_nan() {
        128
    } else {
        (255.0 * (1.0 - rho).clamp(0.0, 1.0)).round() as u8
    }
}

/// Binary PGM (P5) with the configuration in a header comment.
pub fn raster_pgm<C: Serialize>(config: &C, raster: &Raster) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(raster.values.len() + 256);
    write!(
        out,
        "P5\n# {TOOL} {VERSION}\n# config: {}\n{} {}\n255\n",
        config_line(config)?,
        raster.nx,
        raster.ny
    )?;
    out.extend(raster.values.iter().map(|&v| shade(v)));
    Ok(out)
}

fn svg_open<C: Serialize>(config: &C, width: f64, height: f64, view: (f64, f64, f64, f64)) -> Result<String> {
    let meta = config_line(config)?
        .replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;");
    Ok(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"{} {} {} {}\">\n\
         <metadata>{TOOL} {VERSION} {meta}</metadata>\n",
        view.0, view.1, view.2, view.3
    ))
}

/// Raster as one rect per run of equal gray within a row.
pub fn raster_svg<C: Serialize>(config: &C, raster: &Raster) -> Result<String> {
    let (nx, ny) = (raster.nx, raster.ny);
    let mut s = svg_open(config, nx as f64, ny as f64, (0.0, 0.0, nx as f64, ny as f64))?;
    s.push_str("<g shape-rendering=\"crispEdges\">\n");
    for r in 0..ny {
        let mut c = 0;
        while c < nx {
            let g = shade(raster.get(r, c));
            let mut end = c + 1;
            while end < nx && shade(raster.get(r, end)) == g {
                end += 1;
            }
            writeln!(
                s,
                "<rect x=\"{c}\" y=\"{r}\" width=\"{}\" height=\"1\" fill=\"rgb({g},{g},{g})\"/>",
                end - c
            )
            .unwrap();
            c = end;
        }
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
    size: f64,
}

impl Frame {
    const SIZE: f64 = 600.0;
    const PAD: f64 = 20.0;

    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut xl, mut xh, mut yl, mut yh) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            xl = xl.min(x);
            xh = xh.max(x);
            yl = yl.min(y);
            yh = yh.max(y);
        }
        if !xl.is_finite() {
            (xl, xh, yl, yh) = (-1.0, 1.0, -1.0, 1.0);
        }
        let span = (xh - xl).max(yh - yl).max(1e-12);
        Self {
            x0: xl,
            y0: yh,
            scale: (Self::SIZE - 2.0 * Self::PAD) / span,
            size: Self::SIZE,
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (Self::PAD + (x - self.x0) * self.scale, Self::PAD + (self.y0 - y) * self.scale)
    }
}

fn plane_coords(p: &[f64], next: Option<&[f64]>) -> (f64, f64) {
    match (p.len(), next) {
        (1, Some(q)) => (p[0], q[0]),
        (1, None) => (p[0], p[0]),
        _ => (p[0], p[1]),
    }
}

/// Attractor points in gray with the cycle highlighted. One-dimensional
/// states are drawn as (x_n, x_{n+1}).
pub fn orbit_svg<C: Serialize>(config: &C, attractor: &[Vec<f64>], cycles: &[Vec<Vec<f64>>]) -> Result<String> {
    let pairs = |pts: &[Vec<f64>], wrap: bool| -> Vec<(f64, f64)> {
        (0..pts.len())
            .filter_map(|i| {
                let next = if i + 1 < pts.len() {
                    Some(pts[i + 1].as_slice())
                } else if wrap {
                    Some(pts[0].as_slice())
                } else if pts[i].len() == 1 {
                    return None;
                } else {
                    None
                };
                Some(plane_coords(&pts[i], next))
            })
            .collect()
    };
    let bg = pairs(attractor, false);
    let fg: Vec<Vec<(f64, f64)>> = cycles.iter().map(|c| pairs(c, true)).collect();
    let frame = Frame::fit(bg.iter().chain(fg.iter().flatten()).copied());
    let mut s = svg_open(config, frame.size, frame.size, (0.0, 0.0, frame.size, frame.size))?;
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g fill=\"#999\">\n");
    for &(x, y) in &bg {
        let (u, v) = frame.map(x, y);
        writeln!(s, "<circle cx=\"{u:.2}\" cy=\"{v:.2}\" r=\"0.8\"/>").unwrap();
    }
    s.push_str("</g>\n<g fill=\"#d62728\" stroke=\"black\" stroke-width=\"0.5\">\n");
    for &(x, y) in fg.iter().flatten() {
        let (u, v) = frame.map(x, y);
        writeln!(s, "<circle cx=\"{u:.2}\" cy=\"{v:.2}\" r=\"4\"/>").unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

/// Closed curve in the complex plane with the real axis marked.
pub fn curve_svg<C: Serialize>(config: &C, z: &[Complex64]) -> Result<String> {
    let frame = Frame::fit(z.iter().map(|p| (p.re, p.im)));
    let mut s = svg_open(config, frame.size, frame.size, (0.0, 0.0, frame.size, frame.size))?;
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let (_, axis) = frame.map(0.0, 0.0);
    writeln!(s, "<line x1=\"0\" y1=\"{axis:.2}\" x2=\"{}\" y2=\"{axis:.2}\" stroke=\"#bbb\"/>", frame.size).unwrap();
    s.push_str("<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"");
    for p in z {
        let (u, v) = frame.map(p.re, p.im);
        write!(s, "{u:.3},{v:.3} ").unwrap();
    }
    s.push_str("\"/>\n</svg>\n");
    Ok(s)
}

/// Writes bytes to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

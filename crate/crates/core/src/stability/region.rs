//! Size of the admissible multiplier region and closed-loop rasters.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{admissible_or_boundary, spectral_radius, PhiFunction};
use crate::error::{Error, Result};

/// Default left end of the real scan window for [`region_length`].
pub const DEFAULT_LENGTH_WINDOW: f64 = 1e8;
const SAMPLES_PER_DECADE: usize = 200;
const TRANSITION_TOL: f64 = 1e-11;

/// Admissible part of the real axis left of 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionLength {
    pub length: f64,
    /// Admissible intervals (lo, hi), left to right.
    pub intervals: Vec<(f64, f64)>,
    /// The region reaches the left edge of the scan window, so `length`
    /// is only a lower bound.
    pub truncated: bool,
    pub window: f64,
}

/// Scan points in (-window, 1): logarithmic in |x| for x < 0, uniform on [0, 1).
fn scan_points(window: f64) -> Vec<f64> {
    let top = window.log10();
    let bottom = -4.0f64;
    let decades = (top - bottom).max(0.0);
    let n = ((decades * SAMPLES_PER_DECADE as f64).ceil() as usize).max(1);
    let mut xs: Vec<f64> = (0..=n)
        .map(|k| -(10f64.powf(top - decades * k as f64 / n as f64)))
        .collect();
    xs[0] = -window * (1.0 - 1e-12);
    xs.push(0.0);
    for k in 1..SAMPLES_PER_DECADE {
        xs.push(k as f64 / SAMPLES_PER_DECADE as f64);
    }
    xs.push(1.0 - 1e-9);
    xs
}

fn bisect_transition<F: Fn(f64) -> bool>(f: &F, mut lo: f64, mut hi: f64, f_lo: bool) -> f64 {
    while hi - lo > TRANSITION_TOL * (1.0 + lo.abs().min(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if f(mid) == f_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Measure of {x in (-window, 1) : x admissible}. Admissibility changes
/// between scan points are located by bisection.
pub fn region_length(phi: &PhiFunction, window: f64) -> Result<RegionLength> {
    if !(window > 1.0 && window.is_finite()) {
        return Err(Error::ParameterRange(format!("window must exceed 1, got {window}")));
    }
    let adm = |x: f64| admissible_or_boundary(phi, Complex64::new(x, 0.0));
    let xs = scan_points(window);
    let flags: Vec<bool> = xs.par_iter().map(|&x| adm(x)).collect();
    let mut intervals = Vec::new();
    let mut start = if flags[0] { Some(-window) } else { None };
    for k in 1..xs.len() {
        if flags[k] == flags[k - 1] {
            continue;
        }
        let edge = bisect_transition(&adm, xs[k - 1], xs[k], flags[k - 1]);
        match start.take() {
            Some(lo) => intervals.push((lo, edge)),
            None => start = Some(edge),
        }
    }
    if let Some(lo) = start {
        intervals.push((lo, 1.0));
    }
    let length = intervals.iter().map(|(a, b)| b - a).sum();
    Ok(RegionLength {
        length,
        truncated: flags[0],
        intervals,
        window,
    })
}

/// Axis-aligned rectangle in the multiplier plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) || ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) {
            return Err(Error::ParameterRange(format!(
                "empty window [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// Center of pixel (row, col); row 0 is the top (largest imaginary part).
    pub fn pixel_center(&self, row: usize, col: usize, nx: usize, ny: usize) -> Complex64 {
        let dx = (self.re_max - self.re_min) / nx as f64;
        let dy = (self.im_max - self.im_min) / ny as f64;
        Complex64::new(
            self.re_min + (col as f64 + 0.5) * dx,
            self.im_max - (row as f64 + 0.5) * dy,
        )
    }

    pub fn pixel_area(&self, nx: usize, ny: usize) -> f64 {
        (self.re_max - self.re_min) * (self.im_max - self.im_min) / (nx * ny) as f64
    }
}

impl Default for Window {
    /// [-25, 1] x [-13, 13]
    fn default() -> Self {
        Self {
            re_min: -25.0,
            re_max: 1.0,
            im_min: -13.0,
            im_max: 13.0,
        }
    }
}

/// Row-major grid of per-pixel values, row 0 at the top.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl Raster {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.nx + col]
    }

    pub fn pixel_center(&self, row: usize, col: usize) -> Complex64 {
        self.window.pixel_center(row, col, self.nx, self.ny)
    }

    /// (row, col) of the smallest finite value.
    pub fn argmin(&self) -> Option<(usize, usize)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| (k / self.nx, k % self.nx))
    }
}

/// Closed-loop spectral radius for each pixel multiplier; NaN where root
/// extraction fails.
pub fn margin_raster(phi: &PhiFunction, window: Window, nx: usize, ny: usize) -> Result<Raster> {
    if nx == 0 || ny == 0 {
        return Err(Error::ParameterRange("raster needs at least one pixel".into()));
    }
    let values = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let mu = window.pixel_center(k / nx, k % nx, nx, ny);
            spectral_radius(phi, mu).unwrap_or(f64::NAN)
        })
        .collect();
    Ok(Raster { window, nx, ny, values })
}

/// Pixel quadrature of the admissible region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionArea {
    pub area: f64,
    /// Half a pixel per boundary pixel.
    pub error: f64,
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub boundary_pixels: usize,
}

/// Bounding box of the inverted boundary curve 1/conj(Phi(e^{it})),
/// clipped to Re < 1 and to |.| <= `limit`, padded by 2%.
pub fn inverted_boundary_window(phi: &PhiFunction, limit: f64) -> Window {
    let n = (16 * phi.loop_degree()).max(4096);
    let (mut lo_re, mut hi_re, mut lo_im, mut hi_im) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..n {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let w = phi.eval(Complex64::from_polar(1.0, t));
        let z = if w.norm() > 0.0 { w.conj().inv() } else { Complex64::new(-limit, 0.0) };
        let z = Complex64::new(z.re.clamp(-limit, limit), z.im.clamp(-limit, limit));
        lo_re = lo_re.min(z.re);
        hi_re = hi_re.max(z.re);
        lo_im = lo_im.min(z.im);
        hi_im = hi_im.max(z.im);
    }
    let hi_re = hi_re.min(1.0);
    let pad_re = 0.02 * (hi_re - lo_re).max(1e-3);
    let pad_im = 0.02 * (hi_im - lo_im).max(1e-3);
    Window {
        re_min: lo_re - pad_re,
        re_max: hi_re,
        im_min: lo_im - pad_im,
        im_max: hi_im + pad_im,
    }
}

/// Area of {z : Re z < 1, z admissible} counted over an `nx` x `ny` grid
/// on `window` (default: the inverted boundary bounding box).
pub fn region_area(phi: &PhiFunction, window: Option<Window>, nx: usize, ny: usize) -> Result<RegionArea> {
    if nx < 2 || ny < 2 {
        return Err(Error::ParameterRange("area grid needs at least 2 x 2 pixels".into()));
    }
    let window = window.unwrap_or_else(|| inverted_boundary_window(phi, 1e6));
    let inside: Vec<bool> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let z = window.pixel_center(k / nx, k % nx, nx, ny);
            z.re < 1.0 && admissible_or_boundary(phi, z)
        })
        .collect();
    let at = |r: usize, c: usize| inside[r * nx + c];
    let mut count = 0usize;
    let mut boundary = 0usize;
    for r in 0..ny {
        for c in 0..nx {
            let v = at(r, c);
            count += v as usize;
            let differs = (r > 0 && at(r - 1, c) != v)
                || (r + 1 < ny && at(r + 1, c) != v)
                || (c > 0 && at(r, c - 1) != v)
                || (c + 1 < nx && at(r, c + 1) != v);
            boundary += differs as usize;
        }
    }
    let pa = window.pixel_area(nx, ny);
    Ok(RegionArea {
        area: count as f64 * pa,
        error: 0.5 * pa * boundary as f64,
        window,
        nx,
        ny,
        boundary_pixels: boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffgen::{MixingCoefficients, MixingParams};
    use approx::assert_abs_diff_eq;

    fn phi(n: usize, t: usize, gamma: f64) -> PhiFunction {
        let p = MixingParams::new(n, t, 1.0, 1.0, gamma).unwrap();
        PhiFunction::from_coefficients(&MixingCoefficients::generate(p).unwrap()).unwrap()
    }

    #[test]
    fn identity_length() {
        let r = region_length(&PhiFunction::identity(), 1e4).unwrap();
        assert_abs_diff_eq!(r.length, 2.0, epsilon = 1e-8);
        assert!(!r.truncated);
        assert_eq!(r.intervals.len(), 1);
    }

    #[test]
    fn mobius_length() {
        let r = region_length(&phi(1, 1, 0.9), DEFAULT_LENGTH_WINDOW).unwrap();
        assert_abs_diff_eq!(r.length, 20.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.intervals[0].0, -19.0, epsilon = 1e-6);
    }

    #[test]
    fn truncated_when_window_too_small() {
        let r = region_length(&phi(1, 1, 0.9), 10.0).unwrap();
        assert!(r.truncated);
        assert_abs_diff_eq!(r.length, 11.0, epsilon = 1e-6);
        assert!(region_length(&PhiFunction::identity(), 0.5).is_err());
    }

    #[test]
    fn identity_area() {
        let a = region_area(&PhiFunction::identity(), None, 400, 400).unwrap();
        assert!((a.area - std::f64::consts::PI).abs() <= a.error.max(1e-3), "{a:?}");
        assert!(a.error < 0.05);
    }

    #[test]
    fn raster_layout() {
        let w = Window::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let r = margin_raster(&PhiFunction::identity(), w, 21, 21).unwrap();
        assert_eq!(r.argmin(), Some((10, 10)));
        // top-left pixel is (-1 + h, 1 - h)
        let z = r.pixel_center(0, 0);
        assert!(z.re < 0.0 && z.im > 0.0);
        assert_abs_diff_eq!(r.get(0, 0), z.norm(), epsilon = 1e-12);
        assert!(Window::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(margin_raster(&PhiFunction::identity(), w, 0, 3).is_err());
    }
}

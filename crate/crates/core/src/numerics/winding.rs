//! Zero counting inside a disk by the argument principle.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::ComplexPoly;
use crate::error::{Error, Result};

/// Relative modulus below which a sampled value counts as a zero on the circle.
pub const DELTA_CIRCLE: f64 = 1e-9;

/// Multiplicative radius nudge used by [`count_zeros_in_disk_perturbed`].
pub const RADIUS_NUDGE: f64 = 1e-6;
pub const MAX_NUDGES: usize = 5;

const MAX_BISECTION_DEPTH: u32 = 40;
const EVAL_BUDGET: usize = 2_000_000;

struct Walk<'a> {
    p: &'a ComplexPoly,
    radius: f64,
    evals: usize,
    min_mod: f64,
    max_mod: f64,
}

impl Walk<'_> {
    fn value(&mut self, t: f64) -> Complex64 {
        self.evals += 1;
        let v = self.p.eval(Complex64::from_polar(self.radius, t));
        let m = v.norm();
        self.min_mod = self.min_mod.min(m);
        self.max_mod = self.max_mod.max(m);
        v
    }

    /// Phase increment of the curve over [t0, t1], refined until each
    /// sub-increment is below pi/2.
    fn increment(&mut self, t0: f64, v0: Complex64, t1: f64, v1: Complex64, depth: u32) -> Result<f64> {
        if v0.norm() == 0.0 || v1.norm() == 0.0 {
            return Err(self.degenerate());
        }
        let d = (v1 / v0).arg();
        if d.abs() < FRAC_PI_2 {
            return Ok(d);
        }
        if depth >= MAX_BISECTION_DEPTH || self.evals >= EVAL_BUDGET {
            return Err(self.degenerate());
        }
        let tm = 0.5 * (t0 + t1);
        let vm = self.value(tm);
        Ok(self.increment(t0, v0, tm, vm, depth + 1)? + self.increment(tm, vm, t1, v1, depth + 1)?)
    }

    fn degenerate(&self) -> Error {
        Error::BoundaryDegeneracy {
            radius: self.radius,
            min_modulus: self.min_mod,
        }
    }
}

/// Number of zeros (with multiplicity) of `p` strictly inside `|z| < radius`.
///
/// Fails with [`Error::BoundaryDegeneracy`] when the curve `p(radius e^{it})`
/// comes within `DELTA_CIRCLE * max|p|` of the origin.
pub fn count_zeros_in_disk(p: &ComplexPoly, radius: f64) -> Result<usize> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::ParameterRange(format!("radius must be positive, got {radius}")));
    }
    if p.is_zero() {
        return Err(Error::BoundaryDegeneracy { radius, min_modulus: 0.0 });
    }
    let deg = p.degree();
    if deg == 0 {
        return Ok(0);
    }
    let samples = (8 * (deg + 1)).max(64);
    let mut walk = Walk {
        p,
        radius,
        evals: 0,
        min_mod: f64::INFINITY,
        max_mod: 0.0,
    };
    let step = 2.0 * PI / samples as f64;
    let values: Vec<Complex64> = (0..samples).map(|k| walk.value(k as f64 * step)).collect();

    let mut total = 0.0;
    for k in 0..samples {
        let (t0, v0) = (k as f64 * step, values[k]);
        let (t1, v1) = if k + 1 == samples {
            (2.0 * PI, values[0])
        } else {
            ((k + 1) as f64 * step, values[k + 1])
        };
        total += walk.increment(t0, v0, t1, v1, 0)?;
    }
    if walk.min_mod < DELTA_CIRCLE * walk.max_mod {
        return Err(walk.degenerate());
    }
    let winding = total / (2.0 * PI);
    let count = winding.round();
    if (winding - count).abs() > 0.25 || count < 0.0 {
        return Err(walk.degenerate());
    }
    Ok(count as usize)
}

/// Like [`count_zeros_in_disk`], retrying with radii nudged by
/// `1 ± k * RADIUS_NUDGE` when the circle passes through a zero.
pub fn count_zeros_in_disk_perturbed(p: &ComplexPoly, radius: f64) -> Result<usize> {
    let mut last = match count_zeros_in_disk(p, radius) {
        Ok(n) => return Ok(n),
        Err(e @ Error::BoundaryDegeneracy { .. }) => e,
        Err(e) => return Err(e),
    };
    for k in 0..MAX_NUDGES {
        let mag = (k / 2 + 1) as f64 * RADIUS_NUDGE;
        let factor = if k % 2 == 0 { 1.0 + mag } else { 1.0 - mag };
        match count_zeros_in_disk(p, radius * factor) {
            Ok(n) => return Ok(n),
            Err(e @ Error::BoundaryDegeneracy { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

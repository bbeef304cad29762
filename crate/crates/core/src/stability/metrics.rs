//! Boundary curve of Phi(D) and the I/J functionals built on it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{schur_stable, PhiFunction};
use crate::error::{Error, Result};
use crate::stability::admissible_or_boundary;

/// Upper bound on the number of samples an adaptive curve may use.
pub const MAX_CURVE_POINTS: usize = 1 << 20;
/// Real-axis crossings must satisfy |Im| below this after refinement.
pub const AXIS_TOLERANCE: f64 = 1e-10;
const CROSSING_T_TOL: f64 = 1e-12;
const INITIAL_SAMPLES: usize = 64;

/// A closed curve sampled at increasing parameters in [0, 2 pi].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub t_samples: Vec<f64>,
    pub points: Vec<Complex64>,
}

impl BoundaryCurve {
    /// Samples `f` on [0, 2 pi], bisecting every parameter interval whose
    /// chord is longer than `resolution`.
    pub fn sample<F: Fn(f64) -> Complex64>(f: F, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::ParameterRange(format!("resolution must be positive, got {resolution}")));
        }
        let mut t_samples = vec![0.0];
        let mut points = vec![f(0.0)];
        for k in 0..INITIAL_SAMPLES {
            let t0 = 2.0 * PI * k as f64 / INITIAL_SAMPLES as f64;
            let t1 = 2.0 * PI * (k + 1) as f64 / INITIAL_SAMPLES as f64;
            // depth-first refinement of [t0, t1]
            let mut stack = vec![(t1, f(t1))];
            let (mut ta, mut za) = (t0, *points.last().unwrap());
            while let Some(&(tb, zb)) = stack.last() {
                if (zb - za).norm() > resolution && tb - ta > 1e-15 {
                    let tm = 0.5 * (ta + tb);
                    stack.push((tm, f(tm)));
                    if t_samples.len() + stack.len() > MAX_CURVE_POINTS {
                        return Err(Error::ResolutionFailure);
                    }
                } else {
                    if (zb - za).norm() > resolution {
                        return Err(Error::ResolutionFailure);
                    }
                    stack.pop();
                    t_samples.push(tb);
                    points.push(zb);
                    ta = tb;
                    za = zb;
                }
            }
        }
        Ok(Self { t_samples, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest distance between consecutive samples.
    pub fn max_gap(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max)
    }
}

/// Image of the unit circle under Phi, with chords no longer than `resolution`.
pub fn boundary_curve(phi: &PhiFunction, resolution: f64) -> Result<BoundaryCurve> {
    BoundaryCurve::sample(|t| phi.eval(Complex64::from_polar(1.0, t)), resolution)
}

fn phi_on_circle(phi: &PhiFunction, t: f64) -> Complex64 {
    phi.eval(Complex64::from_polar(1.0, t))
}

fn half_circle_samples(phi: &PhiFunction) -> usize {
    (16 * phi.loop_degree()).max(2048)
}

/// Parameters t in [0, pi] at which Phi(e^{it}) is real: the endpoints
/// plus interior sign changes of Im Phi refined by bisection.
pub fn real_axis_crossings(phi: &PhiFunction) -> Vec<f64> {
    let n = half_circle_samples(phi);
    let im = |t: f64| phi_on_circle(phi, t).im;
    let mut out = vec![0.0];
    let mut prev_t = 0.0f64;
    let mut prev = 0.0f64;
    for k in 1..n {
        let t = PI * k as f64 / n as f64;
        let v = im(t);
        if v == 0.0 {
            out.push(t);
        } else if prev != 0.0 && prev.signum() != v.signum() {
            let (mut lo, mut hi, mut flo) = (prev_t, t, prev);
            while hi - lo > CROSSING_T_TOL {
                let mid = 0.5 * (lo + hi);
                let fm = im(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let tc = 0.5 * (lo + hi);
            if im(tc).abs() < AXIS_TOLERANCE {
                out.push(tc);
            }
        }
        prev_t = t;
        prev = v;
    }
    if im(PI).abs() < AXIS_TOLERANCE {
        out.push(PI);
    }
    out
}

/// Smallest real value of Phi on the upper half circle where the curve
/// meets the real axis.
pub fn i_metric(phi: &PhiFunction) -> Result<f64> {
    let crossings = real_axis_crossings(phi);
    if crossings.len() < 2 {
        return Err(Error::CrossingDetection);
    }
    Ok(crossings
        .iter()
        .map(|&t| phi_on_circle(phi, t).re)
        .fold(f64::INFINITY, f64::min))
}

/// Smallest real part of Phi(e^{it}) over t in [0, pi].
pub fn j_metric(phi: &PhiFunction) -> f64 {
    let n = half_circle_samples(phi);
    let re = |t: f64| phi_on_circle(phi, t).re;
    let ts: Vec<f64> = (0..=n).map(|k| PI * k as f64 / n as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| re(t)).collect();
    let mut best = vals[0].min(vals[n]);
    for k in 1..n {
        if vals[k] <= vals[k - 1] && vals[k] <= vals[k + 1] {
            best = best.min(golden_section_min(re, ts[k - 1], ts[k + 1]));
        }
    }
    best
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd).min(f(0.5 * (a + b)))
}

/// Bounds mu* = 1/|I| and R = 1/(2|J|); infinite when a metric is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityBounds {
    pub mu_star: f64,
    pub r: f64,
}

impl StabilityBounds {
    pub fn unbounded(&self) -> bool {
        self.mu_star.is_infinite() || self.r.is_infinite()
    }
}

pub fn stability_bounds(i_value: f64, j_value: f64) -> Result<StabilityBounds> {
    if i_value > 0.0 || j_value > 0.0 || i_value.is_nan() || j_value.is_nan() {
        return Err(Error::ParameterRange(format!(
            "metrics must be <= 0, got I = {i_value}, J = {j_value}"
        )));
    }
    let inv = |v: f64| if v == 0.0 { f64::INFINITY } else { 1.0 / v.abs() };
    Ok(StabilityBounds {
        mu_star: inv(i_value),
        r: 0.5 * inv(j_value),
    })
}

/// Whether Im Phi(e^{it}) keeps one sign on (0, pi), ignoring values below
/// `AXIS_TOLERANCE` times the curve scale.
pub fn check_typically_real(phi: &PhiFunction, samples: usize) -> bool {
    let n = samples.max(16);
    let vals: Vec<Complex64> = (1..n).map(|k| phi_on_circle(phi, PI * k as f64 / n as f64)).collect();
    let scale = vals.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let mut sign = 0.0;
    for z in &vals {
        if z.im.abs() <= AXIS_TOLERANCE * scale {
            continue;
        }
        if sign == 0.0 {
            sign = z.im.signum();
        } else if z.im.signum() != sign {
            return false;
        }
    }
    true
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

fn segment_distance(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> f64 {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

/// True iff the closed polygon through the curve samples does not meet
/// itself: non-neighbouring segments stay apart by more than 1e-9 of the
/// curve scale, and neighbouring segments do not fold back onto each other.
/// Collinear overlaps count as intersections.
pub fn check_boundary_simple(curve: &BoundaryCurve) -> bool {
    let pts = &curve.points;
    if pts.len() < 4 {
        return true;
    }
    let m = pts.len() - 1;
    let scale = pts.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
    let xmin = |i: usize| pts[i].re.min(pts[i + 1].re);
    let xmax = |i: usize| pts[i].re.max(pts[i + 1].re);
    // sweep over segments ordered by their left end
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| xmin(a).total_cmp(&xmin(b)));
    for (k, &i) in order.iter().enumerate() {
        let (a1, a2) = (pts[i], pts[i + 1]);
        let (ylo, yhi) = (a1.im.min(a2.im) - tol, a1.im.max(a2.im) + tol);
        for &j in &order[k + 1..] {
            if xmin(j) > xmax(i) + tol {
                break;
            }
            let (b1, b2) = (pts[j], pts[j + 1]);
            if b1.im.max(b2.im) < ylo || b1.im.min(b2.im) > yhi {
                continue;
            }
            let (lo, hi) = (i.min(j), i.max(j));
            let folded = if hi == lo + 1 {
                // shared vertex pts[hi]; the far ends must not lie on the other segment
                point_segment_distance(pts[lo], pts[hi], pts[hi + 1]) <= tol
                    || point_segment_distance(pts[hi + 1], pts[lo], pts[hi]) <= tol
            } else if lo == 0 && hi == m - 1 {
                point_segment_distance(pts[1], pts[m - 1], pts[m]) <= tol
                    || point_segment_distance(pts[m - 1], pts[0], pts[1]) <= tol
            } else {
                segment_distance(a1, a2, b1, b2) <= tol
            };
            if folded {
                return false;
            }
        }
    }
    true
}

/// Per-multiplier admissibility together with the closed-loop margin and
/// the I/J bounds of the given Phi.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub admissible: Vec<bool>,
    pub margin: f64,
    pub i_value: f64,
    pub j_value: f64,
    pub case_a_bound: f64,
    pub case_b_bound: f64,
}

impl StabilityReport {
    pub fn all_admissible(&self) -> bool {
        self.admissible.iter().all(|&a| a)
    }
}

pub fn stability_report(phi: &PhiFunction, multipliers: &[Complex64]) -> Result<StabilityReport> {
    let admissible = multipliers.iter().map(|&mu| admissible_or_boundary(phi, mu)).collect();
    let (_, margin) = schur_stable(phi, multipliers)?;
    let i_value = i_metric(phi)?;
    let j_value = j_metric(phi);
    let (case_a_bound, case_b_bound) = match stability_bounds(i_value, j_value) {
        Ok(b) => (b.mu_star, b.r),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(StabilityReport {
        admissible,
        margin,
        i_value,
        j_value,
        case_a_bound,
        case_b_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffgen::{MixingCoefficients, MixingParams};
    use crate::numerics::RealPoly;
    use approx::assert_abs_diff_eq;

    fn phi(n: usize, t: usize, gamma: f64) -> PhiFunction {
        let p = MixingParams::new(n, t, 1.0, 1.0, gamma).unwrap();
        PhiFunction::from_coefficients(&MixingCoefficients::generate(p).unwrap()).unwrap()
    }

    #[test]
    fn identity_metrics() {
        let f = PhiFunction::identity();
        assert_abs_diff_eq!(i_metric(&f).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(j_metric(&f), -1.0, epsilon = 1e-12);
        let b = stability_bounds(-1.0, -1.0).unwrap();
        assert_eq!((b.mu_star, b.r), (1.0, 0.5));
    }

    #[test]
    fn mobius_metrics() {
        let f = phi(1, 1, 0.9);
        let i = i_metric(&f).unwrap();
        assert_abs_diff_eq!(i, -1.0 / 19.0, epsilon = 1e-12);
        let b = stability_bounds(i, j_metric(&f)).unwrap();
        assert_abs_diff_eq!(b.mu_star, 19.0, epsilon = 1e-9);
    }

    #[test]
    fn i_not_above_j() {
        for (n, t, g) in [(3, 1, 0.0), (5, 3, 0.7), (8, 2, 0.3), (6, 4, 0.5)] {
            let f = phi(n, t, g);
            assert!(i_metric(&f).unwrap() >= j_metric(&f) - 1e-12, "{n} {t} {g}");
        }
    }

    #[test]
    fn bounds_edge_cases() {
        assert!(stability_bounds(0.0, -0.5).unwrap().unbounded());
        assert_abs_diff_eq!(stability_bounds(-0.25, -0.5).unwrap().r, 1.0);
        assert!(stability_bounds(0.1, -1.0).is_err());
        assert!(stability_bounds(f64::NAN, -1.0).is_err());
    }

    #[test]
    fn curve_respects_resolution() {
        let c = boundary_curve(&phi(5, 3, 0.7), 1e-3).unwrap();
        assert!(c.max_gap() <= 1e-3);
        assert_abs_diff_eq!(*c.t_samples.last().unwrap(), 2.0 * PI, epsilon = 1e-12);
        assert!(BoundaryCurve::sample(|t| Complex64::new(t, 0.0), 0.0).is_err());
    }

    #[test]
    fn simplicity() {
        let circle = BoundaryCurve::sample(|t| Complex64::from_polar(1.0, t), 0.05).unwrap();
        assert!(check_boundary_simple(&circle));
        let doubled = BoundaryCurve::sample(|t| Complex64::from_polar(1.0, 2.0 * t), 0.05).unwrap();
        assert!(!check_boundary_simple(&doubled));
        // figure eight
        let eight = BoundaryCurve::sample(|t| Complex64::new(t.sin(), (2.0 * t).sin()), 0.02).unwrap();
        assert!(!check_boundary_simple(&eight));
        assert!(check_boundary_simple(&boundary_curve(&phi(5, 3, 0.0), 1e-3).unwrap()));
        // damping makes the curve loop around the origin
        assert!(!check_boundary_simple(&boundary_curve(&phi(5, 3, 0.7), 1e-3).unwrap()));
    }

    #[test]
    fn typically_real() {
        assert!(check_typically_real(&PhiFunction::identity(), 1000));
        assert!(check_typically_real(&phi(1, 1, 0.9), 1000));
        // z^2 has Im of both signs on the upper half circle
        let sq = PhiFunction::new(
            RealPoly::new(vec![0.0, 1.0]),
            RealPoly::from_coeffs_untrimmed(vec![0.0, 1.0]),
            0.0,
            1,
        )
        .unwrap();
        assert!(!check_typically_real(&sq, 1000));
    }

    #[test]
    fn report_for_stable_pair() {
        let f = phi(1, 1, 0.9);
        let r = stability_report(&f, &[Complex64::new(-10.0, 0.0), Complex64::new(-30.0, 0.0)]).unwrap();
        assert_eq!(r.admissible, vec![true, false]);
        assert!(!r.all_admissible());
        assert!(r.margin < 0.0);
        assert_abs_diff_eq!(r.case_a_bound, 19.0, epsilon = 1e-9);
    }
}

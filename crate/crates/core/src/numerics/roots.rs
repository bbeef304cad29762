//! All roots of a complex polynomial by Aberth–Ehrlich simultaneous iteration.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::ComplexPoly;
use crate::error::{Error, Result};

/// Accepted residual: |p(z)| <= RESIDUAL_TOL * max|c_k| * max(1, |z|)^deg.
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 600;

struct Eval {
    /// p(z) / p'(z)
    newton: Complex64,
    /// |p(z)| / max(1,|z|)^deg
    scaled_residual: f64,
    /// rounding-error bound for the scaled residual
    scaled_bound: f64,
}

/// Evaluates p and p' at z, switching to the reversed polynomial outside the
/// unit circle so that large |z| cannot overflow.
fn evaluate(coeffs: &[Complex64], z: Complex64) -> Eval {
    let n = coeffs.len() - 1;
    let zero = Complex64::new(0.0, 0.0);
    if z.norm() <= 1.0 {
        let (mut p, mut dp) = (zero, zero);
        let mut s = 0.0;
        let az = z.norm();
        for &c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
            s = s * az + c.norm();
        }
        Eval {
            newton: if dp.norm() == 0.0 { p * 1e-3 } else { p / dp },
            scaled_residual: p.norm(),
            scaled_bound: s,
        }
    } else {
        let w = z.inv();
        let aw = w.norm();
        let (mut r, mut dr) = (zero, zero);
        let mut s = 0.0;
        for &c in coeffs.iter() {
            dr = dr * w + r;
            r = r * w + c;
            s = s * aw + c.norm();
        }
        let denom = r * n as f64 - w * dr;
        Eval {
            newton: if denom.norm() == 0.0 { z * 1e-3 } else { z * r / denom },
            scaled_residual: r.norm(),
            scaled_bound: s,
        }
    }
}

/// Starting points on circles whose radii come from the upper convex hull of
/// (k, log|c_k|).
fn initial_guesses(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let pts: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (k, c.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1) - (b.1 - a.1) * (p.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut guesses = Vec::with_capacity(n);
    let sigma = 0.7;
    for win in hull.windows(2) {
        let (i, li) = win[0];
        let (j, lj) = win[1];
        let count = j - i;
        let radius = ((li - lj) / count as f64).exp();
        for m in 0..count {
            let angle = 2.0 * PI * (m as f64) / count as f64 + 2.0 * PI * i as f64 / n as f64 + sigma;
            guesses.push(Complex64::from_polar(radius, angle));
        }
    }
    guesses
}

/// All complex roots of `p`, as a multiset of cardinality `deg p`.
pub fn poly_roots(p: &ComplexPoly) -> Result<Vec<Complex64>> {
    let deg = p.degree();
    if p.is_zero() || deg < 1 {
        return Err(Error::ConstantPolynomial);
    }
    let coeffs = p.coeffs();
    let zeros_at_origin = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let reduced = &coeffs[zeros_at_origin..];
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    if reduced.len() == 1 {
        return Ok(roots);
    }
    if reduced.len() == 2 {
        roots.push(-reduced[0] / reduced[1]);
        return Ok(roots);
    }

    let max_c = reduced.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z = initial_guesses(reduced);
    let m = z.len();
    let mut done = vec![false; m];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && done.iter().any(|d| !d) {
        iterations += 1;
        for i in 0..m {
            if done[i] {
                continue;
            }
            let e = evaluate(reduced, z[i]);
            if e.scaled_residual <= 4.0 * f64::EPSILON * e.scaled_bound {
                done[i] = true;
                continue;
            }
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let d = z[i] - zj;
                    if d.norm() > 0.0 {
                        sum += d.inv();
                    }
                }
            }
            let step = e.newton / (Complex64::new(1.0, 0.0) - e.newton * sum);
            let step = if step.is_finite() { step } else { e.newton };
            z[i] -= step;
            if step.norm() <= 2.0 * f64::EPSILON * z[i].norm() {
                done[i] = true;
            }
        }
    }

    let bad = z
        .iter()
        .any(|&zi| !zi.is_finite() || evaluate(reduced, zi).scaled_residual > RESIDUAL_TOL * max_c);
    if bad {
        roots.extend(z);
        return Err(Error::RootFailure { iterations, best: roots });
    }
    roots.extend(z);
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn quadratic_examples() {
        let r = sorted(poly_roots(&ComplexPoly::from_real(&[-1.0, 0.0, 1.0])).unwrap());
        assert!((r[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(1.0, 0.0)).norm() < 1e-14);

        let r = sorted(poly_roots(&ComplexPoly::from_real(&[1.0, 1.0, 1.0])).unwrap());
        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        assert!((r[0] - w.conj()).norm() < 1e-14);
        assert!((r[1] - w).norm() < 1e-14);
    }

    #[test]
    fn henon_trace_det_quadratic() {
        // roots of mu^2 - tr*mu + det with tr = -1.76779, det = -0.3
        let p = ComplexPoly::from_real(&[-0.3, 1.76779, 1.0]);
        let r = sorted(poly_roots(&p).unwrap());
        let disc = (1.76779f64 * 1.76779 + 1.2).sqrt();
        let lo = (-1.76779 - disc) / 2.0;
        let hi = (-1.76779 + disc) / 2.0;
        assert!((r[0].re - lo).abs() < 1e-12 && r[0].im.abs() < 1e-12);
        assert!((r[1].re - hi).abs() < 1e-12 && r[1].im.abs() < 1e-12);
        assert!((lo + 1.92373).abs() < 1e-5 && (hi - 0.15594).abs() < 1e-5);
    }

    #[test]
    fn zero_roots_and_linear() {
        let r = poly_roots(&ComplexPoly::from_real(&[0.0, 0.0, 2.0, -4.0])).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert!(r.iter().any(|z| (z - Complex64::new(0.5, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn constant_is_rejected() {
        assert!(matches!(
            poly_roots(&ComplexPoly::from_real(&[2.0])),
            Err(Error::ConstantPolynomial)
        ));
    }

    #[test]
    fn widely_spread_moduli() {
        let planted = [1e-3, 0.5, 3.0, 40.0, 1e3].map(|r| Complex64::from_polar(r, r));
        let p = ComplexPoly::from_roots(&planted);
        let r = poly_roots(&p).unwrap();
        for want in planted {
            let best = r.iter().map(|z| (z - want).norm() / want.norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "{want} {best}");
        }
    }

    #[test]
    fn high_degree_unit_roots() {
        let n = 400;
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        c[0] = Complex64::new(-1.0, 0.0);
        c[n] = Complex64::new(1.0, 0.0);
        let r = poly_roots(&ComplexPoly::new(c)).unwrap();
        assert_eq!(r.len(), n);
        assert!(r.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }
}

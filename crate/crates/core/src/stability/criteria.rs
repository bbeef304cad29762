//! Multiplier admissibility and the closed-loop characteristic polynomial.

use num_complex::Complex64;

use super::PhiFunction;
use crate::error::Result;
use crate::numerics::{count_zeros_in_disk, poly_roots, ComplexPoly};

/// Whether `mu` lies in the admissible region, i.e. `1/conj(mu)` lies
/// outside the image of the closed unit disk under Phi.
///
/// Decided by counting the zeros of `num(z) - w den(z)` in the unit disk,
/// which stays correct when Phi is not univalent. A multiplier on the region
/// boundary yields `Error::BoundaryDegeneracy`; callers treat it as
/// inadmissible.
pub fn multiplier_admissible(phi: &PhiFunction, mu: Complex64) -> Result<bool> {
    if mu.norm() == 0.0 {
        return Ok(true);
    }
    let w = mu.conj().inv();
    let poly = phi.numerator().add(&phi.denominator().scale(-w));
    Ok(count_zeros_in_disk(&poly, 1.0)? == 0)
}

/// Admissibility with boundary cases mapped to `false`.
pub fn admissible_or_boundary(phi: &PhiFunction, mu: Complex64) -> bool {
    multiplier_admissible(phi, mu).unwrap_or(false)
}

/// One factor `(1 - gamma p(z))^T - (1-gamma)^T mu z q(z)^T`.
pub fn loop_factor(phi: &PhiFunction, mu: Complex64) -> ComplexPoly {
    phi.denominator().add(&phi.numerator().scale(-mu))
}

/// f(z) = prod_j [(1 - gamma p)^T - (1-gamma)^T mu_j z q^T].
pub fn characteristic_poly(phi: &PhiFunction, multipliers: &[Complex64]) -> ComplexPoly {
    multipliers
        .iter()
        .fold(ComplexPoly::one(), |acc, &mu| acc.mul(&loop_factor(phi, mu)))
}

/// Spectral radius of the closed loop for a single multiplier: the largest
/// |lambda| among roots of lambda^{NT} f_mu(1/lambda).
pub fn spectral_radius(phi: &PhiFunction, mu: Complex64) -> Result<f64> {
    let factor = loop_factor(phi, mu);
    let lambda_poly = factor.reversed(phi.loop_degree());
    if lambda_poly.degree() == 0 {
        return Ok(0.0);
    }
    Ok(poly_roots(&lambda_poly)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Root test on the characteristic polynomial: returns (stable, margin) with
/// margin `1 - max|lambda|`.
pub fn schur_stable(phi: &PhiFunction, multipliers: &[Complex64]) -> Result<(bool, f64)> {
    let mut radius: f64 = 0.0;
    for &mu in multipliers {
        radius = radius.max(spectral_radius(phi, mu)?);
    }
    let margin = 1.0 - radius;
    Ok((margin > 0.0, margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffgen::{MixingCoefficients, MixingParams};
    use crate::error::Error;
    use crate::numerics::{RealPoly, count_zeros_in_disk};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn phi(n: usize, t: usize, gamma: f64) -> PhiFunction {
        let p = MixingParams::new(n, t, 1.0, 1.0, gamma).unwrap();
        PhiFunction::from_coefficients(&MixingCoefficients::generate(p).unwrap()).unwrap()
    }

    #[test]
    fn admissibility_examples() {
        let id = PhiFunction::identity();
        assert!(multiplier_admissible(&id, c(0.5, 0.0)).unwrap());
        assert!(!multiplier_admissible(&id, c(-2.0, 0.0)).unwrap());
        assert!(multiplier_admissible(&id, c(0.0, 0.0)).unwrap());
        let mob = phi(1, 1, 0.9);
        assert!(multiplier_admissible(&mob, c(-15.0, 0.0)).unwrap());
        assert!(multiplier_admissible(&mob, c(-18.9, 0.0)).unwrap());
        assert!(!multiplier_admissible(&mob, c(-19.1, 0.0)).unwrap());
        assert!(!multiplier_admissible(&mob, c(1.1, 0.0)).unwrap());
    }

    #[test]
    fn boundary_multiplier_is_degenerate() {
        let id = PhiFunction::identity();
        assert!(matches!(
            multiplier_admissible(&id, c(0.0, 1.0)),
            Err(Error::BoundaryDegeneracy { .. })
        ));
        assert!(!admissible_or_boundary(&id, c(0.0, 1.0)));
    }

    #[test]
    fn characteristic_poly_examples() {
        let id = PhiFunction::identity();
        let f = characteristic_poly(&id, &[c(0.7, 0.2)]);
        assert_eq!(f.coeffs(), &[c(1.0, 0.0), c(-0.7, -0.2)]);

        // gamma = 0, T = 2, N = 1: factor 1 - 4z
        let q = RealPoly::new(vec![1.0]);
        let p = RealPoly::from_coeffs_untrimmed(vec![0.0, 1.0]);
        let ph = PhiFunction::new(q, p, 0.0, 2).unwrap();
        let f = characteristic_poly(&ph, &[c(4.0, 0.0)]);
        assert_eq!(f.coeffs(), &[c(1.0, 0.0), c(-4.0, 0.0)]);
        assert_eq!(count_zeros_in_disk(&f, 1.0).unwrap(), 1);
        let (stable, margin) = schur_stable(&ph, &[c(4.0, 0.0)]).unwrap();
        assert!(!stable);
        assert_abs_diff_eq!(margin, -3.0, epsilon = 1e-12);
    }

    #[test]
    fn value_at_one_identity() {
        let ph = phi(4, 3, 0.6);
        let mus = [c(-3.0, 0.5), c(0.2, 0.0), c(-1.5, -2.0)];
        let f = characteristic_poly(&ph, &mus);
        let want = mus
            .iter()
            .fold(c((0.4f64).powi(9), 0.0), |acc, &m| acc * (c(1.0, 0.0) - m));
        let got = f.eval(c(1.0, 0.0));
        assert!((got - want).norm() <= 1e-9 * want.norm());
        assert!(f.degree() <= 12 * 3);
    }

    #[test]
    fn schur_examples() {
        let id = PhiFunction::identity();
        let (s, m) = schur_stable(&id, &[c(0.5, 0.0)]).unwrap();
        assert!(s);
        assert_abs_diff_eq!(m, 0.5, epsilon = 1e-15);
        let (s, m) = schur_stable(&id, &[c(-2.0, 0.0)]).unwrap();
        assert!(!s);
        assert_abs_diff_eq!(m, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn henon_fixed_point_routes_agree() {
        let ph = phi(1, 1, 0.5);
        let mus = [c(-1.92373, 0.0), c(0.15594, 0.0)];
        let (stable, margin) = schur_stable(&ph, &mus).unwrap();
        let admissible = mus.iter().all(|&m| multiplier_admissible(&ph, m).unwrap());
        assert_eq!(stable, admissible);
        // lambda = gamma + (1-gamma) mu for T = N = 1
        let want = 1.0 - (0.5 + 0.5 * -1.92373f64).abs().max((0.5 + 0.5 * 0.15594f64).abs());
        assert_abs_diff_eq!(margin, want, epsilon = 1e-12);
        assert!(stable);
    }
}

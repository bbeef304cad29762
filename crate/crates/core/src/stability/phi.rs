use num_complex::Complex64;

use crate::coeffgen::MixingCoefficients;
use crate::error::{Error, Result};
use crate::numerics::{count_zeros_in_disk, ComplexPoly, RealPoly};

const NORMALIZATION_TOL: f64 = 1e-12;

/// The auxiliary rational function
/// `Phi(z) = (1-gamma)^T z q(z)^T / (1 - gamma p(z))^T`.
///
/// Numerator and denominator are also kept in expanded form; the
/// admissibility test and the characteristic polynomial are built from them.
#[derive(Clone, Debug)]
pub struct PhiFunction {
    q: RealPoly,
    p: RealPoly,
    gamma: f64,
    t: u32,
    numerator: ComplexPoly,
    denominator: ComplexPoly,
}

impl PhiFunction {
    /// `q` holds a_1..a_N (ascending from z^0); `p` holds 0, b_1..b_N.
    pub fn new(q: RealPoly, p: RealPoly, gamma: f64, t: usize) -> Result<Self> {
        if t < 1 {
            return Err(Error::ParameterRange("T must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::ParameterRange(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        if (q.eval(1.0) - 1.0).abs() > NORMALIZATION_TOL * q.coeffs().len().max(1) as f64 {
            return Err(Error::ParameterRange(format!("q(1) = {}, expected 1", q.eval(1.0))));
        }
        if (p.eval(1.0) - 1.0).abs() > NORMALIZATION_TOL * p.coeffs().len().max(1) as f64 {
            return Err(Error::ParameterRange(format!("p(1) = {}, expected 1", p.eval(1.0))));
        }
        if p.coeffs().first().copied().unwrap_or(0.0) != 0.0 {
            return Err(Error::ParameterRange("p must have zero constant term".into()));
        }
        let t32 = u32::try_from(t).map_err(|_| Error::ParameterRange("T too large".into()))?;

        let one_minus_gamma_p = ComplexPoly::from_real(
            &p.coeffs()
                .iter()
                .enumerate()
                .map(|(k, &c)| if k == 0 { 1.0 - gamma * c } else { -gamma * c })
                .collect::<Vec<_>>(),
        );
        // pole check: 1 - gamma p(z) must not vanish on the closed disk
        if gamma > 0.0 {
            let sup_p: f64 = p.coeffs().iter().map(|c| c.abs()).sum();
            if gamma * sup_p >= 1.0 {
                match count_zeros_in_disk(&one_minus_gamma_p, 1.0) {
                    Ok(0) => {}
                    _ => return Err(Error::InvalidPhi),
                }
            }
        }
        let scale = (1.0 - gamma).powi(t32 as i32);
        let numerator = q.to_complex().pow(t32).shift(1).scale(Complex64::new(scale, 0.0));
        let denominator = one_minus_gamma_p.pow(t32);
        Ok(Self {
            q,
            p,
            gamma,
            t: t32,
            numerator,
            denominator,
        })
    }

    pub fn from_coefficients(coeffs: &MixingCoefficients) -> Result<Self> {
        Self::new(coeffs.q_poly(), coeffs.p_poly(), coeffs.params.gamma, coeffs.params.t)
    }

    /// Phi(z) = z, the open-loop case.
    pub fn identity() -> Self {
        Self::new(RealPoly::new(vec![1.0]), RealPoly::from_coeffs_untrimmed(vec![0.0, 1.0]), 0.0, 1)
            .expect("identity is valid")
    }

    pub fn q(&self) -> &RealPoly {
        &self.q
    }

    pub fn p(&self) -> &RealPoly {
        &self.p
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t(&self) -> usize {
        self.t as usize
    }

    /// `(1-gamma)^T z q(z)^T`
    pub fn numerator(&self) -> &ComplexPoly {
        &self.numerator
    }

    /// `(1 - gamma p(z))^T`
    pub fn denominator(&self) -> &ComplexPoly {
        &self.denominator
    }

    /// Degree N*T of each closed-loop factor in the lambda variable.
    pub fn loop_degree(&self) -> usize {
        let n = self.q.coeffs().len().max(self.p.coeffs().len().saturating_sub(1));
        n * self.t as usize
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let qz = self.q.eval_complex(z);
        let pz = self.p.eval_complex(z);
        let ratio = qz * (1.0 - self.gamma) / (Complex64::new(1.0, 0.0) - pz * self.gamma);
        z * ratio.powi(self.t as i32)
    }
}

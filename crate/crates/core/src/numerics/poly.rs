use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients whose modulus falls below this fraction of the largest
/// coefficient are treated as zero when stripping the leading end.
pub const TRIM_RELATIVE: f64 = 1e-14;

/// Tolerance on the imaginary parts produced when multiplying out conjugate
/// root pairs.

/// Dense complex polynomial, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

/// Dense real polynomial, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealPoly {
    coeffs: Vec<f64>,
}

fn trim_len<T>(coeffs: &[T], modulus: impl Fn(&T) -> f64) -> usize {
    let max = coeffs.iter().map(&modulus).fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    let cutoff = TRIM_RELATIVE * max;
    let mut len = coeffs.len();
    while len > 0 && modulus(&coeffs[len - 1]) < cutoff {
        len -= 1;
    }
    len
}

impl ComplexPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        let len = trim_len(&coeffs, |c| c.norm());
        coeffs.truncate(len);
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            coeffs.push(Complex64::new(0.0, 0.0));
            for k in (1..coeffs.len()).rev() {
                coeffs[k] = coeffs[k - 1] - r * coeffs[k];
            }
            coeffs[0] *= -r;
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree after stripping; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn max_coeff_modulus(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        let out = (0..len)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(zero) + other.coeffs.get(k).copied().unwrap_or(zero)
            })
            .collect();
        Self::new(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Binary powering.
    pub fn pow(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Multiply by z^k.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); k];
        out.extend_from_slice(&self.coeffs);
        Self { coeffs: out }
    }

    /// Coefficients reversed with respect to `degree`: z^degree * p(1/z).
    pub fn reversed(&self, degree: usize) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); degree + 1];
        for (k, &c) in self.coeffs.iter().enumerate().take(degree + 1) {
            out[degree - k] = c;
        }
        Self::new(out)
    }
}

impl RealPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        let len = trim_len(&coeffs, |c| c.abs());
        coeffs.truncate(len);
        Self { coeffs }
    }

    /// Keeps every coefficient as given, including negligible leading terms.
    pub fn from_coeffs_untrimmed(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn to_complex(&self) -> ComplexPoly {
        ComplexPoly::from_real(&self.coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::new(Vec::new());
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Real monic polynomial prod_j (z - e^{i t_j})(z - e^{-i t_j}).
    ///
    /// Expanding the quadratics one by one loses all accuracy for a few
    /// dozen roots spread over the circle (intermediate coefficients grow
    /// exponentially and cancel). Instead the product is evaluated on the
    /// d+1 roots of unity, where z^2 - 2 cos(t) z + 1 = 2 z (cos th - cos t)
    /// is a well-conditioned real factor, and the coefficients are recovered
    /// by an inverse DFT.
    pub fn from_conjugate_root_pairs(angles: &[f64]) -> Result<Self> {
        if let Some(&t) = angles.iter().find(|&&t| !(t > 0.0 && t < PI)) {
            return Err(Error::InvalidAngle(t));
        }
        let half = angles.len();
        let d = 2 * half;
        if d == 0 {
            return Ok(Self::new(vec![1.0]));
        }
        let m = d + 1;
        let theta = |k: usize| 2.0 * PI * (k % m) as f64 / m as f64;
        // z^{-half} P(z) on the circle, real by symmetry
        let r: Vec<f64> = (0..m)
            .map(|k| {
                let th = theta(k);
                angles
                    .iter()
                    .map(|&t| -4.0 * (0.5 * (th + t)).sin() * (0.5 * (th - t)).sin())
                    .product()
            })
            .collect();
        let mut c: Vec<f64> = (0..=d)
            .map(|j| {
                let shift = (half + m - j) % m;
                r.iter().enumerate().map(|(k, &v)| v * theta(k * shift).cos()).sum::<f64>() / m as f64
            })
            .collect();
        for j in 0..half {
            let avg = 0.5 * (c[j] + c[d - j]);
            c[j] = avg;
            c[d - j] = avg;
        }
        c[0] = 1.0;
        c[d] = 1.0;
        Ok(Self::from_coeffs_untrimmed(c))
    }
}

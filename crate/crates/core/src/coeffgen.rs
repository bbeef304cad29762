//! Mixing coefficients for the closed loop.
//!
//! The nonlinear-channel weights `a` are the coefficients of a
//! Butterworth-type polynomial `q(z)` with a Fejér-style taper; the
//! linear-channel weights `b` come from one of three constructions of
//! `p(z)` depending on the cycle length.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RealPoly;

/// Tolerance on the convexity normalization `sum a = sum b = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingParams {
    /// Prehistory depth N.
    pub n: usize,
    /// Cycle length T.
    pub t: usize,
    pub sigma: f64,
    pub tau: f64,
    pub gamma: f64,
}

impl MixingParams {
    /// Validated parameters with `0 < sigma <= tau <= 2`.
    pub fn new(n: usize, t: usize, sigma: f64, tau: f64, gamma: f64) -> Result<Self> {
        let p = Self { n, t, sigma, tau, gamma };
        p.validate(true)?;
        Ok(p)
    }

    /// Relaxed validation for exploratory sweeps: only requires positive
    /// `sigma` and `tau`.
    pub fn exploratory(n: usize, t: usize, sigma: f64, tau: f64, gamma: f64) -> Result<Self> {
        let p = Self { n, t, sigma, tau, gamma };
        p.validate(false)?;
        Ok(p)
    }

    pub fn validate(&self, strict: bool) -> Result<()> {
        if self.n < 1 {
            return Err(Error::ParameterRange(format!("N must be >= 1, got {}", self.n)));
        }
        if self.t < 1 {
            return Err(Error::ParameterRange(format!("T must be >= 1, got {}", self.t)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::ParameterRange(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if !(self.sigma > 0.0 && self.tau > 0.0 && self.sigma.is_finite() && self.tau.is_finite()) {
            return Err(Error::ParameterRange(format!(
                "sigma and tau must be positive, got sigma={} tau={}",
                self.sigma, self.tau
            )));
        }
        if strict && !(self.sigma <= self.tau && self.tau <= 2.0) {
            return Err(Error::ParameterRange(format!(
                "require 0 < sigma <= tau <= 2, got sigma={} tau={}",
                self.sigma, self.tau
            )));
        }
        Ok(())
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub params: MixingParams,
}

impl MixingCoefficients {
    pub fn generate(params: MixingParams) -> Result<Self> {
        let a = q_coefficients(&params)?;
        let b = p_coefficients(&a, &params)?;
        Ok(Self { a, b, params })
    }

    /// Explicit weights, checked for length and normalization.
    pub fn from_weights(a: Vec<f64>, b: Vec<f64>, params: MixingParams) -> Result<Self> {
        if a.len() != params.n || b.len() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                got: if a.len() != params.n { a.len() } else { b.len() },
            });
        }
        for (name, w) in [("a", &a), ("b", &b)] {
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL * 10.0 {
                return Err(Error::ParameterRange(format!("sum of {name} is {s}, expected 1")));
            }
        }
        Ok(Self { a, b, params })
    }

    /// q(z) = a_1 + a_2 z + ... + a_N z^{N-1}
    pub fn q_poly(&self) -> RealPoly {
        RealPoly::from_coeffs_untrimmed(self.a.clone())
    }

    /// p(z) = b_1 z + ... + b_N z^N
    pub fn p_poly(&self) -> RealPoly {
        let mut c = Vec::with_capacity(self.b.len() + 1);
        c.push(0.0);
        c.extend_from_slice(&self.b);
        RealPoly::from_coeffs_untrimmed(c)
    }
}

/// Nodes t_j of the generating polynomial, all in (0, pi).
pub fn nodes(params: &MixingParams) -> Result<Vec<f64>> {
    let n = params.n;
    let count = if n % 2 == 0 { (n.saturating_sub(2)) / 2 } else { (n - 1) / 2 };
    let t = params.t as f64;
    let denom = params.tau + (n as f64 - 1.0) * t;
    (1..=count)
        .map(|j| {
            let tj = PI * (params.sigma + t * (2.0 * j as f64 - 1.0)) / denom;
            if tj > 0.0 && tj < PI {
                Ok(tj)
            } else {
                Err(Error::ParameterRange(format!("node t_{j} = {tj} outside (0, pi)")))
            }
        })
        .collect()
}

/// Cofactor coefficients c_1..c_N of eta_N(z) = z * sum_j c_j z^{j-1}.
pub fn eta_cofactor(params: &MixingParams) -> Result<Vec<f64>> {
    let pairs = RealPoly::from_conjugate_root_pairs(&nodes(params)?)?;
    let cofactor = if params.n % 2 == 0 {
        pairs.mul(&RealPoly::new(vec![1.0, 1.0]))
    } else {
        pairs
    };
    let mut c = cofactor.coeffs().to_vec();
    c.resize(params.n, 0.0);
    Ok(c)
}

/// Taper 1 - (1 + (j-1)T) / (2 + (N-1)T) for j = 1..N.
fn taper(params: &MixingParams) -> impl Iterator<Item = f64> + '_ {
    let t = params.t as f64;
    let denom = 2.0 + (params.n as f64 - 1.0) * t;
    (0..params.n).map(move |j| 1.0 - (1.0 + j as f64 * t) / denom)
}

/// Normalized coefficients a_1..a_N of q(z, T, sigma, tau).
pub fn q_coefficients(params: &MixingParams) -> Result<Vec<f64>> {
    let c = eta_cofactor(params)?;
    let raw: Vec<f64> = taper(params).zip(&c).map(|(w, cj)| w * cj).collect();
    let total: f64 = raw.iter().sum();
    if total.abs() < f64::EPSILON {
        return Err(Error::DegenerateNormalization);
    }
    Ok(raw.into_iter().map(|x| x / total).collect())
}

/// Coefficients b_1..b_N of p(z) for the given cycle length.
pub fn p_coefficients(a: &[f64], params: &MixingParams) -> Result<Vec<f64>> {
    let n = a.len();
    let b = match params.t {
        1 => a.to_vec(),
        2 => {
            let a1 = a[0];
            if a1.abs() < 1e-12 {
                return Err(Error::DivisionDegeneracy(a1));
            }
            // 1 - (1 - z) q(z) / a_1; constant term cancels
            let mut b = Vec::with_capacity(n);
            for k in 1..n {
                b.push((a[k - 1] - a[k]) / a1);
            }
            b.push(a[n - 1] / a1);
            b
        }
        _ => {
            let s = 2.0 / (2.0 * n as f64 - 1.0);
            let mut b = vec![s; n];
            b[n - 1] = 0.5 * s;
            b
        }
    };
    let total: f64 = b.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL * (n as f64).max(1.0) {
        return Err(Error::ParameterRange(format!("p(1) = {total}, expected 1")));
    }
    Ok(b)
}

/// q(-1) = sum_j a_j (-1)^{j-1}.
pub fn q_minus_one_direct(a: &[f64]) -> f64 {
    a.iter()
        .enumerate()
        .map(|(j, &x)| if j % 2 == 0 { x } else { -x })
        .sum()
}

/// Product formula for q(-1) in terms of cot^2(t_j / 2).
///
/// Its sign is opposite to [`q_minus_one_direct`] on the cases checked; only
/// the magnitude is used downstream.
pub fn q_minus_one_closed_form(params: &MixingParams) -> Result<f64> {
    if params.n < 2 {
        return Err(Error::ParameterRange("closed form needs N >= 2".into()));
    }
    let mut prod = 1.0;
    for t in nodes(params)? {
        let half = 0.5 * t;
        if half.sin() == 0.0 {
            return Err(Error::CotangentSingularity(t));
        }
        let cot = half.cos() / half.sin();
        prod *= cot * cot;
    }
    if params.n % 2 == 0 {
        let tt = params.t as f64;
        Ok(-(tt / (2.0 + (params.n as f64 - 1.0) * tt)) * prod)
    } else {
        Ok(-prod)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit(n: usize, t: usize) -> MixingParams {
        MixingParams::new(n, t, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn node_examples() {
        let v = nodes(&unit(3, 1)).unwrap();
        assert_eq!(v.len(), 1);
        assert_abs_diff_eq!(v[0], 2.0 * PI / 3.0, epsilon = 1e-15);
        assert!(nodes(&unit(2, 1)).unwrap().is_empty());
        assert!(nodes(&unit(1, 1)).unwrap().is_empty());
        let v = nodes(&unit(5, 2)).unwrap();
        assert_abs_diff_eq!(v[0], PI * 3.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], PI * 7.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn eta_examples() {
        let c = eta_cofactor(&unit(3, 1)).unwrap();
        for (g, w) in c.iter().zip([1.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-14);
        }
        assert_eq!(eta_cofactor(&unit(2, 1)).unwrap(), vec![1.0, 1.0]);
        assert_eq!(eta_cofactor(&unit(1, 7)).unwrap(), vec![1.0]);
    }

    #[test]
    fn q_examples() {
        let a = q_coefficients(&unit(3, 1)).unwrap();
        for (g, w) in a.iter().zip([0.5, 1.0 / 3.0, 1.0 / 6.0]) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-15);
        }
        for t in 1..6 {
            assert_eq!(q_coefficients(&unit(1, t)).unwrap(), vec![1.0]);
        }
        let a = q_coefficients(&unit(2, 1)).unwrap();
        assert_abs_diff_eq!(a[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    /// Values from a 50-digit expansion of the generating polynomial.
    #[test]
    fn q_matches_high_precision_expansion() {
        let cases: [(MixingParams, &[f64]); 3] = [
            (
                unit(5, 2),
                &[
                    0.50961344914430740241,
                    0.21090195199661606105,
                    0.13247433143179422758,
                    0.090386550855692597591,
                    0.056623716571589711379,
                ],
            ),
            (
                MixingParams::new(4, 3, 1.5, 1.5, 0.0).unwrap(),
                &[
                    0.58464012009799141464,
                    0.22711555229504237339,
                    0.12978031559716707051,
                    0.058464012009799141464,
                ],
            ),
            (
                MixingParams::new(7, 2, 0.5, 1.5, 0.0).unwrap(),
                &[
                    0.84834301858180142914,
                    -0.18317294151846441012,
                    0.26785524986992036208,
                    -0.097134697580973303734,
                    0.14880847214995575671,
                    -0.049956256777763020941,
                    0.065257155275523186857,
                ],
            ),
        ];
        for (params, want) in cases {
            let a = q_coefficients(&params).unwrap();
            assert_eq!(a.len(), want.len());
            for (g, w) in a.iter().zip(want) {
                assert_abs_diff_eq!(*g, *w, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn p_examples() {
        let a = [0.5, 1.0 / 3.0, 1.0 / 6.0];
        assert_eq!(p_coefficients(&a, &unit(3, 1)).unwrap(), a.to_vec());
        let b = p_coefficients(&a, &unit(3, 2)).unwrap();
        for g in b {
            assert_abs_diff_eq!(g, 1.0 / 3.0, epsilon = 1e-15);
        }
        let b = p_coefficients(&a, &unit(3, 5)).unwrap();
        for (g, w) in b.iter().zip([0.4, 0.4, 0.2]) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-15);
        }
    }

    #[test]
    fn p_rejects_vanishing_a1() {
        let a = [0.0, 0.5, 0.5];
        assert!(matches!(
            p_coefficients(&a, &unit(3, 2)),
            Err(Error::DivisionDegeneracy(_))
        ));
    }

    #[test]
    fn q_minus_one_examples() {
        assert_eq!(q_minus_one_direct(&[1.0]), 1.0);
        assert_abs_diff_eq!(q_minus_one_direct(&[0.5, 1.0 / 3.0, 1.0 / 6.0]), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q_minus_one_direct(&[9.0 / 14.0, 5.0 / 14.0]), 2.0 / 7.0, epsilon = 1e-15);

        assert_abs_diff_eq!(q_minus_one_closed_form(&unit(3, 1)).unwrap(), -1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q_minus_one_closed_form(&unit(2, 1)).unwrap(), -1.0 / 3.0, epsilon = 1e-15);
        let cot = |x: f64| 1.0 / x.tan();
        let want = -(cot(PI / 6.0).powi(2) * cot(7.0 * PI / 18.0).powi(2));
        assert_abs_diff_eq!(q_minus_one_closed_form(&unit(5, 2)).unwrap(), want, epsilon = 1e-14);
        assert!(q_minus_one_closed_form(&unit(1, 1)).is_err());
    }

    #[test]
    fn strict_validation() {
        assert!(MixingParams::new(3, 1, 1.5, 1.0, 0.0).is_err());
        assert!(MixingParams::new(3, 1, 1.0, 2.5, 0.0).is_err());
        assert!(MixingParams::new(3, 1, 1.0, 1.0, 1.0).is_err());
        assert!(MixingParams::new(0, 1, 1.0, 1.0, 0.0).is_err());
        assert!(MixingParams::exploratory(3, 1, 1.5, 1.0, 0.0).is_ok());
        assert!(MixingParams::exploratory(3, 1, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn exploratory_node_out_of_range() {
        // sigma far above tau pushes the last node past pi
        let p = MixingParams::exploratory(5, 1, 10.0, 0.5, 0.0).unwrap();
        assert!(matches!(nodes(&p), Err(Error::ParameterRange(_))));
    }
}

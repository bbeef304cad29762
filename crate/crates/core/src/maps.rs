//! Built-in discrete maps with analytic Jacobians and cycle multipliers.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trajectories leaving the sup-norm ball of this radius count as escaped.
pub const ESCAPE_BOUND: f64 = 1e8;

pub type SmallMatrix = DMatrix<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Henon,
    ElhadjSprott,
    Ikeda,
    Lozi,
    Holmes,
    Logistic,
}

impl MapKind {
    pub const ALL: [MapKind; 6] = [
        MapKind::Henon,
        MapKind::ElhadjSprott,
        MapKind::Ikeda,
        MapKind::Lozi,
        MapKind::Holmes,
        MapKind::Logistic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MapKind::Henon => "henon",
            MapKind::ElhadjSprott => "elhadj_sprott",
            MapKind::Ikeda => "ikeda",
            MapKind::Lozi => "lozi",
            MapKind::Holmes => "holmes",
            MapKind::Logistic => "logistic",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::UnknownMap(name.to_string()))
    }

    pub fn dim(self) -> usize {
        match self {
            MapKind::Logistic => 1,
            _ => 2,
        }
    }

    /// Parameter names and their default values.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            // x' = 1 - a x^2 + y, y' = b x
            MapKind::Henon => &[("a", 1.4), ("b", 0.3)],
            // x' = 1 - a sin x + b y, y' = x
            MapKind::ElhadjSprott => &[("a", 4.0), ("b", 0.9)],
            // phase = k - p / (1 + x^2 + y^2)
            MapKind::Ikeda => &[("u", 0.9), ("k", 0.4), ("p", 6.0)],
            // x' = 1 - a|x| + b y, y' = x
            MapKind::Lozi => &[("a", 1.7), ("b", 0.5)],
            // x' = y, y' = c - b x + d y - y^3; every orbit escapes for c = 1, so c = 0 by default
            MapKind::Holmes => &[("b", 0.2), ("d", 2.77), ("c", 0.0)],
            MapKind::Logistic => &[("mu", 4.0)],
        }
    }

    pub fn default_domain(self) -> Vec<(f64, f64)> {
        match self {
            MapKind::Henon => vec![(-1.5, 1.5), (-0.45, 0.45)],
            MapKind::Ikeda => vec![(-1.0, 2.0), (-2.0, 1.0)],
            MapKind::Lozi => vec![(-1.5, 1.5), (-1.5, 1.5)],
            MapKind::ElhadjSprott => vec![(-5.0, 5.0), (-5.0, 5.0)],
            MapKind::Holmes => vec![(-2.0, 2.0), (-2.0, 2.0)],
            MapKind::Logistic => vec![(0.0, 1.0)],
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A named map `f: R^m -> R^m` with its parameters and seeding box.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSystem {
    kind: MapKind,
    params: Vec<f64>,
    domain: Vec<(f64, f64)>,
}

/// Serializable description of a map: name plus parameter overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<(f64, f64)>>,
}

impl MapSpec {
    pub fn build(&self) -> Result<MapSystem> {
        let mut map = builtin(&self.name)?;
        for (k, &v) in &self.params {
            map = map.with_param(k, v)?;
        }
        if let Some(d) = &self.domain {
            map = map.with_domain(d.clone())?;
        }
        Ok(map)
    }
}

/// Looks up a built-in map by name, with default constants.
pub fn builtin(name: &str) -> Result<MapSystem> {
    Ok(MapSystem::new(MapKind::from_name(name)?))
}

impl MapSystem {
    pub fn new(kind: MapKind) -> Self {
        Self {
            kind,
            params: kind.defaults().iter().map(|&(_, v)| v).collect(),
            domain: kind.default_domain(),
        }
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        self.kind
            .defaults()
            .iter()
            .zip(&self.params)
            .map(|(&(n, _), &v)| (n.to_string(), v))
            .collect()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.kind
            .defaults()
            .iter()
            .position(|&(n, _)| n == name)
            .map(|i| self.params[i])
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Result<Self> {
        let idx = self
            .kind
            .defaults()
            .iter()
            .position(|&(n, _)| n == name)
            .ok_or_else(|| Error::UnknownMapParam {
                map: self.name().to_string(),
                param: name.to_string(),
            })?;
        self.params[idx] = value;
        Ok(self)
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Result<Self> {
        if domain.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: domain.len(),
            });
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn spec(&self) -> MapSpec {
        MapSpec {
            name: self.name().to_string(),
            params: self.params(),
            domain: Some(self.domain.clone()),
        }
    }

    /// Writes f(x) into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let p = &self.params;
        match self.kind {
            MapKind::Henon => {
                out[0] = 1.0 - p[0] * x[0] * x[0] + x[1];
                out[1] = p[1] * x[0];
            }
            MapKind::ElhadjSprott => {
                out[0] = 1.0 - p[0] * x[0].sin() + p[1] * x[1];
                out[1] = x[0];
            }
            MapKind::Ikeda => {
                let (u, k, c) = (p[0], p[1], p[2]);
                let phase = k - c / (1.0 + x[0] * x[0] + x[1] * x[1]);
                let (s, co) = phase.sin_cos();
                out[0] = 1.0 + u * (x[0] * co - x[1] * s);
                out[1] = u * (x[0] * s + x[1] * co);
            }
            MapKind::Lozi => {
                out[0] = 1.0 - p[0] * x[0].abs() + p[1] * x[1];
                out[1] = x[0];
            }
            MapKind::Holmes => {
                let y = x[1];
                out[0] = y;
                out[1] = p[2] - p[0] * x[0] + p[1] * y - y * y * y;
            }
            MapKind::Logistic => {
                out[0] = p[0] * x[0] * (1.0 - x[0]);
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    /// Analytic Jacobian Df(x).
    pub fn jacobian(&self, x: &[f64]) -> Result<SmallMatrix> {
        let p = &self.params;
        let m = match self.kind {
            MapKind::Henon => SmallMatrix::from_row_slice(2, 2, &[-2.0 * p[0] * x[0], 1.0, p[1], 0.0]),
            MapKind::ElhadjSprott => SmallMatrix::from_row_slice(2, 2, &[-p[0] * x[0].cos(), p[1], 1.0, 0.0]),
            MapKind::Ikeda => {
                let (u, k, c) = (p[0], p[1], p[2]);
                let r = 1.0 + x[0] * x[0] + x[1] * x[1];
                let phase = k - c / r;
                let (s, co) = phase.sin_cos();
                let dtx = 2.0 * c * x[0] / (r * r);
                let dty = 2.0 * c * x[1] / (r * r);
                // d/dphase of the rotated vector
                let rx = -x[0] * s - x[1] * co;
                let ry = x[0] * co - x[1] * s;
                SmallMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        u * (co + rx * dtx),
                        u * (-s + rx * dty),
                        u * (s + ry * dtx),
                        u * (co + ry * dty),
                    ],
                )
            }
            MapKind::Lozi => {
                if x[0] == 0.0 {
                    return Err(Error::NonsmoothPoint(x.to_vec()));
                }
                SmallMatrix::from_row_slice(2, 2, &[-p[0] * x[0].signum(), p[1], 1.0, 0.0])
            }
            MapKind::Holmes => SmallMatrix::from_row_slice(2, 2, &[0.0, 1.0, -p[0], p[1] - 3.0 * x[1] * x[1]]),
            MapKind::Logistic => SmallMatrix::from_element(1, 1, p[0] * (1.0 - 2.0 * x[0])),
        };
        Ok(m)
    }
}

fn escaped(x: &[f64]) -> Option<bool> {
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(x.iter().any(|v| v.abs() > ESCAPE_BOUND))
}

/// Checks a freshly computed state, `step` being its index in the run.
pub fn check_state(x: &[f64], step: usize) -> Result<()> {
    match escaped(x) {
        None => Err(Error::NonFinite { step }),
        Some(true) => Err(Error::Divergence { step }),
        Some(false) => Ok(()),
    }
}

/// Open-loop trajectory x_0..x_n.
pub fn iterate_open(map: &MapSystem, x0: &[f64], n: usize) -> Result<Vec<Vec<f64>>> {
    if x0.len() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            got: x0.len(),
        });
    }
    check_state(x0, 0)?;
    let mut traj = Vec::with_capacity(n + 1);
    traj.push(x0.to_vec());
    for step in 1..=n {
        let next = map.eval(&traj[step - 1]);
        check_state(&next, step)?;
        traj.push(next);
    }
    Ok(traj)
}

/// Product Df(x_T) ... Df(x_1) along the given points.
pub fn jacobian_product(map: &MapSystem, points: &[Vec<f64>]) -> Result<SmallMatrix> {
    let m = map.dim();
    let mut acc = SmallMatrix::identity(m, m);
    for x in points {
        if x.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: x.len() });
        }
        acc = map.jacobian(x)? * acc;
    }
    Ok(acc)
}

/// Eigenvalues of a small real matrix.
pub fn small_eigenvalues(mat: &SmallMatrix) -> Result<Vec<Complex64>> {
    let m = mat.nrows();
    match m {
        1 => Ok(vec![Complex64::new(mat[(0, 0)], 0.0)]),
        2 => {
            let tr = mat[(0, 0)] + mat[(1, 1)];
            let det = mat[(0, 0)] * mat[(1, 1)] - mat[(0, 1)] * mat[(1, 0)];
            let disc = tr * tr - 4.0 * det;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                let big = 0.5 * (tr + if tr >= 0.0 { sq } else { -sq });
                let small = if big != 0.0 { det / big } else { 0.0 };
                Ok(vec![Complex64::new(big, 0.0), Complex64::new(small, 0.0)])
            } else {
                let im = 0.5 * (-disc).sqrt();
                Ok(vec![Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im)])
            }
        }
        3 | 4 => Ok(mat.complex_eigenvalues().iter().copied().collect()),
        _ => Err(Error::UnsupportedDimension(m)),
    }
}

/// Cycle multipliers: eigenvalues of the Jacobian product around the cycle.
pub fn cycle_multipliers(map: &MapSystem, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    if map.dim() > 4 {
        return Err(Error::UnsupportedDimension(map.dim()));
    }
    small_eigenvalues(&jacobian_product(map, points)?)
}

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::history::LoopHistory;
use crate::coeffgen::{MixingCoefficients, MixingParams};
use crate::error::{Error, Result};
use crate::maps::{cycle_multipliers, MapSystem};
use crate::stability::{schur_stable, PhiFunction};

/// Newton refinement stops once the cycle residual is below this.
pub const NEWTON_TARGET: f64 = 1e-12;
const MAX_HALVINGS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// x_1* .. x_T*, in orbit order.
    pub points: Vec<Vec<f64>>,
    /// |f^T(x_1*) - x_1*|_inf
    pub residual: f64,
    pub minimal_period: usize,
    /// Eigenvalues of Df(x_T*) ... Df(x_1*), stored as [re, im].
    #[serde(default)]
    pub multipliers: Vec<Complex64>,
    #[serde(default)]
    pub open_loop_unstable: bool,
    /// 1 - spectral radius of the closed loop at this cycle.
    #[serde(default)]
    pub closed_loop_margin: Option<f64>,
    #[serde(default)]
    pub reconverged: bool,
    /// Mixing parameters of the loop that stabilized the cycle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub found_with: Option<MixingParams>,
    /// Number of restarts that landed on this cycle.
    #[serde(default)]
    pub hits: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CycleRecord {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        Self {
            points,
            residual: f64::INFINITY,
            minimal_period: 0,
            multipliers: Vec::new(),
            open_loop_unstable: false,
            closed_loop_margin: None,
            reconverged: false,
            found_with: None,
            hits: 1,
            notes: Vec::new(),
        }
    }

    pub fn period(&self) -> usize {
        self.points.len()
    }

    pub fn verified(&self, tol_verify: f64) -> bool {
        self.residual < tol_verify && self.reconverged
    }

    /// The first `minimal_period` points.
    pub fn minimal_points(&self) -> &[Vec<f64>] {
        let d = if self.minimal_period == 0 { self.points.len() } else { self.minimal_period };
        &self.points[..d]
    }
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// |f^T(x_1) - x_1|_inf, iterating the open map from the first point.
pub fn cycle_residual(map: &MapSystem, points: &[Vec<f64>]) -> f64 {
    let mut x = points[0].clone();
    let mut next = vec![0.0; x.len()];
    for _ in 0..points.len() {
        map.eval_into(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
    }
    let r = sup_distance(&x, &points[0]);
    if r.is_finite() {
        r
    } else {
        f64::INFINITY
    }
}

/// Smallest divisor d of T with |x_{k+d} - x_k| < tol for all k (cyclically).
pub fn minimal_period(points: &[Vec<f64>], tol: f64) -> usize {
    let t = points.len();
    (1..=t)
        .filter(|d| t % d == 0)
        .find(|&d| (0..t).all(|k| sup_distance(&points[(k + d) % t], &points[k]) < tol))
        .unwrap_or(t)
}

/// Takes the last T states of a converged tail as the cycle.
pub fn extract_cycle(map: &MapSystem, tail: &[Vec<f64>], t: usize, tol: f64) -> Result<CycleRecord> {
    if tail.len() < t || t == 0 {
        return Err(Error::DimensionMismatch { expected: t, got: tail.len() });
    }
    let points = tail[tail.len() - t..].to_vec();
    let residual = cycle_residual(map, &points);
    if !(residual <= 1.0) {
        return Err(Error::ExtractionRejected(residual));
    }
    let mut rec = CycleRecord::new(points);
    rec.residual = residual;
    rec.minimal_period = minimal_period(&rec.points, tol);
    Ok(rec)
}

fn quantize(v: f64, tol: f64) -> i64 {
    (v / tol).round() as i64
}

fn cmp_points(a: &[f64], b: &[f64], tol: f64) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match quantize(*x, tol).cmp(&quantize(*y, tol)) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Canonical rotation of a cycle: the one whose point sequence is
/// lexicographically smallest under `tol`-quantized comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleKey {
    pub points: Vec<Vec<f64>>,
}

impl CycleKey {
    pub fn matches(&self, other: &CycleKey, tol: f64) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| sup_distance(a, b) <= tol)
    }

    pub fn cmp_lex(&self, other: &CycleKey) -> Ordering {
        for (a, b) in self.points.iter().zip(&other.points) {
            for (x, y) in a.iter().zip(b) {
                match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
        }
        self.points.len().cmp(&other.points.len())
    }
}

pub fn canonical_form(points: &[Vec<f64>], tol: f64) -> CycleKey {
    let t = points.len();
    let rotation = |r: usize| (0..t).map(move |k| &points[(r + k) % t]);
    let best = (0..t)
        .min_by(|&r, &s| {
            rotation(r)
                .zip(rotation(s))
                .map(|(a, b)| cmp_points(a, b, tol))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
                .then(r.cmp(&s))
        })
        .unwrap_or(0);
    CycleKey {
        points: rotation(best).cloned().collect(),
    }
}

/// Shooting residual F(X) = (f(x_1) - x_2, ..., f(x_T) - x_1), flattened.
fn shooting(map: &MapSystem, points: &[Vec<f64>]) -> DVector<f64> {
    let t = points.len();
    let m = map.dim();
    let mut f = DVector::zeros(t * m);
    for j in 0..t {
        let img = map.eval(&points[j]);
        let nxt = &points[(j + 1) % t];
        for i in 0..m {
            f[j * m + i] = img[i] - nxt[i];
        }
    }
    f
}

/// Damped Newton iteration on the T-point system.
pub fn newton_refine(map: &MapSystem, record: &CycleRecord, max_steps: usize) -> Result<CycleRecord> {
    if !(record.residual < 0.1) {
        return Err(Error::RefinementFailure(format!(
            "residual {:e} too large to refine",
            record.residual
        )));
    }
    if record.residual <= NEWTON_TARGET {
        return Ok(record.clone());
    }
    let points = newton_points(map, record.points.clone(), max_steps)?;
    let mut out = record.clone();
    out.residual = cycle_residual(map, &points);
    out.points = points;
    Ok(out)
}

fn newton_points(map: &MapSystem, mut points: Vec<Vec<f64>>, max_steps: usize) -> Result<Vec<Vec<f64>>> {
    let t = points.len();
    let m = map.dim();
    let mut residual = cycle_residual(map, &points);
    let mut fx = shooting(map, &points);
    let mut norm = fx.amax();
    for _ in 0..max_steps {
        if residual <= NEWTON_TARGET || norm == 0.0 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(t * m, t * m);
        for j in 0..t {
            let df = map
                .jacobian(&points[j])
                .map_err(|e| Error::RefinementFailure(e.to_string()))?;
            let k = (j + 1) % t;
            for r in 0..m {
                for c in 0..m {
                    jac[(j * m + r, j * m + c)] += df[(r, c)];
                }
                jac[(j * m + r, k * m + r)] -= 1.0;
            }
        }
        let delta = jac
            .lu()
            .solve(&fx)
            .ok_or_else(|| Error::RefinementFailure("singular Newton system".into()))?;
        if !delta.iter().all(|v| v.is_finite()) {
            return Err(Error::RefinementFailure("non-finite Newton step".into()));
        }
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<Vec<f64>> = (0..t)
                .map(|j| (0..m).map(|i| points[j][i] - scale * delta[j * m + i]).collect())
                .collect();
            let ft = shooting(map, &trial);
            let nt = ft.amax();
            if nt.is_finite() && nt < norm {
                points = trial;
                fx = ft;
                norm = nt;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
        residual = cycle_residual(map, &points);
    }
    Ok(points)
}

/// Refines a cycle known only through one (possibly truncated) point: the
/// point's orbit of length T seeds the damped T-point Newton iteration,
/// without the residual gate of [`newton_refine`].
pub fn refine_point(map: &MapSystem, x0: &[f64], t: usize, max_steps: usize) -> Result<CycleRecord> {
    if t == 0 || x0.len() != map.dim() {
        return Err(Error::DimensionMismatch { expected: map.dim(), got: x0.len() });
    }
    let mut orbit = crate::maps::iterate_open(map, x0, t)
        .map_err(|e| Error::RefinementFailure(e.to_string()))?;
    orbit.truncate(t);
    let points = newton_points(map, orbit, max_steps)?;
    let mut rec = CycleRecord::new(points);
    rec.residual = cycle_residual(map, &rec.points);
    rec.minimal_period = minimal_period(&rec.points, 1e-8);
    Ok(rec)
}

/// Fills multipliers, the closed-loop margin and the reconvergence verdict.
///
/// `tol_verify` bounds the drift allowed (10x) while the closed loop is run
/// for 50T steps from the cycle itself.
pub fn verify_cycle(
    map: &MapSystem,
    record: &CycleRecord,
    coeffs: &MixingCoefficients,
    tol_verify: f64,
) -> CycleRecord {
    verify_cycle_with(map, record, coeffs, tol_verify, true)
}

/// [`verify_cycle`] with the (costly) closed-loop margin optional.
pub fn verify_cycle_with(
    map: &MapSystem,
    record: &CycleRecord,
    coeffs: &MixingCoefficients,
    tol_verify: f64,
    with_margin: bool,
) -> CycleRecord {
    let mut out = record.clone();
    let t = out.points.len();
    out.residual = cycle_residual(map, &out.points);
    out.minimal_period = minimal_period(&out.points, tol_verify.max(1e-12) * 100.0);
    out.found_with = Some(coeffs.params);

    match cycle_multipliers(map, &out.points) {
        Ok(mu) => {
            out.open_loop_unstable = mu.iter().any(|z| z.norm() > 1.0);
            out.closed_loop_margin = if with_margin { closed_loop_margin(coeffs, &mu) } else { None };
            out.multipliers = mu;
        }
        Err(e) => {
            out.multipliers.clear();
            out.closed_loop_margin = None;
            out.notes.push(format!("multipliers unavailable: {e}"));
        }
    }

    out.reconverged = reconverges(map, coeffs, &out.points, 10.0 * tol_verify, 50 * t);
    out
}

/// Closed-loop margin `1 - max|lambda|`, or `None` when root extraction fails.
pub fn closed_loop_margin(coeffs: &MixingCoefficients, multipliers: &[Complex64]) -> Option<f64> {
    let phi = PhiFunction::from_coefficients(coeffs).ok()?;
    schur_stable(&phi, multipliers).ok().map(|(_, m)| m)
}

fn reconverges(map: &MapSystem, coeffs: &MixingCoefficients, points: &[Vec<f64>], bound: f64, steps: usize) -> bool {
    let mut hist = match LoopHistory::from_cycle(map.clone(), coeffs.clone(), points) {
        Ok(h) => h,
        Err(_) => return false,
    };
    let t = points.len();
    for k in 0..steps {
        let x = match hist.step() {
            Ok(x) => x,
            Err(_) => return false,
        };
        if sup_distance(x, &points[k % t]) > bound {
            return false;
        }
    }
    true
}

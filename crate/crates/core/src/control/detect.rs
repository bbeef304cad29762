use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cycle::{
    canonical_form, closed_loop_margin, extract_cycle, minimal_period, newton_refine, verify_cycle_with, CycleKey,
    CycleRecord,
};
use super::history::{run_until_periodic, seed_history_with, SeedMode};
use crate::coeffgen::{MixingCoefficients, MixingParams};
use crate::error::{Error, Result};
use crate::maps::MapSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_converge: f64,
    pub tol_verify: f64,
    pub tol_dedup: f64,
    pub max_iter: usize,
    pub warmup: usize,
    /// Consecutive periodic steps required; defaults to 2T.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_window: Option<usize>,
    /// Newton steps applied to each extracted cycle (0 disables refinement).
    pub newton_steps: usize,
    #[serde(default)]
    pub seeding: SeedMode,
    /// Start points examined by the close-return seeding.
    #[serde(default = "default_scan")]
    pub scan: usize,
}

fn default_scan() -> usize {
    2000
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_converge: 1e-9,
            tol_verify: 1e-8,
            tol_dedup: 1e-6,
            max_iter: 200_000,
            warmup: 100,
            check_window: None,
            newton_steps: 50,
            seeding: SeedMode::default(),
            scan: default_scan(),
        }
    }
}

/// Why a restart produced no verified cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartOutcome {
    Verified,
    SeedFailure,
    Diverged,
    NotConverged,
    Rejected,
    Unverified,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectDiagnostics {
    pub restarts: usize,
    pub verified: usize,
    pub seed_failure: usize,
    pub diverged: usize,
    pub not_converged: usize,
    pub rejected: usize,
    pub unverified: usize,
    pub distinct_cycles: usize,
}

impl DetectDiagnostics {
    fn record(&mut self, outcome: RestartOutcome) {
        self.restarts += 1;
        match outcome {
            RestartOutcome::Verified => self.verified += 1,
            RestartOutcome::SeedFailure => self.seed_failure += 1,
            RestartOutcome::Diverged => self.diverged += 1,
            RestartOutcome::NotConverged => self.not_converged += 1,
            RestartOutcome::Rejected => self.rejected += 1,
            RestartOutcome::Unverified => self.unverified += 1,
        }
    }

    fn merge(&mut self, other: &DetectDiagnostics) {
        self.restarts += other.restarts;
        self.verified += other.verified;
        self.seed_failure += other.seed_failure;
        self.diverged += other.diverged;
        self.not_converged += other.not_converged;
        self.rejected += other.rejected;
        self.unverified += other.unverified;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectReport {
    pub cycles: Vec<CycleRecord>,
    pub diagnostics: DetectDiagnostics,
}

/// Uniform draw from the map's seeding box, using the stream assigned to
/// `restart` so that results do not depend on scheduling.
pub fn restart_seed_point(map: &MapSystem, rng_seed: u64, restart: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(restart as u64);
    map.domain()
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo })
        .collect()
}

/// Runs one restart from `x0` through seeding, iteration, extraction,
/// refinement and verification. The closed-loop margin is left empty.
pub fn single_restart(
    map: &MapSystem,
    coeffs: &MixingCoefficients,
    x0: &[f64],
    tol: &Tolerances,
) -> (RestartOutcome, Option<CycleRecord>) {
    let t = coeffs.params.t;
    let mut hist = match seed_history_with(map, coeffs, x0, tol.warmup, tol.seeding, tol.scan) {
        Ok(h) => h,
        Err(_) => return (RestartOutcome::SeedFailure, None),
    };
    let window = tol.check_window.unwrap_or(2 * t);
    let run = match run_until_periodic(&mut hist, tol.tol_converge, window, tol.max_iter) {
        Ok(r) => r,
        Err(_) => return (RestartOutcome::Diverged, None),
    };
    if !run.converged {
        return (RestartOutcome::NotConverged, None);
    }
    let mut rec = match extract_cycle(map, &run.tail, t, tol.tol_dedup) {
        Ok(r) => r,
        Err(_) => return (RestartOutcome::Rejected, None),
    };
    if tol.newton_steps > 0 {
        match newton_refine(map, &rec, tol.newton_steps) {
            Ok(r) => rec = r,
            Err(e) => rec.notes.push(format!("refinement skipped: {e}")),
        }
    }
    // margins are computed once per distinct cycle after deduplication
    let mut rec = verify_cycle_with(map, &rec, coeffs, tol.tol_verify, false);
    rec.minimal_period = minimal_period(&rec.points, tol.tol_dedup);
    if rec.verified(tol.tol_verify) {
        (RestartOutcome::Verified, Some(rec))
    } else {
        (RestartOutcome::Unverified, None)
    }
}

/// Merges records into a deduplicated list keyed by canonical form, keeping
/// the first occurrence and counting hits.
pub fn deduplicate(records: Vec<CycleRecord>, tol: f64) -> Vec<CycleRecord> {
    let mut out: Vec<(CycleKey, CycleRecord)> = Vec::new();
    for rec in records {
        let key = canonical_form(rec.minimal_points(), tol);
        if let Some((_, existing)) = out.iter_mut().find(|(k, _)| k.matches(&key, tol)) {
            existing.hits += rec.hits;
            continue;
        }
        out.push((key, rec));
    }
    out.sort_by(|(ka, a), (kb, b)| a.minimal_period.cmp(&b.minimal_period).then(ka.cmp_lex(kb)));
    out.into_iter()
        .map(|(key, mut rec)| {
            // store the cycle starting from its canonical point
            let shift = rec
                .points
                .iter()
                .position(|p| p == &key.points[0])
                .unwrap_or(0);
            rec.points.rotate_left(shift);
            rec
        })
        .collect()
}

/// Detects cycles of length T for one set of mixing parameters.
pub fn detect_cycles(
    map: &MapSystem,
    params: MixingParams,
    restarts: usize,
    rng_seed: u64,
    tol: &Tolerances,
) -> Result<DetectReport> {
    let coeffs = MixingCoefficients::generate(params)?;
    detect_with_coefficients(map, &coeffs, restarts, rng_seed, tol)
}

pub fn detect_with_coefficients(
    map: &MapSystem,
    coeffs: &MixingCoefficients,
    restarts: usize,
    rng_seed: u64,
    tol: &Tolerances,
) -> Result<DetectReport> {
    if restarts < 1 {
        return Err(Error::ParameterRange("restarts must be >= 1".into()));
    }
    let outcomes: Vec<(RestartOutcome, Option<CycleRecord>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let x0 = restart_seed_point(map, rng_seed, r);
            single_restart(map, coeffs, &x0, tol)
        })
        .collect();

    let mut diagnostics = DetectDiagnostics::default();
    let mut found = Vec::new();
    for (outcome, rec) in outcomes {
        diagnostics.record(outcome);
        if let Some(rec) = rec {
            found.push(rec);
        }
    }
    let mut cycles = deduplicate(found, tol.tol_dedup);
    cycles.par_iter_mut().for_each(|rec| {
        if !rec.multipliers.is_empty() {
            rec.closed_loop_margin = closed_loop_margin(coeffs, &rec.multipliers);
        }
    });
    diagnostics.distinct_cycles = cycles.len();
    Ok(DetectReport { cycles, diagnostics })
}

/// Detection repeated over several gains; cycles are merged across gains.
/// With `stop_on_success` the sweep ends at the first gain that yields a
/// verified cycle.
pub fn detect_over_gammas(
    map: &MapSystem,
    base: MixingParams,
    gammas: &[f64],
    restarts: usize,
    rng_seed: u64,
    tol: &Tolerances,
    stop_on_success: bool,
) -> Result<(DetectReport, Vec<(f64, DetectDiagnostics)>)> {
    let mut all = Vec::new();
    let mut merged = DetectDiagnostics::default();
    let mut per_gamma = Vec::new();
    for &g in gammas {
        let rep = detect_cycles(map, base.with_gamma(g), restarts, rng_seed, tol)?;
        log::debug!("gamma {g}: {:?}", rep.diagnostics);
        merged.merge(&rep.diagnostics);
        per_gamma.push((g, rep.diagnostics.clone()));
        let hit = !rep.cycles.is_empty();
        all.extend(rep.cycles);
        if hit && stop_on_success {
            break;
        }
    }
    let cycles = deduplicate(all, tol.tol_dedup);
    merged.distinct_cycles = cycles.len();
    Ok((DetectReport { cycles, diagnostics: merged }, per_gamma))
}

/// Default gain schedule: gamma = 0 for T in {1, 2}, otherwise 0.1..0.9.
pub fn default_gammas(t: usize) -> Vec<f64> {
    if t <= 2 {
        vec![0.0]
    } else {
        gamma_grid(0.1, 0.9, 0.1)
    }
}

/// Evenly spaced gains from `start` to `stop` inclusive, computed as
/// `start + k step` and rounded to 12 decimals so grids print cleanly.
pub fn gamma_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return vec![start];
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=count)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect()
}

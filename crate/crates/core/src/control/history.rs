use serde::{Deserialize, Serialize};

use crate::coeffgen::MixingCoefficients;
use crate::error::{Error, Result};
use crate::maps::{check_state, MapSystem};

/// Ring buffer of the last N*T closed-loop states together with the map and
/// mixing coefficients that drive the loop.
#[derive(Clone, Debug)]
pub struct LoopHistory {
    map: MapSystem,
    coeffs: MixingCoefficients,
    dim: usize,
    len: usize,
    /// states stored flat, `dim` values each
    buf: Vec<f64>,
    /// slot holding the most recent state x_n
    head: usize,
    steps: usize,
    // scratch
    arg: Vec<f64>,
    image: Vec<f64>,
}

impl LoopHistory {
    /// Builds a history from exactly N*T states, oldest first.
    pub fn from_states(map: MapSystem, coeffs: MixingCoefficients, states: &[Vec<f64>]) -> Result<Self> {
        let dim = map.dim();
        let len = coeffs.params.n * coeffs.params.t;
        if states.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: states.len(),
            });
        }
        let mut buf = Vec::with_capacity(len * dim);
        for s in states {
            if s.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: s.len() });
            }
            buf.extend_from_slice(s);
        }
        Ok(Self {
            map,
            coeffs,
            dim,
            len,
            buf,
            head: len - 1,
            steps: 0,
            arg: vec![0.0; dim],
            image: vec![0.0; dim],
        })
    }

    /// History filled with `cycle` repeated in phase, so that the most recent
    /// state is `cycle[cycle.len() - 1]`.
    pub fn from_cycle(map: MapSystem, coeffs: MixingCoefficients, cycle: &[Vec<f64>]) -> Result<Self> {
        let len = coeffs.params.n * coeffs.params.t;
        let period = cycle.len();
        if period == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let offset = (period - len % period) % period;
        let states: Vec<Vec<f64>> = (0..len).map(|k| cycle[(k + offset) % period].clone()).collect();
        Self::from_states(map, coeffs, &states)
    }

    pub fn map(&self) -> &MapSystem {
        &self.map
    }

    pub fn coeffs(&self) -> &MixingCoefficients {
        &self.coeffs
    }

    pub fn capacity(&self) -> usize {
        self.len
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// x_{n-lag}, for lag < N*T.
    pub fn lagged(&self, lag: usize) -> &[f64] {
        debug_assert!(lag < self.len);
        let slot = (self.head + self.len - lag) % self.len;
        &self.buf[slot * self.dim..(slot + 1) * self.dim]
    }

    pub fn latest(&self) -> &[f64] {
        self.lagged(0)
    }

    /// All stored states, oldest first.
    pub fn states(&self) -> Vec<Vec<f64>> {
        (0..self.len).rev().map(|lag| self.lagged(lag).to_vec()).collect()
    }

    /// One step of the closed loop
    /// `x_{n+1} = (1-gamma) f(sum_j a_j x_{n-(j-1)T}) + gamma sum_j b_j x_{n+1-jT}`.
    /// The new state replaces the oldest one and is returned.
    pub fn step(&mut self) -> Result<&[f64]> {
        let t = self.coeffs.params.t;
        let gamma = self.coeffs.params.gamma;
        let dim = self.dim;

        self.arg.iter_mut().for_each(|v| *v = 0.0);
        // walk back T slots per coefficient without a modulo per term
        let mut slot = self.head;
        for &a in &self.coeffs.a {
            let x = &self.buf[slot * dim..(slot + 1) * dim];
            for (acc, &xi) in self.arg.iter_mut().zip(x) {
                *acc += a * xi;
            }
            slot = if slot >= t { slot - t } else { slot + self.len - t };
        }
        self.map.eval_into(&self.arg, &mut self.image);

        if gamma != 0.0 {
            for v in self.image.iter_mut() {
                *v *= 1.0 - gamma;
            }
            // lag jT - 1 for j = 1..N
            let mut slot = (self.head + 1) % self.len;
            for &b in &self.coeffs.b {
                slot = if slot >= t { slot - t } else { slot + self.len - t };
                let x = &self.buf[slot * dim..(slot + 1) * dim];
                let gb = gamma * b;
                for (acc, &xi) in self.image.iter_mut().zip(x) {
                    *acc += gb * xi;
                }
            }
        }

        self.steps += 1;
        check_state(&self.image, self.steps)?;
        self.head = (self.head + 1) % self.len;
        let slot = self.head;
        self.buf[slot * dim..(slot + 1) * dim].copy_from_slice(&self.image);
        Ok(&self.buf[slot * dim..(slot + 1) * dim])
    }
}

/// How the initial N*T history is built from the open-loop orbit of `x0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// The N*T open-loop iterates that follow the warmup.
    Trajectory,
    /// The T iterates after the warmup, repeated N times.
    Periodic,
    /// Like `Periodic`, but using the length-T segment of the orbit with the
    /// closest return `|x_{k+T} - x_k|` found within the scan window.
    #[default]
    CloseReturn,
}

fn open_orbit(map: &MapSystem, x0: &[f64], warmup: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    if x0.len() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            got: x0.len(),
        });
    }
    check_state(x0, 0)?;
    let mut x = x0.to_vec();
    let mut next = vec![0.0; map.dim()];
    for step in 1..=warmup {
        map.eval_into(&x, &mut next);
        check_state(&next, step)?;
        std::mem::swap(&mut x, &mut next);
    }
    let mut states = Vec::with_capacity(count);
    for k in 0..count {
        map.eval_into(&x, &mut next);
        check_state(&next, warmup + k + 1)?;
        std::mem::swap(&mut x, &mut next);
        states.push(x.clone());
    }
    Ok(states)
}

/// Warms up `warmup` open-loop steps from `x0`, then records the next N*T
/// open-loop iterates as the initial history.
pub fn seed_history(
    map: &MapSystem,
    coeffs: &MixingCoefficients,
    x0: &[f64],
    warmup: usize,
) -> Result<LoopHistory> {
    seed_history_with(map, coeffs, x0, warmup, SeedMode::Trajectory, 0)
}

/// [`seed_history`] with a choice of [`SeedMode`]; `scan` is the number of
/// candidate start points examined by `CloseReturn`.
pub fn seed_history_with(
    map: &MapSystem,
    coeffs: &MixingCoefficients,
    x0: &[f64],
    warmup: usize,
    mode: SeedMode,
    scan: usize,
) -> Result<LoopHistory> {
    let t = coeffs.params.t;
    let len = coeffs.params.n * t;
    let states = match mode {
        SeedMode::Trajectory => open_orbit(map, x0, warmup, len)?,
        SeedMode::Periodic => {
            let seg = open_orbit(map, x0, warmup, t)?;
            (0..len).map(|k| seg[k % t].clone()).collect()
        }
        SeedMode::CloseReturn => {
            let scan = scan.max(1);
            let orbit = open_orbit(map, x0, warmup, scan + t)?;
            let mut best = (0, f64::INFINITY);
            for k in 0..scan {
                let d = sup_distance(&orbit[k], &orbit[k + t]);
                if d < best.1 {
                    best = (k, d);
                }
            }
            (0..len).map(|j| orbit[best.0 + j % t].clone()).collect()
        }
    };
    LoopHistory::from_states(map.clone(), coeffs.clone(), &states)
}

/// Result of [`run_until_periodic`].
#[derive(Clone, Debug)]
pub struct PeriodicRun {
    /// The last (N+1)*T states, oldest first.
    pub tail: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Iterates the closed loop until `|x_{n+T} - x_n|_inf < tol` holds for
/// `check_window` consecutive steps, or `max_iter` steps have been taken.
pub fn run_until_periodic(
    history: &mut LoopHistory,
    tol: f64,
    check_window: usize,
    max_iter: usize,
) -> Result<PeriodicRun> {
    if !(tol > 0.0) {
        return Err(Error::ParameterRange(format!("tol must be positive, got {tol}")));
    }
    let t = history.coeffs.params.t;
    let dim = history.dim;
    // states evicted from the ring during the last T steps
    let mut evicted = vec![0.0; t * dim];
    let mut streak = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let slot = iterations % t;
        let range = slot * dim..(slot + 1) * dim;
        evicted[range.clone()].copy_from_slice(history.lagged(history.len - 1));
        history.step()?;
        iterations += 1;
        // lag T lives in the ring only when N > 1; otherwise it was just evicted
        let d = if history.len > t {
            sup_distance(history.lagged(0), history.lagged(t))
        } else {
            sup_distance(history.lagged(0), &evicted[range])
        };
        if d < tol {
            streak += 1;
            if streak >= check_window {
                converged = true;
                break;
            }
        } else {
            streak = 0;
        }
    }
    let mut tail = Vec::with_capacity(history.len + t);
    let filled = iterations.min(t);
    for k in 0..filled {
        let slot = (iterations - filled + k) % t;
        tail.push(evicted[slot * dim..(slot + 1) * dim].to_vec());
    }
    tail.extend(history.states());
    Ok(PeriodicRun {
        tail,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffgen::MixingParams;
    use crate::maps::{builtin, iterate_open};

    fn coeffs(n: usize, t: usize, gamma: f64) -> MixingCoefficients {
        MixingCoefficients::generate(MixingParams::new(n, t, 1.0, 1.0, gamma).unwrap()).unwrap()
    }

    fn logistic(mu: f64) -> MapSystem {
        builtin("logistic").unwrap().with_param("mu", mu).unwrap()
    }

    fn logistic_two_cycle(mu: f64) -> Vec<Vec<f64>> {
        let s = ((mu - 3.0) * (mu + 1.0)).sqrt();
        vec![vec![(1.0 + mu + s) / (2.0 * mu)], vec![(1.0 + mu - s) / (2.0 * mu)]]
    }

    #[test]
    fn open_loop_reduction_is_bitwise() {
        let map = builtin("henon").unwrap();
        let x0 = [0.1, 0.05];
        let open = iterate_open(&map, &x0, 10_000).unwrap();
        let mut h = LoopHistory::from_states(map, coeffs(1, 1, 0.0), &[x0.to_vec()]).unwrap();
        for want in &open[1..] {
            assert_eq!(h.step().unwrap(), &want[..]);
        }
    }

    #[test]
    fn fixed_point_history_stays_put() {
        let map = builtin("henon").unwrap();
        let x = (-0.7 + (0.49f64 + 5.6).sqrt()) / 2.8;
        let fp = vec![x, 0.3 * x];
        let c = coeffs(3, 2, 0.5);
        let mut h = LoopHistory::from_states(map, c, &vec![fp.clone(); 6]).unwrap();
        for _ in 0..20 {
            let y = h.step().unwrap();
            assert!((y[0] - fp[0]).abs() < 1e-14 && (y[1] - fp[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn cycles_are_preserved() {
        let map = logistic(3.2);
        let cycle = logistic_two_cycle(3.2);
        for (n, gamma) in [(1, 0.0), (4, 0.3), (7, 0.9)] {
            let mut h = LoopHistory::from_cycle(map.clone(), coeffs(n, 2, gamma), &cycle).unwrap();
            for k in 0..200 {
                let y = h.step().unwrap();
                assert!((y[0] - cycle[k % 2][0]).abs() < 1e-9, "n={n} gamma={gamma} k={k}");
            }
        }
    }

    #[test]
    fn in_phase_history_continues_the_cycle() {
        let map = logistic(3.2);
        let cycle = logistic_two_cycle(3.2);
        let mut h = LoopHistory::from_cycle(map, coeffs(3, 2, 0.4), &cycle).unwrap();
        assert_eq!(h.latest(), &cycle[1][..]);
        assert!((h.step().unwrap()[0] - cycle[0][0]).abs() < 1e-15);
    }

    #[test]
    fn seed_history_examples() {
        let map = builtin("henon").unwrap();
        let h = seed_history(&map, &coeffs(2, 2, 0.0), &[0.0, 0.0], 0).unwrap();
        let want = [[1.0, 0.0], [-0.4, 0.3], [1.076, -0.12], [-0.7408864, 0.3228]];
        for (got, w) in h.states().iter().zip(want) {
            assert!((got[0] - w[0]).abs() < 1e-12 && (got[1] - w[1]).abs() < 1e-12);
        }

        let lg = logistic(3.7);
        let h = seed_history(&lg, &coeffs(1, 1, 0.0), &[0.3], 25).unwrap();
        let open = iterate_open(&lg, &[0.3], 26).unwrap();
        assert_eq!(h.states(), vec![open[26].clone()]);

        // a fixed point seeds a constant history
        let lg = logistic(2.5);
        let fp = [0.6];
        let h = seed_history(&lg, &coeffs(3, 4, 0.0), &fp, 10).unwrap();
        assert!(h.states().iter().all(|s| (s[0] - fp[0]).abs() < 1e-12));
    }

    #[test]
    fn seed_divergence_is_an_error() {
        let map = builtin("henon").unwrap();
        assert!(seed_history(&map, &coeffs(2, 2, 0.0), &[5.0, 5.0], 100).is_err());
    }

    #[test]
    fn periodic_seedings_repeat_a_segment() {
        let map = builtin("henon").unwrap();
        let c = coeffs(4, 3, 0.2);
        for mode in [SeedMode::Periodic, SeedMode::CloseReturn] {
            let s = seed_history_with(&map, &c, &[0.1, 0.1], 50, mode, 500).unwrap().states();
            assert_eq!(s.len(), 12);
            for k in 3..12 {
                assert_eq!(s[k], s[k - 3]);
            }
        }
        // the chosen segment is the closest return in the scan window
        let orbit = iterate_open(&map, &[0.1, 0.1], 50 + 503).unwrap();
        let d = |k: usize| {
            (orbit[k][0] - orbit[k + 3][0])
                .abs()
                .max((orbit[k][1] - orbit[k + 3][1]).abs())
        };
        let best = (51..551).min_by(|&i, &j| d(i).partial_cmp(&d(j)).unwrap()).unwrap();
        let s = seed_history_with(&map, &c, &[0.1, 0.1], 50, SeedMode::CloseReturn, 500)
            .unwrap()
            .states();
        assert_eq!(s[0], orbit[best]);
    }

    #[test]
    fn converges_to_logistic_two_cycle() {
        let map = logistic(3.2);
        let cycle = logistic_two_cycle(3.2);
        let mut h = seed_history(&map, &coeffs(1, 2, 0.0), &[0.3], 0).unwrap();
        let run = run_until_periodic(&mut h, 1e-12, 4, 10_000).unwrap();
        assert!(run.converged);
        assert_eq!(run.tail.len(), 4);
        let last = run.tail.last().unwrap()[0];
        assert!(cycle.iter().any(|p| (p[0] - last).abs() < 1e-10));
    }

    #[test]
    fn stable_fixed_point_gives_constant_tail() {
        let map = logistic(2.5);
        let mut h = seed_history(&map, &coeffs(3, 1, 0.0), &[0.2], 0).unwrap();
        let run = run_until_periodic(&mut h, 1e-12, 2, 10_000).unwrap();
        assert!(run.converged);
        assert_eq!(run.tail.len(), 4);
        assert!(run.tail.iter().all(|s| (s[0] - 0.6).abs() < 1e-10));
    }

    #[test]
    fn not_converged_when_chaotic() {
        let map = logistic(4.0);
        let mut h = seed_history(&map, &coeffs(1, 1, 0.0), &[0.123], 0).unwrap();
        let run = run_until_periodic(&mut h, 1e-9, 2, 500).unwrap();
        assert!(!run.converged);
        assert_eq!(run.iterations, 500);
        assert!(run_until_periodic(&mut h, 0.0, 2, 10).is_err());
    }
}

//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any gated criterion fails.

use std::time::Instant;

use cyclekit::coeffgen::{q_minus_one_closed_form, q_minus_one_direct, MixingCoefficients, MixingParams};
use cyclekit::control::{
    default_gammas, detect_cycles, detect_over_gammas, gamma_grid, refine_point, CycleRecord, LoopHistory, Tolerances,
};
use cyclekit::maps::{builtin, iterate_open, MapSystem};
use cyclekit::stability::{
    i_metric, margin_raster, multiplier_admissible, region_length, schur_stable, stability_bounds, PhiFunction,
    Window, DEFAULT_LENGTH_WINDOW,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn phi(n: usize, t: usize, sigma: f64, gamma: f64) -> PhiFunction {
    let p = MixingParams::new(n, t, sigma, sigma, gamma).unwrap();
    PhiFunction::from_coefficients(&MixingCoefficients::generate(p).unwrap()).unwrap()
}

fn sweep(
    map: &MapSystem,
    n: usize,
    t: usize,
    gammas: &[f64],
    restarts: usize,
    stop: bool,
) -> (Vec<CycleRecord>, Vec<(f64, usize)>) {
    let base = MixingParams::new(n, t, 1.0, 1.0, gammas[0]).unwrap();
    let (rep, per) = detect_over_gammas(map, base, gammas, restarts, 0, &Tolerances::default(), stop).unwrap();
    (rep.cycles, per.into_iter().map(|(g, d)| (g, d.verified)).collect())
}

fn henon_11() -> Outcome {
    let map = builtin("henon").unwrap();
    let (cycles, _) = sweep(&map, 10, 11, &default_gammas(11), 64, false);
    let good: Vec<&CycleRecord> = cycles
        .iter()
        .filter(|c| c.minimal_period == 11 && c.residual < 1e-8 && c.multipliers.iter().any(|m| m.norm() > 1.0))
        .collect();
    let worst = good.iter().map(|c| c.residual).fold(0.0, f64::max);
    outcome(
        !good.is_empty(),
        format!(
            "{} distinct cycles, {} unstable 11-cycles with residual < 1e-8 (max residual {worst:.1e})",
            cycles.len(),
            good.len()
        ),
    )
}

const IKEDA_PRINTED: (f64, f64) = (0.28041732592998354255, 0.48338110785346721899);

fn ikeda_23() -> Outcome {
    let map = builtin("ikeda").unwrap();
    let (cycles, _) = sweep(&map, 36, 23, &default_gammas(23), 64, false);
    let target = (0.2804173, 0.4833811);
    let closest = cycles
        .iter()
        .flat_map(|c| c.points.iter())
        .map(|p| (p[0] - target.0).hypot(p[1] - target.1))
        .fold(f64::INFINITY, f64::min);
    let detected = closest < 1e-4;
    // refinement clause, from the printed point itself
    let refined = refine_point(&map, &[IKEDA_PRINTED.0, IKEDA_PRINTED.1], 23, 50).unwrap();
    let p = &refined.points[0];
    let gap = (p[0] - IKEDA_PRINTED.0).abs().max((p[1] - IKEDA_PRINTED.1).abs());
    outcome(
        detected && gap < 1e-8,
        format!(
            "{} distinct 23-cycles, closest point {closest:.2e} from target (need < 1e-4); \
             Newton from the printed point converges to ({:.17}, {:.17}), residual {:.1e}, \
             {gap:.2e} from the printed value (need < 1e-8)",
            cycles.len(),
            p[0],
            p[1],
            refined.residual
        ),
    )
}

/// Sweeps gains until some gain yields a cycle of full minimal period T.
fn sweep_until_full_period(map: &MapSystem, n: usize, t: usize, gammas: &[f64], restarts: usize) -> (Vec<CycleRecord>, f64) {
    let tol = Tolerances::default();
    let mut all = Vec::new();
    for &g in gammas {
        let params = MixingParams::new(n, t, 1.0, 1.0, g).unwrap();
        let rep = detect_cycles(map, params, restarts, 0, &tol).unwrap();
        all.extend(rep.cycles);
        if all.iter().any(|c| c.minimal_period == t) {
            return (all, g);
        }
    }
    (all, f64::NAN)
}

fn remaining_maps() -> Outcome {
    let fine = gamma_grid(0.05, 0.95, 0.01);
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, t, n, gammas) in [
        ("lozi", 24, 20, default_gammas(24)),
        ("elhadj_sprott", 20, 38, default_gammas(20)),
        ("holmes", 30, 34, fine.clone()),
    ] {
        let map = builtin(name).unwrap();
        let (cycles, gamma) = sweep_until_full_period(&map, n, t, &gammas, 128);
        let full = cycles.iter().filter(|c| c.minimal_period == t && c.residual < 1e-6).count();
        let worst = cycles.iter().map(|c| c.residual).fold(0.0, f64::max);
        pass &= full > 0;
        let mut periods: Vec<usize> = cycles.iter().map(|c| c.minimal_period).collect();
        periods.sort_unstable();
        lines.push(format!(
            "{name} T={t} N={n}: {full} cycles of minimal period {t} by gamma {gamma} (all minimal periods {periods:?}, max residual {worst:.1e})"
        ));
    }
    let map = builtin("henon").unwrap();
    let (cycles, per) = sweep(&map, 40, 28, &default_gammas(28), 128, true);
    lines.push(format!(
        "henon T=28 N=40 (not gated): {} cycles, verified restarts per gamma {:?}",
        cycles.len(),
        per
    ));
    outcome(pass, lines.join("; "))
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

fn q_identities() -> Outcome {
    let mut worst = 0.0f64;
    for s in [1.0, 1.5, 2.0] {
        for t in 1..=30 {
            for n in 2..=40 {
                let p = MixingParams::new(n, t, s, s, 0.0).unwrap();
                let c = MixingCoefficients::generate(p).unwrap();
                let d = q_minus_one_direct(&c.a).abs() - q_minus_one_closed_form(&p).unwrap().abs();
                worst = worst.max(d.abs());
            }
        }
    }
    let ns: Vec<usize> = (10..=200).collect();
    let mut slopes = Vec::new();
    let mut slope_ok = true;
    for s in [1.0, 1.5, 2.0] {
        for t in [1, 2, 3, 5, 10, 30] {
            let q: Vec<f64> = ns
                .iter()
                .map(|&n| q_minus_one_closed_form(&MixingParams::new(n, t, s, s, 0.0).unwrap()).unwrap().abs())
                .collect();
            let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
            let slope = log_log_slope(&x, &q);
            let expect = -s / t as f64;
            let ok = ((slope - expect) / expect).abs() <= 0.15;
            slope_ok &= ok;
            if !ok {
                slopes.push(format!("sigma={s} T={t}: {slope:.4} vs {expect:.4}"));
            }
        }
    }
    let detail = if slopes.is_empty() {
        format!("max | |direct| - |closed| | = {worst:.1e}; all 18 slopes within 15%")
    } else {
        format!("max | |direct| - |closed| | = {worst:.1e}; slopes off: {}", slopes.join(", "))
    };
    outcome(worst < 1e-9 && slope_ok, detail)
}

fn criterion_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut agree, mut skipped, mut disagree) = (0, 0, 0);
    let mut trials = 0;
    while trials < 1000 {
        let n = rng.gen_range(1..=8);
        let t = rng.gen_range(1..=6);
        let gamma = [0.0, 0.3, 0.7][rng.gen_range(0..3)];
        let mu = Complex64::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
        let Ok(p) = MixingParams::new(n, t, 1.0, 1.0, gamma) else { continue };
        let Ok(f) = MixingCoefficients::generate(p).and_then(|c| PhiFunction::from_coefficients(&c)) else {
            continue;
        };
        trials += 1;
        let (stable, margin) = schur_stable(&f, &[mu]).unwrap();
        if margin.abs() < 1e-6 {
            skipped += 1;
            continue;
        }
        match multiplier_admissible(&f, mu) {
            Ok(a) if a == stable => agree += 1,
            Ok(_) => disagree += 1,
            Err(_) => skipped += 1,
        }
    }
    outcome(
        disagree == 0,
        format!("{agree} agree, {disagree} disagree, {skipped} within the margin band, of {trials} trials"),
    )
}

fn mobius_region() -> Outcome {
    let len = region_length(&phi(1, 1, 1.0, 0.9), DEFAULT_LENGTH_WINDOW).unwrap();
    let len_ok = (len.length - 20.0).abs() <= 1e-6;
    let mut mu_err = 0.0f64;
    for g in [0.0, 0.5, 0.9] {
        let f = phi(1, 1, 1.0, g);
        let b = stability_bounds(i_metric(&f).unwrap(), -1.0).unwrap();
        mu_err = mu_err.max((b.mu_star - (1.0 + g) / (1.0 - g)).abs());
    }
    let r = margin_raster(&phi(1, 1, 1.0, 0.9), Window::default(), 400, 400).unwrap();
    let (row, col) = r.argmin().unwrap();
    let c = r.pixel_center(row, col);
    let w = &r.window;
    let (dx, dy) = ((w.re_max - w.re_min) / 400.0, (w.im_max - w.im_min) / 400.0);
    let center = 0.9 / (0.9 - 1.0);
    let pix = ((c.re - center) / dx).abs().max((c.im / dy).abs());
    outcome(
        len_ok && mu_err <= 1e-9 && pix <= 2.0,
        format!(
            "length {:.9}, max |mu* - (1+g)/(1-g)| = {mu_err:.1e}, raster minimum at ({:.4}, {:.4}), {pix:.2} px from ({center}, 0)",
            len.length, c.re, c.im
        ),
    )
}

/// Roots of f^T(x) - x on [0, 1] from sign changes on a grid, refined by
/// bisection.
fn logistic_oracle(mu: f64, t: usize, grid: usize) -> Vec<f64> {
    let g = |x: f64| {
        let mut y = x;
        for _ in 0..t {
            y = mu * y * (1.0 - y);
        }
        y - x
    };
    let mut roots = Vec::new();
    let mut prev = g(0.0);
    if prev == 0.0 {
        roots.push(0.0);
    }
    for k in 1..=grid {
        let x = k as f64 / grid as f64;
        let v = g(x);
        if v == 0.0 {
            roots.push(x);
        } else if prev != 0.0 && prev.signum() != v.signum() {
            let (mut lo, mut hi, mut flo) = ((k - 1) as f64 / grid as f64, x, prev);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = g(mid);
                if fm == 0.0 || hi - lo < 1e-16 {
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
            roots.push(0.5 * (lo + hi));
        }
        prev = v;
    }
    roots
}

fn logistic_oracle_check() -> Outcome {
    let map = builtin("logistic").unwrap().with_param("mu", 3.9).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for t in [3, 4, 5] {
        let oracle = logistic_oracle(3.9, t, 1_000_000);
        let (cycles, _) = sweep(&map, 2 * t, t, &default_gammas(t), 64, false);
        let mut unmatched = 0;
        let mut worst = 0.0f64;
        for c in &cycles {
            for p in &c.points {
                let d = oracle.iter().map(|r| (r - p[0]).abs()).fold(f64::INFINITY, f64::min);
                worst = worst.max(d);
                if d >= 1e-8 {
                    unmatched += 1;
                }
            }
        }
        pass &= unmatched == 0 && !cycles.is_empty();
        lines.push(format!(
            "T={t}: {} cycles, {} oracle roots, worst distance {worst:.1e}, {unmatched} unmatched",
            cycles.len(),
            oracle.len()
        ));
    }
    outcome(pass, lines.join("; "))
}

fn reductions() -> Outcome {
    let henon = builtin("henon").unwrap();
    let x0 = vec![0.1, 0.1];
    let open = iterate_open(&henon, &x0, 10_000).unwrap();
    let coeffs = MixingCoefficients::generate(MixingParams::new(1, 1, 1.0, 1.0, 0.0).unwrap()).unwrap();
    let mut hist = LoopHistory::from_states(henon, coeffs, &[x0]).unwrap();
    let mut bitwise = true;
    for expect in &open[1..] {
        let x = hist.step().unwrap();
        bitwise &= x.iter().zip(expect).all(|(a, b)| a.to_bits() == b.to_bits());
    }

    let mu: f64 = 3.2;
    let s = ((mu - 3.0) * (mu + 1.0)).sqrt();
    let cycle = vec![vec![(mu + 1.0 - s) / (2.0 * mu)], vec![(mu + 1.0 + s) / (2.0 * mu)]];
    let logistic = builtin("logistic").unwrap().with_param("mu", mu).unwrap();
    let mut drift = 0.0f64;
    for n in [1, 2, 5, 10, 20] {
        for gamma in [0.0, 0.3, 0.6, 0.9] {
            let c = MixingCoefficients::generate(MixingParams::new(n, 2, 1.0, 1.0, gamma).unwrap()).unwrap();
            let mut h = LoopHistory::from_cycle(logistic.clone(), c, &cycle).unwrap();
            for k in 0..200 {
                let x = h.step().unwrap();
                drift = drift.max((x[0] - cycle[k % 2][0]).abs());
            }
        }
    }
    outcome(
        bitwise && drift < 1e-9,
        format!("open-loop reduction bitwise: {bitwise}; max 2-cycle drift over 100T steps {drift:.1e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("Henon 11-cycle", henon_11),
        ("Ikeda 23-cycle", ikeda_23),
        ("Lozi, Elhadj-Sprott, Holmes cycles", remaining_maps),
        ("q(-1) identities and decay", q_identities),
        ("criterion equivalence", criterion_equivalence),
        ("closed-form region, T=N=1", mobius_region),
        ("logistic oracle", logistic_oracle_check),
        ("reductions and cycle preservation", reductions),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", k + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.ends_with(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let res = run();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{id} [{name}]: {} ({secs:.1} s) {}",
            if res.pass { "PASS" } else { "FAIL" },
            res.detail
        );
        failed += usize::from(!res.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use gevreych::cli::suite::{self, Cell};
use gevreych::experiments::{
    continuity_experiment, fit_radius, h1_functional, integrate, track_radius, ContinuityOptions, RadiusOptions,
};
use gevreych::gevrey::{check_product_estimates, check_sup_g, derivative_constant, sup_g_factor};
use gevreych::ovsyannikov::{contraction_factor, picard_iterate, window, ContractionOptions};
use gevreych::rng::derive_seed;
use gevreych::systems::{check_3ch_consistency, decay_profile, lifespan_at_norm, lifespan_constants, rhs, rhs_3ch};
use gevreych::{KSign, LadderSpec, SpectralField, SystemState, SystemTag};
use num_complex::Complex64;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

const SEED: u64 = 20_240_601;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Embeddings, derivative loss and multiplier bounds on 1000 samples per
/// cell at K = 128.
fn inequality_suite() -> Outcome {
    let symbol = |m: gevreych::Multiplier, xi: f64| m.symbol(xi);
    let mut checked = 0usize;
    let mut index = 0u64;
    for sigma in [1.0, 1.5, 2.0] {
        for s in [1.0, 2.0] {
            for delta in [0.25, 0.5, 1.0] {
                let cell = Cell { sigma, s, delta };
                let reps = suite::verify_cell(cell, 128, 1000, derive_seed(SEED, "acc-verify", index), &symbol)
                    .map_err(e2s)?;
                index += 1;
                for r in &reps {
                    ensure(r.holds, || format!("{} fails at {cell:?}: lhs={:e} rhs={:e}", r.check, r.lhs, r.rhs))?;
                }
                checked += reps.len();
            }
        }
    }
    Ok(format!("{index} cells x 1000 samples, {checked} worst-case reports all hold"))
}

fn closed_form_constant() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..=12 {
        let sigma = 1.0 + 0.25 * i as f64;
        let r = check_sup_g(sigma);
        worst = worst.max(r.lhs);
        ensure(r.holds, || format!("sigma={sigma}: relative gap {:e}", r.lhs))?;
    }
    let v1 = sup_g_factor(1.0);
    ensure((v1 - 0.1353353).abs() < 5e-8, || format!("sigma=1 value {v1}"))?;
    Ok(format!("worst relative gap {worst:.2e}, sigma=1 value {v1:.7}"))
}

fn ladder_lemmas() -> Outcome {
    let grid = suite::ladder_grid(200);
    ensure(grid.iter().any(|&(s, d, t, a)| (t / window(d, a, s) - 0.999).abs() < 1e-12), || {
        "grid lacks the 0.999 fraction".into()
    })?;
    let reps = suite::ladder_checks(200, 2000).map_err(e2s)?;
    let mut worst_rel: f64 = 0.0;
    for r in &reps {
        ensure(suite::ladder_report_ok(r), || format!("{} fails: {r:?}", r.check))?;
        worst_rel = worst_rel.max(r.param("quad_rel_error").unwrap_or(0.0));
    }
    Ok(format!("{} reports on 200 points, max quadrature relative error {worst_rel:.1e}", reps.len()))
}

fn oracle_equivalence() -> Outcome {
    let mut r = rng(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = random_coeffs(16, 1.0, 0.1, &mut r);
        let b = random_coeffs(16, 1.0, 0.1, &mut r);
        let lib = field(a.clone()).product(&field(b.clone())).map_err(e2s)?;
        worst = worst.max(max_diff(&coeffs(&lib), &convolution(&a, &b)));
    }
    ensure(worst <= 1e-12, || format!("product differs from convolution by {worst:e}"))?;
    let mut gap: f64 = 0.0;
    for _ in 0..100 {
        let st = SystemState::three_ch(
            field(random_coeffs(16, 0.5, 0.2, &mut r)),
            field(random_coeffs(16, 0.5, 0.2, &mut r)),
            field(random_coeffs(16, 0.5, 0.2, &mut r)),
            2.0,
        )
        .map_err(e2s)?;
        let rep = check_3ch_consistency(&st, &rhs_3ch(&st).map_err(e2s)?).map_err(e2s)?;
        ensure(rep.lhs <= 1e-10, || format!("3ch discrepancy {:e}", rep.lhs))?;
        gap = gap.max(rep.lhs);
    }
    Ok(format!("product gap {worst:.1e}, 3ch consistency gap {gap:.1e}"))
}

fn contraction_certificate() -> Outcome {
    let f = |s: &SystemState| rhs(s, KSign::Plus);
    let mut lines = Vec::new();
    for (i, sigma) in [1.0, 2.0].into_iter().enumerate() {
        let u0 = SystemState::ch(SpectralField::cosine(1, 0.1, 64), 2.0);
        let c_s = check_product_estimates(sigma, 2.0, 1.0, 64, 400, derive_seed(SEED, "acc-cs", i as u64))
            .map_err(e2s)?
            .c_s();
        let consts = lifespan_constants(&u0, c_s, sigma).map_err(e2s)?;
        let ladder = LadderSpec::with_defaults(consts.t0, sigma).map_err(e2s)?;
        let dt = ladder.max_time() / 256.0;
        let opts = ContractionOptions {
            trials: 50,
            seed: derive_seed(SEED, "acc-contraction", i as u64),
            radius: consts.r,
            time_varying: false,
            quadrature_dt: Some(dt),
        };
        let c = contraction_factor(&f, &u0, &ladder, &opts).map_err(e2s)?;
        ensure(c.ratios.len() == 50, || format!("only {} usable trials", c.ratios.len()))?;
        ensure(c.max_ratio <= 0.5, || format!("sigma={sigma}: contraction factor {}", c.max_ratio))?;
        let run = picard_iterate(&f, &u0, &ladder, 12, dt).map_err(e2s)?;
        let ratios = run.residual_ratios(1e-13);
        let worst = ratios.iter().copied().fold(0.0, f64::max);
        ensure(worst <= 0.55, || format!("sigma={sigma}: residual ratio {worst}"))?;
        ensure(run.residuals.windows(2).all(|w| w[1] <= w[0]), || format!("sigma={sigma}: residuals not decreasing"))?;
        let last = *run.residuals.last().unwrap();
        ensure(last < 1e-8, || format!("sigma={sigma}: final residual {last:e}"))?;
        lines.push(format!(
            "sigma={sigma}: T0={:.3e} factor={:.2e} ratio<={worst:.2e} final={last:.1e}",
            consts.t0, c.max_ratio
        ));
    }
    Ok(lines.join("; "))
}

fn lifespan_formulas() -> Outcome {
    let g = derivative_constant(1.0);
    let ch = lifespan_at_norm(SystemTag::Ch, 1.0, 1.0, 1.0, g).map_err(e2s)?.t0;
    let three = lifespan_at_norm(SystemTag::ThreeCh, 1.0, 1.0, 1.0, g).map_err(e2s)?.t0;
    // hand computations: 1/(2^7(e^{-1}+2)) and 1/(2^6(C1 + C2)) with C1 = 90 + 27e^{-1}, C2 = 14 + 6e^{-1}
    let e = (-1.0f64).exp();
    let ch_hand = 1.0 / (128.0 * (e + 2.0));
    let three_hand = 1.0 / (64.0 * ((90.0 + 27.0 * e) + (14.0 + 6.0 * e)));
    let six_digits = |a: f64, b: f64| (a - b).abs() <= 5e-7 * b.abs();
    ensure(six_digits(ch, ch_hand), || format!("CH T0 {ch:.6e} vs {ch_hand:.6e}"))?;
    ensure(six_digits(three, three_hand), || format!("3CH T0 {three:.6e} vs {three_hand:.6e}"))?;
    Ok(format!("T0(CH)={ch:.6e}, T0(3CH)={three:.6e}"))
}

fn radius_envelope() -> Outcome {
    let mut lines = Vec::new();
    let n = 128;
    let period = 2.0 * std::f64::consts::PI;
    let sigma = 1.0;
    for (i, tag) in [SystemTag::Ch, SystemTag::TwoCh, SystemTag::ThreeCh].into_iter().enumerate() {
        let u = decay_profile(0.1, 0.5, sigma, n, period);
        let comps = match tag {
            SystemTag::Ch => vec![u],
            SystemTag::TwoCh => vec![u.clone(), u.scale(0.5)],
            _ => vec![u.clone(), u.scale(0.5), u.scale(0.8)],
        };
        let st = SystemState::new(tag, comps, 2.0).map_err(e2s)?;
        let delta_init = gevreych::experiments::fit_state_radius(&st, sigma, 4, n).map_err(e2s)?.delta_hat;
        let c_s = check_product_estimates(sigma, 2.0, delta_init, n, 400, derive_seed(SEED, "acc-radius", i as u64))
            .map_err(e2s)?
            .c_s();
        let opts = RadiusOptions {
            sigma,
            c_s,
            k_sign: KSign::Plus,
            dt: 1e-3,
            t_end: None,
            k_min: 4,
            k_max: n,
            tolerance: 1e-3,
            seed: derive_seed(SEED, "acc-radius-track", i as u64),
        };
        let tr = track_radius(&st, &opts).map_err(e2s)?;
        ensure(tr.passes, || format!("{tag}: radius below floor by {:e}", -tr.worst_margin))?;
        let last = tr.series.fitted_delta.last().copied().unwrap_or(f64::NAN);
        lines.push(format!(
            "{tag}: delta_hat {:.4} -> {last:.4} over [0, {:.2e}], floor ends at {:.1e}, min margin {:.1e}",
            tr.delta_init,
            tr.series.times.last().copied().unwrap_or(0.0),
            tr.floor.last().copied().unwrap_or(f64::NAN),
            tr.worst_margin
        ));
    }
    for (delta, sig) in [(0.5, 1.0), (0.3, 2.0)] {
        let modes: Vec<(i64, Complex64)> =
            (1..=64i64).map(|k| (k, Complex64::new((-delta * (k as f64).powf(1.0 / sig)).exp(), 0.0))).collect();
        let f = SpectralField::synthesize(&modes, 64).map_err(e2s)?;
        let fit = fit_radius(&f, sig, 4, 64).map_err(e2s)?;
        ensure((fit.delta_hat - delta).abs() < 1e-4, || format!("fit {} vs {delta}", fit.delta_hat))?;
    }
    lines.push("synthetic fits within 1e-4".into());
    Ok(lines.join("; "))
}

fn continuity_bound() -> Outcome {
    let cfg = gevreych::config::RunConfig::default();
    let mut worst: f64 = 0.0;
    for tag in [SystemTag::Ch, SystemTag::ThreeCh] {
        let cfg = gevreych::config::RunConfig { system: tag, ..cfg.clone() };
        for (i, &sigma) in cfg.sigma_list.iter().enumerate() {
            let build = |perturb: bool| -> Result<SystemState, String> {
                let comps = tag
                    .component_names()
                    .iter()
                    .enumerate()
                    .map(|(j, name)| {
                        let spec = if perturb { cfg.perturb_for(name) } else { cfg.init_for(name) };
                        spec.build(cfg.resolution_modes, 2.0 * std::f64::consts::PI, sigma, cfg.sobolev_s, j as u64)
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(e2s)?;
                SystemState::new(tag, comps, cfg.sobolev_s).map_err(e2s)
            };
            let c_s = check_product_estimates(
                sigma,
                2.0,
                1.0,
                cfg.resolution_modes,
                400,
                derive_seed(SEED, "acc-cont", i as u64),
            )
            .map_err(e2s)?
            .c_s();
            let opts = ContinuityOptions {
                seed: derive_seed(SEED, "acc-cont-run", i as u64),
                ..ContinuityOptions::new(sigma, c_s)
            };
            let rep = continuity_experiment(&build(false)?, &build(true)?, &[1e-2, 1e-3, 1e-4], &opts).map_err(e2s)?;
            ensure(rep.ratios.len() == 3 && rep.ratios.iter().all(|r| *r <= 2.05), || {
                format!("{tag} sigma={sigma}: ratios {:?}", rep.ratios)
            })?;
            worst = worst.max(rep.max_ratio());
        }
    }
    Ok(format!("CH and 3CH over sigma in {{1, 1.5, 2}}: max ratio {worst:.4}"))
}

fn solver_sanity() -> Outcome {
    let u0 = SystemState::ch(SpectralField::cosine(1, 0.1, 128), 2.0);
    let c_s = check_product_estimates(1.0, 2.0, 1.0, 128, 400, derive_seed(SEED, "acc-h1", 0)).map_err(e2s)?.c_s();
    let window_end = lifespan_constants(&u0, c_s, 1.0).map_err(e2s)?.t0;
    let t_end = 1.0f64.max(window_end);
    let traj = integrate(&u0, KSign::Plus, 1e-3, t_end).map_err(e2s)?;
    let h0 = h1_functional(u0.component(0));
    let drift = traj.states().iter().map(|s| (h1_functional(s.component(0)) - h0).abs() / h0).fold(0.0, f64::max);
    ensure(drift < 1e-6, || format!("relative H1 drift {drift:e}"))?;
    Ok(format!("max relative H1 drift {drift:.2e} over [0, {t_end}] (window {window_end:.3e})"))
}

fn csv_bodies(dir: &Path) -> Result<Vec<(String, String)>, String> {
    let mut files: Vec<_> = std::fs::read_dir(dir).map_err(e2s)?.filter_map(|e| e.ok()).map(|e| e.path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).map_err(e2s)?;
            let body = if p.extension().is_some_and(|e| e == "csv") {
                text.split_once('\n').map_or(String::new(), |(_, b)| b.to_string())
            } else {
                text
            };
            Ok((p.file_name().unwrap().to_string_lossy().into_owned(), body))
        })
        .collect()
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_gevreych");
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "resolution_modes = 32\nsamples = 50\nconstants_samples = 100\ncs_samples = 100\ncontraction_trials = 10\n\
         picard_iterations = 6\nladder_check_points = 40\nt_end_model = 0.1\nsystem = 3ch\n",
    )
    .map_err(e2s)?;
    let commands = ["verify", "estimate-constants", "picard", "simulate", "radius", "continuity"];
    let mut outputs = Vec::new();
    for (run, threads) in [(0, "1"), (1, "3")] {
        let out = tmp.path().join(format!("out{run}"));
        for c in commands {
            let status = Command::new(bin)
                .args([c, "--quiet", "--seed", "99", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .env("GEVREYCH_THREADS", threads)
                .status()
                .map_err(e2s)?;
            ensure(status.code() == Some(0), || format!("{c} exited with {status}"))?;
        }
        outputs.push(csv_bodies(&out)?);
    }
    ensure(outputs[0].len() >= 10, || format!("only {} output files", outputs[0].len()))?;
    ensure(outputs[0] == outputs[1], || {
        let names: Vec<_> =
            outputs[0].iter().zip(&outputs[1]).filter(|(a, b)| a != b).map(|(a, _)| a.0.clone()).collect();
        format!("outputs differ: {names:?}")
    })?;
    Ok(format!("{} files byte-identical across runs with 1 and 3 threads", outputs[0].len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("inequality suite", inequality_suite, Duration::from_secs(120)),
        ("closed-form constant", closed_form_constant, Duration::from_secs(1)),
        ("ladder lemmas", ladder_lemmas, Duration::from_secs(30)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(30)),
        ("contraction certificate", contraction_certificate, Duration::from_secs(300)),
        ("lifespan formulas", lifespan_formulas, Duration::from_secs(1)),
        ("radius envelope", radius_envelope, Duration::from_secs(180)),
        ("continuity bound", continuity_bound, Duration::from_secs(300)),
        ("solver sanity", solver_sanity, Duration::from_secs(60)),
        ("determinism", determinism, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > *budget => Err(format!("{msg}; runtime {took:.1?} exceeds {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} ({took:.2?})", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} ({took:.2?})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

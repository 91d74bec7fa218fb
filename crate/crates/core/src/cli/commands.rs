use serde::{Deserialize, Serialize};

use super::suite::{self, Cell};
use super::{Ctx, Failure};
use crate::config::{FaultInject, RunConfig};
use crate::error::Error;
use crate::experiments::{
    continuity_experiment, h1_functional, integrate, track_radius, ContinuityOptions, RadiusOptions,
};
use crate::gevrey::{check_product_estimates, InequalityReport};
use crate::ovsyannikov::{
    chebyshev_points, contraction_factor, picard_iterate, uniform_fractions, ContractionOptions, LadderSpec,
};
use crate::rng::derive_seed;
use crate::spectral::{Multiplier, DEFAULT_PERIOD};
use crate::systems::{lifespan_constants_with, rhs, LifespanOptions, SystemState};

/// Residuals at or below this are round-off and excluded from ratio checks.
const PICARD_RATIO_FLOOR: f64 = 1e-13;
const PICARD_CONTRACTION_MAX: f64 = 0.5;
const PICARD_RATIO_MAX: f64 = 0.55;
const PICARD_FINAL_RESIDUAL: f64 = 1e-8;

fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

fn fail_first(failures: &[String]) -> Result<(), Failure> {
    match failures.first() {
        Some(f) => Err(Failure::Check(f.clone())),
        None => Ok(()),
    }
}

/// Builds the configured system's initial state, or the perturbation
/// direction when `perturb` is set.
pub(crate) fn build_state(cfg: &RunConfig, sigma: f64, perturb: bool) -> Result<SystemState, Failure> {
    let label = if perturb { "perturb" } else { "init" };
    let comps = cfg
        .system
        .component_names()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let spec = if perturb { cfg.perturb_for(name) } else { cfg.init_for(name) };
            spec.build(
                cfg.resolution_modes,
                DEFAULT_PERIOD,
                sigma,
                cfg.sobolev_s,
                derive_seed(cfg.seed, label, i as u64),
            )
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(SystemState::new(cfg.system, comps, cfg.sobolev_s)?)
}

fn report_row(r: &InequalityReport, cell: Option<Cell>) -> String {
    let get = |name: &str, fallback: Option<f64>| r.param(name).or(fallback).map_or(String::new(), fmt_num);
    format!(
        "{},{},{},{},{},{},{},{},{}\n",
        r.check,
        get("sigma", cell.map(|c| c.sigma)),
        get("s", cell.map(|c| c.s)),
        get("delta", cell.map(|c| c.delta)),
        get("delta_prime", None),
        fmt_num(r.lhs),
        fmt_num(r.rhs),
        fmt_num(r.margin),
        r.holds
    )
}

pub(crate) fn verify(ctx: &Ctx) -> Result<(), Failure> {
    let cfg = &ctx.cfg;
    let corrupt = cfg.fault_inject == FaultInject::P2Symbol;
    let symbol = move |m: Multiplier, xi: f64| {
        let v = m.symbol(xi);
        if corrupt && m == Multiplier::P2 {
            v * 2.0
        } else {
            v
        }
    };

    let mut body = String::from("check,sigma,s,delta,delta_prime,lhs,rhs,margin,holds\n");
    let mut failures = Vec::new();
    let mut index = 0u64;
    for &sigma in &cfg.sigma_list {
        for &s in &cfg.verify_s_list {
            for &delta in &cfg.verify_delta_list {
                let cell = Cell { sigma, s, delta };
                let seed = derive_seed(cfg.seed, "verify-cell", index);
                index += 1;
                let reports = suite::verify_cell(cell, cfg.resolution_modes, cfg.samples, seed, &symbol)?;
                for r in &reports {
                    body.push_str(&report_row(r, Some(cell)));
                    if !r.holds {
                        failures.push(format!("{} at sigma={sigma}, s={s}, delta={delta}", r.check));
                    }
                }
            }
        }
    }
    for r in suite::sup_g_checks(&cfg.sigma_list) {
        body.push_str(&report_row(&r, None));
        if !r.holds {
            failures.push(format!("{} at sigma={}", r.check, r.param("sigma").unwrap_or(f64::NAN)));
        }
    }
    ctx.write_csv("verify_reports.csv", &body)?;

    let ladder = suite::ladder_checks(cfg.ladder_check_points, cfg.ladder_quadrature_intervals)?;
    let mut lbody = String::from("check,sigma,delta,t,a,lhs,rhs,margin,holds,quad_rel_error\n");
    for r in &ladder {
        let p = |n: &str| r.param(n).map_or(String::new(), fmt_num);
        lbody.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.check,
            p("sigma"),
            p("delta"),
            p("t"),
            p("a"),
            fmt_num(r.lhs),
            fmt_num(r.rhs),
            fmt_num(r.margin),
            suite::ladder_report_ok(r),
            p("quad_rel_error")
        ));
        if !suite::ladder_report_ok(r) {
            failures.push(format!(
                "{} at sigma={}, delta={}, t={}, a={}",
                r.check,
                p("sigma"),
                p("delta"),
                p("t"),
                p("a")
            ));
        }
    }
    ctx.write_csv("ladder_lemmas.csv", &lbody)?;

    ctx.say(format!(
        "verify: {} cells x {} samples, {} ladder points, {} failing",
        index,
        cfg.samples,
        cfg.ladder_check_points,
        failures.len()
    ));
    fail_first(&failures)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsEntry {
    pub sigma: f64,
    pub s: f64,
    pub delta: f64,
    pub n_modes: usize,
    pub samples: usize,
    pub seed: u64,
    #[serde(rename = "C_s_hat")]
    pub c_s_hat: f64,
    #[serde(rename = "Cbar_s_hat")]
    pub cbar_s_hat: f64,
}

impl ConstantsEntry {
    pub fn c_s(&self) -> f64 {
        crate::gevrey::CS_INFLATION * self.c_s_hat.max(self.cbar_s_hat)
    }
}

fn constants_seed(cfg: &RunConfig, sigma_index: usize) -> u64 {
    derive_seed(cfg.seed, "constants", sigma_index as u64)
}

fn estimate_entry(cfg: &RunConfig, sigma_index: usize, delta: f64, samples: usize) -> Result<ConstantsEntry, Failure> {
    let sigma = cfg.sigma_list[sigma_index];
    let seed = constants_seed(cfg, sigma_index);
    let est = check_product_estimates(sigma, cfg.sobolev_s, delta, cfg.resolution_modes, samples, seed)?;
    Ok(ConstantsEntry {
        sigma,
        s: cfg.sobolev_s,
        delta,
        n_modes: cfg.resolution_modes,
        samples: est.samples,
        seed,
        c_s_hat: est.c_s_hat,
        cbar_s_hat: est.cbar_s_hat,
    })
}

pub fn read_constants(path: &std::path::Path) -> Result<Vec<ConstantsEntry>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read constants file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("bad constants file {}: {e}", path.display())))
}

/// `C_s` at `(σ, s, δ)`: from the constants file when it has a matching
/// entry, otherwise estimated with `cs_samples` samples.
fn algebra_constant(ctx: &Ctx, sigma_index: usize, delta: f64) -> Result<f64, Failure> {
    let cfg = &ctx.cfg;
    let sigma = cfg.sigma_list[sigma_index];
    if let Some(path) = &cfg.constants_file {
        let hit = read_constants(path)?
            .into_iter()
            .find(|e| e.sigma == sigma && e.s == cfg.sobolev_s && (e.delta - delta).abs() <= 1e-12 * delta.max(1.0));
        if let Some(e) = hit {
            return Ok(e.c_s());
        }
        ctx.say(format!("no constants entry for sigma={sigma}, delta={delta}; estimating"));
    }
    Ok(estimate_entry(cfg, sigma_index, delta, cfg.cs_samples)?.c_s())
}

pub(crate) fn estimate_constants(ctx: &Ctx) -> Result<(), Failure> {
    let cfg = &ctx.cfg;
    let entries = (0..cfg.sigma_list.len())
        .map(|i| estimate_entry(cfg, i, cfg.constants_delta, cfg.constants_samples))
        .collect::<Result<Vec<_>, _>>()?;
    let json = serde_json::to_string_pretty(&entries).map_err(|e| Failure::Io(e.to_string()))?;
    ctx.write_raw("constants.json", &(json + "\n"))?;

    let mut body = String::from("system,sigma,Cs,norm1,L,M,R,T0\n");
    for (i, e) in entries.iter().enumerate() {
        let state = build_state(cfg, e.sigma, false)?;
        let mut opts = LifespanOptions::new(e.c_s(), e.sigma);
        opts.k_sign = cfg.k_sign;
        opts.seed = derive_seed(cfg.seed, "lifespan", i as u64);
        let norm = state.norm(e.sigma, 1.0)?.value;
        match lifespan_constants_with(&state, &opts) {
            Ok(c) => body.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                cfg.system,
                fmt_num(e.sigma),
                fmt_num(e.c_s()),
                fmt_num(norm),
                fmt_num(c.l),
                fmt_num(c.m),
                fmt_num(c.r),
                fmt_num(c.t0)
            )),
            Err(Error::ZeroInitialNorm) => ctx.say(format!("sigma={}: zero initial data, no lifespan", e.sigma)),
            Err(err) => return Err(err.into()),
        }
        ctx.say(format!("sigma={}: C_s_hat={:.6}, Cbar_s_hat={:.6}", e.sigma, e.c_s_hat, e.cbar_s_hat));
    }
    ctx.write_csv("lifespan_constants.csv", &body)?;
    Ok(())
}

fn ladder_for(cfg: &RunConfig, a: f64, sigma: f64) -> crate::Result<LadderSpec> {
    LadderSpec::new(
        a,
        sigma,
        chebyshev_points(cfg.ladder_delta_points, cfg.ladder_delta_min, cfg.ladder_delta_max),
        uniform_fractions(cfg.ladder_t_points, cfg.ladder_t_max_fraction),
    )
}

pub(crate) fn picard(ctx: &Ctx) -> Result<(), Failure> {
    let cfg = &ctx.cfg;
    let k = cfg.k_sign;
    let f = move |s: &SystemState| rhs(s, k);
    let mut failures = Vec::new();
    for (i, &sigma) in cfg.sigma_list.iter().enumerate() {
        let state = build_state(cfg, sigma, false)?;
        let c_s = algebra_constant(ctx, i, 1.0)?;
        let mut lopts = LifespanOptions::new(c_s, sigma);
        lopts.k_sign = k;
        lopts.seed = derive_seed(cfg.seed, "lifespan", i as u64);
        let consts = lifespan_constants_with(&state, &lopts)?;
        let ladder = ladder_for(cfg, consts.t0, sigma)?;
        let dt = ladder.max_time() / cfg.quadrature_panels as f64;

        let copts = ContractionOptions {
            trials: cfg.contraction_trials,
            seed: derive_seed(cfg.seed, "contraction", i as u64),
            radius: consts.r,
            time_varying: cfg.time_varying_trials,
            quadrature_dt: Some(dt),
        };
        let contraction = contraction_factor(&f, &state, &ladder, &copts)?;
        let run = picard_iterate(&f, &state, &ladder, cfg.picard_iterations, dt)?;

        let tag = format!("sigma_{sigma}");
        ctx.write_csv(&format!("contraction_{tag}.csv"), &contraction.to_csv())?;
        ctx.write_csv(&format!("picard_{tag}.csv"), &run.to_csv())?;
        let iters: Vec<f64> = (1..=run.residuals.len()).map(|n| n as f64).collect();
        ctx.write_dat(&format!("picard_{tag}.dat"), &iters, &run.residuals)?;

        let ratios = run.residual_ratios(PICARD_RATIO_FLOOR);
        let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
        let final_residual = *run.residuals.last().unwrap();
        let max_ball = run.ball_distances.iter().copied().fold(0.0, f64::max);
        ctx.say(format!(
            "sigma={sigma}: C_s={c_s:.6}, T0={:.6e}, contraction={:.4}, worst residual ratio={worst_ratio:.4}, final residual={final_residual:.3e}",
            consts.t0, contraction.max_ratio
        ));
        if contraction.max_ratio > PICARD_CONTRACTION_MAX {
            failures.push(format!("contraction factor {} > 0.5 at sigma={sigma}", contraction.max_ratio));
        }
        if worst_ratio > PICARD_RATIO_MAX {
            failures.push(format!("Picard residual ratio {worst_ratio} > 0.55 at sigma={sigma}"));
        }
        if !(final_residual < PICARD_FINAL_RESIDUAL) {
            failures.push(format!("final Picard residual {final_residual} >= 1e-8 at sigma={sigma}"));
        }
        if max_ball > consts.r * (1.0 + 1e-10) {
            failures.push(format!("Picard iterate left the ball: {max_ball} > R = {} at sigma={sigma}", consts.r));
        }
    }
    fail_first(&failures)
}

pub(crate) fn simulate(ctx: &Ctx) -> Result<(), Failure> {
    let cfg = &ctx.cfg;
    let sigma = cfg.sigma_list[0];
    let state = build_state(cfg, sigma, false)?;
    let t_end = cfg.t_end_model.unwrap_or(1.0);
    let traj = integrate(&state, cfg.k_sign, cfg.dt_model, t_end)?;
    let h1: Vec<f64> = traj.states().iter().map(|s| h1_functional(s.component(0))).collect();
    let mut body = String::from("t,h1_u,max_coeff\n");
    for ((t, s), h) in traj.times().iter().zip(traj.states()).zip(&h1) {
        body.push_str(&format!("{},{},{}\n", fmt_num(*t), fmt_num(*h), fmt_num(s.max_abs_coeff())));
    }
    ctx.write_csv("simulate_series.csv", &body)?;
    ctx.write_dat("simulate_h1.dat", traj.times(), &h1)?;
    for (name, comp) in cfg.system.component_names().iter().zip(traj.last_state().components()) {
        ctx.write_csv(&format!("final_{name}.csv"), &comp.to_csv())?;
    }
    let drift = (h1.last().unwrap() - h1[0]).abs() / h1[0].abs().max(f64::MIN_POSITIVE);
    ctx.say(format!(
        "{}: integrated to t={t_end}, {} steps, relative H1 drift {drift:.3e}",
        cfg.system,
        traj.times().len() - 1
    ));
    Ok(())
}

pub(crate) fn radius(ctx: &Ctx) -> Result<(), Failure> {
    let cfg = &ctx.cfg;
    let mut failures = Vec::new();
    for (i, &sigma) in cfg.sigma_list.iter().enumerate() {
        let state = build_state(cfg, sigma, false)?;
        let fit0 = match crate::experiments::fit_state_radius(&state, sigma, cfg.fit_k_min, cfg.fit_k_max()) {
            Ok(f) => f,
            Err(Error::BelowNoiseFloor { usable }) => {
                ctx.say(format!(
                    "sigma={sigma}: initial data below noise floor ({usable} usable modes); nothing to track"
                ));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let c_s = algebra_constant(ctx, i, fit0.delta_hat)?;
        let opts = RadiusOptions {
            sigma,
            c_s,
            k_sign: cfg.k_sign,
            dt: cfg.dt_model,
            t_end: cfg.t_end_model,
            k_min: cfg.fit_k_min,
            k_max: cfg.fit_k_max(),
            tolerance: cfg.radius_tolerance,
            seed: derive_seed(cfg.seed, "radius", i as u64),
        };
        let tr = track_radius(&state, &opts)?;
        let tag = format!("sigma_{sigma}");
        ctx.write_csv(&format!("radius_{tag}.csv"), &tr.to_csv())?;
        ctx.write_dat(&format!("radius_{tag}.dat"), &tr.series.times, &tr.series.fitted_delta)?;
        ctx.write_dat(&format!("radius_floor_{tag}.dat"), &tr.series.times, &tr.floor)?;
        ctx.say(format!(
            "sigma={sigma}: delta_init={:.6}, T0={:.6e}, worst margin {:.3e}",
            tr.delta_init, tr.constants.t0, tr.worst_margin
        ));
        if !tr.passes {
            failures.push(format!(
                "radius fell below the floor by {} (tolerance {}) at sigma={sigma}",
                -tr.worst_margin, cfg.radius_tolerance
            ));
        }
    }
    fail_first(&failures)
}

pub(crate) fn continuity(ctx: &Ctx) -> Result<(), Failure> {
    let cfg = &ctx.cfg;
    let mut failures = Vec::new();
    for (i, &sigma) in cfg.sigma_list.iter().enumerate() {
        let state = build_state(cfg, sigma, false)?;
        let direction = build_state(cfg, sigma, true)?;
        let c_s = algebra_constant(ctx, i, 1.0)?;
        let opts = ContinuityOptions {
            k_sign: cfg.k_sign,
            delta_points: cfg.ladder_delta_points,
            delta_range: (cfg.ladder_delta_min, cfg.ladder_delta_max),
            t_points: cfg.ladder_t_points,
            t_max_fraction: cfg.ladder_t_max_fraction,
            steps: cfg.continuity_steps,
            seed: derive_seed(cfg.seed, "continuity", i as u64),
            ..ContinuityOptions::new(sigma, c_s)
        };
        let rep = continuity_experiment(&state, &direction, &cfg.epsilons, &opts)?;
        let tag = format!("sigma_{sigma}");
        ctx.write_csv(&format!("continuity_{tag}.csv"), &rep.to_csv())?;
        ctx.write_dat(&format!("continuity_{tag}.dat"), &rep.epsilons, &rep.ratios)?;
        let worst = rep.max_ratio();
        ctx.say(format!("sigma={sigma}: T={:.6e}, max ratio {worst:.6}", rep.t_window));
        if worst > cfg.continuity_bound || rep.ratios.iter().any(|r| !r.is_finite()) {
            failures.push(format!("continuity ratio {worst} > {} at sigma={sigma}", cfg.continuity_bound));
        }
    }
    fail_first(&failures)
}

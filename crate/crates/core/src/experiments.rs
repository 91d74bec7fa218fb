//! Time integration, radius-of-analyticity tracking and the data-to-solution
//! continuity experiment.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ovsyannikov::{chebyshev_points, ea_distance, uniform_fractions, LadderSpec, LifespanConstants, Trajectory};
use crate::spectral::SpectralField;
use crate::systems::{continuity_time, lifespan_constants_with, rhs, KSign, LifespanOptions, SystemState, SystemTag};

/// Amplitudes below this are treated as round-off.
pub const NOISE_FLOOR: f64 = 1e-14;
/// Coefficient size treated as blow-up.
pub const OVERFLOW_CAP: f64 = 1e100;
pub const DEFAULT_FIT_K_MIN: usize = 4;

/// Explicit step bound `dt ≤ c/K`.
pub fn stability_constant(tag: SystemTag) -> f64 {
    match tag {
        SystemTag::Ch | SystemTag::TwoCh => 2.0,
        SystemTag::M2Ch | SystemTag::ThreeCh => 1.0,
    }
}

pub fn stability_bound(tag: SystemTag, n_modes: usize) -> f64 {
    stability_constant(tag) / n_modes.max(1) as f64
}

/// Classical fourth-order Runge-Kutta on the coefficient system, storing
/// every step. The step is shrunk to `t_end / ceil(t_end / dt)` so the last
/// node lands on `t_end`.
pub fn integrate(state0: &SystemState, k: KSign, dt: f64, t_end: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t_end >= 0, got dt={dt}, t_end={t_end}")));
    }
    let bound = stability_bound(state0.tag(), state0.n_modes());
    if dt > bound {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} exceeds the stability bound {bound:e} = {}/K for {}",
            stability_constant(state0.tag()),
            state0.tag()
        )));
    }
    let steps = ((t_end / dt) * (1.0 - 1e-12)).ceil() as usize;
    if steps == 0 {
        return Trajectory::new(vec![0.0], vec![state0.clone()]);
    }
    let h = t_end / steps as f64;
    let f = |s: &SystemState| rhs(s, k);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(state0.clone());
    let mut u = state0.clone();
    for i in 1..=steps {
        let k1 = f(&u)?;
        let k2 = f(&u.axpy(h / 2.0, &k1)?)?;
        let k3 = f(&u.axpy(h / 2.0, &k2)?)?;
        let k4 = f(&u.axpy(h, &k3)?)?;
        u = u.axpy(h / 6.0, &k1)?.axpy(h / 3.0, &k2)?.axpy(h / 3.0, &k3)?.axpy(h / 6.0, &k4)?;
        let t = h * i as f64;
        if !u.is_finite() || u.max_abs_coeff() > OVERFLOW_CAP {
            return Err(Error::BlowUp { t, last_valid: times[i - 1] });
        }
        times.push(t);
        states.push(u.clone());
    }
    Trajectory::new(times, states)
}

/// `∫(u² + u_x²) dx = period · Σ (1+ξ²)|û|²`
pub fn h1_functional(u: &SpectralField) -> f64 {
    u.period() * u.modes().map(|(k, c)| (1.0 + u.xi(k).powi(2)) * c.norm_sqr()).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusFit {
    /// Decay rate `δ̂ ≥ 0`.
    pub delta_hat: f64,
    /// Coefficient of `log ξ`.
    pub slope: f64,
    /// RMS residual of the log-amplitude fit.
    pub residual: f64,
    /// Modes used.
    pub usable: usize,
    /// The amplitude at the top of the fit range sits below the noise floor.
    pub resolution_limited: bool,
}

/// Least-squares fit `log|û(k)| ≈ c − δ ξ_k^{1/σ} + slope · log ξ_k` over
/// `k ∈ [k_min, k_max]`, dropping modes below [`NOISE_FLOOR`].
pub fn fit_radius(f: &SpectralField, sigma: f64, k_min: usize, k_max: usize) -> Result<RadiusFit> {
    if !(sigma >= 1.0) || k_min == 0 || k_min > k_max || k_max > f.n_modes() {
        return Err(Error::InvalidParameter(format!(
            "fit needs sigma >= 1 and 1 <= k_min <= k_max <= {}; got sigma={sigma}, range [{k_min}, {k_max}]",
            f.n_modes()
        )));
    }
    let pts: Vec<(f64, f64)> = (k_min..=k_max)
        .filter_map(|k| {
            let a = f.coeff(k as i64).norm();
            (a >= NOISE_FLOOR).then(|| (f.xi(k as i64).abs(), a.ln()))
        })
        .collect();
    if pts.len() < 4 {
        return Err(Error::BelowNoiseFloor { usable: pts.len() });
    }
    let design = DMatrix::from_fn(pts.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => -pts[i].0.powf(1.0 / sigma),
        _ => pts[i].0.ln(),
    });
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::InvalidParameter(format!("radius fit failed: {e}")))?;
    let resid = &design * &coef - &y;
    Ok(RadiusFit {
        delta_hat: coef[1].max(0.0),
        slope: coef[2],
        residual: (resid.norm_squared() / pts.len() as f64).sqrt(),
        usable: pts.len(),
        resolution_limited: f.coeff(k_max as i64).norm() < NOISE_FLOOR,
    })
}

/// Largest decay rate visible at resolution `K`: the rate that takes the
/// largest amplitude down to the noise floor by the last mode.
pub fn resolution_cap(f: &SpectralField, sigma: f64) -> f64 {
    let top = f.max_abs_coeff();
    if top <= NOISE_FLOOR {
        return 0.0;
    }
    (top / NOISE_FLOOR).ln() / f.xi(f.n_modes() as i64).abs().powf(1.0 / sigma)
}

/// Fit of a whole state: the smallest fitted rate over components that have
/// enough resolved modes. A nonzero state whose spectrum drops below the
/// floor too early for a fit gets the resolution cap with the flag set.
pub fn fit_state_radius(state: &SystemState, sigma: f64, k_min: usize, k_max: usize) -> Result<RadiusFit> {
    let mut best: Option<RadiusFit> = None;
    let mut cap = f64::INFINITY;
    for c in state.components() {
        match fit_radius(c, sigma, k_min, k_max) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.delta_hat < b.delta_hat) {
                    best = Some(fit);
                }
            }
            Err(Error::BelowNoiseFloor { .. }) => {
                if c.max_abs_coeff() > NOISE_FLOOR {
                    cap = cap.min(resolution_cap(c, sigma));
                }
            }
            Err(e) => return Err(e),
        }
    }
    match best {
        Some(b) => Ok(b),
        None if cap.is_finite() => {
            Ok(RadiusFit { delta_hat: cap, slope: 0.0, residual: 0.0, usable: 0, resolution_limited: true })
        }
        None => Err(Error::BelowNoiseFloor { usable: 0 }),
    }
}

/// `δ_init (1 − ((2^σ−1)t/T₀)^{1/σ})`, clamped at 0.
pub fn radius_floor(t: f64, t0: f64, sigma: f64, delta_init: f64) -> Result<f64> {
    if !(t >= 0.0) || !(t0 > 0.0) || !(sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!("radius floor needs t >= 0, T0 > 0, sigma >= 1; got t={t}")));
    }
    let x = (2f64.powf(sigma) - 1.0) * t / t0;
    Ok((delta_init * (1.0 - x.powf(1.0 / sigma))).max(0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusSeries {
    pub times: Vec<f64>,
    pub fitted_delta: Vec<f64>,
    pub fit_residual: Vec<f64>,
    pub resolution_limited: Vec<bool>,
    pub sigma_assumed: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusOptions {
    pub sigma: f64,
    /// Algebra constant at `δ = δ̂₀`.
    pub c_s: f64,
    pub k_sign: KSign,
    pub dt: f64,
    /// Defaults to the certified window `T₀/(2^σ−1)`.
    pub t_end: Option<f64>,
    pub k_min: usize,
    pub k_max: usize,
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusTracking {
    pub series: RadiusSeries,
    pub floor: Vec<f64>,
    pub delta_init: f64,
    pub constants: LifespanConstants,
    /// `min_t δ̂(t) − δ_floor(t)`
    pub worst_margin: f64,
    pub passes: bool,
}

impl RadiusTracking {
    pub fn to_csv(&self) -> String {
        let s = &self.series;
        let mut out = String::from("t,delta_hat,delta_floor,residual,resolution_limited\n");
        for i in 0..s.times.len() {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{}\n",
                s.times[i], s.fitted_delta[i], self.floor[i], s.fit_residual[i], s.resolution_limited[i]
            ));
        }
        out
    }
}

/// Integrates, fits `δ̂(t)` at every step and compares against the floor
/// computed from the lifespan constants on the scale topped at `δ̂₀`.
pub fn track_radius(state0: &SystemState, opts: &RadiusOptions) -> Result<RadiusTracking> {
    let fit0 = fit_state_radius(state0, opts.sigma, opts.k_min, opts.k_max)?;
    let delta_init = fit0.delta_hat;
    if !(delta_init > 0.0) {
        return Err(Error::InvalidParameter("initial data has zero fitted radius; nothing to track".into()));
    }
    let lopts = LifespanOptions {
        c_s: opts.c_s,
        sigma: opts.sigma,
        radius_scale: delta_init,
        k_sign: opts.k_sign,
        trials: 32,
        seed: opts.seed,
    };
    let constants = lifespan_constants_with(state0, &lopts)?;
    let t_end = opts.t_end.unwrap_or(constants.t0 / (2f64.powf(opts.sigma) - 1.0));
    let traj = integrate(state0, opts.k_sign, opts.dt, t_end)?;

    let fits: Vec<RadiusFit> = traj
        .states()
        .par_iter()
        .map(|s| fit_state_radius(s, opts.sigma, opts.k_min, opts.k_max))
        .collect::<Result<_>>()?;
    let floor = traj
        .times()
        .iter()
        .map(|&t| radius_floor(t, constants.t0, opts.sigma, delta_init))
        .collect::<Result<Vec<_>>>()?;
    let worst_margin = fits.iter().zip(&floor).map(|(f, fl)| f.delta_hat - fl).fold(f64::INFINITY, f64::min);
    let series = RadiusSeries {
        times: traj.times().to_vec(),
        fitted_delta: fits.iter().map(|f| f.delta_hat).collect(),
        fit_residual: fits.iter().map(|f| f.residual).collect(),
        resolution_limited: fits.iter().map(|f| f.resolution_limited).collect(),
        sigma_assumed: opts.sigma,
    };
    Ok(RadiusTracking { series, floor, delta_init, constants, worst_margin, passes: worst_margin >= -opts.tolerance })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityOptions {
    pub sigma: f64,
    pub c_s: f64,
    pub k_sign: KSign,
    pub delta_points: usize,
    pub delta_range: (f64, f64),
    pub t_points: usize,
    pub t_max_fraction: f64,
    /// Runge-Kutta steps across the sampled part of the window.
    pub steps: usize,
    pub seed: u64,
}

impl ContinuityOptions {
    pub fn new(sigma: f64, c_s: f64) -> Self {
        Self {
            sigma,
            c_s,
            k_sign: KSign::Plus,
            delta_points: crate::ovsyannikov::DEFAULT_DELTA_POINTS,
            delta_range: crate::ovsyannikov::DEFAULT_DELTA_RANGE,
            t_points: crate::ovsyannikov::DEFAULT_T_POINTS,
            t_max_fraction: crate::ovsyannikov::DEFAULT_T_MAX_FRACTION,
            steps: 64,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityReport {
    pub epsilons: Vec<f64>,
    pub input_dists: Vec<f64>,
    pub output_dists: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `T` of the `E_T` norm.
    pub t_window: f64,
}

impl ContinuityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,input_dist,output_dist,ratio\n");
        for i in 0..self.epsilons.len() {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e}\n",
                self.epsilons[i], self.input_dists[i], self.output_dists[i], self.ratios[i]
            ));
        }
        out
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Solves from `U₀` and from `U₀ + ε·d` on the `E_T` ladder, with `T` from
/// the constants at `‖U₀‖₁ + 1`, and reports `‖Uᵉ − U‖_{E_T} / ‖ε d‖₁`.
/// Zero `ε` is skipped.
pub fn continuity_experiment(
    state0: &SystemState,
    direction: &SystemState,
    epsilons: &[f64],
    opts: &ContinuityOptions,
) -> Result<ContinuityReport> {
    if opts.steps == 0 || opts.delta_points == 0 || opts.t_points == 0 {
        return Err(Error::InvalidParameter("continuity grids need at least one point".into()));
    }
    let mut lopts = LifespanOptions::new(opts.c_s, opts.sigma);
    lopts.k_sign = opts.k_sign;
    lopts.seed = opts.seed;
    let t = continuity_time(state0, &lopts)?.t0;
    let (lo, hi) = opts.delta_range;
    let ladder = LadderSpec::new(
        t,
        opts.sigma,
        chebyshev_points(opts.delta_points, lo, hi),
        uniform_fractions(opts.t_points, opts.t_max_fraction),
    )?;
    let t_end = ladder.max_time();
    let dt = t_end / opts.steps as f64;
    let base = integrate(state0, opts.k_sign, dt, t_end)?;

    let eps: Vec<f64> = epsilons.iter().copied().filter(|e| *e != 0.0).collect();
    let rows = eps
        .par_iter()
        .map(|&e| -> Result<(f64, f64)> {
            let shifted = state0.axpy(e, direction)?;
            let input = shifted.sub(state0)?.norm(opts.sigma, 1.0)?.value;
            let traj = integrate(&shifted, opts.k_sign, dt, t_end)?;
            Ok((input, ea_distance(&traj, &base, &ladder)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContinuityReport {
        input_dists: rows.iter().map(|r| r.0).collect(),
        output_dists: rows.iter().map(|r| r.1).collect(),
        ratios: rows.iter().map(|r| if r.0 > 0.0 { r.1 / r.0 } else { f64::NAN }).collect(),
        epsilons: eps,
        t_window: t,
    })
}

//! Fixed-point frame on a scale of Banach spaces `X_δ`, `0 < δ < 1`: the
//! ladder geometry, the weighted norm `E_a`, the Picard operator
//! `G(u)(t) = u₀ + ∫₀ᵗ F(u(τ)) dτ` and the lifespan formula.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gevrey::{random_gevrey_field_with_period, GevreyParams, InequalityReport};
use crate::quadrature;
use crate::rng::{derive_seed, rng_from};
use crate::systems::{StateWeights, SystemState};

pub const DEFAULT_DELTA_POINTS: usize = 32;
pub const DEFAULT_DELTA_RANGE: (f64, f64) = (0.02, 0.98);
pub const DEFAULT_T_POINTS: usize = 16;
pub const DEFAULT_T_MAX_FRACTION: f64 = 0.95;
/// Panels per ladder window in the Picard time quadrature.
pub const DEFAULT_QUADRATURE_PANELS: usize = 256;

/// Right-hand side `F` of an autonomous system `u_t = F(u)`.
pub type Rhs<'a> = dyn Fn(&SystemState) -> Result<SystemState> + Sync + 'a;

/// `(2^σ − 1)`
fn two_sigma_minus_one(sigma: f64) -> f64 {
    2f64.powf(sigma) - 1.0
}

/// Time window `a(1−δ)^σ/(2^σ−1)` attached to radius `δ`.
pub fn window(delta: f64, a: f64, sigma: f64) -> f64 {
    a * (1.0 - delta).powf(sigma) / two_sigma_minus_one(sigma)
}

fn check_window(delta: f64, t: f64, a: f64, sigma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) || !(a > 0.0) || !(sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= delta < 1, a > 0, sigma >= 1; got delta={delta}, a={a}, sigma={sigma}"
        )));
    }
    let w = window(delta, a, sigma);
    if !(t >= 0.0 && t < w) {
        return Err(Error::OutsideWindow { t, window: w });
    }
    Ok(())
}

/// Sampling grid for the `E_a` supremum.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderSpec {
    a: f64,
    sigma: f64,
    delta_grid: Vec<f64>,
    t_fraction_grid: Vec<f64>,
}

/// `n` Chebyshev-Lobatto points in `[lo, hi]`, increasing. Grids with
/// `n − 1` doubled nest.
pub fn chebyshev_points(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    if n == 1 {
        return vec![mid];
    }
    (0..n).map(|j| mid - half * (std::f64::consts::PI * j as f64 / (n - 1) as f64).cos()).collect()
}

/// `n` uniform points in `[0, hi]`.
pub fn uniform_fractions(n: usize, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|j| hi * j as f64 / (n - 1) as f64).collect()
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl LadderSpec {
    pub fn new(a: f64, sigma: f64, delta_grid: Vec<f64>, t_fraction_grid: Vec<f64>) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(sigma >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ladder needs a > 0 and sigma >= 1, got a={a}, sigma={sigma}"
            )));
        }
        if delta_grid.is_empty()
            || !strictly_increasing(&delta_grid)
            || delta_grid.iter().any(|d| !(*d > 0.0 && *d < 1.0))
        {
            return Err(Error::InvalidParameter("delta grid must be nonempty, increasing, inside (0,1)".into()));
        }
        if t_fraction_grid.is_empty()
            || !strictly_increasing(&t_fraction_grid)
            || t_fraction_grid.iter().any(|f| !(*f >= 0.0 && *f < 1.0))
        {
            return Err(Error::InvalidParameter("t-fraction grid must be nonempty, increasing, inside [0,1)".into()));
        }
        Ok(Self { a, sigma, delta_grid, t_fraction_grid })
    }

    pub fn with_defaults(a: f64, sigma: f64) -> Result<Self> {
        let (lo, hi) = DEFAULT_DELTA_RANGE;
        Self::new(
            a,
            sigma,
            chebyshev_points(DEFAULT_DELTA_POINTS, lo, hi),
            uniform_fractions(DEFAULT_T_POINTS, DEFAULT_T_MAX_FRACTION),
        )
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        Self::new(a, self.sigma, self.delta_grid.clone(), self.t_fraction_grid.clone())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta_grid(&self) -> &[f64] {
        &self.delta_grid
    }

    pub fn t_fraction_grid(&self) -> &[f64] {
        &self.t_fraction_grid
    }

    pub fn window(&self, delta: f64) -> f64 {
        window(delta, self.a, self.sigma)
    }

    /// Latest sampled time.
    pub fn max_time(&self) -> f64 {
        self.t_fraction_grid.last().unwrap() * self.window(self.delta_grid[0])
    }

    /// `(1−δ)^σ √(1 − t/(a(1−δ)^σ))`
    pub fn weight(&self, delta: f64, t: f64) -> f64 {
        let d = (1.0 - delta).powf(self.sigma);
        d * (1.0 - t / (self.a * d)).max(0.0).sqrt()
    }
}

/// Samples `u(t)` at increasing times starting from 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<SystemState>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<SystemState>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::InvalidParameter("trajectory needs matching nonempty times and states".into()));
        }
        if times[0] != 0.0 || !strictly_increasing(&times) {
            return Err(Error::InvalidParameter("trajectory times must start at 0 and increase".into()));
        }
        let tag = states[0].tag();
        for s in &states[1..] {
            s.expect_tag(tag)?;
        }
        Ok(Self { times, states })
    }

    /// `u(t) ≡ state` on `[0, t_end]`.
    pub fn constant(state: SystemState, t_end: f64) -> Self {
        if t_end > 0.0 {
            Self { times: vec![0.0, t_end], states: vec![state.clone(), state] }
        } else {
            Self { times: vec![0.0], states: vec![state] }
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last_state(&self) -> &SystemState {
        self.states.last().unwrap()
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<SystemState>) {
        (self.times, self.states)
    }

    /// Linear interpolation in `t`, coefficientwise.
    pub fn state_at(&self, t: f64) -> Result<SystemState> {
        let last = self.last_time();
        if t < 0.0 || t > last * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::TrajectoryTooShort { last, needed: t });
        }
        let i = self.times.partition_point(|&x| x <= t);
        if i == 0 {
            return Ok(self.states[0].clone());
        }
        if i >= self.times.len() {
            return Ok(self.states[self.times.len() - 1].clone());
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let theta = (t - t0) / (t1 - t0);
        if theta == 0.0 {
            return Ok(self.states[i - 1].clone());
        }
        self.states[i - 1].scale(1.0 - theta).axpy(theta, &self.states[i])
    }

    /// Pointwise difference on a shared time grid.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::InvalidParameter("trajectories sampled at different times".into()));
        }
        let states = self.states.iter().zip(&other.states).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        Ok(Self { times: self.times.clone(), states })
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.states.iter().map(SystemState::max_abs_coeff).fold(0.0, f64::max)
    }
}

/// `sup ‖u(t)‖_δ (1−δ)^σ √(1 − t/(a(1−δ)^σ))` over the ladder's sample grid.
pub fn ea_norm(traj: &Trajectory, ladder: &LadderSpec) -> Result<f64> {
    let needed = ladder.max_time();
    if needed > traj.last_time() * (1.0 + 1e-12) {
        return Err(Error::TrajectoryTooShort { last: traj.last_time(), needed });
    }
    let template = &traj.states[0];
    let per_delta = ladder
        .delta_grid
        .par_iter()
        .map(|&delta| -> Result<f64> {
            let weights = StateWeights::new(template, ladder.sigma, delta)?;
            let w = ladder.window(delta);
            let mut best: f64 = 0.0;
            for &frac in &ladder.t_fraction_grid {
                let t = frac * w;
                let u = traj.state_at(t)?;
                best = best.max(weights.norm(&u).value * ladder.weight(delta, t));
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_delta.into_iter().fold(0.0, f64::max))
}

pub fn ea_distance(a: &Trajectory, b: &Trajectory, ladder: &LadderSpec) -> Result<f64> {
    ea_norm(&a.sub(b)?, ladder)
}

/// `G(u)(t_i) = u₀ + ∫₀^{t_i} F(u(τ)) dτ` on the trajectory's own nodes.
/// Even nodes use composite Simpson; odd nodes add a final panel with the
/// third-order one-panel rule, so constants and linear integrands are exact.
pub fn apply_g(rhs: &Rhs<'_>, u0: &SystemState, traj: &Trajectory) -> Result<Trajectory> {
    let n = traj.times.len();
    let f: Vec<SystemState> = traj.states.par_iter().map(rhs).collect::<Result<_>>()?;
    if n == 1 {
        return Trajectory::new(vec![0.0], vec![u0.clone()]);
    }
    let h = traj.times[1] - traj.times[0];
    let uniform = traj.times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    if !uniform {
        return Err(Error::InvalidParameter("Picard quadrature needs uniform time nodes".into()));
    }
    let mut integral = vec![u0.zeros_like(); n];
    for i in 1..n {
        integral[i] = if i % 2 == 0 {
            integral[i - 2].axpy(h / 3.0, &f[i - 2])?.axpy(4.0 * h / 3.0, &f[i - 1])?.axpy(h / 3.0, &f[i])?
        } else if i + 1 < n {
            integral[i - 1].axpy(5.0 * h / 12.0, &f[i - 1])?.axpy(8.0 * h / 12.0, &f[i])?.axpy(-h / 12.0, &f[i + 1])?
        } else if i >= 2 {
            integral[i - 1].axpy(-h / 12.0, &f[i - 2])?.axpy(8.0 * h / 12.0, &f[i - 1])?.axpy(5.0 * h / 12.0, &f[i])?
        } else {
            integral[0].axpy(h / 2.0, &f[0])?.axpy(h / 2.0, &f[1])?
        };
    }
    let states = integral.iter().map(|s| u0.add(s)).collect::<Result<_>>()?;
    Trajectory::new(traj.times.clone(), states)
}

/// Uniform nodes covering the ladder with spacing at most `dt`.
pub fn picard_nodes(ladder: &LadderSpec, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("quadrature_dt must be positive, got {dt}")));
    }
    let t_max = ladder.max_time();
    let n = ((t_max / dt).ceil() as usize).max(2);
    Ok((0..=n).map(|i| t_max * i as f64 / n as f64).collect())
}

/// Default Picard time step: the widest window over 256 panels.
pub fn default_quadrature_dt(ladder: &LadderSpec) -> f64 {
    ladder.max_time() / DEFAULT_QUADRATURE_PANELS as f64
}

#[derive(Clone, Debug)]
pub struct PicardRun {
    /// `u⁰, u¹, …, uⁿ`
    pub trajectories: Vec<Trajectory>,
    /// `‖u^{k+1} − u^k‖_{E_a}` for `k = 0..n`.
    pub residuals: Vec<f64>,
    /// `‖u^{k+1} − u₀‖_{E_a}`
    pub ball_distances: Vec<f64>,
    pub max_coeffs: Vec<f64>,
}

impl PicardRun {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,residual_Ea,ball_distance,max_coeff\n");
        for (i, ((r, b), m)) in self.residuals.iter().zip(&self.ball_distances).zip(&self.max_coeffs).enumerate() {
            out.push_str(&format!("{},{:e},{:e},{:e}\n", i + 1, r, b, m));
        }
        out
    }

    /// Successive residual ratios, skipping residuals at or below `floor`.
    pub fn residual_ratios(&self, floor: f64) -> Vec<f64> {
        self.residuals.windows(2).filter(|w| w[0] > floor && w[1] > floor).map(|w| w[1] / w[0]).collect()
    }

    pub fn last(&self) -> &Trajectory {
        self.trajectories.last().unwrap()
    }
}

/// `u⁰ ≡ u₀`, `u^{n+1} = G(uⁿ)`.
pub fn picard_iterate(
    rhs: &Rhs<'_>,
    u0: &SystemState,
    ladder: &LadderSpec,
    iterations: usize,
    quadrature_dt: f64,
) -> Result<PicardRun> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("picard needs at least one iteration".into()));
    }
    let times = picard_nodes(ladder, quadrature_dt)?;
    let start = Trajectory::new(times.clone(), vec![u0.clone(); times.len()])?;
    let mut run = PicardRun {
        trajectories: vec![start.clone()],
        residuals: Vec::with_capacity(iterations),
        ball_distances: Vec::with_capacity(iterations),
        max_coeffs: Vec::with_capacity(iterations),
    };
    for _ in 0..iterations {
        let prev = run.trajectories.last().unwrap();
        let next = apply_g(rhs, u0, prev)?;
        if next.states.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("Picard iterate became non-finite".into()));
        }
        run.residuals.push(ea_distance(&next, prev, ladder)?);
        run.ball_distances.push(ea_distance(&next, &start, ladder)?);
        run.max_coeffs.push(next.max_abs_coeff());
        run.trajectories.push(next);
    }
    Ok(run)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifespanConstants {
    pub l: f64,
    pub m: f64,
    pub r: f64,
    pub sigma: f64,
    pub t0: f64,
}

/// `T₀ = min{1/(2^{2σ+4}L), (2^σ−1)R/((2^σ−1)2^{2σ+3}LR + M)}`
pub fn lifespan_t0(l: f64, m: f64, r: f64, sigma: f64) -> Result<LifespanConstants> {
    if !(l > 0.0) || !(r > 0.0) || !(m >= 0.0) || !(sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lifespan needs L > 0, R > 0, M >= 0, sigma >= 1; got L={l}, M={m}, R={r}, sigma={sigma}"
        )));
    }
    let q = two_sigma_minus_one(sigma);
    let first = 1.0 / (2f64.powf(2.0 * sigma + 4.0) * l);
    let second = q * r / (q * 2f64.powf(2.0 * sigma + 3.0) * l * r + m);
    Ok(LifespanConstants { l, m, r, sigma, t0: first.min(second) })
}

/// `δ(τ) = ½(1+δ) + (½)^{2+1/σ}{[(1−δ)^σ − τ/a]^{1/σ} − [(1−δ)^σ + (2^{σ+1}−1)τ/a]^{1/σ}}`
pub fn delta_tau(delta: f64, tau: f64, a: f64, sigma: f64) -> Result<f64> {
    check_window(delta, tau, a, sigma)?;
    Ok(delta_tau_unchecked(delta, tau, a, sigma))
}

fn delta_tau_unchecked(delta: f64, tau: f64, a: f64, sigma: f64) -> f64 {
    let base = (1.0 - delta).powf(sigma);
    let inv = 1.0 / sigma;
    let lo = (base - tau / a).max(0.0).powf(inv);
    let hi = (base + (2f64.powf(sigma + 1.0) - 1.0) * tau / a).powf(inv);
    0.5 * (1.0 + delta) + 0.5f64.powf(2.0 + inv) * (lo - hi)
}

/// `1−δ > (½)^{1+1/σ}{[(1−δ)^σ − t/a]^{1/σ} + [(1−δ)^σ + (2^{σ+1}−1)t/a]^{1/σ}}`
pub fn check_scale_inequality(delta: f64, t: f64, a: f64, sigma: f64) -> Result<InequalityReport> {
    check_window(delta, t, a, sigma)?;
    let base = (1.0 - delta).powf(sigma);
    let inv = 1.0 / sigma;
    let lhs =
        0.5f64.powf(1.0 + inv) * ((base - t / a).powf(inv) + (base + (2f64.powf(sigma + 1.0) - 1.0) * t / a).powf(inv));
    Ok(InequalityReport::strict(
        "scale_inequality",
        lhs,
        1.0 - delta,
        vec![("sigma", sigma), ("delta", delta), ("t", t), ("a", a)],
    ))
}

/// Fraction of `[0, t]` near the upper end integrated in the variable
/// `u` with `τ = t(1 − u²)`.
const SINGULAR_FRACTION: f64 = 0.01;
const LADDER_REL_TOL: f64 = 1e-10;

/// Integrates the worst-case envelope
/// `1/((δ(τ)−δ)^σ (1−δ(τ))^σ √(1 − τ/(a(1−δ(τ))^σ)))` over `[0, t]` and
/// compares against `a 2^{2σ+3}/(1−δ)^σ · √(a(1−δ)^σ/(a(1−δ)^σ − t))`.
/// `max_intervals` bounds the adaptive subdivision of each piece.
pub fn check_ladder_integral(delta: f64, t: f64, a: f64, sigma: f64, max_intervals: usize) -> Result<InequalityReport> {
    check_window(delta, t, a, sigma)?;
    let base = (1.0 - delta).powf(sigma);
    let bound = a * 2f64.powf(2.0 * sigma + 3.0) / base * (a * base / (a * base - t)).sqrt();
    let phi = |tau: f64| {
        let d = delta_tau_unchecked(delta, tau, a, sigma);
        let top = (1.0 - d).powf(sigma);
        1.0 / ((d - delta).powf(sigma) * top * (1.0 - tau / (a * top)).sqrt())
    };
    let params = |value: f64, err: f64| {
        vec![
            ("sigma", sigma),
            ("delta", delta),
            ("t", t),
            ("a", a),
            ("quad_error", err),
            ("quad_rel_error", if value > 0.0 { err / value } else { 0.0 }),
        ]
    };
    if t == 0.0 {
        return Ok(InequalityReport::new("ladder_integral", 0.0, bound, params(0.0, 0.0)));
    }
    let split = (1.0 - SINGULAR_FRACTION) * t;
    let body = quadrature::integrate(phi, 0.0, split, LADDER_REL_TOL, 0.0, max_intervals)?;
    let u_max = SINGULAR_FRACTION.sqrt();
    let tail = quadrature::integrate(
        |u| phi(t * (1.0 - u * u)) * 2.0 * t * u,
        0.0,
        u_max,
        LADDER_REL_TOL,
        0.0,
        max_intervals,
    )?;
    let value = body.value + tail.value;
    let err = body.error + tail.error;
    Ok(InequalityReport::new("ladder_integral", value, bound, params(value, err)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionOptions {
    pub trials: usize,
    pub seed: u64,
    /// Ball radius in `E_a`.
    pub radius: f64,
    /// Perturbations `p₀ + (t/t_max) p₁` instead of constants.
    pub time_varying: bool,
    /// Time step for time-varying trials.
    pub quadrature_dt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    /// `(trial, ratio)`; degenerate pairs are skipped.
    pub ratios: Vec<(usize, f64)>,
    pub max_ratio: f64,
}

impl ContractionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,ratio\n");
        for (i, r) in &self.ratios {
            out.push_str(&format!("{i},{r:e}\n"));
        }
        out
    }
}

fn random_direction(u0: &SystemState, sigma: f64, rng: &mut impl Rng) -> Result<SystemState> {
    let comps = u0
        .s_indices()
        .iter()
        .map(|&s| {
            let p = GevreyParams::new(sigma, 1.0, s)?;
            let surplus = rng.gen_range(0.05..1.0);
            Ok(random_gevrey_field_with_period(p, surplus, u0.n_modes(), u0.period(), rng.gen()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(u0.with_components(comps))
}

/// `max ‖G(u)−G(v)‖_{E_a} / ‖u−v‖_{E_a}` over random pairs in the ball
/// `B(u₀, R)`.
pub fn contraction_factor(
    rhs: &Rhs<'_>,
    u0: &SystemState,
    ladder: &LadderSpec,
    opts: &ContractionOptions,
) -> Result<ContractionReport> {
    if opts.trials == 0 {
        return Err(Error::InvalidParameter("contraction needs at least one trial".into()));
    }
    let times = if opts.time_varying {
        picard_nodes(ladder, opts.quadrature_dt.unwrap_or_else(|| default_quadrature_dt(ladder)))?
    } else {
        vec![0.0, ladder.max_time()]
    };
    let t_end = *times.last().unwrap();
    let sigma = ladder.sigma;

    let trial = |i: usize| -> Result<Option<f64>> {
        let mut rng = rng_from(derive_seed(opts.seed, "contraction", i as u64));
        let member = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<Trajectory> {
            let p0 = random_direction(u0, sigma, rng)?;
            let p1 = if opts.time_varying { Some(random_direction(u0, sigma, rng)?) } else { None };
            let states = times
                .iter()
                .map(|&t| match &p1 {
                    Some(p1) => p0.axpy(t / t_end, p1),
                    None => Ok(p0.clone()),
                })
                .collect::<Result<Vec<_>>>()?;
            let p = Trajectory::new(times.clone(), states)?;
            let size = ea_norm(&p, ladder)?;
            let target = opts.radius * rng.gen_range(0.05..1.0);
            let scale = if size > 0.0 { target / size } else { 0.0 };
            let states = p.states.iter().map(|s| u0.axpy(scale, s)).collect::<Result<Vec<_>>>()?;
            Trajectory::new(times.clone(), states)
        };
        let u = member(&mut rng)?;
        let v = member(&mut rng)?;
        let denom = ea_distance(&u, &v, ladder)?;
        if denom == 0.0 {
            return Ok(None);
        }
        let num = ea_distance(&apply_g(rhs, u0, &u)?, &apply_g(rhs, u0, &v)?, ladder)?;
        Ok(Some(num / denom))
    };

    let ratios: Vec<(usize, f64)> = (0..opts.trials)
        .into_par_iter()
        .map(|i| trial(i).map(|r| r.map(|r| (i, r))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let max_ratio = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(ContractionReport { ratios, max_ratio })
}

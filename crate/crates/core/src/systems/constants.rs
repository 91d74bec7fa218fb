use rand::Rng;
use rayon::prelude::*;

use super::rhs::rhs;
use super::state::{KSign, StateWeights, SystemState, SystemTag};
use crate::error::{Error, Result};
use crate::gevrey::{derivative_constant, random_gevrey_field_with_period, GevreyParams};
use crate::ovsyannikov::{lifespan_t0, LifespanConstants};
use crate::rng::{derive_seed, rng_from};

/// `C_{1,σ} = C1_BASE + 27 e^{−σ}σ^σ`
pub const C1_BASE: f64 = 90.0;
/// `C_{2,σ} = C2_BASE + 6 e^{−σ}σ^σ`
pub const C2_BASE: f64 = 14.0;

/// Safety factor applied to sampled suprema.
const SAMPLE_INFLATION: f64 = 1.10;

#[derive(Clone, Debug, PartialEq)]
pub struct LifespanOptions {
    pub c_s: f64,
    pub sigma: f64,
    /// Top of the scale. Norms are taken at `δ = radius_scale` and the
    /// derivative constant becomes `e^{−σ}σ^σ / radius_scale^σ`.
    pub radius_scale: f64,
    pub k_sign: KSign,
    /// Lipschitz samples for the modified two-component system.
    pub trials: usize,
    pub seed: u64,
}

impl LifespanOptions {
    pub fn new(c_s: f64, sigma: f64) -> Self {
        Self { c_s, sigma, radius_scale: 1.0, k_sign: KSign::Plus, trials: 32, seed: 0 }
    }

    fn g(&self) -> f64 {
        derivative_constant(self.sigma) / self.radius_scale.powf(self.sigma)
    }
}

/// Closed-form `(L, M, R)` for CH, 2CH and 3CH at initial norm `norm`,
/// followed by the general lifespan formula.
pub fn lifespan_at_norm(tag: SystemTag, norm: f64, c_s: f64, sigma: f64, g: f64) -> Result<LifespanConstants> {
    if !(c_s > 0.0) {
        return Err(Error::InvalidParameter(format!("C_s must be positive, got {c_s}")));
    }
    if norm == 0.0 {
        return Err(Error::ZeroInitialNorm);
    }
    let c = c_s;
    let n = norm;
    let (l, m) = match tag {
        SystemTag::Ch => (2.0 * c * (g + 2.0) * n, c * (g / 2.0 + 1.0) * n * n),
        SystemTag::TwoCh => (4.0 * c * (g + 1.0) * n, c * (g + 5.0) / 2.0 * n * n),
        SystemTag::ThreeCh => {
            let c1 = C1_BASE + 27.0 * g;
            let c2 = C2_BASE + 6.0 * g;
            let l = c * c * n * n * c1 + c * n * c2;
            let m = c * n * n * (c * n * (7.5 + 2.25 * g) + (4.5 + 1.5 * g));
            (l, m)
        }
        SystemTag::M2Ch => {
            return Err(Error::InvalidParameter("m2ch has no closed-form constants; use lifespan_constants".into()))
        }
    };
    lifespan_t0(l, m, n, sigma)
}

pub fn lifespan_constants(state0: &SystemState, c_s: f64, sigma: f64) -> Result<LifespanConstants> {
    lifespan_constants_with(state0, &LifespanOptions::new(c_s, sigma))
}

pub fn lifespan_constants_with(state0: &SystemState, opts: &LifespanOptions) -> Result<LifespanConstants> {
    let norm = state0.norm(opts.sigma, opts.radius_scale)?.value;
    if norm == 0.0 {
        return Err(Error::ZeroInitialNorm);
    }
    match state0.tag() {
        SystemTag::M2Ch => {
            let (l, m) = estimate_m2ch_constants(state0, opts)?;
            lifespan_t0(l, m, norm, opts.sigma)
        }
        tag => lifespan_at_norm(tag, norm, opts.c_s, opts.sigma, opts.g()),
    }
}

/// Constants evaluated at `‖U₀‖₁ + 1`, the uniform choice over a family of
/// perturbed data near `U₀`.
pub fn continuity_time(state0: &SystemState, opts: &LifespanOptions) -> Result<LifespanConstants> {
    let norm = state0.norm(opts.sigma, opts.radius_scale)?.value;
    match state0.tag() {
        SystemTag::M2Ch => {
            if norm == 0.0 {
                return Err(Error::ZeroInitialNorm);
            }
            let (l, m) = estimate_m2ch_constants(state0, opts)?;
            let grow = (norm + 1.0) / norm;
            lifespan_t0(l * grow, m * grow * grow, norm + 1.0, opts.sigma)
        }
        tag => lifespan_at_norm(tag, norm + 1.0, opts.c_s, opts.sigma, opts.g()),
    }
}

const LIP_DELTAS: [f64; 4] = [0.3, 0.5, 0.7, 0.9];
const LIP_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];

/// Sampled `(L, M)` for the modified two-component system:
/// `L ≈ sup ‖F(u)−F(v)‖_{δ'} (δ−δ')^σ / ‖u−v‖_δ` over pairs in the ball of
/// radius `R = ‖U₀‖₁` and `M ≈ sup_δ ‖F(U₀)‖_δ (1−δ)^σ`, both inflated by 10%.
pub fn estimate_m2ch_constants(state0: &SystemState, opts: &LifespanOptions) -> Result<(f64, f64)> {
    state0.expect_tag(SystemTag::M2Ch)?;
    let sigma = opts.sigma;
    let scale = opts.radius_scale;
    let r = state0.norm(sigma, scale)?.value;
    let f0 = rhs(state0, opts.k_sign)?;

    let mut m_hat: f64 = 0.0;
    for i in 1..20 {
        let d = i as f64 / 20.0;
        m_hat = m_hat.max(f0.norm(sigma, d * scale)?.value * (1.0 - d).powf(sigma));
    }

    let top = StateWeights::new(state0, sigma, scale)?;
    let l_hat = (0..opts.trials.max(1))
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = rng_from(derive_seed(opts.seed, "m2ch-lipschitz", i as u64));
            let perturb = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<SystemState> {
                let comps = state0
                    .s_indices()
                    .iter()
                    .map(|&s| {
                        let p = GevreyParams::new(sigma, scale, s)?;
                        Ok(random_gevrey_field_with_period(p, 0.5, state0.n_modes(), state0.period(), rng.gen()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let p = state0.with_components(comps);
                let size = top.norm(&p).value;
                let radius = r * rng.gen_range(0.05..1.0);
                Ok(if size > 0.0 { p.scale(radius / size) } else { p })
            };
            let u = state0.add(&perturb(&mut rng)?)?;
            let v = state0.add(&perturb(&mut rng)?)?;
            let du = u.sub(&v)?;
            let df = rhs(&u, opts.k_sign)?.sub(&rhs(&v, opts.k_sign)?)?;
            let mut best: f64 = 0.0;
            for &d in &LIP_DELTAS {
                let denom = du.norm(sigma, d * scale)?.value;
                if denom == 0.0 {
                    continue;
                }
                for &frac in &LIP_FRACTIONS {
                    let dp = d * frac;
                    let num = df.norm(sigma, dp * scale)?.value * (d - dp).powf(sigma);
                    best = best.max(num / denom);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    if l_hat == 0.0 {
        return Err(Error::InvalidParameter("m2ch Lipschitz sampling produced no usable pair".into()));
    }
    Ok((SAMPLE_INFLATION * l_hat, SAMPLE_INFLATION * m_hat))
}

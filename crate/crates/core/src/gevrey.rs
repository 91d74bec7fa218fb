//! Sobolev-Gevrey norms on the torus and the inequality lab.
//!
//! The norm of `f` in `G^δ_{σ,s}` is the truncated sum
//!
//! ```text
//! ‖f‖² = Σ_{|k| ≤ K} (1 + ξ_k²)^s exp(2δ|ξ_k|^{1/σ}) |f̂(k)|²
//! ```
//!
//! Every check returns an [`InequalityReport`] judged with
//! `lhs ≤ rhs·(1 + 1e-10) + 1e-14`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};
use crate::spectral::{Multiplier, SpectralField};

/// Cap on the weight exponent `2δ|ξ|^{1/σ}`.
pub const EXPONENT_CAP: f64 = 700.0;

pub const REL_TOL: f64 = 1e-10;
pub const ABS_TOL: f64 = 1e-14;

/// `(σ, δ, s)` indexing `G^δ_{σ,s}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GevreyParams {
    pub sigma: f64,
    pub delta: f64,
    pub s: f64,
}

impl GevreyParams {
    pub fn new(sigma: f64, delta: f64, s: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 1.0) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma} must be >= 1")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta = {delta} must be > 0")));
        }
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("s = {s} must be finite")));
        }
        Ok(Self { sigma, delta, s })
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn with_s(self, s: f64) -> Self {
        Self { s, ..self }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }
}

/// Squared weights `(1+ξ²)^s exp(2δ|ξ|^{1/σ})` for `k = -K..=K`, precomputed
/// for repeated norm evaluation at fixed parameters.
#[derive(Clone, Debug)]
pub struct GevreyWeights {
    n_modes: usize,
    period: f64,
    weights: Vec<f64>,
}

impl GevreyWeights {
    /// `delta = 0` gives the plain Sobolev `H^s` weight.
    pub fn new(sigma: f64, delta: f64, s: f64, n_modes: usize, period: f64) -> Result<Self> {
        let mut weights = Vec::with_capacity(2 * n_modes + 1);
        for i in 0..=2 * n_modes {
            let k = i as f64 - n_modes as f64;
            let xi = 2.0 * std::f64::consts::PI * k / period;
            let exponent = 2.0 * delta * xi.abs().powf(1.0 / sigma);
            if exponent > EXPONENT_CAP {
                return Err(Error::Saturated { exponent, cap: EXPONENT_CAP });
            }
            weights.push((1.0 + xi * xi).powf(s) * exponent.exp());
        }
        Ok(Self { n_modes, period, weights })
    }

    pub fn for_field(f: &SpectralField, p: GevreyParams) -> Result<Self> {
        Self::new(p.sigma, p.delta, p.s, f.n_modes(), f.period())
    }

    pub fn norm(&self, f: &SpectralField) -> f64 {
        debug_assert_eq!(f.n_modes(), self.n_modes);
        debug_assert_eq!(f.period(), self.period);
        f.coeffs().iter().zip(&self.weights).map(|(c, w)| w * c.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn gevrey_norm(f: &SpectralField, p: GevreyParams) -> Result<f64> {
    Ok(GevreyWeights::for_field(f, p)?.norm(f))
}

/// Norm with `delta >= 0` allowed (`delta = 0` is `H^s`).
pub fn weighted_norm(f: &SpectralField, sigma: f64, delta: f64, s: f64) -> Result<f64> {
    Ok(GevreyWeights::new(sigma, delta, s, f.n_modes(), f.period())?.norm(f))
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub margin: f64,
    pub params: Vec<(&'static str, f64)>,
}

impl InequalityReport {
    pub fn new(check: impl Into<String>, lhs: f64, rhs: f64, params: Vec<(&'static str, f64)>) -> Self {
        Self { check: check.into(), lhs, rhs, holds: holds(lhs, rhs), margin: rhs - lhs, params }
    }

    /// Strict inequality `lhs < rhs`.
    pub fn strict(check: impl Into<String>, lhs: f64, rhs: f64, params: Vec<(&'static str, f64)>) -> Self {
        let mut r = Self::new(check, lhs, rhs, params);
        r.holds = lhs < rhs;
        r
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }
}

pub fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + REL_TOL) + ABS_TOL
}

/// Checks one of the three embeddings `‖f‖_{weaker} ≤ ‖f‖_{p}`: lower `δ`,
/// lower `s`, or higher `σ`, with the other two indices unchanged.
pub fn check_embedding(f: &SpectralField, p: GevreyParams, weaker: GevreyParams) -> Result<InequalityReport> {
    let (lower_delta, lower_s, raise_sigma) = (weaker.delta < p.delta, weaker.s < p.s, weaker.sigma > p.sigma);
    let same_delta = weaker.delta == p.delta;
    let same_s = weaker.s == p.s;
    let same_sigma = weaker.sigma == p.sigma;
    let check = match (
        lower_delta && same_s && same_sigma,
        lower_s && same_delta && same_sigma,
        raise_sigma && same_delta && same_s,
    ) {
        (true, _, _) => "embedding_delta",
        (_, true, _) => "embedding_s",
        (_, _, true) => "embedding_sigma",
        _ => {
            return Err(Error::NotComparable(format!(
                "({}, {}, {}) vs ({}, {}, {})",
                p.sigma, p.delta, p.s, weaker.sigma, weaker.delta, weaker.s
            )))
        }
    };
    let lhs = gevrey_norm(f, weaker)?;
    let rhs = gevrey_norm(f, p)?;
    Ok(InequalityReport::new(
        check,
        lhs,
        rhs,
        vec![
            ("sigma", p.sigma),
            ("s", p.s),
            ("delta", p.delta),
            ("sigma_prime", weaker.sigma),
            ("s_prime", weaker.s),
            ("delta_prime", weaker.delta),
        ],
    ))
}

/// `e^{-σ} σ^σ`, the square root of [`sup_g_factor`].
pub fn derivative_constant(sigma: f64) -> f64 {
    (-sigma).exp() * sigma.powf(sigma)
}

/// `‖∂x f‖_{δ'} ≤ e^{-σ}σ^σ (δ - δ')^{-σ} ‖f‖_δ`
pub fn check_derivative_estimate(
    f: &SpectralField,
    sigma: f64,
    s: f64,
    delta: f64,
    delta_prime: f64,
) -> Result<InequalityReport> {
    if !(delta_prime > 0.0 && delta_prime < delta) {
        return Err(Error::InvalidParameter(format!(
            "derivative estimate needs 0 < delta' < delta, got delta' = {delta_prime}, delta = {delta}"
        )));
    }
    let p = GevreyParams::new(sigma, delta, s)?;
    let lhs = gevrey_norm(&f.apply_multiplier(Multiplier::P3), p.with_delta(delta_prime))?;
    let rhs = derivative_constant(sigma) / (delta - delta_prime).powf(sigma) * gevrey_norm(f, p)?;
    Ok(InequalityReport::new(
        "derivative",
        lhs,
        rhs,
        vec![("sigma", sigma), ("s", s), ("delta", delta), ("delta_prime", delta_prime)],
    ))
}

/// `sup_{z ≥ 0} e^{-2z} z^{2σ} = e^{-2σ} σ^{2σ}`, attained at `z = σ`.
pub fn sup_g_factor(sigma: f64) -> f64 {
    (-2.0 * sigma).exp() * sigma.powf(2.0 * sigma)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridMax {
    pub argmax: f64,
    pub max: f64,
}

/// Grid search of `g(z) = e^{-2z} z^{2σ}` over `[0, 20σ]`, refined around the
/// best node until the spacing is below `1e-9 σ`.
pub fn sup_g_grid_search(sigma: f64) -> GridMax {
    let g = |z: f64| if z <= 0.0 { 0.0 } else { (2.0 * sigma * z.ln() - 2.0 * z).exp() };
    let nodes = 20_000usize;
    let (mut lo, mut hi) = (0.0, 20.0 * sigma);
    let mut best = GridMax { argmax: 0.0, max: 0.0 };
    loop {
        let h = (hi - lo) / nodes as f64;
        for i in 0..=nodes {
            let z = lo + h * i as f64;
            let v = g(z);
            if v > best.max {
                best = GridMax { argmax: z, max: v };
            }
        }
        if h < 1e-9 * sigma {
            return best;
        }
        lo = (best.argmax - h).max(0.0);
        hi = best.argmax + h;
    }
}

/// Compares the closed form with the grid maximum (relative tolerance `1e-8`).
pub fn check_sup_g(sigma: f64) -> InequalityReport {
    let closed = sup_g_factor(sigma);
    let grid = sup_g_grid_search(sigma);
    InequalityReport::new(
        "sup_g",
        (grid.max - closed).abs() / closed,
        1e-8,
        vec![("sigma", sigma), ("closed_form", closed), ("grid_max", grid.max), ("argmax", grid.argmax)],
    )
}

/// Random field with `|f̂(k)| = U_k exp(-(δ + surplus)|ξ|^{1/σ}) (1+ξ²)^{-s/2-1}`,
/// `U_k ~ U[0,1]` and uniform random phases. Deterministic per seed.
pub fn random_gevrey_field(p: GevreyParams, surplus_decay: f64, n_modes: usize, seed: u64) -> SpectralField {
    random_gevrey_field_with_period(p, surplus_decay, n_modes, crate::spectral::DEFAULT_PERIOD, seed)
}

pub fn random_gevrey_field_with_period(
    p: GevreyParams,
    surplus_decay: f64,
    n_modes: usize,
    period: f64,
    seed: u64,
) -> SpectralField {
    assert!(surplus_decay > 0.0, "surplus_decay must be positive");
    let mut rng = rng_from(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * n_modes + 1];
    for k in 0..=n_modes {
        let xi = 2.0 * std::f64::consts::PI * k as f64 / period;
        let envelope =
            (-(p.delta + surplus_decay) * xi.powf(1.0 / p.sigma)).exp() * (1.0 + xi * xi).powf(-p.s / 2.0 - 1.0);
        let u: f64 = rng.gen();
        let phase: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        coeffs[n_modes + k] = if k == 0 {
            let sign = if phase < std::f64::consts::PI { 1.0 } else { -1.0 };
            Complex64::new(sign * u * envelope, 0.0)
        } else {
            Complex64::from_polar(u * envelope, phase)
        };
    }
    SpectralField::from_coeffs(coeffs, period).expect("finite random coefficients")
}

/// Empirical suprema of the algebra constants of `G^δ_{σ,s}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductEstimate {
    pub sigma: f64,
    pub s: f64,
    pub delta: f64,
    pub n_modes: usize,
    pub samples: usize,
    pub seed: u64,
    /// `sup ‖fg‖_s / (‖f‖_s ‖g‖_s)`
    pub c_s_hat: f64,
    /// `sup ‖fg‖_{s-1} / (‖f‖_{s-1} ‖g‖_s)`
    pub cbar_s_hat: f64,
    /// Per-sample `(algebra ratio, mixed ratio)`; sample 0 is the constant pair.
    pub ratios: Vec<(f64, f64)>,
}

/// Safety factor turning sampled suprema into the constant used downstream.
pub const CS_INFLATION: f64 = 1.10;

impl ProductEstimate {
    /// `1.10 · max(c_s_hat, cbar_s_hat)`, the constant fed to the lifespan formulas.
    pub fn c_s(&self) -> f64 {
        CS_INFLATION * self.c_s_hat.max(self.cbar_s_hat)
    }
}

fn product_ratios(f: &SpectralField, g: &SpectralField, p: GevreyParams) -> Result<(f64, f64)> {
    let fg = f.convolve(g)?;
    let lower = p.with_s(p.s - 1.0);
    let c = gevrey_norm(&fg, p)? / (gevrey_norm(f, p)? * gevrey_norm(g, p)?);
    let cbar = gevrey_norm(&fg, lower)? / (gevrey_norm(f, lower)? * gevrey_norm(g, p)?);
    Ok((c, cbar))
}

/// Randomized suprema of the product ratios. The first sample is the
/// constant pair `f = g = 1` (ratio exactly 1); the rest are random Gevrey
/// fields with surplus decay drawn from `[0.05, 2]`.
pub fn check_product_estimates(
    sigma: f64,
    s: f64,
    delta: f64,
    n_modes: usize,
    samples: usize,
    seed: u64,
) -> Result<ProductEstimate> {
    if s <= 0.5 {
        return Err(Error::InvalidParameter(format!("product estimates need s > 1/2, got {s}")));
    }
    let p = GevreyParams::new(sigma, delta, s)?;
    let one = SpectralField::constant(1.0, n_modes);
    let mut ratios = vec![product_ratios(&one, &one, p)?];
    let rest: Vec<(f64, f64)> = (1..samples.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(derive_seed(seed, "product-estimates", i as u64));
            let sf: f64 = rng.gen_range(0.05..2.0);
            let sg: f64 = rng.gen_range(0.05..2.0);
            let f = random_gevrey_field(p, sf, n_modes, rng.gen());
            let g = random_gevrey_field(p, sg, n_modes, rng.gen());
            product_ratios(&f, &g, p)
        })
        .collect::<Result<_>>()?;
    ratios.extend(rest);
    let c_s_hat = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
    let cbar_s_hat = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(ProductEstimate { sigma, s, delta, n_modes, samples: ratios.len(), seed, c_s_hat, cbar_s_hat, ratios })
}

/// The five multiplier bounds plus the identity `‖P1 f‖_s = ‖f‖_{s-2}`.
pub fn check_multiplier_bounds(f: &SpectralField, p: GevreyParams) -> Result<Vec<InequalityReport>> {
    check_multiplier_bounds_with(f, p, &|m, xi| m.symbol(xi))
}

/// As [`check_multiplier_bounds`] with the multiplier symbols supplied by
/// the caller (used for fault injection).
pub fn check_multiplier_bounds_with(
    f: &SpectralField,
    p: GevreyParams,
    symbol: &(dyn Fn(Multiplier, f64) -> Complex64 + Sync),
) -> Result<Vec<InequalityReport>> {
    let apply = |m: Multiplier| f.map_symbol(|xi| symbol(m, xi));
    let w = GevreyWeights::for_field(f, p)?;
    let w_s1 = GevreyWeights::for_field(f, p.with_s(p.s - 1.0))?;
    let w_s2 = GevreyWeights::for_field(f, p.with_s(p.s - 2.0))?;
    let norm_f = w.norm(f);
    let p1 = w.norm(&apply(Multiplier::P1));
    let p2 = w.norm(&apply(Multiplier::P2));
    let p13 = w.norm(&apply(Multiplier::P13));
    let p23 = w.norm(&apply(Multiplier::P23));
    let params = vec![("sigma", p.sigma), ("s", p.s), ("delta", p.delta)];
    let s2 = w_s2.norm(f);
    Ok(vec![
        InequalityReport::new("P1_identity", (p1 - s2).abs(), 1e-12 * s2, params.clone()),
        InequalityReport::new("P1_bound", p1, norm_f, params.clone()),
        InequalityReport::new("P2_bound", p2, 0.25 * norm_f, params.clone()),
        InequalityReport::new("P13_lower_s", p13, w_s1.norm(f), params.clone()),
        InequalityReport::new("P13_bound", p13, 0.5 * norm_f, params.clone()),
        InequalityReport::new("P23_bound", p23, 0.25 * norm_f, params),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralField;

    fn p(sigma: f64, delta: f64, s: f64) -> GevreyParams {
        GevreyParams::new(sigma, delta, s).unwrap()
    }

    #[test]
    fn norm_examples() {
        let one = SpectralField::constant(1.0, 16);
        assert!((gevrey_norm(&one, p(1.7, 0.9, 3.0)).unwrap() - 1.0).abs() < 1e-15);

        // a lone e^{ix} is not real; the stored field is e^{ix} + e^{-ix}
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 9];
        coeffs[5] = Complex64::new(1.0, 0.0);
        let single = SpectralField::from_coeffs(coeffs, crate::spectral::DEFAULT_PERIOD).unwrap();
        let n = gevrey_norm(&single, p(1.0, 1.0, 0.0)).unwrap();
        assert!((n / 2f64.sqrt() - std::f64::consts::E).abs() < 1e-12);

        let cos2 = SpectralField::cosine(2, 1.0, 8);
        let n = gevrey_norm(&cos2, p(1.0, 0.5, 1.0)).unwrap();
        assert!((n - 4.297980950088847).abs() < 1e-12);
    }

    #[test]
    fn saturation_is_reported() {
        let f = SpectralField::cosine(1, 1.0, 128);
        assert!(matches!(gevrey_norm(&f, p(1.0, 3.0, 0.0)), Err(Error::Saturated { .. })));
    }

    #[test]
    fn params_validate() {
        assert!(GevreyParams::new(0.5, 1.0, 0.0).is_err());
        assert!(GevreyParams::new(1.0, 0.0, 0.0).is_err());
        assert!(GevreyParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn embedding_pairs() {
        let f = random_gevrey_field(p(1.0, 1.0, 2.0), 0.5, 32, 3);
        let base = p(1.0, 1.0, 2.0);
        assert!(check_embedding(&f, base, base.with_delta(0.5)).unwrap().holds);
        assert!(check_embedding(&f, base, base.with_s(1.0)).unwrap().holds);
        assert!(check_embedding(&f, base, base.with_sigma(2.0)).unwrap().holds);
        assert!(matches!(check_embedding(&f, base, base.with_delta(0.5).with_s(1.0)), Err(Error::NotComparable(_))));
        assert!(matches!(check_embedding(&f, base, base.with_delta(2.0)), Err(Error::NotComparable(_))));
    }

    #[test]
    fn derivative_estimate_single_mode() {
        let f = SpectralField::cosine(1, 2.0, 8);
        let r = check_derivative_estimate(&f, 1.0, 0.0, 1.0, 0.5).unwrap();
        // per conjugate pair: lhs e^{0.5}, rhs 2 e^{-1} e = 2
        let pair = 2f64.sqrt();
        assert!((r.lhs / pair - 0.5f64.exp()).abs() < 1e-12);
        assert!((r.rhs / pair - 2.0).abs() < 1e-12);
        assert!(r.holds);

        let z = SpectralField::zeros(8);
        let r = check_derivative_estimate(&z, 1.5, 1.0, 0.8, 0.2).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.holds);

        assert!(check_derivative_estimate(&f, 1.0, 0.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn sup_g_values() {
        assert!((sup_g_factor(1.0) - 0.1353352832366127).abs() < 1e-15);
        assert!((sup_g_factor(2.0) - 0.29305022221974686).abs() < 1e-15);
        for sigma in [1.0, 2.0, 3.5] {
            let grid = sup_g_grid_search(sigma);
            assert!((grid.argmax - sigma).abs() < 1e-4);
            assert!(check_sup_g(sigma).holds);
        }
    }

    #[test]
    fn multiplier_extremes() {
        let one = SpectralField::constant(1.0, 8);
        let reports = check_multiplier_bounds(&one, p(1.0, 0.5, 1.0)).unwrap();
        let p2 = reports.iter().find(|r| r.check == "P2_bound").unwrap();
        assert!((p2.lhs / (4.0 * p2.rhs) - 0.25).abs() < 1e-15);

        let cos = SpectralField::cosine(1, 1.0, 8);
        let reports = check_multiplier_bounds(&cos, p(1.0, 0.5, 1.0)).unwrap();
        let r = reports.iter().find(|r| r.check == "P13_bound").unwrap();
        assert!((r.lhs / (2.0 * r.rhs) - 0.5).abs() < 1e-15);
        assert!(reports.iter().all(|r| r.holds));
    }

    #[test]
    fn corrupted_symbol_is_caught() {
        let f = SpectralField::constant(1.0, 8);
        let bad = |m: Multiplier, xi: f64| {
            if m == Multiplier::P2 {
                m.symbol(xi) * 2.0
            } else {
                m.symbol(xi)
            }
        };
        let reports = check_multiplier_bounds_with(&f, p(1.0, 0.5, 1.0), &bad).unwrap();
        let failed: Vec<_> = reports.iter().filter(|r| !r.holds).map(|r| r.check.as_str()).collect();
        assert_eq!(failed, vec!["P2_bound"]);
    }

    #[test]
    fn random_field_is_deterministic() {
        let a = random_gevrey_field(p(1.5, 0.4, 1.0), 0.3, 32, 11);
        let b = random_gevrey_field(p(1.5, 0.4, 1.0), 0.3, 32, 11);
        assert_eq!(a, b);
        assert!(a.is_hermitian());
        let n = gevrey_norm(&a, p(1.5, 0.4, 1.0)).unwrap();
        assert!(n.is_finite() && n > 0.0);
    }

    #[test]
    fn product_estimate_witness_and_cos_pair() {
        let est = check_product_estimates(1.0, 2.0, 0.2, 16, 50, 5).unwrap();
        assert_eq!(est.ratios[0], (1.0, 1.0));
        assert!(est.c_s_hat >= 1.0);
        assert!(est.ratios.iter().all(|r| r.0 <= est.c_s_hat && r.1 <= est.cbar_s_hat));
        assert!(check_product_estimates(1.0, 0.5, 0.2, 16, 5, 5).is_err());

        // cos x · cos x at σ=1, δ=0.1, s=1 against the direct quotient
        let cos = SpectralField::cosine(1, 1.0, 8);
        let (c, _) = product_ratios(&cos, &cos, p(1.0, 0.1, 1.0)).unwrap();
        let nf2 = 2.0 * 2.0 * (0.2f64).exp() * 0.25;
        let nfg2 = 0.25 + 2.0 * 5.0 * (0.4f64).exp() / 16.0;
        assert!((c - nfg2.sqrt() / nf2).abs() < 1e-14);
    }
}

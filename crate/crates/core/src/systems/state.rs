use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gevrey::GevreyWeights;
use crate::spectral::SpectralField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SystemTag {
    /// `u`
    Ch,
    /// `(u, ρ)`
    TwoCh,
    /// `(u, γ)`
    M2Ch,
    /// `(u, v, w)`
    ThreeCh,
}

impl SystemTag {
    pub fn n_components(self) -> usize {
        self.component_names().len()
    }

    pub fn component_names(self) -> &'static [&'static str] {
        match self {
            SystemTag::Ch => &["u"],
            SystemTag::TwoCh => &["u", "rho"],
            SystemTag::M2Ch => &["u", "gamma"],
            SystemTag::ThreeCh => &["u", "v", "w"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemTag::Ch => "ch",
            SystemTag::TwoCh => "2ch",
            SystemTag::M2Ch => "m2ch",
            SystemTag::ThreeCh => "3ch",
        }
    }

    /// Sobolev index of each component given the base index `s`. The
    /// density `ρ` of the two-component system lives one derivative lower.
    pub fn s_indices(self, s: f64) -> Vec<f64> {
        match self {
            SystemTag::TwoCh => vec![s, s - 1.0],
            _ => vec![s; self.n_components()],
        }
    }
}

impl fmt::Display for SystemTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ch" => Ok(SystemTag::Ch),
            "2ch" | "twoch" => Ok(SystemTag::TwoCh),
            "m2ch" => Ok(SystemTag::M2Ch),
            "3ch" | "threech" => Ok(SystemTag::ThreeCh),
            other => Err(Error::InvalidParameter(format!("unknown system '{other}'"))),
        }
    }
}

/// Sign `k = ±1` in the two-component systems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KSign {
    #[default]
    Plus,
    Minus,
}

impl KSign {
    pub fn value(self) -> f64 {
        match self {
            KSign::Plus => 1.0,
            KSign::Minus => -1.0,
        }
    }

    pub fn from_value(k: i64) -> Result<Self> {
        match k {
            1 => Ok(KSign::Plus),
            -1 => Ok(KSign::Minus),
            _ => Err(Error::InvalidParameter(format!("k_sign must be +1 or -1, got {k}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    tag: SystemTag,
    components: Vec<SpectralField>,
    s_indices: Vec<f64>,
}

/// Norm of a product-space state: the sum of component norms.
#[derive(Clone, Debug, PartialEq)]
pub struct StateNorm {
    pub value: f64,
    pub breakdown: Vec<f64>,
}

impl SystemState {
    pub fn new(tag: SystemTag, components: Vec<SpectralField>, s: f64) -> Result<Self> {
        if components.len() != tag.n_components() {
            return Err(Error::InvalidParameter(format!(
                "{tag} needs {} components, got {}",
                tag.n_components(),
                components.len()
            )));
        }
        for c in &components[1..] {
            components[0].check_compatible(c)?;
        }
        Ok(Self { tag, s_indices: tag.s_indices(s), components })
    }

    pub fn ch(u: SpectralField, s: f64) -> Self {
        Self::new(SystemTag::Ch, vec![u], s).expect("one component")
    }

    pub fn two_ch(u: SpectralField, rho: SpectralField, s: f64) -> Result<Self> {
        Self::new(SystemTag::TwoCh, vec![u, rho], s)
    }

    pub fn m2ch(u: SpectralField, gamma: SpectralField, s: f64) -> Result<Self> {
        Self::new(SystemTag::M2Ch, vec![u, gamma], s)
    }

    pub fn three_ch(u: SpectralField, v: SpectralField, w: SpectralField, s: f64) -> Result<Self> {
        Self::new(SystemTag::ThreeCh, vec![u, v, w], s)
    }

    pub fn tag(&self) -> SystemTag {
        self.tag
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &SpectralField {
        &self.components[i]
    }

    pub fn s_indices(&self) -> &[f64] {
        &self.s_indices
    }

    /// Base Sobolev index (that of `u`).
    pub fn s(&self) -> f64 {
        self.s_indices[0]
    }

    pub fn n_modes(&self) -> usize {
        self.components[0].n_modes()
    }

    pub fn period(&self) -> f64 {
        self.components[0].period()
    }

    pub fn expect_tag(&self, tag: SystemTag) -> Result<()> {
        if self.tag == tag {
            Ok(())
        } else {
            Err(Error::WrongSystem { expected: tag.to_string(), found: self.tag.to_string() })
        }
    }

    /// Same tag and indices, new components.
    pub fn with_components(&self, components: Vec<SpectralField>) -> Self {
        debug_assert_eq!(components.len(), self.components.len());
        Self { tag: self.tag, components, s_indices: self.s_indices.clone() }
    }

    pub fn zeros_like(&self) -> Self {
        self.with_components(self.components.iter().map(|c| c.scale(0.0)).collect())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        self.expect_tag(other.tag)?;
        self.components[0].check_compatible(&other.components[0])
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let comps = self.components.iter().zip(&other.components).map(|(a, b)| a.axpy(c, b)).collect::<Result<_>>()?;
        Ok(self.with_components(comps))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.with_components(self.components.iter().map(|f| f.scale(c)).collect())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.components.iter().map(SpectralField::max_abs_coeff).fold(0.0, f64::max)
    }

    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        self.components.iter().zip(&other.components).map(|(a, b)| a.max_coeff_diff(b)).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(SpectralField::is_finite)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(SpectralField::is_zero)
    }

    /// `Σ_i ‖c_i‖_{G^δ_{σ, s_i}}`
    pub fn norm(&self, sigma: f64, delta: f64) -> Result<StateNorm> {
        Ok(StateWeights::new(self, sigma, delta)?.norm(self))
    }
}

/// Per-component Gevrey weights for a fixed `(σ, δ)`.
#[derive(Clone, Debug)]
pub struct StateWeights {
    weights: Vec<GevreyWeights>,
}

impl StateWeights {
    pub fn new(template: &SystemState, sigma: f64, delta: f64) -> Result<Self> {
        let weights = template
            .s_indices
            .iter()
            .map(|&s| GevreyWeights::new(sigma, delta, s, template.n_modes(), template.period()))
            .collect::<Result<_>>()?;
        Ok(Self { weights })
    }

    pub fn norm(&self, state: &SystemState) -> StateNorm {
        let breakdown: Vec<f64> = self.weights.iter().zip(&state.components).map(|(w, c)| w.norm(c)).collect();
        StateNorm { value: breakdown.iter().sum(), breakdown }
    }
}

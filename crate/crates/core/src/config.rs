//! Flat `key = value` run configuration. `#` starts a comment, lists are
//! comma separated, unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::ovsyannikov::{DEFAULT_DELTA_POINTS, DEFAULT_DELTA_RANGE, DEFAULT_T_MAX_FRACTION, DEFAULT_T_POINTS};
use crate::spectral::DEFAULT_MODES;
use crate::systems::{InitSpec, KSign, SystemTag};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("config: {0}")]
pub struct ConfigError(pub String);

type CResult<T> = std::result::Result<T, ConfigError>;

/// Corruption hooks for testing the verification suite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FaultInject {
    #[default]
    None,
    /// Doubles the `(4 − ∂xx)^{-1}` symbol.
    P2Symbol,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub resolution_modes: usize,
    pub sigma_list: Vec<f64>,
    pub sobolev_s: f64,
    pub verify_s_list: Vec<f64>,
    pub verify_delta_list: Vec<f64>,
    pub samples: usize,
    pub constants_samples: usize,
    pub constants_delta: f64,
    pub cs_samples: usize,
    pub seed: u64,
    pub system: SystemTag,
    pub k_sign: KSign,
    pub init: BTreeMap<String, InitSpec>,
    pub perturb: BTreeMap<String, InitSpec>,
    pub dt_model: f64,
    pub t_end_model: Option<f64>,
    pub epsilons: Vec<f64>,
    pub ladder_delta_points: usize,
    pub ladder_delta_min: f64,
    pub ladder_delta_max: f64,
    pub ladder_t_points: usize,
    pub ladder_t_max_fraction: f64,
    pub ladder_check_points: usize,
    pub ladder_quadrature_intervals: usize,
    pub picard_iterations: usize,
    pub quadrature_panels: usize,
    pub contraction_trials: usize,
    pub time_varying_trials: bool,
    pub constants_file: Option<PathBuf>,
    pub fit_k_min: usize,
    pub fit_k_max: Option<usize>,
    pub radius_tolerance: f64,
    pub continuity_steps: usize,
    pub continuity_bound: f64,
    pub fault_inject: FaultInject,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            resolution_modes: DEFAULT_MODES,
            sigma_list: vec![1.0, 1.5, 2.0],
            sobolev_s: 2.0,
            verify_s_list: vec![1.0, 2.0],
            verify_delta_list: vec![0.25, 0.5, 1.0],
            samples: 1000,
            constants_samples: 2000,
            constants_delta: 1.0,
            cs_samples: 400,
            seed: 1,
            system: SystemTag::Ch,
            k_sign: KSign::Plus,
            init: BTreeMap::new(),
            perturb: BTreeMap::new(),
            dt_model: 1e-3,
            t_end_model: None,
            epsilons: vec![1e-2, 1e-3, 1e-4],
            ladder_delta_points: DEFAULT_DELTA_POINTS,
            ladder_delta_min: DEFAULT_DELTA_RANGE.0,
            ladder_delta_max: DEFAULT_DELTA_RANGE.1,
            ladder_t_points: DEFAULT_T_POINTS,
            ladder_t_max_fraction: DEFAULT_T_MAX_FRACTION,
            ladder_check_points: 200,
            ladder_quadrature_intervals: 2000,
            picard_iterations: 12,
            quadrature_panels: 256,
            contraction_trials: 50,
            time_varying_trials: false,
            constants_file: None,
            fit_k_min: 4,
            fit_k_max: None,
            radius_tolerance: 1e-3,
            continuity_steps: 64,
            continuity_bound: 2.05,
            fault_inject: FaultInject::None,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn err<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> CResult<T> {
    v.trim().parse().map_err(|_| ConfigError(format!("{key}: cannot parse '{v}'")))
}

fn list(key: &str, v: &str) -> CResult<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| num(key, x)).collect()
}

fn boolean(key: &str, v: &str) -> CResult<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => err(format!("{key}: expected true/false, got '{v}'")),
    }
}

const COMPONENTS: [&str; 5] = ["u", "rho", "gamma", "v", "w"];

impl RunConfig {
    pub fn parse(text: &str) -> CResult<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected 'key = value'", lineno + 1));
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return err(format!("line {}: duplicate key '{key}'", lineno + 1));
            }
            cfg.set(key, value).map_err(|e| ConfigError(format!("line {}: {}", lineno + 1, e.0)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> CResult<()> {
        match key {
            "resolution_modes" => self.resolution_modes = num(key, v)?,
            "sigma_list" => self.sigma_list = list(key, v)?,
            "sobolev_s" => self.sobolev_s = num(key, v)?,
            "verify_s_list" => self.verify_s_list = list(key, v)?,
            "verify_delta_list" => self.verify_delta_list = list(key, v)?,
            "samples" => self.samples = num(key, v)?,
            "constants_samples" => self.constants_samples = num(key, v)?,
            "constants_delta" => self.constants_delta = num(key, v)?,
            "cs_samples" => self.cs_samples = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "system" => self.system = v.parse().map_err(|e: crate::Error| ConfigError(e.to_string()))?,
            "k_sign" => self.k_sign = KSign::from_value(num(key, v)?).map_err(|e| ConfigError(e.to_string()))?,
            "dt_model" => self.dt_model = num(key, v)?,
            "t_end_model" => self.t_end_model = Some(num(key, v)?),
            "epsilons" => self.epsilons = list(key, v)?,
            "ladder_delta_points" => self.ladder_delta_points = num(key, v)?,
            "ladder_delta_min" => self.ladder_delta_min = num(key, v)?,
            "ladder_delta_max" => self.ladder_delta_max = num(key, v)?,
            "ladder_t_points" => self.ladder_t_points = num(key, v)?,
            "ladder_t_max_fraction" => self.ladder_t_max_fraction = num(key, v)?,
            "ladder_check_points" => self.ladder_check_points = num(key, v)?,
            "ladder_quadrature_intervals" => self.ladder_quadrature_intervals = num(key, v)?,
            "picard_iterations" => self.picard_iterations = num(key, v)?,
            "quadrature_panels" => self.quadrature_panels = num(key, v)?,
            "contraction_trials" => self.contraction_trials = num(key, v)?,
            "time_varying_trials" => self.time_varying_trials = boolean(key, v)?,
            "constants_file" => self.constants_file = (!v.is_empty()).then(|| PathBuf::from(v)),
            "fit_k_min" => self.fit_k_min = num(key, v)?,
            "fit_k_max" => self.fit_k_max = Some(num(key, v)?),
            "radius_tolerance" => self.radius_tolerance = num(key, v)?,
            "continuity_steps" => self.continuity_steps = num(key, v)?,
            "continuity_bound" => self.continuity_bound = num(key, v)?,
            "fault_inject" => {
                self.fault_inject = match v {
                    "none" => FaultInject::None,
                    "p2_symbol" => FaultInject::P2Symbol,
                    _ => return err(format!("fault_inject: unknown hook '{v}'")),
                }
            }
            "out_dir" => self.out_dir = PathBuf::from(v),
            _ => {
                if let Some((prefix, comp)) = key.split_once('_') {
                    if (prefix == "init" || prefix == "perturb") && COMPONENTS.contains(&comp) {
                        let spec: InitSpec = v.parse().map_err(|e: crate::Error| ConfigError(format!("{key}: {e}")))?;
                        let map = if prefix == "init" { &mut self.init } else { &mut self.perturb };
                        map.insert(comp.to_string(), spec);
                        return Ok(());
                    }
                }
                return err(format!("unknown key '{key}'"));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> CResult<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                err(format!("{name} must be positive, got {x}"))
            }
        };
        if self.resolution_modes < 4 {
            return err("resolution_modes must be at least 4");
        }
        if self.sigma_list.is_empty() {
            return err("sigma_list is empty");
        }
        if let Some(s) = self.sigma_list.iter().find(|s| !(**s >= 1.0 && s.is_finite())) {
            return err(format!("sigma_list entries must be >= 1, got {s}"));
        }
        if !self.sobolev_s.is_finite() || self.sobolev_s <= 0.5 {
            return err(format!("sobolev_s must exceed 1/2, got {}", self.sobolev_s));
        }
        if self.verify_s_list.is_empty() || self.verify_delta_list.is_empty() {
            return err("verify_s_list and verify_delta_list must be nonempty");
        }
        if let Some(s) = self.verify_s_list.iter().find(|s| !(**s > 0.5 && s.is_finite())) {
            return err(format!("verify_s_list entries must exceed 1/2, got {s}"));
        }
        for &d in &self.verify_delta_list {
            positive("verify_delta_list entry", d)?;
        }
        positive("constants_delta", self.constants_delta)?;
        positive("dt_model", self.dt_model)?;
        if let Some(t) = self.t_end_model {
            positive("t_end_model", t)?;
        }
        for &e in &self.epsilons {
            if !(e >= 0.0 && e.is_finite()) {
                return err(format!("epsilons must be nonnegative, got {e}"));
            }
        }
        if !(0.0 < self.ladder_delta_min
            && self.ladder_delta_min <= self.ladder_delta_max
            && self.ladder_delta_max < 1.0)
        {
            return err("ladder delta range must satisfy 0 < min <= max < 1");
        }
        if !(0.0 < self.ladder_t_max_fraction && self.ladder_t_max_fraction < 1.0) {
            return err("ladder_t_max_fraction must lie in (0, 1)");
        }
        let counts = [
            ("samples", self.samples),
            ("constants_samples", self.constants_samples),
            ("cs_samples", self.cs_samples),
            ("ladder_delta_points", self.ladder_delta_points),
            ("ladder_t_points", self.ladder_t_points),
            ("ladder_check_points", self.ladder_check_points),
            ("ladder_quadrature_intervals", self.ladder_quadrature_intervals),
            ("picard_iterations", self.picard_iterations),
            ("quadrature_panels", self.quadrature_panels),
            ("contraction_trials", self.contraction_trials),
            ("continuity_steps", self.continuity_steps),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            return err(format!("{name} must be at least 1"));
        }
        let k_max = self.fit_k_max.unwrap_or(self.resolution_modes);
        if self.fit_k_min == 0 || self.fit_k_min > k_max || k_max > self.resolution_modes {
            return err(format!("fit range [{}, {k_max}] must lie in [1, resolution_modes]", self.fit_k_min));
        }
        positive("radius_tolerance", self.radius_tolerance)?;
        positive("continuity_bound", self.continuity_bound)?;
        for comp in self.init.keys().chain(self.perturb.keys()) {
            if !self.system.component_names().contains(&comp.as_str()) {
                return err(format!("{} has no component '{comp}'", self.system));
            }
        }
        Ok(())
    }

    pub fn fit_k_max(&self) -> usize {
        self.fit_k_max.unwrap_or(self.resolution_modes)
    }

    /// Initial data for `comp`, falling back to a small smooth default.
    pub fn init_for(&self, comp: &str) -> InitSpec {
        self.init.get(comp).cloned().unwrap_or(match comp {
            "u" => InitSpec::Cos { k: 1, amp: 0.1 },
            "v" => InitSpec::Cos { k: 2, amp: 0.05 },
            _ => InitSpec::Sin { k: 1, amp: 0.1 },
        })
    }

    /// Perturbation direction for `comp`: `cos x` on `u`, zero elsewhere.
    pub fn perturb_for(&self, comp: &str) -> InitSpec {
        self.perturb.get(comp).cloned().unwrap_or(if comp == "u" {
            InitSpec::Cos { k: 1, amp: 1.0 }
        } else {
            InitSpec::Zero
        })
    }
}

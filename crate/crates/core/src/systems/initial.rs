//! Initial-data presets, parsed from one-line descriptions such as
//! `cos 1 0.1` or `peakon 1.0 0.0`.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gevrey::{random_gevrey_field_with_period, GevreyParams};
use crate::spectral::SpectralField;

#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    Zero,
    Const(f64),
    /// `amp · cos(k x)`
    Cos {
        k: usize,
        amp: f64,
    },
    /// `amp · sin(k x)`
    Sin {
        k: usize,
        amp: f64,
    },
    /// `Σ_j amps[j] cos((j+1) x)`
    CosinePack(Vec<f64>),
    /// Explicit `(k, re, im)` list; negative wavenumbers are mirrored.
    Modes(Vec<(i64, f64, f64)>),
    /// Random Gevrey field of radius `delta` plus `surplus`.
    Random {
        delta: f64,
        surplus: f64,
    },
    /// `amp · e^{−|x − x0|}` summed over periodic images.
    Peakon {
        amp: f64,
        x0: f64,
    },
    /// `|û(k)| = amp · e^{−δ₀|k|^{1/σ}} (1+k²)^{−2}`, real and positive.
    Decay {
        amp: f64,
        delta0: f64,
    },
}

fn nums(parts: &[&str], n: usize, what: &str) -> Result<Vec<f64>> {
    if parts.len() != n {
        return Err(Error::InvalidParameter(format!("'{what}' takes {n} numbers")));
    }
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad number '{p}' in '{what}'"))))
        .collect()
}

fn wavenumber(x: f64) -> Result<usize> {
    if x >= 0.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        Err(Error::InvalidParameter(format!("wavenumber must be a nonnegative integer, got {x}")))
    }
}

impl FromStr for InitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let Some((&head, rest)) = parts.split_first() else {
            return Err(Error::InvalidParameter("empty initial-data description".into()));
        };
        match head {
            "zero" => {
                nums(rest, 0, head)?;
                Ok(InitSpec::Zero)
            }
            "const" => Ok(InitSpec::Const(nums(rest, 1, head)?[0])),
            "cos" | "sin" => {
                let v = nums(rest, 2, head)?;
                let k = wavenumber(v[0])?;
                Ok(if head == "cos" { InitSpec::Cos { k, amp: v[1] } } else { InitSpec::Sin { k, amp: v[1] } })
            }
            "pack" => {
                let v = nums(rest, rest.len(), head)?;
                if v.is_empty() {
                    return Err(Error::InvalidParameter("'pack' needs at least one amplitude".into()));
                }
                Ok(InitSpec::CosinePack(v))
            }
            "modes" => {
                let modes = rest
                    .iter()
                    .map(|m| {
                        let v = nums(&m.split(':').collect::<Vec<_>>(), 3, "modes k:re:im")?;
                        if v[0].fract() != 0.0 {
                            return Err(Error::InvalidParameter(format!("non-integer wavenumber {}", v[0])));
                        }
                        Ok((v[0] as i64, v[1], v[2]))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(InitSpec::Modes(modes))
            }
            "random" => {
                let v = nums(rest, 2, head)?;
                Ok(InitSpec::Random { delta: v[0], surplus: v[1] })
            }
            "peakon" => {
                let v = nums(rest, 2, head)?;
                Ok(InitSpec::Peakon { amp: v[0], x0: v[1] })
            }
            "decay" => {
                let v = nums(rest, 2, head)?;
                Ok(InitSpec::Decay { amp: v[0], delta0: v[1] })
            }
            other => Err(Error::InvalidParameter(format!("unknown initial-data preset '{other}'"))),
        }
    }
}

/// Exact Fourier coefficients of the `period`-periodization of
/// `amp · e^{−|x − x0|}`: `amp · 2/(period (1+ξ²)) · e^{−iξx0}`.
pub fn peakon(amp: f64, x0: f64, n_modes: usize, period: f64) -> SpectralField {
    let coeffs = (-(n_modes as i64)..=n_modes as i64)
        .map(|k| {
            let xi = 2.0 * PI * k as f64 / period;
            Complex64::from_polar(amp * 2.0 / (period * (1.0 + xi * xi)), -xi * x0)
        })
        .collect();
    SpectralField::from_coeffs(coeffs, period).expect("finite peakon coefficients")
}

/// `û(k) = amp · e^{−δ₀|ξ|^{1/σ}} (1+ξ²)^{−2}`
pub fn decay_profile(amp: f64, delta0: f64, sigma: f64, n_modes: usize, period: f64) -> SpectralField {
    let coeffs = (-(n_modes as i64)..=n_modes as i64)
        .map(|k| {
            let xi = (2.0 * PI * k as f64 / period).abs();
            Complex64::new(amp * (-delta0 * xi.powf(1.0 / sigma)).exp() * (1.0 + xi * xi).powi(-2), 0.0)
        })
        .collect();
    SpectralField::from_coeffs(coeffs, period).expect("finite decay coefficients")
}

impl InitSpec {
    /// Materializes the preset. `sigma` and `s` shape the random and decay
    /// presets; `seed` feeds the random one.
    pub fn build(&self, n_modes: usize, period: f64, sigma: f64, s: f64, seed: u64) -> Result<SpectralField> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let check_k = |k: usize| {
            if k > n_modes {
                Err(Error::WavenumberOutOfRange { k: k as i64, n_modes })
            } else {
                Ok(())
            }
        };
        match self {
            InitSpec::Zero => Ok(SpectralField::zeros_with_period(n_modes, period)),
            InitSpec::Const(v) => SpectralField::synthesize_with_period(&[(0, c(*v, 0.0))], n_modes, period),
            InitSpec::Cos { k, amp } => {
                check_k(*k)?;
                let a = if *k == 0 { *amp } else { amp / 2.0 };
                SpectralField::synthesize_with_period(&[(*k as i64, c(a, 0.0))], n_modes, period)
            }
            InitSpec::Sin { k, amp } => {
                check_k(*k)?;
                if *k == 0 {
                    return Ok(SpectralField::zeros_with_period(n_modes, period));
                }
                SpectralField::synthesize_with_period(&[(*k as i64, c(0.0, -amp / 2.0))], n_modes, period)
            }
            InitSpec::CosinePack(amps) => {
                check_k(amps.len())?;
                let modes: Vec<_> = amps.iter().enumerate().map(|(j, a)| ((j + 1) as i64, c(a / 2.0, 0.0))).collect();
                SpectralField::synthesize_with_period(&modes, n_modes, period)
            }
            InitSpec::Modes(list) => {
                let modes: Vec<_> = list.iter().map(|&(k, re, im)| (k, c(re, im))).collect();
                SpectralField::synthesize_with_period(&modes, n_modes, period)
            }
            InitSpec::Random { delta, surplus } => {
                if !(*surplus > 0.0) {
                    return Err(Error::InvalidParameter("random preset needs a positive surplus".into()));
                }
                let p = GevreyParams::new(sigma, *delta, s)?;
                Ok(random_gevrey_field_with_period(p, *surplus, n_modes, period, seed))
            }
            InitSpec::Peakon { amp, x0 } => Ok(peakon(*amp, *x0, n_modes, period)),
            InitSpec::Decay { amp, delta0 } => {
                if !(*delta0 >= 0.0) {
                    return Err(Error::InvalidParameter("decay preset needs delta0 >= 0".into()));
                }
                Ok(decay_profile(*amp, *delta0, sigma, n_modes, period))
            }
        }
    }
}

//! Sobolev-Gevrey norms on the torus, an Ovsyannikov-type fixed-point frame
//! for Camassa-Holm type systems, and numerical experiments built on them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod gevrey;
pub mod ovsyannikov;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod systems;

pub use error::{Error, Result};
pub use gevrey::{GevreyParams, InequalityReport};
pub use ovsyannikov::{LadderSpec, LifespanConstants, Trajectory};
pub use spectral::{Multiplier, SpectralField};
pub use systems::{KSign, SystemState, SystemTag};

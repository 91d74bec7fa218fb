//! Camassa-Holm type systems in nonlocal form: states, right-hand sides and
//! per-system lifespan constants.

mod constants;
mod initial;
mod rhs;
mod state;

pub use constants::{
    continuity_time, estimate_m2ch_constants, lifespan_at_norm, lifespan_constants, lifespan_constants_with,
    LifespanOptions, C1_BASE, C2_BASE,
};
pub use initial::{decay_profile, peakon, InitSpec};
pub use rhs::{b_field, b_operator, check_3ch_consistency, rhs, rhs_2ch, rhs_3ch, rhs_ch, rhs_m2ch};
pub use state::{KSign, StateNorm, StateWeights, SystemState, SystemTag};

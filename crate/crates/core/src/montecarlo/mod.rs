//! Exact-discretization simulation, Monte-Carlo zero-coupon pricing and
//! synthetic panel generation.

mod pricing;
mod rng;
mod sim;
mod synth;

pub use pricing::{mc_zero_price, MIN_STEPS};
pub use rng::{PathRng, StreamKey};
pub use sim::{pairwise_sum, simulate_g2, simulate_ou, McEstimate, SimConfig, MAX_ABS_RHO};
pub use synth::{regular_schedule, synth_panel, SyntheticPanel};

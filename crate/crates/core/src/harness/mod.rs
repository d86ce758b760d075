//! Numeric backbone: admissible sampling, identity checks, lattice pairings
//! and time integration of semi-discrete systems.

mod identity;
pub mod integrate;
pub mod pairing;
mod sample;

pub use identity::{check_points, identity_check, scaled_residual, Report, Status};
pub use sample::{is_identically_zero, uniform, SamplePlan, Sampler, DEFAULT_SEED};

//! Null-control synthesis and verification for the structurally damped
//! beam `u_tt + Δ²u + ρ Δ^α u_t = F` on `(0, π)` with hinged ends.

pub mod beamsim;
pub mod biortho;
pub mod cli;
pub mod cjson;
pub mod control;
pub mod error;
pub mod modal;
pub mod numerics;
pub mod spectrum;

pub use error::{Error, Result};
pub use numerics::C64;

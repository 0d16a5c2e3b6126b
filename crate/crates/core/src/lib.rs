//! Base-station switch-off: assign every user to one station within its
//! bandwidth budget while keeping as few stations on as possible, by
//! reweighted linear programming. See `examples/` for one program per
//! capability.

pub mod baselines;
pub mod config;
pub mod error;
pub mod harness;
pub mod instance;
pub mod io;
pub mod lp;
pub mod matrix;
pub mod mm;
pub mod pipeline;
pub mod radio;
pub mod rounding;
pub mod scenario;
pub mod validate;

pub use error::{Error, Result};
pub use matrix::Matrix;

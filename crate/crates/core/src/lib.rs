//! Spin-cat states, interaction-based readout and phase-estimation precision
//! in the symmetric (Dicke) subspace of `N` two-level particles.

pub mod error;
pub mod estimation;
pub mod evolution;
pub mod experiments;
mod linalg;
pub mod oracle;
pub mod spin;
pub mod states;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

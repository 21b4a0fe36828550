//! Control synthesis and orbit-maneuver simulation for a planar spacecraft
//! under solar radiation pressure.
//!
//! The crate builds the linearized two-body plant, designs LQR, H∞ and
//! full-order observer gains for it, and runs the nonlinear closed loop for
//! the uncontrolled, state-feedback, observer-only and observer-based
//! feedback configurations.

pub mod linalg;

pub use linalg::{LinalgError, Matrix, Spectrum};
pub mod lti;
pub mod integrate;
pub mod orbital;
pub mod synthesis;
pub mod simulation;

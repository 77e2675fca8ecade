//! Derivative-free, data-driven analysis and stabilizing-gain synthesis for
//! continuous-time LTI systems.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod informativity;
pub mod linalg;
pub mod lmi;
pub mod sdp;
pub mod signals;
pub mod synthesis;
pub mod systems;
pub mod verify;

pub use error::{Error, Result};

/// Version tag written into every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

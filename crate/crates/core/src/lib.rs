//! Desk-scale simulator of a deterministic continuous-variable secure
//! communication scheme built on the squeezing phase of a two-mode squeezed
//! state: Gaussian state engine, truncated-Fock-space oracle, homodyne
//! measurement and Monte-Carlo sampling, the Alice/Bob protocol state
//! machine, eavesdropping attacks with their analytic signatures, and the
//! figure-data sweeps.

pub mod attacks;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod gaussian;
pub mod measurement;
pub mod protocol;
pub mod stats;
pub mod validate;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, SqueezeParams};

//! Deterministic camera-degradation synthesis with analytically exact
//! reliability labels, a risk-aware global sensor health index, a classical
//! single-image health monitor, and an early-warning evaluation harness.
//!
//! The crate is organized around five layers:
//!
//! - [`model`]: the twelve-mode degradation taxonomy, severity and presence
//!   vectors, health scores and regimes, risk weights, and raster types.
//! - [`gshi`]: the multiplicative health index and object-level reliability.
//! - [`synth`]: the twelve severity-controlled degradation operators,
//!   depth-conditioned where the physics demands it.
//! - [`labelgen`]: dataset generation with exact labels and spatial masks.
//! - [`monitor`] and [`eval`]: a training-free heuristic monitor and the
//!   full evaluation protocol (calibration metrics, issue mAP, lead time,
//!   threshold sweeps, sparsification error).

pub mod error;
pub mod eval;
pub mod gshi;
pub mod model;
pub mod rng;
pub mod labelgen;
pub mod monitor;
pub mod synth;

pub use error::{Error, Result};

//! GNSS signal simulation and direct position estimation hardened with
//! robust interference mitigation.
//!
//! The library covers the full chain needed to study how zero-memory
//! nonlinearities (Huber, complex signum, myriad) applied in time,
//! frequency, or both domains protect a direct-position estimator against
//! continuous-wave and DME-style pulsed interference:
//!
//! * [`constellation`] — receiver/satellite geometry: delays, Dopplers,
//!   and the delay Jacobian used by the information-matrix analytics.
//! * [`synth`] — GPS L1 C/A spreading codes and sampled baseband
//!   synthesis with calibrated noise.
//! * [`interference`] — CW and DME pulse-pair waveform generation with
//!   jamming-to-noise scaling.
//! * [`rim`] — robust nonlinearities and the single/dual-domain cleaning
//!   pipelines.
//! * [`caf`] — standard and robust cross-ambiguity functions, acquisition
//!   grids, and the direct-position cost.
//! * [`estimators`] — accelerated random search DPE and the conventional
//!   two-step (acquisition + least squares) baseline.
//! * [`analytics`] — Fisher information, Cramér–Rao bounds, and
//!   closed-form loss-of-efficiency predictions.
//! * [`harness`] — seeded Monte Carlo experiments, TOML scenario
//!   configuration, CSV persistence, and the command line interface.

pub mod analytics;
pub mod caf;
pub mod constellation;
pub mod error;
pub mod estimators;
mod fft;
pub mod harness;
pub mod interference;
pub mod rim;
pub mod synth;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

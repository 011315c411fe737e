//! Pinching-antenna physical-layer security.
//!
//! A dielectric waveguide carries `N` pre-installed pinching antennas. Each
//! antenna radiates the guided signal with a phase set by its free-space path
//! to the receiver plus its in-waveguide path from the feed point. Choosing
//! which antennas to activate therefore shapes both the amplitude and the
//! phase of the effective channel at the legitimate user (Bob) and at the
//! eavesdropper (Eve).
//!
//! The crate is split along the processing chain:
//!
//! * [`geometry`]: scenario, antenna layout, user drops, distances.
//! * [`channel`]: wavelengths, per-antenna complex coefficients, phases.
//! * [`secrecy`]: coalitions, link budget, rates and the coalition value.
//! * [`game`]: Shapley payoffs, merge/split rules and the activation loop.
//! * [`baselines`]: brute force, simulated annealing, coalition-value
//!   activation and the fixed uniform linear array.
//! * [`harness`]: Monte Carlo sweeps, configuration and CSV output.
//!
//! Antenna indices are zero-based throughout.

pub mod baselines;
pub mod channel;
pub mod error;
pub mod game;
pub mod geometry;
pub mod harness;
pub mod secrecy;

pub use error::{Error, Result};

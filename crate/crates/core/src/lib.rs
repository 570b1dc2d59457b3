//! Error-probability analysis for free-space optical PPM links received by
//! a square detector array.
//!
//! The signal is a Gaussian beam on the array, the background is uniform,
//! and photodetections form a Poisson point process. Discrete arrays are
//! decoded with log-SNR weighted counts; the continuous array (exact photon
//! positions) gives the lower bound on error probability.

pub mod analytics;
pub mod beam;
mod error;
pub mod estimate;
pub mod experiments;
pub mod geometry;
pub mod photon;
pub mod receiver;
pub mod rng;
pub mod special;

pub use beam::{signal_photons, spot_size, BeamParams, LinkBudget};
pub use error::{Error, Result};
pub use estimate::{Method, PeEstimate};
pub use experiments::{MismatchParameter, Scenario};
pub use geometry::{ArrayGeometry, Point, Rect};
pub use photon::{SlotKind, SlotObservation};
pub use receiver::{DetectionOutcome, ReceiverConfig, TieRule};

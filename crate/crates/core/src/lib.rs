//! Blind null-space learning and tracking for a MIMO secondary transmitter
//! that shares spectrum with a primary receiver.
//!
//! The secondary transmitter never observes the interference channel. It only
//! sees a scalar interference measurement per feedback cycle, and from those
//! scalars it runs Jacobi-style sweeps ([`learning`]) that rotate an eigenbasis
//! estimate toward the null space of the channel. [`tracking`] keeps that
//! estimate current on a fading channel ([`channel`]) by triggering restricted
//! re-adaptation sweeps, [`superpose`] rides data on the learning signal
//! without disturbing the primary's energy measurement, and [`entypes`]
//! enumerates balanced symbol sequences so the superposition constraint holds
//! exactly per frame. [`harness`] runs the Monte-Carlo experiments.
//!
//! The numerical modules are generic over the real scalar type; the aliases
//! at the crate root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod entypes;
pub mod error;
pub mod feedback;
pub mod harness;
pub mod learning;
pub mod matcore;
pub mod scalar;
pub mod superpose;
pub mod tracking;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex sample in double precision.
pub type Cf64 = num_complex::Complex<f64>;
/// Dense complex matrix in double precision.
pub type CMatrix = matcore::ComplexMatrix<f64>;
/// Complex vector in double precision.
pub type CVector = matcore::ComplexVector<f64>;
pub type Channel = channel::ChannelProcess<f64>;
pub type Oracle = feedback::FeedbackOracle<f64>;
pub type Eigenbasis = learning::EigenbasisEstimate<f64>;
pub type Sweep = learning::SweepParams<f64>;
pub type Tracker = tracking::TrackerConfig<f64>;
pub type Trace = tracking::TrackingTrace<f64>;
pub type Alphabet = superpose::SuperpositionAlphabet<f64>;

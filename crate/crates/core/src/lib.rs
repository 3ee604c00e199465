//! Dephasing-probe models for a qubit under CPMG control in an
//! Ornstein-Uhlenbeck environment, with memory-time estimators.
//!
//! Units: time in ms, angular frequency in ms⁻¹ (kHz), coupling `g` in ms⁻¹.

#![no_std]
// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod attenuation;
pub mod control;
pub mod estimation;
pub mod fisher;
pub mod noise;
pub mod numeric;
pub mod rng;

pub use attenuation::{AttenuationError, AttenuationModel};
pub use control::{ControlSequence, ModulationProfile, SequenceError, SequenceKind};
pub use fisher::{ErrorLandscape, FisherError, Regime, RegimeCriterion};
pub use noise::{LorentzianEnvironment, NoiseError};
pub use estimation::{BranchPair, BranchStatus, DecayCurve, EstimationError, EstimationSeries, InversionModel};

//! Severity scoring, offline Q-type learners and TECM-style policy assessment
//! for heparin-dosing trajectories.
//!
//! The crate is `no_std` and only needs `alloc`. All file formats, CSV
//! ingestion and the command-line front end live in the `tecm` crate.
//!
//! Data flows through the modules in this order:
//!
//! 1. [`trajectory`] builds [`trajectory::Episode`]s from raw records or the
//!    synthetic generator.
//! 2. [`scoring`] turns vital signs into SOFA / cxSOFA scores.
//! 3. [`mdp`] encodes episodes into states, action bins and rewards.
//! 4. [`learners`] fits Q-functions (tabular or [`qcore`] networks).
//! 5. [`assess`] partitions episodes, fills the comparison matrix and picks
//!    checkpoints; [`outcomes`] compares followers against non-followers.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod assess;
pub mod learners;
pub mod math;
pub mod mdp;
mod nonfinite;
pub mod outcomes;
pub mod qcore;
pub mod scoring;
pub mod trajectory;

pub use mdp::{ActionIndex, NUM_ACTIONS};
pub use scoring::{ScoreConfig, ScoreKind, VitalSigns};

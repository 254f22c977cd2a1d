//! Patient trajectories: the episode data model, the windowing / imputation /
//! exclusion pipeline, segmentation, patient-level splitting and a synthetic
//! cohort generator.

mod model;
mod pipeline;
mod split;
mod synth;

pub use model::{Cohort, Episode, Outcome, Provenance, Step};
pub use pipeline::{
    exclude_and_assemble, impute, segment_long, windowize, AssembleReport, Exclusion,
    ExclusionReason, PartialVitals, PatientGrid, RawRecord, Slot, DEFAULT_MAX_LEN, WINDOW_MINUTES,
};
pub use split::split;
pub use synth::{synth_cohort, GroundTruthPolicy, SynthParams, SyntheticCohort};

use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("episode `{id}` is malformed: {reason}")]
    Malformed { id: String, reason: String },
    #[error("segment length must be at least 2, got {0}")]
    SegmentLength(usize),
    #[error("cannot split: {0}")]
    Split(String),
    #[error("invalid generator parameters: {0}")]
    SynthParams(String),
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("duplicate episode id `{0}`")]
    DuplicateId(String),
}

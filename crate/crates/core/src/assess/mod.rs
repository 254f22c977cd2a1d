//! Policy assessment against physicians' actual treatments: good/bad episode
//! split, the treatment effect comparison matrix (OG, WG, OB, WB), the σ and μ
//! summaries, the pairwise comparator and η-patience checkpoint selection.

mod matrix;
mod select;

pub use matrix::{
    classify_episodes, classify_rewards, episode_sims, good_rate, similarity, tecm, tecm_from_sims,
    EpisodeSims, Partition, Tecm,
};
pub use select::{
    assess_checkpoint, bias, compare, confidence, select_checkpoint, select_reports,
    AssessmentReport, Confidence, Preference, Selection, SelectionConfig, Winner, SIGMA_FLOOR,
};

use alloc::string::String;
use thiserror::Error;

use crate::learners::LearnError;
use crate::mdp::MdpError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssessError {
    #[error("no checkpoints to assess")]
    EmptyStream,
    #[error("invalid selection config: {0}")]
    InvalidConfig(String),
    #[error("episode {0} has no decision steps")]
    EmptyEpisode(String),
    #[error("{0}")]
    Learn(#[from] LearnError),
    #[error("{0}")]
    Mdp(#[from] MdpError),
}

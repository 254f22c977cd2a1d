//! SOFA and continuous cxSOFA severity scores.
//!
//! Every score is a sum of six organ components. Component formulas are data
//! ([`ScoreConfig`]) rather than code, so a corrected coefficient set can be
//! dropped in without recompiling. Two configurations are built in:
//! [`ScoreConfig::sofa_discrete`] and [`ScoreConfig::cxsofa_paper`]. The
//! hard-coded [`sofa_discrete`] function is kept as an independent route for
//! the discrete score.

mod builtin;
mod config;
mod sofa;
mod vitals;

pub use config::{Cmp, Component, ScoreConfig, Term};
pub use sofa::{sofa_components, sofa_discrete};
pub use vitals::{Vital, VitalSigns};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of organ components in every score.
pub const NUM_COMPONENTS: usize = 6;

/// Upper bound of a single component.
pub const COMPONENT_MAX: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("vital sign `{0}` is missing or not a number")]
    Missing(Vital),
    #[error("vital sign `{field}` out of range: {value}")]
    OutOfRange { field: Vital, value: f64 },
    #[error("component index {0} out of range 1..=6")]
    ComponentIndex(usize),
    #[error("invalid score config: {0}")]
    InvalidConfig(alloc::string::String),
}

/// Which severity score drives states and rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Sofa,
    #[serde(rename = "cxsofa")]
    CxSofa,
}

impl ScoreKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Sofa => "sofa",
            ScoreKind::CxSofa => "cxsofa",
        }
    }

    /// Short label used in model names ("SOFA-CQL", "cxSOFA-CQL").
    pub fn label(self) -> &'static str {
        match self {
            ScoreKind::Sofa => "SOFA",
            ScoreKind::CxSofa => "cxSOFA",
        }
    }
}

impl core::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for ScoreKind {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sofa" => Ok(ScoreKind::Sofa),
            "cxsofa" => Ok(ScoreKind::CxSofa),
            other => Err(alloc::format!("unknown score kind `{other}`")),
        }
    }
}

/// The six organ component scores, in the order respiratory, coagulation,
/// liver, circulatory, nervous, renal.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComponentScores(pub [f64; NUM_COMPONENTS]);

impl ComponentScores {
    /// Sum of the six components, accumulated left to right.
    pub fn total(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, f| acc + f)
    }
}

/// Continuous score: the sum of the six clamped components of `cfg`.
pub fn cxsofa(vitals: &VitalSigns, cfg: &ScoreConfig) -> Result<f64, ScoringError> {
    Ok(cfg.components(vitals)?.total())
}

/// One clamped component, `index` in `1..=6`.
pub fn component_score(
    vitals: &VitalSigns,
    index: usize,
    cfg: &ScoreConfig,
) -> Result<f64, ScoringError> {
    if !(1..=NUM_COMPONENTS).contains(&index) {
        return Err(ScoringError::ComponentIndex(index));
    }
    vitals.validate()?;
    Ok(cfg.components[index - 1].eval(vitals))
}

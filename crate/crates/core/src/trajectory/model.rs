use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::TrajectoryError;
use crate::mdp::{bin_action, ActionIndex};
use crate::scoring::VitalSigns;

/// One 4-hour decision window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub window: u32,
    pub vitals: VitalSigns,
    /// Heparin dose, U/kg/h.
    pub dose: f64,
    pub action: ActionIndex,
    pub terminal: bool,
    pub died_at_end: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Survived,
    Died,
}

/// A patient treatment trace. Several episodes may share a `patient_id` when
/// exclusion or segmentation split the trace; `episode_id` is unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub patient_id: String,
    pub episode_id: String,
    pub steps: Vec<Step>,
    /// Patient-level outcome.
    pub outcome: Outcome,
    pub length_of_stay_days: f64,
}

impl Episode {
    /// Whether the final step is followed by death.
    pub fn died_at_end(&self) -> bool {
        self.steps.last().is_some_and(|s| s.died_at_end)
    }

    pub fn died(&self) -> bool {
        self.outcome == Outcome::Died
    }

    /// Number of decision steps (transitions), `n − 1`.
    pub fn decision_steps(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let bad = |reason: String| TrajectoryError::Malformed {
            id: self.episode_id.clone(),
            reason,
        };
        let n = self.steps.len();
        if n < 2 {
            return Err(bad(format!("{n} steps, need at least 2")));
        }
        for (i, s) in self.steps.iter().enumerate() {
            s.vitals
                .validate()
                .map_err(|e| bad(format!("step {i}: {e}")))?;
            let binned = bin_action(s.dose).map_err(|e| bad(format!("step {i}: {e}")))?;
            if binned != s.action {
                return Err(bad(format!(
                    "step {i}: action {} does not match dose {}",
                    s.action, s.dose
                )));
            }
            if s.terminal != (i == n - 1) {
                return Err(bad(format!("step {i}: terminal flag misplaced")));
            }
            if s.died_at_end && !s.terminal {
                return Err(bad(format!("step {i}: death flag on non-terminal step")));
            }
        }
        if self.steps.windows(2).any(|w| w[1].window <= w[0].window) {
            return Err(bad("window indices not increasing".into()));
        }
        if self.died_at_end() && self.outcome != Outcome::Died {
            return Err(bad("death flag on a surviving patient".into()));
        }
        if self.length_of_stay_days.is_nan() || self.length_of_stay_days < 0.0 {
            return Err(bad("negative length of stay".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Ingested,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub episodes: Vec<Episode>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
}

impl Cohort {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.episodes.is_empty() {
            return Err(TrajectoryError::EmptyCohort);
        }
        let mut seen = BTreeSet::new();
        for ep in &self.episodes {
            if !seen.insert(ep.episode_id.as_str()) {
                return Err(TrajectoryError::DuplicateId(ep.episode_id.clone()));
            }
            ep.validate()?;
        }
        Ok(())
    }

    /// Distinct patient ids in first-seen order.
    pub fn patient_ids(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.episodes
            .iter()
            .map(|e| e.patient_id.as_str())
            .filter(|id| seen.insert(*id))
            .collect()
    }
}

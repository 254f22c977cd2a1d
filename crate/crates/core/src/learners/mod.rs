//! Offline Q-type learners: tabular Q-learning plus DQN, double DQN, discrete
//! BCQ and CQL over the six-component state, and best/worst policy extraction.

mod behavior;
mod deep;
mod tabular;

pub use behavior::{BehaviorKey, BehaviorModel};
pub use deep::{td_targets, train_deep, DeepRun};
pub use tabular::{train_ql, QTable, NUM_SOFA_STATES};

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{ActionIndex, Encoder, NUM_ACTIONS};
use crate::qcore::{MlpParams, QcoreError};
use crate::scoring::{self, ScoreKind, ScoringError, VitalSigns};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("empty transition dataset")]
    EmptyDataset,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("{0}")]
    Qcore(#[from] QcoreError),
    #[error("{0}")]
    Scoring(#[from] ScoringError),
    #[error("tabular state {0} outside 0..=24")]
    TabularState(u8),
    #[error("{0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Ql,
    Dqn,
    Ddqn,
    Bcq,
    Cql,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::Ql, Algo::Dqn, Algo::Ddqn, Algo::Bcq, Algo::Cql];
    pub const DEEP: [Algo; 4] = [Algo::Dqn, Algo::Ddqn, Algo::Bcq, Algo::Cql];

    pub fn label(self) -> &'static str {
        match self {
            Algo::Ql => "QL",
            Algo::Dqn => "DQN",
            Algo::Ddqn => "DDQN",
            Algo::Bcq => "BCQ",
            Algo::Cql => "CQL",
        }
    }

    pub fn is_deep(self) -> bool {
        self != Algo::Ql
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algo {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ql" => Ok(Algo::Ql),
            "dqn" => Ok(Algo::Dqn),
            "ddqn" => Ok(Algo::Ddqn),
            "bcq" => Ok(Algo::Bcq),
            "cql" => Ok(Algo::Cql),
            other => Err(LearnError::Mismatch(alloc::format!(
                "unknown algorithm '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyper {
    pub gamma: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: u32,
    /// Checkpoint after every this many epochs (and after the last one).
    pub checkpoint_every: u32,
    /// Optimizer steps between target-network syncs.
    pub target_sync: u64,
    pub tau_bcq: f64,
    pub cql_alpha: f64,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper::deep()
    }
}

impl Hyper {
    pub fn deep() -> Self {
        Hyper {
            gamma: 0.99,
            lr: 1e-3,
            batch_size: 256,
            epochs: 300,
            checkpoint_every: 50,
            target_sync: 500,
            tau_bcq: 0.3,
            cql_alpha: 1.0,
            hidden: 64,
            seed: 0,
        }
    }

    /// One checkpoint per sweep, larger step size.
    pub fn tabular() -> Self {
        Hyper {
            lr: 0.1,
            checkpoint_every: 1,
            ..Hyper::deep()
        }
    }

    pub fn for_algo(algo: Algo) -> Self {
        if algo.is_deep() {
            Hyper::deep()
        } else {
            Hyper::tabular()
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidHyper(m.into()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0
            || self.epochs == 0
            || self.checkpoint_every == 0
            || self.target_sync == 0
        {
            return bad("batch size, epochs, checkpoint interval and sync period must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.tau_bcq) {
            return bad("tau_bcq must lie in [0, 1]");
        }
        if !(self.cql_alpha >= 0.0 && self.cql_alpha.is_finite()) {
            return bad("cql alpha must be >= 0");
        }
        if self.hidden == 0 {
            return bad("hidden width must be >= 1");
        }
        Ok(())
    }

    fn is_checkpoint(&self, epoch: u32) -> bool {
        epoch.is_multiple_of(self.checkpoint_every) || epoch == self.epochs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum QModel {
    Table(QTable),
    Mlp(MlpParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: u32,
    pub algo: Algo,
    pub reward: ScoreKind,
    pub q: QModel,
}

impl Checkpoint {
    pub fn id(&self) -> String {
        alloc::format!(
            "{}-{}@{}",
            self.reward.label(),
            self.algo.label(),
            self.epoch
        )
    }
}

/// Index of the largest value, lowest index on ties.
pub fn policy_best(values: &[f64; NUM_ACTIONS]) -> ActionIndex {
    pick(values, None, |a, b| a > b)
}

/// Index of the smallest value, lowest index on ties.
pub fn policy_worst(values: &[f64; NUM_ACTIONS]) -> ActionIndex {
    pick(values, None, |a, b| a < b)
}

fn pick(
    values: &[f64; NUM_ACTIONS],
    allowed: Option<&[bool; NUM_ACTIONS]>,
    better: impl Fn(f64, f64) -> bool,
) -> ActionIndex {
    let ok = |i: usize| allowed.is_none_or(|m| m[i]);
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if ok(i) && best.is_none_or(|b| better(v, values[b])) {
            best = Some(i);
        }
    }
    ActionIndex::new(best.unwrap_or(0)).expect("in range")
}

/// Anything that scores the five actions at a patient state.
pub trait ActionValues {
    fn action_values(&self, v: &VitalSigns) -> Result<[f64; NUM_ACTIONS], LearnError>;

    /// Actions eligible for best/worst extraction at `v`.
    fn admissible(&self, _v: &VitalSigns) -> Result<[bool; NUM_ACTIONS], LearnError> {
        Ok([true; NUM_ACTIONS])
    }

    fn best(&self, v: &VitalSigns) -> Result<ActionIndex, LearnError> {
        let q = self.action_values(v)?;
        Ok(pick(&q, Some(&self.admissible(v)?), |a, b| a > b))
    }

    fn worst(&self, v: &VitalSigns) -> Result<ActionIndex, LearnError> {
        let q = self.action_values(v)?;
        Ok(pick(&q, Some(&self.admissible(v)?), |a, b| a < b))
    }
}

/// A trained model plus the encoder that maps vitals to its state space.
#[derive(Debug, Clone, PartialEq)]
pub struct QFunction {
    pub model: QModel,
    pub encoder: Encoder,
}

impl QFunction {
    pub fn new(model: QModel, encoder: Encoder) -> Self {
        QFunction { model, encoder }
    }
}

impl ActionValues for QFunction {
    fn action_values(&self, v: &VitalSigns) -> Result<[f64; NUM_ACTIONS], LearnError> {
        match &self.model {
            QModel::Table(t) => Ok(t.row(scoring::sofa_discrete(v)?)?),
            QModel::Mlp(p) => {
                let out = p.forward(&self.encoder.vector(v)?)?;
                let mut q = [0.0; NUM_ACTIONS];
                q.copy_from_slice(&out);
                Ok(q)
            }
        }
    }

    /// Tabular models only rank actions seen in the data at that state, unless
    /// the state was never visited.
    fn admissible(&self, v: &VitalSigns) -> Result<[bool; NUM_ACTIONS], LearnError> {
        match &self.model {
            QModel::Table(t) => t.visited_mask(scoring::sofa_discrete(v)?),
            QModel::Mlp(_) => Ok([true; NUM_ACTIONS]),
        }
    }
}

impl<T: ActionValues + ?Sized> ActionValues for &T {
    fn action_values(&self, v: &VitalSigns) -> Result<[f64; NUM_ACTIONS], LearnError> {
        (**self).action_values(v)
    }

    fn admissible(&self, v: &VitalSigns) -> Result<[bool; NUM_ACTIONS], LearnError> {
        (**self).admissible(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_and_worst_with_ties() {
        let q = [1.0, 2.0, 3.0, 2.0, 1.0];
        assert_eq!(policy_best(&q).index(), 2);
        assert_eq!(policy_worst(&q).index(), 0);
        let flat = [0.5; 5];
        assert_eq!(policy_best(&flat).index(), 0);
        assert_eq!(policy_worst(&flat).index(), 0);
    }

    #[test]
    fn masked_pick() {
        let q = [9.0, 2.0, 3.0, -1.0, 1.0];
        let m = [false, true, true, false, true];
        assert_eq!(pick(&q, Some(&m), |a, b| a > b).index(), 2);
        assert_eq!(pick(&q, Some(&m), |a, b| a < b).index(), 4);
    }

    #[test]
    fn hyper_validation() {
        assert!(Hyper::deep().validate().is_ok());
        assert!(Hyper::tabular().validate().is_ok());
        assert!(Hyper {
            gamma: 1.5,
            ..Hyper::deep()
        }
        .validate()
        .is_err());
        assert!(Hyper {
            gamma: 0.0,
            ..Hyper::deep()
        }
        .validate()
        .is_ok());
        assert!(Hyper {
            tau_bcq: -0.1,
            ..Hyper::deep()
        }
        .validate()
        .is_err());
        assert!(Hyper {
            cql_alpha: -1.0,
            ..Hyper::deep()
        }
        .validate()
        .is_err());
        assert!(Hyper {
            batch_size: 0,
            ..Hyper::deep()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn algo_names() {
        for a in Algo::ALL {
            assert_eq!(a.label().parse::<Algo>().unwrap(), a);
        }
        assert!("ppo".parse::<Algo>().is_err());
    }
}

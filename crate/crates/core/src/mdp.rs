//! MDP encoding: action bins, state encoders, rewards and offline transition
//! datasets.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::{self, ScoreConfig, ScoreKind, ScoringError, VitalSigns, NUM_COMPONENTS};
use crate::trajectory::Episode;

pub const NUM_ACTIONS: usize = 5;

/// Upper (inclusive) dose edges of bins a1..a3 in U/kg/h; a4 is open-ended.
pub const DOSE_EDGES: [f64; 3] = [1.38, 1.88, 3.5];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdpError {
    #[error("invalid heparin dose {0} U/kg/h")]
    InvalidDose(f64),
    #[error("invalid reward spec: {0}")]
    InvalidRewardSpec(&'static str),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// Heparin dose bin, `0..=4`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(try_from = "u8", into = "u8")]
pub struct ActionIndex(u8);

impl ActionIndex {
    pub const ALL: [ActionIndex; NUM_ACTIONS] = [
        ActionIndex(0),
        ActionIndex(1),
        ActionIndex(2),
        ActionIndex(3),
        ActionIndex(4),
    ];

    pub fn new(i: usize) -> Option<ActionIndex> {
        (i < NUM_ACTIONS).then_some(ActionIndex(i as u8))
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    /// Bin-index distance.
    pub fn distance(self, other: ActionIndex) -> usize {
        usize::from(self.0.abs_diff(other.0))
    }
}

impl TryFrom<u8> for ActionIndex {
    type Error = alloc::string::String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        ActionIndex::new(usize::from(v)).ok_or_else(|| alloc::format!("action {v} out of range"))
    }
}

impl From<ActionIndex> for u8 {
    fn from(a: ActionIndex) -> u8 {
        a.0
    }
}

impl core::fmt::Display for ActionIndex {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Maps a dose in U/kg/h onto its bin. Bins are right-closed.
pub fn bin_action(dose: f64) -> Result<ActionIndex, MdpError> {
    if !dose.is_finite() || dose < 0.0 {
        return Err(MdpError::InvalidDose(dose));
    }
    if dose == 0.0 {
        return Ok(ActionIndex(0));
    }
    let bin = DOSE_EDGES.iter().take_while(|&&edge| dose > edge).count();
    Ok(ActionIndex(bin as u8 + 1))
}

/// Tabular learners see the integer SOFA total, deep learners the six
/// component scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateMode {
    Tabular,
    Vector,
}

pub type StateVector = [f64; NUM_COMPONENTS];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum State {
    Scalar(u8),
    Vector(StateVector),
}

/// Bundles the scoring choices needed to turn vitals into states and rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub kind: ScoreKind,
    /// Continuous-score configuration, used when `kind` is cxSOFA.
    pub cfg: ScoreConfig,
}

impl Encoder {
    pub fn new(kind: ScoreKind, cfg: ScoreConfig) -> Self {
        Encoder { kind, cfg }
    }

    /// Total severity under `kind`.
    pub fn score(&self, v: &VitalSigns) -> Result<f64, ScoringError> {
        match self.kind {
            ScoreKind::Sofa => scoring::sofa_discrete(v).map(f64::from),
            ScoreKind::CxSofa => scoring::cxsofa(v, &self.cfg),
        }
    }

    pub fn vector(&self, v: &VitalSigns) -> Result<StateVector, ScoringError> {
        match self.kind {
            ScoreKind::Sofa => Ok(scoring::sofa_components(v)?.map(f64::from)),
            ScoreKind::CxSofa => Ok(self.cfg.components(v)?.0),
        }
    }

    pub fn encode(&self, v: &VitalSigns, mode: StateMode) -> Result<State, ScoringError> {
        encode_state(v, mode, self.kind, &self.cfg)
    }
}

/// Tabular mode always uses the discrete SOFA total; vector mode uses the six
/// components under `kind`.
pub fn encode_state(
    v: &VitalSigns,
    mode: StateMode,
    kind: ScoreKind,
    cfg: &ScoreConfig,
) -> Result<State, ScoringError> {
    match mode {
        StateMode::Tabular => Ok(State::Scalar(scoring::sofa_discrete(v)?)),
        StateMode::Vector => Encoder::new(kind, cfg.clone()).vector(v).map(State::Vector),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub kind: ScoreKind,
    pub death_penalty: f64,
    pub gamma: f64,
}

impl RewardSpec {
    pub const DEFAULT_DEATH_PENALTY: f64 = -15.0;
    pub const DEFAULT_GAMMA: f64 = 0.99;

    pub fn new(kind: ScoreKind) -> Self {
        RewardSpec {
            kind,
            death_penalty: Self::DEFAULT_DEATH_PENALTY,
            gamma: Self::DEFAULT_GAMMA,
        }
    }

    pub fn validate(&self) -> Result<(), MdpError> {
        if self.death_penalty.is_nan() || self.death_penalty > 0.0 {
            return Err(MdpError::InvalidRewardSpec("death penalty must be <= 0"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(MdpError::InvalidRewardSpec("gamma must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Score improvement `score_t − score_next`, replaced by the death penalty on
/// the step preceding death.
pub fn reward(score_t: f64, score_next: f64, died: bool, spec: &RewardSpec) -> f64 {
    if died {
        spec.death_penalty
    } else {
        score_t - score_next
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition<S> {
    pub state: S,
    pub action: ActionIndex,
    pub reward: f64,
    pub next_state: S,
    pub done: bool,
    pub died: bool,
}

/// Per-step rewards of one episode (length `n − 1`).
pub fn episode_rewards(
    ep: &Episode,
    enc: &Encoder,
    spec: &RewardSpec,
) -> Result<Vec<f64>, MdpError> {
    let scores = ep
        .steps
        .iter()
        .map(|s| enc.score(&s.vitals))
        .collect::<Result<Vec<_>, _>>()?;
    let last = scores.len().saturating_sub(2);
    Ok(scores
        .windows(2)
        .enumerate()
        .map(|(t, w)| {
            let died = t == last && ep.died_at_end();
            reward(w[0], w[1], died, spec)
        })
        .collect())
}

fn build<S: Copy>(
    episodes: &[Episode],
    enc: &Encoder,
    spec: &RewardSpec,
    mut state_of: impl FnMut(&VitalSigns) -> Result<S, ScoringError>,
) -> Result<Vec<Transition<S>>, MdpError> {
    spec.validate()?;
    let mut out = Vec::with_capacity(episodes.iter().map(|e| e.steps.len() - 1).sum());
    for ep in episodes {
        let rewards = episode_rewards(ep, enc, spec)?;
        let states = ep
            .steps
            .iter()
            .map(|s| state_of(&s.vitals))
            .collect::<Result<Vec<_>, _>>()?;
        let n = ep.steps.len();
        for t in 0..n - 1 {
            let done = t == n - 2;
            out.push(Transition {
                state: states[t],
                action: ep.steps[t].action,
                reward: rewards[t],
                next_state: states[t + 1],
                done,
                died: done && ep.died_at_end(),
            });
        }
    }
    Ok(out)
}

/// Transitions over the integer SOFA state, rewards under `spec.kind`.
pub fn build_tabular(
    episodes: &[Episode],
    cfg: &ScoreConfig,
    spec: &RewardSpec,
) -> Result<Vec<Transition<u8>>, MdpError> {
    let enc = Encoder::new(spec.kind, cfg.clone());
    build(episodes, &enc, spec, scoring::sofa_discrete)
}

/// Transitions over six-component states, states and rewards under `spec.kind`.
pub fn build_vector(
    episodes: &[Episode],
    cfg: &ScoreConfig,
    spec: &RewardSpec,
) -> Result<Vec<Transition<StateVector>>, MdpError> {
    let enc = Encoder::new(spec.kind, cfg.clone());
    build(episodes, &enc, spec, |v| enc.vector(v))
}

/// Mode-dispatching wrapper around [`build_tabular`] and [`build_vector`].
pub fn build_transitions(
    episodes: &[Episode],
    mode: StateMode,
    cfg: &ScoreConfig,
    spec: &RewardSpec,
) -> Result<Vec<Transition<State>>, MdpError> {
    let enc = Encoder::new(spec.kind, cfg.clone());
    build(episodes, &enc, spec, |v| enc.encode(v, mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::Vital;
    use crate::trajectory::{Episode, Outcome, Step};
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn a(i: usize) -> ActionIndex {
        ActionIndex::new(i).unwrap()
    }

    #[test]
    fn bins_at_reference_edges() {
        assert_eq!(bin_action(0.0).unwrap(), a(0));
        assert_eq!(bin_action(1e-9).unwrap(), a(1));
        assert_eq!(bin_action(1.38).unwrap(), a(1));
        assert_eq!(bin_action(1.380001).unwrap(), a(2));
        assert_eq!(bin_action(1.88).unwrap(), a(2));
        assert_eq!(bin_action(3.5).unwrap(), a(3));
        assert_eq!(bin_action(4.0).unwrap(), a(4));
        assert!(bin_action(-0.1).is_err());
        assert!(bin_action(f64::NAN).is_err());
    }

    #[test]
    fn reward_examples() {
        let sofa = RewardSpec::new(ScoreKind::Sofa);
        assert_eq!(reward(5.0, 3.0, false, &sofa), 2.0);
        let cx = RewardSpec::new(ScoreKind::CxSofa);
        assert!((reward(4.7, 5.9, false, &cx) + 1.2).abs() < 1e-12);
        assert_eq!(reward(1.0, 9.0, true, &cx), -15.0);
    }

    #[test]
    fn reward_spec_bounds() {
        let mut s = RewardSpec::new(ScoreKind::Sofa);
        s.gamma = 0.0;
        assert!(s.validate().is_err());
        s.gamma = 1.0;
        s.death_penalty = 1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn state_encodings() {
        let cx = ScoreConfig::cxsofa_paper();
        let healthy = VitalSigns::healthy();
        assert_eq!(
            encode_state(&healthy, StateMode::Tabular, ScoreKind::CxSofa, &cx).unwrap(),
            State::Scalar(0)
        );
        let State::Vector(v) =
            encode_state(&healthy, StateMode::Vector, ScoreKind::CxSofa, &cx).unwrap()
        else {
            panic!()
        };
        // Respiratory, coagulation, liver and nervous are near zero; the
        // reference circulatory (2) and renal (4) fits are not.
        for i in [0, 1, 2, 4] {
            assert!(v[i] <= 0.1);
        }
        let plt = healthy.with(Vital::Platelets, 100.0);
        assert_eq!(
            encode_state(&plt, StateMode::Vector, ScoreKind::Sofa, &cx).unwrap(),
            State::Vector([0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        );
    }

    fn episode(platelets: &[f64], died: bool) -> Episode {
        let n = platelets.len();
        let steps = platelets
            .iter()
            .enumerate()
            .map(|(i, &p)| Step {
                window: i as u32,
                vitals: VitalSigns::healthy().with(Vital::Platelets, p),
                dose: 1.0,
                action: a(1),
                terminal: i == n - 1,
                died_at_end: died && i == n - 1,
            })
            .collect();
        Episode {
            patient_id: "p".to_string(),
            episode_id: "p#0".to_string(),
            steps,
            outcome: if died {
                Outcome::Died
            } else {
                Outcome::Survived
            },
            length_of_stay_days: 1.0,
        }
    }

    #[test]
    fn transitions_from_episodes() {
        let cx = ScoreConfig::cxsofa_paper();
        let spec = RewardSpec::new(ScoreKind::CxSofa);
        let survivor = episode(&[30.0, 60.0, 90.0, 140.0], false);
        let dead = episode(&[90.0, 60.0, 30.0], true);
        let ts = build_vector(&[survivor.clone(), dead], &cx, &spec).unwrap();
        assert_eq!(ts.len(), 3 + 2);
        assert!(ts[..3].iter().all(|t| t.reward >= 0.0));
        assert!(ts[2].done && !ts[2].died);
        assert!(!ts[3].done);
        assert!(ts[4].done && ts[4].died);
        assert_eq!(ts[4].reward, -15.0);

        let sum: f64 = ts[..3].iter().map(|t| t.reward).sum();
        let enc = Encoder::new(ScoreKind::CxSofa, cx.clone());
        let first = enc.score(&survivor.steps[0].vitals).unwrap();
        let last = enc.score(&survivor.steps[3].vitals).unwrap();
        assert!((sum - (first - last)).abs() < 1e-12);

        let tab = build_tabular(&[survivor], &cx, &RewardSpec::new(ScoreKind::Sofa)).unwrap();
        assert_eq!(
            tab.iter().map(|t| t.state).collect::<Vec<_>>(),
            vec![3, 2, 2]
        );
        assert_eq!(tab.iter().map(|t| t.reward).sum::<f64>(), 2.0);
    }

    proptest! {
        #[test]
        fn every_dose_has_one_bin(dose in 0.0..20.0f64) {
            let bin = bin_action(dose).unwrap().index();
            let lo = [0.0, 0.0, 1.38, 1.88, 3.5][bin];
            let hi = [0.0, 1.38, 1.88, 3.5, f64::INFINITY][bin];
            let inside = if bin == 0 { dose == 0.0 } else { dose > lo && dose <= hi };
            prop_assert!(inside);
        }

        #[test]
        fn reward_is_antisymmetric(x in -30.0..30.0f64, y in -30.0..30.0f64) {
            let spec = RewardSpec::new(ScoreKind::CxSofa);
            prop_assert_eq!(reward(x, y, false, &spec), -reward(y, x, false, &spec));
        }
    }
}

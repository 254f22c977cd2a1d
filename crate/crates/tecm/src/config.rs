//! Run configuration, persisted as JSON and copied into every manifest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tecm_core::assess::SelectionConfig;
use tecm_core::learners::{Algo, Hyper};
use tecm_core::mdp::RewardSpec;
use tecm_core::scoring::ScoreKind;
use tecm_core::trajectory::{SynthParams, DEFAULT_MAX_LEN};

use crate::error::{fail, Classify, CliResult, ErrorKind};

/// An (algorithm, reward score) pair. Only the nine combinations studied
/// are accepted: QL with the discrete score, and every deep learner with
/// either score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub algo: Algo,
    pub reward: ScoreKind,
}

impl ModelSpec {
    pub fn new(algo: Algo, reward: ScoreKind) -> CliResult<Self> {
        if algo == Algo::Ql && reward == ScoreKind::CxSofa {
            return fail(
                ErrorKind::Validation,
                "QL is only trained with the discrete SOFA reward (cxSOFA-QL is not a supported model)",
            );
        }
        Ok(ModelSpec { algo, reward })
    }

    /// SOFA-QL, then each deep learner under SOFA and cxSOFA.
    pub fn all() -> Vec<ModelSpec> {
        let mut v = vec![ModelSpec {
            algo: Algo::Ql,
            reward: ScoreKind::Sofa,
        }];
        for reward in [ScoreKind::Sofa, ScoreKind::CxSofa] {
            for algo in Algo::DEEP {
                v.push(ModelSpec { algo, reward });
            }
        }
        v
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.reward.label(), self.algo.label())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ModelSpec {
    type Err = crate::error::CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let Some((reward, algo)) = s.split_once('-') else {
            return fail(
                ErrorKind::Validation,
                format!("model '{s}' is not of the form SCORE-ALGO"),
            );
        };
        let reward: ScoreKind = reward.parse().map_err(anyhow::Error::msg).validation()?;
        let algo: Algo = algo.parse().validation()?;
        ModelSpec::new(algo, reward)
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse()
            .map_err(|e: crate::error::CliError| serde::de::Error::custom(e))
    }
}

/// Which episodes the assessment and outcome stages look at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    /// The held-out patients of the train/validation split.
    #[default]
    Validation,
    /// Every episode of the cohort, including those used for training.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for cohort generation and the patient split.
    pub seed: u64,
    pub synth: SynthParams,
    /// Custom continuous-score definition (JSON); the built-in one otherwise.
    pub score_config: Option<PathBuf>,
    pub death_penalty: f64,
    /// Patient share used for training.
    pub train_frac: f64,
    pub evaluate_on: EvalSplit,
    /// Score whose rewards decide good and bad physician episodes.
    pub partition_score: ScoreKind,
    pub models: Vec<ModelSpec>,
    #[serde(deserialize_with = "deep_overlay")]
    pub deep: Hyper,
    #[serde(deserialize_with = "tabular_overlay")]
    pub tabular: Hyper,
    pub selection: SelectionConfig,
    pub tau_sweep: Vec<f64>,
    /// Longer ingested episodes are cut into chunks of at most this many windows.
    pub max_episode_len: usize,
}

/// Fields given in the file replace those of `base`; the rest keep it.
fn overlay<'de, D: serde::Deserializer<'de>>(d: D, base: Hyper) -> Result<Hyper, D::Error> {
    use serde::de::Error;
    let given = serde_json::Map::<String, serde_json::Value>::deserialize(d)?;
    let mut merged = match serde_json::to_value(base).map_err(D::Error::custom)? {
        serde_json::Value::Object(m) => m,
        _ => unreachable!("Hyper serializes to an object"),
    };
    for (k, v) in given {
        if !merged.contains_key(&k) {
            return Err(D::Error::unknown_field(&k, &[]));
        }
        merged.insert(k, v);
    }
    serde_json::from_value(serde_json::Value::Object(merged)).map_err(D::Error::custom)
}

fn deep_overlay<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Hyper, D::Error> {
    overlay(d, Hyper::deep())
}

fn tabular_overlay<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Hyper, D::Error> {
    overlay(d, Hyper::tabular())
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            synth: SynthParams::default(),
            score_config: None,
            death_penalty: RewardSpec::DEFAULT_DEATH_PENALTY,
            train_frac: 0.8,
            evaluate_on: EvalSplit::Validation,
            partition_score: ScoreKind::CxSofa,
            models: ModelSpec::all(),
            deep: Hyper::deep(),
            tabular: Hyper::tabular(),
            selection: SelectionConfig::default(),
            tau_sweep: vec![0.5, 0.6, 0.65, 0.7, 0.75, 0.8, 0.9],
            max_episode_len: DEFAULT_MAX_LEN,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(anyhow::Error::from)
            .map_err(|e| e.context(format!("reading config {}", path.display())))
            .data()?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("config {}: {e}", path.display()))
            .validation()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.synth.validate().validation()?;
        self.deep.validate().validation()?;
        self.tabular.validate().validation()?;
        self.selection.validate().validation()?;
        let bad = |m: String| fail(ErrorKind::Validation, m);
        if !(self.train_frac > 0.0 && self.train_frac <= 1.0) {
            return bad(format!("train_frac {} must lie in (0, 1]", self.train_frac));
        }
        if self.train_frac == 1.0 && self.evaluate_on == EvalSplit::Validation {
            return bad(
                "train_frac 1 leaves no validation patients; set evaluate_on to \"all\"".into(),
            );
        }
        if self.death_penalty.is_nan() || self.death_penalty > 0.0 {
            return bad("death_penalty must be <= 0".into());
        }
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        if let Some(t) = self.tau_sweep.iter().find(|t| !(0.5..=1.0).contains(*t)) {
            return bad(format!("tau {t} outside [0.5, 1]"));
        }
        if self.max_episode_len < 2 {
            return bad("max_episode_len must be >= 2".into());
        }
        Ok(())
    }

    pub fn hyper_for(&self, m: ModelSpec) -> Hyper {
        if m.algo.is_deep() {
            self.deep
        } else {
            self.tabular
        }
    }

    pub fn reward_spec(&self, kind: ScoreKind) -> RewardSpec {
        RewardSpec {
            kind,
            death_penalty: self.death_penalty,
            gamma: RewardSpec::DEFAULT_GAMMA,
        }
    }
}

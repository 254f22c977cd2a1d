use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{tecm, AssessError, Partition, Tecm};
use crate::learners::{Checkpoint, QFunction};
use crate::mdp::Encoder;

/// Below this, og or wg makes σ undefined and the infinity sentinel is used.
pub const SIGMA_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confidence {
    /// `+∞` when `degenerate`.
    #[serde(with = "crate::nonfinite")]
    pub value: f64,
    pub degenerate: bool,
}

/// `σ = [2·og·wb / (og + wb)] · [(og + wg) / (2·og·wg)]`.
pub fn confidence(t: &Tecm) -> Confidence {
    if t.og < SIGMA_FLOOR || t.wg < SIGMA_FLOOR {
        return Confidence {
            value: f64::INFINITY,
            degenerate: true,
        };
    }
    let harmonic = 2.0 * t.og * t.wb / (t.og + t.wb);
    Confidence {
        value: harmonic * ((t.og + t.wg) / (2.0 * t.og * t.wg)),
        degenerate: false,
    }
}

/// `μ = (og − wg) − (wb − ob)`.
pub fn bias(t: &Tecm) -> f64 {
    (t.og - t.wg) - (t.wb - t.ob)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub checkpoint: String,
    pub epoch: u32,
    pub tecm: Tecm,
    pub sigma: Confidence,
    pub mu: f64,
    pub o_gap: f64,
    pub w_gap: f64,
}

impl AssessmentReport {
    pub fn new(checkpoint: String, epoch: u32, tecm: Tecm) -> Self {
        AssessmentReport {
            checkpoint,
            epoch,
            sigma: confidence(&tecm),
            mu: bias(&tecm),
            o_gap: tecm.og - tecm.ob,
            w_gap: tecm.wb - tecm.wg,
            tecm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preference {
    #[default]
    Aggressive,
    Conservative,
}

impl FromStr for Preference {
    type Err = AssessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aggressive" => Ok(Preference::Aggressive),
            "conservative" => Ok(Preference::Conservative),
            other => Err(AssessError::InvalidConfig(format!(
                "unknown preference '{other}'"
            ))),
        }
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preference::Aggressive => "aggressive",
            Preference::Conservative => "conservative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    First,
    Second,
}

/// Pairwise comparison. Dominance in both gaps decides first; otherwise the
/// higher σ wins, or the lower one under a conservative preference. Full ties
/// keep the first report.
pub fn compare(r1: &AssessmentReport, r2: &AssessmentReport, pref: Preference) -> Winner {
    if r1.o_gap >= r2.o_gap && r1.w_gap >= r2.w_gap {
        return Winner::First;
    }
    if r2.o_gap >= r1.o_gap && r2.w_gap >= r1.w_gap {
        return Winner::Second;
    }
    let (s1, s2) = (r1.sigma.value, r2.sigma.value);
    if s1 == s2 {
        return Winner::First;
    }
    let higher = if s1 > s2 {
        Winner::First
    } else {
        Winner::Second
    };
    match (pref, higher) {
        (Preference::Aggressive, w) => w,
        (Preference::Conservative, Winner::First) => Winner::Second,
        (Preference::Conservative, Winner::Second) => Winner::First,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    /// Lowest effectiveness rate for the good/bad split.
    pub tau: f64,
    /// Pool threshold inside the matrix; defaults to `tau`.
    pub pool_tau: Option<f64>,
    pub eta: u32,
    pub preference: Preference,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            tau: 0.7,
            pool_tau: None,
            eta: 50,
            preference: Preference::Aggressive,
        }
    }
}

impl SelectionConfig {
    pub fn pool_tau(&self) -> f64 {
        self.pool_tau.unwrap_or(self.tau)
    }

    pub fn validate(&self) -> Result<(), AssessError> {
        let bad = |m: &str| Err(AssessError::InvalidConfig(m.into()));
        if !(0.5..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0.5, 1]");
        }
        if let Some(p) = self.pool_tau {
            if !(0.0..=1.0).contains(&p) {
                return bad("pool tau must lie in [0, 1]");
            }
        }
        if self.eta == 0 {
            return bad("eta must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Index of the winner within `reports`.
    pub best: usize,
    /// Every report evaluated, in stream order.
    pub reports: Vec<AssessmentReport>,
    /// True when η consecutive failed challenges ended the fold.
    pub stopped_early: bool,
}

impl Selection {
    pub fn best_report(&self) -> &AssessmentReport {
        &self.reports[self.best]
    }
}

/// η-patience fold over a lazily evaluated report stream. The first report is
/// the incumbent; a challenger replaces it only when [`compare`] prefers the
/// challenger. Stops after `eta` consecutive failed challenges.
pub fn select_reports<E>(
    reports: impl IntoIterator<Item = Result<AssessmentReport, E>>,
    eta: u32,
    pref: Preference,
) -> Result<Option<Selection>, E> {
    let mut out = Selection {
        best: 0,
        reports: Vec::new(),
        stopped_early: false,
    };
    let mut stale = 0u32;
    for r in reports {
        let r = r?;
        out.reports.push(r);
        let i = out.reports.len() - 1;
        if i == 0 {
            continue;
        }
        if compare(&out.reports[out.best], &out.reports[i], pref) == Winner::Second {
            out.best = i;
            stale = 0;
        } else {
            stale += 1;
            if stale >= eta {
                break;
            }
        }
    }
    if out.reports.is_empty() {
        return Ok(None);
    }
    // Set whenever patience ran out, even on the last report, so the stream
    // is never pulled past the stopping point.
    out.stopped_early = stale >= eta;
    Ok(Some(out))
}

pub fn assess_checkpoint(
    cp: &Checkpoint,
    partition: &Partition<'_>,
    encoder: &Encoder,
    pool_tau: f64,
) -> Result<AssessmentReport, AssessError> {
    let q = QFunction::new(cp.q.clone(), encoder.clone());
    Ok(AssessmentReport::new(
        cp.id(),
        cp.epoch,
        tecm(partition, &q, pool_tau)?,
    ))
}

/// Selects among checkpoints in epoch order with η-patience.
pub fn select_checkpoint(
    checkpoints: &[Checkpoint],
    partition: &Partition<'_>,
    encoder: &Encoder,
    cfg: &SelectionConfig,
) -> Result<Selection, AssessError> {
    cfg.validate()?;
    let stream = checkpoints
        .iter()
        .map(|cp| assess_checkpoint(cp, partition, encoder, cfg.pool_tau()));
    select_reports(stream, cfg.eta, cfg.preference)?.ok_or(AssessError::EmptyStream)
}

//! Follower matching: split episodes by how often physicians matched a
//! policy's recommendation, then compare mortality and length of stay.

mod stats;

pub use stats::{reg_inc_beta, student_t_two_sided, two_proportion_z, welch_t, TTest, ZTest};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::learners::{ActionValues, LearnError};
use crate::math;
use crate::trajectory::Episode;

/// Fraction of decision steps where the physician's bin equals the policy's best bin.
pub fn match_rate<Q: ActionValues + ?Sized>(ep: &Episode, q: &Q) -> Result<f64, LearnError> {
    let n = ep.decision_steps();
    if n == 0 {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for s in &ep.steps[..n] {
        if q.best(&s.vitals)? == s.action {
            hits += 1;
        }
    }
    Ok(hits as f64 / n as f64)
}

/// Index split: rate strictly above `tau` means follower.
pub fn split_by_rates(rates: &[f64], tau: f64) -> (Vec<usize>, Vec<usize>) {
    (0..rates.len()).partition(|&i| rates[i] > tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FollowerSplit<'a> {
    pub followers: Vec<&'a Episode>,
    pub non_followers: Vec<&'a Episode>,
    pub tau: f64,
    pub policy: String,
}

pub fn match_followers<'a, Q: ActionValues + ?Sized>(
    episodes: &'a [Episode],
    q: &Q,
    tau: f64,
    policy: &str,
) -> Result<FollowerSplit<'a>, LearnError> {
    let rates = episodes
        .iter()
        .map(|e| match_rate(e, q))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(split_with_rates(episodes, &rates, tau, policy))
}

/// Same as [`match_followers`] with rates computed once up front, which makes
/// τ sweeps cheap.
pub fn split_with_rates<'a>(
    episodes: &'a [Episode],
    rates: &[f64],
    tau: f64,
    policy: &str,
) -> FollowerSplit<'a> {
    let (f, n) = split_by_rates(rates, tau);
    FollowerSplit {
        followers: f.into_iter().map(|i| &episodes[i]).collect(),
        non_followers: n.into_iter().map(|i| &episodes[i]).collect(),
        tau,
        policy: policy.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n: usize,
    pub deaths: usize,
    pub mortality: f64,
    pub mean_stay: f64,
}

/// `None` for an empty group.
pub fn group_stats(eps: &[&Episode]) -> Option<GroupStats> {
    if eps.is_empty() {
        return None;
    }
    let deaths = eps.iter().filter(|e| e.died()).count();
    let stays: Vec<f64> = eps.iter().map(|e| e.length_of_stay_days).collect();
    Some(GroupStats {
        n: eps.len(),
        deaths,
        mortality: deaths as f64 / eps.len() as f64,
        mean_stay: math::mean(&stays),
    })
}

/// `(baseline − value) / baseline`; `None` when the baseline is 0.
pub fn improvement(baseline: f64, value: f64) -> Option<f64> {
    if baseline == 0.0 {
        return None;
    }
    Some((baseline - value) / baseline)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub label: String,
    pub tau: f64,
    pub n_episodes: usize,
    pub n_followers: usize,
    /// Follower-group statistics; absent when nobody followed the policy.
    pub followers: Option<GroupStats>,
    pub non_followers: Option<GroupStats>,
    pub improvement_mortality: Option<f64>,
    pub improvement_stay: Option<f64>,
    /// Welch test on death indicators, followers vs non-followers.
    pub mortality_test: Option<TTest>,
    pub stay_test: Option<TTest>,
    /// Two-proportion z-test on mortality, as a cross-check.
    pub mortality_z: Option<ZTest>,
}

impl OutcomeRow {
    pub fn mortality(&self) -> Option<f64> {
        self.followers.map(|g| g.mortality)
    }

    pub fn stay(&self) -> Option<f64> {
        self.followers.map(|g| g.mean_stay)
    }

    pub fn p_mortality(&self) -> Option<f64> {
        self.mortality_test.and_then(|t| t.p)
    }

    pub fn p_stay(&self) -> Option<f64> {
        self.stay_test.and_then(|t| t.p)
    }

    /// Follower mortality below non-follower mortality at p < 0.05.
    pub fn significant_mortality(&self) -> bool {
        matches!(
            (self.followers, self.non_followers, self.p_mortality()),
            (Some(f), Some(n), Some(p)) if f.mortality < n.mortality && p < 0.05
        )
    }
}

fn indicators(eps: &[&Episode]) -> Vec<f64> {
    eps.iter()
        .map(|e| if e.died() { 1.0 } else { 0.0 })
        .collect()
}

fn stays(eps: &[&Episode]) -> Vec<f64> {
    eps.iter().map(|e| e.length_of_stay_days).collect()
}

/// Row for one split against the whole-cohort baseline.
pub fn outcome_row(label: &str, split: &FollowerSplit<'_>, baseline: &GroupStats) -> OutcomeRow {
    let f = group_stats(&split.followers);
    let n = group_stats(&split.non_followers);
    let both = f.is_some() && n.is_some();
    OutcomeRow {
        label: label.into(),
        tau: split.tau,
        n_episodes: split.followers.len() + split.non_followers.len(),
        n_followers: split.followers.len(),
        improvement_mortality: f.and_then(|g| improvement(baseline.mortality, g.mortality)),
        improvement_stay: f.and_then(|g| improvement(baseline.mean_stay, g.mean_stay)),
        mortality_test: both.then(|| {
            welch_t(
                &indicators(&split.followers),
                &indicators(&split.non_followers),
            )
        }),
        stay_test: both.then(|| welch_t(&stays(&split.followers), &stays(&split.non_followers))),
        mortality_z: f
            .zip(n)
            .and_then(|(f, n)| two_proportion_z(f.deaths, f.n, n.deaths, n.n)),
        followers: f,
        non_followers: n,
    }
}

/// Baseline row: every episode counts as following the physicians.
pub fn baseline_row(episodes: &[Episode], tau: f64) -> Option<OutcomeRow> {
    let all: Vec<&Episode> = episodes.iter().collect();
    let base = group_stats(&all)?;
    let split = FollowerSplit {
        followers: all,
        non_followers: Vec::new(),
        tau,
        policy: "PAT".into(),
    };
    Some(outcome_row("PAT", &split, &base))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeTable {
    pub tau: f64,
    pub baseline: OutcomeRow,
    pub rows: Vec<OutcomeRow>,
}

/// One row per model plus the physician baseline.
pub fn outcome_report<Q: ActionValues>(
    episodes: &[Episode],
    models: &[(String, Q)],
    tau: f64,
) -> Result<Option<OutcomeTable>, LearnError> {
    let Some(baseline) = baseline_row(episodes, tau) else {
        return Ok(None);
    };
    let base = baseline.followers.expect("non-empty cohort");
    let rows = models
        .iter()
        .map(|(label, q)| {
            Ok(outcome_row(
                label,
                &match_followers(episodes, q, tau, label)?,
                &base,
            ))
        })
        .collect::<Result<Vec<_>, LearnError>>()?;
    Ok(Some(OutcomeTable {
        tau,
        baseline,
        rows,
    }))
}

#[cfg(test)]
mod tests;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::AssessError;
use crate::learners::ActionValues;
use crate::mdp::{episode_rewards, ActionIndex, Encoder, RewardSpec};
use crate::trajectory::Episode;

/// `1 / (1 + 0.25·|i − j|)` over bin indices.
pub fn similarity(a: ActionIndex, reference: ActionIndex) -> f64 {
    1.0 / (1.0 + 0.25 * a.distance(reference) as f64)
}

/// Fraction of steps with a non-negative reward.
pub fn good_rate(rewards: &[f64]) -> f64 {
    if rewards.is_empty() {
        return 0.0;
    }
    rewards.iter().filter(|&&r| r >= 0.0).count() as f64 / rewards.len() as f64
}

/// Indices of good and bad episodes given per-episode rewards: good when the
/// rate of non-negative rewards reaches `tau`.
pub fn classify_rewards(rewards: &[Vec<f64>], tau: f64) -> (Vec<usize>, Vec<usize>) {
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for (i, r) in rewards.iter().enumerate() {
        if good_rate(r) >= tau {
            good.push(i);
        } else {
            bad.push(i);
        }
    }
    (good, bad)
}

/// Good (P_G) and bad (P_B) physician episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<'a> {
    pub good: Vec<&'a Episode>,
    pub bad: Vec<&'a Episode>,
    pub tau: f64,
}

pub fn classify_episodes<'a>(
    episodes: &'a [Episode],
    enc: &Encoder,
    spec: &RewardSpec,
    tau: f64,
) -> Result<Partition<'a>, AssessError> {
    let rewards = episodes
        .iter()
        .map(|ep| {
            if ep.decision_steps() == 0 {
                return Err(AssessError::EmptyEpisode(ep.episode_id.clone()));
            }
            Ok(episode_rewards(ep, enc, spec)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (good, bad) = classify_rewards(&rewards, tau);
    Ok(Partition {
        good: good.into_iter().map(|i| &episodes[i]).collect(),
        bad: bad.into_iter().map(|i| &episodes[i]).collect(),
        tau,
    })
}

/// Per-step similarity of the physician's action to the best and worst policy.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSims {
    pub sim_o: Vec<f64>,
    pub sim_w: Vec<f64>,
}

impl EpisodeSims {
    fn len(&self) -> usize {
        self.sim_o.len()
    }

    fn mean_o(&self) -> f64 {
        self.sim_o.iter().sum::<f64>() / self.len() as f64
    }

    fn mean_w(&self) -> f64 {
        self.sim_w.iter().sum::<f64>() / self.len() as f64
    }

    /// Share of steps where the best policy is at least as close as the worst.
    pub fn rate_o(&self) -> f64 {
        let n = self
            .sim_o
            .iter()
            .zip(&self.sim_w)
            .filter(|(o, w)| o >= w)
            .count();
        n as f64 / self.len() as f64
    }

    /// Share of steps where the worst policy is at least as close as the best.
    pub fn rate_w(&self) -> f64 {
        let n = self
            .sim_o
            .iter()
            .zip(&self.sim_w)
            .filter(|(o, w)| w >= o)
            .count();
        n as f64 / self.len() as f64
    }
}

pub fn episode_sims<Q: ActionValues + ?Sized>(
    ep: &Episode,
    q: &Q,
) -> Result<EpisodeSims, AssessError> {
    let n = ep.decision_steps();
    if n == 0 {
        return Err(AssessError::EmptyEpisode(ep.episode_id.clone()));
    }
    let mut sims = EpisodeSims {
        sim_o: Vec::with_capacity(n),
        sim_w: Vec::with_capacity(n),
    };
    for step in &ep.steps[..n] {
        sims.sim_o
            .push(similarity(step.action, q.best(&step.vitals)?));
        sims.sim_w
            .push(similarity(step.action, q.worst(&step.vitals)?));
    }
    Ok(sims)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tecm {
    pub og: f64,
    pub wg: f64,
    pub ob: f64,
    pub wb: f64,
    /// Episodes per cell, in the order og, wg, ob, wb.
    pub counts: [usize; 4],
    pub tau: f64,
}

impl Tecm {
    /// Cells whose sub-pool was empty (and so hold 0), in og, wg, ob, wb order.
    pub fn empty_cells(&self) -> [bool; 4] {
        self.counts.map(|c| c == 0)
    }
}

#[derive(Default)]
struct Pool {
    sim: f64,
    rate: f64,
    n: usize,
}

impl Pool {
    fn add(&mut self, sim: f64, rate: f64) {
        self.sim += sim;
        self.rate += rate;
        self.n += 1;
    }

    /// Mean similarity times mean rate, 0 for an empty pool.
    fn cell(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = self.n as f64;
        (self.sim / n) * (self.rate / n)
    }
}

/// Matrix cells from precomputed similarities. A good episode joins the
/// optimal pool when its best-policy rate exceeds `tau`; a bad episode joins
/// the worst pool when its worst-policy rate exceeds `tau`. The complementary
/// rates are `1 − rate`.
pub fn tecm_from_sims(good: &[EpisodeSims], bad: &[EpisodeSims], tau: f64) -> Tecm {
    let (mut og, mut wg, mut ob, mut wb) = (
        Pool::default(),
        Pool::default(),
        Pool::default(),
        Pool::default(),
    );
    for e in good {
        let rho = e.rate_o();
        if rho > tau {
            og.add(e.mean_o(), rho);
        } else {
            wg.add(e.mean_w(), 1.0 - rho);
        }
    }
    for e in bad {
        let rho = e.rate_w();
        if rho > tau {
            wb.add(e.mean_w(), rho);
        } else {
            ob.add(e.mean_o(), 1.0 - rho);
        }
    }
    Tecm {
        og: og.cell(),
        wg: wg.cell(),
        ob: ob.cell(),
        wb: wb.cell(),
        counts: [og.n, wg.n, ob.n, wb.n],
        tau,
    }
}

/// Matrix for a policy over a partition; `tau` is the pool threshold.
pub fn tecm<Q: ActionValues + ?Sized>(
    partition: &Partition<'_>,
    q: &Q,
    tau: f64,
) -> Result<Tecm, AssessError> {
    let sims = |eps: &[&Episode]| {
        eps.iter()
            .map(|e| episode_sims(e, q))
            .collect::<Result<Vec<_>, _>>()
    };
    Ok(tecm_from_sims(
        &sims(&partition.good)?,
        &sims(&partition.bad)?,
        tau,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn a(i: usize) -> ActionIndex {
        ActionIndex::new(i).unwrap()
    }

    #[test]
    fn similarity_values() {
        assert_eq!(similarity(a(2), a(2)), 1.0);
        assert!((similarity(a(1), a(3)) - 1.0 / 1.5).abs() < 1e-12);
        assert_eq!(similarity(a(0), a(4)), 0.5);
        assert_eq!(similarity(a(4), a(0)), 0.5);
    }

    #[test]
    fn good_rate_counts_zero_as_good() {
        assert_eq!(good_rate(&[1.0, -1.0, 0.0, 2.0]), 0.75);
        let (g, b) = classify_rewards(&[vec![1.0, -1.0, 0.0, 2.0], vec![-1.0, -3.0]], 0.7);
        assert_eq!((g, b), (vec![0], vec![1]));
        // Exactly at the threshold counts as good.
        let (g, _) = classify_rewards(&[vec![1.0, -1.0, 0.0, 2.0]], 0.75);
        assert_eq!(g, vec![0]);
    }

    #[test]
    fn three_episode_fixture() {
        // Cell values worked by hand.
        // good #1: sim_o [1, .8, 1], sim_w [.5, .8, 2/3]      rate_o 1   -> opt pool
        // good #2: sim_o [.5, 2/3], sim_w [1, 2/3]            rate_o .5  -> wrt pool, rate_w .5
        // bad  #3: sim_o [.8, .5, 1, 1], sim_w [1, 1, .8, 1]  rate_w .75 -> wrt pool (τ = .7)
        let g1 = EpisodeSims {
            sim_o: vec![1.0, 0.8, 1.0],
            sim_w: vec![0.5, 0.8, 2.0 / 3.0],
        };
        let g2 = EpisodeSims {
            sim_o: vec![0.5, 2.0 / 3.0],
            sim_w: vec![1.0, 2.0 / 3.0],
        };
        let b3 = EpisodeSims {
            sim_o: vec![0.8, 0.5, 1.0, 1.0],
            sim_w: vec![1.0, 1.0, 0.8, 1.0],
        };
        let t = tecm_from_sims(&[g1, g2], &[b3], 0.7);
        assert!((t.og - 2.8 / 3.0).abs() < 1e-12);
        assert!((t.wg - (5.0 / 6.0) * 0.5).abs() < 1e-12);
        assert!((t.wb - 0.95 * 0.75).abs() < 1e-12);
        assert_eq!(t.ob, 0.0);
        assert_eq!(t.counts, [1, 1, 0, 1]);
        assert_eq!(t.empty_cells(), [false, false, true, false]);
    }

    #[test]
    fn ties_favour_both_rates() {
        let e = EpisodeSims {
            sim_o: vec![0.8, 0.8],
            sim_w: vec![0.8, 0.8],
        };
        assert_eq!(e.rate_o(), 1.0);
        assert_eq!(e.rate_w(), 1.0);
        let t = tecm_from_sims(std::slice::from_ref(&e), std::slice::from_ref(&e), 0.5);
        assert_eq!((t.og, t.wg, t.ob, t.wb), (0.8, 0.0, 0.0, 0.8));
    }
}

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Algo, Checkpoint, Hyper, LearnError, QModel};
use crate::mdp::{Transition, NUM_ACTIONS};
use crate::scoring::ScoreKind;

/// Discrete SOFA totals 0..=24.
pub const NUM_SOFA_STATES: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub values: Vec<[f64; NUM_ACTIONS]>,
    pub visits: Vec<[u32; NUM_ACTIONS]>,
}

impl Default for QTable {
    fn default() -> Self {
        QTable {
            values: vec![[0.0; NUM_ACTIONS]; NUM_SOFA_STATES],
            visits: vec![[0; NUM_ACTIONS]; NUM_SOFA_STATES],
        }
    }
}

impl QTable {
    fn check(s: u8) -> Result<usize, LearnError> {
        let i = usize::from(s);
        if i < NUM_SOFA_STATES {
            Ok(i)
        } else {
            Err(LearnError::TabularState(s))
        }
    }

    pub fn row(&self, s: u8) -> Result<[f64; NUM_ACTIONS], LearnError> {
        Ok(self.values[Self::check(s)?])
    }

    /// Cells with at least one update; all `true` for a never-visited state.
    pub fn visited_mask(&self, s: u8) -> Result<[bool; NUM_ACTIONS], LearnError> {
        let v = self.visits[Self::check(s)?];
        if v.iter().all(|&c| c == 0) {
            return Ok([true; NUM_ACTIONS]);
        }
        Ok(v.map(|c| c > 0))
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        if self.values.len() != NUM_SOFA_STATES || self.visits.len() != NUM_SOFA_STATES {
            return Err(LearnError::Mismatch("Q-table must have 25 rows".into()));
        }
        if self.values.iter().flatten().any(|q| !q.is_finite()) {
            return Err(LearnError::Mismatch("non-finite Q-table entry".into()));
        }
        Ok(())
    }
}

/// One-step Q-learning sweeps over the offline dataset in a per-epoch shuffled
/// order. The bootstrap maximum at `s'` runs over the actions present in the
/// data at `s'`, so unseen actions never leak their zero initial value.
pub fn train_ql(
    transitions: &[Transition<u8>],
    reward: ScoreKind,
    h: &Hyper,
) -> Result<Vec<Checkpoint>, LearnError> {
    h.validate()?;
    if transitions.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let mut support = [[false; NUM_ACTIONS]; NUM_SOFA_STATES];
    for t in transitions {
        QTable::check(t.next_state)?;
        support[QTable::check(t.state)?][t.action.index()] = true;
    }
    let bootstrap = |q: &QTable, s: usize| {
        support[s]
            .iter()
            .zip(&q.values[s])
            .filter(|(ok, _)| **ok)
            .map(|(_, v)| *v)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            .unwrap_or(0.0)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(h.seed);
    let mut order: Vec<usize> = (0..transitions.len()).collect();
    let mut q = QTable::default();
    let mut out = Vec::new();
    for epoch in 1..=h.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let t = &transitions[i];
            let (s, a) = (usize::from(t.state), t.action.index());
            let next = if t.done {
                0.0
            } else {
                bootstrap(&q, usize::from(t.next_state))
            };
            let target = t.reward + h.gamma * next;
            q.values[s][a] += h.lr * (target - q.values[s][a]);
            q.visits[s][a] = q.visits[s][a].saturating_add(1);
        }
        if h.is_checkpoint(epoch) {
            out.push(Checkpoint {
                epoch,
                algo: Algo::Ql,
                reward,
                q: QModel::Table(q.clone()),
            });
        }
    }
    Ok(out)
}

use alloc::collections::BTreeMap;

use crate::math;
use crate::mdp::{StateVector, Transition, NUM_ACTIONS};
use crate::scoring::{COMPONENT_MAX, NUM_COMPONENTS};

/// A state vector with each component rounded to the nearest integer score.
pub type BehaviorKey = [u8; NUM_COMPONENTS];

/// Physician action frequencies per discretized state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BehaviorModel {
    counts: BTreeMap<BehaviorKey, [u32; NUM_ACTIONS]>,
}

impl BehaviorModel {
    pub fn key(s: &StateVector) -> BehaviorKey {
        s.map(|x| math::round(x.clamp(0.0, COMPONENT_MAX)) as u8)
    }

    pub fn fit(transitions: &[Transition<StateVector>]) -> Self {
        let mut counts = BTreeMap::new();
        for t in transitions {
            let row: &mut [u32; NUM_ACTIONS] = counts.entry(Self::key(&t.state)).or_default();
            row[t.action.index()] += 1;
        }
        BehaviorModel { counts }
    }

    pub fn num_keys(&self) -> usize {
        self.counts.len()
    }

    /// Action probabilities at `s`, or `None` when the state carries no mass.
    pub fn probs(&self, s: &StateVector) -> Option<[f64; NUM_ACTIONS]> {
        let row = self.counts.get(&Self::key(s))?;
        let total: u32 = row.iter().sum();
        if total == 0 {
            return None;
        }
        Some(row.map(|c| f64::from(c) / f64::from(total)))
    }

    /// `{a : p(a|s) ≥ τ · max p(·|s)}`, or `None` when the state has no mass.
    pub fn allowed(&self, s: &StateVector, tau: f64) -> Option<[bool; NUM_ACTIONS]> {
        let p = self.probs(s)?;
        let top = p.iter().copied().fold(0.0, f64::max);
        Some(p.map(|x| x >= tau * top))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::ActionIndex;
    use alloc::vec::Vec;

    fn t(s: StateVector, a: usize) -> Transition<StateVector> {
        Transition {
            state: s,
            action: ActionIndex::new(a).unwrap(),
            reward: 0.0,
            next_state: s,
            done: true,
            died: false,
        }
    }

    #[test]
    fn frequencies_and_constraint() {
        let s = [0.2, 1.4, 2.0, 0.0, 3.6, 4.0];
        let near = [0.4, 0.6, 2.4, 0.1, 4.4, 4.0];
        let data: Vec<_> = [1, 1, 1, 2, 4, 1].iter().map(|&a| t(s, a)).collect();
        let m = BehaviorModel::fit(&data);
        assert_eq!(BehaviorModel::key(&s), [0, 1, 2, 0, 4, 4]);
        assert_eq!(m.num_keys(), 1);
        let p = m.probs(&near).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[1], 4.0 / 6.0);
        assert_eq!(
            m.allowed(&s, 0.3).unwrap(),
            [false, true, false, false, false]
        );
        assert_eq!(
            m.allowed(&s, 0.25).unwrap(),
            [false, true, true, false, true]
        );
        assert_eq!(m.allowed(&s, 0.0).unwrap(), [true; 5]);
        assert_eq!(m.probs(&[3.0; 6]), None);
    }
}

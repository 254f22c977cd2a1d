use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{pick, Algo, BehaviorModel, Checkpoint, Hyper, LearnError, QModel};
use crate::mdp::{ActionIndex, StateVector, Transition, NUM_ACTIONS};
use crate::qcore::{td_loss_grad, Adam, Batch, MlpParams};
use crate::scoring::{ScoreKind, NUM_COMPONENTS};

/// Checkpoints plus the loss of every optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepRun {
    pub checkpoints: Vec<Checkpoint>,
    pub losses: Vec<f64>,
    /// Next states where the BCQ constraint fell back to all actions.
    pub bcq_fallbacks: usize,
}

fn row(q: &[f64], i: usize) -> [f64; NUM_ACTIONS] {
    let mut r = [0.0; NUM_ACTIONS];
    r.copy_from_slice(&q[i * NUM_ACTIONS..(i + 1) * NUM_ACTIONS]);
    r
}

/// Regression targets for a minibatch. Terminal transitions use the reward
/// alone. Returns the targets and the number of BCQ fallbacks.
pub fn td_targets(
    algo: Algo,
    batch: &[&Transition<StateVector>],
    online: &MlpParams,
    target: &MlpParams,
    behavior: Option<&BehaviorModel>,
    h: &Hyper,
) -> Result<(Vec<f64>, usize), LearnError> {
    let next: Vec<f64> = batch.iter().flat_map(|t| t.next_state).collect();
    let q_target = target.forward(&next)?;
    let q_online = match algo {
        Algo::Ddqn | Algo::Bcq => Some(online.forward(&next)?),
        _ => None,
    };
    let mut fallbacks = 0;
    let mut ys = Vec::with_capacity(batch.len());
    for (i, t) in batch.iter().enumerate() {
        if t.done {
            ys.push(t.reward);
            continue;
        }
        let qt = row(&q_target, i);
        let boot = match algo {
            Algo::Dqn | Algo::Cql => qt.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Algo::Ddqn | Algo::Bcq => {
                let qo = row(q_online.as_ref().expect("computed above"), i);
                let mask = if algo == Algo::Bcq {
                    let m = behavior.and_then(|b| b.allowed(&t.next_state, h.tau_bcq));
                    if m.is_none() {
                        fallbacks += 1;
                    }
                    m
                } else {
                    None
                };
                qt[pick(&qo, mask.as_ref(), |a, b| a > b).index()]
            }
            Algo::Ql => return Err(LearnError::Mismatch("QL is not a deep learner".into())),
        };
        ys.push(t.reward + h.gamma * boot);
    }
    Ok((ys, fallbacks))
}

/// Minibatch TD regression with a periodically synced target network.
pub fn train_deep(
    transitions: &[Transition<StateVector>],
    algo: Algo,
    reward: ScoreKind,
    h: &Hyper,
) -> Result<DeepRun, LearnError> {
    h.validate()?;
    if !algo.is_deep() {
        return Err(LearnError::Mismatch(
            "train_deep needs dqn, ddqn, bcq or cql".into(),
        ));
    }
    if transitions.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let behavior = (algo == Algo::Bcq).then(|| BehaviorModel::fit(transitions));
    let cql_alpha = (algo == Algo::Cql).then_some(h.cql_alpha);

    let mut rng = ChaCha8Rng::seed_from_u64(h.seed);
    let mut online = MlpParams::new(&[NUM_COMPONENTS, h.hidden, h.hidden, NUM_ACTIONS], &mut rng);
    let mut target = online.clone();
    let mut opt = Adam::new(online.num_params(), h.lr);
    let mut order: Vec<usize> = (0..transitions.len()).collect();
    let mut run = DeepRun {
        checkpoints: Vec::new(),
        losses: Vec::new(),
        bcq_fallbacks: 0,
    };
    let mut steps = 0u64;
    for epoch in 1..=h.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(h.batch_size) {
            let picked: Vec<&Transition<StateVector>> =
                chunk.iter().map(|&i| &transitions[i]).collect();
            let (targets, fb) = td_targets(algo, &picked, &online, &target, behavior.as_ref(), h)?;
            run.bcq_fallbacks += fb;
            let batch = Batch {
                states: picked.iter().flat_map(|t| t.state).collect(),
                actions: picked
                    .iter()
                    .map(|t| t.action)
                    .collect::<Vec<ActionIndex>>(),
                targets,
            };
            let (loss, grads) = td_loss_grad(&online, &batch, cql_alpha)?;
            opt.step(&mut online, &grads)?;
            run.losses.push(loss);
            steps += 1;
            if steps.is_multiple_of(h.target_sync) {
                target.clone_from(&online);
            }
        }
        if h.is_checkpoint(epoch) {
            run.checkpoints.push(Checkpoint {
                epoch,
                algo,
                reward,
                q: QModel::Mlp(online.clone()),
            });
        }
    }
    if run.bcq_fallbacks > 0 {
        log::warn!(
            "BCQ constraint fell back to the full action set {} times (states without behavior mass)",
            run.bcq_fallbacks
        );
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::Rng;

    fn random_data(n: usize, seed: u64) -> Vec<Transition<StateVector>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let s: StateVector = core::array::from_fn(|_| rng.random_range(0.0..4.0));
                let s2: StateVector = core::array::from_fn(|_| rng.random_range(0.0..4.0));
                Transition {
                    state: s,
                    action: ActionIndex::new(rng.random_range(0..5)).unwrap(),
                    reward: rng.random_range(-2.0..2.0),
                    next_state: s2,
                    done: rng.random::<f64>() < 0.1,
                    died: false,
                }
            })
            .collect()
    }

    fn small() -> Hyper {
        Hyper {
            epochs: 4,
            checkpoint_every: 2,
            batch_size: 64,
            target_sync: 5,
            hidden: 16,
            seed: 9,
            ..Hyper::deep()
        }
    }

    #[test]
    fn checkpoints_and_determinism() {
        let data = random_data(300, 1);
        let a = train_deep(&data, Algo::Dqn, ScoreKind::CxSofa, &small()).unwrap();
        let b = train_deep(&data, Algo::Dqn, ScoreKind::CxSofa, &small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.checkpoints.iter().map(|c| c.epoch).collect::<Vec<_>>(),
            vec![2, 4]
        );
        assert_eq!(a.losses.len(), 4 * 5);
        assert!(a.losses.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn cql_zero_alpha_is_dqn() {
        let data = random_data(400, 2);
        let h = Hyper {
            cql_alpha: 0.0,
            ..small()
        };
        let dqn = train_deep(&data, Algo::Dqn, ScoreKind::CxSofa, &h).unwrap();
        let cql = train_deep(&data, Algo::Cql, ScoreKind::CxSofa, &h).unwrap();
        assert_eq!(dqn.losses, cql.losses);
        let h = Hyper {
            cql_alpha: 0.5,
            ..small()
        };
        assert_ne!(
            dqn.losses,
            train_deep(&data, Algo::Cql, ScoreKind::CxSofa, &h)
                .unwrap()
                .losses
        );
    }

    #[test]
    fn bcq_zero_tau_is_ddqn() {
        let data = random_data(400, 3);
        let h = Hyper {
            tau_bcq: 0.0,
            ..small()
        };
        let ddqn = train_deep(&data, Algo::Ddqn, ScoreKind::CxSofa, &h).unwrap();
        let bcq = train_deep(&data, Algo::Bcq, ScoreKind::CxSofa, &h).unwrap();
        assert_eq!(ddqn.losses, bcq.losses);
    }

    #[test]
    fn terminal_targets_are_rewards() {
        let mut data = random_data(20, 4);
        for t in &mut data {
            t.done = true;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = MlpParams::new(&[6, 8, 8, 5], &mut rng);
        let refs: Vec<_> = data.iter().collect();
        for algo in Algo::DEEP {
            let (ys, _) = td_targets(algo, &refs, &p, &p, None, &Hyper::deep()).unwrap();
            assert!(ys.iter().zip(&data).all(|(y, t)| *y == t.reward));
        }
    }

    #[test]
    fn bcq_restricts_the_argmax() {
        // Behavior only ever picks a1 at this state; the online net prefers a4.
        let s: StateVector = [1.0; 6];
        let tr = Transition {
            state: s,
            action: ActionIndex::new(1).unwrap(),
            reward: 0.0,
            next_state: s,
            done: false,
            died: false,
        };
        let behavior = BehaviorModel::fit(&[tr]);
        let mut p = MlpParams::zeros(&[6, 5]);
        p.layers[0].bias = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let h = Hyper {
            gamma: 1.0,
            ..Hyper::deep()
        };
        let (ys, fb) = td_targets(Algo::Bcq, &[&tr], &p, &p, Some(&behavior), &h).unwrap();
        assert_eq!((ys[0], fb), (1.0, 0));
        let (ys, _) = td_targets(Algo::Ddqn, &[&tr], &p, &p, None, &h).unwrap();
        assert_eq!(ys[0], 4.0);
        let mut far = tr;
        far.next_state = [4.0; 6];
        let (ys, fb) = td_targets(Algo::Bcq, &[&far], &p, &p, Some(&behavior), &h).unwrap();
        assert_eq!((ys[0], fb), (4.0, 1));
    }

    #[test]
    fn gamma_zero_regresses_to_bucket_means() {
        // Two states, per-(s, a) rewards with known means.
        let s0: StateVector = [0.0, 1.0, 0.0, 2.0, 0.0, 4.0];
        let s1: StateVector = [3.0, 0.0, 2.0, 2.0, 1.0, 4.0];
        let mut data = Vec::new();
        for (s, a, rs) in [
            (s0, 0, [1.0, 2.0, 3.0]),
            (s0, 3, [-1.0, -1.0, 0.5]),
            (s1, 2, [0.25, 0.75, 0.5]),
        ] {
            for r in rs {
                data.push(Transition {
                    state: s,
                    action: ActionIndex::new(a).unwrap(),
                    reward: r,
                    next_state: s1,
                    done: false,
                    died: false,
                });
            }
        }
        let h = Hyper {
            gamma: 0.0,
            epochs: 1500,
            checkpoint_every: 1500,
            batch_size: 9,
            lr: 3e-3,
            hidden: 16,
            ..Hyper::deep()
        };
        for algo in Algo::DEEP {
            let h = if algo == Algo::Cql {
                Hyper {
                    cql_alpha: 0.0,
                    ..h
                }
            } else {
                h
            };
            let run = train_deep(&data, algo, ScoreKind::CxSofa, &h).unwrap();
            let QModel::Mlp(p) = &run.checkpoints[0].q else {
                panic!()
            };
            let q0 = p.forward(&s0).unwrap();
            let q1 = p.forward(&s1).unwrap();
            for (got, want) in [(q0[0], 2.0), (q0[3], -0.5), (q1[2], 0.5)] {
                assert!((got - want).abs() < 1e-2, "{algo}: {got} vs {want}");
            }
        }
    }
}

use super::*;
use crate::mdp::{ActionIndex, NUM_ACTIONS};
use crate::scoring::{Vital, VitalSigns};
use crate::trajectory::{Outcome, Step};
use alloc::format;
use alloc::vec;
use proptest::prelude::*;

/// Recommends bin `platelets mod 5`.
struct ByPlatelets;

impl ActionValues for ByPlatelets {
    fn action_values(&self, v: &VitalSigns) -> Result<[f64; NUM_ACTIONS], LearnError> {
        let mut q = [0.0; NUM_ACTIONS];
        q[v.platelets as usize % NUM_ACTIONS] = 1.0;
        Ok(q)
    }
}

/// Episode whose decision steps recommend `rec[t]` while the physician gave `given[t]`.
fn episode(id: usize, rec: &[usize], given: &[usize], died: bool, stay: f64) -> Episode {
    let mut steps: Vec<Step> = rec
        .iter()
        .zip(given)
        .enumerate()
        .map(|(t, (&r, &g))| Step {
            window: t as u32,
            vitals: VitalSigns::healthy().with(Vital::Platelets, 200.0 + r as f64),
            dose: 0.0,
            action: ActionIndex::new(g).unwrap(),
            terminal: false,
            died_at_end: false,
        })
        .collect();
    steps.push(Step {
        window: rec.len() as u32,
        vitals: VitalSigns::healthy(),
        dose: 0.0,
        action: ActionIndex::default(),
        terminal: true,
        died_at_end: died,
    });
    Episode {
        patient_id: format!("p{id}"),
        episode_id: format!("p{id}#0"),
        steps,
        outcome: if died {
            Outcome::Died
        } else {
            Outcome::Survived
        },
        length_of_stay_days: stay,
    }
}

fn matching(id: usize, n: usize, hits: usize) -> Episode {
    let rec = vec![1; n];
    let given: Vec<usize> = (0..n).map(|t| if t < hits { 1 } else { 2 }).collect();
    episode(id, &rec, &given, false, 5.0)
}

#[test]
fn strict_threshold() {
    let eps = [matching(0, 10, 8), matching(1, 10, 7)];
    assert_eq!(match_rate(&eps[0], &ByPlatelets).unwrap(), 0.8);
    let split = match_followers(&eps, &ByPlatelets, 0.7, "m").unwrap();
    assert_eq!(split.followers.len(), 1);
    assert_eq!(split.followers[0].episode_id, "p0#0");
    assert_eq!(split.non_followers[0].episode_id, "p1#0");
}

#[test]
fn perfect_policy_everyone_follows() {
    let eps: Vec<_> = (0..5)
        .map(|i| episode(i, &[0, 3, 4], &[0, 3, 4], i == 2, 3.0 + i as f64))
        .collect();
    let table = outcome_report(&eps, &[("same".into(), ByPlatelets)], 0.99)
        .unwrap()
        .unwrap();
    let row = &table.rows[0];
    assert_eq!(row.n_followers, 5);
    assert_eq!(row.followers, table.baseline.followers);
    assert_eq!(row.improvement_mortality, Some(0.0));
    assert_eq!(row.improvement_stay, Some(0.0));
    assert_eq!(row.p_mortality(), None);
    assert_eq!(table.baseline.mortality(), Some(0.2));
    assert_eq!(table.baseline.stay(), Some(5.0));
}

#[test]
fn improvement_matches_reference_figures() {
    let mor = improvement(0.0183, 0.0074).unwrap();
    assert!((mor * 100.0 - 59.56).abs() < 0.02);
    let stay = improvement(11.11, 9.42).unwrap();
    assert!((stay * 100.0 - 15.21).abs() < 0.02);
    assert_eq!(improvement(0.0, 0.1), None);
}

#[test]
fn row_p_values_and_flags() {
    // Followers survive, non-followers mostly die.
    let mut eps = Vec::new();
    for i in 0..12 {
        let follow = i % 2 == 0;
        let given = if follow { [1, 1] } else { [3, 3] };
        eps.push(episode(
            i,
            &[1, 1],
            &given,
            !follow && i % 3 != 1,
            4.0 + (i % 4) as f64,
        ));
    }
    let table = outcome_report(&eps, &[("m".into(), ByPlatelets)], 0.5)
        .unwrap()
        .unwrap();
    let row = &table.rows[0];
    assert_eq!(row.n_followers, 6);
    assert_eq!(row.mortality(), Some(0.0));
    assert!(row.p_mortality().unwrap() < 0.05);
    assert!(row.significant_mortality());
    assert!(row.mortality_z.is_some());
    let base = table.baseline.mortality().unwrap();
    assert!((row.improvement_mortality.unwrap() - (base - 0.0) / base).abs() < 1e-12);
    assert!(outcome_report::<ByPlatelets>(&[], &[], 0.5)
        .unwrap()
        .is_none());
}

proptest! {
    #[test]
    fn followers_partition_and_shrink(rates in prop::collection::vec(0.0f64..=1.0, 0..60), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let (f_lo, n_lo) = split_by_rates(&rates, lo);
        let (f_hi, n_hi) = split_by_rates(&rates, hi);
        prop_assert_eq!(f_lo.len() + n_lo.len(), rates.len());
        prop_assert_eq!(f_hi.len() + n_hi.len(), rates.len());
        prop_assert!(f_hi.iter().all(|i| f_lo.contains(i)));
    }

    #[test]
    fn welch_swap_symmetry(a in prop::collection::vec(-50.0f64..50.0, 2..20), b in prop::collection::vec(-50.0f64..50.0, 2..20)) {
        let r = welch_t(&a, &b);
        let s = welch_t(&b, &a);
        prop_assume!(!r.degenerate);
        prop_assert_eq!(r.t, -s.t);
        prop_assert_eq!(r.p, s.p);
        let p = r.p.unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let same = welch_t(&a, &a);
        prop_assert_eq!(same.t, 0.0);
        prop_assert!((same.p.unwrap() - 1.0).abs() < 1e-12);
    }
}

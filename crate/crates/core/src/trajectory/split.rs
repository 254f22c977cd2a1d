use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Cohort, TrajectoryError};

/// Patient-level train/validation split. `round(train_frac · patients)`
/// patients go to training; both sides must be non-empty.
pub fn split(
    cohort: &Cohort,
    train_frac: f64,
    seed: u64,
) -> Result<(Cohort, Cohort), TrajectoryError> {
    let mut ids = cohort.patient_ids();
    if ids.len() < 2 {
        return Err(TrajectoryError::Split(format!(
            "need at least 2 patients, found {}",
            ids.len()
        )));
    }
    if !(0.0..=1.0).contains(&train_frac) {
        return Err(TrajectoryError::Split(format!(
            "train fraction {train_frac} outside [0, 1]"
        )));
    }
    let n_train = crate::math::round(train_frac * ids.len() as f64) as usize;
    if n_train == 0 || n_train == ids.len() {
        return Err(TrajectoryError::Split(format!(
            "fraction {train_frac} leaves one side empty"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let train_ids: BTreeSet<&str> = ids[..n_train].iter().copied().collect();
    let (train, validation): (Vec<_>, Vec<_>) = cohort
        .episodes
        .iter()
        .cloned()
        .partition(|e| train_ids.contains(e.patient_id.as_str()));
    let wrap = |episodes| Cohort {
        episodes,
        provenance: cohort.provenance,
        seed: cohort.seed,
    };
    Ok((wrap(train), wrap(validation)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{synth_cohort, SynthParams};

    fn cohort(n: usize) -> Cohort {
        synth_cohort(
            &SynthParams {
                patients: n,
                ..SynthParams::default()
            },
            3,
        )
        .unwrap()
        .cohort
    }

    #[test]
    fn eighty_twenty() {
        let c = cohort(10);
        let (train, val) = split(&c, 0.8, 1).unwrap();
        assert_eq!(train.patient_ids().len(), 8);
        assert_eq!(val.patient_ids().len(), 2);
        let t: BTreeSet<_> = train.patient_ids().into_iter().collect();
        assert!(val.patient_ids().iter().all(|id| !t.contains(id)));
        assert_eq!(split(&c, 0.8, 1).unwrap(), (train, val));
    }

    #[test]
    fn degenerate_splits_fail() {
        assert!(split(&cohort(1), 0.8, 1).is_err());
        assert!(split(&cohort(10), 1.0, 1).is_err());
        assert!(split(&cohort(10), 0.0, 1).is_err());
    }
}

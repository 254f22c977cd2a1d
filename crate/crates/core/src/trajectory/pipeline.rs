//! Raw measurements → 4-hour grid → imputed grid → episodes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Episode, Outcome, Step, TrajectoryError};
use crate::math;
use crate::mdp::bin_action;
use crate::scoring::{Vital, VitalSigns};

pub const WINDOW_MINUTES: f64 = 240.0;

/// Segmentation threshold: 60 windows, i.e. ten days.
pub const DEFAULT_MAX_LEN: usize = 60;

/// Any subset of the twelve vitals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PartialVitals(pub [Option<f64>; 12]);

impl PartialVitals {
    pub fn get(&self, v: Vital) -> Option<f64> {
        self.0[v.index()]
    }

    pub fn set(&mut self, v: Vital, value: Option<f64>) {
        self.0[v.index()] = value;
    }

    pub fn complete(&self) -> Option<VitalSigns> {
        let mut out = [0.0; 12];
        for (slot, v) in out.iter_mut().zip(self.0) {
            *slot = v?;
        }
        Some(VitalSigns::from_array(out))
    }

    /// Later values override earlier ones field by field.
    fn overlay(&mut self, later: &PartialVitals) {
        for (slot, v) in self.0.iter_mut().zip(later.0) {
            if v.is_some() {
                *slot = v;
            }
        }
    }
}

impl From<VitalSigns> for PartialVitals {
    fn from(v: VitalSigns) -> Self {
        PartialVitals(v.to_array().map(Some))
    }
}

/// One timestamped row for a patient. Times are minutes since admission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub patient_id: String,
    pub time_min: f64,
    pub vitals: PartialVitals,
    /// Heparin dose, U/kg/h.
    pub dose: Option<f64>,
    /// Sepsis onset; windows are anchored here. Defaults to admission.
    #[serde(default)]
    pub onset_min: f64,
    pub death_min: Option<f64>,
    pub discharge_min: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Slot {
    pub vitals: PartialVitals,
    pub dose: Option<f64>,
}

/// Per-patient window grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientGrid {
    pub patient_id: String,
    pub slots: Vec<Slot>,
    pub onset_min: f64,
    pub death_min: Option<f64>,
    pub discharge_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// No measurement between onset and discharge/death.
    NoWindows,
    /// Fewer than two windows, so no transition exists.
    TooFewWindows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub patient_id: String,
    pub reason: ExclusionReason,
}

/// Buckets records into `window_minutes` slots per patient. Within a window
/// the last value of each field wins. The grid ends at the last window that
/// holds any measurement.
pub fn windowize(records: &[RawRecord], window_minutes: f64) -> (Vec<PatientGrid>, Vec<Exclusion>) {
    let mut by_patient: BTreeMap<&str, Vec<&RawRecord>> = BTreeMap::new();
    for r in records {
        by_patient.entry(r.patient_id.as_str()).or_default().push(r);
    }
    let mut grids = Vec::new();
    let mut excluded = Vec::new();
    for (pid, mut rows) in by_patient {
        rows.sort_by(|a, b| a.time_min.total_cmp(&b.time_min));
        let first = rows[0];
        let onset = first.onset_min;
        let end = first.death_min.unwrap_or(first.discharge_min);
        let mut slots: Vec<Slot> = Vec::new();
        for r in rows
            .iter()
            .filter(|r| r.time_min >= onset && r.time_min <= end)
        {
            let w = math::floor((r.time_min - onset) / window_minutes) as usize;
            if slots.len() <= w {
                slots.resize(w + 1, Slot::default());
            }
            slots[w].vitals.overlay(&r.vitals);
            if r.dose.is_some() {
                slots[w].dose = r.dose;
            }
        }
        let reason = match slots.len() {
            0 => Some(ExclusionReason::NoWindows),
            1 => Some(ExclusionReason::TooFewWindows),
            _ => None,
        };
        match reason {
            Some(reason) => excluded.push(Exclusion {
                patient_id: pid.into(),
                reason,
            }),
            None => grids.push(PatientGrid {
                patient_id: pid.into(),
                slots,
                onset_min: onset,
                death_min: first.death_min,
                discharge_min: first.discharge_min,
            }),
        }
    }
    (grids, excluded)
}

/// Fills interior gaps of each vital by linear interpolation between the
/// neighbouring observations and trailing gaps by carrying the last
/// observation forward. Leading gaps stay missing. Doses are not imputed.
pub fn impute(mut grid: PatientGrid) -> PatientGrid {
    for v in Vital::ALL {
        let mut last: Option<(usize, f64)> = None;
        for i in 0..grid.slots.len() {
            let Some(x) = grid.slots[i].vitals.get(v) else {
                continue;
            };
            if let Some((j, y)) = last {
                for k in j + 1..i {
                    let frac = (k - j) as f64 / (i - j) as f64;
                    grid.slots[k].vitals.set(v, Some(y + (x - y) * frac));
                }
            }
            last = Some((i, x));
        }
        if let Some((j, y)) = last {
            for slot in &mut grid.slots[j + 1..] {
                slot.vitals.set(v, Some(y));
            }
        }
    }
    grid
}

/// Counts of windows dropped during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssembleReport {
    pub windows_missing_vitals: usize,
    pub windows_missing_dose: usize,
    pub windows_invalid: usize,
    pub short_runs_dropped: usize,
}

impl AssembleReport {
    fn merge(&mut self, o: AssembleReport) {
        self.windows_missing_vitals += o.windows_missing_vitals;
        self.windows_missing_dose += o.windows_missing_dose;
        self.windows_invalid += o.windows_invalid;
        self.short_runs_dropped += o.short_runs_dropped;
    }
}

fn complete_step(slot: &Slot, window: usize, report: &mut AssembleReport) -> Option<Step> {
    let Some(vitals) = slot.vitals.complete() else {
        report.windows_missing_vitals += 1;
        return None;
    };
    let Some(dose) = slot.dose else {
        report.windows_missing_dose += 1;
        return None;
    };
    let action = match (vitals.validate(), bin_action(dose)) {
        (Ok(()), Ok(a)) => a,
        _ => {
            report.windows_invalid += 1;
            return None;
        }
    };
    Some(Step {
        window: window as u32,
        vitals,
        dose,
        action,
        terminal: false,
        died_at_end: false,
    })
}

/// Drops incomplete windows and turns each contiguous run of two or more
/// complete windows into an episode. The death flag lands on the final
/// episode of a patient who has a death timestamp.
pub fn exclude_and_assemble(grids: &[PatientGrid]) -> (Vec<Episode>, AssembleReport) {
    let mut episodes = Vec::new();
    let mut total = AssembleReport::default();
    for g in grids {
        let mut report = AssembleReport::default();
        let mut runs: Vec<Vec<Step>> = Vec::new();
        let mut current: Vec<Step> = Vec::new();
        for (w, slot) in g.slots.iter().enumerate() {
            match complete_step(slot, w, &mut report) {
                Some(step) => current.push(step),
                None if !current.is_empty() => runs.push(core::mem::take(&mut current)),
                None => {}
            }
        }
        if !current.is_empty() {
            runs.push(current);
        }
        let before = runs.len();
        runs.retain(|r| r.len() >= 2);
        report.short_runs_dropped = before - runs.len();

        let died = g.death_min.is_some();
        let n_runs = runs.len();
        for (k, mut steps) in runs.into_iter().enumerate() {
            let last = steps.last_mut().expect("runs have >= 2 steps");
            last.terminal = true;
            last.died_at_end = died && k == n_runs - 1;
            episodes.push(Episode {
                patient_id: g.patient_id.clone(),
                episode_id: format!("{}#{k}", g.patient_id),
                steps,
                outcome: if died {
                    Outcome::Died
                } else {
                    Outcome::Survived
                },
                length_of_stay_days: g.discharge_min / 1440.0,
            });
        }
        total.merge(report);
    }
    (episodes, total)
}

/// Splits an episode into consecutive chunks of at most `max_len` steps. A
/// one-step tail is avoided by shortening the chunk before it (or, when
/// `max_len == 2`, by absorbing it into a 3-step final chunk). Only the final
/// chunk keeps the death flag.
pub fn segment_long(ep: &Episode, max_len: usize) -> Result<Vec<Episode>, TrajectoryError> {
    if max_len < 2 {
        return Err(TrajectoryError::SegmentLength(max_len));
    }
    let n = ep.steps.len();
    if n <= max_len {
        return Ok(alloc::vec![ep.clone()]);
    }
    let mut bounds = Vec::new();
    let mut start = 0;
    while start < n {
        let mut len = max_len.min(n - start);
        if n - start - len == 1 {
            // With max_len == 2 the tail cannot be rebalanced; absorb it.
            if len > 2 {
                len -= 1;
            } else {
                len += 1;
            }
        }
        bounds.push((start, start + len));
        start += len;
    }
    let last = bounds.len() - 1;
    Ok(bounds
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let mut steps = ep.steps[a..b].to_vec();
            for s in &mut steps {
                s.terminal = false;
                s.died_at_end = false;
            }
            let tail = steps.last_mut().expect("chunks are non-empty");
            tail.terminal = true;
            tail.died_at_end = k == last && ep.died_at_end();
            Episode {
                patient_id: ep.patient_id.clone(),
                episode_id: format!("{}.{k}", ep.episode_id),
                steps,
                outcome: ep.outcome,
                length_of_stay_days: ep.length_of_stay_days,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn rec(pid: &str, t: f64, platelets: Option<f64>, dose: Option<f64>) -> RawRecord {
        let mut vitals = PartialVitals::default();
        vitals.set(Vital::Platelets, platelets);
        RawRecord {
            patient_id: pid.to_string(),
            time_min: t,
            vitals,
            dose,
            onset_min: 0.0,
            death_min: None,
            discharge_min: 10_000.0,
        }
    }

    fn full(pid: &str, t: f64, platelets: f64, dose: Option<f64>) -> RawRecord {
        let mut r = rec(pid, t, None, dose);
        r.vitals = VitalSigns::healthy()
            .with(Vital::Platelets, platelets)
            .into();
        r
    }

    #[test]
    fn last_value_in_window_wins() {
        let rows = vec![
            rec("a", 10.0, Some(200.0), Some(1.0)),
            rec("a", 230.0, Some(180.0), None),
            rec("a", 250.0, Some(170.0), Some(2.0)),
        ];
        let (grids, excluded) = windowize(&rows, WINDOW_MINUTES);
        assert!(excluded.is_empty());
        let g = &grids[0];
        assert_eq!(g.slots.len(), 2);
        assert_eq!(g.slots[0].vitals.get(Vital::Platelets), Some(180.0));
        assert_eq!(g.slots[0].dose, Some(1.0));
        assert_eq!(g.slots[1].vitals.get(Vital::Platelets), Some(170.0));
    }

    #[test]
    fn sparse_patients_are_excluded() {
        let mut late = rec("c", 100.0, Some(1.0), None);
        late.onset_min = 500.0;
        let rows = vec![rec("b", 10.0, Some(200.0), Some(1.0)), late];
        let (grids, excluded) = windowize(&rows, WINDOW_MINUTES);
        assert!(grids.is_empty());
        assert_eq!(excluded[0].reason, ExclusionReason::TooFewWindows);
        assert_eq!(excluded[1].reason, ExclusionReason::NoWindows);
    }

    fn grid_of(platelets: &[Option<f64>]) -> PatientGrid {
        PatientGrid {
            patient_id: "p".into(),
            slots: platelets
                .iter()
                .map(|p| {
                    let mut s = Slot::default();
                    s.vitals.set(Vital::Platelets, *p);
                    s
                })
                .collect(),
            onset_min: 0.0,
            death_min: None,
            discharge_min: 1440.0,
        }
    }

    #[test]
    fn interpolation_and_carry_forward() {
        let g = impute(grid_of(&[Some(200.0), None, Some(100.0)]));
        assert_eq!(g.slots[1].vitals.get(Vital::Platelets), Some(150.0));

        let g = impute(grid_of(&[None, None, None, Some(80.0), None, None]));
        assert_eq!(g.slots[4].vitals.get(Vital::Platelets), Some(80.0));
        assert_eq!(g.slots[5].vitals.get(Vital::Platelets), Some(80.0));
        // Never back-filled.
        assert_eq!(g.slots[0].vitals.get(Vital::Platelets), None);
        assert_eq!(g.slots[0].vitals.get(Vital::Gcs), None);
    }

    #[test]
    fn missing_dose_splits_runs() {
        let mut rows: Vec<RawRecord> = (0..10)
            .map(|w| full("p", w as f64 * 240.0 + 1.0, 200.0, Some(1.0)))
            .collect();
        rows[4].dose = None;
        let (grids, _) = windowize(&rows, WINDOW_MINUTES);
        let grids: Vec<_> = grids.into_iter().map(impute).collect();
        let (eps, report) = exclude_and_assemble(&grids);
        assert_eq!(eps.len(), 2);
        assert_eq!(eps[0].steps.len(), 4);
        assert_eq!(eps[1].steps.len(), 5);
        assert_eq!(eps[1].steps[0].window, 5);
        assert_eq!(report.windows_missing_dose, 1);
        for e in &eps {
            e.validate().unwrap();
        }
    }

    #[test]
    fn death_marks_final_episode_and_short_runs_drop() {
        let mut rows: Vec<RawRecord> = (0..6)
            .map(|w| full("p", w as f64 * 240.0, 120.0, Some(2.0)))
            .collect();
        for r in &mut rows {
            r.death_min = Some(2000.0);
            r.discharge_min = 2000.0;
        }
        rows[2].dose = None;
        rows[4].dose = None;
        let (grids, _) = windowize(&rows, WINDOW_MINUTES);
        let (eps, report) = exclude_and_assemble(&grids);
        // Runs: 0-1, 3, 5 → only 0-1 survives.
        assert_eq!(eps.len(), 1);
        assert_eq!(report.short_runs_dropped, 2);
        assert!(eps[0].died_at_end());
        assert_eq!(eps[0].outcome, Outcome::Died);
    }

    fn long_episode(n: usize, died: bool) -> Episode {
        let steps = (0..n)
            .map(|i| Step {
                window: i as u32,
                vitals: VitalSigns::healthy(),
                dose: 0.0,
                action: crate::mdp::ActionIndex::default(),
                terminal: i == n - 1,
                died_at_end: died && i == n - 1,
            })
            .collect();
        Episode {
            patient_id: "p".into(),
            episode_id: "p#0".into(),
            steps,
            outcome: if died {
                Outcome::Died
            } else {
                Outcome::Survived
            },
            length_of_stay_days: 3.0,
        }
    }

    #[test]
    fn segmentation_chunks() {
        let ep = long_episode(50, true);
        let chunks = segment_long(&ep, 20).unwrap();
        assert_eq!(
            chunks.iter().map(|c| c.steps.len()).collect::<Vec<_>>(),
            vec![20, 20, 10]
        );
        assert_eq!(
            chunks.iter().map(|c| c.died_at_end()).collect::<Vec<_>>(),
            vec![false, false, true]
        );
        for c in &chunks {
            c.validate().unwrap();
        }
        assert_eq!(segment_long(&long_episode(20, false), 20).unwrap().len(), 1);
        assert!(segment_long(&ep, 1).is_err());
        let tail = segment_long(&long_episode(41, false), 20).unwrap();
        assert!(tail.iter().all(|c| c.steps.len() >= 2));
    }

    #[test]
    fn segmentation_preserves_steps() {
        for n in 2..80 {
            for max_len in 3..25 {
                let ep = long_episode(n, n % 2 == 0);
                let chunks = segment_long(&ep, max_len).unwrap();
                let windows: Vec<u32> = chunks
                    .iter()
                    .flat_map(|c| c.steps.iter().map(|s| s.window))
                    .collect();
                assert_eq!(windows, (0..n as u32).collect::<Vec<_>>());
                assert!(chunks
                    .iter()
                    .all(|c| c.steps.len() >= 2 && c.steps.len() <= max_len));
            }
        }
    }
}

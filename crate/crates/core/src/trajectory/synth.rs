//! Synthetic cohort generator with a known optimal dosing policy.
//!
//! Each patient carries two latent severities in `[0, 1]`: coagulation
//! (drives platelets) and systemic (drives oxygenation, bilirubin, GCS,
//! pressure and renal markers). Both follow mean-reverting noise with a
//! worsening drift. The dose bin chosen in a window shifts both latents by
//! `-strength · effect`, where `effect = 1 − |a − a*| / 2` peaks at the
//! ground-truth bin `a*` and turns harmful two bins away. Death is a per-step
//! hazard proportional to `exp(slope · (cxSOFA − mid))`. Physicians follow `a*` with a
//! patient-specific adherence and otherwise pick one of the other bins
//! uniformly.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Cohort, Episode, Outcome, Provenance, Step, TrajectoryError};
use crate::math;
use crate::mdp::{bin_action, ActionIndex, NUM_ACTIONS};
use crate::scoring::{cxsofa, ScoreConfig, VitalSigns};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub patients: usize,
    /// Nominal number of windows per stay; recovery or death can end it early.
    pub mean_length: f64,
    /// Scales how much the dose bin moves the latent severities.
    pub dose_response: f64,
    /// Approximate per-patient mortality for an average trajectory.
    pub mortality_rate: f64,
    /// Physician adherence to the ground-truth bin is uniform in this range.
    pub adherence: [f64; 2],
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            patients: 500,
            mean_length: 12.0,
            dose_response: 1.0,
            mortality_rate: 0.2,
            adherence: [0.1, 1.0],
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let bad = |m: &str| Err(TrajectoryError::SynthParams(m.into()));
        if self.patients < 1 {
            return bad("patient count must be >= 1");
        }
        if self.mean_length.is_nan() || self.mean_length < 2.0 {
            return bad("mean length must be >= 2");
        }
        if !self.dose_response.is_finite() || self.dose_response < 0.0 {
            return bad("dose response must be a finite non-negative number");
        }
        if !(0.0..=1.0).contains(&self.mortality_rate) {
            return bad("mortality rate must lie in [0, 1]");
        }
        let [lo, hi] = self.adherence;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return bad("adherence range must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Optimal bin as a function of the platelet count: at or above the first cut
/// a1, then a2, a3, and a4 below the last cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthPolicy {
    pub platelet_cuts: [f64; 3],
}

impl Default for GroundTruthPolicy {
    fn default() -> Self {
        GroundTruthPolicy {
            platelet_cuts: [150.0, 100.0, 50.0],
        }
    }
}

impl GroundTruthPolicy {
    pub fn action(&self, v: &VitalSigns) -> ActionIndex {
        let below = self
            .platelet_cuts
            .iter()
            .filter(|&&c| v.platelets < c)
            .count();
        ActionIndex::new(1 + below).expect("at most 4")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCohort {
    pub cohort: Cohort,
    pub ground_truth: GroundTruthPolicy,
    pub params: SynthParams,
}

const DRIFT: f64 = 0.02;
const COAG_GAIN: f64 = 0.08;
const SYSTEMIC_GAIN: f64 = 0.07;
const LATENT_NOISE: f64 = 0.03;
const HAZARD_SLOPE: f64 = 0.8;
const RECOVERED: f64 = 0.06;

struct Noise {
    unit: Normal<f64>,
}

impl Noise {
    fn sample(&self, rng: &mut ChaCha8Rng, sd: f64) -> f64 {
        sd * self.unit.sample(rng)
    }
}

fn vitals_for(coag: f64, sys: f64, rng: &mut ChaCha8Rng, noise: &Noise) -> VitalSigns {
    let pf = (480.0 - 330.0 * sys + noise.sample(rng, 12.0)).max(40.0);
    let gcs = math::round(15.0 - 9.0 * sys + noise.sample(rng, 0.5)).clamp(3.0, 15.0);
    VitalSigns {
        pf_ratio: pf,
        pf_ratio_vent: pf,
        platelets: (270.0 - 240.0 * coag + noise.sample(rng, 6.0)).max(5.0),
        bilirubin: (8.0 + 50.0 * sys * sys + noise.sample(rng, 1.5)).max(1.0),
        mbp: (88.0 - 25.0 * sys + noise.sample(rng, 3.0)).max(30.0),
        dopamine: 0.0,
        dobutamine: 0.0,
        epinephrine: 0.0,
        norepinephrine: (0.3 * (sys - 0.6)).max(0.0),
        gcs,
        creatinine: (70.0 + 250.0 * sys + noise.sample(rng, 8.0)).max(20.0),
        urine_output: (2200.0 - 1700.0 * sys + noise.sample(rng, 80.0)).max(50.0),
    }
}

fn dose_for(a: ActionIndex, rng: &mut ChaCha8Rng) -> f64 {
    let (lo, hi) = match a.index() {
        0 => return 0.0,
        1 => (0.2, 1.38),
        2 => (1.39, 1.88),
        3 => (1.89, 3.5),
        _ => (3.51, 6.0),
    };
    // Round to 0.01 U/kg/h and keep inside the bin.
    let d = math::round(rng.random_range(lo..hi) * 100.0) / 100.0;
    d.clamp(lo, hi)
}

fn physician_action(best: ActionIndex, adherence: f64, rng: &mut ChaCha8Rng) -> ActionIndex {
    if rng.random::<f64>() < adherence {
        return best;
    }
    let k = rng.random_range(0..NUM_ACTIONS - 1);
    let i = if k >= best.index() { k + 1 } else { k };
    ActionIndex::new(i).expect("in range")
}

/// Generates a deterministic cohort for `seed`.
pub fn synth_cohort(params: &SynthParams, seed: u64) -> Result<SyntheticCohort, TrajectoryError> {
    params.validate()?;
    let policy = GroundTruthPolicy::default();
    let cfg = ScoreConfig::cxsofa_paper();
    let noise = Noise {
        unit: Normal::new(0.0, 1.0).expect("unit normal"),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Reference severity for the hazard: the noiseless mid-range patient.
    let mid = {
        let mut quiet = ChaCha8Rng::seed_from_u64(0);
        let zero = Noise {
            unit: Normal::new(0.0, 0.0).expect("degenerate normal"),
        };
        cxsofa(&vitals_for(0.5, 0.5, &mut quiet, &zero), &cfg).expect("valid vitals")
    };
    // Per-step hazard of the reference patient; the realized mortality also
    // depends on how the cohort's severity evolves, so it is approximate.
    let base_hazard = 1.0
        - math::exp(math::ln(1.0 - params.mortality_rate.min(1.0 - 1e-12)) / params.mean_length);

    let mut episodes = Vec::with_capacity(params.patients);
    for p in 0..params.patients {
        let mut coag = rng.random_range(0.1..1.0);
        let mut sys = rng.random_range(0.1..0.8);
        let adherence = rng.random_range(params.adherence[0]..=params.adherence[1]);
        let nominal =
            (math::round(params.mean_length * rng.random_range(0.5..1.5)) as usize).max(2);
        let pre_days = rng.random_range(1.0..4.0);

        let mut steps: Vec<Step> = Vec::new();
        let mut died = false;
        let mut vitals = vitals_for(coag, sys, &mut rng, &noise);
        loop {
            let best = policy.action(&vitals);
            let action = physician_action(best, adherence, &mut rng);
            let dose = dose_for(action, &mut rng);
            debug_assert_eq!(bin_action(dose).ok(), Some(action));
            steps.push(Step {
                window: steps.len() as u32,
                vitals,
                dose,
                action,
                terminal: false,
                died_at_end: false,
            });
            if steps.len() >= nominal || died {
                break;
            }
            let effect = 1.0 - 0.5 * action.distance(best) as f64;
            let push = params.dose_response * effect;
            coag = (coag + DRIFT - COAG_GAIN * push + noise.sample(&mut rng, LATENT_NOISE))
                .clamp(0.0, 1.0);
            sys = (sys + DRIFT - SYSTEMIC_GAIN * push + noise.sample(&mut rng, LATENT_NOISE))
                .clamp(0.0, 1.0);
            vitals = vitals_for(coag, sys, &mut rng, &noise);

            let severity = cxsofa(&vitals, &cfg).expect("generated vitals are valid");
            let hazard = (base_hazard * math::exp(HAZARD_SLOPE * (severity - mid))).min(1.0);
            died = rng.random::<f64>() < hazard;
            if !died && steps.len() >= 2 && coag.max(sys) < RECOVERED {
                // Recovered: the next window is the last one before discharge.
                steps.push(Step {
                    window: steps.len() as u32,
                    vitals,
                    dose: 0.0,
                    action: ActionIndex::default(),
                    terminal: false,
                    died_at_end: false,
                });
                break;
            }
        }
        let n = steps.len();
        let last = steps.last_mut().expect("at least one step");
        last.terminal = true;
        last.died_at_end = died;
        debug_assert!(n >= 2);
        let id = format!("synth-{p:04}");
        episodes.push(Episode {
            patient_id: id.clone(),
            episode_id: format!("{id}#0"),
            steps,
            outcome: if died {
                Outcome::Died
            } else {
                Outcome::Survived
            },
            length_of_stay_days: pre_days + n as f64 * 4.0 / 24.0,
        });
    }
    Ok(SyntheticCohort {
        cohort: Cohort {
            episodes,
            provenance: Provenance::Synthetic,
            seed: Some(seed),
        },
        ground_truth: policy,
        params: *params,
    })
}

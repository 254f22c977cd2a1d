use serde::{Deserialize, Serialize};

use super::ScoringError;

/// Names of the twelve physiological inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vital {
    /// PaO2/FiO2 ratio without ventilation (mmHg).
    PfRatio,
    /// PaO2/FiO2 ratio under mechanical ventilation (mmHg).
    PfRatioVent,
    /// Platelets, 10³/µL.
    Platelets,
    /// Bilirubin, µmol/L.
    Bilirubin,
    /// Mean blood pressure, mmHg.
    Mbp,
    /// µg/kg/min.
    Dopamine,
    /// µg/kg/min.
    Dobutamine,
    /// µg/kg/min.
    Epinephrine,
    /// µg/kg/min.
    Norepinephrine,
    /// Glasgow Coma Scale, 3..=15.
    Gcs,
    /// Creatinine, µmol/L.
    Creatinine,
    /// Urine output, mL/day.
    UrineOutput,
}

impl Vital {
    pub const ALL: [Vital; 12] = [
        Vital::PfRatio,
        Vital::PfRatioVent,
        Vital::Platelets,
        Vital::Bilirubin,
        Vital::Mbp,
        Vital::Dopamine,
        Vital::Dobutamine,
        Vital::Epinephrine,
        Vital::Norepinephrine,
        Vital::Gcs,
        Vital::Creatinine,
        Vital::UrineOutput,
    ];

    /// Position in [`VitalSigns::to_array`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Vital::PfRatio => "pf_ratio",
            Vital::PfRatioVent => "pf_ratio_vent",
            Vital::Platelets => "platelets",
            Vital::Bilirubin => "bilirubin",
            Vital::Mbp => "mbp",
            Vital::Dopamine => "dopamine",
            Vital::Dobutamine => "dobutamine",
            Vital::Epinephrine => "epinephrine",
            Vital::Norepinephrine => "norepinephrine",
            Vital::Gcs => "gcs",
            Vital::Creatinine => "creatinine",
            Vital::UrineOutput => "urine_output",
        }
    }

    pub fn from_name(name: &str) -> Option<Vital> {
        Vital::ALL.into_iter().find(|v| v.name() == name)
    }
}

impl core::fmt::Display for Vital {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// A complete set of the twelve scoring inputs at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalSigns {
    pub pf_ratio: f64,
    pub pf_ratio_vent: f64,
    pub platelets: f64,
    pub bilirubin: f64,
    pub mbp: f64,
    pub dopamine: f64,
    pub dobutamine: f64,
    pub epinephrine: f64,
    pub norepinephrine: f64,
    pub gcs: f64,
    pub creatinine: f64,
    pub urine_output: f64,
}

impl VitalSigns {
    /// A patient with no organ dysfunction.
    pub fn healthy() -> Self {
        VitalSigns {
            pf_ratio: 500.0,
            pf_ratio_vent: 500.0,
            platelets: 300.0,
            bilirubin: 5.0,
            mbp: 90.0,
            dopamine: 0.0,
            dobutamine: 0.0,
            epinephrine: 0.0,
            norepinephrine: 0.0,
            gcs: 15.0,
            creatinine: 60.0,
            urine_output: 2500.0,
        }
    }

    pub fn get(&self, v: Vital) -> f64 {
        self.to_array()[v.index()]
    }

    pub fn set(&mut self, v: Vital, value: f64) {
        let mut a = self.to_array();
        a[v.index()] = value;
        *self = Self::from_array(a);
    }

    pub fn with(mut self, v: Vital, value: f64) -> Self {
        self.set(v, value);
        self
    }

    pub fn to_array(&self) -> [f64; 12] {
        [
            self.pf_ratio,
            self.pf_ratio_vent,
            self.platelets,
            self.bilirubin,
            self.mbp,
            self.dopamine,
            self.dobutamine,
            self.epinephrine,
            self.norepinephrine,
            self.gcs,
            self.creatinine,
            self.urine_output,
        ]
    }

    pub fn from_array(a: [f64; 12]) -> Self {
        VitalSigns {
            pf_ratio: a[0],
            pf_ratio_vent: a[1],
            platelets: a[2],
            bilirubin: a[3],
            mbp: a[4],
            dopamine: a[5],
            dobutamine: a[6],
            epinephrine: a[7],
            norepinephrine: a[8],
            gcs: a[9],
            creatinine: a[10],
            urine_output: a[11],
        }
    }

    /// All fields finite and non-negative; GCS within 3..=15.
    pub fn validate(&self) -> Result<(), ScoringError> {
        for v in Vital::ALL {
            let x = self.get(v);
            if !x.is_finite() {
                return Err(ScoringError::Missing(v));
            }
            if x < 0.0 {
                return Err(ScoringError::OutOfRange { field: v, value: x });
            }
        }
        if !(3.0..=15.0).contains(&self.gcs) {
            return Err(ScoringError::OutOfRange {
                field: Vital::Gcs,
                value: self.gcs,
            });
        }
        Ok(())
    }
}

use super::{ComponentScores, ScoringError, VitalSigns};

fn steps_below(x: f64, cuts: [f64; 4]) -> u8 {
    cuts.iter().filter(|&&c| x < c).count() as u8
}

fn respiratory(v: &VitalSigns) -> u8 {
    let plain = match v.pf_ratio {
        x if x < 300.0 => 2,
        x if x < 400.0 => 1,
        _ => 0,
    };
    // Scores 3 and 4 require ventilatory support.
    let vent = steps_below(v.pf_ratio_vent, [400.0, 300.0, 200.0, 100.0]);
    plain.max(vent)
}

fn liver(bilirubin: f64) -> u8 {
    match bilirubin {
        x if x > 204.0 => 4,
        x if x > 101.0 => 3,
        x if x > 32.0 => 2,
        x if x >= 20.0 => 1,
        _ => 0,
    }
}

fn circulatory(v: &VitalSigns) -> u8 {
    if v.dopamine > 15.0 || v.epinephrine > 0.1 || v.norepinephrine > 0.1 {
        4
    } else if v.dopamine > 5.0 || v.epinephrine > 0.0 || v.norepinephrine > 0.0 {
        3
    } else if v.dopamine > 0.0 || v.dobutamine > 0.0 {
        2
    } else if v.mbp < 70.0 {
        1
    } else {
        0
    }
}

fn nervous(gcs: f64) -> u8 {
    steps_below(gcs, [15.0, 13.0, 10.0, 6.0])
}

fn renal(v: &VitalSigns) -> u8 {
    let creat = match v.creatinine {
        x if x > 440.0 => 4,
        x if x > 299.0 => 3,
        x if x > 170.0 => 2,
        x if x > 110.0 => 1,
        _ => 0,
    };
    let uo = match v.urine_output {
        x if x < 200.0 => 4,
        x if x < 500.0 => 3,
        _ => 0,
    };
    creat.max(uo)
}

/// Integer SOFA sub-scores.
pub fn sofa_components(v: &VitalSigns) -> Result<[u8; 6], ScoringError> {
    v.validate()?;
    Ok([
        respiratory(v),
        steps_below(v.platelets, [150.0, 100.0, 50.0, 20.0]),
        liver(v.bilirubin),
        circulatory(v),
        nervous(v.gcs),
        renal(v),
    ])
}

/// Discrete SOFA total in `0..=24`.
pub fn sofa_discrete(v: &VitalSigns) -> Result<u8, ScoringError> {
    Ok(sofa_components(v)?.iter().sum())
}

impl From<[u8; 6]> for ComponentScores {
    fn from(c: [u8; 6]) -> Self {
        ComponentScores(c.map(f64::from))
    }
}

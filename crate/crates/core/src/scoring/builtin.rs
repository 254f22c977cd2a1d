use alloc::vec;

use super::{Cmp, Component, ScoreConfig, Term, Vital};

use Vital::*;

impl ScoreConfig {
    /// Standard 1996 SOFA step functions expressed as threshold terms.
    pub fn sofa_discrete() -> ScoreConfig {
        let lt = |var, value, score| Term::threshold(var, Cmp::Lt, value, score);
        let gt = |var, value, score| Term::threshold(var, Cmp::Gt, value, score);
        let ge = |var, value, score| Term::threshold(var, Cmp::Ge, value, score);
        ScoreConfig {
            name: "sofa-discrete".into(),
            components: vec![
                Component::new(
                    "respiratory",
                    &[PfRatio, PfRatioVent],
                    vec![Term::max([
                        lt(PfRatio, 400.0, 1.0),
                        lt(PfRatio, 300.0, 2.0),
                        lt(PfRatioVent, 400.0, 1.0),
                        lt(PfRatioVent, 300.0, 2.0),
                        lt(PfRatioVent, 200.0, 3.0),
                        lt(PfRatioVent, 100.0, 4.0),
                    ])],
                ),
                Component::new(
                    "coagulation",
                    &[Platelets],
                    vec![Term::max([
                        lt(Platelets, 150.0, 1.0),
                        lt(Platelets, 100.0, 2.0),
                        lt(Platelets, 50.0, 3.0),
                        lt(Platelets, 20.0, 4.0),
                    ])],
                ),
                Component::new(
                    "liver",
                    &[Bilirubin],
                    vec![Term::max([
                        ge(Bilirubin, 20.0, 1.0),
                        gt(Bilirubin, 32.0, 2.0),
                        gt(Bilirubin, 101.0, 3.0),
                        gt(Bilirubin, 204.0, 4.0),
                    ])],
                ),
                Component::new(
                    "circulatory",
                    &[Mbp, Dopamine, Dobutamine, Epinephrine, Norepinephrine],
                    vec![Term::max([
                        lt(Mbp, 70.0, 1.0),
                        gt(Dopamine, 0.0, 2.0),
                        gt(Dobutamine, 0.0, 2.0),
                        gt(Dopamine, 5.0, 3.0),
                        gt(Epinephrine, 0.0, 3.0),
                        gt(Norepinephrine, 0.0, 3.0),
                        gt(Dopamine, 15.0, 4.0),
                        gt(Epinephrine, 0.1, 4.0),
                        gt(Norepinephrine, 0.1, 4.0),
                    ])],
                ),
                Component::new(
                    "nervous",
                    &[Gcs],
                    vec![Term::max([
                        lt(Gcs, 15.0, 1.0),
                        lt(Gcs, 13.0, 2.0),
                        lt(Gcs, 10.0, 3.0),
                        lt(Gcs, 6.0, 4.0),
                    ])],
                ),
                Component::new(
                    "renal",
                    &[Creatinine, UrineOutput],
                    vec![Term::max([
                        gt(Creatinine, 110.0, 1.0),
                        gt(Creatinine, 170.0, 2.0),
                        gt(Creatinine, 299.0, 3.0),
                        gt(Creatinine, 440.0, 4.0),
                        lt(UrineOutput, 500.0, 3.0),
                        lt(UrineOutput, 200.0, 4.0),
                    ])],
                ),
            ],
        }
    }

    /// The published polynomial fits, transcribed term by term.
    ///
    /// The circulatory and renal entries reproduce the reference expressions
    /// verbatim even though they do not hit the SOFA anchors (the MBP term is
    /// never positive, the dopamine fit is 2 at zero dose and the urine-output
    /// branch saturates at 4). Supply a corrected file to change them.
    pub fn cxsofa_paper() -> ScoreConfig {
        ScoreConfig {
            name: "cxsofa-paper".into(),
            components: vec![
                Component::new(
                    "respiratory",
                    &[PfRatio, PfRatioVent],
                    vec![Term::max([
                        Term::constant(0.0),
                        Term::poly(PfRatio, &[4.0, -0.01]),
                        Term::poly(PfRatioVent, &[4.0, -0.01]),
                    ])],
                ),
                Component::new(
                    "coagulation",
                    &[Platelets],
                    vec![Term::max([
                        Term::constant(0.0),
                        Term::poly(Platelets, &[4.0, -0.0573, 4.075e-4, -1.367e-6]),
                    ])],
                ),
                Component::new(
                    "liver",
                    &[Bilirubin],
                    vec![Term::min([
                        Term::constant(4.0),
                        Term::poly(Bilirubin, &[9.831e-3, 0.0, 2.685e-3, -3.613e-5, 1.137e-7]),
                    ])],
                ),
                Component::new(
                    "circulatory",
                    &[Mbp, Dopamine, Dobutamine, Epinephrine, Norepinephrine],
                    vec![Term::max([
                        Term::max([Term::constant(0.0), Term::poly(Mbp, &[0.0, -0.2])]),
                        Term::min([
                            Term::constant(4.0),
                            Term::sum([
                                Term::poly(Dopamine, &[2.0, 0.208, -3.365e-4]),
                                Term::poly(Dopamine, &[0.0, 0.0, -6.254e-5]),
                            ]),
                        ]),
                        Term::gate(Dobutamine, 2.0),
                        Term::min([
                            Term::gate(Epinephrine, 1.0),
                            Term::poly(Epinephrine, &[3.0, 10.0]),
                        ]),
                        Term::min([
                            Term::gate(Norepinephrine, 1.0),
                            Term::poly(Norepinephrine, &[3.0, 10.0]),
                        ]),
                    ])],
                ),
                Component::new(
                    "nervous",
                    &[Gcs],
                    vec![Term::poly(
                        Gcs,
                        &[4.0, -2.363e-2, -4.175e-2, 3.797e-3, -1.404e-4],
                    )],
                ),
                Component::new(
                    "renal",
                    &[Creatinine, UrineOutput],
                    vec![Term::max([
                        Term::min([
                            Term::constant(4.0),
                            Term::max([
                                Term::constant(0.0),
                                Term::poly(
                                    Creatinine,
                                    &[0.0, -7.181e-3, 2.336e-4, -48.889e-7, 1.007e-9],
                                ),
                            ]),
                        ]),
                        Term::min([
                            Term::constant(4.0),
                            Term::sum([
                                Term::max([
                                    Term::constant(0.0),
                                    Term::poly(UrineOutput, &[0.0, 0.0, 3.811e-6, 2.015e-8]),
                                ]),
                                Term::poly(UrineOutput, &[4.696, -8.523e-3]),
                            ]),
                        ]),
                    ])],
                ),
            ],
        }
    }
}

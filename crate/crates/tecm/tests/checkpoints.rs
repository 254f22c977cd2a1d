use tecm::config::{ModelSpec, RunConfig};
use tecm::formats::{read_checkpoint_dir, write_checkpoint};
use tecm::pipeline::train_model;
use tecm_core::learners::{ActionValues, Algo, QFunction};
use tecm_core::mdp::Encoder;
use tecm_core::scoring::ScoreConfig;
use tecm_core::trajectory::{synth_cohort, SynthParams};
use tecm_core::ScoreKind;

#[test]
fn reloaded_checkpoints_give_identical_values() {
    let mut cfg = RunConfig::default();
    cfg.deep.epochs = 4;
    cfg.deep.checkpoint_every = 2;
    cfg.deep.batch_size = 64;
    cfg.tabular.epochs = 3;
    let params = SynthParams {
        patients: 40,
        ..SynthParams::default()
    };
    let synth = synth_cohort(&params, 9).unwrap();
    let score = ScoreConfig::cxsofa_paper();
    for (algo, reward) in [(Algo::Bcq, ScoreKind::CxSofa), (Algo::Ql, ScoreKind::Sofa)] {
        let m = ModelSpec::new(algo, reward).unwrap();
        let trained = train_model(&cfg, &score, m, &synth.cohort.episodes).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for cp in &trained.checkpoints {
            write_checkpoint(dir.path(), cp).unwrap();
        }
        let back = read_checkpoint_dir(dir.path()).unwrap();
        assert_eq!(back, trained.checkpoints);

        let enc = Encoder::new(reward, score.clone());
        for (a, b) in trained.checkpoints.iter().zip(&back) {
            let qa = QFunction::new(a.q.clone(), enc.clone());
            let qb = QFunction::new(b.q.clone(), enc.clone());
            for ep in &synth.cohort.episodes {
                for s in &ep.steps {
                    let va = qa.action_values(&s.vitals).unwrap().map(f64::to_bits);
                    let vb = qb.action_values(&s.vitals).unwrap().map(f64::to_bits);
                    assert_eq!(va, vb);
                    assert_eq!(qa.best(&s.vitals).unwrap(), qb.best(&s.vitals).unwrap());
                }
            }
        }
    }
}

#[test]
fn training_is_deterministic_per_seed() {
    let mut cfg = RunConfig::default();
    cfg.deep.epochs = 2;
    cfg.deep.checkpoint_every = 2;
    let synth = synth_cohort(
        &SynthParams {
            patients: 30,
            ..SynthParams::default()
        },
        1,
    )
    .unwrap();
    let score = ScoreConfig::cxsofa_paper();
    let m = ModelSpec::new(Algo::Dqn, ScoreKind::CxSofa).unwrap();
    let a = train_model(&cfg, &score, m, &synth.cohort.episodes).unwrap();
    let b = train_model(&cfg, &score, m, &synth.cohort.episodes).unwrap();
    assert_eq!(a, b);
    cfg.deep.seed = 1;
    let c = train_model(&cfg, &score, m, &synth.cohort.episodes).unwrap();
    assert_ne!(a.losses, c.losses);
}

//! The pipeline stages behind each subcommand. Every stage writes into its
//! own directory together with a manifest.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, Context};
use log::info;
use serde::{Deserialize, Serialize};
use tecm_core::assess::{
    assess_checkpoint, classify_episodes, compare, select_reports, AssessmentReport, Selection,
    SelectionConfig, Winner,
};
use tecm_core::learners::{train_deep, train_ql, Algo, Checkpoint, QFunction};
use tecm_core::mdp::{build_tabular, build_vector, Encoder};
use tecm_core::outcomes::{
    baseline_row, match_rate, outcome_row, split_with_rates, OutcomeRow, OutcomeTable,
};
use tecm_core::scoring::ScoreConfig;
use tecm_core::trajectory::{split, synth_cohort, Cohort, Episode};

use crate::config::{EvalSplit, ModelSpec, RunConfig};
use crate::error::{fail, Classify, CliResult, ErrorKind};
use crate::formats::{
    checkpoint_file_name, ingest_records, load_score_config, read_checkpoint, read_checkpoint_dir,
    read_cohort, read_raw_csv, write_checkpoint, write_cohort, write_csv, write_json, DoseUnits,
};
use crate::manifest::{up_to_date, Manifest};

/// Directory layout under the output root.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn cohort(&self) -> PathBuf {
        self.data_dir().join("cohort.jsonl")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn model_dir(&self, m: ModelSpec) -> PathBuf {
        self.models_dir().join(m.label())
    }

    pub fn assess_dir(&self) -> PathBuf {
        self.root.join("assess")
    }

    pub fn outcomes_dir(&self) -> PathBuf {
        self.root.join("outcomes")
    }
}

/// What a stage did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Ran,
    /// A matching manifest was found and `--force` was not given.
    UpToDate,
}

fn tau_tag(tau: f64) -> String {
    format!("{:.2}", tau)
}

fn fmt_f(x: f64) -> String {
    if x.is_infinite() && x > 0.0 {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

// ---------------------------------------------------------------- data

/// Adds the score configuration file, when one is used, as an input.
fn with_score_file(m: Manifest, cfg: &RunConfig) -> CliResult<Manifest> {
    match &cfg.score_config {
        Some(p) if p.is_file() => m.input(p),
        _ => Ok(m),
    }
}

pub fn generate(cfg: &RunConfig, layout: &Layout, force: bool) -> CliResult<Status> {
    cfg.validate()?;
    let dir = layout.data_dir();
    let mut manifest = Manifest::new("generate", cfg)?.scoped(&(cfg.seed, &cfg.synth))?;
    manifest.outputs = vec!["cohort.jsonl".into()];
    if !force && up_to_date(&dir, &manifest) {
        info!("{} is up to date", dir.display());
        return Ok(Status::UpToDate);
    }
    let synth = synth_cohort(&cfg.synth, cfg.seed).validation()?;
    write_cohort(&layout.cohort(), &synth.cohort, Some(synth.ground_truth)).data()?;
    manifest.write(&dir)?;
    info!(
        "generated {} episodes ({} deaths) into {}",
        synth.cohort.episodes.len(),
        synth.cohort.episodes.iter().filter(|e| e.died()).count(),
        layout.cohort().display()
    );
    Ok(Status::Ran)
}

pub fn ingest(
    cfg: &RunConfig,
    csv: &Path,
    units: DoseUnits,
    layout: &Layout,
    force: bool,
) -> CliResult<Status> {
    cfg.validate()?;
    let dir = layout.data_dir();
    let mut manifest = Manifest::new("ingest", cfg)?
        .scoped(&cfg.max_episode_len)?
        .setting("dose_units", format!("{units:?}"))
        .input(csv)?;
    manifest.outputs = vec!["cohort.jsonl".into(), "ingest_report.json".into()];
    if !force && up_to_date(&dir, &manifest) {
        info!("{} is up to date", dir.display());
        return Ok(Status::UpToDate);
    }
    let records = read_raw_csv(csv, units)?;
    let (cohort, report) = ingest_records(&records, cfg.max_episode_len)?;
    write_cohort(&layout.cohort(), &cohort, None).data()?;
    write_json(&dir.join("ingest_report.json"), &report).data()?;
    manifest.write(&dir)?;
    info!(
        "ingested {} rows from {} patients into {} episodes ({} patients excluded)",
        report.rows,
        report.patients,
        report.episodes,
        report.exclusions.len()
    );
    Ok(Status::Ran)
}

/// Training and evaluation episodes per the configured split.
pub fn split_cohort(cfg: &RunConfig, cohort: &Cohort) -> CliResult<(Vec<Episode>, Vec<Episode>)> {
    if cfg.train_frac >= 1.0 {
        return Ok((cohort.episodes.clone(), cohort.episodes.clone()));
    }
    let (train, val) = split(cohort, cfg.train_frac, cfg.seed).data()?;
    let eval = match cfg.evaluate_on {
        EvalSplit::Validation => val.episodes,
        EvalSplit::All => cohort.episodes.clone(),
    };
    Ok((train.episodes, eval))
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: ModelSpec,
    pub checkpoints: Vec<Checkpoint>,
    pub losses: Vec<f64>,
}

/// Trains one model on the given episodes.
pub fn train_model(
    cfg: &RunConfig,
    score_cfg: &ScoreConfig,
    m: ModelSpec,
    episodes: &[Episode],
) -> CliResult<TrainedModel> {
    let spec = cfg.reward_spec(m.reward);
    let h = cfg.hyper_for(m);
    if m.algo == Algo::Ql {
        let tr = build_tabular(episodes, score_cfg, &spec).data()?;
        let checkpoints = train_ql(&tr, m.reward, &h).data()?;
        return Ok(TrainedModel {
            model: m,
            checkpoints,
            losses: Vec::new(),
        });
    }
    let tr = build_vector(episodes, score_cfg, &spec).data()?;
    let run = train_deep(&tr, m.algo, m.reward, &h).data()?;
    Ok(TrainedModel {
        model: m,
        checkpoints: run.checkpoints,
        losses: run.losses,
    })
}

fn write_model(dir: &Path, t: &TrainedModel, mut manifest: Manifest) -> CliResult<()> {
    if dir.exists() {
        // Checkpoint files are write-once per run; clear stale ones first.
        std::fs::remove_dir_all(dir)
            .with_context(|| format!("clearing {}", dir.display()))
            .data()?;
    }
    for cp in &t.checkpoints {
        write_checkpoint(dir, cp).data()?;
        manifest.outputs.push(checkpoint_file_name(cp.epoch));
    }
    if !t.losses.is_empty() {
        let rows: Vec<Vec<String>> = t
            .losses
            .iter()
            .enumerate()
            .map(|(i, l)| vec![(i + 1).to_string(), fmt_f(*l)])
            .collect();
        write_csv(&dir.join("losses.csv"), &["step", "loss"], &rows).data()?;
        manifest.outputs.push("losses.csv".into());
    }
    manifest.write(dir)
}

/// Trains each requested model into its own directory, `jobs` at a time.
pub fn train(
    cfg: &RunConfig,
    cohort_path: &Path,
    models: &[ModelSpec],
    layout: &Layout,
    jobs: usize,
    force: bool,
) -> CliResult<Vec<(ModelSpec, Status)>> {
    cfg.validate()?;
    let score_cfg = load_score_config(cfg.score_config.as_deref())?;
    let cohort = read_cohort(cohort_path)?.cohort;
    let (train_eps, _) = split_cohort(cfg, &cohort)?;

    let mut pending = Vec::new();
    let mut statuses = Vec::new();
    for &m in models {
        let relevant = (
            cfg.seed,
            cfg.train_frac,
            &cfg.score_config,
            cfg.death_penalty,
            cfg.hyper_for(m),
        );
        let manifest = with_score_file(Manifest::new("train", cfg)?.scoped(&relevant)?, cfg)?
            .setting("model", m)
            .setting(
                "hyper",
                serde_json::to_string(&cfg.hyper_for(m)).internal()?,
            )
            .input(cohort_path)?;
        let dir = layout.model_dir(m);
        let mut planned = manifest.clone();
        planned.outputs = expected_outputs(cfg, m);
        if !force && up_to_date(&dir, &planned) {
            info!("{m}: up to date");
            statuses.push((m, Status::UpToDate));
        } else {
            pending.push((m, manifest));
            statuses.push((m, Status::Ran));
        }
    }

    let next = AtomicUsize::new(0);
    let failures: Mutex<Vec<crate::error::CliError>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(pending.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((m, manifest)) = pending.get(i) else {
                    break;
                };
                info!("training {m} on {} episodes", train_eps.len());
                let result = train_model(cfg, &score_cfg, *m, &train_eps)
                    .and_then(|t| write_model(&layout.model_dir(*m), &t, manifest.clone()));
                if let Err(e) = result {
                    failures
                        .lock()
                        .expect("no panics while holding the lock")
                        .push(e);
                }
            });
        }
    });
    if let Some(e) = failures
        .into_inner()
        .expect("threads joined")
        .into_iter()
        .next()
    {
        return Err(e);
    }
    Ok(statuses)
}

fn expected_outputs(cfg: &RunConfig, m: ModelSpec) -> Vec<String> {
    let h = cfg.hyper_for(m);
    let mut v: Vec<String> = (1..=h.epochs)
        .filter(|e| e % h.checkpoint_every == 0 || *e == h.epochs)
        .map(checkpoint_file_name)
        .collect();
    if m.algo.is_deep() {
        v.push("losses.csv".into());
    }
    v
}

// ---------------------------------------------------------------- assess

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelection {
    pub model: ModelSpec,
    pub checkpoint_dir: PathBuf,
    pub best_epoch: u32,
    pub report: AssessmentReport,
    /// Number of checkpoints evaluated before η-termination.
    pub evaluated: usize,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessSummary {
    pub tau: f64,
    pub eta: u32,
    pub selections: Vec<ModelSelection>,
    /// Overall winner under the pairwise comparator.
    pub winner: ModelSpec,
}

/// The model spec recorded in a checkpoint directory.
fn model_of(cps: &[Checkpoint]) -> CliResult<ModelSpec> {
    let first = &cps[0];
    if cps
        .iter()
        .any(|c| c.algo != first.algo || c.reward != first.reward)
    {
        return fail(ErrorKind::Data, "checkpoint directory mixes models");
    }
    ModelSpec::new(first.algo, first.reward)
}

fn encoder_for(m: ModelSpec, score_cfg: &ScoreConfig) -> Encoder {
    Encoder::new(m.reward, score_cfg.clone())
}

/// Reports for every checkpoint, then η-selection over them in epoch order.
pub fn select_model(
    cps: &[Checkpoint],
    eval: &[Episode],
    m: ModelSpec,
    cfg: &RunConfig,
    score_cfg: &ScoreConfig,
    sel: &SelectionConfig,
) -> CliResult<(Vec<AssessmentReport>, Selection)> {
    sel.validate().validation()?;
    let part_enc = Encoder::new(cfg.partition_score, score_cfg.clone());
    let partition = classify_episodes(
        eval,
        &part_enc,
        &cfg.reward_spec(cfg.partition_score),
        sel.tau,
    )
    .data()?;
    let enc = encoder_for(m, score_cfg);
    let all = cps
        .iter()
        .map(|cp| assess_checkpoint(cp, &partition, &enc, sel.pool_tau()))
        .collect::<Result<Vec<_>, _>>()
        .data()?;
    let selection = select_reports(
        all.iter().cloned().map(Ok::<_, ()>),
        sel.eta,
        sel.preference,
    )
    .map_err(|()| anyhow!("unreachable"))
    .internal()?
    .ok_or_else(|| anyhow!("no checkpoints"))
    .data()?;
    Ok((all, selection))
}

fn winner_of(selections: &[ModelSelection], sel: &SelectionConfig) -> ModelSpec {
    let mut best = &selections[0];
    for s in &selections[1..] {
        if compare(&best.report, &s.report, sel.preference) == Winner::Second {
            best = s;
        }
    }
    best.model
}

const METRIC_HEADER: [&str; 8] = ["og", "ob", "wg", "wb", "sigma", "mu", "o_gap", "w_gap"];

fn metric_cells(r: &AssessmentReport) -> Vec<String> {
    let t = &r.tecm;
    [
        t.og,
        t.ob,
        t.wg,
        t.wb,
        r.sigma.value,
        r.mu,
        r.o_gap,
        r.w_gap,
    ]
    .iter()
    .map(|x| fmt_f(*x))
    .collect()
}

pub fn assess(
    cfg: &RunConfig,
    cohort_path: &Path,
    checkpoint_dirs: &[PathBuf],
    layout: &Layout,
    force: bool,
) -> CliResult<(AssessSummary, Status)> {
    cfg.validate()?;
    if checkpoint_dirs.is_empty() {
        return fail(ErrorKind::Validation, "no checkpoint directories given");
    }
    let dir = layout.assess_dir();
    let mut manifest = with_score_file(Manifest::new("assess", cfg)?, cfg)?.input(cohort_path)?;
    for d in checkpoint_dirs {
        manifest = manifest.input_dir(d)?;
    }
    let mut outputs: Vec<String> = [
        "selection.json",
        "reports.json",
        "comparison_table.csv",
        "epochs.csv",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    outputs.extend(
        cfg.tau_sweep
            .iter()
            .map(|t| format!("tau_{}.csv", tau_tag(*t))),
    );
    manifest.outputs = outputs;
    if !force && up_to_date(&dir, &manifest) {
        let text = std::fs::read_to_string(dir.join("selection.json")).data()?;
        return Ok((serde_json::from_str(&text).data()?, Status::UpToDate));
    }

    let score_cfg = load_score_config(cfg.score_config.as_deref())?;
    let cohort = read_cohort(cohort_path)?.cohort;
    let (_, eval) = split_cohort(cfg, &cohort)?;
    let sel = cfg.selection;

    let mut loaded = Vec::new();
    for d in checkpoint_dirs {
        let cps = read_checkpoint_dir(d)?;
        let m = model_of(&cps)?;
        loaded.push((m, d.clone(), cps));
    }

    let mut selections = Vec::new();
    let mut all_reports = Vec::new();
    let mut epoch_rows = Vec::new();
    for (m, d, cps) in &loaded {
        let (all, selection) = select_model(cps, &eval, *m, cfg, &score_cfg, &sel)?;
        for (i, r) in all.iter().enumerate() {
            let mut row = vec![m.label(), r.epoch.to_string()];
            row.extend(metric_cells(r));
            row.push((i < selection.reports.len()).to_string());
            row.push((i == selection.best).to_string());
            epoch_rows.push(row);
        }
        let best = selection.best_report().clone();
        info!(
            "{m}: best epoch {} (σ {:.4}, μ {:.4})",
            best.epoch, best.sigma.value, best.mu
        );
        selections.push(ModelSelection {
            model: *m,
            checkpoint_dir: d.clone(),
            best_epoch: best.epoch,
            report: best,
            evaluated: selection.reports.len(),
            stopped_early: selection.stopped_early,
        });
        all_reports.push((m.label(), all));
    }
    let summary = AssessSummary {
        tau: sel.tau,
        eta: sel.eta,
        winner: winner_of(&selections, &sel),
        selections,
    };

    write_json(&dir.join("selection.json"), &summary).data()?;
    write_json(&dir.join("reports.json"), &all_reports).data()?;
    write_csv(
        &dir.join("comparison_table.csv"),
        &comparison_table_header(&summary),
        &comparison_table_rows(&summary),
    )
    .data()?;
    let mut header = vec!["model", "epoch"];
    header.extend(METRIC_HEADER);
    header.extend(["evaluated", "selected"]);
    write_csv(&dir.join("epochs.csv"), &header, &epoch_rows).data()?;

    for &tau in &cfg.tau_sweep {
        let sel_tau = SelectionConfig {
            tau,
            pool_tau: sel.pool_tau.map(|_| tau),
            ..sel
        };
        let mut rows = Vec::new();
        for (m, _, cps) in &loaded {
            let (_, s) = select_model(cps, &eval, *m, cfg, &score_cfg, &sel_tau)?;
            let r = s.best_report();
            let mut row = vec![m.label(), fmt_f(tau), r.epoch.to_string()];
            row.extend(metric_cells(r));
            rows.push(row);
        }
        let mut header = vec!["model", "tau", "best_epoch"];
        header.extend(METRIC_HEADER);
        write_csv(
            &dir.join(format!("tau_{}.csv", tau_tag(tau))),
            &header,
            &rows,
        )
        .data()?;
    }
    manifest.write(&dir)?;
    Ok((summary, Status::Ran))
}

fn comparison_table_header(s: &AssessSummary) -> Vec<&'static str> {
    // Leaked once per call; header strings must outlive the writer.
    let mut h: Vec<&'static str> = vec!["metric"];
    for sel in &s.selections {
        h.push(Box::leak(sel.model.label().into_boxed_str()));
    }
    h
}

/// Rows OG, OB, WG, WB, σ, μ, BE with one column per model, four decimals.
type Metric = dyn Fn(&AssessmentReport) -> f64;

fn comparison_table_rows(s: &AssessSummary) -> Vec<Vec<String>> {
    let cell = |f: &dyn Fn(&AssessmentReport) -> f64| -> Vec<String> {
        s.selections
            .iter()
            .map(|m| {
                let x = f(&m.report);
                if x.is_infinite() {
                    "inf".into()
                } else {
                    format!("{x:.4}")
                }
            })
            .collect()
    };
    let mut rows = Vec::new();
    let named: [(&str, &Metric); 6] = [
        ("OG", &|r| r.tecm.og),
        ("OB", &|r| r.tecm.ob),
        ("WG", &|r| r.tecm.wg),
        ("WB", &|r| r.tecm.wb),
        ("sigma", &|r| r.sigma.value),
        ("mu", &|r| r.mu),
    ];
    for (name, f) in named {
        let mut row = vec![name.to_string()];
        row.extend(cell(f));
        rows.push(row);
    }
    let mut be = vec!["BE".to_string()];
    be.extend(s.selections.iter().map(|m| m.best_epoch.to_string()));
    rows.push(be);
    rows
}

// ---------------------------------------------------------------- outcomes

pub const OUTCOME_HEADER: [&str; 11] = [
    "model",
    "n_followers",
    "MoR",
    "AIHS",
    "improvement_MoR",
    "improvement_AIHS",
    "p_MoR",
    "p_AIHS",
    "tau",
    "z_p_MoR",
    "significant",
];

fn outcome_cells(r: &OutcomeRow) -> Vec<String> {
    vec![
        r.label.clone(),
        r.n_followers.to_string(),
        fmt_opt(r.mortality()),
        fmt_opt(r.stay()),
        fmt_opt(r.improvement_mortality),
        fmt_opt(r.improvement_stay),
        fmt_opt(r.p_mortality()),
        fmt_opt(r.p_stay()),
        fmt_f(r.tau),
        fmt_opt(r.mortality_z.map(|z| z.p)),
        r.significant_mortality().to_string(),
    ]
}

/// Outcome tables for each τ, using each model's selected checkpoint.
pub fn outcome_tables(
    eval: &[Episode],
    selected: &[(String, QFunction)],
    taus: &[f64],
) -> CliResult<Vec<OutcomeTable>> {
    let rates = selected
        .iter()
        .map(|(_, q)| {
            eval.iter()
                .map(|e| match_rate(e, q))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()
        .data()?;
    let mut tables = Vec::new();
    for &tau in taus {
        let baseline = baseline_row(eval, tau)
            .ok_or_else(|| anyhow!("no evaluation episodes"))
            .data()?;
        let base = baseline.followers.expect("non-empty");
        let rows = selected
            .iter()
            .zip(&rates)
            .map(|((label, _), r)| {
                outcome_row(label, &split_with_rates(eval, r, tau, label), &base)
            })
            .collect();
        tables.push(OutcomeTable {
            tau,
            baseline,
            rows,
        });
    }
    Ok(tables)
}

pub fn outcomes(
    cfg: &RunConfig,
    cohort_path: &Path,
    assess_dir: &Path,
    taus: &[f64],
    layout: &Layout,
    force: bool,
) -> CliResult<(Vec<OutcomeTable>, Status)> {
    cfg.validate()?;
    if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return fail(ErrorKind::Validation, format!("tau {t} outside [0, 1]"));
    }
    let selection_path = assess_dir.join("selection.json");
    let dir = layout.outcomes_dir();
    let mut manifest = with_score_file(Manifest::new("outcomes", cfg)?, cfg)?
        .setting("taus", format!("{taus:?}"))
        .input(cohort_path)?
        .input(&selection_path)?;
    let mut outputs = vec!["outcomes.csv".to_string(), "outcomes.json".to_string()];
    outputs.extend(taus.iter().map(|t| format!("tau_{}.csv", tau_tag(*t))));
    manifest.outputs = outputs;
    if !force && up_to_date(&dir, &manifest) {
        let text = std::fs::read_to_string(dir.join("outcomes.json")).data()?;
        return Ok((serde_json::from_str(&text).data()?, Status::UpToDate));
    }

    let summary: AssessSummary = serde_json::from_str(
        &std::fs::read_to_string(&selection_path)
            .with_context(|| format!("reading {} (run assess first)", selection_path.display()))
            .data()?,
    )
    .data()?;
    let score_cfg = load_score_config(cfg.score_config.as_deref())?;
    let cohort = read_cohort(cohort_path)?.cohort;
    let (_, eval) = split_cohort(cfg, &cohort)?;
    let mut selected = Vec::new();
    for s in &summary.selections {
        let cp =
            read_checkpoint(&s.checkpoint_dir.join(checkpoint_file_name(s.best_epoch))).data()?;
        selected.push((
            s.model.label(),
            QFunction::new(cp.q, encoder_for(s.model, &score_cfg)),
        ));
    }
    let tables = outcome_tables(&eval, &selected, taus)?;

    let mut all_rows = Vec::new();
    for t in &tables {
        let rows: Vec<Vec<String>> = std::iter::once(&t.baseline)
            .chain(&t.rows)
            .map(outcome_cells)
            .collect();
        write_csv(
            &dir.join(format!("tau_{}.csv", tau_tag(t.tau))),
            &OUTCOME_HEADER,
            &rows,
        )
        .data()?;
        all_rows.extend(rows);
    }
    write_csv(&dir.join("outcomes.csv"), &OUTCOME_HEADER, &all_rows).data()?;
    write_json(&dir.join("outcomes.json"), &tables).data()?;
    manifest.write(&dir)?;
    Ok((tables, Status::Ran))
}

// ---------------------------------------------------------------- report

/// Text summary of selections and the outcome table at the configured τ.
pub fn render_summary(summary: &AssessSummary, tables: &[OutcomeTable]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>5} {:>8} {:>8} {:>8} {:>8} {:>9} {:>8}\n",
        "model", "BE", "OG", "OB", "WG", "WB", "sigma", "mu"
    ));
    for s in &summary.selections {
        let r = &s.report;
        out.push_str(&format!(
            "{:<14} {:>5} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>9.4} {:>8.4}\n",
            s.model.label(),
            s.best_epoch,
            r.tecm.og,
            r.tecm.ob,
            r.tecm.wg,
            r.tecm.wb,
            r.sigma.value,
            r.mu
        ));
    }
    out.push_str(&format!("winner: {}\n", summary.winner));
    if let Some(t) = tables
        .iter()
        .find(|t| (t.tau - summary.tau).abs() < 1e-12)
        .or(tables.first())
    {
        out.push_str(&format!("\noutcomes at tau = {}\n", t.tau));
        out.push_str(&format!(
            "{:<14} {:>6} {:>8} {:>7} {:>9} {:>9} {:>9}\n",
            "model", "n_fol", "MoR", "AIHS", "impr_MoR", "impr_LOS", "p_MoR"
        ));
        for r in std::iter::once(&t.baseline).chain(&t.rows) {
            let pct = |x: Option<f64>| {
                x.map(|v| format!("{:.2}%", v * 100.0))
                    .unwrap_or_else(|| "-".into())
            };
            out.push_str(&format!(
                "{:<14} {:>6} {:>8} {:>7} {:>9} {:>9} {:>9}\n",
                r.label,
                r.n_followers,
                pct(r.mortality()),
                r.stay()
                    .map(|s| format!("{s:.2}"))
                    .unwrap_or_else(|| "-".into()),
                pct(r.improvement_mortality),
                pct(r.improvement_stay),
                r.p_mortality()
                    .map(|p| format!("{p:.4}"))
                    .unwrap_or_else(|| "-".into()),
            ));
        }
    }
    out
}

/// Whole pipeline: cohort (generated unless given), training, assessment and outcomes.
pub fn report(
    cfg: &RunConfig,
    cohort: Option<&Path>,
    layout: &Layout,
    jobs: usize,
    force: bool,
) -> CliResult<String> {
    let cohort_path = match cohort {
        Some(p) => p.to_path_buf(),
        None => {
            generate(cfg, layout, force)?;
            layout.cohort()
        }
    };
    train(cfg, &cohort_path, &cfg.models, layout, jobs, force)?;
    let dirs: Vec<PathBuf> = cfg.models.iter().map(|m| layout.model_dir(*m)).collect();
    let (summary, _) = assess(cfg, &cohort_path, &dirs, layout, force)?;
    let (tables, _) = outcomes(
        cfg,
        &cohort_path,
        &layout.assess_dir(),
        &cfg.tau_sweep,
        layout,
        force,
    )?;
    let text = render_summary(&summary, &tables);
    crate::formats::write_atomic(&layout.root.join("summary.txt"), text.as_bytes()).data()?;
    Ok(text)
}

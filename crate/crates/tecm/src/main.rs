use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tecm::config::{ModelSpec, RunConfig};
use tecm::error::{fail, Classify, CliResult, ErrorKind};
use tecm::formats::DoseUnits;
use tecm::pipeline::{self, Layout, Status};
use tecm_core::assess::Preference;
use tecm_core::learners::Algo;
use tecm_core::scoring::ScoreKind;

#[derive(Parser)]
#[command(
    name = "tecm",
    version,
    about = "Offline RL for heparin dosing with treatment-effect confusion matrices"
)]
struct Cli {
    /// Root directory for all outputs.
    #[arg(
        long,
        global = true,
        env = "TECM_OUTPUT_ROOT",
        default_value = "tecm-out"
    )]
    out: PathBuf,
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Recompute even when a matching manifest exists.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic cohort with a known ground-truth policy.
    Generate {
        #[arg(long)]
        patients: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build a cohort from a long-format CSV of raw measurements.
    Ingest {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum, default_value = "u-per-kg-h")]
        dose_units: DoseUnits,
    },
    /// Train one model, or every configured model when --algo is omitted.
    Train {
        #[arg(long)]
        cohort: Option<PathBuf>,
        #[arg(long)]
        algo: Option<Algo>,
        #[arg(long, requires = "algo")]
        reward: Option<ScoreKind>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Learner seed (initialization and shuffling).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score checkpoints and select the best epoch per model.
    Assess {
        #[arg(long)]
        cohort: Option<PathBuf>,
        /// Checkpoint directories; defaults to every configured model.
        #[arg(long = "checkpoint-dir")]
        checkpoint_dirs: Vec<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        eta: Option<u32>,
        #[arg(long)]
        pref: Option<Preference>,
    },
    /// Outcomes of patients whose care followed each selected policy.
    Outcomes {
        #[arg(long)]
        cohort: Option<PathBuf>,
        #[arg(long)]
        assess_dir: Option<PathBuf>,
        /// Follower thresholds; defaults to the configured sweep.
        #[arg(long = "tau")]
        taus: Vec<f64>,
    },
    /// Run every stage and print the summary.
    Report {
        #[arg(long)]
        cohort: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print the default configuration as JSON.
    Defaults,
}

fn status_line(what: &str, s: &Status) {
    match s {
        Status::Ran => println!("{what}: done"),
        Status::UpToDate => println!("{what}: up to date"),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let layout = Layout::new(&cli.out);
    let cohort_or_default = |c: Option<PathBuf>| c.unwrap_or_else(|| layout.cohort());
    match cli.cmd {
        Cmd::Generate { patients, seed } => {
            if let Some(n) = patients {
                cfg.synth.patients = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let s = pipeline::generate(&cfg, &layout, cli.force)?;
            status_line(&layout.cohort().display().to_string(), &s);
        }
        Cmd::Ingest { csv, dose_units } => {
            let s = pipeline::ingest(&cfg, &csv, dose_units, &layout, cli.force)?;
            status_line(&layout.cohort().display().to_string(), &s);
        }
        Cmd::Train {
            cohort,
            algo,
            reward,
            jobs,
            seed,
        } => {
            if let Some(s) = seed {
                cfg.deep.seed = s;
                cfg.tabular.seed = s;
            }
            let models = match algo {
                Some(a) => vec![ModelSpec::new(a, reward.unwrap_or(ScoreKind::CxSofa))?],
                None => cfg.models.clone(),
            };
            if jobs == 0 {
                return fail(ErrorKind::Validation, "--jobs must be at least 1");
            }
            for (m, s) in pipeline::train(
                &cfg,
                &cohort_or_default(cohort),
                &models,
                &layout,
                jobs,
                cli.force,
            )? {
                status_line(&layout.model_dir(m).display().to_string(), &s);
            }
        }
        Cmd::Assess {
            cohort,
            checkpoint_dirs,
            tau,
            eta,
            pref,
        } => {
            if let Some(t) = tau {
                cfg.selection.tau = t;
            }
            if let Some(e) = eta {
                cfg.selection.eta = e;
            }
            if let Some(p) = pref {
                cfg.selection.preference = p;
            }
            let dirs = if checkpoint_dirs.is_empty() {
                cfg.models.iter().map(|m| layout.model_dir(*m)).collect()
            } else {
                checkpoint_dirs
            };
            let (summary, s) =
                pipeline::assess(&cfg, &cohort_or_default(cohort), &dirs, &layout, cli.force)?;
            status_line(&layout.assess_dir().display().to_string(), &s);
            print!("{}", pipeline::render_summary(&summary, &[]));
        }
        Cmd::Outcomes {
            cohort,
            assess_dir,
            taus,
        } => {
            let taus = if taus.is_empty() {
                cfg.tau_sweep.clone()
            } else {
                taus
            };
            let assess_dir = assess_dir.unwrap_or_else(|| layout.assess_dir());
            let (_, s) = pipeline::outcomes(
                &cfg,
                &cohort_or_default(cohort),
                &assess_dir,
                &taus,
                &layout,
                cli.force,
            )?;
            status_line(&layout.outcomes_dir().display().to_string(), &s);
        }
        Cmd::Report { cohort, jobs } => {
            if jobs == 0 {
                return fail(ErrorKind::Validation, "--jobs must be at least 1");
            }
            print!(
                "{}",
                pipeline::report(&cfg, cohort.as_deref(), &layout, jobs, cli.force)?
            );
        }
        Cmd::Defaults => {
            println!(
                "{}",
                serde_json::to_string_pretty(&RunConfig::default()).internal()?
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.source);
            e.exit_code()
        }
    }
}

//! On-disk formats: cohort JSON Lines, checksummed checkpoints, score
//! configurations and raw CSV ingestion.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tecm_core::learners::{Checkpoint, QModel};
use tecm_core::scoring::{ScoreConfig, Vital};
use tecm_core::trajectory::{
    exclude_and_assemble, impute, segment_long, windowize, AssembleReport, Cohort, Episode,
    Exclusion, GroundTruthPolicy, PartialVitals, Provenance, RawRecord, WINDOW_MINUTES,
};

use crate::error::{Classify, CliResult};

pub const COHORT_FORMAT_VERSION: u32 = 1;
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .data()?;
    Ok(sha256_hex(&bytes))
}

/// Writes through a sibling temp file so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// First line of a cohort file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortHeader {
    pub format_version: u32,
    pub provenance: Provenance,
    pub seed: Option<u64>,
    pub episodes: usize,
    /// Present for synthetic cohorts.
    pub ground_truth: Option<GroundTruthPolicy>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortFile {
    pub cohort: Cohort,
    pub ground_truth: Option<GroundTruthPolicy>,
}

pub fn write_cohort(
    path: &Path,
    cohort: &Cohort,
    ground_truth: Option<GroundTruthPolicy>,
) -> anyhow::Result<()> {
    let header = CohortHeader {
        format_version: COHORT_FORMAT_VERSION,
        provenance: cohort.provenance,
        seed: cohort.seed,
        episodes: cohort.episodes.len(),
        ground_truth,
    };
    let mut buf = Vec::new();
    serde_json::to_writer(&mut buf, &header)?;
    buf.push(b'\n');
    for ep in &cohort.episodes {
        serde_json::to_writer(&mut buf, ep)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

pub fn read_cohort(path: &Path) -> CliResult<CohortFile> {
    let file = File::open(path)
        .with_context(|| format!("opening cohort {}", path.display()))
        .data()?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| anyhow!("cohort {} is empty", path.display()))
        .data()?
        .context("reading cohort header")
        .data()?;
    let header: CohortHeader = serde_json::from_str(&header_line)
        .context("parsing cohort header")
        .data()?;
    if header.format_version != COHORT_FORMAT_VERSION {
        return Err(anyhow!(
            "unsupported cohort format version {}",
            header.format_version
        ))
        .data();
    }
    let mut episodes = Vec::with_capacity(header.episodes);
    for (i, line) in lines.enumerate() {
        let line = line.context("reading cohort").data()?;
        if line.trim().is_empty() {
            continue;
        }
        let ep: Episode = serde_json::from_str(&line)
            .with_context(|| format!("{} line {}", path.display(), i + 2))
            .data()?;
        episodes.push(ep);
    }
    if episodes.len() != header.episodes {
        return Err(anyhow!(
            "header announces {} episodes, found {}",
            header.episodes,
            episodes.len()
        ))
        .data();
    }
    let cohort = Cohort {
        episodes,
        provenance: header.provenance,
        seed: header.seed,
    };
    cohort.validate().data()?;
    Ok(CohortFile {
        cohort,
        ground_truth: header.ground_truth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub format_version: u32,
    /// Layer widths for networks, `[25, 5]` for a Q-table.
    pub architecture: Vec<usize>,
    /// SHA-256 of the JSON encoding of `checkpoint`.
    pub sha256: String,
    pub checkpoint: Checkpoint,
}

pub fn checkpoint_file_name(epoch: u32) -> String {
    format!("epoch_{epoch:04}.json")
}

pub fn write_checkpoint(dir: &Path, cp: &Checkpoint) -> anyhow::Result<PathBuf> {
    let payload = serde_json::to_string(cp)?;
    let architecture = match &cp.q {
        QModel::Mlp(p) => p.arch(),
        QModel::Table(t) => vec![t.values.len(), tecm_core::NUM_ACTIONS],
    };
    let file = CheckpointFile {
        format_version: CHECKPOINT_FORMAT_VERSION,
        architecture,
        sha256: sha256_hex(payload.as_bytes()),
        checkpoint: cp.clone(),
    };
    let path = dir.join(checkpoint_file_name(cp.epoch));
    write_atomic(&path, serde_json::to_string(&file)?.as_bytes())?;
    Ok(path)
}

pub fn read_checkpoint(path: &Path) -> anyhow::Result<Checkpoint> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: CheckpointFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing checkpoint {}", path.display()))?;
    if file.format_version != CHECKPOINT_FORMAT_VERSION {
        bail!(
            "{}: unsupported checkpoint version {}",
            path.display(),
            file.format_version
        );
    }
    let digest = sha256_hex(serde_json::to_string(&file.checkpoint)?.as_bytes());
    if digest != file.sha256 {
        bail!("{}: checksum mismatch", path.display());
    }
    match &file.checkpoint.q {
        QModel::Mlp(p) => {
            p.validate()
                .map_err(|e| anyhow!("{}: {e}", path.display()))?;
            if p.arch() != file.architecture {
                bail!(
                    "{}: architecture header disagrees with parameters",
                    path.display()
                );
            }
        }
        QModel::Table(t) => t
            .validate()
            .map_err(|e| anyhow!("{}: {e}", path.display()))?,
    }
    Ok(file.checkpoint)
}

/// All checkpoints of a directory in epoch order.
pub fn read_checkpoint_dir(dir: &Path) -> CliResult<Vec<Checkpoint>> {
    let entries = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))
        .data()?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("epoch_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    let mut cps = paths
        .iter()
        .map(|p| read_checkpoint(p))
        .collect::<anyhow::Result<Vec<_>>>()
        .data()?;
    cps.sort_by_key(|c| c.epoch);
    if cps.is_empty() {
        return Err(anyhow!("no checkpoints in {}", dir.display())).data();
    }
    if cps.windows(2).any(|w| w[0].epoch == w[1].epoch) {
        return Err(anyhow!("duplicate epochs in {}", dir.display())).data();
    }
    Ok(cps)
}

/// Built-in name (`cxsofa-paper`, `sofa-discrete`) or a JSON file path.
pub fn load_score_config(spec: Option<&Path>) -> CliResult<ScoreConfig> {
    let Some(path) = spec else {
        return Ok(ScoreConfig::cxsofa_paper());
    };
    if let Some(cfg) = path.to_str().and_then(ScoreConfig::builtin) {
        return Ok(cfg);
    }
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading score config {}", path.display()))
        .data()?;
    let cfg: ScoreConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing score config {}", path.display()))
        .validation()?;
    cfg.validate().validation()?;
    Ok(cfg)
}

/// Units of the dose column in ingested CSV files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DoseUnits {
    /// Already weight-normalised, U/kg/h.
    #[default]
    UPerKgH,
    /// U/h; divided by the `weight_kg` column.
    UPerH,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows: usize,
    pub patients: usize,
    pub exclusions: Vec<Exclusion>,
    pub assembly: AssembleReport,
    pub episodes_before_segmentation: usize,
    pub episodes: usize,
}

fn parse_opt(field: &str, raw: Option<&str>, row: usize) -> anyhow::Result<Option<f64>> {
    match raw.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s
            .parse::<f64>()
            .map(Some)
            .with_context(|| format!("row {row}: column {field} holds '{s}'")),
    }
}

/// Reads long-format rows: `patient_id, time_min`, one column per vital
/// (named as [`Vital::name`]), `dose`, optional `weight_kg`, `onset_min`,
/// `death_min` and the required `discharge_min`. Empty cells are missing.
pub fn read_raw_csv(path: &Path, units: DoseUnits) -> CliResult<Vec<RawRecord>> {
    let mut rdr = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))
        .data()?;
    let headers = rdr.headers().context("reading CSV header").data()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let need = |name: &str| {
        col(name).ok_or_else(|| anyhow!("{}: missing column '{name}'", path.display()))
    };
    let pid = need("patient_id").data()?;
    let time = need("time_min").data()?;
    let discharge = need("discharge_min").data()?;
    let dose = need("dose").data()?;
    let vitals: Vec<(Vital, Option<usize>)> =
        Vital::ALL.iter().map(|&v| (v, col(v.name()))).collect();
    if vitals.iter().all(|(_, c)| c.is_none()) {
        return Err(anyhow!("{}: no vital-sign columns", path.display())).data();
    }
    let weight = col("weight_kg");
    if units == DoseUnits::UPerH && weight.is_none() {
        return Err(anyhow!("dose in U/h needs a weight_kg column")).validation();
    }
    let (onset, death) = (col("onset_min"), col("death_min"));

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.with_context(|| format!("row {row}")).data()?;
        let get = |c: Option<usize>| c.and_then(|c| rec.get(c));
        let num = |name: &str, c: Option<usize>| parse_opt(name, get(c), row);
        let mut pv = PartialVitals::default();
        for &(v, c) in &vitals {
            pv.set(v, num(v.name(), c).data()?);
        }
        let mut d = num("dose", Some(dose)).data()?;
        if units == DoseUnits::UPerH {
            if let Some(x) = d {
                let w = num("weight_kg", weight).data()?;
                d = match w {
                    Some(w) if w > 0.0 => Some(x / w),
                    _ => None,
                };
            }
        }
        let required = |name: &str, c: usize| -> CliResult<f64> {
            num(name, Some(c))
                .data()?
                .ok_or_else(|| anyhow!("row {row}: {name} is empty"))
                .data()
        };
        out.push(RawRecord {
            patient_id: get(Some(pid)).unwrap_or("").trim().to_string(),
            time_min: required("time_min", time)?,
            vitals: pv,
            dose: d,
            onset_min: num("onset_min", onset).data()?.unwrap_or(0.0),
            death_min: num("death_min", death).data()?,
            discharge_min: required("discharge_min", discharge)?,
        });
    }
    if let Some(r) = out.iter().find(|r| r.patient_id.is_empty()) {
        return Err(anyhow!("empty patient_id at time {}", r.time_min)).data();
    }
    Ok(out)
}

/// Windowing, imputation, exclusion and segmentation of raw rows.
pub fn ingest_records(records: &[RawRecord], max_len: usize) -> CliResult<(Cohort, IngestReport)> {
    let (grids, exclusions) = windowize(records, WINDOW_MINUTES);
    let patients = grids.len() + exclusions.len();
    let grids: Vec<_> = grids.into_iter().map(impute).collect();
    let (episodes, assembly) = exclude_and_assemble(&grids);
    let before = episodes.len();
    let mut segmented = Vec::new();
    for ep in &episodes {
        segmented.extend(segment_long(ep, max_len).data()?);
    }
    let cohort = Cohort {
        episodes: segmented,
        provenance: Provenance::Ingested,
        seed: None,
    };
    if cohort.episodes.is_empty() {
        return Err(anyhow!("no usable episodes after windowing and exclusion")).data();
    }
    cohort.validate().data()?;
    let report = IngestReport {
        rows: records.len(),
        patients,
        exclusions,
        assembly,
        episodes_before_segmentation: before,
        episodes: cohort.episodes.len(),
    };
    Ok((cohort, report))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    write_atomic(path, &buf)
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(BufWriter::new(&mut buf));
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    write_atomic(path, &buf)
}

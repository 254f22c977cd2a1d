//! Run manifests. Each command records its configuration and input hashes;
//! a rerun whose manifest matches is skipped unless forced.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Classify, CliResult};
use crate::formats::{sha256_file, sha256_hex, write_json};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Command-specific settings (model, τ overrides and similar).
    pub settings: BTreeMap<String, String>,
    pub config_sha256: String,
    pub config: RunConfig,
    /// Input path to content hash.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> CliResult<Self> {
        let canonical = serde_json::to_vec(config).internal()?;
        Ok(Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            settings: BTreeMap::new(),
            config_sha256: sha256_hex(&canonical),
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    /// Keys the run on `relevant` rather than the whole configuration, so
    /// unrelated edits do not invalidate this stage.
    pub fn scoped<T: Serialize>(mut self, relevant: &T) -> CliResult<Self> {
        self.config_sha256 = sha256_hex(&serde_json::to_vec(relevant).internal()?);
        Ok(self)
    }

    pub fn setting(mut self, key: &str, value: impl ToString) -> Self {
        self.settings.insert(key.into(), value.to_string());
        self
    }

    pub fn input(mut self, path: &Path) -> CliResult<Self> {
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(self)
    }

    /// Hashes every file of a directory (non-recursive, sorted).
    pub fn input_dir(mut self, dir: &Path) -> CliResult<Self> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(anyhow::Error::from)
            .data()?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != MANIFEST_NAME))
            .collect();
        files.sort();
        for f in files {
            self = self.input(&f)?;
        }
        Ok(self)
    }

    /// Same command, settings, configuration and inputs.
    pub fn same_run(&self, other: &Manifest) -> bool {
        self.command == other.command
            && self.settings == other.settings
            && self.config_sha256 == other.config_sha256
            && self.inputs == other.inputs
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_json(&dir.join(MANIFEST_NAME), self).data()
    }
}

/// True when `dir` already holds a manifest for the same run and all of its
/// outputs still exist.
pub fn up_to_date(dir: &Path, planned: &Manifest) -> bool {
    let Ok(text) = std::fs::read_to_string(dir.join(MANIFEST_NAME)) else {
        return false;
    };
    let Ok(existing) = serde_json::from_str::<Manifest>(&text) else {
        return false;
    };
    existing.same_run(planned) && existing.outputs.iter().all(|o| dir.join(o).exists())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn up_to_date_needs_matching_manifest_and_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::default();
        let mut m = Manifest::new("demo", &cfg).unwrap().setting("k", 1);
        m.outputs = vec!["out.txt".into()];
        assert!(!up_to_date(dir.path(), &m));
        m.write(dir.path()).unwrap();
        assert!(!up_to_date(dir.path(), &m), "output missing");
        std::fs::write(dir.path().join("out.txt"), "x").unwrap();
        assert!(up_to_date(dir.path(), &m));

        let other = Manifest::new("demo", &cfg).unwrap().setting("k", 2);
        assert!(!up_to_date(dir.path(), &other));
        let reseeded = RunConfig {
            seed: 1,
            ..cfg.clone()
        };
        assert!(!up_to_date(
            dir.path(),
            &Manifest::new("demo", &reseeded).unwrap().setting("k", 1)
        ));
    }

    #[test]
    fn scoped_manifest_ignores_unrelated_settings() {
        let cfg = RunConfig::default();
        let mut changed = cfg.clone();
        changed.selection.eta = 3;
        let a = Manifest::new("train", &cfg)
            .unwrap()
            .scoped(&cfg.deep)
            .unwrap();
        let b = Manifest::new("train", &changed)
            .unwrap()
            .scoped(&changed.deep)
            .unwrap();
        assert!(a.same_run(&b));
        assert!(!Manifest::new("train", &cfg)
            .unwrap()
            .same_run(&Manifest::new("train", &changed).unwrap()));
    }

    #[test]
    fn inputs_track_content() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("in.txt");
        std::fs::write(&f, "a").unwrap();
        let cfg = RunConfig::default();
        let a = Manifest::new("x", &cfg).unwrap().input(&f).unwrap();
        std::fs::write(&f, "b").unwrap();
        let b = Manifest::new("x", &cfg).unwrap().input(&f).unwrap();
        assert!(!a.same_run(&b));
        let d = Manifest::new("x", &cfg)
            .unwrap()
            .input_dir(dir.path())
            .unwrap();
        assert_eq!(d.inputs.len(), 1);
    }
}

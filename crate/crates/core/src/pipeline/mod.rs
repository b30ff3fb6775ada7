//! Config-driven experiment runs.
//!
//! Stages run in the configured order and share fitted state through a
//! context. Each stage writes its CSV/SVG outputs into the output directory
//! and gets a `manifest.tsv` row with FNV-1a hashes of its inputs and outputs.

mod config;
mod stages;

use std::fs;
use std::hash::Hasher;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fnv::FnvHasher;

use crate::error::{Error, Result};
use crate::rng;

pub use config::{
    BayesStageConfig, ClusterConfig, DataConfig, DataSource, ExperimentConfig, GbtStageConfig, LassoStageConfig,
    ReliabilityConfig, Stage, StackStageConfig,
};

pub const MANIFEST_FILE: &str = "manifest.tsv";

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Write access confined to one directory: names must be plain file names.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<(String, u64)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let bad = name.is_empty()
            || name.starts_with('.')
            || name.contains(['/', '\\', '\0'])
            || Path::new(name).is_absolute();
        if bad {
            return Err(Error::Config(format!("refusing to write `{name}` outside the output directory")));
        }
        let bytes = bytes.as_ref();
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.written.push((name.to_string(), fnv1a64(bytes)));
        Ok(())
    }

    /// Files written since the last call, as `(name, content hash)`.
    fn take_written(&mut self) -> Vec<(String, u64)> {
        std::mem::take(&mut self.written)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub stage: String,
    pub inputs_hash: u64,
    pub outputs_hash: u64,
    pub wall_time_s: f64,
    pub status: StageStatus,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("stage\tinputs_hash\toutputs_hash\twall_time_s\tstatus\n");
        for e in &self.entries {
            let status = match &e.status {
                StageStatus::Ok => "ok".to_string(),
                StageStatus::Failed(m) => format!("failed: {}", m.replace(['\t', '\n'], " ")),
            };
            out.push_str(&format!(
                "{}\t{:016x}\t{:016x}\t{:.3}\t{status}\n",
                e.stage, e.inputs_hash, e.outputs_hash, e.wall_time_s
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let err = |m: &str| Error::Parse {
                line: i as u64 + 1,
                message: m.to_string(),
            };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 5 {
                return Err(err("expected 5 tab-separated fields"));
            }
            let hex = |s: &str| u64::from_str_radix(s, 16).map_err(|_| err("bad hash"));
            entries.push(ManifestEntry {
                stage: f[0].to_string(),
                inputs_hash: hex(f[1])?,
                outputs_hash: hex(f[2])?,
                wall_time_s: f[3].parse().map_err(|_| err("bad wall time"))?,
                status: match f[4].strip_prefix("failed: ") {
                    Some(m) => StageStatus::Failed(m.to_string()),
                    None if f[4] == "ok" => StageStatus::Ok,
                    None => return Err(err("bad status")),
                },
            });
        }
        Ok(Manifest { entries })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        Self::parse(&fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

fn combine(hashes: &[(String, u64)]) -> u64 {
    let mut sorted = hashes.to_vec();
    sorted.sort();
    let mut h = FnvHasher::default();
    for (name, v) in &sorted {
        h.write(name.as_bytes());
        h.write(&[0]);
        h.write(&v.to_le_bytes());
    }
    h.finish()
}

/// Run every configured stage. A failing stage is recorded in the manifest
/// before its error is returned.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let mut out = OutputDir::create(&config.output_dir)?;
    let mut manifest = Manifest::default();
    let mut ctx = stages::Context::default();
    let mut upstream = fnv1a64(&config.seed.to_le_bytes());
    out.write(MANIFEST_FILE, manifest.to_tsv())?;
    out.take_written();

    for &stage in &config.stages {
        let mut h = FnvHasher::default();
        h.write(&upstream.to_le_bytes());
        h.write(stage.name().as_bytes());
        if let Some(text) = config.section_text.get(stage.name()) {
            h.write(text.as_bytes());
        }
        if let (Stage::Dataio, DataSource::Csv { path, schema }) = (stage, &config.data.source) {
            for p in std::iter::once(path).chain(schema) {
                h.write(&fs::read(p).map_err(|e| Error::io(p, e))?);
            }
        }
        let inputs_hash = h.finish();

        log::info!("running stage {}", stage.name());
        let start = Instant::now();
        let seed = rng::derive_seed(config.seed, stage.index());
        let result = stages::run_stage(stage, config, seed, &mut ctx, &mut out);
        let written = out.take_written();
        let outputs_hash = combine(&written);
        upstream = fnv1a64(&[upstream.to_le_bytes(), outputs_hash.to_le_bytes()].concat());
        manifest.entries.push(ManifestEntry {
            stage: stage.name().to_string(),
            inputs_hash,
            outputs_hash,
            wall_time_s: start.elapsed().as_secs_f64(),
            status: match &result {
                Ok(()) => StageStatus::Ok,
                Err(e) => StageStatus::Failed(e.to_string()),
            },
        });
        out.write(MANIFEST_FILE, manifest.to_tsv())?;
        out.take_written();
        result?;
    }
    Ok(RunReport {
        output_dir: config.output_dir.clone(),
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn output_dir_confined() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path()).unwrap();
        assert!(out.write("../escape.csv", "x").is_err());
        assert!(out.write("sub/file.csv", "x").is_err());
        assert!(out.write("", "x").is_err());
        out.write("fine.csv", "x").unwrap();
        assert_eq!(out.take_written(), vec![("fine.csv".to_string(), fnv1a64(b"x"))]);
    }

    #[test]
    fn manifest_round_trip() {
        let m = Manifest {
            entries: vec![ManifestEntry {
                stage: "gbt".into(),
                inputs_hash: 1,
                outputs_hash: u64::MAX,
                wall_time_s: 0.5,
                status: StageStatus::Failed("bad\tthing".into()),
            }],
        };
        let back = Manifest::parse(&m.to_tsv()).unwrap();
        assert_eq!(back.entries[0].status, StageStatus::Failed("bad thing".into()));
        assert_eq!(back.entries[0].outputs_hash, u64::MAX);
    }

    #[test]
    fn empty_stage_list_writes_manifest_only() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::parse("[experiment]\nstages =\noutput_dir = out\n", tmp.path()).unwrap();
        let report = run(&cfg).unwrap();
        assert!(report.manifest.entries.is_empty());
        let files: Vec<_> = fs::read_dir(tmp.path().join("out")).unwrap().collect();
        assert_eq!(files.len(), 1);
    }
}

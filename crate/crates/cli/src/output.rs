use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Output directory that remembers every file written to it.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Write through a temporary file in the same directory, then rename.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.path(name), bytes)?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let map = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(header).map_err(map)?;
        for r in rows {
            w.write_record(r).map_err(map)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        self.write_bytes(name, &bytes)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub system: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn finish(
        out: &mut OutputDir,
        experiment: &str,
        system: &str,
        config_sha256: String,
        seed: Option<u64>,
        wall_time_seconds: f64,
    ) -> Result<(), CliError> {
        let outputs = out
            .written()
            .iter()
            .map(|f| {
                let bytes = fs::read(out.path(f)).map_err(|e| CliError::io(&out.path(f), e))?;
                Ok(OutputEntry {
                    file: f.clone(),
                    sha256: sha256_hex(&bytes),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            experiment: experiment.into(),
            system: system.into(),
            config_sha256,
            seed,
            wall_time_seconds,
            outputs,
        };
        out.write_json("manifest.json", &manifest)
    }
}

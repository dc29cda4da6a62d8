//! Output directory handling and the run manifest.

use crate::CliError;
use cellfree_core::export::write_csv;
use cellfree_core::{Policy, SimConfig};
use serde::{Deserialize, Serialize};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Plan {
    LoadSweep {
        k_values: Vec<usize>,
        tau_p_values: Vec<usize>,
    },
    Compare {
        policies: Vec<Policy>,
        v_values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub plan: Plan,
    pub version: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub config: SimConfig,
    /// Output files relative to the output directory, manifest excluded.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn sweep_plan(&self) -> Option<(&Vec<usize>, &Vec<usize>)> {
        match &self.plan {
            Plan::LoadSweep { k_values, tau_p_values } => Some((k_values, tau_p_values)),
            Plan::Compare { .. } => None,
        }
    }

    pub fn compare_plan(&self) -> Option<(&Vec<Policy>, &Vec<f64>)> {
        match &self.plan {
            Plan::Compare { policies, v_values } => Some((policies, v_values)),
            Plan::LoadSweep { .. } => None,
        }
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Output directory that remembers what it wrote so a failed run can be
/// rolled back.
pub struct OutputDir {
    root: PathBuf,
    created_root: bool,
    files: Vec<String>,
}

impl OutputDir {
    pub fn open(root: &Path, force: bool) -> Result<Self, CliError> {
        let ctx = |what: &str| format!("{what} {}", root.display());
        let created_root = match fs::read_dir(root) {
            Ok(mut entries) => {
                if entries.next().is_some() && !force {
                    return Err(CliError::Config(format!(
                        "output directory {} is not empty (use --force to write into it)",
                        root.display()
                    )));
                }
                false
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                fs::create_dir_all(root).map_err(|e| CliError::io(ctx("creating"), e))?;
                true
            }
            Err(e) => return Err(CliError::io(ctx("reading"), e)),
        };
        Ok(Self {
            root: root.to_path_buf(),
            created_root,
            files: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
        let writer = self.create(name)?;
        write_csv(writer, rows).map_err(|e| CliError::io(format!("writing {name}"), std::io::Error::other(e)))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut writer = self.create(name)?;
        serde_json::to_writer_pretty(&mut writer, value)
            .map_err(|e| CliError::io(format!("writing {name}"), e.into()))?;
        writer
            .write_all(b"\n")
            .and_then(|_| writer.flush())
            .map_err(|e| CliError::io(format!("writing {name}"), e))
    }

    /// Writes the manifest listing every file written so far.
    pub fn finish(&mut self, plan: Plan, config: &SimConfig, started_unix: u64) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            plan,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            started_unix,
            finished_unix: unix_now(),
            config: config.clone(),
            files: self.files.clone(),
        };
        self.json(MANIFEST_FILE, &manifest)?;
        Ok(self.root.join(MANIFEST_FILE))
    }

    /// Removes everything this run wrote.
    pub fn discard(self) {
        for name in &self.files {
            let _ = fs::remove_file(self.root.join(name));
        }
        if self.created_root {
            let _ = fs::remove_dir(&self.root);
        }
    }
}

//! Run manifest: the full resolved configuration plus everything needed to
//! reproduce a command's outputs bit-exactly.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use wavecoder::formats::RecordingFormat;

use crate::config::RunConfig;

pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Output format for recording-producing commands.
    pub format: Option<RecordingFormat>,
    /// Input recording path (decode / render).
    pub recording: Option<PathBuf>,
    /// External protocol file, when one was given.
    pub protocol_file: Option<PathBuf>,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
    /// The fully resolved configuration, seed overrides applied.
    pub config: RunConfig,
}

impl Manifest {
    pub fn write(&self, out_dir: &Path) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating output dir {}", out_dir.display()))?;
        let path = out_dir.join(MANIFEST_NAME);
        let text = toml::to_string_pretty(self).context("serializing manifest")?;
        std::fs::write(&path, text)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

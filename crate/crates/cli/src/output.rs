//! Output directory: CSV data with '#' metadata lines, SVG plots and the run
//! manifest that ties them together.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub seed: u64,
    pub config: Value,
    /// File names relative to the manifest.
    pub outputs: Vec<String>,
    pub covering_table_sha256: String,
}

pub struct RunDir {
    dir: PathBuf,
    manifest: RunManifest,
}

impl RunDir {
    pub fn create(dir: &Path, subcommand: &str, config: Value, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(RunDir {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                subcommand: subcommand.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                seed,
                config,
                outputs: Vec::new(),
                covering_table_sha256: qtn::deployment::covering::covering_table_hash(),
            },
        })
    }

    pub fn manifest_name(&self) -> String {
        format!("{}.manifest.json", self.manifest.subcommand)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn meta(&self, extra: &[String]) -> String {
        let m = &self.manifest;
        let mut s = format!("# qtn {} {}\n", m.version, m.subcommand);
        s += &format!("# manifest: {}\n", self.manifest_name());
        s += &format!("# seed: {}\n", m.seed);
        s += &format!("# covering_table_sha256: {}\n", m.covering_table_sha256);
        s += &format!("# config: {}\n", serde_json::to_string(&m.config).expect("serializable"));
        for e in extra {
            s += &format!("# {e}\n");
        }
        s
    }

    /// Writes `body` (header row plus rows) under the metadata block.
    pub fn write_csv(&mut self, name: &str, extra_meta: &[String], body: &str) -> Result<(), CliError> {
        let mut text = self.meta(extra_meta);
        text.push_str(body);
        if !text.ends_with('\n') {
            text.push('\n');
        }
        self.write_raw(name, &text)
    }

    pub fn write_raw(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display())))?;
        self.manifest.outputs.push(name.into());
        Ok(())
    }

    /// Registers a file written by someone else, such as a plot.
    pub fn register(&mut self, name: &str) {
        self.manifest.outputs.push(name.into());
    }

    pub fn finish(self) -> Result<RunManifest, CliError> {
        let text = serde_json::to_string_pretty(&self.manifest).expect("serializable") + "\n";
        let p = self.path(&self.manifest_name());
        std::fs::write(&p, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display())))?;
        Ok(self.manifest)
    }
}

//! Run manifests, written next to every output as `<out>.manifest.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{sha256_file, sha256_hex};

/// What produced an output file. Wall time is reported on stderr only, so
/// identical runs give byte-identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    /// Input path as given on the command line -> sha256 of its contents.
    pub inputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: BTreeMap::new(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.into(), value.to_string());
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    pub fn path_for(out: &Path) -> PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    /// Write the manifest beside `out`; returns its hash.
    pub fn write_beside(&self, out: &Path) -> Result<String> {
        let path = Self::path_for(out);
        std::fs::write(&path, self.to_json()).map_err(Error::io(&path))?;
        Ok(self.hash())
    }
}

//! Run configuration: a TOML file whose keys can be overridden by
//! command-line flags. The resolved configuration is written next to
//! outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::ElementOrder;
use crate::error::{Error, Result};
use crate::infer::default_tau;

pub const DEFAULT_K: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Canonical JSONL training split.
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// In-file element layout of raw `####` files.
    pub element_order: ElementOrder,
    /// One category per line; defaults to the categories of `train`.
    pub taxonomy: Option<PathBuf>,
    /// Ranking report from `select-orders`.
    pub orders: Option<PathBuf>,
    /// Number of quad orders (and PPS candidates).
    pub k: usize,
    /// Vote threshold; `k / 2` when unset.
    pub tau: Option<f64>,
    pub seed: u64,
    pub pairwise: bool,
    /// Sample `k` pairwise candidates instead of using all 16.
    pub pps: bool,
    pub overall: bool,
    pub strict_spans: bool,
    pub beam: usize,
    pub max_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: None,
            dev: None,
            test: None,
            element_order: ElementOrder::default(),
            taxonomy: None,
            orders: None,
            k: DEFAULT_K,
            tau: None,
            seed: 42,
            pairwise: true,
            pps: false,
            overall: true,
            strict_spans: false,
            beam: 1,
            max_steps: 256,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or_else(|| default_tau(self.k))
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=24).contains(&self.k) {
            return Err(Error::Config(format!("k = {} is outside [1, 24]", self.k)));
        }
        if self.tau().is_nan() || self.tau() <= 0.0 {
            return Err(Error::Config(format!("tau = {} must be positive", self.tau())));
        }
        if self.pairwise && self.pps && !(4..=16).contains(&self.k) {
            return Err(Error::Config(format!("pps needs 4 <= k <= 16, got k = {}", self.k)));
        }
        if self.beam == 0 {
            return Err(Error::Config("beam must be at least 1".into()));
        }
        for (key, path) in [
            ("train", &self.train),
            ("dev", &self.dev),
            ("test", &self.test),
            ("taxonomy", &self.taxonomy),
            ("orders", &self.orders),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(Error::Config(format!("{key} path {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    /// Resolved configuration as TOML, with `tau` filled in.
    pub fn snapshot(&self) -> String {
        let mut resolved = self.clone();
        resolved.tau = Some(self.tau());
        toml::to_string_pretty(&resolved).expect("config serializes")
    }

    /// Write the snapshot to `<output>.config.toml`.
    pub fn write_snapshot(&self, output: &Path) -> Result<PathBuf> {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".config.toml");
        let path = output.with_file_name(name);
        std::fs::write(&path, self.snapshot()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

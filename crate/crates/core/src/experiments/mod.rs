//! Configuration, orchestration and output for the two pipelines: the
//! ratio scan over `p`, and corpus generation, map training and hit
//! profiles for the self-organizing map.

mod pipeline;
mod report;
mod table;

pub use pipeline::{
    classification_seed, corpus_plan, generate_corpus, run_rscan, run_som_pipeline, scan_map,
    som_config_for, train_map, CorpusItem, SomRun,
};
pub use report::{emit_report, write_report, ReportInputs};
pub use table::{
    format_float, read_profile_csv, read_responsive_csv, read_rscan_csv, read_slopes_csv, read_table,
    write_profile_csv, write_responsive_csv, write_rscan_csv, write_slopes_csv, ProfileMeta, SlopeRow,
    Table,
};

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::RingLatticeSpec;
use crate::som::Metric;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Rscan,
    SomTrain,
    SomScan,
    SomSlopes,
    Report,
}

/// Settings of the ratio scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RScanSettings {
    pub sizes: Vec<usize>,
    pub realizations: usize,
    pub graph_resamples: usize,
    pub window: f64,
}

impl Default for RScanSettings {
    fn default() -> Self {
        Self {
            sizes: vec![1000],
            realizations: 50,
            graph_resamples: 1,
            window: 0.25,
        }
    }
}

/// Settings of the map pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SomSettings {
    pub sizes: Vec<usize>,
    pub corpus_size: usize,
    pub rows: usize,
    pub cols: usize,
    pub alpha0: f64,
    pub sigma0: f64,
    /// Training steps; one pass over the corpus when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    pub metric: Metric,
    pub scan_count: usize,
    pub gain_threshold: f64,
}

impl Default for SomSettings {
    fn default() -> Self {
        Self {
            sizes: vec![16, 20, 56, 84],
            corpus_size: 100_000,
            rows: 10,
            cols: 10,
            alpha0: 0.5,
            sigma0: 1.0,
            iterations: None,
            metric: Metric::WeightSpace,
            scan_count: 500,
            gain_threshold: crate::som::DEFAULT_GAIN_THRESHOLD,
        }
    }
}

impl SomSettings {
    pub fn training_steps(&self) -> usize {
        self.iterations.unwrap_or(self.corpus_size)
    }
}

/// The effective configuration of a run. Every output file echoes a hash
/// of its canonical TOML form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub k: usize,
    pub p_lo: f64,
    pub p_hi: f64,
    /// Points of the log-spaced `p` grid.
    pub grid: usize,
    pub rscan: RScanSettings,
    pub som: SomSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::default(),
            seed: 0,
            k: 2,
            p_lo: 1e-4,
            p_hi: 1.0,
            grid: 20,
            rscan: RScanSettings::default(),
            som: SomSettings::default(),
        }
    }
}

impl ExperimentConfig {
    /// Small sizes for quick checks: the ratio scan at `N = 256` and a
    /// `10^4` sample corpus.
    pub fn fast() -> Self {
        let mut config = Self::default();
        config.rscan.sizes = vec![256];
        config.som.corpus_size = 10_000;
        config
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// First line of every output file, without the comment marker.
    pub fn provenance_line(&self) -> String {
        format!("chaos-probe {TOOL_VERSION} config={} seed={}", self.hash(), self.seed)
    }

    pub fn p_grid(&self) -> Result<Vec<f64>> {
        crate::spectra::log_grid(self.p_lo, self.p_hi, self.grid)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if !(self.p_lo > 0.0 && self.p_lo < self.p_hi && self.p_hi <= 1.0) {
            return bad(format!("p interval [{}, {}] must satisfy 0 < lo < hi <= 1", self.p_lo, self.p_hi));
        }
        if self.grid < 2 {
            return bad("grid needs at least 2 points".into());
        }
        let r = &self.rscan;
        if r.sizes.is_empty() {
            return bad("rscan.sizes is empty".into());
        }
        if r.realizations == 0 || r.graph_resamples == 0 {
            return bad("rscan.realizations and rscan.graph_resamples must be positive".into());
        }
        if !(r.window > 0.0 && r.window <= 1.0) {
            return bad(format!("rscan.window = {} outside (0, 1]", r.window));
        }
        let s = &self.som;
        if s.sizes.is_empty() {
            return bad("som.sizes is empty".into());
        }
        if s.corpus_size == 0 || s.rows == 0 || s.cols == 0 || s.scan_count == 0 || s.iterations == Some(0) {
            return bad("som counts (corpus_size, rows, cols, scan_count, iterations) must be positive".into());
        }
        if !(s.alpha0 > 0.0 && s.alpha0 <= 1.0) {
            return bad(format!("som.alpha0 = {} outside (0, 1]", s.alpha0));
        }
        if !(s.sigma0 > 0.0 && s.sigma0.is_finite()) {
            return bad(format!("som.sigma0 = {} must be positive", s.sigma0));
        }
        if !(s.gain_threshold > 0.0 && s.gain_threshold.is_finite()) {
            return bad(format!("som.gain_threshold = {} must be positive", s.gain_threshold));
        }
        for &n in r.sizes.iter().chain(&s.sizes) {
            RingLatticeSpec::new(n, self.k).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

//! JSON run configurations. Every struct rejects unknown keys.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use vsql::data::{MnistSpec, NoisyParams, QsdParams};
use vsql::shadow::{build_ansatz_layered, build_ansatz_mnist, build_ansatz_qsd, build_ansatz_ry_cnot, ShadowCircuit};
use vsql::train::TrainConfig;

use crate::CliError;

pub fn read_json<C: DeserializeOwned>(path: &Path) -> Result<C, CliError> {
    let text = fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_slice(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
}

/// Where training and evaluation samples come from.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    QsdBinary(#[serde(default)] QsdParams),
    QsdThree(#[serde(default)] QsdParams),
    Noisy(#[serde(default)] NoisyParams),
    Mnist(#[serde(default)] MnistSpec),
    /// A dataset JSON written by `vsql gen`.
    File(PathBuf),
}

impl DataSpec {
    /// Applies a `--seed` override to generated data.
    pub fn reseed(&mut self, seed: u64) {
        match self {
            DataSpec::QsdBinary(p) | DataSpec::QsdThree(p) => p.seed = seed,
            DataSpec::Noisy(p) => p.seed = seed,
            DataSpec::Mnist(m) => m.seed = seed,
            DataSpec::File(_) => {}
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzKind {
    /// Single `RY` on one qubit.
    Qsd,
    /// `RZ–RY–RZ` then `depth` CNOT + `RY` blocks.
    Mnist,
    RyCnot,
    Layered,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    pub kind: AnsatzKind,
    #[serde(default = "one")]
    pub n_qsc: usize,
    #[serde(default = "one")]
    pub depth: usize,
    #[serde(default = "one")]
    pub n_s: usize,
}

impl AnsatzSpec {
    pub fn circuits(&self) -> vsql::Result<Vec<ShadowCircuit>> {
        let c = match self.kind {
            AnsatzKind::Qsd => build_ansatz_qsd(),
            AnsatzKind::Mnist => build_ansatz_mnist(self.n_qsc, self.depth)?,
            AnsatzKind::RyCnot => build_ansatz_ry_cnot(self.n_qsc)?,
            AnsatzKind::Layered => build_ansatz_layered(self.n_qsc, self.depth)?,
        };
        Ok(vec![c; self.n_s])
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRun {
    pub data: DataSpec,
    pub ansatz: AnsatzSpec,
    #[serde(default)]
    pub train: TrainConfig,
    /// Defaults to the checkpoint path with a `.metrics.csv` suffix.
    #[serde(default)]
    pub metrics_out: Option<PathBuf>,
    /// Independent runs with seeds `seed, seed + 1, …`.
    #[serde(default = "one")]
    pub repeats: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineRun {
    #[serde(default)]
    pub data: MnistSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default)]
    pub report_out: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Theorem3Run {
    pub theta_points: usize,
    pub uv_points: usize,
    pub report_out: Option<PathBuf>,
}

impl Default for Theorem3Run {
    fn default() -> Self {
        Self {
            theta_points: 100,
            uv_points: 100,
            report_out: None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Corollary1Run {
    pub report_out: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BpScanRun {
    pub n_list: Vec<usize>,
    pub n_qsc_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub csv_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
}

impl Default for BpScanRun {
    fn default() -> Self {
        Self {
            n_list: vec![10, 20, 100],
            n_qsc_list: vec![2, 4],
            trials: 2000,
            seed: 0,
            csv_out: None,
            report_out: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeRun {
    pub n: usize,
    pub n_qsc: usize,
    pub grid_size: usize,
    pub seed: u64,
    pub csv_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
}

impl Default for LandscapeRun {
    fn default() -> Self {
        Self {
            n: 10,
            n_qsc: 2,
            grid_size: 50,
            seed: 0,
            csv_out: None,
            report_out: None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MnistFetch {
    /// Base URL serving the four gzipped IDX files; only used for missing files.
    pub source_url: Option<String>,
}

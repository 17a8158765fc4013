use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MetricRow, Model, TrainConfig};
use crate::error::{Error, Result};
use crate::head::ClassifierHead;
use crate::scalar::Real;
use crate::shadow::{ShadowCircuit, ShadowEnsemble};

pub const FORMAT_VERSION: u32 = 1;
const QUBIT_ORDER: &str = "big-endian";
pub const METRICS_HEADER: &str = "iteration,loss,train_acc,val_acc";

/// Everything needed to rebuild a trained model, plus how it was trained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct Checkpoint<T: Real> {
    pub format_version: u32,
    pub qubit_order: String,
    pub n_qubits: usize,
    pub num_classes: usize,
    pub circuits: Vec<ShadowCircuit>,
    pub thetas: Vec<Vec<T>>,
    pub head: ClassifierHead<T>,
    pub config: TrainConfig,
    pub history: Vec<MetricRow>,
}

impl<T: Real> Checkpoint<T> {
    pub fn from_model(model: &Model<T>, config: &TrainConfig, history: &[MetricRow]) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            qubit_order: QUBIT_ORDER.into(),
            n_qubits: model.n_qubits,
            num_classes: model.num_classes,
            circuits: model.ensemble.circuits().to_vec(),
            thetas: model.ensemble.thetas().to_vec(),
            head: model.head.clone(),
            config: config.clone(),
            history: history.to_vec(),
        }
    }

    pub fn to_model(&self) -> Result<Model<T>> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::config(format!(
                "checkpoint format {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.qubit_order != QUBIT_ORDER {
            return Err(Error::config(format!("unknown qubit order {:?}", self.qubit_order)));
        }
        let ensemble = ShadowEnsemble::new(self.circuits.clone(), self.thetas.clone())?;
        Model::new(self.n_qubits, self.num_classes, ensemble, self.head.clone())
    }

    pub fn n_params(&self) -> usize {
        self.circuits.iter().map(ShadowCircuit::n_params).sum::<usize>() + self.head.n_params()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Reads and fully validates a checkpoint.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Self = serde_json::from_slice(&text)?;
        ckpt.to_model()?;
        Ok(ckpt)
    }
}

/// `iteration,loss,train_acc,val_acc`; a missing validation accuracy is an empty field.
pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let val = r.val_acc.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", r.iteration, r.loss, r.train_acc, val);
    }
    out
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricRow]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, metrics_csv(rows)).map_err(|e| Error::io(path, e))
}

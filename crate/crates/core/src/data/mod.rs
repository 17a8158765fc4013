//! Labelled datasets: the two- and three-family state discrimination sets,
//! noisy high-fidelity pairs, and MNIST with amplitude encoding.

mod mnist;
mod quantum;

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::QuantumState;
use crate::scalar::Real;

pub use mnist::{
    encode_amplitude, filter_binary_01, load_mnist, mnist_dir, parse_idx, pixel_vector, read_idx, stratified_subset, Idx,
    MnistSpec, MnistSplit, MnistTask, IMAGE_PIXELS, MNIST_FILES,
};
pub use quantum::{
    gen_noisy_pair, gen_qsd_binary, gen_qsd_three, haar_unitary, noisy_base_states, psi_t, psi_u, psi_v, rho_v,
    NoisePauli, NoisyParams, QsdParams,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct LabeledState<T: Real> {
    pub label: usize,
    pub state: QuantumState<T>,
}

/// Train and held-out splits over a common register size and label set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct Dataset<T: Real> {
    pub n_qubits: usize,
    pub num_classes: usize,
    pub train: Vec<LabeledState<T>>,
    pub test: Vec<LabeledState<T>>,
}

impl<T: Real> Dataset<T> {
    pub fn new(num_classes: usize, train: Vec<LabeledState<T>>, test: Vec<LabeledState<T>>) -> Result<Self> {
        let n_qubits = train
            .first()
            .or(test.first())
            .map(|s| s.state.n_qubits())
            .ok_or_else(|| Error::domain("dataset has no samples"))?;
        let ds = Self {
            n_qubits,
            num_classes,
            train,
            test,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::config("a dataset needs at least two classes"));
        }
        for s in self.train.iter().chain(&self.test) {
            if s.state.n_qubits() != self.n_qubits {
                return Err(Error::config(format!(
                    "sample on {} qubits in a {}-qubit dataset",
                    s.state.n_qubits(),
                    self.n_qubits
                )));
            }
            if s.label >= self.num_classes {
                return Err(Error::domain(format!(
                    "label {} outside 0..{}",
                    s.label, self.num_classes
                )));
            }
        }
        Ok(())
    }

    /// Per-class counts over both splits.
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.num_classes];
        for s in self.train.iter().chain(&self.test) {
            h[s.label] += 1;
        }
        h
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_vec(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read(path).map_err(|e| Error::io(path, e))?;
        let ds: Self = serde_json::from_slice(&text)?;
        ds.validate()?;
        Ok(ds)
    }
}

/// Seeded shuffle, then the first `round(fraction·N)` samples go to training.
pub(crate) fn shuffle_split<T: Real, R: Rng + ?Sized>(
    mut samples: Vec<LabeledState<T>>,
    train_fraction: f64,
    rng: &mut R,
) -> (Vec<LabeledState<T>>, Vec<LabeledState<T>>) {
    samples.shuffle(rng);
    let cut = (train_fraction * samples.len() as f64).round() as usize;
    let test = samples.split_off(cut.min(samples.len()));
    (samples, test)
}

pub(crate) fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("{name} = {v} lies outside [0, 1]")));
    }
    Ok(())
}

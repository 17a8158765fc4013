//! Training loop, inference, optimizers and checkpoints.

mod baseline;
mod checkpoint;
mod optim;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{encode_amplitude, Dataset, LabeledState, MnistSplit};
use crate::error::{Error, Result};
use crate::grad::{loss_grad_with, BatchItem, GradientObservables};
use crate::head::{forward, predict_label, ClassifierHead, LossKind, Prediction};
use crate::qcore::{stream_key, QuantumState, ShotConfig};
use crate::scalar::Real;
use crate::shadow::{features_from_rdms, ShadowCircuit, ShadowEnsemble, WindowRdms};

pub use baseline::{classical_baseline_fit, BaselineOutcome};
pub use checkpoint::{write_metrics_csv, Checkpoint, FORMAT_VERSION, METRICS_HEADER};
pub use optim::{adam_step, sgd_step, AdamState, Optimizer, OptimizerKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaInit {
    #[default]
    #[serde(rename = "UNIFORM_0_2PI")]
    Uniform0To2Pi,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeadInit {
    #[default]
    #[serde(rename = "GAUSSIAN_STD_NORMAL")]
    GaussianStdNormal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    pub shot_cfg: ShotConfig,
    /// Stop once consecutive epoch-mean losses differ by at most this; 0 disables.
    pub stop_tolerance: f64,
    pub theta_init: ThetaInit,
    pub head_init: HeadInit,
    /// Iterations between metric rows; the final iteration always gets one.
    pub eval_every: usize,
    /// Hard cap on parameter updates across all epochs.
    pub max_iterations: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.03,
            batch_size: 1,
            epochs: 1,
            optimizer: OptimizerKind::Adam,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            shot_cfg: ShotConfig::exact(),
            stop_tolerance: 0.0,
            theta_init: ThetaInit::Uniform0To2Pi,
            head_init: HeadInit::GaussianStdNormal,
            eval_every: 1,
            max_iterations: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.eval_every == 0 {
            return Err(Error::config("batch_size, epochs and eval_every must be at least 1"));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::config("max_iterations must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || !(self.adam_eps > 0.0) {
            return Err(Error::config("Adam needs β1, β2 in [0, 1) and ε > 0"));
        }
        if !(self.stop_tolerance >= 0.0) {
            return Err(Error::config("stop_tolerance must be non-negative"));
        }
        self.shot_cfg.validate()
    }
}

/// Window marginals and labels: everything training and inference read.
#[derive(Clone, Debug)]
pub struct PreparedSet<T: Real> {
    pub n_qubits: usize,
    pub rdms: Vec<WindowRdms<T>>,
    pub labels: Vec<usize>,
}

impl<T: Real> PreparedSet<T> {
    pub fn from_states(samples: &[LabeledState<T>], widths: &[usize]) -> Result<Self> {
        let n_qubits = samples.first().map_or(0, |s| s.state.n_qubits());
        let rdms = samples
            .par_iter()
            .map(|s| WindowRdms::prepare(&s.state, widths))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_qubits,
            rdms,
            labels: samples.iter().map(|s| s.label).collect(),
        })
    }

    /// Builds marginals straight from lazily produced states, so the full
    /// register vectors never need to be held at once.
    pub fn from_fn<F>(len: usize, widths: &[usize], make: F) -> Result<Self>
    where
        F: Fn(usize) -> Result<(QuantumState<T>, usize)> + Sync,
    {
        let rows = (0..len)
            .into_par_iter()
            .map(|i| {
                let (state, label) = make(i)?;
                Ok((state.n_qubits(), WindowRdms::prepare(&state, widths)?, label))
            })
            .collect::<Result<Vec<_>>>()?;
        let n_qubits = rows.first().map_or(0, |r| r.0);
        if rows.iter().any(|r| r.0 != n_qubits) {
            return Err(Error::config("samples differ in qubit count"));
        }
        let (rdms, labels) = rows.into_iter().map(|(_, r, l)| (r, l)).unzip();
        Ok(Self { n_qubits, rdms, labels })
    }

    /// Amplitude-encodes every image; the 10-qubit states are dropped once
    /// their marginals are taken.
    pub fn from_mnist(split: &MnistSplit, widths: &[usize]) -> Result<Self> {
        Self::from_fn(split.len(), widths, |i| {
            Ok((QuantumState::Pure(encode_amplitude(&split.images[i])?), split.labels[i] as usize))
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Shadow circuits with their angles and the classifier head.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T: Real> {
    pub n_qubits: usize,
    pub num_classes: usize,
    pub ensemble: ShadowEnsemble<T>,
    pub head: ClassifierHead<T>,
}

/// Output width of the head: a single sigmoid for two classes.
pub fn head_outputs(num_classes: usize) -> usize {
    if num_classes == 2 {
        1
    } else {
        num_classes
    }
}

impl<T: Real> Model<T> {
    pub fn new(n_qubits: usize, num_classes: usize, ensemble: ShadowEnsemble<T>, head: ClassifierHead<T>) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::config("at least two classes are required"));
        }
        let features = ensemble.n_features(n_qubits)?;
        if head.n_features() != features || head.k() != head_outputs(num_classes) {
            return Err(Error::config(format!(
                "head is {}×{} but the model needs {}×{features}",
                head.k(),
                head.n_features(),
                head_outputs(num_classes)
            )));
        }
        Ok(Self { n_qubits, num_classes, ensemble, head })
    }

    /// Angles uniform in `[0, 2π)`, head entries standard normal, all from `seed`.
    pub fn init(n_qubits: usize, num_classes: usize, circuits: Vec<ShadowCircuit>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ensemble = ShadowEnsemble::random(circuits, &mut rng)?;
        let features = ensemble.n_features(n_qubits)?;
        let head = ClassifierHead::gaussian(head_outputs(num_classes), features, &mut rng)?;
        Self::new(n_qubits, num_classes, ensemble, head)
    }

    pub fn n_params(&self) -> usize {
        self.ensemble.n_circuit_params() + self.head.n_params()
    }

    pub fn loss_kind(&self) -> LossKind {
        self.head.loss_kind()
    }

    /// Angles, then `W` row-major, then `b`.
    pub fn flat_params(&self) -> Vec<T> {
        let mut p: Vec<T> = self.ensemble.thetas().iter().flatten().copied().collect();
        p.extend_from_slice(self.head.weights());
        p.extend_from_slice(self.head.bias());
        p
    }

    fn set_flat_params(&mut self, p: &[T]) {
        let mut it = p.iter().copied();
        for t in self.ensemble.thetas_mut().iter_mut().flatten() {
            *t = it.next().expect("length checked");
        }
        for w in self.head.weights_mut() {
            *w = it.next().expect("length checked");
        }
        for b in self.head.bias_mut() {
            *b = it.next().expect("length checked");
        }
    }

    pub fn predict(&self, rdms: &WindowRdms<T>, shots: &ShotConfig, key: u64) -> Result<Prediction<T>> {
        let obs = self.ensemble.observables()?;
        self.predict_with(rdms, &obs, shots, key)
    }

    fn predict_with(
        &self,
        rdms: &WindowRdms<T>,
        obs: &[crate::linalg::CMatrix<T>],
        shots: &ShotConfig,
        key: u64,
    ) -> Result<Prediction<T>> {
        let fm = features_from_rdms(rdms, &self.ensemble, obs, shots, key)?;
        forward(&fm.flatten(), &self.head)
    }

    fn check_set(&self, set: &PreparedSet<T>) -> Result<()> {
        if set.n_qubits != self.n_qubits {
            return Err(Error::config(format!(
                "model expects {} qubits, data has {}",
                self.n_qubits, set.n_qubits
            )));
        }
        if let Some(&bad) = set.labels.iter().find(|&&l| l >= self.num_classes) {
            return Err(Error::domain(format!("label {bad} outside 0..{}", self.num_classes)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    pub labels: Vec<usize>,
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Stream tag separating inference draws from training draws.
const INFER_TAG: u64 = 0x1F;

pub fn infer<T: Real>(model: &Model<T>, set: &PreparedSet<T>, shots: &ShotConfig) -> Result<Inference> {
    if set.is_empty() {
        return Err(Error::domain("cannot evaluate an empty dataset"));
    }
    model.check_set(set)?;
    let obs = model.ensemble.observables()?;
    let labels = set
        .rdms
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            model
                .predict_with(r, &obs, shots, stream_key(&[INFER_TAG, i as u64]))
                .map(|p| predict_label(&p))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut confusion = vec![vec![0; model.num_classes]; model.num_classes];
    let mut correct = 0;
    for (&p, &y) in labels.iter().zip(&set.labels) {
        confusion[y][p] += 1;
        correct += usize::from(p == y);
    }
    Ok(Inference {
        labels,
        accuracy: correct as f64 / set.len() as f64,
        confusion,
    })
}

/// One row of the learning curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub iteration: usize,
    /// Mean mini-batch loss over the iterations since the previous row.
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FitOutcome<T: Real> {
    pub model: Model<T>,
    pub history: Vec<MetricRow>,
    pub iterations: usize,
    pub stopped_early: bool,
}

impl<T: Real> FitOutcome<T> {
    /// First iteration whose validation accuracy reached `target`.
    pub fn first_val_at_least(&self, target: f64) -> Option<usize> {
        self.history
            .iter()
            .find(|r| r.val_acc.is_some_and(|a| a >= target))
            .map(|r| r.iteration)
    }
}

const TRAIN_TAG: u64 = 0x7A;
pub(crate) const SHUFFLE_TAG: u64 = 0x5F;

/// Mini-batch training on prepared marginals.
pub fn fit_prepared<T: Real>(
    mut model: Model<T>,
    train: &PreparedSet<T>,
    val: Option<&PreparedSet<T>>,
    cfg: &TrainConfig,
) -> Result<FitOutcome<T>> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::domain("training set is empty"));
    }
    model.check_set(train)?;
    if let Some(v) = val {
        model.check_set(v)?;
    }
    let shots = cfg.shot_cfg;
    let kind = model.loss_kind();
    let mut params = model.flat_params();
    let mut opt = Optimizer::new(cfg.optimizer, params.len());
    let mut history = Vec::new();
    let mut iteration = 0usize;
    let mut interval = (0.0f64, 0usize);
    let mut prev_epoch_loss: Option<f64> = None;
    let mut stopped_early = false;
    let cap = cfg.max_iterations.unwrap_or(usize::MAX);

    let record = |model: &Model<T>, iteration: usize, interval: &mut (f64, usize)| -> Result<MetricRow> {
        let train_acc = infer(model, train, &shots)?.accuracy;
        let val_acc = val.map(|v| infer(model, v, &shots).map(|r| r.accuracy)).transpose()?;
        let row = MetricRow {
            iteration,
            loss: interval.0 / interval.1.max(1) as f64,
            train_acc,
            val_acc,
        };
        *interval = (0.0, 0);
        Ok(row)
    };

    'epochs: for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream_key(&[SHUFFLE_TAG, epoch as u64]));
        order.shuffle(&mut rng);
        let mut epoch_loss = (0.0f64, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            if iteration >= cap {
                break 'epochs;
            }
            let obs = GradientObservables::new(&model.ensemble)?;
            let items: Vec<_> = chunk
                .iter()
                .map(|&i| BatchItem {
                    rdms: &train.rdms[i],
                    label: train.labels[i],
                    key: stream_key(&[TRAIN_TAG, i as u64, iteration as u64]),
                })
                .collect();
            let g = loss_grad_with(&items, &model.ensemble, &model.head, kind, &shots, &obs)?;
            let mut grads: Vec<T> = g.theta.iter().flatten().copied().collect();
            grads.extend(g.w);
            grads.extend(g.b);
            opt.step(&mut params, &grads, cfg)?;
            model.set_flat_params(&params);
            iteration += 1;
            let l = g.loss.as_f64();
            interval.0 += l;
            interval.1 += 1;
            epoch_loss.0 += l;
            epoch_loss.1 += 1;
            if iteration % cfg.eval_every == 0 {
                history.push(record(&model, iteration, &mut interval)?);
            }
        }
        let mean = epoch_loss.0 / epoch_loss.1.max(1) as f64;
        if cfg.stop_tolerance > 0.0 {
            if let Some(prev) = prev_epoch_loss {
                if (mean - prev).abs() <= cfg.stop_tolerance {
                    stopped_early = true;
                    break;
                }
            }
        }
        prev_epoch_loss = Some(mean);
    }
    if history.last().map_or(true, |r| r.iteration != iteration) {
        history.push(record(&model, iteration, &mut interval)?);
    }
    Ok(FitOutcome {
        model,
        history,
        iterations: iteration,
        stopped_early,
    })
}

/// Prepares marginals for `circuits`, initialises from `cfg.seed` and trains on
/// the dataset's train split, validating on its held-out split.
pub fn fit<T: Real>(dataset: &Dataset<T>, circuits: Vec<ShadowCircuit>, cfg: &TrainConfig) -> Result<(Checkpoint<T>, FitOutcome<T>)> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::domain("training set is empty"));
    }
    let model = Model::init(dataset.n_qubits, dataset.num_classes, circuits, cfg.seed)?;
    let widths = model.ensemble.widths();
    let train = PreparedSet::from_states(&dataset.train, &widths)?;
    let val = if dataset.test.is_empty() {
        None
    } else {
        Some(PreparedSet::from_states(&dataset.test, &widths)?)
    };
    let outcome = fit_prepared(model, &train, val.as_ref(), cfg)?;
    let ckpt = Checkpoint::from_model(&outcome.model, cfg, &outcome.history);
    Ok((ckpt, outcome))
}

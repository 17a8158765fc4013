//! Single fully-connected layer on top of the shadow features.
//!
//! `K = 1` is the binary head: sigmoid output, half mean-squared-error loss,
//! label 1 iff the output is at least 0.5. `K ≥ 2` uses softmax with
//! cross-entropy and predicts the arg-max (lowest index on ties).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Probabilities below this are clamped before taking logarithms.
const LOG_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(ŷ − y)²/2` on a sigmoid output.
    Mse,
    /// `−Σ_k y_k log ŷ_k` on a softmax output.
    CrossEntropy,
}

impl LossKind {
    pub fn for_outputs(k: usize) -> Self {
        if k == 1 {
            LossKind::Mse
        } else {
            LossKind::CrossEntropy
        }
    }
}

/// Weights `W` (`K × F`, row-major) and biases `b` (`K`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "HeadRepr<T>", into = "HeadRepr<T>")]
pub struct ClassifierHead<T: Real> {
    k: usize,
    f: usize,
    w: Vec<T>,
    b: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct HeadRepr<T: Real> {
    k: usize,
    f: usize,
    w: Vec<T>,
    b: Vec<T>,
}

impl<T: Real> TryFrom<HeadRepr<T>> for ClassifierHead<T> {
    type Error = Error;

    fn try_from(r: HeadRepr<T>) -> Result<Self> {
        ClassifierHead::new(r.k, r.f, r.w, r.b)
    }
}

impl<T: Real> From<ClassifierHead<T>> for HeadRepr<T> {
    fn from(h: ClassifierHead<T>) -> Self {
        HeadRepr {
            k: h.k,
            f: h.f,
            w: h.w,
            b: h.b,
        }
    }
}

impl<T: Real> ClassifierHead<T> {
    pub fn new(k: usize, f: usize, w: Vec<T>, b: Vec<T>) -> Result<Self> {
        if k == 0 || f == 0 {
            return Err(Error::config("head needs K ≥ 1 and at least one feature"));
        }
        if w.len() != k * f || b.len() != k {
            return Err(Error::config(format!(
                "head shapes: W has {} entries (want {}), b has {} (want {k})",
                w.len(),
                k * f,
                b.len()
            )));
        }
        if w.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::config("head parameters must be finite"));
        }
        Ok(Self { k, f, w, b })
    }

    pub fn zeros(k: usize, f: usize) -> Result<Self> {
        Self::new(k, f, vec![T::zero(); k * f], vec![T::zero(); k])
    }

    /// All weights and biases drawn from the standard normal distribution.
    pub fn gaussian<R: Rng + ?Sized>(k: usize, f: usize, rng: &mut R) -> Result<Self> {
        let mut draw = || T::lit(StandardNormal.sample(rng));
        let w = (0..k * f).map(|_| draw()).collect();
        let b = (0..k).map(|_| draw()).collect();
        Self::new(k, f, w, b)
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.f
    }

    #[inline]
    pub fn weights(&self) -> &[T] {
        &self.w
    }

    #[inline]
    pub fn bias(&self) -> &[T] {
        &self.b
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.w
    }

    pub fn bias_mut(&mut self) -> &mut [T] {
        &mut self.b
    }

    #[inline]
    pub fn weight(&self, j: usize, i: usize) -> T {
        self.w[j * self.f + i]
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn loss_kind(&self) -> LossKind {
        LossKind::for_outputs(self.k)
    }

    /// Number of distinct labels the head can emit.
    pub fn n_classes(&self) -> usize {
        if self.k == 1 {
            2
        } else {
            self.k
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction<T> {
    pub logits: Vec<T>,
    pub probs: Vec<T>,
}

pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

pub fn softmax<T: Real>(z: &[T]) -> Vec<T> {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `logits = W·o + b`, then sigmoid (`K = 1`) or softmax.
pub fn forward<T: Real>(features: &[T], head: &ClassifierHead<T>) -> Result<Prediction<T>> {
    if features.len() != head.f {
        return Err(Error::config(format!(
            "head expects {} features, got {}",
            head.f,
            features.len()
        )));
    }
    let logits: Vec<T> = (0..head.k)
        .map(|j| {
            let row = &head.w[j * head.f..(j + 1) * head.f];
            row.iter().zip(features).map(|(&w, &o)| w * o).sum::<T>() + head.b[j]
        })
        .collect();
    let probs = if head.k == 1 {
        vec![sigmoid(logits[0])]
    } else {
        softmax(&logits)
    };
    Ok(Prediction { logits, probs })
}

fn check_label<T>(pred: &Prediction<T>, label: usize) -> Result<()> {
    let classes = if pred.probs.len() == 1 { 2 } else { pred.probs.len() };
    if label >= classes {
        return Err(Error::domain(format!("label {label} invalid for {classes} classes")));
    }
    Ok(())
}

/// Per-sample loss; batch means of these reproduce the `1/(2N)`-normalised
/// squared error and the `1/N` cross-entropy.
pub fn loss<T: Real>(pred: &Prediction<T>, label: usize) -> Result<T> {
    check_label(pred, label)?;
    if pred.probs.len() == 1 {
        let d = pred.probs[0] - T::lit(label as f64);
        Ok(d * d * T::lit(0.5))
    } else {
        Ok(-pred.probs[label].max(T::lit(LOG_FLOOR)).ln())
    }
}

/// Cross-entropy (or squared error for `K = 1`) against an explicit one-hot target.
pub fn loss_one_hot<T: Real>(pred: &Prediction<T>, target: &[T]) -> Result<T> {
    let label = one_hot_index(target)?;
    if pred.probs.len() != 1 && target.len() != pred.probs.len() {
        return Err(Error::domain(format!(
            "one-hot target of length {} for {} classes",
            target.len(),
            pred.probs.len()
        )));
    }
    loss(pred, label)
}

/// Index of the single 1 in a 0/1 vector.
pub fn one_hot_index<T: Real>(target: &[T]) -> Result<usize> {
    let mut hot = None;
    for (i, &v) in target.iter().enumerate() {
        if v == T::one() {
            if hot.replace(i).is_some() {
                return Err(Error::domain("one-hot target has several ones"));
            }
        } else if v != T::zero() {
            return Err(Error::domain(format!("one-hot entry {v} is neither 0 nor 1")));
        }
    }
    hot.ok_or_else(|| Error::domain("one-hot target has no one"))
}

pub fn one_hot<T: Real>(label: usize, k: usize) -> Vec<T> {
    (0..k).map(|j| if j == label { T::one() } else { T::zero() }).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadGradient<T> {
    /// `∂L/∂W`, row-major `K × F`.
    pub w: Vec<T>,
    pub b: Vec<T>,
    /// `∂L/∂o_i`, chained into the circuit-parameter gradient.
    pub features: Vec<T>,
}

/// Closed-form gradients of [`loss`] through [`forward`].
///
/// Binary: with `δ = (ŷ − y)·ŷ(1 − ŷ)`, `∂L/∂w_i = δ·o_i`, `∂L/∂b = δ`,
/// `∂L/∂o_i = δ·w_i`. Softmax: with `δ_j = ŷ_j − y_j`, `∂L/∂W_ji = δ_j·o_i`,
/// `∂L/∂b_j = δ_j`, `∂L/∂o_i = Σ_j δ_j·W_ji`.
pub fn head_backward<T: Real>(
    features: &[T],
    head: &ClassifierHead<T>,
    pred: &Prediction<T>,
    label: usize,
) -> Result<HeadGradient<T>> {
    if features.len() != head.f || pred.probs.len() != head.k {
        return Err(Error::config("feature or prediction shape does not match the head"));
    }
    check_label(pred, label)?;
    let delta: Vec<T> = if head.k == 1 {
        let y_hat = pred.probs[0];
        vec![(y_hat - T::lit(label as f64)) * y_hat * (T::one() - y_hat)]
    } else {
        pred.probs
            .iter()
            .enumerate()
            .map(|(j, &p)| if j == label { p - T::one() } else { p })
            .collect()
    };
    let mut w = Vec::with_capacity(head.k * head.f);
    for &d in &delta {
        w.extend(features.iter().map(|&o| d * o));
    }
    let feat = (0..head.f)
        .map(|i| delta.iter().enumerate().map(|(j, &d)| d * head.weight(j, i)).sum())
        .collect();
    Ok(HeadGradient {
        w,
        b: delta,
        features: feat,
    })
}

/// Binary: 1 iff `ŷ ≥ 0.5`. Multi-class: arg-max with ties to the lowest index.
pub fn predict_label<T: Real>(pred: &Prediction<T>) -> usize {
    if pred.probs.len() == 1 {
        usize::from(pred.probs[0] >= T::lit(0.5))
    } else {
        let mut best = 0;
        for (j, &p) in pred.probs.iter().enumerate().skip(1) {
            if p > pred.probs[best] {
                best = j;
            }
        }
        best
    }
}

/// Binary head separating two feature vectors that differ in at least one entry.
///
/// Picks the most different entry `i`, sets `w_i = ±1` (sign chosen so the
/// first vector lands below 0.5) and `b = −w_i (o_i⁰ + o_i¹)/2`.
pub fn distinguishing_head<T: Real>(label0: &[T], label1: &[T]) -> Option<ClassifierHead<T>> {
    if label0.len() != label1.len() || label0.is_empty() {
        return None;
    }
    let (i, gap) = label0
        .iter()
        .zip(label1)
        .map(|(a, b)| *b - *a)
        .enumerate()
        .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap_or(std::cmp::Ordering::Equal))?;
    if gap == T::zero() {
        return None;
    }
    let sign = gap.signum();
    let mut w = vec![T::zero(); label0.len()];
    w[i] = sign;
    let b = -sign * (label0[i] + label1[i]) * T::lit(0.5);
    ClassifierHead::new(1, label0.len(), w, vec![b]).ok()
}

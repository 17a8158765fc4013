//! Gradients of shadow features and of the training loss.
//!
//! The parameter-shift rule is the production path. The commutator form and
//! central finite differences exist to cross-check it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::head::{forward, head_backward, loss, predict_label, ClassifierHead, LossKind};
use crate::linalg::CMatrix;
use crate::qcore::{
    circuit_unitary, partial_trace_window, sample_expectation, stream_key, QuantumState, ShotConfig,
    Window,
};
use crate::scalar::{creal, Real};
use crate::shadow::{expect, features_from_rdms, heisenberg, ShadowCircuit, ShadowEnsemble, WindowRdms};

/// `∂o_{s,i}/∂θ_{s,l}` indexed `[s][i][l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureGradient<T> {
    pub values: Vec<Vec<Vec<T>>>,
}

fn locate<'a, T: Real>(
    input: &QuantumState<T>,
    ensemble: &'a ShadowEnsemble<T>,
    s: usize,
    i: usize,
    l: usize,
) -> Result<(&'a ShadowCircuit, &'a [T], CMatrix<T>)> {
    let circuit = ensemble
        .circuits()
        .get(s)
        .ok_or_else(|| Error::domain(format!("circuit {s} out of range ({} circuits)", ensemble.len())))?;
    let windows = circuit.n_windows(input.n_qubits())?;
    if i >= windows {
        return Err(Error::domain(format!("window {i} out of range ({windows} windows)")));
    }
    circuit.gate_of_param(l)?;
    let rho = partial_trace_window(input, Window::new(i, circuit.n_qsc())?)?;
    Ok((circuit, &ensemble.thetas()[s], rho.matrix().clone()))
}

fn shifted<T: Real>(theta: &[T], l: usize, delta: T) -> Vec<T> {
    let mut t = theta.to_vec();
    t[l] += delta;
    t
}

/// `(M(θ_l + π/2) − M(θ_l − π/2)) / 2`; its expectation is `∂o/∂θ_l`.
pub fn shift_observables<T: Real>(circuit: &ShadowCircuit, theta: &[T], l: usize) -> Result<(CMatrix<T>, CMatrix<T>)> {
    circuit.gate_of_param(l)?;
    let h = T::FRAC_PI_2();
    Ok((
        circuit.observable(&shifted(theta, l, h))?,
        circuit.observable(&shifted(theta, l, -h))?,
    ))
}

fn shift_difference<T: Real>(circuit: &ShadowCircuit, theta: &[T], l: usize) -> Result<CMatrix<T>> {
    let (plus, minus) = shift_observables(circuit, theta, l)?;
    Ok(plus.sub(&minus).scale(creal(T::lit(0.5))))
}

/// `[o_i(θ_l + π/2) − o_i(θ_l − π/2)] / 2`, exact expectations.
pub fn param_shift_grad<T: Real>(
    input: &QuantumState<T>,
    ensemble: &ShadowEnsemble<T>,
    s: usize,
    i: usize,
    l: usize,
) -> Result<T> {
    let (circuit, theta, rho) = locate(input, ensemble, s, i, l)?;
    Ok(expect(&rho, &shift_difference(circuit, theta, l)?))
}

/// `−(i/2) Tr(U_{>l}† O U_{>l} [P_l, U_{≤l} ρ_i U_{≤l}†])`.
pub fn analytic_grad<T: Real>(
    input: &QuantumState<T>,
    ensemble: &ShadowEnsemble<T>,
    s: usize,
    i: usize,
    l: usize,
) -> Result<T> {
    let (circuit, theta, rho) = locate(input, ensemble, s, i, l)?;
    analytic_grad_at_gate(&rho, circuit, theta, circuit.gate_of_param(l)?)
}

/// Commutator form for the gate at position `pos`; fixed gates have no generator.
pub fn analytic_grad_at_gate<T: Real>(
    rho: &CMatrix<T>,
    circuit: &ShadowCircuit,
    theta: &[T],
    pos: usize,
) -> Result<T> {
    let gates = circuit.gates();
    let gate = gates
        .get(pos)
        .ok_or_else(|| Error::domain(format!("gate {pos} out of range")))?;
    let pauli = gate.generator()?;
    let k = circuit.n_qsc();
    let before = circuit_unitary(&gates[..=pos], theta, k)?;
    let after = circuit_unitary(&gates[pos + 1..], theta, k)?;
    let rho_l = before.matmul(rho).matmul(&before.adjoint());
    let obs = heisenberg(&after, k);
    let p = embed_1q(&pauli.matrix(), gate.targets()[0], k);
    let comm = p.matmul(&rho_l).sub(&rho_l.matmul(&p));
    // −(i/2)·z has real part Im(z)/2
    Ok(obs.trace_product(&comm).im * T::lit(0.5))
}

/// `I ⊗ … ⊗ m ⊗ … ⊗ I` with `m` on qubit `q` of a `width`-qubit register.
fn embed_1q<T: Real>(m: &crate::qcore::Mat2<T>, q: usize, width: usize) -> CMatrix<T> {
    let dim = 1usize << width;
    let shift = width - 1 - q;
    let mut out = CMatrix::zeros(dim);
    for a in 0..dim {
        for b in 0..dim {
            if (a ^ b) & !(1 << shift) == 0 {
                out[(a, b)] = m[(a >> shift) & 1][(b >> shift) & 1];
            }
        }
    }
    out
}

/// Central difference `[o(θ_l + h) − o(θ_l − h)] / (2h)`.
pub fn fd_grad<T: Real>(
    input: &QuantumState<T>,
    ensemble: &ShadowEnsemble<T>,
    s: usize,
    i: usize,
    l: usize,
    step: T,
) -> Result<T> {
    if !(step > T::zero()) {
        return Err(Error::domain(format!("finite-difference step must be positive, got {step}")));
    }
    let (circuit, theta, rho) = locate(input, ensemble, s, i, l)?;
    let plus = expect(&rho, &circuit.observable(&shifted(theta, l, step))?);
    let minus = expect(&rho, &circuit.observable(&shifted(theta, l, -step))?);
    Ok((plus - minus) / (step + step))
}

/// Every feature derivative of one input by parameter shift.
pub fn feature_gradient<T: Real>(input: &QuantumState<T>, ensemble: &ShadowEnsemble<T>) -> Result<FeatureGradient<T>> {
    ensemble.n_features(input.n_qubits())?;
    let rdms = WindowRdms::prepare(input, &ensemble.widths())?;
    let mut values = Vec::with_capacity(ensemble.len());
    for (c, theta) in ensemble.circuits().iter().zip(ensemble.thetas()) {
        let diffs = (0..c.n_params())
            .map(|l| shift_difference(c, theta, l))
            .collect::<Result<Vec<_>>>()?;
        let per_window = rdms
            .windows(c.n_qsc())?
            .iter()
            .map(|rho| diffs.iter().map(|d| expect(rho, d)).collect())
            .collect();
        values.push(per_window);
    }
    Ok(FeatureGradient { values })
}

/// One training example: prepared window marginals, class label and a
/// per-sample key for finite-shot streams.
#[derive(Clone, Copy, Debug)]
pub struct BatchItem<'a, T: Real> {
    pub rdms: &'a WindowRdms<T>,
    pub label: usize,
    pub key: u64,
}

/// Batch-averaged loss and gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct LossGradient<T> {
    pub loss: T,
    pub theta: Vec<Vec<T>>,
    pub w: Vec<T>,
    pub b: Vec<T>,
    /// Samples in the batch classified correctly at the current parameters.
    pub correct: usize,
}

impl<T: Real> LossGradient<T> {
    fn zeros(ensemble: &ShadowEnsemble<T>, head: &ClassifierHead<T>) -> Self {
        Self {
            loss: T::zero(),
            theta: ensemble.thetas().iter().map(|t| vec![T::zero(); t.len()]).collect(),
            w: vec![T::zero(); head.weights().len()],
            b: vec![T::zero(); head.k()],
            correct: 0,
        }
    }

    fn accumulate(&mut self, other: &Self) {
        self.loss += other.loss;
        for (a, b) in self.theta.iter_mut().flatten().zip(other.theta.iter().flatten()) {
            *a += *b;
        }
        for (a, b) in self.w.iter_mut().zip(&other.w).chain(self.b.iter_mut().zip(&other.b)) {
            *a += *b;
        }
        self.correct += other.correct;
    }

    fn scale(&mut self, f: T) {
        self.loss *= f;
        for v in self.theta.iter_mut().flatten().chain(self.w.iter_mut()).chain(self.b.iter_mut()) {
            *v *= f;
        }
    }
}

/// Observables reused across a batch: `M_s` and the shift pairs per parameter.
pub struct GradientObservables<T: Real> {
    pub features: Vec<CMatrix<T>>,
    /// `[s][l]` holds `(M(θ_l + π/2), M(θ_l − π/2))`.
    pub shifts: Vec<Vec<(CMatrix<T>, CMatrix<T>)>>,
}

impl<T: Real> GradientObservables<T> {
    pub fn new(ensemble: &ShadowEnsemble<T>) -> Result<Self> {
        let features = ensemble.observables()?;
        let shifts = ensemble
            .circuits()
            .par_iter()
            .zip(ensemble.thetas())
            .map(|(c, t)| (0..c.n_params()).map(|l| shift_observables(c, t, l)).collect())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { features, shifts })
    }
}

fn check_loss_kind<T: Real>(head: &ClassifierHead<T>, kind: LossKind) -> Result<()> {
    if head.loss_kind() != kind {
        return Err(Error::config(format!(
            "{kind:?} loss does not fit a head with K = {}",
            head.k()
        )));
    }
    Ok(())
}

/// Loss and gradients of a single sample.
pub fn sample_loss_grad<T: Real>(
    item: &BatchItem<'_, T>,
    ensemble: &ShadowEnsemble<T>,
    head: &ClassifierHead<T>,
    obs: &GradientObservables<T>,
    shots: &ShotConfig,
) -> Result<LossGradient<T>> {
    let fm = features_from_rdms(item.rdms, ensemble, &obs.features, shots, item.key)?;
    let o = fm.flatten();
    let pred = forward(&o, head)?;
    let hg = head_backward(&o, head, &pred, item.label)?;
    let mut theta = Vec::with_capacity(ensemble.len());
    let mut offset = 0;
    for (s, c) in ensemble.circuits().iter().enumerate() {
        let rhos = item.rdms.windows(c.n_qsc())?;
        let g_o = &hg.features[offset..offset + rhos.len()];
        offset += rhos.len();
        let grads = if shots.is_exact() {
            // Σ_i g_i Tr(ρ_i D) = Tr((Σ_i g_i ρ_i) D)
            let mut weighted = CMatrix::zeros(rhos[0].dim());
            for (rho, &g) in rhos.iter().zip(g_o) {
                weighted = weighted.add(&rho.scale(creal(g)));
            }
            obs.shifts[s]
                .iter()
                .map(|(p, m)| (expect(&weighted, p) - expect(&weighted, m)) * T::lit(0.5))
                .collect()
        } else {
            let mut out = Vec::with_capacity(c.n_params());
            for (l, (p, m)) in obs.shifts[s].iter().enumerate() {
                let mut acc = T::zero();
                for (i, (rho, &g)) in rhos.iter().zip(g_o).enumerate() {
                    let key = |sign| stream_key(&[item.key, s as u64, i as u64, l as u64, sign]);
                    let plus = sample_expectation(expect(rho, p), shots, key(1))?;
                    let minus = sample_expectation(expect(rho, m), shots, key(2))?;
                    acc += g * (plus - minus) * T::lit(0.5);
                }
                out.push(acc);
            }
            out
        };
        theta.push(grads);
    }
    Ok(LossGradient {
        loss: loss(&pred, item.label)?,
        theta,
        w: hg.w,
        b: hg.b,
        correct: usize::from(predict_label(&pred) == item.label),
    })
}

/// Batch mean of loss and of every gradient. Samples are evaluated in
/// parallel and reduced in batch order, so results do not depend on the
/// thread count.
pub fn loss_grad<T: Real>(
    batch: &[BatchItem<'_, T>],
    ensemble: &ShadowEnsemble<T>,
    head: &ClassifierHead<T>,
    loss_kind: LossKind,
    shots: &ShotConfig,
) -> Result<LossGradient<T>> {
    let obs = GradientObservables::new(ensemble)?;
    loss_grad_with(batch, ensemble, head, loss_kind, shots, &obs)
}

pub fn loss_grad_with<T: Real>(
    batch: &[BatchItem<'_, T>],
    ensemble: &ShadowEnsemble<T>,
    head: &ClassifierHead<T>,
    loss_kind: LossKind,
    shots: &ShotConfig,
    obs: &GradientObservables<T>,
) -> Result<LossGradient<T>> {
    if batch.is_empty() {
        return Err(Error::domain("empty batch"));
    }
    check_loss_kind(head, loss_kind)?;
    let n = batch[0].rdms.n_qubits();
    let features = ensemble.n_features(n)?;
    if features != head.n_features() {
        return Err(Error::config(format!(
            "ensemble yields {features} features on {n} qubits, head expects {}",
            head.n_features()
        )));
    }
    if batch.iter().any(|b| b.rdms.n_qubits() != n) {
        return Err(Error::config("batch mixes register sizes"));
    }
    let parts = batch
        .par_iter()
        .map(|item| sample_loss_grad(item, ensemble, head, obs, shots))
        .collect::<Result<Vec<_>>>()?;
    let mut total = LossGradient::zeros(ensemble, head);
    for p in &parts {
        total.accumulate(p);
    }
    total.scale(T::one() / T::lit(batch.len() as f64));
    Ok(total)
}

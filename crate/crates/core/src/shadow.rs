//! Shadow circuits: small parameterized circuits slid across a register with
//! shared parameters, each placement contributing one `X⊗…⊗X` feature.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::qcore::{
    circuit_unitary, partial_trace_window, sample_expectation, stream_key, Gate, QuantumState,
    ShotConfig, Window,
};
use crate::scalar::Real;

/// Parameterized circuit on `n_qsc` qubits. Gate targets are window-relative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRepr", into = "CircuitRepr")]
pub struct ShadowCircuit {
    n_qsc: usize,
    depth: usize,
    gates: Vec<Gate>,
    n_params: usize,
    /// `param_gate[l]` is the position in `gates` of the rotation reading θ_l.
    param_gate: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitRepr {
    n_qsc: usize,
    depth: usize,
    n_params: usize,
    gates: Vec<Gate>,
}

impl TryFrom<CircuitRepr> for ShadowCircuit {
    type Error = Error;

    fn try_from(r: CircuitRepr) -> Result<Self> {
        let c = ShadowCircuit::new(r.n_qsc, r.depth, r.gates)?;
        if c.n_params != r.n_params {
            return Err(Error::config(format!(
                "circuit declares {} parameters but its gates use {}",
                r.n_params, c.n_params
            )));
        }
        Ok(c)
    }
}

impl From<ShadowCircuit> for CircuitRepr {
    fn from(c: ShadowCircuit) -> Self {
        CircuitRepr {
            n_qsc: c.n_qsc,
            depth: c.depth,
            n_params: c.n_params,
            gates: c.gates,
        }
    }
}

impl ShadowCircuit {
    /// Every parameter index `0..n_params` must be used by exactly one rotation.
    pub fn new(n_qsc: usize, depth: usize, gates: Vec<Gate>) -> Result<Self> {
        if n_qsc == 0 {
            return Err(Error::config("shadow circuit needs at least one qubit"));
        }
        if let Some(g) = gates.iter().find(|g| g.span() > n_qsc) {
            return Err(Error::config(format!(
                "gate {:?} on {:?} exceeds window width {n_qsc}",
                g.kind(),
                g.targets()
            )));
        }
        let n_params = gates.iter().filter(|g| g.param().is_some()).count();
        let mut param_gate = vec![usize::MAX; n_params];
        for (pos, g) in gates.iter().enumerate() {
            if let Some(p) = g.param() {
                if p >= n_params || param_gate[p] != usize::MAX {
                    return Err(Error::config(format!(
                        "parameter index {p} is out of range or reused"
                    )));
                }
                param_gate[p] = pos;
            }
        }
        Ok(Self {
            n_qsc,
            depth,
            gates,
            n_params,
            param_gate,
        })
    }

    #[inline]
    pub fn n_qsc(&self) -> usize {
        self.n_qsc
    }

    #[inline]
    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    #[inline]
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Position in [`gates`](Self::gates) of the rotation reading parameter `l`.
    pub fn gate_of_param(&self, l: usize) -> Result<usize> {
        self.param_gate.get(l).copied().ok_or_else(|| {
            Error::domain(format!("parameter {l} out of range (circuit has {})", self.n_params))
        })
    }

    /// Number of stride-1 placements on an `n`-qubit register.
    pub fn n_windows(&self, n_qubits: usize) -> Result<usize> {
        if self.n_qsc > n_qubits {
            return Err(Error::domain(format!(
                "{}-qubit shadow circuit does not fit a {n_qubits}-qubit register",
                self.n_qsc
            )));
        }
        Ok(n_qubits - self.n_qsc + 1)
    }

    /// Heisenberg-picture observable `U(θ)† (X⊗…⊗X) U(θ)` on the window space.
    pub fn observable<T: Real>(&self, theta: &[T]) -> Result<CMatrix<T>> {
        if theta.len() != self.n_params {
            return Err(Error::config(format!(
                "circuit has {} parameters, got {}",
                self.n_params,
                theta.len()
            )));
        }
        let u = circuit_unitary(&self.gates, theta, self.n_qsc)?;
        Ok(heisenberg(&u, self.n_qsc))
    }
}

/// `U† O U` with `O = X^{⊗k}`; row `a` of `O U` is row `a ⊕ (2^k − 1)` of `U`.
pub(crate) fn heisenberg<T: Real>(u: &CMatrix<T>, width: usize) -> CMatrix<T> {
    let dim = 1usize << width;
    let flip = dim - 1;
    let mut ou = CMatrix::zeros(dim);
    for a in 0..dim {
        for b in 0..dim {
            ou[(a, b)] = u[(a ^ flip, b)];
        }
    }
    u.adjoint().matmul(&ou)
}

/// `X^{⊗k}` as a dense matrix.
pub fn x_string<T: Real>(width: usize) -> CMatrix<T> {
    let dim = 1usize << width;
    let mut o = CMatrix::zeros(dim);
    for a in 0..dim {
        o[(a, a ^ (dim - 1))] = Complex::new(T::one(), T::zero());
    }
    o
}

/// Single `RY` on one qubit: the two-family discrimination circuit.
pub fn build_ansatz_qsd() -> ShadowCircuit {
    ShadowCircuit::new(1, 1, vec![Gate::ry(0, 0)]).expect("valid ansatz")
}

/// `RZ–RY–RZ` on every qubit followed by `depth` entangling blocks, each an
/// adjacent-CNOT layer and one `RY` per qubit; `n_qsc·(depth + 3)` parameters.
///
/// For two qubits the entangling layer is `CNOT(0→1)` then `CNOT(1→0)`; wider
/// windows use the chain `CNOT(j→j+1)`.
pub fn build_ansatz_mnist(n_qsc: usize, depth: usize) -> Result<ShadowCircuit> {
    if n_qsc < 2 {
        return Err(Error::config(format!("ansatz needs n_qsc ≥ 2, got {n_qsc}")));
    }
    if depth < 1 {
        return Err(Error::config("ansatz needs depth ≥ 1"));
    }
    let mut gates = Vec::new();
    let mut p = 0;
    for layer in 0..3 {
        for q in 0..n_qsc {
            gates.push(if layer == 1 { Gate::ry(q, p) } else { Gate::rz(q, p) });
            p += 1;
        }
    }
    for _ in 0..depth {
        if n_qsc == 2 {
            gates.push(Gate::cnot(0, 1));
            gates.push(Gate::cnot(1, 0));
        } else {
            gates.extend((0..n_qsc - 1).map(|j| Gate::cnot(j, j + 1)));
        }
        for q in 0..n_qsc {
            gates.push(Gate::ry(q, p));
            p += 1;
        }
    }
    ShadowCircuit::new(n_qsc, depth, gates)
}

/// `RY` layer, adjacent-CNOT chain, `RY` layer; `2·n_qsc` parameters.
///
/// This is the family used for gradient-variance scans and landscape slices.
pub fn build_ansatz_ry_cnot(n_qsc: usize) -> Result<ShadowCircuit> {
    if n_qsc == 0 {
        return Err(Error::config("ansatz needs at least one qubit"));
    }
    let mut gates: Vec<Gate> = (0..n_qsc).map(|q| Gate::ry(q, q)).collect();
    gates.extend((0..n_qsc.saturating_sub(1)).map(|j| Gate::cnot(j, j + 1)));
    gates.extend((0..n_qsc).map(|q| Gate::ry(q, n_qsc + q)));
    ShadowCircuit::new(n_qsc, 1, gates)
}

/// `layers` repetitions of (one `RY` per qubit, adjacent-CNOT chain): exactly
/// `n_qsc` parameters per layer.
pub fn build_ansatz_layered(n_qsc: usize, layers: usize) -> Result<ShadowCircuit> {
    if n_qsc == 0 || layers == 0 {
        return Err(Error::config("layered ansatz needs n_qsc ≥ 1 and layers ≥ 1"));
    }
    let mut gates = Vec::new();
    for layer in 0..layers {
        gates.extend((0..n_qsc).map(|q| Gate::ry(q, layer * n_qsc + q)));
        gates.extend((0..n_qsc - 1).map(|j| Gate::cnot(j, j + 1)));
    }
    ShadowCircuit::new(n_qsc, layers, gates)
}

/// Independent shadow circuits with their own parameter vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShadowEnsemble<T: Real> {
    circuits: Vec<ShadowCircuit>,
    thetas: Vec<Vec<T>>,
}

impl<T: Real> ShadowEnsemble<T> {
    pub fn new(circuits: Vec<ShadowCircuit>, thetas: Vec<Vec<T>>) -> Result<Self> {
        if circuits.is_empty() {
            return Err(Error::config("ensemble needs at least one circuit"));
        }
        if circuits.len() != thetas.len() {
            return Err(Error::config("one parameter vector per circuit required"));
        }
        for (s, (c, t)) in circuits.iter().zip(&thetas).enumerate() {
            if c.n_params() != t.len() {
                return Err(Error::config(format!(
                    "circuit {s} has {} parameters, got {}",
                    c.n_params(),
                    t.len()
                )));
            }
        }
        Ok(Self { circuits, thetas })
    }

    /// Each circuit gets its own angles drawn uniformly from `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(circuits: Vec<ShadowCircuit>, rng: &mut R) -> Result<Self> {
        let two_pi = 2.0 * std::f64::consts::PI;
        let thetas = circuits
            .iter()
            .map(|c| (0..c.n_params()).map(|_| T::lit(rng.gen::<f64>() * two_pi)).collect())
            .collect();
        Self::new(circuits, thetas)
    }

    /// `n_s` copies of the same circuit, independently initialised.
    pub fn replicated<R: Rng + ?Sized>(circuit: &ShadowCircuit, n_s: usize, rng: &mut R) -> Result<Self> {
        Self::random(vec![circuit.clone(); n_s], rng)
    }

    #[inline]
    pub fn circuits(&self) -> &[ShadowCircuit] {
        &self.circuits
    }

    #[inline]
    pub fn thetas(&self) -> &[Vec<T>] {
        &self.thetas
    }

    pub fn thetas_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.thetas
    }

    pub fn len(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }

    pub fn n_circuit_params(&self) -> usize {
        self.circuits.iter().map(ShadowCircuit::n_params).sum()
    }

    /// Total number of features on an `n`-qubit register.
    pub fn n_features(&self, n_qubits: usize) -> Result<usize> {
        self.circuits.iter().map(|c| c.n_windows(n_qubits)).sum()
    }

    /// Window widths present in the ensemble, deduplicated.
    pub fn widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.circuits.iter().map(ShadowCircuit::n_qsc).collect();
        w.sort_unstable();
        w.dedup();
        w
    }

    pub fn observables(&self) -> Result<Vec<CMatrix<T>>> {
        self.circuits
            .iter()
            .zip(&self.thetas)
            .map(|(c, t)| c.observable(t))
            .collect()
    }
}

/// Shadow features: one row per circuit, one column per window offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FeatureMap<T: Real> {
    values: Vec<Vec<T>>,
}

impl<T: Real> FeatureMap<T> {
    pub fn new(values: Vec<Vec<T>>) -> Self {
        Self { values }
    }

    #[inline]
    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn n_circuits(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, s: usize, i: usize) -> T {
        self.values[s][i]
    }

    /// Circuit-major concatenation; the classifier head consumes this order.
    pub fn flatten(&self) -> Vec<T> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reduced density matrices of every stride-1 window, for each window width.
///
/// These are the sufficient statistics for all features of a sample; computing
/// them once lets training re-evaluate features at new parameters cheaply.
#[derive(Clone, Debug)]
pub struct WindowRdms<T: Real> {
    n_qubits: usize,
    by_width: BTreeMap<usize, Vec<CMatrix<T>>>,
}

impl<T: Real> WindowRdms<T> {
    pub fn prepare(state: &QuantumState<T>, widths: &[usize]) -> Result<Self> {
        let n = state.n_qubits();
        let mut by_width = BTreeMap::new();
        for &k in widths {
            if k == 0 || k > n {
                return Err(Error::domain(format!(
                    "window width {k} does not fit a {n}-qubit register"
                )));
            }
            let rdms = (0..=n - k)
                .map(|i| partial_trace_window(state, Window::new(i, k)?).map(|d| d.matrix().clone()))
                .collect::<Result<Vec<_>>>()?;
            by_width.insert(k, rdms);
        }
        Ok(Self { n_qubits: n, by_width })
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn windows(&self, width: usize) -> Result<&[CMatrix<T>]> {
        self.by_width
            .get(&width)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::config(format!("no window marginals prepared for width {width}")))
    }
}

/// `Re Tr(ρ M)` for Hermitian `M`.
#[inline]
pub(crate) fn expect<T: Real>(rho: &CMatrix<T>, obs: &CMatrix<T>) -> T {
    rho.trace_product(obs).re
}

/// Features from prepared marginals and precomputed Heisenberg observables.
///
/// `key` identifies the sample and evaluation so that finite-shot draws are
/// reproducible and independent across (sample, circuit, window).
pub fn features_from_rdms<T: Real>(
    rdms: &WindowRdms<T>,
    ensemble: &ShadowEnsemble<T>,
    observables: &[CMatrix<T>],
    shots: &ShotConfig,
    key: u64,
) -> Result<FeatureMap<T>> {
    let values = ensemble
        .circuits()
        .iter()
        .zip(observables)
        .enumerate()
        .map(|(s, (c, obs))| {
            rdms.windows(c.n_qsc())?
                .iter()
                .enumerate()
                .map(|(i, rho)| {
                    let exact = expect(rho, obs);
                    if shots.is_exact() {
                        Ok(exact)
                    } else {
                        sample_expectation(exact, shots, stream_key(&[key, s as u64, i as u64]))
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureMap::new(values))
}

/// `o[s][i] = Tr(ρ_i U_s† X^{⊗n_qsc} U_s)` for every circuit `s` and window offset `i`.
pub fn extract_features<T: Real>(
    input: &QuantumState<T>,
    ensemble: &ShadowEnsemble<T>,
    shots: &ShotConfig,
) -> Result<FeatureMap<T>> {
    extract_features_keyed(input, ensemble, shots, 0)
}

pub fn extract_features_keyed<T: Real>(
    input: &QuantumState<T>,
    ensemble: &ShadowEnsemble<T>,
    shots: &ShotConfig,
    key: u64,
) -> Result<FeatureMap<T>> {
    ensemble.n_features(input.n_qubits())?;
    let rdms = WindowRdms::prepare(input, &ensemble.widths())?;
    features_from_rdms(&rdms, ensemble, &ensemble.observables()?, shots, key)
}

/// Shadow-circuit parameters plus a `(features + 1) × K` affine head.
/// `K = 1` denotes the binary sigmoid head.
pub fn count_parameters<T: Real>(n_qubits: usize, ensemble: &ShadowEnsemble<T>, k: usize) -> Result<usize> {
    count_parameters_for(n_qubits, ensemble.circuits(), k)
}

pub fn count_parameters_for(n_qubits: usize, circuits: &[ShadowCircuit], k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::config("class count K must be ≥ 1"));
    }
    let mut circuit_params = 0;
    let mut features = 0;
    for c in circuits {
        circuit_params += c.n_params();
        features += c.n_windows(n_qubits)?;
    }
    Ok(circuit_params + (features + 1) * k)
}

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_unit_interval, shuffle_split, Dataset, LabeledState};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::qcore::{DensityMatrix, Evolve, Gate, GateKind, PureState, QuantumState};
use crate::scalar::{creal, czero, Real, C};

fn real_state<T: Real>(amps: [f64; 4]) -> PureState<T> {
    PureState::new(2, amps.iter().map(|&a| creal(T::lit(a))).collect()).expect("unit vector")
}

/// `[√(1−u²), 0, u, 0]`.
pub fn psi_u<T: Real>(u: f64) -> PureState<T> {
    real_state([(1.0 - u * u).sqrt(), 0.0, u, 0.0])
}

/// `[0, ±√(1−v²), v, 0]`.
pub fn psi_v<T: Real>(v: f64, plus: bool) -> PureState<T> {
    let s = if plus { 1.0 } else { -1.0 };
    real_state([0.0, s * (1.0 - v * v).sqrt(), v, 0.0])
}

/// Equal mixture of `ψ_{v+}` and `ψ_{v−}`.
pub fn rho_v<T: Real>(v: f64) -> DensityMatrix<T> {
    let half = T::lit(0.5);
    DensityMatrix::mixture(&[half, half], &[psi_v(v, true), psi_v(v, false)]).expect("valid mixture")
}

/// `[√(1−t²), t, 0, 0]`.
pub fn psi_t<T: Real>(t: f64) -> PureState<T> {
    real_state([(1.0 - t * t).sqrt(), t, 0.0, 0.0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QsdParams {
    pub u_range: [f64; 2],
    pub v_range: [f64; 2],
    pub t_range: [f64; 2],
    pub n_u: usize,
    pub n_v: usize,
    pub n_t: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for QsdParams {
    fn default() -> Self {
        Self {
            u_range: [0.0, 1.0],
            v_range: [0.0, 1.0],
            t_range: [0.0, 1.0],
            n_u: 100,
            n_v: 200,
            n_t: 100,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl QsdParams {
    fn validate(&self, three: bool) -> Result<()> {
        let mut ranges = vec![("u", self.u_range), ("v", self.v_range)];
        if three {
            ranges.push(("t", self.t_range));
        }
        for (name, [lo, hi]) in ranges {
            check_unit_interval(&format!("{name} lower bound"), lo)?;
            check_unit_interval(&format!("{name} upper bound"), hi)?;
            if lo > hi {
                return Err(Error::domain(format!("{name} range [{lo}, {hi}] is reversed")));
            }
        }
        if self.n_u == 0 || self.n_v == 0 || (three && self.n_t == 0) {
            return Err(Error::domain("every class needs at least one sample"));
        }
        check_unit_interval("train_fraction", self.train_fraction)
    }
}

fn draw(range: [f64; 2], rng: &mut ChaCha8Rng) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..=range[1])
    }
}

fn qsd<T: Real>(p: &QsdParams, three: bool) -> Result<Dataset<T>> {
    p.validate(three)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut samples = Vec::new();
    for _ in 0..p.n_u {
        let u = draw(p.u_range, &mut rng);
        samples.push(LabeledState { label: 0, state: psi_u(u).into() });
    }
    for _ in 0..p.n_v {
        let v = draw(p.v_range, &mut rng);
        samples.push(LabeledState { label: 1, state: rho_v(v).into() });
    }
    if three {
        for _ in 0..p.n_t {
            let t = draw(p.t_range, &mut rng);
            samples.push(LabeledState { label: 2, state: psi_t(t).into() });
        }
    }
    let (train, test) = shuffle_split(samples, p.train_fraction, &mut rng);
    Dataset::new(if three { 3 } else { 2 }, train, test)
}

/// `ψ_u` (label 0) against `ρ_2(v)` (label 1); default 100 + 200 states, 80/20 split.
pub fn gen_qsd_binary<T: Real>(params: &QsdParams) -> Result<Dataset<T>> {
    qsd(params, false)
}

/// Adds `ψ_t` as label 2; default 100 + 200 + 100 states.
pub fn gen_qsd_three<T: Real>(params: &QsdParams) -> Result<Dataset<T>> {
    qsd(params, true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoisyParams {
    pub noise_cap: f64,
    pub count_per_class: usize,
    /// One scrambling unitary for both classes, or a fresh one per class.
    pub shared_unitary: bool,
    pub pauli: NoisePauli,
    pub train_fraction: f64,
    pub seed: u64,
}

/// Which Pauli the noise channel applies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NoisePauli {
    /// One of X, Y, Z drawn once for the whole dataset.
    #[default]
    PerDataset,
    /// A fresh draw for every state.
    PerState,
    X,
    Y,
    Z,
}

impl NoisePauli {
    fn fixed(self) -> Option<GateKind> {
        match self {
            NoisePauli::X => Some(GateKind::X),
            NoisePauli::Y => Some(GateKind::Y),
            NoisePauli::Z => Some(GateKind::Z),
            _ => None,
        }
    }
}

const PAULIS: [GateKind; 3] = [GateKind::X, GateKind::Y, GateKind::Z];

impl Default for NoisyParams {
    fn default() -> Self {
        Self {
            noise_cap: 0.5,
            count_per_class: 40,
            shared_unitary: true,
            pauli: NoisePauli::PerDataset,
            train_fraction: 0.5,
            seed: 0,
        }
    }
}

/// `½(|000⟩+|001⟩+|010⟩+|011⟩)` and `(|000⟩+|001⟩+|010⟩)/√3`.
pub fn noisy_base_states<T: Real>() -> [PureState<T>; 2] {
    let mk = |amps: &[f64]| {
        let mut v = vec![czero(); 8];
        for (slot, &a) in v.iter_mut().zip(amps) {
            *slot = creal(T::lit(a));
        }
        PureState::new(3, v).expect("unit vector")
    };
    let third = 1.0 / 3f64.sqrt();
    [mk(&[0.5, 0.5, 0.5, 0.5]), mk(&[third, third, third])]
}

/// QR of a complex Gaussian matrix by modified Gram–Schmidt. `R` then has a
/// positive real diagonal, which makes `Q` Haar distributed.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix<T> {
    let mut cols: Vec<Vec<C<T>>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    C::new(T::lit(re), T::lit(im))
                })
                .collect()
        })
        .collect();
    for j in 0..dim {
        for k in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let q = &done[k];
            let proj: C<T> = q.iter().zip(&rest[0]).map(|(a, b)| a.conj() * b).fold(czero(), |x, y| x + y);
            for (x, &qk) in rest[0].iter_mut().zip(q) {
                *x -= proj * qk;
            }
        }
        let norm = cols[j].iter().map(|x| x.norm_sqr()).sum::<T>().sqrt();
        for x in &mut cols[j] {
            *x = *x / norm;
        }
    }
    let mut u = CMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            u[(i, j)] = x;
        }
    }
    u
}

fn rotate<T: Real>(u: &CMatrix<T>, psi: &PureState<T>) -> Result<PureState<T>> {
    let d = psi.dim();
    let a = psi.amplitudes();
    let out = (0..d)
        .map(|i| (0..d).map(|k| u[(i, k)] * a[k]).fold(czero(), |x, y| x + y))
        .collect();
    PureState::normalized(out)
}

/// `(1−p)σ + (p/3) Σ_j E_j σ E_j†` with `E_j` the Pauli `kind` on qubit `j`.
pub(crate) fn pauli_channel<T: Real>(sigma: &DensityMatrix<T>, p: T, kind: GateKind) -> Result<DensityMatrix<T>> {
    let n = sigma.n_qubits();
    let mut acc = sigma.matrix().scale(creal(T::one() - p));
    let weight = creal(p / T::lit(n as f64));
    for j in 0..n {
        let flipped = sigma.apply_circuit(&[Gate::fixed(kind, j)?], &[], 0)?;
        acc = acc.add(&flipped.matrix().scale(weight));
    }
    DensityMatrix::new(n, acc)
}

/// Scrambled high-fidelity pair under random single-Pauli noise.
///
/// Each state draws `p ~ Uni[0, noise_cap]`. The Pauli `P` acts at every qubit
/// position of the channel and is chosen according to `params.pauli`. Classes are split separately so
/// train and test stay balanced.
pub fn gen_noisy_pair<T: Real>(params: &NoisyParams) -> Result<Dataset<T>> {
    check_unit_interval("noise_cap", params.noise_cap)?;
    check_unit_interval("train_fraction", params.train_fraction)?;
    if params.count_per_class == 0 {
        return Err(Error::domain("count_per_class must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let shared = haar_unitary::<T, _>(8, &mut rng);
    let dataset_pauli = *PAULIS.choose(&mut rng).expect("nonempty");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, base) in noisy_base_states::<T>().iter().enumerate() {
        let u = if params.shared_unitary { shared.clone() } else { haar_unitary(8, &mut rng) };
        let sigma = rotate(&u, base)?.to_density();
        let mut class = Vec::with_capacity(params.count_per_class);
        for _ in 0..params.count_per_class {
            let p = rng.gen::<f64>() * params.noise_cap;
            let kind = match params.pauli {
                NoisePauli::PerDataset => dataset_pauli,
                NoisePauli::PerState => *PAULIS.choose(&mut rng).expect("nonempty"),
                other => other.fixed().expect("explicit Pauli"),
            };
            let state = pauli_channel(&sigma, T::lit(p), kind)?;
            class.push(LabeledState { label, state: QuantumState::Mixed(state) });
        }
        let (tr, te) = shuffle_split(class, params.train_fraction, &mut rng);
        train.extend(tr);
        test.extend(te);
    }
    train.shuffle(&mut rng);
    Dataset::new(2, train, test)
}

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{czero, Real, C};

/// Pure `n`-qubit state as a `2^n` amplitude vector.
///
/// Qubit ordering is big-endian: qubit 0 is the most significant bit of the
/// basis index, so `|10⟩` is index 2.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T> {
    n_qubits: usize,
    amplitudes: Vec<C<T>>,
}

impl<T: Real> PureState<T> {
    /// Validates length `2^n_qubits` and unit norm.
    pub fn new(n_qubits: usize, amplitudes: Vec<C<T>>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::domain("a state needs at least one qubit"));
        }
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::domain(format!(
                "{} amplitudes do not describe {n_qubits} qubits",
                amplitudes.len()
            )));
        }
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let dev = (state.norm() - T::one()).abs();
        if dev > T::invariant_tol() {
            return Err(Error::domain(format!("state norm deviates from 1 by {dev}")));
        }
        Ok(state)
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm; the length must be a power of two.
    pub fn normalized(amplitudes: Vec<C<T>>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::domain(format!("length {len} is not a power of two ≥ 2")));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if norm <= T::zero() || !norm.is_finite() {
            return Err(Error::domain("cannot normalise a zero or non-finite vector"));
        }
        let inv = T::one() / norm;
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes: amplitudes.into_iter().map(|a| a * inv).collect(),
        })
    }

    /// Computational basis state `|bitstring⟩`.
    pub fn basis(n_qubits: usize, bitstring: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits >= usize::BITS as usize {
            return Err(Error::domain(format!("invalid qubit count {n_qubits}")));
        }
        let dim = 1usize << n_qubits;
        if bitstring >= dim {
            return Err(Error::domain(format!(
                "bitstring {bitstring} out of range for {n_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![czero(); dim];
        amplitudes[bitstring] = Complex::new(T::one(), T::zero());
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Tensor product `self ⊗ other` (self occupies the leading qubits).
    pub fn kron(&self, other: &Self) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            amplitudes,
        }
    }

    pub(crate) fn from_parts_unchecked(n_qubits: usize, amplitudes: Vec<C<T>>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << n_qubits);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C<T>] {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> C<T> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: CMatrix::outer(&self.amplitudes),
        }
    }
}

/// Mixed `n`-qubit state: Hermitian, trace one, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    n_qubits: usize,
    matrix: CMatrix<T>,
}

/// Above this dimension the eigenvalue check in [`DensityMatrix::new`] is skipped.
const PSD_CHECK_MAX_DIM: usize = 64;

impl<T: Real> DensityMatrix<T> {
    /// Validates hermiticity and unit trace, and positivity for matrices up to 64×64.
    pub fn new(n_qubits: usize, matrix: CMatrix<T>) -> Result<Self> {
        if n_qubits == 0 || matrix.dim() != 1usize << n_qubits {
            return Err(Error::domain(format!(
                "{}×{} matrix does not describe {n_qubits} qubits",
                matrix.dim(),
                matrix.dim()
            )));
        }
        let tol = T::invariant_tol();
        let herm = matrix.hermiticity_defect();
        if herm > tol {
            return Err(Error::domain(format!("matrix is not Hermitian (defect {herm})")));
        }
        let tr = matrix.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::domain(format!("trace {tr} differs from 1")));
        }
        if matrix.dim() <= PSD_CHECK_MAX_DIM {
            let min = matrix.hermitian_eigenvalues()[0];
            if min < -T::lit(1e-9).max(tol) {
                return Err(Error::domain(format!("negative eigenvalue {min}")));
            }
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Convex combination `Σ_k p_k |ψ_k⟩⟨ψ_k|`.
    pub fn mixture(weights: &[T], states: &[PureState<T>]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::domain("mixture of zero states"))?;
        if weights.len() != states.len() {
            return Err(Error::config("weights and states differ in length"));
        }
        if weights.iter().any(|&w| w < T::zero()) {
            return Err(Error::domain("mixture weights must be non-negative"));
        }
        let mut acc = CMatrix::zeros(first.dim());
        for (&w, s) in weights.iter().zip(states) {
            if s.n_qubits() != first.n_qubits() {
                return Err(Error::config("mixture components differ in qubit count"));
            }
            acc = acc.add(&CMatrix::outer(s.amplitudes()).scale(Complex::new(w, T::zero())));
        }
        Self::new(first.n_qubits(), acc)
    }

    pub(crate) fn from_parts_unchecked(n_qubits: usize, matrix: CMatrix<T>) -> Self {
        debug_assert_eq!(matrix.dim(), 1 << n_qubits);
        Self { n_qubits, matrix }
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut CMatrix<T> {
        &mut self.matrix
    }

    pub fn trace(&self) -> C<T> {
        self.matrix.trace()
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> T {
        self.matrix.trace_product(&self.matrix).re
    }
}

/// Either representation; pure inputs stay as amplitude vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "StateRepr<T>",
    into = "StateRepr<T>",
    bound = "T: Real"
)]
pub enum QuantumState<T: Real> {
    Pure(PureState<T>),
    Mixed(DensityMatrix<T>),
}

impl<T: Real> QuantumState<T> {
    pub fn n_qubits(&self) -> usize {
        match self {
            QuantumState::Pure(p) => p.n_qubits(),
            QuantumState::Mixed(m) => m.n_qubits(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        match self {
            QuantumState::Pure(p) => p.to_density(),
            QuantumState::Mixed(m) => m.clone(),
        }
    }
}

impl<T: Real> From<PureState<T>> for QuantumState<T> {
    fn from(p: PureState<T>) -> Self {
        QuantumState::Pure(p)
    }
}

impl<T: Real> From<DensityMatrix<T>> for QuantumState<T> {
    fn from(m: DensityMatrix<T>) -> Self {
        QuantumState::Mixed(m)
    }
}

/// JSON form: complex numbers are `[re, im]` pairs, matrices are lists of rows.
#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields, bound = "T: Real")]
enum StateRepr<T: Real> {
    Pure {
        n_qubits: usize,
        amplitudes: Vec<C<T>>,
    },
    Density {
        n_qubits: usize,
        matrix: Vec<Vec<C<T>>>,
    },
}

impl<T: Real> TryFrom<StateRepr<T>> for QuantumState<T> {
    type Error = Error;

    fn try_from(r: StateRepr<T>) -> Result<Self> {
        match r {
            StateRepr::Pure {
                n_qubits,
                amplitudes,
            } => Ok(QuantumState::Pure(PureState::new(n_qubits, amplitudes)?)),
            StateRepr::Density { n_qubits, matrix } => {
                let m = CMatrix::from_rows(&matrix)
                    .ok_or_else(|| Error::domain("density matrix rows are ragged"))?;
                Ok(QuantumState::Mixed(DensityMatrix::new(n_qubits, m)?))
            }
        }
    }
}

impl<T: Real> From<QuantumState<T>> for StateRepr<T> {
    fn from(s: QuantumState<T>) -> Self {
        match s {
            QuantumState::Pure(p) => StateRepr::Pure {
                n_qubits: p.n_qubits,
                amplitudes: p.amplitudes,
            },
            QuantumState::Mixed(m) => StateRepr::Density {
                n_qubits: m.n_qubits,
                matrix: m.matrix.rows(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_states() {
        let s = PureState::<f64>::basis(1, 0).unwrap();
        assert_eq!(s.amplitudes(), &[C::new(1.0, 0.0), C::new(0.0, 0.0)]);
        let s = PureState::<f64>::basis(2, 2).unwrap();
        let expected: Vec<C<f64>> = [0.0, 0.0, 1.0, 0.0].iter().map(|&x| C::new(x, 0.0)).collect();
        assert_eq!(s.amplitudes(), expected.as_slice());
    }

    #[test]
    fn basis_state_rejects_out_of_range() {
        assert!(matches!(PureState::<f64>::basis(3, 8), Err(Error::Domain(_))));
        assert!(matches!(PureState::<f64>::basis(0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn pure_state_rejects_bad_norm_and_length() {
        let amps = vec![C::new(1.0, 0.0), C::new(1.0, 0.0)];
        assert!(PureState::<f64>::new(1, amps.clone()).is_err());
        assert!(PureState::<f64>::new(2, amps).is_err());
    }

    #[test]
    fn density_rejects_non_psd() {
        let m = CMatrix::from_rows(&[
            vec![C::new(1.5, 0.0), C::new(0.0, 0.0)],
            vec![C::new(0.0, 0.0), C::new(-0.5, 0.0)],
        ])
        .unwrap();
        assert!(DensityMatrix::<f64>::new(1, m).is_err());
    }

    #[test]
    fn json_round_trip_keeps_values() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = PureState::new(1, vec![C::new(h, 0.0), C::new(0.0, h)]).unwrap();
        let q: QuantumState<f64> = p.clone().into();
        let text = serde_json::to_string(&q).unwrap();
        assert!(text.contains("\"type\":\"pure\""));
        let back: QuantumState<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, q);

        let d: QuantumState<f64> = p.to_density().into();
        let back: QuantumState<f64> = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }
}

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{czero, Real, C};

use super::gate::{Gate, GateKind, Mat2};
use super::state::{DensityMatrix, PureState, QuantumState};

/// Contiguous block of qubits `[start, start + len)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    start: usize,
    len: usize,
}

impl Window {
    pub fn new(start: usize, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::domain("empty qubit window"));
        }
        Ok(Self { start, len })
    }

    /// Accepts an explicit qubit list; only ascending contiguous runs are supported.
    pub fn from_qubits(qubits: &[usize]) -> Result<Self> {
        let (&first, rest) = qubits
            .split_first()
            .ok_or_else(|| Error::domain("empty qubit window"))?;
        let mut prev = first;
        for &q in rest {
            if q != prev + 1 {
                return Err(Error::Unsupported(format!(
                    "non-contiguous window {qubits:?}; only contiguous windows are supported"
                )));
            }
            prev = q;
        }
        Self::new(first, qubits.len())
    }

    #[inline]
    pub fn start(&self) -> usize {
        self.start
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn check(&self, n_qubits: usize) -> Result<()> {
        if self.end() > n_qubits {
            return Err(Error::domain(format!(
                "window [{}, {}) exceeds a {n_qubits}-qubit register",
                self.start,
                self.end()
            )));
        }
        Ok(())
    }

    /// Bit mask over basis indices of an `n_qubits` register selecting this window.
    fn mask(&self, n_qubits: usize) -> usize {
        let width_mask = (1usize << self.len) - 1;
        width_mask << (n_qubits - self.end())
    }
}

#[inline]
fn stride(n_qubits: usize, q: usize) -> usize {
    1usize << (n_qubits - 1 - q)
}

/// Applies a 2×2 matrix to qubit `q` of a vector laid out with `n_qubits` big-endian
/// qubits, where consecutive basis indices are `step` elements apart.
fn apply_1q_strided<T: Real>(data: &mut [C<T>], n_qubits: usize, q: usize, m: &Mat2<T>, step: usize, base: usize) {
    let s = stride(n_qubits, q);
    let dim = 1usize << n_qubits;
    for i in 0..dim {
        if i & s != 0 {
            continue;
        }
        let a = base + i * step;
        let b = base + (i | s) * step;
        let (x, y) = (data[a], data[b]);
        data[a] = m[0][0] * x + m[0][1] * y;
        data[b] = m[1][0] * x + m[1][1] * y;
    }
}

fn apply_cnot_strided<T: Real>(data: &mut [C<T>], n_qubits: usize, control: usize, target: usize, step: usize, base: usize) {
    let cs = stride(n_qubits, control);
    let ts = stride(n_qubits, target);
    let dim = 1usize << n_qubits;
    for i in 0..dim {
        if i & cs != 0 && i & ts == 0 {
            data.swap(base + i * step, base + (i | ts) * step);
        }
    }
}

fn conj_mat<T: Real>(m: &Mat2<T>) -> Mat2<T> {
    [
        [m[0][0].conj(), m[0][1].conj()],
        [m[1][0].conj(), m[1][1].conj()],
    ]
}

fn validate_circuit(gates: &[Gate], n_params: usize, offset: usize, n_qubits: usize) -> Result<()> {
    let width = gates.iter().map(Gate::span).max().unwrap_or(0);
    if offset + width > n_qubits {
        return Err(Error::domain(format!(
            "circuit of width {width} at offset {offset} exceeds {n_qubits} qubits"
        )));
    }
    for g in gates {
        if let Some(p) = g.param() {
            if p >= n_params {
                return Err(Error::config(format!(
                    "gate {:?} references parameter {p} but only {n_params} given",
                    g.kind()
                )));
            }
        }
    }
    Ok(())
}

/// States a window circuit can act on.
pub trait Evolve<T: Real>: Sized {
    /// Applies `gates` (targets relative to `offset`) with angles taken from `params`.
    fn apply_circuit(&self, gates: &[Gate], params: &[T], offset: usize) -> Result<Self>;
}

impl<T: Real> Evolve<T> for PureState<T> {
    fn apply_circuit(&self, gates: &[Gate], params: &[T], offset: usize) -> Result<Self> {
        let n = self.n_qubits();
        validate_circuit(gates, params.len(), offset, n)?;
        let mut out = self.clone();
        let amps = out.amplitudes_mut();
        for g in gates {
            let t = g.targets();
            if g.kind() == GateKind::Cnot {
                apply_cnot_strided(amps, n, offset + t[0], offset + t[1], 1, 0);
            } else {
                let theta = g.param().map_or(T::zero(), |p| params[p]);
                let m = g.matrix_1q(theta).expect("single-qubit gate");
                apply_1q_strided(amps, n, offset + t[0], &m, 1, 0);
            }
        }
        Ok(out)
    }
}

impl<T: Real> Evolve<T> for DensityMatrix<T> {
    fn apply_circuit(&self, gates: &[Gate], params: &[T], offset: usize) -> Result<Self> {
        let n = self.n_qubits();
        validate_circuit(gates, params.len(), offset, n)?;
        let dim = self.dim();
        let mut out = self.clone();
        let data = out.matrix_mut().as_mut_slice();
        for g in gates {
            let t = g.targets();
            if g.kind() == GateKind::Cnot {
                let (c, tg) = (offset + t[0], offset + t[1]);
                // U ρ: permute row indices (column j fixed, step = dim)
                for j in 0..dim {
                    apply_cnot_strided(data, n, c, tg, dim, j);
                }
                // (Uρ) U†: permute column indices
                for i in 0..dim {
                    apply_cnot_strided(data, n, c, tg, 1, i * dim);
                }
            } else {
                let theta = g.param().map_or(T::zero(), |p| params[p]);
                let m = g.matrix_1q(theta).expect("single-qubit gate");
                let mc = conj_mat(&m);
                let q = offset + t[0];
                for j in 0..dim {
                    apply_1q_strided(data, n, q, &m, dim, j);
                }
                for i in 0..dim {
                    apply_1q_strided(data, n, q, &mc, 1, i * dim);
                }
            }
        }
        Ok(out)
    }
}

impl<T: Real> Evolve<T> for QuantumState<T> {
    fn apply_circuit(&self, gates: &[Gate], params: &[T], offset: usize) -> Result<Self> {
        Ok(match self {
            QuantumState::Pure(p) => QuantumState::Pure(p.apply_circuit(gates, params, offset)?),
            QuantumState::Mixed(m) => QuantumState::Mixed(m.apply_circuit(gates, params, offset)?),
        })
    }
}

/// `U ψ` or `U ρ U†` with the circuit placed on qubits `[offset, offset + width)`.
pub fn apply_circuit<T: Real, S: Evolve<T>>(state: &S, gates: &[Gate], params: &[T], offset: usize) -> Result<S> {
    state.apply_circuit(gates, params, offset)
}

/// Unitary of a circuit on `width` qubits, assembled column by column from basis states.
pub fn circuit_unitary<T: Real>(gates: &[Gate], params: &[T], width: usize) -> Result<CMatrix<T>> {
    validate_circuit(gates, params.len(), 0, width)?;
    let dim = 1usize << width;
    let mut u = CMatrix::zeros(dim);
    for col in 0..dim {
        let out = PureState::basis(width, col)?.apply_circuit(gates, params, 0)?;
        for (row, a) in out.amplitudes().iter().enumerate() {
            u[(row, col)] = *a;
        }
    }
    Ok(u)
}

/// Expectation of `X ⊗ … ⊗ X` on `window`, identity elsewhere.
pub fn expectation_xx<T: Real>(state: &QuantumState<T>, window: Window) -> Result<T> {
    match state {
        QuantumState::Pure(p) => expectation_xx_pure(p, window),
        QuantumState::Mixed(m) => expectation_xx_density(m, window),
    }
}

pub fn expectation_xx_pure<T: Real>(state: &PureState<T>, window: Window) -> Result<T> {
    window.check(state.n_qubits())?;
    let mask = window.mask(state.n_qubits());
    let amps = state.amplitudes();
    let mut acc = T::zero();
    for (a, amp) in amps.iter().enumerate() {
        let b = amps[a ^ mask];
        acc += amp.re * b.re + amp.im * b.im;
    }
    Ok(acc)
}

pub fn expectation_xx_density<T: Real>(state: &DensityMatrix<T>, window: Window) -> Result<T> {
    window.check(state.n_qubits())?;
    let mask = window.mask(state.n_qubits());
    let m = state.matrix();
    // Tr(ρO) = Σ_b ρ[b ⊕ mask, b]
    Ok((0..state.dim()).map(|b| m[(b ^ mask, b)].re).sum())
}

/// Reduced density matrix of a contiguous window.
///
/// Basis indices split as `(left, window, right)` blocks; the marginal sums
/// over matching left/right indices.
pub fn partial_trace_window<T: Real>(state: &QuantumState<T>, window: Window) -> Result<DensityMatrix<T>> {
    match state {
        QuantumState::Pure(p) => partial_trace_pure(p, window),
        QuantumState::Mixed(m) => partial_trace_density(m, window),
    }
}

pub fn partial_trace_pure<T: Real>(state: &PureState<T>, window: Window) -> Result<DensityMatrix<T>> {
    let n = state.n_qubits();
    window.check(n)?;
    let k = window.len();
    let right_bits = n - window.end();
    let (left, wdim, right) = (1usize << window.start(), 1usize << k, 1usize << right_bits);
    let amps = state.amplitudes();
    let mut rdm = CMatrix::zeros(wdim);
    let out = rdm.as_mut_slice();
    // Gather the wdim-long fibre for each (l, r) environment index, then accumulate its outer product.
    let mut fibre = vec![czero::<T>(); wdim];
    for l in 0..left {
        for r in 0..right {
            let base = (l << (k + right_bits)) | r;
            let mut nonzero = false;
            for (w, f) in fibre.iter_mut().enumerate() {
                *f = amps[base | (w << right_bits)];
                nonzero |= f.re != T::zero() || f.im != T::zero();
            }
            if !nonzero {
                continue;
            }
            for a in 0..wdim {
                let fa = fibre[a];
                if fa.re == T::zero() && fa.im == T::zero() {
                    continue;
                }
                let row = &mut out[a * wdim..(a + 1) * wdim];
                for (dst, fb) in row.iter_mut().zip(&fibre) {
                    *dst += fa * fb.conj();
                }
            }
        }
    }
    Ok(DensityMatrix::from_parts_unchecked(k, rdm))
}

pub fn partial_trace_density<T: Real>(state: &DensityMatrix<T>, window: Window) -> Result<DensityMatrix<T>> {
    let n = state.n_qubits();
    window.check(n)?;
    let k = window.len();
    let right_bits = n - window.end();
    let (left, wdim, right) = (1usize << window.start(), 1usize << k, 1usize << right_bits);
    let m = state.matrix();
    let mut rdm = CMatrix::zeros(wdim);
    for a in 0..wdim {
        for b in 0..wdim {
            let mut acc = czero();
            for l in 0..left {
                for r in 0..right {
                    let base = (l << (k + right_bits)) | r;
                    acc += m[(base | (a << right_bits), base | (b << right_bits))];
                }
            }
            rdm[(a, b)] = acc;
        }
    }
    Ok(DensityMatrix::from_parts_unchecked(k, rdm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::gate::Gate;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> C<f64> {
        Complex::new(re, 0.0)
    }

    fn bell() -> PureState<f64> {
        PureState::new(2, vec![c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)]).unwrap()
    }

    fn plus() -> PureState<f64> {
        PureState::new(1, vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap()
    }

    fn w(start: usize, len: usize) -> Window {
        Window::new(start, len).unwrap()
    }

    #[test]
    fn ry_pi_flips_zero() {
        let s = PureState::<f64>::basis(1, 0).unwrap();
        let out = s.apply_circuit(&[Gate::ry(0, 0)], &[PI], 0).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitudes()[1].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cnot_maps_10_to_11() {
        let s = PureState::<f64>::basis(2, 0b10).unwrap();
        let out = s.apply_circuit(&[Gate::cnot(0, 1)], &[], 0).unwrap();
        assert_eq!(out, PureState::basis(2, 0b11).unwrap());
    }

    #[test]
    fn rz_leaves_zero_density_unchanged() {
        let rho = PureState::<f64>::basis(1, 0).unwrap().to_density();
        let out = rho.apply_circuit(&[Gate::rz(0, 0)], &[0.731], 0).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn offset_places_circuit() {
        // X on qubit 2 of |000⟩ via RX(π) → |001⟩ up to phase
        let s = PureState::<f64>::basis(3, 0).unwrap();
        let out = s.apply_circuit(&[Gate::rx(0, 0)], &[PI], 2).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[1].norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn circuit_errors() {
        let s = PureState::<f64>::basis(2, 0).unwrap();
        assert!(matches!(s.apply_circuit(&[Gate::ry(0, 3)], &[0.0], 0), Err(Error::Config(_))));
        assert!(matches!(s.apply_circuit(&[Gate::cnot(0, 1)], &[], 1), Err(Error::Domain(_))));
    }

    #[test]
    fn xx_expectations() {
        assert_abs_diff_eq!(expectation_xx_pure(&plus(), w(0, 1)).unwrap(), 1.0, epsilon = 1e-15);
        let zero = PureState::<f64>::basis(1, 0).unwrap();
        assert_abs_diff_eq!(expectation_xx_pure(&zero, w(0, 1)).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expectation_xx_pure(&bell(), w(0, 2)).unwrap(), 1.0, epsilon = 1e-15);
        let mixed = bell().to_density();
        assert_abs_diff_eq!(expectation_xx_density(&mixed, w(0, 2)).unwrap(), 1.0, epsilon = 1e-15);
        assert!(Window::new(0, 0).is_err());
        assert!(expectation_xx_pure(&bell(), w(1, 2)).is_err());
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let rdm = partial_trace_pure(&bell(), w(0, 1)).unwrap();
        let half = CMatrix::identity(2).scale(c(0.5));
        assert!(rdm.matrix().max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn product_marginal() {
        let s = PureState::<f64>::basis(1, 0).unwrap().kron(&plus());
        let rdm = partial_trace_pure(&s, w(0, 1)).unwrap();
        let p0 = CMatrix::outer(&[c(1.0), c(0.0)]);
        assert!(rdm.matrix().max_abs_diff(&p0) < 1e-15);
        let rdm1 = partial_trace_pure(&s, w(1, 1)).unwrap();
        assert!(rdm1.matrix().max_abs_diff(&CMatrix::outer(plus().amplitudes())) < 1e-15);
    }

    #[test]
    fn non_contiguous_window_is_unsupported() {
        assert!(matches!(Window::from_qubits(&[0, 2]), Err(Error::Unsupported(_))));
        assert_eq!(Window::from_qubits(&[1, 2]).unwrap(), w(1, 2));
    }
}

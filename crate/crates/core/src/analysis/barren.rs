use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Report;
use crate::error::{Error, Result};
use crate::grad::shift_observables;
use crate::head::{forward, loss, ClassifierHead};
use crate::linalg::CMatrix;
use crate::qcore::{stream_key, PureState};
use crate::scalar::{Real, C};
use crate::shadow::{build_ansatz_ry_cnot, expect, ShadowCircuit};

const BP_TAG: u64 = 0xB9;
const MIN_TRIALS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub n: usize,
    pub n_qsc: usize,
    pub trials: usize,
    pub grad_mean: f64,
    pub grad_variance: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VarianceScanResult {
    pub rows: Vec<VarianceRow>,
}

impl VarianceScanResult {
    pub fn row(&self, n: usize, n_qsc: usize) -> Option<&VarianceRow> {
        self.rows.iter().find(|r| r.n == n && r.n_qsc == n_qsc)
    }
}

/// `(θ_1, θ_2, loss)` over a square grid on `[0, 2π]²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSlice {
    pub n: usize,
    pub n_qsc: usize,
    pub grid_size: usize,
    pub points: Vec<(f64, f64, f64)>,
}

impl LandscapeSlice {
    /// `max − min` of the loss over the grid.
    pub fn loss_range(&self) -> f64 {
        let (lo, hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.2), hi.max(p.2)));
        hi - lo
    }
}

fn ry_qubit<T: Real>(angle: f64) -> PureState<T> {
    let (s, c) = (angle / 2.0).sin_cos();
    PureState::from_parts_unchecked(1, vec![C::new(T::lit(c), T::zero()), C::new(T::lit(s), T::zero())])
}

fn product_angle(n: usize, j: usize) -> f64 {
    std::f64::consts::TAU * j as f64 / n as f64
}

/// `⊗_{j<n} RY(2πj/n)|0⟩` as a full register vector.
pub fn ry_product_state<T: Real>(n: usize) -> Result<PureState<T>> {
    if n == 0 {
        return Err(Error::domain("product state needs at least one qubit"));
    }
    Ok((1..n).fold(ry_qubit(0.0), |acc, j| acc.kron(&ry_qubit(product_angle(n, j)))))
}

/// Marginal of `⊗_{j<n} RY(2πj/n)|0⟩` on qubits `start..start+width`, built
/// without the full register.
pub fn product_window_rdm<T: Real>(n: usize, start: usize, width: usize) -> Result<CMatrix<T>> {
    if width == 0 || start + width > n {
        return Err(Error::domain(format!(
            "window {start}..{} does not fit {n} qubits",
            start + width
        )));
    }
    let psi = (start + 1..start + width).fold(ry_qubit::<T>(product_angle(n, start)), |acc, j| {
        acc.kron(&ry_qubit(product_angle(n, j)))
    });
    Ok(CMatrix::outer(psi.amplitudes()))
}

fn variance_row<T: Real>(n: usize, n_qsc: usize, trials: usize, seed: u64) -> Result<VarianceRow> {
    let circuit = build_ansatz_ry_cnot(n_qsc)?;
    let rho = product_window_rdm::<T>(n, 0, n_qsc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_key(&[BP_TAG, n as u64, n_qsc as u64]));
    let half = T::lit(0.5);
    let grads = (0..trials)
        .map(|_| {
            let theta: Vec<T> = (0..circuit.n_params())
                .map(|_| T::lit(rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            let (plus, minus) = shift_observables(&circuit, &theta, 0)?;
            Ok(((expect(&rho, &plus) - expect(&rho, &minus)) * half).as_f64())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = grads.iter().sum::<f64>() / trials as f64;
    let var = grads.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok(VarianceRow {
        n,
        n_qsc,
        trials,
        grad_mean: mean,
        grad_variance: var,
    })
}

/// Sample mean and variance of `∂o_1/∂θ_1` over uniformly random angles of the
/// `RY`–CNOT–`RY` circuit, on the first window of the `RY` product state.
///
/// One row per `(n, n_qsc)` pair, in `n_list`-major order.
pub fn bp_variance_scan<T: Real>(
    n_list: &[usize],
    n_qsc_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<VarianceScanResult> {
    if trials < MIN_TRIALS {
        return Err(Error::domain(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    let pairs: Vec<(usize, usize)> = n_list
        .iter()
        .flat_map(|&n| n_qsc_list.iter().map(move |&k| (n, k)))
        .collect();
    if let Some((n, k)) = pairs.iter().find(|(n, k)| n < k || *k == 0) {
        return Err(Error::domain(format!("window of {k} qubits does not fit {n} qubits")));
    }
    let rows = pairs
        .par_iter()
        .map(|&(n, k)| variance_row::<T>(n, k, trials, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(VarianceScanResult { rows })
}

/// Zero mean at 3σ for every row, variance within a factor 3 across register
/// sizes at fixed width, and the width 2 → 4 variance ratio within `[2, 9]`.
pub fn check_variance_scan(result: &VarianceScanResult) -> Report {
    let mut report = Report::new("bp-scan");
    for r in &result.rows {
        let sigma = (r.grad_variance / r.trials as f64).sqrt();
        report.push(
            format!("mean zero n={} n_qsc={}", r.n, r.n_qsc),
            r.grad_mean.abs() < 3.0 * sigma,
            r.grad_mean,
            format!("|mean| < {:.3e}", 3.0 * sigma),
        );
        report.push(
            format!("variance positive n={} n_qsc={}", r.n, r.n_qsc),
            r.grad_variance > 0.0,
            r.grad_variance,
            "> 0",
        );
    }
    let mut by_width: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in &result.rows {
        by_width.entry(r.n_qsc).or_default().push(r.grad_variance);
    }
    for (k, vars) in by_width.iter().filter(|(_, v)| v.len() > 1) {
        let hi = vars.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = vars.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = hi / lo;
        report.push(format!("n independence n_qsc={k}"), spread <= 3.0, spread, "max/min ≤ 3");
    }
    for r2 in result.rows.iter().filter(|r| r.n_qsc == 2) {
        if let Some(r4) = result.row(r2.n, 4) {
            let ratio = r2.grad_variance / r4.grad_variance;
            report.push(
                format!("width ratio n={}", r2.n),
                (2.0..=9.0).contains(&ratio),
                ratio,
                "Var(2)/Var(4) in [2, 9]",
            );
        }
    }
    report
}

fn grid_angle(a: usize, grid_size: usize) -> f64 {
    std::f64::consts::TAU * a as f64 / (grid_size - 1) as f64
}

/// Single-sample binary loss of the label-0 product state over `(θ_1, θ_2)`,
/// with every other angle at π/4, `b = 0` and `w ~ N(0, I)` drawn once.
pub fn landscape_slice<T: Real>(n: usize, n_qsc: usize, grid_size: usize, seed: u64) -> Result<LandscapeSlice> {
    if grid_size < 2 {
        return Err(Error::domain(format!("grid needs at least 2 points per axis, got {grid_size}")));
    }
    if n_qsc == 0 || n < n_qsc {
        return Err(Error::domain(format!("window of {n_qsc} qubits does not fit {n} qubits")));
    }
    let circuit: ShadowCircuit = build_ansatz_ry_cnot(n_qsc)?;
    let windows = circuit.n_windows(n)?;
    let rdms = (0..windows)
        .map(|i| product_window_rdm::<T>(n, i, n_qsc))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut head = ClassifierHead::<T>::gaussian(1, windows, &mut rng)?;
    head.bias_mut()[0] = T::zero();
    let quarter = T::FRAC_PI_4();
    let points = (0..grid_size * grid_size)
        .into_par_iter()
        .map(|idx| {
            let (t1, t2) = (grid_angle(idx / grid_size, grid_size), grid_angle(idx % grid_size, grid_size));
            let mut theta = vec![quarter; circuit.n_params()];
            theta[0] = T::lit(t1);
            theta[1] = T::lit(t2);
            let obs = circuit.observable(&theta)?;
            let features: Vec<T> = rdms.iter().map(|rho| expect(rho, &obs)).collect();
            let l = loss(&forward(&features, &head)?, 0)?;
            Ok((t1, t2, l.as_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LandscapeSlice {
        n,
        n_qsc,
        grid_size,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{partial_trace_window, QuantumState, Window};

    #[test]
    fn window_marginal_matches_partial_trace() {
        let full = QuantumState::Pure(ry_product_state::<f64>(5).unwrap());
        for (start, width) in [(0, 2), (1, 3), (3, 2), (4, 1)] {
            let direct = product_window_rdm::<f64>(5, start, width).unwrap();
            let traced = partial_trace_window(&full, Window::new(start, width).unwrap()).unwrap();
            assert!(direct.max_abs_diff(traced.matrix()) < 1e-12);
        }
    }

    #[test]
    fn scan_rejects_oversized_window() {
        assert!(bp_variance_scan::<f64>(&[3], &[4], 200, 0).is_err());
        assert!(bp_variance_scan::<f64>(&[6], &[2], 10, 0).is_err());
    }

    #[test]
    fn landscape_losses_are_bounded() {
        let s = landscape_slice::<f64>(6, 2, 9, 1).unwrap();
        assert_eq!(s.points.len(), 81);
        assert!(s.points.iter().all(|p| (0.0..=0.5).contains(&p.2)));
        assert!(landscape_slice::<f64>(6, 2, 1, 1).is_err());
    }
}

use num_complex::Complex;

use super::Report;
use crate::data::{psi_u, rho_v, Dataset, LabeledState};
use crate::error::{Error, Result};
use crate::head::{forward, predict_label, ClassifierHead};
use crate::linalg::{trace_distance, CMatrix};
use crate::qcore::{partial_trace_window, PureState, QuantumState, ShotConfig, Window};
use crate::shadow::{build_ansatz_mnist, build_ansatz_qsd, features_from_rdms, ShadowEnsemble, WindowRdms};
use crate::train::{fit, TrainConfig};

const EXACT_TOL: f64 = 1e-10;

/// `[o1(ψ_u), o2(ψ_u), o1(ρ_v), o2(ρ_v)]` for the single-`RY` circuit.
pub fn theorem3_closed_forms(theta: f64, u: f64, v: f64) -> [f64; 4] {
    let (s, c) = theta.sin_cos();
    [
        (1.0 - 2.0 * u * u) * s + 2.0 * u * (1.0 - u * u).sqrt() * c,
        s,
        (1.0 - 2.0 * v * v) * s,
        (2.0 * v * v - 1.0) * s,
    ]
}

/// Angle and head from the existence proof: `0 < sin θ ≤ cos θ < 1`,
/// `w2 < w1 < 0` and `b = (w1 − w2) sin θ`.
pub fn theorem3_head() -> (f64, ClassifierHead<f64>) {
    let theta = std::f64::consts::FRAC_PI_6;
    let (w1, w2) = (-1.0, -2.0);
    let head = ClassifierHead::new(1, 2, vec![w1, w2], vec![(w1 - w2) * theta.sin()]).expect("2-feature head");
    (theta, head)
}

fn qsd_features(rdms: &WindowRdms<f64>, theta: f64) -> Result<Vec<f64>> {
    let ens = ShadowEnsemble::new(vec![build_ansatz_qsd()], vec![vec![theta]])?;
    Ok(features_from_rdms(rdms, &ens, &ens.observables()?, &ShotConfig::exact(), 0)?.flatten())
}

fn logit(head: &ClassifierHead<f64>, features: &[f64]) -> Result<f64> {
    Ok(forward(features, head)?.logits[0])
}

/// Simulator features of `ψ_u` and `ρ_v` against their closed forms over the
/// grids, plus the proof's separating construction.
pub fn verify_theorem3(theta_grid: &[f64], uv_grid: &[f64]) -> Result<Report> {
    if theta_grid.is_empty() || uv_grid.is_empty() {
        return Err(Error::domain("theorem 3 grids must be nonempty"));
    }
    let prep = |s: QuantumState<f64>| WindowRdms::prepare(&s, &[1]);
    let us = uv_grid.iter().map(|&x| prep(psi_u(x).into())).collect::<Result<Vec<_>>>()?;
    let vs = uv_grid.iter().map(|&x| prep(rho_v(x).into())).collect::<Result<Vec<_>>>()?;
    let mut report = Report::new("theorem3");

    let mut max_dev = 0.0f64;
    for &theta in theta_grid {
        for (k, &x) in uv_grid.iter().enumerate() {
            let fu = qsd_features(&us[k], theta)?;
            let fv = qsd_features(&vs[k], theta)?;
            let closed = theorem3_closed_forms(theta, x, x);
            for (sim, cf) in fu.iter().chain(&fv).zip(&closed) {
                max_dev = max_dev.max((sim - cf).abs());
            }
        }
    }
    report.push("closed-form deviation", max_dev < EXACT_TOL, max_dev, "< 1e-10");

    let (theta, head) = theorem3_head();
    let mut wrong = 0usize;
    for (k, &x) in uv_grid.iter().enumerate() {
        if x < 1.0 {
            let pu = forward(&qsd_features(&us[k], theta)?, &head)?;
            let pv = forward(&qsd_features(&vs[k], theta)?, &head)?;
            wrong += usize::from(predict_label(&pu) != 0) + usize::from(predict_label(&pv) != 1);
        }
    }
    report.push("construction misclassified", wrong == 0, wrong as f64, "= 0 for u, v < 1");

    let zu = logit(&head, &qsd_features(&prep(psi_u(1.0).into())?, theta)?)?;
    let zv = logit(&head, &qsd_features(&prep(rho_v(1.0).into())?, theta)?)?;
    report.push("u = v = 1 logit gap", (zu - zv).abs() < EXACT_TOL, (zu - zv).abs(), "< 1e-10");

    let edge = qsd_features(&prep(rho_v(1.0).into())?, std::f64::consts::FRAC_PI_2)?;
    let dev = (edge[0] + 1.0).abs().max((edge[1] - 1.0).abs());
    report.push("θ = π/2, v = 1 features (−1, 1)", dev < EXACT_TOL, dev, "< 1e-10");
    Ok(report)
}

/// `(|000⟩ ± |110⟩)/√2`.
fn corollary_pair() -> Result<[PureState<f64>; 2]> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let make = |sign: f64| {
        let mut amps = vec![Complex::new(0.0, 0.0); 8];
        amps[0] = Complex::new(h, 0.0);
        amps[6] = Complex::new(sign * h, 0.0);
        PureState::new(3, amps)
    };
    Ok([make(1.0)?, make(-1.0)?])
}

/// Identical 1-local marginals and 1-local features, distinct 2-local
/// marginals, and a trained 2-local classifier that separates the pair.
pub fn verify_corollary1() -> Result<Report> {
    let [a, b] = corollary_pair()?;
    let (qa, qb): (QuantumState<f64>, QuantumState<f64>) = (a.into(), b.into());
    let mut report = Report::new("corollary1");

    let mixed = CMatrix::identity(2).scale(Complex::new(0.5, 0.0));
    let mut zero = CMatrix::zeros(2);
    zero[(0, 0)] = Complex::new(1.0, 0.0);
    let expected = [mixed.clone(), mixed, zero];
    let mut diff = 0.0f64;
    for (q, want) in expected.iter().enumerate() {
        let ra = partial_trace_window(&qa, Window::new(q, 1)?)?;
        let rb = partial_trace_window(&qb, Window::new(q, 1)?)?;
        diff = diff
            .max(ra.matrix().max_abs_diff(rb.matrix()))
            .max(ra.matrix().max_abs_diff(want));
    }
    report.push("1-local marginals equal", diff < EXACT_TOL, diff, "< 1e-10");

    let ra = partial_trace_window(&qa, Window::new(0, 2)?)?;
    let rb = partial_trace_window(&qb, Window::new(0, 2)?)?;
    let td = trace_distance(ra.matrix(), rb.matrix());
    report.push("2-local trace distance", td > 0.4, td, "> 0.4");

    let (pa, pb) = (WindowRdms::prepare(&qa, &[1])?, WindowRdms::prepare(&qb, &[1])?);
    let mut feat_diff = 0.0f64;
    for k in 0..100 {
        let theta = std::f64::consts::TAU * k as f64 / 100.0;
        let (fa, fb) = (qsd_features(&pa, theta)?, qsd_features(&pb, theta)?);
        for (x, y) in fa.iter().zip(&fb) {
            feat_diff = feat_diff.max((x - y).abs());
        }
    }
    report.push("1-local features equal", feat_diff < EXACT_TOL, feat_diff, "< 1e-10");

    let copies = |n: usize| -> Vec<LabeledState<f64>> {
        (0..n)
            .flat_map(|_| {
                [
                    LabeledState { label: 0, state: qa.clone() },
                    LabeledState { label: 1, state: qb.clone() },
                ]
            })
            .collect()
    };
    let ds = Dataset::new(2, copies(10), copies(10))?;
    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 30,
        ..TrainConfig::default()
    };
    let (_, out) = fit(&ds, vec![build_ansatz_mnist(2, 1)?], &cfg)?;
    let acc = out.history.last().and_then(|r| r.val_acc).unwrap_or(0.0);
    report.push("2-local classifier accuracy", acc == 1.0, acc, "= 1");
    Ok(report)
}

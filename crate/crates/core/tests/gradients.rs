mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{end_to_end_fd_error, oracle_disagreement, random_pure, random_state};
use vsql::grad::{feature_gradient, loss_grad, BatchItem};
use vsql::head::{ClassifierHead, LossKind};
use vsql::qcore::{QuantumState, ShotConfig};
use vsql::shadow::{build_ansatz_mnist, ShadowEnsemble, WindowRdms};

#[test]
fn three_gradient_oracles_agree() {
    let (analytic, fd) = oracle_disagreement(120, 2024);
    assert!(analytic < 1e-10, "shift vs commutator: {analytic:e}");
    assert!(fd < 1e-6, "shift vs finite difference: {fd:e}");
}

#[test]
fn shared_parameter_sums_window_contributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let circuit = build_ansatz_mnist(2, 1).unwrap();
    let ens = ShadowEnsemble::<f64>::random(vec![circuit], &mut rng).unwrap();
    let input: QuantumState<f64> = random_pure(4, &mut rng).into();
    let head = ClassifierHead::new(1, 3, vec![1.0, 1.0, 1.0], vec![0.0]).unwrap();
    let fg = feature_gradient(&input, &ens).unwrap();
    let rdms = WindowRdms::prepare(&input, &[2]).unwrap();
    let item = BatchItem { rdms: &rdms, label: 1, key: 0 };
    let g = loss_grad(&[item], &ens, &head, LossKind::Mse, &ShotConfig::exact()).unwrap();
    // unit weights: ∂L/∂θ_l = δ Σ_i ∂o_i/∂θ_l with δ = ∂L/∂o_i shared by every window
    let delta = g.b[0];
    for l in 0..8 {
        let per_window: f64 = fg.values[0].iter().map(|row| row[l]).sum();
        assert!((g.theta[0][l] - delta * per_window).abs() < 1e-12);
    }
}

#[test]
fn binary_loss_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let err = end_to_end_fd_error(1, seed);
        assert!(err < 1e-5, "seed {seed}: {err:e}");
    }
}

#[test]
fn softmax_loss_gradient_matches_finite_differences() {
    for seed in 10..15 {
        let err = end_to_end_fd_error(3, seed);
        assert!(err < 1e-5, "seed {seed}: {err:e}");
    }
}

#[test]
fn batch_gradient_is_mean_of_sample_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ens = ShadowEnsemble::<f64>::random(vec![build_ansatz_mnist(2, 1).unwrap()], &mut rng).unwrap();
    let head = ClassifierHead::<f64>::gaussian(4, 3, &mut rng).unwrap();
    let rdms: Vec<_> = (0..6)
        .map(|_| WindowRdms::prepare(&random_state(4, &mut rng), &[2]).unwrap())
        .collect();
    let items: Vec<_> = rdms
        .iter()
        .enumerate()
        .map(|(m, r)| BatchItem { rdms: r, label: m % 4, key: m as u64 })
        .collect();
    let exact = ShotConfig::exact();
    let batch = loss_grad(&items, &ens, &head, LossKind::CrossEntropy, &exact).unwrap();
    let singles: Vec<_> = items
        .iter()
        .map(|it| loss_grad(std::slice::from_ref(it), &ens, &head, LossKind::CrossEntropy, &exact).unwrap())
        .collect();
    let mean = |f: &dyn Fn(&vsql::grad::LossGradient<f64>) -> f64| singles.iter().map(f).sum::<f64>() / 6.0;
    assert!((batch.loss - mean(&|g| g.loss)).abs() < 1e-12);
    for l in 0..8 {
        assert!((batch.theta[0][l] - mean(&|g| g.theta[0][l])).abs() < 1e-12);
    }
    for j in 0..12 {
        assert!((batch.w[j] - mean(&|g| g.w[j])).abs() < 1e-12);
    }
}

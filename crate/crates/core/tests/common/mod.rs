#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use vsql::grad::{analytic_grad, fd_grad, loss_grad, param_shift_grad, BatchItem};
use vsql::head::{ClassifierHead, LossKind};
use vsql::qcore::{DensityMatrix, PureState, QuantumState, ShotConfig};
use vsql::scalar::C;
use vsql::shadow::{
    build_ansatz_layered, build_ansatz_mnist, build_ansatz_ry_cnot, ShadowCircuit, ShadowEnsemble, WindowRdms,
};

pub fn random_pure(n: usize, rng: &mut ChaCha8Rng) -> PureState<f64> {
    let amps = (0..1usize << n)
        .map(|_| C::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    PureState::normalized(amps).unwrap()
}

pub fn random_state(n: usize, rng: &mut ChaCha8Rng) -> QuantumState<f64> {
    if rng.gen_bool(0.5) {
        random_pure(n, rng).into()
    } else {
        let states: Vec<_> = (0..3).map(|_| random_pure(n, rng)).collect();
        let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        DensityMatrix::mixture(&w, &states).unwrap().into()
    }
}

pub fn random_circuit(rng: &mut ChaCha8Rng) -> ShadowCircuit {
    match rng.gen_range(0..4) {
        0 => build_ansatz_mnist(2, rng.gen_range(1..3)).unwrap(),
        1 => build_ansatz_mnist(3, 1).unwrap(),
        2 => build_ansatz_ry_cnot(rng.gen_range(1..4)).unwrap(),
        _ => build_ansatz_layered(2, rng.gen_range(1..4)).unwrap(),
    }
}

/// Largest |shift − commutator| and |shift − central difference| over random
/// circuits, inputs, windows and parameters.
pub fn oracle_disagreement(configs: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_analytic, mut worst_fd) = (0.0f64, 0.0f64);
    for _ in 0..configs {
        let circuit = random_circuit(&mut rng);
        let n = circuit.n_qsc() + rng.gen_range(0..2);
        let ens = ShadowEnsemble::<f64>::random(vec![circuit.clone()], &mut rng).unwrap();
        let input = random_state(n, &mut rng);
        let i = rng.gen_range(0..=n - circuit.n_qsc());
        let l = rng.gen_range(0..circuit.n_params());
        let ps = param_shift_grad(&input, &ens, 0, i, l).unwrap();
        let an = analytic_grad(&input, &ens, 0, i, l).unwrap();
        let fd = fd_grad(&input, &ens, 0, i, l, 1e-4).unwrap();
        assert!(ps.abs() <= 1.0 + 1e-12);
        worst_analytic = worst_analytic.max((ps - an).abs());
        worst_fd = worst_fd.max((ps - fd).abs());
    }
    (worst_analytic, worst_fd)
}

fn batch_loss(items: &[BatchItem<'_, f64>], ens: &ShadowEnsemble<f64>, head: &ClassifierHead<f64>, kind: LossKind) -> f64 {
    loss_grad(items, ens, head, kind, &ShotConfig::exact()).unwrap().loss
}

/// Largest deviation between the batch loss gradient and central differences
/// of the loss, over every circuit angle, weight and bias, on 3 qubits.
pub fn end_to_end_fd_error(k: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let circuits = vec![build_ansatz_mnist(2, 1).unwrap(), build_ansatz_ry_cnot(2).unwrap()];
    let ens = ShadowEnsemble::<f64>::random(circuits, &mut rng).unwrap();
    let n = 3;
    let head = ClassifierHead::<f64>::gaussian(k, ens.n_features(n).unwrap(), &mut rng).unwrap();
    let kind = LossKind::for_outputs(k);
    let classes = head.n_classes();
    let rdms: Vec<_> = (0..4)
        .map(|_| WindowRdms::prepare(&random_state(n, &mut rng), &ens.widths()).unwrap())
        .collect();
    let items: Vec<_> = rdms
        .iter()
        .map(|r| BatchItem { rdms: r, label: rng.gen_range(0..classes), key: 0 })
        .collect();
    let g = loss_grad(&items, &ens, &head, kind, &ShotConfig::exact()).unwrap();
    let h = 1e-4;
    let central = |a: f64, b: f64| (a - b) / (2.0 * h);
    let mut worst = 0.0f64;
    for s in 0..ens.len() {
        for l in 0..ens.thetas()[s].len() {
            let (mut a, mut b) = (ens.clone(), ens.clone());
            a.thetas_mut()[s][l] += h;
            b.thetas_mut()[s][l] -= h;
            let fd = central(batch_loss(&items, &a, &head, kind), batch_loss(&items, &b, &head, kind));
            worst = worst.max((g.theta[s][l] - fd).abs());
        }
    }
    for idx in 0..head.weights().len() {
        let (mut a, mut b) = (head.clone(), head.clone());
        a.weights_mut()[idx] += h;
        b.weights_mut()[idx] -= h;
        let fd = central(batch_loss(&items, &ens, &a, kind), batch_loss(&items, &ens, &b, kind));
        worst = worst.max((g.w[idx] - fd).abs());
    }
    for idx in 0..head.k() {
        let (mut a, mut b) = (head.clone(), head.clone());
        a.bias_mut()[idx] += h;
        b.bias_mut()[idx] -= h;
        let fd = central(batch_loss(&items, &ens, &a, kind), batch_loss(&items, &ens, &b, kind));
        worst = worst.max((g.b[idx] - fd).abs());
    }
    worst
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{head_outputs, Optimizer, TrainConfig, SHUFFLE_TAG};
use crate::error::{Error, Result};
use crate::head::{forward, head_backward, loss, predict_label, ClassifierHead};
use crate::qcore::stream_key;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct BaselineOutcome<T: Real> {
    pub head: ClassifierHead<T>,
    pub n_params: usize,
    pub final_loss: f64,
    pub test_accuracy: f64,
}

pub fn accuracy<T: Real>(head: &ClassifierHead<T>, x: &[Vec<T>], y: &[usize]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::domain("cannot evaluate an empty dataset"));
    }
    let hits = x
        .par_iter()
        .zip(y)
        .map(|(v, &l)| forward(v, head).map(|p| usize::from(predict_label(&p) == l)))
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / x.len() as f64)
}

/// Single affine layer on raw pixel vectors, trained with the same optimizer
/// and batching as the quantum model. Returns held-out accuracy.
pub fn classical_baseline_fit<T: Real>(
    train_x: &[Vec<T>],
    train_y: &[usize],
    test_x: &[Vec<T>],
    test_y: &[usize],
    num_classes: usize,
    cfg: &TrainConfig,
) -> Result<BaselineOutcome<T>> {
    cfg.validate()?;
    if train_x.is_empty() {
        return Err(Error::domain("training set is empty"));
    }
    if train_x.len() != train_y.len() || test_x.len() != test_y.len() {
        return Err(Error::config("inputs and labels differ in length"));
    }
    let dim = train_x[0].len();
    if train_x.iter().chain(test_x).any(|v| v.len() != dim) {
        return Err(Error::config("input vectors differ in length"));
    }
    if let Some(&bad) = train_y.iter().chain(test_y).find(|&&l| l >= num_classes) {
        return Err(Error::domain(format!("label {bad} outside 0..{num_classes}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut head = ClassifierHead::gaussian(head_outputs(num_classes), dim, &mut rng)?;
    let n_w = head.weights().len();
    let mut params: Vec<T> = head.weights().iter().chain(head.bias()).copied().collect();
    let mut opt = Optimizer::new(cfg.optimizer, params.len());
    let cap = cfg.max_iterations.unwrap_or(usize::MAX);
    let mut iteration = 0;
    let mut final_loss = f64::NAN;
    'epochs: for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..train_x.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream_key(&[SHUFFLE_TAG, epoch as u64]));
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            if iteration >= cap {
                break 'epochs;
            }
            let parts = chunk
                .par_iter()
                .map(|&i| {
                    let pred = forward(&train_x[i], &head)?;
                    let g = head_backward(&train_x[i], &head, &pred, train_y[i])?;
                    Ok((loss(&pred, train_y[i])?, g))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut grads = vec![T::zero(); params.len()];
            let mut batch_loss = T::zero();
            for (l, g) in &parts {
                batch_loss += *l;
                for (acc, &v) in grads.iter_mut().zip(g.w.iter().chain(&g.b)) {
                    *acc += v;
                }
            }
            let inv = T::one() / T::lit(chunk.len() as f64);
            grads.iter_mut().for_each(|g| *g *= inv);
            opt.step(&mut params, &grads, cfg)?;
            head.weights_mut().copy_from_slice(&params[..n_w]);
            head.bias_mut().copy_from_slice(&params[n_w..]);
            final_loss = (batch_loss * inv).as_f64();
            iteration += 1;
        }
    }
    let test_accuracy = accuracy(&head, test_x, test_y)?;
    Ok(BaselineOutcome {
        n_params: head.n_params(),
        head,
        final_loss,
        test_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mnist_sized_layer_has_7850_parameters() {
        let x = vec![vec![0.5f64; 784]];
        let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
        let out = classical_baseline_fit(&x, &[3], &x, &[3], 10, &cfg).unwrap();
        assert_eq!(out.n_params, 7850);
    }

    #[test]
    fn single_class_is_learned() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 5) as f64 / 5.0, 1.0, 0.3]).collect();
        let y = vec![2; 20];
        let cfg = TrainConfig { epochs: 30, batch_size: 5, learning_rate: 0.1, ..TrainConfig::default() };
        let out = classical_baseline_fit(&x, &y, &x, &y, 4, &cfg).unwrap();
        assert_eq!(out.test_accuracy, 1.0);
    }
}

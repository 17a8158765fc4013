use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
        }
    }
}

fn check_grads<T: Real>(params: &[T], grads: &[T]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::config(format!(
            "{} parameters but {} gradient entries",
            params.len(),
            grads.len()
        )));
    }
    if let Some((i, g)) = grads.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(Error::Training(format!("gradient entry {i} is {g}")));
    }
    Ok(())
}

/// Bias-corrected Adam update.
pub fn adam_step<T: Real>(params: &mut [T], grads: &[T], state: &mut AdamState<T>, cfg: &TrainConfig) -> Result<()> {
    check_grads(params, grads)?;
    if state.m.len() != params.len() {
        return Err(Error::config("optimizer state does not match the parameter count"));
    }
    let (b1, b2) = (T::lit(cfg.adam_beta1), T::lit(cfg.adam_beta2));
    let (lr, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.adam_eps));
    state.t += 1;
    let t = state.t as i32;
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

pub fn sgd_step<T: Real>(params: &mut [T], grads: &[T], cfg: &TrainConfig) -> Result<()> {
    check_grads(params, grads)?;
    let lr = T::lit(cfg.learning_rate);
    for (p, &g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
    Ok(())
}

/// Optimizer chosen by the config, holding whatever state it needs.
#[derive(Clone, Debug)]
pub enum Optimizer<T> {
    Adam(AdamState<T>),
    Sgd,
}

impl<T: Real> Optimizer<T> {
    pub fn new(kind: OptimizerKind, n_params: usize) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam(AdamState::new(n_params)),
            OptimizerKind::Sgd => Optimizer::Sgd,
        }
    }

    pub fn step(&mut self, params: &mut [T], grads: &[T], cfg: &TrainConfig) -> Result<()> {
        match self {
            Optimizer::Adam(state) => adam_step(params, grads, state, cfg),
            Optimizer::Sgd => sgd_step(params, grads, cfg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lr: f64) -> TrainConfig {
        TrainConfig { learning_rate: lr, ..TrainConfig::default() }
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut p = vec![0.3, -1.2];
        let mut st = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut st, &cfg(0.1)).unwrap();
        assert_eq!(p, vec![0.3, -1.2]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let lr = 0.03;
        let mut p = vec![1.0, 1.0, 1.0];
        let mut st = AdamState::new(3);
        adam_step(&mut p, &[2.5, -0.01, 1e-3], &mut st, &cfg(lr)).unwrap();
        assert!((p[0] - (1.0 - lr)).abs() < lr * 1e-4);
        assert!((p[1] - (1.0 + lr)).abs() < lr * 1e-4);
        assert!((p[2] - (1.0 - lr)).abs() < lr * 1e-4);
    }

    #[test]
    fn non_finite_gradient_is_training_error() {
        let mut p = vec![0.0];
        let mut st = AdamState::new(1);
        assert!(matches!(
            adam_step(&mut p, &[f64::NAN], &mut st, &cfg(0.1)),
            Err(Error::Training(_))
        ));
        assert!(matches!(sgd_step(&mut p, &[f64::INFINITY], &cfg(0.1)), Err(Error::Training(_))));
    }

    #[test]
    fn sgd_is_plain_descent() {
        let mut p = vec![1.0];
        sgd_step(&mut p, &[2.0], &cfg(0.25)).unwrap();
        assert_eq!(p, vec![0.5]);
    }
}

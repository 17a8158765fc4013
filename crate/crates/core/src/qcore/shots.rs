//! Finite-shot estimation of ±1-valued observables.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ShotMode {
    #[default]
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotConfig {
    #[serde(default)]
    pub mode: ShotMode,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_shots() -> u64 {
    1000
}

impl Default for ShotConfig {
    fn default() -> Self {
        Self::exact()
    }
}

impl ShotConfig {
    pub fn exact() -> Self {
        Self {
            mode: ShotMode::Exact,
            shots: default_shots(),
            seed: 0,
        }
    }

    pub fn sampled(shots: u64, seed: u64) -> Self {
        Self {
            mode: ShotMode::Sampled,
            shots,
            seed,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.mode == ShotMode::Exact
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == ShotMode::Sampled && self.shots == 0 {
            return Err(Error::config("sampled mode needs at least one shot"));
        }
        Ok(())
    }
}

/// SplitMix64 finaliser folded over `parts`; derives independent stream ids
/// from (sample, circuit, window, evaluation) counters.
pub fn stream_key(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

/// Estimates a ±1-eigenvalued observable with the given exact expectation.
///
/// Each shot yields +1 with probability `(1 + exact)/2`; the estimate is
/// `2·(fraction of +1) − 1`. The draw depends only on `cfg.seed` and `stream`.
pub fn sample_expectation<T: Real>(exact: T, cfg: &ShotConfig, stream: u64) -> Result<T> {
    if !exact.is_finite() || exact.abs() > T::one() + T::lit(1e-9) {
        return Err(Error::domain(format!("expectation {exact} outside [-1, 1]")));
    }
    match cfg.mode {
        ShotMode::Exact => Ok(exact),
        ShotMode::Sampled => {
            cfg.validate()?;
            let p = ((exact.as_f64() + 1.0) * 0.5).clamp(0.0, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream);
            let plus = Binomial::new(cfg.shots, p)
                .map_err(|e| Error::domain(e.to_string()))?
                .sample(&mut rng);
            Ok(T::lit(2.0 * plus as f64 / cfg.shots as f64 - 1.0))
        }
    }
}

//! Seeded Monte Carlo of the full pipeline: uniform source, binary symmetric
//! observation channels, an idealized lossy codec and a majority vote.
//!
//! The codec is the test-channel idealization: each reproduced bit is flipped
//! independently with probability `D(R)`. Codewords are never materialized.
//!
//! Randomness is drawn from one ChaCha8 stream per `(trial, slot)` pair, where
//! slot 0 feeds the source and slot `a + 1` feeds sensor `a`. Every stream is
//! a pure function of the master seed, so results do not depend on how trials
//! are spread over workers.

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{collective_error_exact, combined_error, derive_sensor_count};
use crate::distortion::DistortionModel;
use crate::error::{Error, Result};
use crate::types::{Capacity, Distortion, NoiseLevel, Rate};

pub const DEFAULT_BLOCK_BITS: u64 = 10_000;
pub const DEFAULT_TRIALS: u64 = 100;
/// Default cap on `m_bits * n_trials`.
pub const DEFAULT_BUDGET_CAP: u128 = 1_000_000_000;

/// A block of `+1/-1` symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitBlock(Vec<i8>);

impl BitBlock {
    pub fn new(symbols: Vec<i8>) -> Result<Self> {
        if let Some(bad) = symbols.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::domain("symbol", *bad as f64, "{+1, -1}"));
        }
        Ok(Self(symbols))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[i8] {
        &self.0
    }

    /// Bit notation: `+1 -> 0`, `-1 -> 1`.
    pub fn to_bits(&self) -> Vec<u8> {
        self.0.iter().map(|&s| u8::from(s < 0)).collect()
    }
}

/// Independent RNG stream for one `(trial, slot)` pair under `seed`.
pub fn stream(seed: u64, trial: u64, slot: u64) -> ChaCha8Rng {
    debug_assert!(trial <= u32::MAX as u64 && slot <= u32::MAX as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 32) | slot);
    rng
}

fn flip_in_place<R: Rng + ?Sized>(symbols: &mut [i8], prob: f64, rng: &mut R) {
    if prob == 0.0 {
        return;
    }
    let coin = Bernoulli::new(prob).expect("flip probability in [0, 1]");
    for s in symbols {
        if coin.sample(rng) {
            *s = -*s;
        }
    }
}

/// `m` independent uniform `+1/-1` symbols.
pub fn sample_source<R: Rng + ?Sized>(m: usize, rng: &mut R) -> BitBlock {
    BitBlock(
        (0..m)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect(),
    )
}

/// Binary symmetric channel: each symbol negated with probability `p`.
pub fn observe<R: Rng + ?Sized>(x: &BitBlock, p: NoiseLevel, rng: &mut R) -> BitBlock {
    let mut y = x.clone();
    flip_in_place(&mut y.0, p.get(), rng);
    y
}

/// Lossy compression and reconstruction as a test channel with flip
/// probability `D(r)`.
pub fn compress_reconstruct<R: Rng + ?Sized>(
    y: &BitBlock,
    r: Rate,
    model: &dyn DistortionModel,
    rng: &mut R,
) -> Result<BitBlock> {
    let d = model.d_of_rate(r)?;
    let mut z = y.clone();
    flip_in_place(&mut z.0, d.get(), rng);
    Ok(z)
}

/// Per-position sign of the sum over an odd number of reproductions.
pub fn majority_vote(reproductions: &[BitBlock]) -> Result<BitBlock> {
    if reproductions.len().is_multiple_of(2) {
        return Err(Error::EvenSensorCount(reproductions.len() as u64));
    }
    let m = reproductions[0].len();
    let mut sums = vec![0i64; m];
    for block in reproductions {
        if block.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                actual: block.len(),
            });
        }
        for (acc, &s) in sums.iter_mut().zip(&block.0) {
            *acc += s as i64;
        }
    }
    Ok(BitBlock(
        sums.into_iter()
            .map(|s| if s > 0 { 1 } else { -1 })
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct TrialConfig<'m> {
    pub p: NoiseLevel,
    pub r: Rate,
    pub lambda: Capacity,
    pub m_bits: u64,
    pub n_trials: u64,
    pub seed: u64,
    pub model: &'m dyn DistortionModel,
    pub budget_cap: u128,
}

impl<'m> TrialConfig<'m> {
    pub fn new(p: NoiseLevel, r: Rate, lambda: Capacity, model: &'m dyn DistortionModel) -> Self {
        Self {
            p,
            r,
            lambda,
            m_bits: DEFAULT_BLOCK_BITS,
            n_trials: DEFAULT_TRIALS,
            seed: 0,
            model,
            budget_cap: DEFAULT_BUDGET_CAP,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_block(mut self, m_bits: u64, n_trials: u64) -> Self {
        self.m_bits = m_bits;
        self.n_trials = n_trials;
        self
    }

    /// Keeps the block length (shrinking it if the budget is smaller) and
    /// picks the trial count that covers `total_bits`.
    pub fn with_total_bits(mut self, total_bits: u64) -> Self {
        let total_bits = total_bits.max(1);
        self.m_bits = self.m_bits.min(total_bits);
        self.n_trials = total_bits.div_ceil(self.m_bits);
        self
    }

    pub fn with_budget_cap(mut self, cap: u128) -> Self {
        self.budget_cap = cap;
        self
    }

    pub fn sensor_count(&self) -> Result<u64> {
        derive_sensor_count(self.lambda, self.r)
    }

    fn validate(&self) -> Result<(u64, Distortion)> {
        if self.m_bits == 0 {
            return Err(Error::domain("m_bits", 0.0, "[1, inf)"));
        }
        if self.n_trials == 0 || self.n_trials > u32::MAX as u64 {
            return Err(Error::domain("n_trials", self.n_trials as f64, "[1, 2^32)"));
        }
        let requested = self.m_bits as u128 * self.n_trials as u128;
        if requested > self.budget_cap {
            return Err(Error::BudgetExceeded {
                requested,
                cap: self.budget_cap,
            });
        }
        let l = self.sensor_count()?;
        if l >= u32::MAX as u64 {
            return Err(Error::domain("sensor count", l as f64, "[1, 2^32 - 1)"));
        }
        Ok((l, self.model.d_of_rate(self.r)?))
    }
}

/// The parts of a [`TrialConfig`] that determine the result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub p: f64,
    pub r: f64,
    pub lambda: f64,
    pub l_sensors: u64,
    pub m_bits: u64,
    pub n_trials: u64,
    pub seed: u64,
    pub model: String,
    pub distortion: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialBatchResult {
    pub total_bits: u64,
    pub bit_errors: u64,
    pub p_hat: f64,
    pub std_err: f64,
    pub seed_used: u64,
    pub config: ConfigEcho,
}

impl TrialBatchResult {
    /// Exact majority-vote error for the configuration's `rho` and `L`.
    pub fn predicted(&self) -> f64 {
        collective_error_exact(self.config.rho, self.config.l_sensors).expect("validated config")
    }

    /// `(p_hat - predicted) / std_err`. Falls back to the predicted standard
    /// error when no errors were observed.
    pub fn z_score(&self) -> f64 {
        let predicted = self.predicted();
        let diff = self.p_hat - predicted;
        if diff == 0.0 {
            return 0.0;
        }
        let se = if self.std_err > 0.0 {
            self.std_err
        } else {
            (predicted * (1.0 - predicted) / self.total_bits as f64).sqrt()
        };
        diff / se
    }
}

/// Majority-vote errors of one trial.
fn run_trial(
    cfg: &TrialConfig<'_>,
    trial: u64,
    l_sensors: u64,
    d: Distortion,
    scratch: &mut Vec<i8>,
) -> u64 {
    let m = cfg.m_bits as usize;
    let x = sample_source(m, &mut stream(cfg.seed, trial, 0));
    let mut sums = vec![0i32; m];
    scratch.resize(m, 0);
    for sensor in 0..l_sensors {
        let mut rng = stream(cfg.seed, trial, sensor + 1);
        scratch.copy_from_slice(&x.0);
        flip_in_place(scratch, cfg.p.get(), &mut rng);
        flip_in_place(scratch, d.get(), &mut rng);
        for (acc, &s) in sums.iter_mut().zip(scratch.iter()) {
            *acc += s as i32;
        }
    }
    sums.iter()
        .zip(&x.0)
        .filter(|(&sum, &truth)| (sum > 0) != (truth > 0))
        .count() as u64
}

/// Runs every trial on the current rayon pool and tallies bit errors.
pub fn run_batch(cfg: &TrialConfig<'_>) -> Result<TrialBatchResult> {
    let (l_sensors, d) = cfg.validate()?;
    let bit_errors: u64 = (0..cfg.n_trials)
        .into_par_iter()
        .map_init(Vec::new, |scratch, t| {
            run_trial(cfg, t, l_sensors, d, scratch)
        })
        .sum();

    let total_bits = cfg.m_bits * cfg.n_trials;
    let p_hat = bit_errors as f64 / total_bits as f64;
    Ok(TrialBatchResult {
        total_bits,
        bit_errors,
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / total_bits as f64).sqrt(),
        seed_used: cfg.seed,
        config: ConfigEcho {
            p: cfg.p.get(),
            r: cfg.r.get(),
            lambda: cfg.lambda.get(),
            l_sensors,
            m_bits: cfg.m_bits,
            n_trials: cfg.n_trials,
            seed: cfg.seed,
            model: cfg.model.id().to_owned(),
            distortion: d.get(),
            rho: combined_error(cfg.p, d),
        },
    })
}

/// [`run_batch`] on a dedicated pool of `workers` threads.
pub fn run_batch_with_workers(cfg: &TrialConfig<'_>, workers: usize) -> Result<TrialBatchResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::WorkerPool(e.to_string()))?;
    pool.install(|| run_batch(cfg))
}

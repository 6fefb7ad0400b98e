//! Sampling the truncated random integer `N_x = ∏_{p≤x} p^{X_p}` and its
//! factor count `Ω_x = Σ_{p≤x} X_p`, with independent `X_p ~ Bernoulli(1/p)`.
//!
//! Trials are split into fixed-size chunks. Chunk `i` draws from a ChaCha8
//! stream keyed by `(seed, i)`, so the output depends only on the seed and the
//! chunk layout and never on how many workers run the chunks or in what order.

use num_bigint::BigUint;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::PrimeTable;

pub const DEFAULT_CHUNK_SIZE: u64 = 4096;

/// Largest factor count for which [`sample_integer`] builds the product.
pub const MAX_INTEGER_FACTORS: u64 = 1_000_000;

const GENERATOR: &str = "chacha8/seed_from_u64(seed)/stream=chunk_index";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelParams {
    pub x: u64,
    pub seed: u64,
    pub trials: u64,
    pub chunk_size: u64,
}

impl ModelParams {
    pub fn new(x: u64, seed: u64, trials: u64, chunk_size: u64) -> Result<Self> {
        let params = ModelParams {
            x,
            seed,
            trials,
            chunk_size,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x < 2 {
            return Err(Error::invalid(
                "x",
                format!("must be at least 2 so that one prime is present (got {})", self.x),
            ));
        }
        if self.trials < 1 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.chunk_size < 1 {
            return Err(Error::invalid("chunk_size", "must be at least 1"));
        }
        Ok(())
    }

    pub fn chunk_count(&self) -> u64 {
        self.trials.div_ceil(self.chunk_size)
    }
}

/// How the trials of a batch were laid out over random streams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub chunk_size: u64,
    pub chunk_count: u64,
    pub last_chunk_len: u64,
}

impl Provenance {
    pub fn for_params(params: &ModelParams) -> Self {
        let chunk_count = params.chunk_count();
        let last_chunk_len = params.trials - (chunk_count.saturating_sub(1)) * params.chunk_size;
        Provenance {
            generator: GENERATOR.to_string(),
            chunk_size: params.chunk_size,
            chunk_count,
            last_chunk_len,
        }
    }
}

/// Independent draws of `Ω_x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub params: ModelParams,
    pub omegas: Vec<u32>,
    pub provenance: Provenance,
}

/// One realisation of `N_x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomInteger {
    pub value: BigUint,
    /// Primes with `X_p = 1`, ascending.
    pub factor_set: Vec<u32>,
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn thresholds(primes: &[u32]) -> Vec<f64> {
    primes.iter().map(|&p| 1.0 / f64::from(p)).collect()
}

/// One draw of `Ω_x`: a uniform in `[0, 1)` per prime, counted when below `1/p`.
fn draw_omega<R: Rng>(rng: &mut R, thresholds: &[f64]) -> u32 {
    thresholds
        .iter()
        .map(|&t| u32::from(rng.random::<f64>() < t))
        .sum()
}

fn fill_chunk(out: &mut [u32], seed: u64, chunk: u64, thresholds: &[f64]) {
    let mut rng = chunk_rng(seed, chunk);
    for slot in out {
        *slot = draw_omega(&mut rng, thresholds);
    }
}

/// Draws of chunk `chunk` alone, exactly as they appear in [`sample_omega`].
pub fn sample_chunk(table: &PrimeTable, params: &ModelParams, chunk: u64) -> Result<Vec<u32>> {
    params.validate()?;
    if chunk >= params.chunk_count() {
        return Err(Error::OutOfRange {
            param: "chunk",
            value: chunk,
            limit: params.chunk_count() - 1,
        });
    }
    let primes = table.primes_upto(params.x)?;
    let start = chunk * params.chunk_size;
    let len = params.chunk_size.min(params.trials - start) as usize;
    let mut out = vec![0; len];
    fill_chunk(&mut out, params.seed, chunk, &thresholds(primes));
    Ok(out)
}

pub fn sample_omega(table: &PrimeTable, params: &ModelParams) -> Result<SampleBatch> {
    params.validate()?;
    let primes = table.primes_upto(params.x)?;
    let thresholds = thresholds(primes);
    let trials = usize::try_from(params.trials).map_err(|_| Error::ResourceBound {
        param: "trials",
        value: params.trials,
        cap: usize::MAX as u64,
    })?;

    let mut omegas = vec![0u32; trials];
    omegas
        .par_chunks_mut(params.chunk_size as usize)
        .enumerate()
        .for_each(|(chunk, out)| fill_chunk(out, params.seed, chunk as u64, &thresholds));

    Ok(SampleBatch {
        params: *params,
        omegas,
        provenance: Provenance::for_params(params),
    })
}

/// One realisation of `N_x` from stream 0 of `seed`, drawn the same way as
/// a single trial of [`sample_omega`].
pub fn sample_integer(table: &PrimeTable, x: u64, seed: u64) -> Result<RandomInteger> {
    let mut rng = chunk_rng(seed, 0);
    sample_integer_with(table, x, |p| rng.random::<f64>() < 1.0 / f64::from(p))
}

/// Builds `N_x` from caller-supplied indicator values `X_p`, asked for each
/// prime `p ≤ x` in ascending order.
pub fn sample_integer_with<F>(table: &PrimeTable, x: u64, mut indicator: F) -> Result<RandomInteger>
where
    F: FnMut(u32) -> bool,
{
    let primes = table.primes_upto(x)?;
    if primes.len() as u64 > MAX_INTEGER_FACTORS {
        return Err(Error::ResourceBound {
            param: "pi(x)",
            value: primes.len() as u64,
            cap: MAX_INTEGER_FACTORS,
        });
    }
    let factor_set: Vec<u32> = primes.iter().copied().filter(|&p| indicator(p)).collect();
    Ok(RandomInteger {
        value: product(&factor_set),
        factor_set,
    })
}

/// Balanced product tree.
fn product(factors: &[u32]) -> BigUint {
    match factors.len() {
        0 => BigUint::from(1u32),
        1 => BigUint::from(factors[0]),
        n => {
            let (l, r) = factors.split_at(n / 2);
            product(l) * product(r)
        }
    }
}

/// `(ω − mu) / sigma` for every draw, in order.
pub fn normalize_batch(batch: &SampleBatch, mu: f64, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(
            "sigma",
            format!("must be positive (got {sigma})"),
        ));
    }
    Ok(batch
        .omegas
        .iter()
        .map(|&w| (f64::from(w) - mu) / sigma)
        .collect())
}

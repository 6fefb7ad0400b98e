//! Prime generation and the reciprocal sums over primes.
//!
//! A [`PrimeTable`] holds every prime up to its sieve bound together with
//! running sums of `1/p` and `1/p²`, so that `Σ_{p≤x} 1/p` and its square
//! counterpart are a binary search plus an array lookup for any `x` under the
//! bound. The sieve is a segmented sieve of Eratosthenes over odd numbers only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound accepted by [`PrimeTable::sieve`].
pub const DEFAULT_SIEVE_CAP: u64 = 1_000_000_000;

/// Odd numbers per sieve segment (one byte each).
const SEGMENT_ODDS: usize = 1 << 18;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// All primes up to `limit` with prefix sums of `1/p` and `1/p²`.
///
/// `recip_prefix[k]` is `Σ_{i≤k} 1/primes[i]`, accumulated in ascending order
/// with compensated summation; `recip_sq_prefix` likewise for `1/p²`.
/// Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u32>,
    recip_prefix: Vec<f64>,
    recip_sq_prefix: Vec<f64>,
}

/// Expected number of new prime factors contributed by primes in `(x0, x1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDivergenceReport {
    pub x0: u64,
    pub x1: u64,
    /// `Σ_{x0 < p ≤ x1} 1/p`.
    pub tail_sum: f64,
    /// Same value read as `E[#{p ∈ (x0, x1] : X_p = 1}]`.
    pub expected_new_factors: f64,
}

impl PrimeTable {
    /// Sieves all primes `≤ limit` under [`DEFAULT_SIEVE_CAP`].
    pub fn sieve(limit: u64) -> Result<Self> {
        Self::sieve_with_cap(limit, DEFAULT_SIEVE_CAP)
    }

    pub fn sieve_with_cap(limit: u64, cap: u64) -> Result<Self> {
        let cap = cap.min(u64::from(u32::MAX));
        if limit > cap {
            return Err(Error::ResourceBound {
                param: "limit",
                value: limit,
                cap,
            });
        }
        let primes = segmented_sieve(limit as u32);

        let mut recip_prefix = Vec::with_capacity(primes.len());
        let mut recip_sq_prefix = Vec::with_capacity(primes.len());
        let mut recip = CompensatedSum::default();
        let mut recip_sq = CompensatedSum::default();
        for &p in &primes {
            let inv = 1.0 / f64::from(p);
            recip.add(inv);
            recip_sq.add(inv * inv);
            recip_prefix.push(recip.value());
            recip_sq_prefix.push(recip_sq.value());
        }

        Ok(PrimeTable {
            limit,
            primes,
            recip_prefix,
            recip_sq_prefix,
        })
    }

    /// Reassembles a table from previously written columns.
    pub(crate) fn from_parts(
        limit: u64,
        primes: Vec<u32>,
        recip_prefix: Vec<f64>,
        recip_sq_prefix: Vec<f64>,
    ) -> Self {
        PrimeTable {
            limit,
            primes,
            recip_prefix,
            recip_sq_prefix,
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn recip_prefix(&self) -> &[f64] {
        &self.recip_prefix
    }

    pub fn recip_sq_prefix(&self) -> &[f64] {
        &self.recip_sq_prefix
    }

    /// Primes `≤ x`.
    pub fn primes_upto(&self, x: u64) -> Result<&[u32]> {
        let count = self.prime_count(x)?;
        Ok(&self.primes[..count])
    }

    /// `π(x)`, the number of primes `≤ x`.
    pub fn prime_count(&self, x: u64) -> Result<usize> {
        self.check_covered("x", x)?;
        Ok(self.primes.partition_point(|&p| u64::from(p) <= x))
    }

    /// `Σ_{p≤x} 1/p`, summed in ascending prime order.
    pub fn reciprocal_sum(&self, x: u64) -> Result<f64> {
        let count = self.prime_count(x)?;
        Ok(prefix_at(&self.recip_prefix, count))
    }

    /// `Σ_{p≤x} 1/p²`, the partial sums of the prime zeta function at 2.
    pub fn prime_zeta_partial(&self, x: u64) -> Result<f64> {
        let count = self.prime_count(x)?;
        Ok(prefix_at(&self.recip_sq_prefix, count))
    }

    /// `Σ_{p≤x} 1/p − ln ln x`, which tends to the Meissel–Mertens constant.
    pub fn mertens_constant_estimate(&self, x: u64) -> Result<f64> {
        let loglog = loglog(x)?;
        Ok(self.reciprocal_sum(x)? - loglog)
    }

    pub fn tail_divergence_report(&self, x0: u64, x1: u64) -> Result<TailDivergenceReport> {
        if x0 >= x1 {
            return Err(Error::invalid(
                "x0",
                format!("must be below x1 (got x0 = {x0}, x1 = {x1})"),
            ));
        }
        let tail_sum = self.reciprocal_sum(x1)? - self.reciprocal_sum(x0)?;
        Ok(TailDivergenceReport {
            x0,
            x1,
            tail_sum,
            expected_new_factors: tail_sum,
        })
    }

    fn check_covered(&self, param: &'static str, x: u64) -> Result<()> {
        if x > self.limit {
            return Err(Error::OutOfRange {
                param,
                value: x,
                limit: self.limit,
            });
        }
        Ok(())
    }
}

fn prefix_at(prefix: &[f64], count: usize) -> f64 {
    match count {
        0 => 0.0,
        n => prefix[n - 1],
    }
}

/// Natural `ln ln x`, defined here for `x ≥ 3` only.
pub fn loglog(x: u64) -> Result<f64> {
    if x < 3 {
        return Err(Error::Domain {
            param: "x",
            value: x as f64,
            reason: "ln ln x needs x >= 3",
        });
    }
    Ok((x as f64).ln().ln())
}

/// Plain sieve of Eratosthenes; used for the base primes up to `√limit`.
fn simple_sieve(limit: u32) -> Vec<u32> {
    let limit = limit as usize;
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut i = 2;
    while i * i <= limit {
        if !composite[i] {
            for j in (i * i..=limit).step_by(i) {
                composite[j] = true;
            }
        }
        i += 1;
    }
    (2..=limit)
        .filter(|&n| !composite[n])
        .map(|n| n as u32)
        .collect()
}

fn segmented_sieve(limit: u32) -> Vec<u32> {
    if limit < 2 {
        return Vec::new();
    }
    let limit = u64::from(limit);
    let root = (limit as f64).sqrt() as u64 + 1;
    let base: Vec<u64> = simple_sieve(root.min(limit) as u32)
        .into_iter()
        .skip(1) // odd storage: 2 handled separately
        .map(u64::from)
        .collect();

    // Odd number n = 2 * i + 1 sits at index i; index 0 (n = 1) is skipped.
    let odd_count = (limit + 1) / 2;
    let segments = odd_count.div_ceil(SEGMENT_ODDS as u64);

    let chunks: Vec<Vec<u32>> = (0..segments)
        .into_par_iter()
        .map(|seg| {
            let lo = seg * SEGMENT_ODDS as u64;
            let hi = (lo + SEGMENT_ODDS as u64).min(odd_count);
            let mut composite = vec![false; (hi - lo) as usize];
            for &p in &base {
                let square = p * p;
                if square > limit {
                    break;
                }
                // First odd multiple of p that is >= max(p², 2 lo + 1).
                let low_n = 2 * lo + 1;
                let mut start = if square >= low_n {
                    square
                } else {
                    let m = low_n.div_ceil(p) * p;
                    if m % 2 == 0 {
                        m + p
                    } else {
                        m
                    }
                };
                while start < 2 * hi + 1 {
                    composite[((start - 1) / 2 - lo) as usize] = true;
                    start += 2 * p;
                }
            }
            composite
                .iter()
                .enumerate()
                .filter(|&(_, &c)| !c)
                .map(|(i, _)| (2 * (lo + i as u64) + 1) as u32)
                .filter(|&n| n > 1)
                .collect()
        })
        .collect();

    let mut primes = Vec::with_capacity(chunks.iter().map(Vec::len).sum::<usize>() + 1);
    primes.push(2);
    for chunk in chunks {
        primes.extend(chunk);
    }
    primes
}

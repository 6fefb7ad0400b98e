//! Census of the arithmetic function `ω(n)` over `1 ≤ n ≤ x`, and the
//! Kolmogorov distance of `(ω(n) − ln ln n)/√(ln ln n)` from `Φ`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::stats::{ks_empirical, StandardNormal};

/// Default largest `x` accepted by [`omega_census`].
pub const DEFAULT_CENSUS_CAP: u64 = 100_000_000;

/// Smallest `n` entering the standardized statistic (`ln ln 16 > 0`; below 16
/// the denominator is undefined or tiny).
pub const STANDARDIZED_MIN_N: u64 = 16;

const BLOCK_LEN: u64 = 1 << 22;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmegaCensus {
    pub x: u64,
    /// `counts[k] = #{n ≤ x : ω(n) = k}`.
    pub counts: BTreeMap<u32, u64>,
    /// `Σ_{n≤x} ω(n)`.
    pub omega_total: u64,
    /// `ω(n)` at index `n − 1`. Not serialized.
    #[serde(skip)]
    per_n: Vec<u8>,
}

impl OmegaCensus {
    /// `ω(n)` for `1 ≤ n ≤ x`, when the census still carries per-n values.
    pub fn omega(&self, n: u64) -> Option<u8> {
        if n == 0 {
            return None;
        }
        self.per_n.get((n - 1) as usize).copied()
    }

    pub fn has_per_n(&self) -> bool {
        self.per_n.len() as u64 == self.x
    }

    /// A census holding only its reported fields, as read back from a file.
    pub fn from_counts(x: u64, counts: BTreeMap<u32, u64>, omega_total: u64) -> Self {
        OmegaCensus {
            x,
            counts,
            omega_total,
            per_n: Vec::new(),
        }
    }
}

/// Compares the reported fields; per-n values are ignored.
impl PartialEq for OmegaCensus {
    fn eq(&self, other: &Self) -> bool {
        self.x == other.x && self.counts == other.counts && self.omega_total == other.omega_total
    }
}

pub fn omega_census(table: &PrimeTable, x: u64) -> Result<OmegaCensus> {
    omega_census_with_cap(table, x, DEFAULT_CENSUS_CAP)
}

/// Sieves `ω(n)` for every `n ≤ x` by adding one at each multiple of each
/// prime, block by block.
pub fn omega_census_with_cap(table: &PrimeTable, x: u64, cap: u64) -> Result<OmegaCensus> {
    if x > cap {
        return Err(Error::ResourceBound {
            param: "x",
            value: x,
            cap,
        });
    }
    let primes = table.primes_upto(x)?;
    let blocks = x.div_ceil(BLOCK_LEN);

    let pieces: Vec<Vec<u8>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            // Block covers n in [lo, hi].
            let lo = b * BLOCK_LEN + 1;
            let hi = ((b + 1) * BLOCK_LEN).min(x);
            let mut counter = vec![0u8; (hi - lo + 1) as usize];
            for &p in primes {
                let p = u64::from(p);
                if p > hi {
                    break;
                }
                let mut m = lo.div_ceil(p) * p;
                while m <= hi {
                    counter[(m - lo) as usize] += 1;
                    m += p;
                }
            }
            counter
        })
        .collect();

    let mut per_n = Vec::with_capacity(x as usize);
    for piece in pieces {
        per_n.extend(piece);
    }

    let mut tally = [0u64; 256];
    let mut omega_total = 0u64;
    for &w in &per_n {
        tally[w as usize] += 1;
        omega_total += u64::from(w);
    }
    let counts = tally
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(k, &c)| (k as u32, c))
        .collect();

    Ok(OmegaCensus {
        x,
        counts,
        omega_total,
        per_n,
    })
}

/// `Σ_{p≤x} ⌊x/p⌋`, which equals `Σ_{n≤x} ω(n)`.
pub fn prime_multiple_total(table: &PrimeTable, x: u64) -> Result<u64> {
    Ok(table
        .primes_upto(x)?
        .iter()
        .map(|&p| x / u64::from(p))
        .sum())
}

/// `(ω(n) − ln ln n)/√(ln ln n)` for `16 ≤ n ≤ x`, sorted ascending.
pub fn ek_standardized_values(census: &OmegaCensus) -> Result<Vec<f64>> {
    if census.x < 100 {
        return Err(Error::invalid(
            "x",
            format!("census must cover at least 100 integers (got {})", census.x),
        ));
    }
    if !census.has_per_n() {
        return Err(Error::invalid(
            "census",
            "per-n omega values are not available (census was loaded from a report)",
        ));
    }
    let mut values: Vec<f64> = (STANDARDIZED_MIN_N..=census.x)
        .map(|n| {
            let ll = (n as f64).ln().ln();
            (f64::from(census.per_n[(n - 1) as usize]) - ll) / ll.sqrt()
        })
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// KS distance between the per-n standardized `ω(n)` and `Φ`.
pub fn ek_standardized_ks(census: &OmegaCensus) -> Result<f64> {
    let values = ek_standardized_values(census)?;
    ks_empirical(&values, &StandardNormal)
}

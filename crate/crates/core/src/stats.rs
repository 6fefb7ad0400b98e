//! Empirical summaries of sampled batches and Kolmogorov–Smirnov distances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Pmf;
use crate::model::{normalize_batch, SampleBatch};
use crate::normal::normal_cdf;

/// A distribution function that may be continuous or a right-continuous step
/// function.
pub trait Cdf {
    /// `F(t)`.
    fn cdf(&self, t: f64) -> f64;

    /// Left limit `F(t−)`; equals `F(t)` for continuous distributions.
    fn cdf_left(&self, t: f64) -> f64 {
        self.cdf(t)
    }

    /// Points where `F` jumps. Empty for continuous distributions.
    fn jump_points(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StandardNormal;

impl Cdf for StandardNormal {
    fn cdf(&self, t: f64) -> f64 {
        normal_cdf(t)
    }
}

impl<F: Fn(f64) -> f64> Cdf for F {
    fn cdf(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Empirical distribution function of a finite sample.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "must be non-empty"));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("samples", "contains NaN"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

impl Cdf for EmpiricalCdf {
    fn cdf(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= t) as f64 / self.sorted.len() as f64
    }

    fn cdf_left(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&v| v < t) as f64 / self.sorted.len() as f64
    }

    fn jump_points(&self) -> Vec<f64> {
        let mut points = self.sorted.clone();
        points.dedup();
        points
    }
}

/// `sup_t |F_emp(t) − F(t)|`.
///
/// Both functions are evaluated on either side of every point where one of
/// them jumps (the distinct sample values plus `cdf.jump_points()`). Between
/// consecutive such points the empirical CDF is constant and `F` is monotone,
/// so these one-sided values attain the supremum.
pub fn ks_empirical<C: Cdf + ?Sized>(samples: &[f64], cdf: &C) -> Result<f64> {
    let ecdf = EmpiricalCdf::new(samples)?;
    Ok(ks_against(&ecdf, cdf))
}

fn ks_against<C: Cdf + ?Sized>(ecdf: &EmpiricalCdf, cdf: &C) -> f64 {
    let n = ecdf.len() as f64;
    let sorted = ecdf.sorted();

    let mut points = cdf.jump_points();
    points.retain(|v| !v.is_nan());
    points.sort_by(f64::total_cmp);

    // Merge distinct sample values with the reference jump set, tracking the
    // number of samples strictly below and at-or-below each point.
    let mut sup: f64 = 0.0;
    let mut i = 0usize;
    let mut j = 0usize;
    while i < sorted.len() || j < points.len() {
        let t = match (sorted.get(i), points.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        let below = i;
        while i < sorted.len() && sorted[i] == t {
            i += 1;
        }
        while j < points.len() && points[j] == t {
            j += 1;
        }
        let left = (below as f64 / n - cdf.cdf_left(t)).abs();
        let right = (i as f64 / n - cdf.cdf(t)).abs();
        sup = sup.max(left).max(right);
    }
    sup.min(1.0)
}

/// Moments and histogram of a batch of `Ω_x` draws, optionally with KS
/// distances against the Gaussian and the exact law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub n: u64,
    pub mean: f64,
    /// Unbiased (`n − 1`) sample variance; zero for a single draw.
    pub variance: f64,
    pub histogram: BTreeMap<u32, u64>,
    pub ks_vs_normal: Option<f64>,
    pub ks_vs_exact: Option<f64>,
}

pub fn summarize(batch: &SampleBatch) -> Result<EmpiricalSummary> {
    let omegas = &batch.omegas;
    if omegas.is_empty() {
        return Err(Error::invalid("batch", "must contain at least one draw"));
    }
    let n = omegas.len() as f64;
    let mut histogram = BTreeMap::new();
    let mut total: u64 = 0;
    for &w in omegas {
        *histogram.entry(w).or_insert(0u64) += 1;
        total += u64::from(w);
    }
    let mean = total as f64 / n;
    let variance = if omegas.len() > 1 {
        omegas
            .iter()
            .map(|&w| (f64::from(w) - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    Ok(EmpiricalSummary {
        n: omegas.len() as u64,
        mean,
        variance,
        histogram,
        ks_vs_normal: None,
        ks_vs_exact: None,
    })
}

/// [`summarize`] plus KS distances: raw draws against the exact step CDF, and
/// draws standardised by `(mu, sigma)` against `Φ`.
pub fn summarize_with_ks(
    batch: &SampleBatch,
    pmf: &Pmf,
    mu: f64,
    sigma: f64,
) -> Result<EmpiricalSummary> {
    let mut summary = summarize(batch)?;
    let raw: Vec<f64> = batch.omegas.iter().map(|&w| f64::from(w)).collect();
    summary.ks_vs_exact = Some(ks_empirical(&raw, pmf)?);
    let standardized = normalize_batch(batch, mu, sigma)?;
    summary.ks_vs_normal = Some(ks_empirical(&standardized, &StandardNormal)?);
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, Provenance};
    use proptest::prelude::*;

    fn batch(omegas: Vec<u32>) -> SampleBatch {
        let params = ModelParams::new(10, 0, omegas.len().max(1) as u64, 16).unwrap();
        SampleBatch {
            provenance: Provenance::for_params(&params),
            params,
            omegas,
        }
    }

    /// Standard normal quantile by bisection on `normal_cdf`.
    fn normal_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&batch(vec![2, 2, 2])).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.histogram, BTreeMap::from([(2, 3)]));

        let s = summarize(&batch(vec![0, 2])).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.variance, 2.0);
        assert_eq!(s.histogram.values().sum::<u64>(), s.n);

        assert!(summarize(&batch(vec![])).is_err());
    }

    #[test]
    fn ks_single_sample_at_zero() {
        assert_eq!(ks_empirical(&[0.0], &StandardNormal).unwrap(), 0.5);
        assert!(ks_empirical(&[], &StandardNormal).is_err());
    }

    #[test]
    fn ks_midpoint_quantiles() {
        for n in [1usize, 2, 5, 10, 100, 1_000] {
            let samples: Vec<f64> = (1..=n)
                .map(|i| normal_quantile((i as f64 - 0.5) / n as f64))
                .collect();
            let d = ks_empirical(&samples, &StandardNormal).unwrap();
            assert!((d - 0.5 / n as f64).abs() < 1e-9, "n = {n}: {d}");
        }
    }

    #[test]
    fn ks_self_comparison_is_zero() {
        let samples = [3.0, 1.0, 2.0, 2.0, 5.0, -1.0, 2.0];
        let ecdf = EmpiricalCdf::new(&samples).unwrap();
        assert_eq!(ks_empirical(&samples, &ecdf).unwrap(), 0.0);
    }

    #[test]
    fn ks_step_vs_step_uses_reference_jumps() {
        // All samples at 0 against a reference that puts half its mass at -1:
        // the gap at -1 is only visible from the reference's own jump set.
        let reference = EmpiricalCdf::new(&[-1.0, 0.0]).unwrap();
        let d = ks_empirical(&[0.0, 0.0], &reference).unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn closures_act_as_cdfs() {
        let uniform = |t: f64| t.clamp(0.0, 1.0);
        let d = ks_empirical(&[0.25, 0.75], &uniform).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn ks_permutation_invariant(
            mut samples in proptest::collection::vec(-5.0f64..5.0, 1..60),
            seed in any::<u64>(),
        ) {
            let d1 = ks_empirical(&samples, &StandardNormal).unwrap();
            // deterministic shuffle
            let mut state = seed;
            for i in (1..samples.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % (i + 1);
                samples.swap(i, j);
            }
            let d2 = ks_empirical(&samples, &StandardNormal).unwrap();
            prop_assert_eq!(d1, d2);
            prop_assert!((0.0..=1.0).contains(&d1));
        }

        #[test]
        fn summary_mean_is_arithmetic_mean(omegas in proptest::collection::vec(0u32..40, 1..200)) {
            let s = summarize(&batch(omegas.clone())).unwrap();
            let mean = omegas.iter().map(|&w| f64::from(w)).sum::<f64>() / omegas.len() as f64;
            prop_assert!((s.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
            prop_assert!(s.variance >= 0.0);
            prop_assert_eq!(s.histogram.values().sum::<u64>(), omegas.len() as u64);
        }
    }
}

//! Exact law and moments of `Ω_x = Σ_{p≤x} X_p`, the Lindeberg functional,
//! and the Kolmogorov distance between the exact law and the Gaussian.
//!
//! Everything here is a deterministic finite computation over the primes up
//! to `x`, and serves as ground truth for the Monte Carlo side.

use serde::{Deserialize, Serialize};

pub use crate::normal::normal_cdf;
use crate::error::{Error, Result};
use crate::primes::{loglog, CompensatedSum, PrimeTable};
use crate::stats::Cdf;

/// Truncated tail above which a [`Pmf`] is flagged as under-supported.
pub const TAIL_WARNING: f64 = 1e-9;

/// First two moments of `Ω_x` and the sums they are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub x: u64,
    /// `μ_x = Σ_{p≤x} 1/p`.
    pub mu: f64,
    /// `σ_x² = Σ_{p≤x} (1/p)(1 − 1/p)`, summed directly.
    pub sigma_sq: f64,
    pub loglog_x: f64,
    /// `mu − loglog_x`; tends to the Meissel–Mertens constant.
    pub mertens_gap: f64,
    /// `Σ_{p≤x} 1/p²`.
    pub zeta_partial: f64,
}

impl MomentReport {
    pub fn sigma(&self) -> f64 {
        self.sigma_sq.sqrt()
    }
}

/// Mean, variance and `Σ 1/p²` of `Ω_x` without the `ln ln x` fields.
///
/// Defined for every `x` the table covers, including `x = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliMoments {
    pub mu: f64,
    pub sigma_sq: f64,
    pub zeta_partial: f64,
}

pub fn bernoulli_moments(table: &PrimeTable, x: u64) -> Result<BernoulliMoments> {
    let primes = table.primes_upto(x)?;
    let mut variance = CompensatedSum::default();
    for &p in primes {
        let q = 1.0 / f64::from(p);
        variance.add(q * (1.0 - q));
    }
    Ok(BernoulliMoments {
        mu: table.reciprocal_sum(x)?,
        sigma_sq: variance.value(),
        zeta_partial: table.prime_zeta_partial(x)?,
    })
}

pub fn exact_moments(table: &PrimeTable, x: u64) -> Result<MomentReport> {
    let loglog_x = loglog(x)?;
    let m = bernoulli_moments(table, x)?;
    Ok(MomentReport {
        x,
        mu: m.mu,
        sigma_sq: m.sigma_sq,
        loglog_x,
        mertens_gap: m.mu - loglog_x,
        zeta_partial: m.zeta_partial,
    })
}

/// Exact probability mass function of `Ω_x` on `0..=support_cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub x: u64,
    pub support_cap: usize,
    /// `mass[k] = P(Ω_x = k)`.
    pub mass: Vec<f64>,
    /// Probability that fell past `support_cap` during the convolution.
    pub truncated_tail: f64,
    /// Set when `truncated_tail` exceeds [`TAIL_WARNING`].
    pub tail_warning: bool,
}

impl Pmf {
    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.truncated_tail
    }

    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(k, m)| k as f64 * m)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.mass
            .iter()
            .enumerate()
            .map(|(k, m)| (k as f64 - mean).powi(2) * m)
            .sum()
    }

    /// Running sums `P(Ω_x ≤ k)`.
    pub fn cumulative(&self) -> Vec<f64> {
        self.mass
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect()
    }
}

/// Right-continuous step CDF of `Ω_x` on the integers.
impl Cdf for Pmf {
    fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let last = (t.floor() as usize).min(self.mass.len() - 1);
        self.mass[..=last].iter().sum()
    }

    fn cdf_left(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let k = t.ceil() as usize;
        self.mass[..k.min(self.mass.len())].iter().sum()
    }

    fn jump_points(&self) -> Vec<f64> {
        (0..self.mass.len()).map(|k| k as f64).collect()
    }
}

/// `ceil(μ + 12σ + 30)`.
pub fn default_support_cap(moments: &BernoulliMoments) -> usize {
    (moments.mu + 12.0 * moments.sigma_sq.sqrt() + 30.0).ceil() as usize
}

/// Exact law of `Ω_x` by folding in one Bernoulli(1/p) factor at a time.
///
/// Probability pushed past `support_cap` is accumulated in
/// `truncated_tail`; the mass is never renormalised.
pub fn poisson_binomial_pmf(table: &PrimeTable, x: u64, support_cap: usize) -> Result<Pmf> {
    if support_cap < 1 {
        return Err(Error::invalid("support_cap", "must be at least 1"));
    }
    let primes = table.primes_upto(x)?;
    let mut mass = vec![0.0; support_cap + 1];
    mass[0] = 1.0;
    let mut truncated_tail = 0.0;
    // Highest index that can be non-zero so far.
    let mut top = 0usize;

    for &p in primes {
        let q = 1.0 / f64::from(p);
        let stay = 1.0 - q;
        if top == support_cap {
            truncated_tail += mass[support_cap] * q;
        } else {
            top += 1;
        }
        for k in (1..=top).rev() {
            mass[k] = mass[k] * stay + mass[k - 1] * q;
        }
        mass[0] *= stay;
    }

    Ok(Pmf {
        x,
        support_cap,
        mass,
        truncated_tail,
        tail_warning: truncated_tail > TAIL_WARNING,
    })
}

/// [`poisson_binomial_pmf`] with [`default_support_cap`].
pub fn poisson_binomial_pmf_default(table: &PrimeTable, x: u64) -> Result<Pmf> {
    let moments = bernoulli_moments(table, x)?;
    poisson_binomial_pmf(table, x, default_support_cap(&moments))
}

/// Lindeberg functional `L(x, ε)` for the centred summands `Y_p = X_p − 1/p`.
///
/// `Y_p` is `1 − 1/p` with probability `1/p` and `−1/p` otherwise; each
/// branch enters the numerator only when its magnitude exceeds `ε σ_x`.
pub fn lindeberg_sum(table: &PrimeTable, x: u64, epsilon: f64) -> Result<f64> {
    if x < 3 {
        return Err(Error::invalid("x", format!("must be at least 3 (got {x})")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(
            "epsilon",
            format!("must be a positive finite number (got {epsilon})"),
        ));
    }
    let primes = table.primes_upto(x)?;

    // Plain ascending summation: monotone in every term, so a numerator built
    // from a subset of the same terms can never exceed the denominator.
    let sigma_sq: f64 = primes.iter().map(|&p| term_variance(p)).sum();
    let threshold = epsilon * sigma_sq.sqrt();

    let mut tail = 0.0;
    for &p in primes {
        let q = 1.0 / f64::from(p);
        let var = term_variance(p);
        let upper = 1.0 - q > threshold;
        let lower = q > threshold;
        tail += match (upper, lower) {
            (true, true) => var,
            // E[Y² ; Y = 1 − q] = q (1 − q)²
            (true, false) => var * (1.0 - q),
            // E[Y² ; Y = −q] = (1 − q) q²
            (false, true) => var * q,
            (false, false) => 0.0,
        };
    }
    Ok(tail / sigma_sq)
}

fn term_variance(p: u32) -> f64 {
    let q = 1.0 / f64::from(p);
    q * (1.0 - q)
}

/// Kolmogorov distance between the exact law of `(Ω_x − mu)/sigma` and `Φ`.
///
/// Both the pre-jump and the post-jump value of the step CDF are compared with
/// `Φ` at every support point; the truncated tail shows up as the final gap.
pub fn ks_exact_vs_normal(pmf: &Pmf, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(
            "sigma",
            format!("must be positive (got {sigma})"),
        ));
    }
    if pmf.truncated_tail > TAIL_WARNING {
        return Err(Error::invalid(
            "pmf",
            format!(
                "truncated tail {:e} exceeds {:e}; raise support_cap",
                pmf.truncated_tail, TAIL_WARNING
            ),
        ));
    }
    let mut below = 0.0;
    let mut sup: f64 = 0.0;
    for (k, &m) in pmf.mass.iter().enumerate() {
        let phi = normal_cdf((k as f64 - mu) / sigma);
        let above = below + m;
        sup = sup.max((below - phi).abs()).max((above - phi).abs());
        below = above;
    }
    // Beyond the support the step CDF sits at `below` while Φ climbs to 1.
    sup = sup.max((1.0 - below).abs());
    Ok(sup.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table() -> PrimeTable {
        PrimeTable::sieve(10_000).unwrap()
    }

    /// Exhaustive enumeration of all 2^n Bernoulli outcomes.
    fn enumerate_pmf(primes: &[u32]) -> Vec<f64> {
        let n = primes.len();
        let mut out = vec![0.0; n + 1];
        for mask in 0u32..(1 << n) {
            let mut prob = 1.0;
            for (i, &p) in primes.iter().enumerate() {
                let q = 1.0 / f64::from(p);
                prob *= if mask & (1 << i) != 0 { q } else { 1.0 - q };
            }
            out[mask.count_ones() as usize] += prob;
        }
        out
    }

    #[test]
    fn moments_small_x() {
        let t = table();
        let m2 = bernoulli_moments(&t, 2).unwrap();
        assert_eq!(m2.mu, 0.5);
        assert_eq!(m2.sigma_sq, 0.25);
        assert!(matches!(exact_moments(&t, 2), Err(Error::Domain { .. })));

        let m3 = exact_moments(&t, 3).unwrap();
        assert_relative_eq!(m3.mu, 5.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(m3.sigma_sq, 17.0 / 36.0, epsilon = 1e-15);
        assert_relative_eq!(m3.loglog_x, 3f64.ln().ln(), epsilon = 1e-15);
        assert!(exact_moments(&t, 10_001).is_err());
    }

    #[test]
    fn moment_identity_and_ordering() {
        let t = table();
        for x in [3, 10, 100, 1_000, 10_000] {
            let m = exact_moments(&t, x).unwrap();
            assert!((m.sigma_sq - (m.mu - m.zeta_partial)).abs() <= 1e-12);
            assert!(0.0 < m.sigma_sq && m.sigma_sq < m.mu);
            assert_eq!(m.mertens_gap, m.mu - m.loglog_x);
        }
    }

    #[test]
    fn pmf_small_cases() {
        let t = table();
        let pmf = poisson_binomial_pmf(&t, 3, 5).unwrap();
        let expected = [1.0 / 3.0, 0.5, 1.0 / 6.0];
        for (k, e) in expected.iter().enumerate() {
            assert_relative_eq!(pmf.mass[k], e, epsilon = 1e-15);
        }
        assert_eq!(pmf.mass[3], 0.0);

        let pmf = poisson_binomial_pmf(&t, 5, 5).unwrap();
        assert_relative_eq!(pmf.mass[0], 4.0 / 15.0, epsilon = 1e-15);
        assert_relative_eq!(pmf.mass[3], 1.0 / 30.0, epsilon = 1e-15);
    }

    #[test]
    fn pmf_matches_enumeration() {
        let t = table();
        for x in 2..=13 {
            let primes = t.primes_upto(x).unwrap();
            let brute = enumerate_pmf(primes);
            let pmf = poisson_binomial_pmf(&t, x, 10).unwrap();
            for k in 0..=10 {
                let b = brute.get(k).copied().unwrap_or(0.0);
                assert!((pmf.mass[k] - b).abs() <= 1e-12, "x = {x}, k = {k}");
            }
        }
    }

    #[test]
    fn truncation_conserves_probability() {
        let t = table();
        let pmf = poisson_binomial_pmf(&t, 10_000, 2).unwrap();
        assert!(pmf.truncated_tail > 0.1);
        assert!(pmf.tail_warning);
        assert!((pmf.total_mass() - 1.0).abs() <= 1e-12);
        assert!(pmf.mass.iter().all(|&m| m >= 0.0));

        let pmf = poisson_binomial_pmf_default(&t, 10_000).unwrap();
        assert!(pmf.truncated_tail <= 1e-12);
        assert!(!pmf.tail_warning);
        assert!((pmf.total_mass() - 1.0).abs() <= 1e-12);

        assert!(poisson_binomial_pmf(&t, 100, 0).is_err());
    }

    #[test]
    fn pmf_moments_match_exact() {
        let t = table();
        for x in [10, 100, 1_000, 10_000] {
            let pmf = poisson_binomial_pmf_default(&t, x).unwrap();
            let m = bernoulli_moments(&t, x).unwrap();
            assert!((pmf.mean() - m.mu).abs() <= 1e-9);
            assert!((pmf.variance() - m.sigma_sq).abs() <= 1e-9);
        }
    }

    #[test]
    fn lindeberg_examples() {
        let t = table();
        assert_eq!(lindeberg_sum(&t, 100, 1.0).unwrap(), 0.0);
        assert_eq!(lindeberg_sum(&t, 3, 0.1).unwrap(), 1.0);
        // x = 3, ε = 0.9: threshold ≈ 0.618 keeps only the 1 − 1/3 branch.
        let expected = ((1.0 / 3.0) * (4.0 / 9.0)) / (17.0 / 36.0);
        assert_relative_eq!(lindeberg_sum(&t, 3, 0.9).unwrap(), expected, epsilon = 1e-15);
        assert!(lindeberg_sum(&t, 2, 0.5).is_err());
        assert!(lindeberg_sum(&t, 100, 0.0).is_err());
        assert!(lindeberg_sum(&t, 100, f64::NAN).is_err());
    }

    #[test]
    fn lindeberg_bounded_and_monotone() {
        let t = table();
        for x in [3, 7, 50, 1_000, 10_000] {
            let sigma = bernoulli_moments(&t, x).unwrap().sigma_sq.sqrt();
            let mut prev = f64::INFINITY;
            for i in 1..=400 {
                let eps = i as f64 * 0.005;
                let l = lindeberg_sum(&t, x, eps).unwrap();
                assert!((0.0..=1.0).contains(&l));
                assert!(l <= prev, "x = {x}, eps = {eps}");
                if eps * sigma >= 1.0 {
                    assert_eq!(l, 0.0);
                }
                prev = l;
            }
        }
    }

    #[test]
    fn ks_point_mass() {
        let pmf = Pmf {
            x: 0,
            support_cap: 4,
            mass: vec![0.0, 0.0, 1.0, 0.0, 0.0],
            truncated_tail: 0.0,
            tail_warning: false,
        };
        assert_eq!(ks_exact_vs_normal(&pmf, 2.0, 1.0).unwrap(), 0.5);
        assert!(ks_exact_vs_normal(&pmf, 2.0, 0.0).is_err());
    }

    #[test]
    fn ks_rejects_undersupported_pmf() {
        let t = table();
        let pmf = poisson_binomial_pmf(&t, 10_000, 2).unwrap();
        assert!(ks_exact_vs_normal(&pmf, 2.0, 1.0).is_err());
    }

    #[test]
    fn ks_in_unit_interval() {
        let t = table();
        for x in [3, 30, 300, 3_000] {
            let pmf = poisson_binomial_pmf_default(&t, x).unwrap();
            let m = bernoulli_moments(&t, x).unwrap();
            let d = ks_exact_vs_normal(&pmf, m.mu, m.sigma_sq.sqrt()).unwrap();
            assert!((0.0..=1.0).contains(&d));
        }
    }

    #[test]
    fn pmf_step_cdf() {
        let t = table();
        let pmf = poisson_binomial_pmf(&t, 3, 3).unwrap();
        assert_eq!(pmf.cdf(-0.5), 0.0);
        assert_eq!(pmf.cdf_left(0.0), 0.0);
        assert_relative_eq!(pmf.cdf(0.0), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(pmf.cdf(0.7), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(pmf.cdf_left(1.0), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(pmf.cdf(1.0), 5.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(pmf.cdf(50.0), 1.0, epsilon = 1e-15);
        assert_eq!(pmf.cumulative().len(), 4);
    }
}

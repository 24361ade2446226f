//! Exact vertex counts and root-level distributions.
//!
//! With `a_k = v_k d^{-k}`, the uniform root of `T'_n`, conditioned on lying
//! in some `M^L` piece, sits in a level-`k` piece with probability
//! `a_k / sum_{j<=n} a_j`. The limit `n -> oo` exists because `a_k` is
//! eventually geometric with ratio close to `6/d < 1`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::assembly::GlueMode;
use crate::rational::{self, Rational};
use crate::{Error, Result};

fn check_d(d: u32) -> Result<()> {
    if d <= 6 {
        return Err(Error::InvalidParameter(format!("branching d={d} must exceed 6")));
    }
    Ok(())
}

/// `sum_{i=0}^{k} 6^i = (6^{k+1} - 1) / 5`.
fn geometric6(k: u32) -> BigUint {
    (num_traits::pow(BigUint::from(6u32), k as usize + 1) - 1u32) / 5u32
}

/// `|M^L_k| = (6^{k+1} - 1)/5 * (k^4 + k^2)`.
pub fn volume_vk(k: u32) -> BigUint {
    let k2 = BigUint::from(k) * k;
    geometric6(k) * (&k2 * &k2 + &k2)
}

/// Vertices of `M^L_k` at height `i`: `3^i 2^i (k^2 + k^4)`.
pub fn level_count(k: u32, i: u32) -> BigUint {
    let k2 = BigUint::from(k) * k;
    num_traits::pow(BigUint::from(6u32), i as usize) * (&k2 * &k2 + &k2)
}

/// Vertices owned by one level-`k` edge: its `M^L_k` plus, for `k >= 2`,
/// the unshared rows of each of the `branching` copies of `M^R_k`.
pub fn ownership_count(k: u32, branching: u32, mode: GlueMode) -> BigUint {
    let mut u = volume_vk(k);
    if k >= 2 {
        let r = BigUint::from(k - 1) * (k - 1) * branching;
        let rows = match mode {
            GlueMode::TowerSharing => num_traits::pow(BigUint::from(6u32), k as usize),
            GlueMode::BaseOnly => geometric6(k) - 1u32,
        };
        u += r * rows;
    }
    u
}

pub(crate) fn ownership_count_u128(k: u32, branching: u32, mode: GlueMode) -> u128 {
    ownership_count(k, branching, mode).to_u128().unwrap_or(u128::MAX)
}

/// Level weight `a_k = v_k d^{-k}`.
pub fn level_weight(k: u32, d: u32) -> Rational {
    Rational::new(BigInt::from(volume_vk(k)), rational::pow(d as u64, k))
}

/// Ownership weight `u_k d^{-k}`.
pub fn ownership_weight(k: u32, d: u32, mode: GlueMode) -> Rational {
    Rational::new(BigInt::from(ownership_count(k, d, mode)), rational::pow(d as u64, k))
}

/// `p_{k,n}`: probability that the uniform root of `T'_n`, conditioned on
/// landing in an `M^L` piece, lies in a level-`k` piece.
pub fn root_level_prob(k: u32, n: u32, d: u32) -> Result<Rational> {
    check_d(d)?;
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= n, got k={k} n={n}")));
    }
    let total: Rational = (1..=n).map(|j| level_weight(j, d)).sum();
    Ok(level_weight(k, d) / total)
}

/// Ratio `a_{k+1} / a_k` of consecutive level weights.
pub fn weight_ratio(k: u32, d: u32) -> Rational {
    level_weight(k + 1, d) / level_weight(k, d)
}

/// Explicit witness that `sum_k v_k d^{-k}` converges: from `k0` on, the
/// ratio of consecutive terms is below one, and the ratio is decreasing in
/// `k` (it factors as `(6 + 5/(6^{k+1}-1)) ((k+1)/k)^2 ((k+1)^2+1)/(k^2+1) / d`,
/// a product of positive decreasing factors).
#[derive(Clone, Debug)]
pub struct SummabilityCertificate {
    pub d: u32,
    pub k0: u32,
    pub ratio_at_k0: Rational,
}

pub fn summability_certificate(d: u32) -> Result<SummabilityCertificate> {
    check_d(d)?;
    let one = Rational::one();
    for k in 1..10_000 {
        let r = weight_ratio(k, d);
        if r < one {
            return Ok(SummabilityCertificate { d, k0: k, ratio_at_k0: r });
        }
    }
    Err(Error::InvalidParameter(format!("no certificate found for d={d}")))
}

/// Closed interval with rational endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(BigInt::from(2))
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn is_within(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

/// Enclosure of `Z = sum_k a_k` from the first `j` terms plus a geometric
/// tail bound; requires `ratio(j+1) < 1`.
fn normalizer_enclosure(j: u32, d: u32) -> Option<Interval> {
    let rho = weight_ratio(j + 1, d);
    if rho >= Rational::one() {
        return None;
    }
    let partial: Rational = (1..=j).map(|i| level_weight(i, d)).sum();
    let tail = level_weight(j + 1, d) / (Rational::one() - rho);
    Some(Interval {
        hi: &partial + tail,
        lo: partial,
    })
}

/// Enclosure of `p_k = lim_n p_{k,n}` of width at most `tol`.
pub fn limit_level_prob(k: u32, d: u32, tol: &Rational) -> Result<Interval> {
    check_d(d)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if *tol <= Rational::zero() {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let cert = summability_certificate(d)?;
    let a_k = level_weight(k, d);
    let mut j = cert.k0.max(k);
    loop {
        if let Some(z) = normalizer_enclosure(j, d) {
            let iv = Interval {
                lo: &a_k / &z.hi,
                hi: &a_k / &z.lo,
            };
            if iv.width() <= *tol {
                return Ok(iv);
            }
        }
        j += (j / 4).max(4);
        if j > 20_000 {
            return Err(Error::InvalidParameter("tolerance too small".into()));
        }
    }
}

/// One row of the census table.
#[derive(Clone, Debug)]
pub struct CensusRow {
    pub k: u32,
    pub v_k: BigUint,
    pub u_k: BigUint,
    pub u_k_base_only: BigUint,
    pub p_kn: Rational,
    pub p_k: Interval,
}

/// Census rows for `k = 1..=n`.
pub fn census_table(n: u32, d: u32, tol: &Rational) -> Result<Vec<CensusRow>> {
    (1..=n)
        .map(|k| {
            Ok(CensusRow {
                k,
                v_k: volume_vk(k),
                u_k: ownership_count(k, d, GlueMode::TowerSharing),
                u_k_base_only: ownership_count(k, d, GlueMode::BaseOnly),
                p_kn: root_level_prob(k, n, d)?,
                p_k: limit_level_prob(k, d, tol)?,
            })
        })
        .collect()
}

/// Exact level law of the uniform root of `T'_n` by canonical ownership:
/// `u_k d^{-k} / sum_{j<=n} u_j d^{-j}`.
pub fn ownership_level_law(n: u32, d: u32, mode: GlueMode) -> Vec<Rational> {
    let weights: Vec<Rational> = (1..=n).map(|k| ownership_weight(k, d, mode)).collect();
    let total: Rational = weights.iter().sum();
    weights.into_iter().map(|w| w / &total).collect()
}

/// Samples the owner level of a uniform root in the local weak limit, i.e.
/// `k` with probability proportional to `u_k d^{-k}`.
#[derive(Clone, Debug)]
pub struct LimitLevelSampler {
    cumulative: Vec<f64>,
    probabilities: Vec<f64>,
}

impl LimitLevelSampler {
    /// Terms are tabulated until the remaining mass is below `1e-18`.
    pub fn new(d: u32, mode: GlueMode) -> Result<Self> {
        check_d(d)?;
        let cert = summability_certificate(d)?;
        let mut weights = Vec::new();
        let mut k = 1u32;
        loop {
            weights.push(ownership_weight(k, d, mode));
            if k > cert.k0 + 1 {
                // Tail bound from the level weights dominates ownership
                // weights up to the factor u_k / v_k <= 1 + d.
                let rho = weight_ratio(k + 1, d);
                let tail = level_weight(k + 1, d) * Rational::from_integer(BigInt::from(d + 1))
                    / (Rational::one() - rho);
                let sum: Rational = weights.iter().sum();
                if rational::to_f64(&(tail / sum)) < 1e-18 {
                    break;
                }
            }
            k += 1;
        }
        let total: Rational = weights.iter().sum();
        let probabilities: Vec<f64> = weights.iter().map(|w| rational::to_f64(&(w / &total))).collect();
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(LimitLevelSampler {
            cumulative,
            probabilities,
        })
    }

    /// Probability of level `k` (1-based); zero beyond the table.
    pub fn probability(&self, k: u32) -> f64 {
        self.probabilities.get(k as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn max_level(&self) -> u32 {
        self.probabilities.len() as u32
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let total = *self.cumulative.last().unwrap();
        let u = rng.gen::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        (i.min(self.cumulative.len() - 1) + 1) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn volumes() {
        assert_eq!(volume_vk(1), BigUint::from(14u32));
        assert_eq!(volume_vk(2), BigUint::from(860u32));
        assert_eq!(volume_vk(3), BigUint::from(23310u32));
    }

    #[test]
    fn level_identity_up_to_30() {
        for k in 1..=30 {
            let sum: BigUint = (0..=k).map(|i| level_count(k, i)).sum();
            assert_eq!(sum, volume_vk(k), "k={k}");
        }
    }

    #[test]
    fn root_probabilities_n2() {
        assert_eq!(root_level_prob(1, 2, 7).unwrap(), frac(686, 6706));
        assert_eq!(root_level_prob(1, 1, 7).unwrap(), Rational::one());
        for n in [2, 5, 9] {
            let r = root_level_prob(1, n, 7).unwrap() / root_level_prob(2, n, 7).unwrap();
            assert_eq!(r, frac(98, 860));
            let total: Rational = (1..=n).map(|k| root_level_prob(k, n, 7).unwrap()).sum();
            assert_eq!(total, Rational::one());
        }
        assert!(root_level_prob(3, 2, 7).is_err());
        assert!(root_level_prob(1, 2, 6).is_err());
    }

    #[test]
    fn ownership_counts() {
        assert_eq!(ownership_count(1, 7, GlueMode::TowerSharing), BigUint::from(14u32));
        assert_eq!(ownership_count(2, 7, GlueMode::TowerSharing), BigUint::from(1112u32));
        assert_eq!(ownership_count(2, 7, GlueMode::BaseOnly), BigUint::from(860u32 + 7 * 42));
    }

    #[test]
    fn certificate_ratio_is_decreasing() {
        let cert = summability_certificate(7).unwrap();
        assert!(cert.ratio_at_k0 < Rational::one());
        assert!(cert.k0 > 1 && weight_ratio(cert.k0 - 1, 7) >= Rational::one());
        for k in 1..120 {
            assert!(weight_ratio(k + 1, 7) < weight_ratio(k, 7), "k={k}");
        }
    }

    #[test]
    fn limit_intervals_nest_and_contain_tail_of_pkn() {
        let wide = limit_level_prob(3, 7, &frac(1, 1000)).unwrap();
        let narrow = limit_level_prob(3, 7, &frac(1, 1_000_000_000)).unwrap();
        assert!(narrow.is_within(&wide));
        assert!(narrow.width() <= frac(1, 1_000_000_000));
        // p_{k,n} decreases to p_k.
        let p300 = root_level_prob(3, 300, 7).unwrap();
        assert!(narrow.contains(&p300) || p300 > narrow.lo);
        assert!(root_level_prob(3, 400, 7).unwrap() >= narrow.lo);
    }

    #[test]
    fn large_d_concentrates_on_level_one() {
        let iv = limit_level_prob(1, 10_000, &frac(1, 1_000_000)).unwrap();
        assert!(iv.lo > frac(99, 100));
    }

    #[test]
    fn sampler_matches_table() {
        let s = LimitLevelSampler::new(7, GlueMode::TowerSharing).unwrap();
        let sum: f64 = (1..=s.max_level()).map(|k| s.probability(k)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let law = ownership_level_law(2, 7, GlueMode::TowerSharing);
        assert_eq!(law[0], frac(686, 686 + 7 * 1112));
    }
}

use num_bigint::BigUint;
use num_traits::{One, Zero};

use souvlaki::assembly::{assemble_tn, level_census, GlueMode};
use souvlaki::census::{
    census_table, limit_level_prob, ownership_count, ownership_level_law, root_level_prob, summability_certificate,
    volume_vk, weight_ratio, LimitLevelSampler,
};
use souvlaki::rational::{frac, Rational};

#[test]
fn small_examples() {
    assert_eq!(volume_vk(1), BigUint::from(14u32));
    assert_eq!(volume_vk(2), BigUint::from(860u32));
    assert_eq!(volume_vk(3), BigUint::from(23310u32));
    assert_eq!(root_level_prob(1, 2, 7).unwrap(), frac(686, 6706));
    assert_eq!(root_level_prob(1, 1, 7).unwrap(), Rational::one());
    assert_eq!(ownership_count(2, 7, GlueMode::TowerSharing), BigUint::from(1112u32));
    assert_eq!(ownership_count(2, 7, GlueMode::BaseOnly), BigUint::from(1154u32));
}

#[test]
fn census_of_t2_matches_the_formula() {
    let t = assemble_tn(2, 7, GlueMode::TowerSharing, 1 << 20).unwrap();
    let rows = level_census(&t.skeleton, &t.graph);
    assert_eq!(rows, vec![(1, 686, 0), (2, 6020, 1764)]);
    let left_total: u64 = rows.iter().map(|r| r.1).sum();
    for &(k, left, _) in &rows {
        assert_eq!(frac(left, left_total), root_level_prob(k, 2, 7).unwrap());
    }
    let all: u64 = rows.iter().map(|r| r.1 + r.2).sum();
    let law = ownership_level_law(2, 7, GlueMode::TowerSharing);
    for &(k, left, other) in &rows {
        assert_eq!(frac(left + other, all), law[k as usize - 1]);
    }
}

#[test]
fn level_one_to_two_ratio_is_fixed() {
    for n in 2..=12 {
        let r = root_level_prob(1, n, 7).unwrap() / root_level_prob(2, n, 7).unwrap();
        assert_eq!(r, frac(98, 860), "n={n}");
    }
}

#[test]
fn probabilities_normalize() {
    for d in [7, 8, 12] {
        for n in [1, 3, 10] {
            let total: Rational = (1..=n).map(|k| root_level_prob(k, n, d).unwrap()).sum();
            assert!(total.is_one(), "d={d} n={n}");
        }
    }
    // The limit intervals bracket a total mass of one.
    let tol = frac(1, 1_000_000_000_000u64);
    let cert = summability_certificate(7).unwrap();
    let m = cert.k0 + 60;
    let lo: Rational = (1..=m).map(|k| limit_level_prob(k, 7, &tol).unwrap().lo).sum();
    let hi: Rational = (1..=m).map(|k| limit_level_prob(k, 7, &tol).unwrap().hi).sum();
    assert!(lo <= Rational::one());
    assert!(hi > frac(99, 100), "{hi}");
}

#[test]
fn finite_probabilities_enter_the_limit_interval() {
    let iv = limit_level_prob(2, 7, &frac(1, 1_000_000_000_000u64)).unwrap();
    assert!(iv.width() <= frac(1, 1_000_000_000_000u64));
    assert!(iv.lo > Rational::zero());
    // p_{k,n} decreases in n towards p_k from above.
    let p = |n| root_level_prob(2, n, 7).unwrap();
    assert!(p(10) > p(40));
    assert!(p(40) >= iv.lo);
    let late = p(600);
    assert!(iv.contains(&late) || (&late - &iv.hi) < frac(1, 1_000_000_000u64), "{late} vs {iv:?}");
}

#[test]
fn summability_certificate_holds() {
    let cert = summability_certificate(7).unwrap();
    assert!(cert.ratio_at_k0 < Rational::one());
    assert!(weight_ratio(cert.k0 - 1, 7) >= Rational::one());
    for k in cert.k0..cert.k0 + 200 {
        assert!(weight_ratio(k + 1, 7) <= weight_ratio(k, 7));
    }
    assert!(summability_certificate(6).is_err());
    // Larger d certifies sooner.
    assert!(summability_certificate(20).unwrap().k0 <= cert.k0);
}

#[test]
fn table_and_sampler_agree() {
    let tol = frac(1, 1_000_000u64);
    let rows = census_table(3, 7, &tol).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1].u_k, BigUint::from(1112u32));
    assert_eq!(rows[1].u_k_base_only, BigUint::from(1154u32));
    let s = LimitLevelSampler::new(7, GlueMode::TowerSharing).unwrap();
    let sum: f64 = (1..=s.max_level()).map(|k| s.probability(k)).sum();
    assert!((sum - 1.0).abs() < 1e-12);
}

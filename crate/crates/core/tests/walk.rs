use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use souvlaki::assembly::{assemble_tn, spine_truncation, GlueMode};
use souvlaki::flow::concatenated_energy_analytic;
use souvlaki::graph::Graph;
use souvlaki::linalg::SolverConfig;
use souvlaki::rational::to_f64;
use souvlaki::topology::{materialize_meatball, H3Vertex, MeatballSpec, Part};
use souvlaki::walk::{
    bush_vertices, empirical_hitting, escape_probability, exact_hitting_distribution, harmonic_measure_of,
    radial_symmetry_check, simulate_hitting, simulate_spine_hitting, SymmetryInstance,
};

fn cfg() -> SolverConfig {
    SolverConfig::with_tol(1e-12)
}

fn top_row(g: &Graph<H3Vertex>, row: u32) -> Vec<u32> {
    (0..g.len() as u32).filter(|&v| g.vertex(v).row() == row).collect()
}

#[test]
fn empirical_hitting_matches_exact_within_three_se() {
    let g = materialize_meatball(&MeatballSpec::new(1, 7).unwrap(), Part::Full, 1000).unwrap();
    let top = top_row(&g, 1);
    let start = g.id(&H3Vertex::base(0)).unwrap();
    let exact = exact_hitting_distribution(&g, start, &top, cfg()).unwrap();
    let runs = 20_000u64;
    let counts = empirical_hitting(&g, start, &top, runs, 1_000_000, 21);
    assert_eq!(counts.values().sum::<u64>(), runs);
    for (i, &x) in top.iter().enumerate() {
        let p = exact.probabilities[i];
        let p_hat = counts.get(&x).copied().unwrap_or(0) as f64 / runs as f64;
        let se = (p * (1.0 - p) / runs as f64).sqrt();
        assert!((p_hat - p).abs() <= 3.0 * se, "vertex {}: {p_hat} vs {p} (se {se})", g.vertex(x));
    }
}

#[test]
fn harmonic_measure_sums_to_one_on_m2() {
    let g = materialize_meatball(&MeatballSpec::new(2, 7).unwrap(), Part::Full, 10_000).unwrap();
    let top = top_row(&g, 2);
    for p in [0, 7, 19, 20] {
        let start = g.id(&H3Vertex::base(p)).unwrap();
        let h = exact_hitting_distribution(&g, start, &top, cfg()).unwrap();
        assert!((h.total() - 1.0).abs() <= 1e-9, "start {p}: {}", h.total());
        assert!(h.probabilities.iter().all(|&x| x >= -1e-12));
    }
}

#[test]
fn harmonic_extension_spot_check() {
    let g = materialize_meatball(&MeatballSpec::new(2, 7).unwrap(), Part::Full, 10_000).unwrap();
    let top = top_row(&g, 2);
    let h = harmonic_measure_of(&g, &top, top[17], cfg()).unwrap();
    let mut absorbing = vec![false; g.len()];
    for &a in &top {
        absorbing[a as usize] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < 100 {
        let v = rng.gen_range(0..g.len() as u32);
        if absorbing[v as usize] {
            continue;
        }
        let nbrs = g.neighbors(v);
        let mean = nbrs.iter().map(|&u| h[u as usize]).sum::<f64>() / nbrs.len() as f64;
        assert!((h[v as usize] - mean).abs() <= 1e-9, "not harmonic at {}", g.vertex(v));
        checked += 1;
    }
    // Cross-check against the Green-function computation.
    let start = g.id(&H3Vertex::base(3)).unwrap();
    let nu = exact_hitting_distribution(&g, start, &top, cfg()).unwrap();
    assert!((nu.probabilities[17] - h[start as usize]).abs() <= 1e-9);
}

#[test]
fn doubling_the_horizon_never_loses_hits() {
    let t = assemble_tn(2, 7, GlueMode::TowerSharing, 1 << 20).unwrap();
    let mask = t.spine_mask();
    let bush = bush_vertices(&t);
    assert_eq!(bush.len(), 300);
    for &s in bush.iter().step_by(37) {
        let mut last = 0;
        for horizon in [4u64, 8, 16, 32, 64, 128] {
            let stats = simulate_hitting(&t.graph, &mask, s, 500, horizon, 3);
            assert!(stats.hits >= last);
            last = stats.hits;
        }
        let stats = simulate_spine_hitting(&t, s, 2000, 100_000, 3).unwrap();
        assert_eq!(stats.hits, 2000);
    }
    // A vertex outside the spine component has nothing to hit.
    let (component, _) = t.graph.components();
    let spine_c = component[mask.iter().position(|&m| m).unwrap()];
    let far = (0..t.graph.len()).find(|&v| component[v] != spine_c).unwrap();
    assert!(simulate_spine_hitting(&t, far as u32, 10, 10, 3).is_err());
}

#[test]
fn radial_symmetry_on_m1_to_m3() {
    for k in 1..=3 {
        let ok = radial_symmetry_check(k, SymmetryInstance::Intact, cfg()).unwrap();
        assert!(ok.max_deviation <= 1e-9, "k={k}: {ok:?}");
        let broken = radial_symmetry_check(k, SymmetryInstance::BrokenEdge, cfg()).unwrap();
        assert!(broken.max_deviation > 1e-3, "k={k}: {broken:?}");
    }
    assert!(radial_symmetry_check(4, SymmetryInstance::Intact, cfg()).is_err());
}

#[test]
fn escape_probability_decreases_and_obeys_the_energy_bound() {
    let mut previous = 1.0;
    for k in 2..=3 {
        let s = spine_truncation(k, 7, GlueMode::TowerSharing, 1 << 22).unwrap();
        let e = escape_probability(&s, cfg()).unwrap();
        assert!((e.via_resistance - e.via_green).abs() <= 1e-6 * e.via_resistance);
        assert!(e.via_resistance <= previous);
        let energy = to_f64(&concatenated_energy_analytic(k, GlueMode::TowerSharing).unwrap());
        assert!(e.via_resistance >= 1.0 / (e.degree as f64 * energy), "K={k}");
        previous = e.via_resistance;
    }
}

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use souvlaki::assembly::{
    assemble, assemble_tn, build_gadget, oracle_ball, rooted_ball, sample_limit_ball, sample_limit_ball_with, spine_truncation,
    CanonicalVertex, GadgetVertex, GlueMode, Skeleton,
};
use souvlaki::census::LimitLevelSampler;
use souvlaki::graph::Graph;
use souvlaki::topology::{side_of, H3Vertex, MeatballSpec, Side, TAddress, WVertex, U256};

const BUDGET: u64 = 8_000_000;

fn same_graph(glued: &Graph<CanonicalVertex>, skeleton: &Skeleton) {
    assert_eq!(glued.len() as u128, skeleton.vertex_count());
    for (i, v) in glued.vertices().iter().enumerate() {
        let mut a: Vec<CanonicalVertex> = glued.neighbors(i as u32).iter().map(|&u| glued.vertex(u).clone()).collect();
        a.sort();
        assert_eq!(a, skeleton.neighbors_global(v).unwrap(), "{v}");
    }
}

#[test]
fn oracle_agrees_with_gluing_on_spine_k4() {
    let s = Skeleton::spine(4, 7).unwrap();
    same_graph(&assemble(&s, BUDGET).unwrap(), &s);
}

#[test]
fn oracle_agrees_with_gluing_in_both_modes() {
    for mode in [GlueMode::TowerSharing, GlueMode::BaseOnly] {
        for s in [Skeleton::tree(1, 7).unwrap(), Skeleton::tree(2, 7).unwrap(), Skeleton::spine(3, 7).unwrap()] {
            let s = s.with_mode(mode);
            same_graph(&assemble(&s, BUDGET).unwrap(), &s);
            assert_eq!(s.materialize(BUDGET).unwrap().len(), assemble(&s, BUDGET).unwrap().len());
        }
    }
}

fn random_raw(s: &Skeleton, edges: &[souvlaki::assembly::SkeletonAddress], rng: &mut ChaCha8Rng) -> CanonicalVertex {
    let e = edges[rng.gen_range(0..edges.len())].clone();
    let spec = s.spec(s.level(&e));
    let row = rng.gen_range(0..=spec.k);
    let digits: Vec<u8> = (0..row).map(|_| rng.gen_range(0..3)).collect();
    let width = spec.row_width(row).low_u64();
    let local = H3Vertex::new(TAddress::from_digits(&digits).unwrap(), WVertex::new(row, rng.gen_range(0..width))).unwrap();
    let copy = match side_of(&spec, &local) {
        Side::Left => None,
        Side::Right => Some(rng.gen_range(1..=s.branching as u8)),
    };
    CanonicalVertex::new(e, local, copy)
}

#[test]
fn canonicalize_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for mode in [GlueMode::TowerSharing, GlueMode::BaseOnly] {
        let s = Skeleton::tree(3, 7).unwrap().with_mode(mode);
        let edges = s.edges();
        for _ in 0..50_000 {
            let raw = random_raw(&s, &edges, &mut rng);
            let c = s.canonicalize(&raw).unwrap();
            assert_eq!(s.canonicalize(&c).unwrap(), c, "{raw}");
            assert!(s.is_canonical(&c));
        }
    }
}

#[test]
fn right_base_glues_onto_child_left_segment() {
    let s = Skeleton::tree(3, 7).unwrap();
    for e in s.edges() {
        let k = s.level(&e);
        if k < 2 {
            continue;
        }
        let spec = s.spec(k);
        assert_eq!(spec.len_r(), (k as u64 - 1).pow(2));
        for c in 1..=7u8 {
            let image: BTreeSet<CanonicalVertex> = (spec.split()..spec.base_len())
                .map(|p| s.canonicalize(&CanonicalVertex::new(e.clone(), H3Vertex::base(p), Some(c))).unwrap())
                .collect();
            let child = e.child(c);
            let target: BTreeSet<CanonicalVertex> = (0..s.spec(k - 1).len_l())
                .map(|p| CanonicalVertex::new(child.clone(), H3Vertex::base(p), None))
                .collect();
            assert_eq!(image, target, "edge {e} copy {c}");
        }
    }
}

#[test]
fn t2_shape() {
    let t = assemble_tn(2, 7, GlueMode::TowerSharing, BUDGET).unwrap();
    assert_eq!(t.graph.len(), 8470);
    assert_eq!(t.graph.edge_count(), 16611);
    assert_eq!(t.graph.max_degree(), 15);
    // The skeleton root dissolves: one isomorphic piece per root edge.
    assert_eq!(t.components, 7);
    let (component, count) = t.graph.components();
    let mut sizes = vec![0usize; count];
    for c in component {
        sizes[c as usize] += 1;
    }
    assert!(sizes.iter().all(|&x| x == 1210), "{sizes:?}");
    let base = assemble_tn(2, 7, GlueMode::BaseOnly, BUDGET).unwrap();
    assert!(base.graph.max_degree() <= 15);
    assert_eq!(base.components, 7);
}

#[test]
fn spine_degrees_and_connectivity() {
    for k in 2..=3 {
        let s = spine_truncation(k, 7, GlueMode::TowerSharing, BUDGET).unwrap();
        assert!(s.graph.is_connected());
        assert!(s.graph.max_degree() <= 15);
        assert_eq!(s.frontier.len() as u32, k * k);
    }
    assert_eq!(spine_truncation(2, 7, GlueMode::TowerSharing, BUDGET).unwrap().graph.len(), 910);
    assert!(spine_truncation(1, 7, GlueMode::TowerSharing, BUDGET).is_err());
}

#[test]
fn gadget_boundary_base_has_degree_fourteen() {
    for k in 2..=3 {
        let spec = MeatballSpec::new(k, 7).unwrap();
        let g = build_gadget(&spec, 7, BUDGET).unwrap();
        let b = g.id(&GadgetVertex { local: H3Vertex::base(spec.split() - 1), copy: None }).unwrap();
        assert_eq!(g.degree(b), 14, "k={k}");
        assert!(g.max_degree() <= 15);
    }
}

#[test]
fn oracle_balls_match_materialized_balls() {
    let s = Skeleton::tree(2, 7).unwrap();
    let g = assemble(&s, BUDGET).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let root = rng.gen_range(0..g.len() as u32);
        let (ball, r) = rooted_ball(&g, root, 2);
        let oracle = oracle_ball(&s, g.vertex(root), 2, BUDGET).unwrap();
        let a: BTreeSet<_> = ball.vertices().iter().cloned().collect();
        let b: BTreeSet<_> = oracle.vertices().iter().cloned().collect();
        assert_eq!(a, b);
        assert_eq!(ball.degree(r), g.degree(root));
    }
}

#[test]
fn limit_balls() {
    let zero = sample_limit_ball(0, 7, 9, 100).unwrap();
    assert_eq!(zero.graph.len(), 1);
    let mut levels = BTreeSet::new();
    let sampler = LimitLevelSampler::new(7, GlueMode::TowerSharing).unwrap();
    for seed in 0..40 {
        let a = sample_limit_ball_with(&sampler, 1, 7, seed, 100_000).unwrap();
        let b = sample_limit_ball_with(&sampler, 1, 7, seed, 100_000).unwrap();
        assert_eq!(a.graph.vertices(), b.graph.vertices());
        assert_eq!(a.meta, b.meta);
        let deg = a.graph.degree(a.root);
        assert!((1..=15).contains(&deg));
        assert_eq!(a.graph.len(), deg + 1);
        assert!(a.meta.embed_height > a.meta.level);
        levels.insert(a.meta.level);
    }
    assert!(levels.len() > 1, "{levels:?}");
    // Coordinates stay exact far above 64-bit positions.
    assert!(MeatballSpec::new(80, 7).unwrap().row_width(80) > U256::from(u64::MAX));
}

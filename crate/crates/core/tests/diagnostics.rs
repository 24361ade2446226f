use souvlaki::assembly::{assemble_tn, rooted_ball, spine_truncation, GlueMode};
use souvlaki::diagnostics::{
    gromov_delta, lwc_diagnostic, rooted_isomorphic, rule_seed, BallTyper, DeltaMode, LocalBall, MtpInstance, RootLaw,
    TransportFunction,
};
use souvlaki::graph::Graph;
use souvlaki::rational::frac;
use souvlaki::topology::{materialize_meatball, MeatballSpec, Part};

const BUDGET: u64 = 8_000_000;

#[test]
fn adjacency_transport_gives_average_degree() {
    let t = assemble_tn(2, 7, GlueMode::TowerSharing, BUDGET).unwrap();
    let inst = MtpInstance::new(&t.graph, 1, 1);
    let (out, inn) = inst.sides(TransportFunction::Adjacency, RootLaw::Uniform);
    assert_eq!(out, frac(2 * t.graph.edge_count() as u64, t.graph.len() as u64));
    assert_eq!(out, inn);
}

#[test]
fn invariant_rules_balance_on_spine_and_tree() {
    let spine = spine_truncation(2, 7, GlueMode::TowerSharing, BUDGET).unwrap();
    let tree = assemble_tn(2, 7, GlueMode::BaseOnly, BUDGET).unwrap();
    for g in [&spine.graph, &tree.graph] {
        let inst = MtpInstance::new(g, 2, 2);
        assert!(inst.pair_count() > g.len());
        for i in 0..10 {
            let (a, b) = inst.sides(TransportFunction::Random { seed: rule_seed(99, i) }, RootLaw::Uniform);
            assert_eq!(a, b, "rule {i}");
        }
        let (a, b) = inst.sides(TransportFunction::DegreeGradient, RootLaw::DegreeBiased);
        assert_ne!(a, b);
    }
}

#[test]
fn equal_heights_agree_within_noise() {
    let rep = lwc_diagnostic(1, 7, 2, 2, 2000, 13, BUDGET).unwrap();
    let (tv, se) = rep.tv_n1_n2;
    assert!(tv <= 3.0 * se, "tv {tv} se {se}");
    assert!(rep.max_root_degree <= 15);
}

#[test]
fn taller_trees_are_closer_to_the_limit() {
    let rep = lwc_diagnostic(1, 7, 2, 3, 2000, 5, BUDGET).unwrap();
    let (tv2, se2) = rep.tv_n1_limit;
    let (tv3, se3) = rep.tv_n2_limit;
    assert!(tv2 >= tv3 - 3.0 * (se2 + se3), "T'_2 {tv2}, T'_3 {tv3}");
    assert!(rep.max_root_degree <= 15);
    assert!(rep.types >= 2);
    // Same inputs, same report.
    let again = lwc_diagnostic(1, 7, 2, 3, 2000, 5, BUDGET).unwrap();
    assert_eq!((again.tv_n1_limit, again.types), (rep.tv_n1_limit, rep.types));
}

#[test]
fn ball_typing_is_label_free() {
    let t = assemble_tn(2, 7, GlueMode::TowerSharing, BUDGET).unwrap();
    // Corresponding vertices of two root components have isomorphic balls.
    let (component, _) = t.graph.components();
    let a = 0u32;
    let offset = t.graph.vertex(a).owner.path()[0];
    let twin = (0..t.graph.len() as u32)
        .find(|&v| {
            let (x, y) = (t.graph.vertex(v), t.graph.vertex(a));
            component[v as usize] != component[a as usize]
                && x.local == y.local
                && x.copy == y.copy
                && x.owner.path()[1..] == y.owner.path()[1..]
                && x.owner.path()[0] != offset
        })
        .unwrap();
    let (ba, _) = rooted_ball(&t.graph, a, 2);
    let (bb, _) = rooted_ball(&t.graph, twin, 2);
    let (la, lb) = (LocalBall::from_graph(&ba, 0), LocalBall::from_graph(&bb, 0));
    assert_eq!(rooted_isomorphic(&la, &lb), Some(true));
    let mut typer = BallTyper::new(60);
    assert_eq!(typer.classify(la).type_id, typer.classify(lb).type_id);
}

#[test]
fn sampled_delta_never_exceeds_exact() {
    let m1 = materialize_meatball(&MeatballSpec::new(1, 7).unwrap(), Part::Full, 100).unwrap();
    let t = assemble_tn(2, 7, GlueMode::TowerSharing, BUDGET).unwrap();
    let (ball, _) = rooted_ball(&t.graph, 0, 4);
    let graphs: Vec<Graph<String>> = vec![
        m1.map_labels(|v| v.to_string()),
        ball.map_labels(|v| v.to_string()),
        Graph::cycle(17).map_labels(|v| v.to_string()),
    ];
    for g in &graphs {
        let exact = gromov_delta(g, DeltaMode::Exact).unwrap();
        assert!(exact.exact);
        for seed in 0..4 {
            let s = gromov_delta(g, DeltaMode::Sampled { quadruples: 50_000, seed }).unwrap();
            assert!(!s.exact);
            assert!(s.twice_delta <= exact.twice_delta, "{} > {}", s.twice_delta, exact.twice_delta);
        }
    }
    assert_eq!(gromov_delta(&graphs[0], DeltaMode::Exact).unwrap().twice_delta, 2);
    assert_eq!(gromov_delta(&Graph::binary_tree(4), DeltaMode::Exact).unwrap().twice_delta, 0);
    // Too large for the dense distance matrix.
    assert!(gromov_delta(&t.graph, DeltaMode::Exact).is_err());
}

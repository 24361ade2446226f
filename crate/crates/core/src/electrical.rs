//! Effective resistances on the spine, junction contraction and the
//! spanning-subtree contrast.
//!
//! Every edge is a unit resistor. Terminal sets are shorted (wired): a set
//! held at one potential behaves as a single node.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{CanonicalVertex, SpineTruncation};
use crate::graph::Graph;
use crate::linalg::{self, boundary_current, solve_dirichlet, SolverConfig};
use crate::rational::Rational;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct ResistanceResult {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub value: f64,
    /// Final relative residual of the solve (zero for exact eliminations).
    pub residual: f64,
    pub iterations: usize,
}

fn check_terminals(n: usize, a: &[u32], b: &[u32]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("terminal sets must be nonempty".into()));
    }
    let mut seen = vec![0u8; n];
    for &v in a {
        seen[v as usize] |= 1;
    }
    for &v in b {
        seen[v as usize] |= 2;
    }
    if seen.contains(&3) {
        return Err(Error::InvalidParameter("terminal sets intersect".into()));
    }
    Ok(())
}

/// `R_eff(A, B)` by a preconditioned conjugate-gradient solve with `A` held
/// at potential one and `B` at zero.
pub fn effective_resistance<V: Clone + Eq + std::hash::Hash>(
    graph: &Graph<V>,
    a: &[u32],
    b: &[u32],
    cfg: SolverConfig,
) -> Result<ResistanceResult> {
    check_terminals(graph.len(), a, b)?;
    let mut boundary = vec![None; graph.len()];
    for &v in a {
        boundary[v as usize] = Some(1.0);
    }
    for &v in b {
        boundary[v as usize] = Some(0.0);
    }
    let sol = solve_dirichlet(graph, &boundary, &[], cfg)?;
    let current = boundary_current(graph, &sol.potential, a);
    if current <= 0.0 {
        return Err(Error::InvalidParameter("terminal sets are not connected".into()));
    }
    Ok(ResistanceResult {
        a: a.to_vec(),
        b: b.to_vec(),
        value: 1.0 / current,
        residual: sol.residual,
        iterations: sol.iterations,
    })
}

/// Exact `R_eff(A, B)` by elimination; for graphs up to
/// [`linalg::EXACT_LIMIT`] vertices.
pub fn effective_resistance_exact<V: Clone + Eq + std::hash::Hash>(graph: &Graph<V>, a: &[u32], b: &[u32]) -> Result<Rational> {
    check_terminals(graph.len(), a, b)?;
    linalg::exact_effective_resistance(graph, a, b)
}

/// Vertex of a spine truncation after junction contraction.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ContractedVertex {
    /// `v_k`: the base segment of the junction `J_k = L_k = R_{k+1}`.
    Junction(u32),
    Plain(CanonicalVertex),
}

impl fmt::Display for ContractedVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContractedVertex::Junction(k) => write!(f, "v{k}"),
            ContractedVertex::Plain(v) => write!(f, "{v}"),
        }
    }
}

/// A spine truncation with every junction base segment contracted.
pub struct ContractedSpine {
    pub graph: Graph<ContractedVertex>,
    /// `junctions[k-1]` is the id of `v_k`, for `k = 1..=K`; `v_K` is the
    /// contracted frontier.
    pub junctions: Vec<u32>,
    /// Original vertex id -> contracted id.
    pub map: Vec<u32>,
}

impl ContractedSpine {
    pub fn junction(&self, k: u32) -> u32 {
        self.junctions[k as usize - 1]
    }

    pub fn junction_degree(&self, k: u32) -> usize {
        self.graph.degree(self.junction(k))
    }
}

/// Contracts each junction base segment `J_k` (`k^2` vertices) to a single
/// vertex `v_k`; parallel edges merge and self-loops vanish.
pub fn contract_junctions(spine: &SpineTruncation) -> ContractedSpine {
    let k_max = spine.k_max();
    let mut class: Vec<Option<u32>> = vec![None; spine.graph.len()];
    for k in 1..=k_max {
        for v in spine.junction(k) {
            class[v as usize] = Some(k);
        }
    }
    let (graph, map) = spine.graph.quotient(|v| match class[v as usize] {
        Some(k) => ContractedVertex::Junction(k),
        None => ContractedVertex::Plain(spine.graph.vertex(v).clone()),
    });
    let junctions = (1..=k_max)
        .map(|k| graph.id(&ContractedVertex::Junction(k)).expect("junction present"))
        .collect();
    ContractedSpine { graph, junctions, map }
}

/// `R(v_k, v_{k+1})` in the contracted truncation, for `k = 1..K-1`.
pub fn junction_resistance_profile(contracted: &ContractedSpine, cfg: SolverConfig) -> Result<Vec<(u32, ResistanceResult)>> {
    let k_max = contracted.junctions.len() as u32;
    (1..k_max)
        .map(|k| {
            let r = effective_resistance(
                &contracted.graph,
                &[contracted.junction(k)],
                &[contracted.junction(k + 1)],
                cfg,
            )?;
            Ok((k, r))
        })
        .collect()
}

/// How a spanning tree is grown.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TreeStrategy {
    /// Breadth-first from the root, neighbors in id order.
    Bfs,
    /// Depth-first from the root, neighbors in id order.
    Dfs,
    /// Uniform spanning tree (Wilson's algorithm), rooted at the root set.
    Wilson { seed: u64 },
}

impl std::str::FromStr for TreeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bfs" => Ok(TreeStrategy::Bfs),
            "dfs" => Ok(TreeStrategy::Dfs),
            _ => match s.strip_prefix("wilson:") {
                Some(seed) => seed
                    .parse()
                    .map(|seed| TreeStrategy::Wilson { seed })
                    .map_err(|_| Error::Parse(format!("bad seed in {s:?}"))),
                None => Err(Error::Parse(format!("unknown tree strategy {s:?} (bfs|dfs|wilson:<seed>)"))),
            },
        }
    }
}

impl std::fmt::Display for TreeStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TreeStrategy::Bfs => f.write_str("bfs"),
            TreeStrategy::Dfs => f.write_str("dfs"),
            TreeStrategy::Wilson { seed } => write!(f, "wilson:{seed}"),
        }
    }
}

/// Edges of a spanning forest grown from `roots`; with a connected graph
/// and a single root it is a spanning tree. For [`TreeStrategy::Wilson`]
/// every component of the forest contains exactly one root.
pub fn spanning_forest<V: Clone + Eq + std::hash::Hash>(
    graph: &Graph<V>,
    roots: &[u32],
    strategy: TreeStrategy,
) -> Vec<(u32, u32)> {
    let n = graph.len();
    let mut in_tree = vec![false; n];
    let mut edges = Vec::with_capacity(n);
    match strategy {
        TreeStrategy::Bfs => {
            let mut queue = std::collections::VecDeque::new();
            for &r in roots {
                in_tree[r as usize] = true;
                queue.push_back(r);
            }
            while let Some(v) = queue.pop_front() {
                for &u in graph.neighbors(v) {
                    if !in_tree[u as usize] {
                        in_tree[u as usize] = true;
                        edges.push((v, u));
                        queue.push_back(u);
                    }
                }
            }
        }
        TreeStrategy::Dfs => {
            // Iterative DFS; the stack holds (vertex, next neighbor slot).
            for &r in roots {
                if in_tree[r as usize] {
                    continue;
                }
                in_tree[r as usize] = true;
                let mut stack = vec![(r, 0usize)];
                while let Some((v, i)) = stack.last_mut() {
                    let nbrs = graph.neighbors(*v);
                    if *i == nbrs.len() {
                        stack.pop();
                        continue;
                    }
                    let u = nbrs[*i];
                    *i += 1;
                    if !in_tree[u as usize] {
                        in_tree[u as usize] = true;
                        edges.push((*v, u));
                        stack.push((u, 0));
                    }
                }
            }
        }
        TreeStrategy::Wilson { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut next = vec![u32::MAX; n];
            for &r in roots {
                in_tree[r as usize] = true;
            }
            let (component, _) = graph.components();
            let mut reachable = vec![false; n];
            for &r in roots {
                let c = component[r as usize];
                for v in 0..n {
                    if component[v] == c {
                        reachable[v] = true;
                    }
                }
            }
            for start in 0..n as u32 {
                if in_tree[start as usize] || !reachable[start as usize] {
                    continue;
                }
                // Random walk until the tree is hit; `next` keeps the last
                // exit, which erases loops implicitly.
                let mut v = start;
                while !in_tree[v as usize] {
                    let nbrs = graph.neighbors(v);
                    let u = nbrs[rng.gen_range(0..nbrs.len())];
                    next[v as usize] = u;
                    v = u;
                }
                let mut v = start;
                while !in_tree[v as usize] {
                    in_tree[v as usize] = true;
                    edges.push((v, next[v as usize]));
                    v = next[v as usize];
                }
            }
        }
    }
    edges
}

/// Resistance from `source` to the grounded set `sinks` inside a forest,
/// by the series and parallel laws: grounded vertices have resistance zero,
/// and otherwise `1/R(v) = sum_c 1/(1 + R(c))` over the children that reach
/// ground. Infinite when no grounded vertex is reachable.
pub fn forest_resistance(n: usize, forest: &[(u32, u32)], source: u32, sinks: &[u32]) -> f64 {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in forest {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    let mut grounded = vec![false; n];
    for &s in sinks {
        grounded[s as usize] = true;
    }
    if grounded[source as usize] {
        return 0.0;
    }
    // Post-order over the component of `source`, stopping at ground.
    let mut parent = vec![u32::MAX; n];
    let mut order = Vec::new();
    let mut stack = vec![source];
    parent[source as usize] = source;
    while let Some(v) = stack.pop() {
        order.push(v);
        if grounded[v as usize] {
            continue;
        }
        for &u in &adj[v as usize] {
            if parent[u as usize] == u32::MAX {
                parent[u as usize] = v;
                stack.push(u);
            }
        }
    }
    let mut conductance = vec![0.0f64; n];
    let mut resistance = vec![f64::INFINITY; n];
    for &v in order.iter().rev() {
        let r = if grounded[v as usize] {
            0.0
        } else if conductance[v as usize] > 0.0 {
            1.0 / conductance[v as usize]
        } else {
            f64::INFINITY
        };
        resistance[v as usize] = r;
        if v != source && r.is_finite() {
            conductance[parent[v as usize] as usize] += 1.0 / (1.0 + r);
        }
    }
    resistance[source as usize]
}

/// `R(source, frontier)` inside a spanning subtree and inside the whole
/// truncation.
#[derive(Clone, Debug)]
pub struct SubtreeContrast {
    pub strategy: TreeStrategy,
    pub tree: f64,
    pub graph: ResistanceResult,
}

/// Extracts a spanning subtree of the truncation and compares resistances
/// to the wired frontier.
///
/// BFS and DFS trees are grown from the source; Wilson's tree is the
/// uniform spanning tree of the truncation with the frontier wired, grown
/// from the frontier.
pub fn subtree_resistance_contrast(
    spine: &SpineTruncation,
    strategy: TreeStrategy,
    cfg: SolverConfig,
) -> Result<SubtreeContrast> {
    let tree = subtree_resistance(spine, strategy);
    let graph = effective_resistance(&spine.graph, &[spine.source], &spine.frontier, cfg)?;
    Ok(SubtreeContrast { strategy, tree, graph })
}

/// `R(source, frontier)` inside one spanning subtree of the truncation.
pub fn subtree_resistance(spine: &SpineTruncation, strategy: TreeStrategy) -> f64 {
    let forest = match strategy {
        TreeStrategy::Wilson { .. } => spanning_forest(&spine.graph, &spine.frontier, strategy),
        _ => spanning_forest(&spine.graph, &[spine.source], strategy),
    };
    forest_resistance(spine.graph.len(), &forest, spine.source, &spine.frontier)
}

/// Removes one edge; used for Rayleigh monotonicity checks.
pub fn without_edge<V: Clone + Eq + std::hash::Hash>(graph: &Graph<V>, a: u32, b: u32) -> Graph<V> {
    graph.with_edges(graph.edges().filter(|&(x, y)| (x, y) != (a.min(b), a.max(b))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{spine_truncation, GlueMode};
    use crate::rational::{frac, to_f64};

    #[test]
    fn closed_forms() {
        let cfg = SolverConfig::default();
        let r = |g: &Graph<u32>, a: u32, b: u32| effective_resistance(g, &[a], &[b], cfg).unwrap().value;
        assert!((r(&Graph::path(2), 0, 1) - 1.0).abs() < 1e-9);
        assert!((r(&Graph::path(3), 0, 2) - 2.0).abs() < 1e-9);
        assert!((r(&Graph::cycle(3), 0, 1) - 2.0 / 3.0).abs() < 1e-9);
        // Cycle of n: k (n - k) / n.
        assert!((r(&Graph::cycle(12), 0, 5) - 35.0 / 12.0).abs() < 1e-9);
        assert!(effective_resistance(&Graph::path(3), &[0], &[0], cfg).is_err());
        assert!(effective_resistance(&Graph::path(3), &[], &[1], cfg).is_err());
    }

    #[test]
    fn forest_resistance_series_parallel() {
        // Path 0-1-2 plus a dangling 1-3: R(0, {2}) = 2, R(0, {2, 3}) = 1.5.
        let forest = [(0, 1), (1, 2), (1, 3)];
        assert_eq!(forest_resistance(4, &forest, 0, &[2]), 2.0);
        assert_eq!(forest_resistance(4, &forest, 0, &[2, 3]), 1.5);
        assert_eq!(forest_resistance(4, &[(0, 1)], 0, &[2]), f64::INFINITY);
    }

    #[test]
    fn spanning_forests_span() {
        let g = Graph::cycle(9);
        for s in [TreeStrategy::Bfs, TreeStrategy::Dfs, TreeStrategy::Wilson { seed: 3 }] {
            let f = spanning_forest(&g, &[0], s);
            assert_eq!(f.len(), 8, "{s:?}");
            assert!(Graph::anonymous(9, f).is_connected());
        }
        assert_eq!("wilson:12".parse::<TreeStrategy>().unwrap(), TreeStrategy::Wilson { seed: 12 });
    }

    #[test]
    fn spine2_contraction_and_exact_resistance() {
        let spine = spine_truncation(2, 7, GlueMode::TowerSharing, 1 << 20).unwrap();
        let c = contract_junctions(&spine);
        assert_eq!(c.junctions.len(), 2);
        assert!(c.graph.is_connected());
        let exact = effective_resistance_exact(&c.graph, &[c.junction(1)], &[c.junction(2)]).unwrap();
        let iterative = junction_resistance_profile(&c, SolverConfig::default()).unwrap()[0].1.value;
        assert!((to_f64(&exact) - iterative).abs() < 1e-8 * iterative);
        assert!(exact > frac(0, 1));
    }
}

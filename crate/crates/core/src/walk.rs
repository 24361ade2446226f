//! Simple random walks and exact harmonic measures.
//!
//! Seed protocol: run `i` of an experiment with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `i`. A run therefore
//! replays the same trajectory whatever the horizon or the number of other
//! runs, so extending the horizon never loses a hit.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{AssembledTree, SpineTruncation};
use crate::graph::Graph;
use crate::linalg::{solve_dirichlet, SolverConfig};
use crate::topology::{materialize_meatball, H3Vertex, MeatballSpec, Part, TAddress, WVertex};
use crate::{Error, Result};

/// The random stream of run `run` under master seed `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Walks from `start` until a vertex of `target` is reached or `horizon`
/// steps are taken. Returns the hitting time and vertex.
pub fn walk_until<V, R: Rng>(graph: &Graph<V>, target: &[bool], start: u32, horizon: u64, rng: &mut R) -> Option<(u64, u32)> {
    let mut v = start;
    for step in 0..=horizon {
        if target[v as usize] {
            return Some((step, v));
        }
        if step == horizon {
            break;
        }
        let nbrs = graph.neighbors(v);
        if nbrs.is_empty() {
            return None;
        }
        v = nbrs[rng.gen_range(0..nbrs.len())];
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkStats {
    pub start: u32,
    pub horizon: u64,
    pub runs: u64,
    pub hits: u64,
    /// Hitting-time quantiles `(q, t)` over the runs that hit.
    pub quantiles: Vec<(f64, u64)>,
    pub seed: u64,
    /// The start is already in the target set.
    pub trivial: bool,
}

impl WalkStats {
    pub fn frequency(&self) -> f64 {
        self.hits as f64 / self.runs as f64
    }
}

const QUANTILES: [f64; 4] = [0.5, 0.9, 0.99, 1.0];

/// Runs `runs` independent walks from `start` and counts those reaching
/// `target` within `horizon` steps.
pub fn simulate_hitting<V>(graph: &Graph<V>, target: &[bool], start: u32, runs: u64, horizon: u64, seed: u64) -> WalkStats {
    if target[start as usize] {
        return WalkStats {
            start,
            horizon,
            runs,
            hits: runs,
            quantiles: QUANTILES.iter().map(|&q| (q, 0)).collect(),
            seed,
            trivial: true,
        };
    }
    let mut times: Vec<u64> = (0..runs)
        .filter_map(|i| walk_until(graph, target, start, horizon, &mut run_rng(seed, i)).map(|(t, _)| t))
        .collect();
    times.sort_unstable();
    let quantiles = QUANTILES
        .iter()
        .map(|&q| {
            let t = if times.is_empty() {
                0
            } else {
                let idx = ((q * times.len() as f64).ceil() as usize).clamp(1, times.len()) - 1;
                times[idx]
            };
            (q, t)
        })
        .collect();
    WalkStats {
        start,
        horizon,
        runs,
        hits: times.len() as u64,
        quantiles,
        seed,
        trivial: false,
    }
}

/// Spine-hitting experiment on an assembled `T'_n`.
pub fn simulate_spine_hitting(tree: &AssembledTree, start: u32, runs: u64, horizon: u64, seed: u64) -> Result<WalkStats> {
    let mask = tree.spine_mask();
    let (component, _) = tree.graph.components();
    let c = component[start as usize];
    if !(0..mask.len()).any(|v| mask[v] && component[v] == c) {
        return Err(Error::InvalidParameter(format!(
            "start {} is not connected to the spine",
            tree.graph.vertex(start)
        )));
    }
    Ok(simulate_hitting(&tree.graph, &mask, start, runs, horizon, seed))
}

/// Bush vertices of `T'_n` connected to the spine, in id order.
pub fn bush_vertices(tree: &AssembledTree) -> Vec<u32> {
    let mask = tree.spine_mask();
    let (component, _) = tree.graph.components();
    let spine_component = mask.iter().position(|&m| m).map(|v| component[v]);
    (0..tree.graph.len() as u32)
        .filter(|&v| !mask[v as usize] && Some(component[v as usize]) == spine_component)
        .collect()
}

/// Empirical distribution of the first absorbing vertex hit.
pub fn empirical_hitting<V>(graph: &Graph<V>, start: u32, absorbing: &[u32], runs: u64, horizon: u64, seed: u64) -> BTreeMap<u32, u64> {
    let mut mask = vec![false; graph.len()];
    for &a in absorbing {
        mask[a as usize] = true;
    }
    let mut counts = BTreeMap::new();
    for i in 0..runs {
        if let Some((_, x)) = walk_until(graph, &mask, start, horizon, &mut run_rng(seed, i)) {
            *counts.entry(x).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Clone, Debug)]
pub struct HittingDistribution {
    pub start: u32,
    pub absorbing: Vec<u32>,
    /// `probabilities[i]` is the chance that `absorbing[i]` is hit first.
    pub probabilities: Vec<f64>,
    pub residual: f64,
}

impl HittingDistribution {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Exact harmonic measure from `start` on `absorbing`.
///
/// With `phi` the Green potential `L_II phi = e_start` (grounded on the
/// absorbing set), the chance of entering at `x` is the sum of `phi` over
/// the interior neighbors of `x`.
pub fn exact_hitting_distribution<V: Clone + Eq + std::hash::Hash>(
    graph: &Graph<V>,
    start: u32,
    absorbing: &[u32],
    cfg: SolverConfig,
) -> Result<HittingDistribution> {
    if absorbing.is_empty() {
        return Err(Error::InvalidParameter("absorbing set is empty".into()));
    }
    let mut boundary = vec![None; graph.len()];
    for &a in absorbing {
        boundary[a as usize] = Some(0.0);
    }
    if boundary[start as usize].is_some() {
        let probabilities = absorbing.iter().map(|&a| if a == start { 1.0 } else { 0.0 }).collect();
        return Ok(HittingDistribution {
            start,
            absorbing: absorbing.to_vec(),
            probabilities,
            residual: 0.0,
        });
    }
    let dist = graph.bfs_distances(&[start]);
    if absorbing.iter().all(|&a| dist[a as usize] == u32::MAX) {
        return Err(Error::InvalidParameter("absorbing set unreachable from start".into()));
    }
    // Interior components without absorbing vertices carry no load but
    // would make the operator singular; ground them.
    for v in 0..graph.len() {
        if dist[v] == u32::MAX && boundary[v].is_none() {
            boundary[v] = Some(0.0);
        }
    }
    let mut inject = vec![0.0; graph.len()];
    inject[start as usize] = 1.0;
    let sol = solve_dirichlet(graph, &boundary, &inject, cfg)?;
    let absorbing_set: Vec<bool> = {
        let mut m = vec![false; graph.len()];
        for &a in absorbing {
            m[a as usize] = true;
        }
        m
    };
    let probabilities = absorbing
        .iter()
        .map(|&x| {
            graph
                .neighbors(x)
                .iter()
                .filter(|&&y| !absorbing_set[y as usize])
                .map(|&y| sol.potential[y as usize])
                .sum()
        })
        .collect();
    Ok(HittingDistribution {
        start,
        absorbing: absorbing.to_vec(),
        probabilities,
        residual: sol.residual,
    })
}

/// `h(y) = P_y(first absorbing vertex hit is target)` at every vertex.
pub fn harmonic_measure_of<V: Clone + Eq + std::hash::Hash>(
    graph: &Graph<V>,
    absorbing: &[u32],
    target: u32,
    cfg: SolverConfig,
) -> Result<Vec<f64>> {
    let mut boundary = vec![None; graph.len()];
    for &a in absorbing {
        boundary[a as usize] = Some(if a == target { 1.0 } else { 0.0 });
    }
    Ok(solve_dirichlet(graph, &boundary, &[], cfg)?.potential)
}

/// Which meatball instance the symmetry check runs on.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SymmetryInstance {
    Intact,
    /// One edge from the first start vertex to a row-1 child removed.
    BrokenEdge,
}

/// Result of the radial symmetry check.
#[derive(Clone, Debug)]
pub struct SymmetryReport {
    pub k: u32,
    pub starts: usize,
    pub swaps: usize,
    pub max_deviation: f64,
    pub max_residual: f64,
}

/// On `M_k`, the harmonic measure on row `k` seen from a base vertex is
/// invariant under swapping two ternary subtrees. Reports the largest
/// violation over all base starts and all swaps `(prefix, a, b)`.
pub fn radial_symmetry_check(k: u32, instance: SymmetryInstance, cfg: SolverConfig) -> Result<SymmetryReport> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidParameter(format!("symmetry check needs 1 <= k <= 3, got {k}")));
    }
    let spec = MeatballSpec::new(k, crate::DEFAULT_D)?;
    let mut graph = materialize_meatball(&spec, Part::Full, 1 << 24)?;
    let starts: Vec<u32> = (0..spec.base_len())
        .map(|p| graph.id(&H3Vertex::base(p)).expect("base vertex"))
        .collect();
    if instance == SymmetryInstance::BrokenEdge {
        let s = H3Vertex::base(0);
        let child = H3Vertex {
            t: TAddress::ROOT.child(0),
            w: WVertex::new(1, 0),
        };
        let (a, b) = (graph.id(&s).unwrap(), graph.id(&child).unwrap());
        graph = crate::electrical::without_edge(&graph, a, b);
    }
    let top: Vec<u32> = (0..graph.len() as u32).filter(|&v| graph.vertex(v).row() == k).collect();
    let slot: std::collections::HashMap<u32, usize> = top.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    // Swaps: every prefix of height < k and every pair of digits.
    let mut swaps = Vec::new();
    for m in 0..k {
        for idx in 0..3u64.pow(m) {
            let prefix = TAddress::from_index(m, idx);
            for (a, b) in [(0u8, 1u8), (0, 2), (1, 2)] {
                let image: Vec<usize> = top
                    .iter()
                    .map(|&v| {
                        let x = graph.vertex(v);
                        let y = H3Vertex {
                            t: x.t.swap_below(&prefix, a, b),
                            w: x.w,
                        };
                        slot[&graph.id(&y).expect("swap stays in M_k")]
                    })
                    .collect();
                swaps.push(image);
            }
        }
    }
    let mut max_deviation = 0.0f64;
    let mut max_residual = 0.0f64;
    for &s in &starts {
        let nu = exact_hitting_distribution(&graph, s, &top, cfg)?;
        max_residual = max_residual.max(nu.residual);
        for image in &swaps {
            for (i, &j) in image.iter().enumerate() {
                max_deviation = max_deviation.max((nu.probabilities[i] - nu.probabilities[j]).abs());
            }
        }
    }
    Ok(SymmetryReport {
        k,
        starts: starts.len(),
        swaps: swaps.len(),
        max_deviation,
        max_residual,
    })
}

#[derive(Clone, Debug)]
pub struct EscapeEstimate {
    pub degree: usize,
    /// `R_eff(source, frontier)` from the voltage solve.
    pub resistance: f64,
    /// `1 / (deg * R_eff)`.
    pub via_resistance: f64,
    /// `1 / (deg * G(s, s))` from a unit-current solve.
    pub via_green: f64,
}

/// Probability that a walk from the source reaches the wired frontier
/// before returning, computed two ways.
pub fn escape_probability(spine: &SpineTruncation, cfg: SolverConfig) -> Result<EscapeEstimate> {
    let g = &spine.graph;
    let degree = g.degree(spine.source);
    let r = crate::electrical::effective_resistance(g, &[spine.source], &spine.frontier, cfg)?;
    let mut boundary = vec![None; g.len()];
    for &f in &spine.frontier {
        boundary[f as usize] = Some(0.0);
    }
    let mut inject = vec![0.0; g.len()];
    inject[spine.source as usize] = 1.0;
    let green = solve_dirichlet(g, &boundary, &inject, cfg)?;
    Ok(EscapeEstimate {
        degree,
        resistance: r.value,
        via_resistance: 1.0 / (degree as f64 * r.value),
        via_green: 1.0 / (degree as f64 * green.potential[spine.source as usize]),
    })
}

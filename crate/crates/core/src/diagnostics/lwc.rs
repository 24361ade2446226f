//! Ball-type statistics for local weak convergence.
//!
//! Balls are typed up to rooted isomorphism: a refinement certificate picks
//! the bucket and an exact backtracking test separates the members of a
//! bucket. Balls above the exact-size limit are typed by certificate only
//! and counted, so collisions can be audited.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use super::{mix, LocalBall};
use crate::assembly::{assemble_tn, sample_limit_ball_with, GlueMode};
use crate::census::LimitLevelSampler;
use crate::walk::run_rng;
use crate::Result;

/// Backtracking steps allowed per isomorphism test.
const SEARCH_LIMIT: usize = 2_000_000;

/// Exact rooted isomorphism test. `None` if the search limit was hit.
pub fn rooted_isomorphic(a: &LocalBall, b: &LocalBall) -> Option<bool> {
    if a.len() != b.len() || a.edge_count() != b.edge_count() {
        return Some(false);
    }
    let (ca, cb) = (a.refined_colors(), b.refined_colors());
    let (mut sa, mut sb) = (ca.clone(), cb.clone());
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb || ca[0] != cb[0] {
        return Some(false);
    }
    let n = a.len();
    // Map `a`'s vertices in BFS order (local ids already are).
    let mut map = vec![u32::MAX; n];
    let mut used = vec![false; n];
    let mut choice = vec![0usize; n];
    let candidates: Vec<Vec<u32>> = (0..n)
        .map(|v| (0..n as u32).filter(|&u| cb[u as usize] == ca[v]).collect())
        .collect();
    let consistent = |v: usize, u: u32, map: &[u32], used: &[bool]| -> bool {
        if a.adjacency[v].len() != b.adjacency[u as usize].len() {
            return false;
        }
        a.adjacency[v].iter().all(|&w| {
            let m = map[w as usize];
            m == u32::MAX || b.adjacency[u as usize].binary_search(&m).is_ok()
        }) && b.adjacency[u as usize].iter().filter(|&&x| used[x as usize]).count()
            == a.adjacency[v].iter().filter(|&&w| map[w as usize] != u32::MAX).count()
    };
    let mut depth = 0usize;
    let mut steps = 0usize;
    while depth < n {
        steps += 1;
        if steps > SEARCH_LIMIT {
            return None;
        }
        let mut placed = false;
        while choice[depth] < candidates[depth].len() {
            let u = candidates[depth][choice[depth]];
            choice[depth] += 1;
            if (depth == 0 && u != 0) || used[u as usize] {
                continue;
            }
            if consistent(depth, u, &map, &used) {
                map[depth] = u;
                used[u as usize] = true;
                placed = true;
                break;
            }
        }
        if placed {
            depth += 1;
            if depth < n {
                choice[depth] = 0;
            }
        } else {
            if depth == 0 {
                return Some(false);
            }
            choice[depth] = 0;
            depth -= 1;
            used[map[depth] as usize] = false;
            map[depth] = u32::MAX;
        }
    }
    Some(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TypedBall {
    pub type_id: u32,
    /// Whether the type was decided by an exact isomorphism test.
    pub exact: bool,
    pub size: usize,
    pub root_degree: usize,
}

/// Registry assigning type ids in first-seen order.
pub struct BallTyper {
    exact_limit: usize,
    buckets: HashMap<u64, Vec<(LocalBall, u32)>>,
    hashed: HashMap<u64, u32>,
    next: u32,
    /// Balls typed by certificate alone.
    pub hash_typed: usize,
}

impl BallTyper {
    pub fn new(exact_limit: usize) -> Self {
        BallTyper {
            exact_limit,
            buckets: HashMap::new(),
            hashed: HashMap::new(),
            next: 0,
            hash_typed: 0,
        }
    }

    pub fn type_count(&self) -> u32 {
        self.next
    }

    pub fn classify(&mut self, ball: LocalBall) -> TypedBall {
        let cert = ball.certificate();
        let (size, root_degree) = (ball.len(), ball.root_degree());
        if size > self.exact_limit {
            self.hash_typed += 1;
            let next = &mut self.next;
            let id = *self.hashed.entry(cert).or_insert_with(|| {
                *next += 1;
                *next - 1
            });
            return TypedBall {
                type_id: id,
                exact: false,
                size,
                root_degree,
            };
        }
        let bucket = self.buckets.entry(cert).or_default();
        for (rep, id) in bucket.iter() {
            match rooted_isomorphic(rep, &ball) {
                Some(true) => {
                    return TypedBall {
                        type_id: *id,
                        exact: true,
                        size,
                        root_degree,
                    }
                }
                Some(false) => {}
                None => {
                    // Undecided: fall back to the certificate.
                    self.hash_typed += 1;
                    return TypedBall {
                        type_id: *id,
                        exact: false,
                        size,
                        root_degree,
                    };
                }
            }
        }
        let id = self.next;
        self.next += 1;
        bucket.push((ball, id));
        TypedBall {
            type_id: id,
            exact: true,
            size,
            root_degree,
        }
    }
}

/// Total variation distance between two empirical type laws, with the
/// plug-in standard error `sum_t sqrt(p_t (1 - p_t) (1/m1 + 1/m2)) / 2`.
pub fn tv_distance(a: &BTreeMap<u32, u64>, b: &BTreeMap<u32, u64>) -> (f64, f64) {
    let (ma, mb) = (a.values().sum::<u64>() as f64, b.values().sum::<u64>() as f64);
    let keys: std::collections::BTreeSet<u32> = a.keys().chain(b.keys()).copied().collect();
    let mut tv = 0.0;
    let mut se = 0.0;
    for t in keys {
        let (ca, cb) = (*a.get(&t).unwrap_or(&0) as f64, *b.get(&t).unwrap_or(&0) as f64);
        tv += (ca / ma - cb / mb).abs();
        let p = (ca + cb) / (ma + mb);
        se += (p * (1.0 - p) * (1.0 / ma + 1.0 / mb)).sqrt();
    }
    (tv / 2.0, se / 2.0)
}

#[derive(Clone, Debug)]
pub struct LwcReport {
    pub r: u32,
    pub d: u32,
    pub n1: u32,
    pub n2: u32,
    pub samples: u64,
    pub seed: u64,
    /// `(tv, standard error)` between the two finite graphs.
    pub tv_n1_n2: (f64, f64),
    pub tv_n1_limit: (f64, f64),
    pub tv_n2_limit: (f64, f64),
    pub types: u32,
    pub hash_typed: usize,
    pub max_root_degree: usize,
}

/// Type laws of radius-`r` balls around uniform roots of `T'_{n1}`,
/// `T'_{n2}` and around limit roots, compared in total variation.
pub fn lwc_diagnostic(r: u32, d: u32, n1: u32, n2: u32, samples: u64, seed: u64, budget: u64) -> Result<LwcReport> {
    let mut typer = BallTyper::new(60);
    let mut max_root_degree = 0;
    let mut laws = Vec::new();
    for (tag, n) in [(1u64, n1), (2, n2)] {
        let tree = assemble_tn(n, d, GlueMode::TowerSharing, budget)?;
        let mut law = BTreeMap::new();
        for i in 0..samples {
            let mut rng = run_rng(mix(seed, tag), i);
            let root = rng.gen_range(0..tree.graph.len() as u32);
            let typed = typer.classify(LocalBall::extract(&tree.graph, root, r));
            max_root_degree = max_root_degree.max(typed.root_degree);
            *law.entry(typed.type_id).or_insert(0) += 1;
        }
        laws.push(law);
    }
    let sampler = LimitLevelSampler::new(d, GlueMode::TowerSharing)?;
    let mut limit = BTreeMap::new();
    for i in 0..samples {
        let sample = sample_limit_ball_with(&sampler, r, d, mix(mix(seed, 3), i), budget)?;
        let typed = typer.classify(LocalBall::extract(&sample.graph, sample.root, r));
        max_root_degree = max_root_degree.max(typed.root_degree);
        *limit.entry(typed.type_id).or_insert(0) += 1;
    }
    Ok(LwcReport {
        r,
        d,
        n1,
        n2,
        samples,
        seed,
        tv_n1_n2: tv_distance(&laws[0], &laws[1]),
        tv_n1_limit: tv_distance(&laws[0], &limit),
        tv_n2_limit: tv_distance(&laws[1], &limit),
        types: typer.type_count(),
        hash_typed: typer.hash_typed,
        max_root_degree,
    })
}

//! Checks on the assembled graphs that do not depend on the flow: the mass
//! transport identity on finite instances, convergence of ball statistics,
//! and four-point hyperbolicity.

mod delta;
mod lwc;
mod mtp;

pub use delta::{distance_matrix, gromov_delta, DeltaMode, DeltaStats};
pub use lwc::{lwc_diagnostic, rooted_isomorphic, BallTyper, LwcReport, TypedBall};
pub use mtp::{MtpInstance, RootLaw, TransportFunction};

use std::collections::HashMap;

use crate::graph::Graph;

/// Stable 64-bit mixing (splitmix64 finalizer applied to `a ^ rot(b)`).
pub(crate) fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.rotate_left(29) ^ 0x9e37_79b9_7f4a_7c15;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `i`-th random transport rule under master seed `seed`.
pub fn rule_seed(seed: u64, i: u64) -> u64 {
    mix(seed, i)
}

fn mix_all(seed: u64, items: impl IntoIterator<Item = u64>) -> u64 {
    items.into_iter().fold(seed, mix)
}

/// Vertices within distance `r` of `root`, in BFS order, with distances.
pub(crate) fn ball<V>(graph: &Graph<V>, root: u32, r: u32) -> Vec<(u32, u32)> {
    let mut out = vec![(root, 0)];
    let mut seen: HashMap<u32, ()> = HashMap::from([(root, ())]);
    let mut head = 0;
    while head < out.len() {
        let (v, dv) = out[head];
        head += 1;
        if dv == r {
            continue;
        }
        for &u in graph.neighbors(v) {
            if seen.insert(u, ()).is_none() {
                out.push((u, dv + 1));
            }
        }
    }
    out
}

/// A small rooted graph: local ids, root `0`, sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalBall {
    pub adjacency: Vec<Vec<u32>>,
}

impl LocalBall {
    /// The induced ball of radius `r` around `root`.
    pub fn extract<V>(graph: &Graph<V>, root: u32, r: u32) -> Self {
        let members = ball(graph, root, r);
        let pos: HashMap<u32, u32> = members.iter().enumerate().map(|(i, &(v, _))| (v, i as u32)).collect();
        let adjacency = members
            .iter()
            .map(|&(v, _)| {
                let mut list: Vec<u32> = graph.neighbors(v).iter().filter_map(|u| pos.get(u).copied()).collect();
                list.sort_unstable();
                list
            })
            .collect();
        LocalBall { adjacency }
    }

    pub fn from_graph<V>(graph: &Graph<V>, root: u32) -> Self {
        Self::extract(graph, root, u32::MAX)
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn root_degree(&self) -> usize {
        self.adjacency[0].len()
    }

    /// Stable colours from colour refinement started at distance-to-root.
    /// Colour values are isomorphism invariant across balls.
    pub fn refined_colors(&self) -> Vec<u64> {
        let n = self.len();
        let mut dist = vec![u32::MAX; n];
        dist[0] = 0;
        let mut queue = std::collections::VecDeque::from([0u32]);
        while let Some(v) = queue.pop_front() {
            for &u in &self.adjacency[v as usize] {
                if dist[u as usize] == u32::MAX {
                    dist[u as usize] = dist[v as usize] + 1;
                    queue.push_back(u);
                }
            }
        }
        let mut colors: Vec<u64> = dist.iter().map(|&d| mix(0x5151, d as u64)).collect();
        let mut classes = count_classes(&colors);
        loop {
            let next: Vec<u64> = (0..n)
                .map(|v| {
                    let mut nb: Vec<u64> = self.adjacency[v].iter().map(|&u| colors[u as usize]).collect();
                    nb.sort_unstable();
                    mix_all(colors[v], nb)
                })
                .collect();
            let next_classes = count_classes(&next);
            colors = next;
            if next_classes == classes {
                return colors;
            }
            classes = next_classes;
        }
    }

    /// Isomorphism-invariant hash of the rooted ball.
    pub fn certificate(&self) -> u64 {
        let colors = self.refined_colors();
        let mut sorted = colors.clone();
        sorted.sort_unstable();
        mix_all(mix(self.len() as u64, self.edge_count() as u64), sorted.into_iter().chain([colors[0]]))
    }
}

fn count_classes(colors: &[u64]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Certificate of the radius-`r` ball around every vertex.
pub fn ball_certificates<V>(graph: &Graph<V>, r: u32) -> Vec<u64> {
    (0..graph.len() as u32)
        .map(|v| LocalBall::extract(graph, v, r).certificate())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certificates_see_structure_not_labels() {
        let c = Graph::cycle(8);
        let certs = ball_certificates(&c, 2);
        assert!(certs.iter().all(|&x| x == certs[0]));
        let p = Graph::path(8);
        let certs = ball_certificates(&p, 2);
        assert_eq!(certs[0], certs[7]);
        assert_ne!(certs[0], certs[3]);
        assert_eq!(certs[3], certs[4]);
    }
}

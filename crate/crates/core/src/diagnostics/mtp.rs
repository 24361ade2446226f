//! The mass transport identity on a finite graph.
//!
//! For a transport rule `f(G, o, x)` that depends only on the isomorphism
//! class of the doubly rooted graph, a uniformly chosen root satisfies
//! `E sum_x f(o, x) = E sum_x f(x, o)`. Both sides are computed exactly by
//! summing over all pairs within the rule's reach. Rules here see the pair
//! through invariants only: the distance, the certificates of the two
//! radius-`r` balls and the size of their intersection.

use num_bigint::BigInt;

use super::{ball, ball_certificates, mix_all};
use crate::graph::Graph;
use crate::rational::Rational;

/// Transport rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportFunction {
    /// A pseudo-random invariant rule with values in `0..=9`, about half of
    /// them zero, drawn from `seed`.
    Random { seed: u64 },
    /// `1` on adjacent pairs.
    Adjacency,
    /// `1` from a vertex to each neighbor of strictly larger degree.
    DegreeGradient,
}

/// Distribution of the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootLaw {
    Uniform,
    /// Proportional to degree: the size-biased law the identity fails for.
    DegreeBiased,
}

struct Pair {
    o: u32,
    x: u32,
    dist: u8,
    overlap: u16,
}

/// Precomputed pair invariants of one finite graph.
pub struct MtpInstance {
    pub radius: u32,
    pub reach: u32,
    degrees: Vec<u64>,
    certificates: Vec<u64>,
    pairs: Vec<Pair>,
}

impl MtpInstance {
    /// `radius` is the ball radius used for typing, `reach` the largest
    /// distance at which a rule may be nonzero.
    pub fn new<V>(graph: &Graph<V>, radius: u32, reach: u32) -> Self {
        assert!(reach < u8::MAX as u32);
        let certificates = ball_certificates(graph, radius);
        let members: Vec<Vec<u32>> = (0..graph.len() as u32)
            .map(|v| {
                let mut m: Vec<u32> = ball(graph, v, radius).into_iter().map(|(u, _)| u).collect();
                m.sort_unstable();
                m
            })
            .collect();
        let mut pairs = Vec::new();
        for o in 0..graph.len() as u32 {
            for (x, dist) in ball(graph, o, reach) {
                let overlap = sorted_intersection(&members[o as usize], &members[x as usize]);
                pairs.push(Pair {
                    o,
                    x,
                    dist: dist as u8,
                    overlap: overlap.min(u16::MAX as usize) as u16,
                });
            }
        }
        MtpInstance {
            radius,
            reach,
            degrees: (0..graph.len() as u32).map(|v| graph.degree(v) as u64).collect(),
            certificates,
            pairs,
        }
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    fn value(&self, f: TransportFunction, p: &Pair) -> u64 {
        match f {
            TransportFunction::Random { seed } => {
                let h = mix_all(
                    seed,
                    [
                        p.dist as u64,
                        self.certificates[p.o as usize],
                        self.certificates[p.x as usize],
                        p.overlap as u64,
                    ],
                );
                if h & 1 == 0 {
                    0
                } else {
                    (h >> 8) % 10
                }
            }
            TransportFunction::Adjacency => (p.dist == 1) as u64,
            TransportFunction::DegreeGradient => {
                (p.dist == 1 && self.degrees[p.x as usize] > self.degrees[p.o as usize]) as u64
            }
        }
    }

    /// `(E sum_x f(o, x), E sum_x f(x, o))` for the root law, exactly.
    pub fn sides(&self, f: TransportFunction, law: RootLaw) -> (Rational, Rational) {
        let weight = |v: u32| match law {
            RootLaw::Uniform => 1u128,
            RootLaw::DegreeBiased => self.degrees[v as usize] as u128,
        };
        let mut out_mass = 0u128;
        let mut in_mass = 0u128;
        for p in &self.pairs {
            let v = self.value(f, p) as u128;
            if v != 0 {
                out_mass += weight(p.o) * v;
                in_mass += weight(p.x) * v;
            }
        }
        let total: u128 = (0..self.degrees.len() as u32).map(weight).sum();
        let total = BigInt::from(total);
        (
            Rational::new(BigInt::from(out_mass), total.clone()),
            Rational::new(BigInt::from(in_mass), total),
        )
    }
}

fn sorted_intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

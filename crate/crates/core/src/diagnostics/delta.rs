//! Gromov's four-point hyperbolicity constant.
//!
//! For a quadruple, let `S1 >= S2 >= S3` be the three pair sums
//! `d(a,b)+d(c,d)`, `d(a,c)+d(b,d)`, `d(a,d)+d(b,c)`; the graph is
//! `delta`-hyperbolic for `delta = max (S1 - S2) / 2`. Values lie on the
//! half-integer grid, so `2 delta` is stored as an integer.

use rand::Rng;
use rayon::prelude::*;

use crate::graph::Graph;
use crate::walk::run_rng;
use crate::{Error, Result};

/// Largest vertex count accepted by the exact scan.
pub const EXACT_DELTA_LIMIT: usize = 3_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaMode {
    Exact,
    Sampled { quadruples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaStats {
    pub vertices: usize,
    pub exact: bool,
    pub twice_delta: u32,
    pub quadruples: u128,
}

impl DeltaStats {
    pub fn delta(&self) -> f64 {
        self.twice_delta as f64 / 2.0
    }
}

/// All-pairs BFS distances as a dense row-major `u16` matrix.
pub fn distance_matrix<V>(graph: &Graph<V>) -> Result<Vec<u16>> {
    let n = graph.len();
    if n > EXACT_DELTA_LIMIT {
        return Err(Error::budget("all-pairs distances", n as u128, EXACT_DELTA_LIMIT as u64));
    }
    let mut out = vec![0u16; n * n];
    for v in 0..n as u32 {
        let dist = graph.bfs_distances(&[v]);
        for (u, &d) in dist.iter().enumerate() {
            if d == u32::MAX {
                return Err(Error::InvalidParameter("hyperbolicity needs a connected graph".into()));
            }
            out[v as usize * n + u] = d as u16;
        }
    }
    Ok(out)
}

/// `S1 - S2` for the three pair sums.
#[inline(always)]
fn spread(x: u16, y: u16, z: u16) -> u16 {
    let hi = x.max(y).max(z);
    let lo = x.min(y).min(z);
    // max - middle = 2 max + min - (x + y + z)
    (2 * hi + lo).wrapping_sub(x.wrapping_add(y).wrapping_add(z))
}

/// Exhaustive scan over `a < b < c < d`, parallel over `a`.
fn scan_exact(dist: &[u16], n: usize) -> u32 {
    (0..n).into_par_iter().map(|a| scan_from(dist, n, a)).max().unwrap_or(0) as u32
}

fn scan_from(dist: &[u16], n: usize, a: usize) -> u16 {
    let mut best = 0u16;
    let ra = &dist[a * n..(a + 1) * n];
    for b in a + 1..n {
        let rb = &dist[b * n..(b + 1) * n];
        let dab = ra[b];
        for c in b + 1..n {
            let rc = &dist[c * n..(c + 1) * n];
            let (dac, dbc) = (ra[c], rb[c]);
            let m = ra[c + 1..]
                .iter()
                .zip(&rb[c + 1..])
                .zip(&rc[c + 1..])
                .map(|((&dad, &dbd), &dcd)| spread(dab + dcd, dac + dbd, dad + dbc))
                .fold(0u16, u16::max);
            best = best.max(m);
        }
    }
    best
}

/// Four-point `delta` of a connected graph, exactly or from random
/// quadruples (a lower bound).
pub fn gromov_delta<V>(graph: &Graph<V>, mode: DeltaMode) -> Result<DeltaStats> {
    let n = graph.len();
    let dist = distance_matrix(graph)?;
    match mode {
        DeltaMode::Exact => {
            let quadruples = if n < 4 {
                0
            } else {
                let n = n as u128;
                n * (n - 1) * (n - 2) * (n - 3) / 24
            };
            Ok(DeltaStats {
                vertices: n,
                exact: true,
                twice_delta: if n < 4 { 0 } else { scan_exact(&dist, n) },
                quadruples,
            })
        }
        DeltaMode::Sampled { quadruples, seed } => {
            let mut rng = run_rng(seed, 0);
            let d = |x: usize, y: usize| dist[x * n + y];
            let mut best = 0u16;
            if n >= 4 {
                for _ in 0..quadruples {
                    let q: [usize; 4] = std::array::from_fn(|_| rng.gen_range(0..n));
                    let [a, b, c, e] = q;
                    best = best.max(spread(d(a, b) + d(c, e), d(a, c) + d(b, e), d(a, e) + d(b, c)));
                }
            }
            Ok(DeltaStats {
                vertices: n,
                exact: false,
                twice_delta: best as u32,
                quadruples: quadruples as u128,
            })
        }
    }
}

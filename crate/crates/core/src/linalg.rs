//! Laplacian solves: Jacobi-preconditioned conjugate gradients for the
//! Dirichlet problem, and exact star-mesh elimination for small networks.
//!
//! All edges have unit conductance. Loops run in vertex-id order, so a solve
//! is a deterministic function of the graph, the boundary data and the
//! tolerance.

use std::collections::BTreeMap;
use std::hash::Hash;

use num_traits::Zero;

use crate::graph::Graph;
use crate::rational::Rational;
use crate::{Error, Result};

/// Largest network handed to the exact eliminator.
pub const EXACT_LIMIT: usize = 3_000;

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Relative residual `|b - Ax| / |b|` at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        SolverConfig {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct DirichletSolution {
    /// Potential at every vertex; boundary vertices carry their data.
    pub potential: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `(L x)(v) = inject(v)` at every vertex without boundary data,
/// with `x(v) = boundary[v]` where given. `inject` may be empty (no
/// injected current).
pub fn solve_dirichlet<V: Clone + Eq + Hash>(
    graph: &Graph<V>,
    boundary: &[Option<f64>],
    inject: &[f64],
    cfg: SolverConfig,
) -> Result<DirichletSolution> {
    let n = graph.len();
    assert_eq!(boundary.len(), n);
    assert!(inject.is_empty() || inject.len() == n);
    // Also rejects NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {} must be positive", cfg.tol)));
    }
    // Dense numbering of the interior.
    let mut slot = vec![u32::MAX; n];
    let mut interior = Vec::new();
    for v in 0..n {
        if boundary[v].is_none() {
            slot[v] = interior.len() as u32;
            interior.push(v as u32);
        }
    }
    let m = interior.len();
    let mut b = vec![0.0; m];
    let mut diag = vec![0.0; m];
    for (i, &v) in interior.iter().enumerate() {
        let mut rhs = if inject.is_empty() { 0.0 } else { inject[v as usize] };
        for &u in graph.neighbors(v) {
            if let Some(x) = boundary[u as usize] {
                rhs += x;
            }
        }
        b[i] = rhs;
        diag[i] = graph.degree(v) as f64;
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (i, &v) in interior.iter().enumerate() {
            let mut acc = diag[i] * x[i];
            for &u in graph.neighbors(v) {
                let s = slot[u as usize];
                if s != u32::MAX {
                    acc -= x[s as usize];
                }
            }
            out[i] = acc;
        }
    };
    let (x, residual, iterations) = pcg(m, &b, &diag, apply, cfg)?;
    let mut potential: Vec<f64> = boundary.iter().map(|b| b.unwrap_or(0.0)).collect();
    for (i, &v) in interior.iter().enumerate() {
        potential[v as usize] = x[i];
    }
    Ok(DirichletSolution {
        potential,
        residual,
        iterations,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for an SPD operator given as a
/// closure, with diagonal (Jacobi) preconditioning.
fn pcg(
    m: usize,
    b: &[f64],
    diag: &[f64],
    apply: impl Fn(&[f64], &mut [f64]),
    cfg: SolverConfig,
) -> Result<(Vec<f64>, f64, usize)> {
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; m];
    if bnorm == 0.0 {
        return Ok((x, 0.0, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; m];
    let mut rz = dot(&r, &z);
    let mut residual = 1.0;
    for it in 1..=cfg.max_iter {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = dot(&r, &r).sqrt() / bnorm;
        if residual <= cfg.tol {
            // Recompute the true residual; the recursive one drifts.
            apply(&x, &mut ap);
            let true_res = b.iter().zip(&ap).map(|(b, a)| (b - a) * (b - a)).sum::<f64>().sqrt() / bnorm;
            if true_res <= cfg.tol * 10.0 {
                return Ok((x, true_res, it));
            }
            r = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
        }
        for i in 0..m {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iter,
        residual,
    })
}

/// Current leaving `sources` when they are held at potential one.
pub fn boundary_current<V: Clone + Eq + Hash>(graph: &Graph<V>, potential: &[f64], sources: &[u32]) -> f64 {
    let mut at_source = vec![false; graph.len()];
    for &s in sources {
        at_source[s as usize] = true;
    }
    sources
        .iter()
        .flat_map(|&s| graph.neighbors(s).iter().map(move |&u| (s, u)))
        .filter(|&(_, u)| !at_source[u as usize])
        .map(|(s, u)| potential[s as usize] - potential[u as usize])
        .sum()
}

/// Exact effective resistance between the vertex sets `a` and `b`, each
/// shorted to a single node, by eliminating every other vertex.
pub fn exact_effective_resistance<V: Clone + Eq + Hash>(graph: &Graph<V>, a: &[u32], b: &[u32]) -> Result<Rational> {
    let n = graph.len();
    if n > EXACT_LIMIT {
        return Err(Error::budget("exact elimination", n as u128, EXACT_LIMIT as u64));
    }
    // Node 0 is `a`, node 1 is `b`, the rest follow in vertex order.
    let mut node = vec![u32::MAX; n];
    for &v in a {
        node[v as usize] = 0;
    }
    for &v in b {
        if node[v as usize] == 0 {
            return Err(Error::InvalidParameter("terminal sets intersect".into()));
        }
        node[v as usize] = 1;
    }
    let mut next = 2u32;
    for slot in node.iter_mut() {
        if *slot == u32::MAX {
            *slot = next;
            next += 1;
        }
    }
    let mut net: Vec<BTreeMap<u32, Rational>> = vec![BTreeMap::new(); next as usize];
    for (u, v) in graph.edges() {
        let (x, y) = (node[u as usize], node[v as usize]);
        if x != y {
            *net[x as usize].entry(y).or_insert_with(Rational::zero) += Rational::from_integer(1.into());
            *net[y as usize].entry(x).or_insert_with(Rational::zero) += Rational::from_integer(1.into());
        }
    }
    let mut alive: Vec<u32> = (2..next).collect();
    while !alive.is_empty() {
        // Minimum-degree pivot keeps fill-in small.
        let (pos, _) = alive
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| (net[v as usize].len(), v))
            .expect("nonempty");
        let v = alive.swap_remove(pos);
        let star = std::mem::take(&mut net[v as usize]);
        let total: Rational = star.values().sum();
        if total.is_zero() {
            continue;
        }
        let arms: Vec<(u32, Rational)> = star.into_iter().collect();
        for &(x, _) in &arms {
            net[x as usize].remove(&v);
        }
        for (i, (x, cx)) in arms.iter().enumerate() {
            for (y, cy) in &arms[i + 1..] {
                let c = cx * cy / &total;
                *net[*x as usize].entry(*y).or_insert_with(Rational::zero) += &c;
                *net[*y as usize].entry(*x).or_insert_with(Rational::zero) += c;
            }
        }
    }
    match net[0].get(&1) {
        Some(c) if !c.is_zero() => Ok(c.recip()),
        _ => Err(Error::InvalidParameter("terminals are disconnected".into())),
    }
}

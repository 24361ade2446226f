//! The explicit unit flow `g^(k)` across one meatball and its energy.
//!
//! `g^(k)` lives on `M_{k+1}`. It leaves each of the `k^2` base vertices of
//! `R_{k+1}` with strength `1/k^2`, climbs the always-left column to height
//! `k` while splitting equally among the three ternary children at each
//! step, crosses to the left end of the meatball along row `k` (one copy of
//! the row per ternary address), and comes down the columns above the
//! `(k+1)^2` vertices of `L_{k+1}`, delivering `1/(k+1)^2` to each.
//!
//! Row `k` is a path for every fixed ternary address, so the net horizontal
//! flow is forced by the divergences and does not depend on how the
//! leftover is routed. In units of `3^{-k}` it is
//!
//! * `j/(k+1)^2` between the columns above `l_j` and `l_{j+1}`,
//! * `1` across the gap between `L_{k+1}` and `R_{k+1}`,
//! * `(k^2-j)/k^2` between the columns above `r_j` and `r_{j+1}`.
//!
//! Energies are split by phase: climbing columns (ascent), row `k`
//! (horizontal), columns above `l_j` for `j <= k^2` (descent) and for
//! `j > k^2` (redistribution).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::assembly::{CanonicalVertex, GlueMode, SkeletonAddress, SpineTruncation};
use crate::graph::Graph;
use crate::rational::{frac, int, inv_pow, Rational};
use crate::topology::{neighbors_in_meatball, side_of, H3Vertex, MeatballSpec, Side, TAddress};
use crate::{Error, Result};

/// Which part of a construction an edge value comes from.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Phase {
    Ascent,
    Horizontal,
    Descent,
    Redistribution,
    /// Sum of contributions from different phases or flows.
    Mixed,
}

/// A flow with exact values over a common denominator, stored once per
/// undirected edge; `value(u, v) = -value(v, u)` by construction.
#[derive(Clone, Debug)]
pub struct FlowAssignment<V> {
    vertices: Vec<V>,
    index: HashMap<V, u32>,
    /// Key `(a, b)` with `a < b`; the numerator of the flow from `a` to `b`.
    values: BTreeMap<(u32, u32), (i128, Phase)>,
    denominator: i128,
    sources: Vec<(V, Rational)>,
    sinks: Vec<(V, Rational)>,
    /// Meatball parameter when this is some `g^(k)`.
    pub k: Option<u32>,
}

impl<V: Clone + Eq + Hash + fmt::Display> FlowAssignment<V> {
    pub fn new(denominator: i128) -> Self {
        assert!(denominator > 0);
        FlowAssignment {
            vertices: Vec::new(),
            index: HashMap::new(),
            values: BTreeMap::new(),
            denominator,
            sources: Vec::new(),
            sinks: Vec::new(),
            k: None,
        }
    }

    fn intern(&mut self, v: V) -> u32 {
        if let Some(&i) = self.index.get(&v) {
            return i;
        }
        let i = self.vertices.len() as u32;
        self.index.insert(v.clone(), i);
        self.vertices.push(v);
        i
    }

    /// Adds `numerator / denominator` units flowing from `from` to `to`.
    pub fn add(&mut self, from: V, to: V, numerator: i128, phase: Phase) {
        if from == to || numerator == 0 {
            return;
        }
        let (a, b) = (self.intern(from), self.intern(to));
        let (key, signed) = if a < b { ((a, b), numerator) } else { ((b, a), -numerator) };
        let entry = self.values.entry(key).or_insert((0, phase));
        entry.0 = entry.0.checked_add(signed).expect("flow numerator overflow");
        if entry.1 != phase {
            entry.1 = Phase::Mixed;
        }
        if entry.0 == 0 {
            self.values.remove(&key);
        }
    }

    pub fn declare_source(&mut self, v: V, strength: Rational) {
        self.intern(v.clone());
        self.sources.push((v, strength));
    }

    pub fn declare_sink(&mut self, v: V, strength: Rational) {
        self.intern(v.clone());
        self.sinks.push((v, strength));
    }

    pub fn sources(&self) -> &[(V, Rational)] {
        &self.sources
    }

    pub fn sinks(&self) -> &[(V, Rational)] {
        &self.sinks
    }

    pub fn denominator(&self) -> i128 {
        self.denominator
    }

    /// Number of edges carrying nonzero flow.
    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    /// Exact flow from `from` to `to` (zero off the support).
    pub fn value(&self, from: &V, to: &V) -> Rational {
        let (Some(&a), Some(&b)) = (self.index.get(from), self.index.get(to)) else {
            return Rational::zero();
        };
        let num = if a < b {
            self.values.get(&(a, b)).map_or(0, |e| e.0)
        } else {
            self.values.get(&(b, a)).map_or(0, |e| -e.0)
        };
        frac(num, self.denominator)
    }

    /// Support edges oriented along the flow, with their positive value.
    pub fn edges(&self) -> impl Iterator<Item = (&V, &V, Rational, Phase)> + '_ {
        self.values.iter().map(move |(&(a, b), &(num, phase))| {
            let (from, to) = if num > 0 { (a, b) } else { (b, a) };
            (
                &self.vertices[from as usize],
                &self.vertices[to as usize],
                frac(num.abs(), self.denominator),
                phase,
            )
        })
    }

    /// Net outflow at every vertex where it is nonzero.
    pub fn divergence(&self) -> HashMap<V, Rational> {
        let mut acc: HashMap<u32, i128> = HashMap::new();
        for (&(a, b), &(num, _)) in &self.values {
            *acc.entry(a).or_insert(0) += num;
            *acc.entry(b).or_insert(0) -= num;
        }
        acc.into_iter()
            .filter(|&(_, x)| x != 0)
            .map(|(v, x)| (self.vertices[v as usize].clone(), frac(x, self.denominator)))
            .collect()
    }

    /// Exact check that the divergence is `+strength` at declared sources,
    /// `-strength` at declared sinks and zero everywhere else.
    pub fn check_conservation(&self) -> Result<()> {
        let mut expected: HashMap<V, Rational> = HashMap::new();
        for (v, s) in &self.sources {
            *expected.entry(v.clone()).or_insert_with(Rational::zero) += s;
        }
        for (v, s) in &self.sinks {
            *expected.entry(v.clone()).or_insert_with(Rational::zero) -= s;
        }
        let actual = self.divergence();
        for (v, want) in &expected {
            let got = actual.get(v).cloned().unwrap_or_else(Rational::zero);
            if &got != want {
                return Err(Error::Conservation(format!("net outflow {got} at {v}, expected {want}")));
            }
        }
        for (v, got) in &actual {
            if !expected.contains_key(v) {
                return Err(Error::Conservation(format!("net outflow {got} at interior vertex {v}")));
            }
        }
        Ok(())
    }

    /// Checks that every support edge satisfies `is_edge`.
    pub fn check_support(&self, mut is_edge: impl FnMut(&V, &V) -> bool) -> Result<()> {
        for &(a, b) in self.values.keys() {
            let (x, y) = (&self.vertices[a as usize], &self.vertices[b as usize]);
            if !is_edge(x, y) {
                return Err(Error::Conservation(format!("flow on non-edge {x} -- {y}")));
            }
        }
        Ok(())
    }

    /// `sum_e f(e)^2`, split by phase.
    pub fn energy(&self) -> EnergyReport {
        let mut sums: BTreeMap<Phase, BigInt> = BTreeMap::new();
        for &(num, phase) in self.values.values() {
            let n = BigInt::from(num);
            *sums.entry(phase).or_insert_with(BigInt::zero) += &n * &n;
        }
        let d2 = BigInt::from(self.denominator) * BigInt::from(self.denominator);
        let part = |p: Phase| Rational::new(sums.get(&p).cloned().unwrap_or_default(), d2.clone());
        let total = Rational::new(sums.values().sum(), d2.clone());
        EnergyReport::new(
            self.k,
            part(Phase::Ascent),
            part(Phase::Horizontal),
            part(Phase::Descent),
            part(Phase::Redistribution),
            total,
        )
    }

    /// Relabels the flow through `f`; edges that collapse are dropped.
    pub fn try_map<W: Clone + Eq + Hash + fmt::Display>(
        &self,
        mut f: impl FnMut(&V) -> Result<W>,
    ) -> Result<FlowAssignment<W>> {
        let mut out = FlowAssignment::new(self.denominator);
        out.k = self.k;
        let labels: Vec<W> = self.vertices.iter().map(&mut f).collect::<Result<_>>()?;
        for (&(a, b), &(num, phase)) in &self.values {
            out.add(labels[a as usize].clone(), labels[b as usize].clone(), num, phase);
        }
        for (v, s) in &self.sources {
            out.declare_source(labels[self.index[v] as usize].clone(), s.clone());
        }
        for (v, s) in &self.sinks {
            out.declare_sink(labels[self.index[v] as usize].clone(), s.clone());
        }
        Ok(out)
    }

    /// Adds `other` into `self` (edge values only; terminals are kept).
    pub fn accumulate(&mut self, other: &FlowAssignment<V>) {
        let lcm = self.denominator.lcm(&other.denominator);
        let up_self = lcm / self.denominator;
        if up_self != 1 {
            for e in self.values.values_mut() {
                e.0 = e.0.checked_mul(up_self).expect("flow numerator overflow");
            }
            self.denominator = lcm;
        }
        let up_other = lcm / other.denominator;
        for (&(a, b), &(num, phase)) in &other.values {
            let x = other.vertices[a as usize].clone();
            let y = other.vertices[b as usize].clone();
            self.add(x, y, num.checked_mul(up_other).expect("flow numerator overflow"), phase);
        }
        if self.k != other.k {
            self.k = None;
        }
    }
}

/// Per-phase energies; `total` is the sum over all support edges.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub k: Option<u32>,
    pub ascent: Rational,
    pub horizontal: Rational,
    pub descent: Rational,
    pub redistribution: Rational,
    pub total: Rational,
    /// `k^2 * total` (equal to `total` when `k` is unset).
    pub k2_total: Rational,
}

impl EnergyReport {
    fn new(
        k: Option<u32>,
        ascent: Rational,
        horizontal: Rational,
        descent: Rational,
        redistribution: Rational,
        total: Rational,
    ) -> Self {
        let k2_total = match k {
            Some(k) => &total * int(k as u64 * k as u64),
            None => total.clone(),
        };
        EnergyReport {
            k,
            ascent,
            horizontal,
            descent,
            redistribution,
            total,
            k2_total,
        }
    }
}

/// Energy of the equal-splitting unit flow on the ternary tree down to
/// `depth`: `sum_{i=1}^{depth} 3^i (3^{-i})^2 = (1 - 3^{-depth}) / 2`.
pub fn tree_flow_energy(depth: u32) -> Rational {
    (1..=depth).map(|i| inv_pow(3, i)).sum()
}

/// The rooted ternary tree down to `depth`.
pub fn ternary_tree(depth: u32) -> Graph<TAddress> {
    let mut vertices = vec![TAddress::ROOT];
    let mut edges = Vec::new();
    let mut start = 0usize;
    for _ in 0..depth {
        let end = vertices.len();
        for p in start..end {
            for c in 0..3 {
                edges.push((p as u32, vertices.len() as u32));
                vertices.push(vertices[p].child(c));
            }
        }
        start = end;
    }
    Graph::from_edges(vertices, edges)
}

/// The equal-splitting unit flow from the root of the ternary tree to its
/// `3^depth` leaves.
pub fn tree_flow(depth: u32) -> FlowAssignment<TAddress> {
    assert!((1..=40).contains(&depth));
    let den = 3i128.pow(depth);
    let mut f = FlowAssignment::new(den);
    let mut layer = vec![TAddress::ROOT];
    for i in 1..=depth {
        let mut next = Vec::with_capacity(layer.len() * 3);
        for t in &layer {
            for c in 0..3 {
                f.add(*t, t.child(c), 3i128.pow(depth - i), Phase::Ascent);
                next.push(t.child(c));
            }
        }
        layer = next;
    }
    f.declare_source(TAddress::ROOT, Rational::one());
    for t in layer {
        f.declare_sink(t, inv_pow(3, depth));
    }
    f
}

/// Support size of `g^(k)`, dominated by row `k`.
pub fn flow_support_estimate(k: u32) -> u128 {
    let spec = MeatballSpec { k: k + 1, d: crate::DEFAULT_D };
    3u128.saturating_pow(k).saturating_mul(spec.base_len() as u128) << k
}

/// Builds `g^(k)` on `M_{k+1}`.
pub fn build_flow_gk(k: u32, budget: u64) -> Result<FlowAssignment<H3Vertex>> {
    if k == 0 {
        return Err(Error::InvalidParameter("flow needs k >= 1".into()));
    }
    let estimate = flow_support_estimate(k);
    if estimate > budget as u128 || k > 12 {
        return Err(Error::budget(format!("flow g^({k})"), estimate, budget));
    }
    let spec = MeatballSpec::new(k + 1, crate::DEFAULT_D)?;
    let (k2, k1sq) = (k as i128 * k as i128, (k as i128 + 1) * (k as i128 + 1));
    let pow3 = |e: u32| 3i128.pow(e);
    let den = pow3(k) * k2 * k1sq;
    let mut f = FlowAssignment::new(den);
    f.k = Some(k);
    let split = spec.split();
    let n_sinks = (k as u64 + 1) * (k as u64 + 1);

    // Climb: an edge entering row i carries 3^{-i}/k^2.
    for j in 0..k2 as u64 {
        let mut layer = vec![H3Vertex::base(split + j)];
        for i in 1..=k {
            let mut next = Vec::with_capacity(layer.len() * 3);
            for v in &layer {
                for c in 0..3 {
                    let up = v.left_child(c);
                    f.add(*v, up, pow3(k - i) * k1sq, Phase::Ascent);
                    next.push(up);
                }
            }
            layer = next;
        }
        f.declare_source(H3Vertex::base(split + j), frac(1, k2));
    }

    // Row k: net leftward flow over each edge, in units of 3^{-k}, scaled
    // to the common denominator (multiply by k^2 (k+1)^2).
    let seg = 1u64 << k;
    let horizontal = |p: u64| -> i128 {
        // Edge between positions p and p+1.
        let col = p / seg; // column (base position) containing p
        if col + 1 < n_sinks {
            (col as i128 + 1) * k2
        } else if col < split {
            k2 * k1sq
        } else {
            let j = col - split + 1;
            (k2 - j as i128) * k1sq
        }
    };
    let last = (split + k2 as u64 - 1) * seg; // column of the last source
    for ti in 0..3u64.pow(k) {
        let t = TAddress::from_index(k, ti);
        for p in 0..last {
            let v = horizontal(p);
            if v != 0 {
                let a = H3Vertex { t, w: crate::topology::WVertex::new(k, p) };
                let b = H3Vertex { t, w: crate::topology::WVertex::new(k, p + 1) };
                f.add(b, a, v, Phase::Horizontal);
            }
        }
    }

    // Come down: an edge leaving row i carries 3^{-i}/(k+1)^2.
    for j in 0..n_sinks {
        let phase = if (j as i128) < k2 { Phase::Descent } else { Phase::Redistribution };
        let mut layer = vec![H3Vertex::base(j)];
        for i in 1..=k {
            let mut next = Vec::with_capacity(layer.len() * 3);
            for v in &layer {
                for c in 0..3 {
                    let up = v.left_child(c);
                    f.add(up, *v, pow3(k - i) * k2, phase);
                    next.push(up);
                }
            }
            layer = next;
        }
        f.declare_sink(H3Vertex::base(j), frac(1, k1sq));
    }
    Ok(f)
}

/// Exact energy of a flow on an explicit graph; every support edge must be
/// an edge of `graph`.
pub fn energy_exact<V: Clone + Eq + Hash + fmt::Display>(flow: &FlowAssignment<V>, graph: &Graph<V>) -> Result<EnergyReport> {
    flow.check_support(|a, b| match (graph.id(a), graph.id(b)) {
        (Some(x), Some(y)) => graph.has_edge(x, y),
        _ => false,
    })?;
    Ok(flow.energy())
}

/// Exact energy of a flow on a meatball, with the support checked against
/// the neighbor oracle instead of a materialized graph.
pub fn energy_exact_oracle(flow: &FlowAssignment<H3Vertex>, spec: &MeatballSpec) -> Result<EnergyReport> {
    flow.check_support(|a, b| neighbors_in_meatball(spec, a).map(|n| n.contains(b)).unwrap_or(false))?;
    Ok(flow.energy())
}

/// `sum_{j=1}^{m} j^2`.
fn sum_squares(m: u64) -> BigInt {
    let m = BigInt::from(m);
    &m * (&m + 1u32) * (&m * 2u32 + 1u32) / 6u32
}

/// Closed-form energy of `g^(k)`, per phase.
pub fn energy_analytic(k: u32) -> Result<EnergyReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("flow needs k >= 1".into()));
    }
    let kk = k as u64;
    let k2 = kk * kk;
    let k1sq = (kk + 1) * (kk + 1);
    let e_tree = tree_flow_energy(k);
    let k1_4 = int(k1sq) * int(k1sq);
    let ascent = &e_tree / int(k2);
    let descent = &e_tree * int(k2) / &k1_4;
    let redistribution = &e_tree * int(2 * kk + 1) / &k1_4;
    let sinks = Rational::new(sum_squares(k1sq - 1), k1_4.to_integer());
    let gap = &k1_4 + Rational::one();
    let between_sources = Rational::new(sum_squares(k2 - 1), BigInt::from(k2) * BigInt::from(k2));
    let profile = sinks + gap + between_sources;
    let horizontal = profile * Rational::new(crate::rational::pow(2, k), crate::rational::pow(3, k));
    let total = &ascent + &horizontal + &descent + &redistribution;
    Ok(EnergyReport::new(Some(k), ascent, horizontal, descent, redistribution, total))
}

/// Energy of the concatenated spine flow, in closed form.
///
/// With tower sharing, the climb of `g^(k)` from the junction `J_{k-1}`
/// runs up the same columns that `g^(k-1)` comes down, with equal values on
/// rows below `k-1`; the two cancel there. Each junction `2 <= k < K`
/// therefore removes `2 E_{k-1}(t) / k^2` from the plain sum. With base-only
/// gluing the supports are disjoint apart from vertices and the energy is
/// additive.
pub fn concatenated_energy_analytic(k_max: u32, mode: GlueMode) -> Result<Rational> {
    if k_max < 2 {
        return Err(Error::InvalidParameter(format!("concatenation needs K >= 2, got {k_max}")));
    }
    let mut total = Rational::zero();
    for k in 1..k_max {
        total += energy_analytic(k)?.total;
    }
    if mode == GlueMode::TowerSharing {
        for k in 2..k_max {
            total -= tree_flow_energy(k - 1) * frac(2, k as u64 * k as u64);
        }
    }
    Ok(total)
}

/// `g^(1) + ... + g^(K-1)` carried onto a spine truncation.
///
/// `g^(k)` sits on the level-`k+1` meatball; its right part is the copy
/// glued to the level-`k` piece below. The result is a unit flow from the
/// source to the wired frontier `L_K`.
pub fn concatenate_spine_flow(spine: &SpineTruncation, budget: u64) -> Result<FlowAssignment<CanonicalVertex>> {
    let skeleton = &spine.skeleton;
    let k_max = skeleton.n;
    if k_max < 2 || skeleton.branching != 1 {
        return Err(Error::InvalidParameter("concatenation needs a spine truncation with K >= 2".into()));
    }
    let mut total: Option<FlowAssignment<CanonicalVertex>> = None;
    for k in 1..k_max {
        let g = build_flow_gk(k, budget)?;
        let owner = SkeletonAddress::leftmost(k_max - k);
        let spec = skeleton.spec(k + 1);
        let lifted = g.try_map(|v| {
            let copy = (side_of(&spec, v) == Side::Right).then_some(1u8);
            skeleton.canonicalize(&CanonicalVertex::new(owner.clone(), *v, copy))
        })?;
        match total.as_mut() {
            None => total = Some(lifted),
            Some(acc) => acc.accumulate(&lifted),
        }
    }
    let mut flow = total.expect("K >= 2");
    flow.sources.clear();
    flow.sinks.clear();
    flow.declare_source(spine.graph.vertex(spine.source).clone(), Rational::one());
    let share = frac(1, k_max as u64 * k_max as u64);
    for &f in &spine.frontier {
        flow.declare_sink(spine.graph.vertex(f).clone(), share.clone());
    }
    Ok(flow)
}

/// `max_{k <= k_max} k^2 E(g^(k))` and the level attaining it.
pub fn k2_energy_constant(k_max: u32) -> Result<(Rational, u32)> {
    let mut best = (Rational::zero(), 1);
    for k in 1..=k_max {
        let r = energy_analytic(k)?;
        if r.k2_total > best.0 {
            best = (r.k2_total, k);
        }
    }
    Ok(best)
}

/// Upper bound on `sum_{k > j} E(g^(k))`.
///
/// Ascent and descent together are at most `1/(2k^2) + 1/(2(k+1)^2) <= 1/k^2`,
/// whose tail is at most `1/j`. The horizontal part is at most
/// `h_k = 2 (k+1)^4 (2/3)^k`; its tail is summed explicitly until the
/// ratio `h_{m+1}/h_m` drops below one and closed with a geometric series.
pub fn energy_tail_bound(j: u32) -> Rational {
    assert!(j >= 1);
    let h = |k: u32| -> Rational {
        let k1 = int(k as u64 + 1);
        int(2) * &k1 * &k1 * &k1 * &k1 * Rational::new(crate::rational::pow(2, k), crate::rational::pow(3, k))
    };
    let ratio = |m: u32| -> Rational {
        // Largest ratio h_{k+1}/h_k over k >= m.
        let q = frac(m as u64 + 2, m as u64 + 1);
        &q * &q * &q * &q * frac(2, 3)
    };
    let mut tail = frac(1, j as u64);
    let mut m = j + 1;
    while ratio(m) >= Rational::one() {
        tail += h(m);
        m += 1;
    }
    tail + h(m) / (Rational::one() - ratio(m))
}

/// Partial sums `S_K = sum_{k <= K} E(g^(k))` for `K = 1..=k_max`.
pub fn energy_partial_sums(k_max: u32) -> Result<Vec<Rational>> {
    let mut acc = Rational::zero();
    (1..=k_max)
        .map(|k| {
            acc += energy_analytic(k)?.total;
            Ok(acc.clone())
        })
        .collect()
}

/// Largest `|value|` over horizontal edges of row `row` in a meatball flow.
pub fn max_horizontal(flow: &FlowAssignment<H3Vertex>, row: u32) -> Rational {
    flow.edges()
        .filter(|(a, b, _, _)| a.row() == row && b.row() == row)
        .map(|(_, _, v, _)| v)
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Inflow at `v` along the edge from its parent.
pub fn inflow_from_below(flow: &FlowAssignment<H3Vertex>, v: &H3Vertex) -> Rational {
    v.parent().map_or_else(Rational::zero, |p| flow.value(&p, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{materialize_meatball, Part};

    #[test]
    fn tree_energy_closed_form() {
        assert_eq!(tree_flow_energy(1), frac(1, 3));
        assert_eq!(tree_flow_energy(2), frac(4, 9));
        for d in 1..30 {
            let closed = (Rational::one() - inv_pow(3, d)) / int(2);
            assert_eq!(tree_flow_energy(d), closed);
            assert!(tree_flow_energy(d) < frac(1, 2));
        }
        let t = tree_flow(2);
        t.check_conservation().unwrap();
        assert_eq!(energy_exact(&t, &ternary_tree(2)).unwrap().total, frac(4, 9));
    }

    #[test]
    fn zero_flow_has_zero_energy() {
        let f: FlowAssignment<u32> = FlowAssignment::new(7);
        assert!(f.energy().total.is_zero());
    }

    #[test]
    fn antisymmetry_and_cancellation() {
        let mut f: FlowAssignment<u32> = FlowAssignment::new(4);
        f.add(1, 2, 3, Phase::Ascent);
        assert_eq!(f.value(&1, &2), frac(3, 4));
        assert_eq!(f.value(&2, &1), frac(-3, 4));
        f.add(2, 1, 3, Phase::Descent);
        assert_eq!(f.support_len(), 0);
    }

    #[test]
    fn g1_trace_and_energy() {
        let g = build_flow_gk(1, 1 << 20).unwrap();
        g.check_conservation().unwrap();
        let m2 = materialize_meatball(&MeatballSpec::new(2, 7).unwrap(), Part::Full, 10_000).unwrap();
        let exact = energy_exact(&g, &m2).unwrap();
        assert_eq!(exact, energy_analytic(1).unwrap());
        // Leftover between the columns above l_1 .. l_4 on row 1.
        let mut levels: Vec<Rational> = g
            .edges()
            .filter(|(a, b, _, p)| *p == Phase::Horizontal && a.base_position() < 3 && b.base_position() < 3)
            .map(|(_, _, v, _)| v)
            .collect();
        levels.sort();
        levels.dedup();
        assert_eq!(levels, vec![frac(1, 12), frac(1, 6), frac(1, 4)]);
    }

    #[test]
    fn ascent_phase_formula() {
        for k in 1..=3 {
            let g = build_flow_gk(k, 1 << 22).unwrap();
            let e = g.energy();
            assert_eq!(e.ascent, (Rational::one() - inv_pow(3, k)) / int(2 * k as u64 * k as u64));
        }
    }

    #[test]
    fn tail_bound_dominates_partial_sums() {
        let sums = energy_partial_sums(40).unwrap();
        for j in [1u32, 4, 10, 20] {
            let tail = &sums[39] - &sums[j as usize - 1];
            assert!(tail <= energy_tail_bound(j), "j={j}");
        }
    }
}

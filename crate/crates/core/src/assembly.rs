//! Gadgets `M'_k`, the glued graphs `T'_n`, spine truncations and balls of
//! the local weak limit.
//!
//! Every skeleton edge is addressed by its path from the skeleton root (a
//! string over `1..=branching`). An edge whose lower endpoint has depth `h`
//! in a skeleton of height `n` has level `k = n - h + 1` and carries the
//! gadget `M'_k`: one `M^L_k` plus one copy of `M^R_k` per child edge. Copy
//! `c` of the right piece is identified with the left tower of child `c`.
//!
//! A vertex is named by a [`CanonicalVertex`]: the owning edge, coordinates
//! in that edge's meatball, and a copy tag for right-side vertices that are
//! not shared with a child. Shared vertices always belong to the lower
//! (closer to the leaves) edge.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::census;
use crate::graph::Graph;
use crate::topology::{
    neighbors_in_meatball, side_of, H3Vertex, MeatballIndex, MeatballSpec, Part, Side,
    TAddress, WVertex, MAX_HEIGHT, U256,
};
use crate::{Error, Result};

/// How a copy of `M^R_k` is identified with the child's left tower.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum GlueMode {
    /// All rows below the parent's height cap are shared.
    #[default]
    TowerSharing,
    /// Only the base row is shared; each copy keeps its own tower.
    BaseOnly,
}

impl FromStr for GlueMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tower" | "tower-sharing" => Ok(GlueMode::TowerSharing),
            "base" | "base-only" => Ok(GlueMode::BaseOnly),
            _ => Err(Error::Parse(format!("unknown glue mode {s:?}"))),
        }
    }
}

/// Path of a skeleton edge from the skeleton root; its length is the depth
/// of the edge's lower endpoint.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SkeletonAddress {
    path: SmallVec<[u8; 16]>,
}

impl SkeletonAddress {
    pub fn new(path: &[u8]) -> Self {
        SkeletonAddress {
            path: SmallVec::from_slice(path),
        }
    }

    /// The edge `1^len`, on the leftmost ray.
    pub fn leftmost(len: u32) -> Self {
        SkeletonAddress {
            path: SmallVec::from_elem(1, len as usize),
        }
    }

    pub fn height(&self) -> u32 {
        self.path.len() as u32
    }

    pub fn path(&self) -> &[u8] {
        &self.path
    }

    pub fn parent(&self) -> Option<Self> {
        (self.path.len() > 1).then(|| SkeletonAddress {
            path: SmallVec::from_slice(&self.path[..self.path.len() - 1]),
        })
    }

    pub fn child(&self, c: u8) -> Self {
        let mut path = self.path.clone();
        path.push(c);
        SkeletonAddress { path }
    }

    /// Index of this edge among its siblings.
    pub fn last(&self) -> u8 {
        *self.path.last().expect("non-empty skeleton address")
    }

    pub fn is_leftmost(&self) -> bool {
        self.path.iter().all(|&c| c == 1)
    }
}

impl fmt::Display for SkeletonAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.iter().all(|&c| c < 10) {
            for c in &self.path {
                write!(f, "{c}")?;
            }
        } else {
            for (i, c) in self.path.iter().enumerate() {
                if i > 0 {
                    f.write_str(".")?;
                }
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SkeletonAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e:{self}")
    }
}

impl FromStr for SkeletonAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad skeleton address {s:?}"));
        let path: Vec<u8> = if s.contains('.') {
            s.split('.').map(|p| p.parse::<u8>().map_err(|_| bad())).collect::<Result<_>>()?
        } else {
            s.bytes()
                .map(|b| if b.is_ascii_digit() { Ok(b - b'0') } else { Err(bad()) })
                .collect::<Result<_>>()?
        };
        if path.is_empty() || path.contains(&0) {
            return Err(bad());
        }
        Ok(SkeletonAddress::new(&path))
    }
}

/// Address of a vertex of an assembled graph.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalVertex {
    pub owner: SkeletonAddress,
    pub local: H3Vertex,
    pub copy: Option<u8>,
}

impl CanonicalVertex {
    pub fn new(owner: SkeletonAddress, local: H3Vertex, copy: Option<u8>) -> Self {
        CanonicalVertex { owner, local, copy }
    }
}

impl fmt::Display for CanonicalVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e:{}/{}", self.owner, self.local)?;
        if let Some(c) = self.copy {
            write!(f, "/c:{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CanonicalVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for CanonicalVertex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad canonical address {s:?}"));
        let rest = s.strip_prefix("e:").ok_or_else(bad)?;
        let (owner, rest) = rest.split_once('/').ok_or_else(bad)?;
        let (local, copy) = match rest.split_once("/c:") {
            Some((local, c)) => (local, Some(c.parse::<u8>().map_err(|_| bad())?)),
            None => (rest, None),
        };
        Ok(CanonicalVertex {
            owner: owner.parse()?,
            local: local.parse()?,
            copy,
        })
    }
}

/// Shape of the skeleton: a rooted tree of height `n` in which every vertex
/// above the leaves has `branching` children. `T_n` uses `branching = d`; a
/// spine truncation uses `branching = 1`. `d` is the nominal degree used for
/// meatball parameters and reporting.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Skeleton {
    pub n: u32,
    pub branching: u32,
    pub d: u32,
    pub mode: GlueMode,
}

impl Skeleton {
    /// The skeleton of `T'_n`.
    pub fn tree(n: u32, d: u32) -> Result<Self> {
        Self::validated(n, d, d)
    }

    /// The skeleton of a spine truncation with `k_max` meatballs.
    pub fn spine(k_max: u32, d: u32) -> Result<Self> {
        Self::validated(k_max, 1, d)
    }

    fn validated(n: u32, branching: u32, d: u32) -> Result<Self> {
        if n == 0 || n > MAX_HEIGHT {
            return Err(Error::InvalidParameter(format!("skeleton height {n} outside 1..={MAX_HEIGHT}")));
        }
        if d <= 6 {
            return Err(Error::InvalidParameter(format!("branching d={d} must exceed 6")));
        }
        if branching == 0 || branching > u8::MAX as u32 {
            return Err(Error::InvalidParameter(format!("branching {branching} unsupported")));
        }
        Ok(Skeleton {
            n,
            branching,
            d,
            mode: GlueMode::TowerSharing,
        })
    }

    pub fn with_mode(mut self, mode: GlueMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn level(&self, e: &SkeletonAddress) -> u32 {
        self.n + 1 - e.height()
    }

    pub fn spec(&self, level: u32) -> MeatballSpec {
        MeatballSpec { k: level, d: self.d }
    }

    fn spec_of(&self, e: &SkeletonAddress) -> MeatballSpec {
        self.spec(self.level(e))
    }

    pub fn validate_edge(&self, e: &SkeletonAddress) -> Result<()> {
        let h = e.height();
        if h == 0 || h > self.n || e.path.iter().any(|&c| c == 0 || c as u32 > self.branching) {
            return Err(Error::CoordinateOutOfRange(format!(
                "skeleton edge {e} outside height {} branching {}",
                self.n, self.branching
            )));
        }
        Ok(())
    }

    /// All skeleton edges, by depth and then lexicographically.
    pub fn edges(&self) -> Vec<SkeletonAddress> {
        let mut out = Vec::new();
        let mut layer: Vec<SkeletonAddress> = (1..=self.branching as u8).map(|c| SkeletonAddress::new(&[c])).collect();
        for _ in 0..self.n {
            let next: Vec<_> = layer
                .iter()
                .flat_map(|e| (1..=self.branching as u8).map(move |c| e.child(c)))
                .collect();
            out.append(&mut layer);
            layer = next;
        }
        out
    }

    /// Number of skeleton edges at a level.
    pub fn edges_at_level(&self, level: u32) -> u128 {
        (self.branching as u128).pow(self.n + 1 - level)
    }

    /// Whether a right-side row of a level-`k` gadget is shared with the child.
    fn shared_row(&self, row: u32, k: u32) -> bool {
        match self.mode {
            GlueMode::TowerSharing => row < k,
            GlueMode::BaseOnly => row == 0,
        }
    }

    /// Number of vertices owned by one edge at `level`.
    pub fn owned_count(&self, level: u32) -> u128 {
        census::ownership_count_u128(level, self.branching, self.mode)
    }

    /// Total vertex count of the assembled graph.
    pub fn vertex_count(&self) -> u128 {
        (1..=self.n)
            .map(|k| self.owned_count(k).saturating_mul(self.edges_at_level(k)))
            .fold(0u128, |a, b| a.saturating_add(b))
    }

    /// Resolves any raw address to its canonical form.
    pub fn canonicalize(&self, raw: &CanonicalVertex) -> Result<CanonicalVertex> {
        self.validate_edge(&raw.owner)?;
        let spec = self.spec_of(&raw.owner);
        spec.validate(&raw.local)?;
        match side_of(&spec, &raw.local) {
            Side::Left => {
                if raw.copy.is_some() {
                    return Err(Error::CoordinateOutOfRange(format!("{raw}: copy tag on a left vertex")));
                }
                Ok(raw.clone())
            }
            Side::Right => {
                let c = raw
                    .copy
                    .filter(|&c| c >= 1 && c as u32 <= self.branching)
                    .ok_or_else(|| Error::CoordinateOutOfRange(format!("{raw}: right vertex needs a copy tag")))?;
                if self.shared_row(raw.local.row(), spec.k) {
                    Ok(CanonicalVertex {
                        owner: raw.owner.child(c),
                        local: raw.local.shifted(-(spec.split() as i64)),
                        copy: None,
                    })
                } else {
                    Ok(raw.clone())
                }
            }
        }
    }

    pub fn is_canonical(&self, v: &CanonicalVertex) -> bool {
        matches!(self.canonicalize(v), Ok(ref c) if c == v)
    }

    /// Neighbors of a canonical vertex in the assembled graph, sorted.
    pub fn neighbors_global(&self, v: &CanonicalVertex) -> Result<Vec<CanonicalVertex>> {
        if !self.is_canonical(v) {
            return Err(Error::NonCanonical(v.to_string()));
        }
        let spec = self.spec_of(&v.owner);
        let mut raw: Vec<CanonicalVertex> = Vec::with_capacity(16);
        let copies = |owner: &SkeletonAddress, u: H3Vertex, copy: Option<u8>, raw: &mut Vec<CanonicalVertex>, spec: &MeatballSpec| {
            if side_of(spec, &u) == Side::Left {
                raw.push(CanonicalVertex::new(owner.clone(), u, None));
            } else if let Some(c) = copy {
                raw.push(CanonicalVertex::new(owner.clone(), u, Some(c)));
            } else {
                for c in 1..=self.branching as u8 {
                    raw.push(CanonicalVertex::new(owner.clone(), u, Some(c)));
                }
            }
        };
        for u in neighbors_in_meatball(&spec, &v.local)? {
            copies(&v.owner, u, v.copy, &mut raw, &spec);
        }
        // The owner's left tower also lives in the parent's copy of M^R.
        if v.copy.is_none() && v.local.base_position() < spec.len_l() {
            if let Some(parent) = v.owner.parent() {
                let pspec = self.spec_of(&parent);
                if self.shared_row(v.local.row(), pspec.k) {
                    let up = v.local.shifted(pspec.split() as i64);
                    let c = v.owner.last();
                    for u in neighbors_in_meatball(&pspec, &up)? {
                        copies(&parent, u, Some(c), &mut raw, &pspec);
                    }
                }
            }
        }
        let mut out = raw
            .iter()
            .map(|r| self.canonicalize(r))
            .collect::<Result<Vec<_>>>()?;
        out.sort();
        out.dedup();
        out.retain(|u| u != v);
        Ok(out)
    }

    /// Vertices owned by edge `e`, in a fixed order.
    pub fn owned_vertices(&self, e: &SkeletonAddress) -> Result<Vec<CanonicalVertex>> {
        let spec = self.spec_of(e);
        let full = MeatballIndex::new(spec, Part::Full)?;
        let mut out = Vec::new();
        for i in 0..full.len() {
            let local = full.vertex(i);
            match side_of(&spec, &local) {
                Side::Left => out.push(CanonicalVertex::new(e.clone(), local, None)),
                Side::Right => {
                    if !self.shared_row(local.row(), spec.k) {
                        for c in 1..=self.branching as u8 {
                            out.push(CanonicalVertex::new(e.clone(), local, Some(c)));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Materializes the assembled graph through the neighbor oracle.
    pub fn materialize(&self, budget: u64) -> Result<Graph<CanonicalVertex>> {
        let estimate = self.vertex_count();
        if estimate > budget as u128 {
            return Err(Error::budget(format!("assembly n={} d={}", self.n, self.d), estimate, budget));
        }
        let mut vertices = Vec::with_capacity(estimate as usize);
        for e in self.edges() {
            vertices.extend(self.owned_vertices(&e)?);
        }
        let index: HashMap<&CanonicalVertex, u32> = vertices.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
        let adjacency = vertices
            .iter()
            .map(|v| {
                Ok(self
                    .neighbors_global(v)?
                    .iter()
                    .map(|u| index[u])
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        drop(index);
        Ok(Graph::from_adjacency(vertices, adjacency))
    }

    /// Whether a vertex belongs to the meatballs along the leftmost skeleton ray.
    pub fn is_spine(&self, v: &CanonicalVertex) -> bool {
        v.owner.is_leftmost() && v.copy.is_none_or(|c| c == 1)
    }
}

/// A vertex of a standalone gadget `M'_k`: meatball coordinates plus the copy
/// index for right-side vertices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GadgetVertex {
    pub local: H3Vertex,
    pub copy: Option<u8>,
}

/// Builds `M'_k`: one `M^L_k` and `branching` copies of `M^R_k`, each joined
/// to `B_k` by the horizontal crossing edges.
pub fn build_gadget(spec: &MeatballSpec, branching: u32, budget: u64) -> Result<Graph<GadgetVertex>> {
    if spec.k < 2 {
        return Err(Error::InvalidParameter("leaf edges carry M^L_1 without a gadget".into()));
    }
    let right = spec.full_volume() - spec.left_volume();
    let estimate = spec.left_volume() + branching as u128 * right;
    if estimate > budget as u128 {
        return Err(Error::budget(format!("gadget M'_{}", spec.k), estimate, budget));
    }
    let full = MeatballIndex::new(*spec, Part::Full)?;
    let mut vertices = Vec::new();
    let mut ids = HashMap::new();
    for i in 0..full.len() {
        let local = full.vertex(i);
        let copies: Vec<Option<u8>> = match side_of(spec, &local) {
            Side::Left => vec![None],
            Side::Right => (1..=branching as u8).map(Some).collect(),
        };
        for copy in copies {
            ids.insert(GadgetVertex { local, copy }, vertices.len() as u32);
            vertices.push(GadgetVertex { local, copy });
        }
    }
    let mut adjacency = vec![Vec::new(); vertices.len()];
    for (i, v) in vertices.iter().enumerate() {
        for u in neighbors_in_meatball(spec, &v.local)? {
            match (side_of(spec, &u), v.copy) {
                (Side::Left, _) => adjacency[i].push(ids[&GadgetVertex { local: u, copy: None }]),
                (Side::Right, Some(c)) => adjacency[i].push(ids[&GadgetVertex { local: u, copy: Some(c) }]),
                (Side::Right, None) => {
                    for c in 1..=branching as u8 {
                        adjacency[i].push(ids[&GadgetVertex { local: u, copy: Some(c) }]);
                    }
                }
            }
        }
    }
    Ok(Graph::from_adjacency(vertices, adjacency))
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a as usize] = b;
        }
    }
}

/// Glues gadgets along the skeleton by explicit identification of raw
/// vertices. Each class is labelled by its member on the deepest edge.
pub fn assemble(skeleton: &Skeleton, budget: u64) -> Result<Graph<CanonicalVertex>> {
    let estimate = skeleton.vertex_count();
    if estimate > budget as u128 {
        return Err(Error::budget(
            format!("assembly n={} d={}", skeleton.n, skeleton.d),
            estimate,
            budget,
        ));
    }
    let mut raw: Vec<CanonicalVertex> = Vec::new();
    let mut raw_ids: HashMap<CanonicalVertex, u32> = HashMap::new();
    let mut raw_edges: Vec<(u32, u32)> = Vec::new();
    let mut gadgets: HashMap<u32, Graph<GadgetVertex>> = HashMap::new();
    for e in skeleton.edges() {
        let k = skeleton.level(&e);
        let spec = skeleton.spec(k);
        let gadget = if k == 1 {
            materialize_meatball_left(&spec, budget)?
        } else {
            match gadgets.get(&k) {
                Some(g) => g.clone(),
                None => {
                    let g = build_gadget(&spec, skeleton.branching, budget)?;
                    gadgets.insert(k, g.clone());
                    g
                }
            }
        };
        let base = raw.len() as u32;
        for gv in gadget.vertices() {
            let v = CanonicalVertex::new(e.clone(), gv.local, gv.copy);
            raw_ids.insert(v.clone(), raw.len() as u32);
            raw.push(v);
        }
        raw_edges.extend(gadget.edges().map(|(a, b)| (base + a, base + b)));
    }
    let mut uf = UnionFind::new(raw.len());
    for (i, v) in raw.iter().enumerate() {
        let Some(c) = v.copy else { continue };
        let spec = skeleton.spec_of(&v.owner);
        if skeleton.shared_row(v.local.row(), spec.k) {
            let twin = CanonicalVertex::new(v.owner.child(c), v.local.shifted(-(spec.split() as i64)), None);
            let j = raw_ids[&twin];
            uf.union(i as u32, j);
        }
    }
    let mut label: HashMap<u32, u32> = HashMap::new();
    for i in 0..raw.len() as u32 {
        let r = uf.find(i);
        let entry = label.entry(r).or_insert(i);
        let (cur, new) = (&raw[*entry as usize], &raw[i as usize]);
        let deeper = new.owner.height() > cur.owner.height()
            || (new.owner.height() == cur.owner.height() && new.copy.is_none() && cur.copy.is_some());
        if deeper {
            *entry = i;
        }
    }
    let mut class_id: HashMap<u32, u32> = HashMap::new();
    let mut vertices = Vec::with_capacity(label.len());
    let mut map = vec![0u32; raw.len()];
    for i in 0..raw.len() as u32 {
        let r = uf.find(i);
        let id = *class_id.entry(r).or_insert_with(|| {
            vertices.push(raw[label[&r] as usize].clone());
            (vertices.len() - 1) as u32
        });
        map[i as usize] = id;
    }
    let edges = raw_edges
        .into_iter()
        .map(|(a, b)| (map[a as usize], map[b as usize]))
        .filter(|(a, b)| a != b);
    Ok(Graph::from_edges(vertices, edges))
}

fn materialize_meatball_left(spec: &MeatballSpec, budget: u64) -> Result<Graph<GadgetVertex>> {
    let g = crate::topology::materialize_meatball(spec, Part::LeftOnly, budget)?;
    Ok(g.map_labels(|v| GadgetVertex { local: *v, copy: None }))
}

/// Assembled `T'_n` with report of its component structure.
pub struct AssembledTree {
    pub skeleton: Skeleton,
    pub graph: Graph<CanonicalVertex>,
    pub components: usize,
}

impl AssembledTree {
    pub fn is_connected(&self) -> bool {
        self.components == 1
    }

    /// Vertex ids on the leftmost skeleton ray.
    pub fn spine_mask(&self) -> Vec<bool> {
        self.graph.vertices().iter().map(|v| self.skeleton.is_spine(v)).collect()
    }
}

/// Builds `T'_n` on the `d`-ary skeleton of height `n`.
///
/// The skeleton root dissolves, so the `d` root edges carry mutually
/// isomorphic, disjoint pieces; `components` reports this.
pub fn assemble_tn(n: u32, d: u32, mode: GlueMode, budget: u64) -> Result<AssembledTree> {
    let skeleton = Skeleton::tree(n, d)?.with_mode(mode);
    let graph = assemble(&skeleton, budget)?;
    let components = graph.components().1;
    Ok(AssembledTree {
        skeleton,
        graph,
        components,
    })
}

/// A truncation `M^L_1, M_2, ..., M_K` of the infinite spine.
pub struct SpineTruncation {
    pub skeleton: Skeleton,
    pub graph: Graph<CanonicalVertex>,
    /// The base vertex of `L_1`, shared with `R_2`.
    pub source: u32,
    /// Base vertices of `L_K`, left to right.
    pub frontier: Vec<u32>,
}

impl SpineTruncation {
    pub fn k_max(&self) -> u32 {
        self.skeleton.n
    }

    /// Base vertices of the junction `L_k = R_{k+1}` for `1 <= k <= K`,
    /// left to right (`k = K` gives the frontier).
    pub fn junction(&self, k: u32) -> Vec<u32> {
        let owner = SkeletonAddress::leftmost(self.skeleton.n + 1 - k);
        (0..(k as u64 * k as u64))
            .map(|p| {
                self.graph
                    .id(&CanonicalVertex::new(owner.clone(), H3Vertex::base(p), None))
                    .expect("junction vertex exists")
            })
            .collect()
    }
}

pub fn spine_truncation(k_max: u32, d: u32, mode: GlueMode, budget: u64) -> Result<SpineTruncation> {
    if k_max < 2 {
        return Err(Error::InvalidParameter(format!("spine truncation needs K >= 2, got {k_max}")));
    }
    let skeleton = Skeleton::spine(k_max, d)?.with_mode(mode);
    let graph = assemble(&skeleton, budget)?;
    let source_v = CanonicalVertex::new(SkeletonAddress::leftmost(k_max), H3Vertex::base(0), None);
    let source = graph.id(&source_v).expect("source exists");
    let frontier = (0..(k_max as u64).pow(2))
        .map(|p| {
            graph
                .id(&CanonicalVertex::new(SkeletonAddress::leftmost(1), H3Vertex::base(p), None))
                .expect("frontier vertex exists")
        })
        .collect();
    Ok(SpineTruncation {
        skeleton,
        graph,
        source,
        frontier,
    })
}

/// Metadata attached to a rooted sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleMeta {
    /// Level of the edge owning the root.
    pub level: u32,
    pub radius: u32,
    pub d: u32,
    pub seed: u64,
    /// Height of the finite skeleton the ball was read from.
    pub embed_height: u32,
}

/// A finite ball with a distinguished root.
#[derive(Clone, Debug)]
pub struct RootedSample {
    pub graph: Graph<CanonicalVertex>,
    pub root: u32,
    pub meta: SampleMeta,
}

/// The radius-`r` ball around `root` in an explicit graph, as an induced
/// subgraph with the root's new id.
pub fn rooted_ball<V: Clone + Eq + std::hash::Hash>(graph: &Graph<V>, root: u32, r: u32) -> (Graph<V>, u32) {
    let mut dist: HashMap<u32, u32> = HashMap::new();
    let mut order = vec![root];
    dist.insert(root, 0);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[&v];
        if dv == r {
            continue;
        }
        for &u in graph.neighbors(v) {
            if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(u) {
                slot.insert(dv + 1);
                order.push(u);
                queue.push_back(u);
            }
        }
    }
    let pos: HashMap<u32, u32> = order.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let vertices = order.iter().map(|&v| graph.vertex(v).clone()).collect();
    let adjacency = order
        .iter()
        .map(|&v| graph.neighbors(v).iter().filter_map(|u| pos.get(u).copied()).collect())
        .collect();
    (Graph::from_adjacency(vertices, adjacency), 0)
}

/// Ball of radius `r` around `root` computed through the neighbor oracle.
pub fn oracle_ball(skeleton: &Skeleton, root: &CanonicalVertex, r: u32, budget: u64) -> Result<Graph<CanonicalVertex>> {
    let mut order = vec![root.clone()];
    let mut dist: HashMap<CanonicalVertex, u32> = HashMap::from([(root.clone(), 0)]);
    let mut neighbors: Vec<Vec<CanonicalVertex>> = Vec::new();
    let mut head = 0;
    while head < order.len() {
        let v = order[head].clone();
        let dv = dist[&v];
        let nb = skeleton.neighbors_global(&v)?;
        if dv < r {
            for u in &nb {
                if !dist.contains_key(u) {
                    dist.insert(u.clone(), dv + 1);
                    order.push(u.clone());
                    if order.len() as u64 > budget {
                        return Err(Error::budget(format!("ball of radius {r}"), order.len() as u128, budget));
                    }
                }
            }
        }
        neighbors.push(nb);
        head += 1;
    }
    let pos: HashMap<&CanonicalVertex, u32> = order.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
    let adjacency = neighbors
        .iter()
        .map(|nb| nb.iter().filter_map(|u| pos.get(u).copied()).collect())
        .collect();
    drop(pos);
    Ok(Graph::from_adjacency(order, adjacency))
}

/// Uniformly random vertex owned by an edge of the given level.
pub fn sample_owned_local<R: Rng>(
    spec: &MeatballSpec,
    branching: u32,
    mode: GlueMode,
    rng: &mut R,
) -> (H3Vertex, Option<u8>) {
    let k = spec.k;
    // Weights relative to 6^k keep everything finite for k up to MAX_HEIGHT.
    let rel = |i: u32| 6f64.powi(i as i32 - k as i32);
    let left_rows: Vec<f64> = (0..=k).map(rel).collect();
    let left_weight = spec.split() as f64 * left_rows.iter().sum::<f64>();
    let copy_rows: Vec<f64> = (0..=k)
        .map(|i| match mode {
            GlueMode::TowerSharing if i == k => rel(i),
            GlueMode::BaseOnly if i >= 1 => rel(i),
            _ => 0.0,
        })
        .collect();
    let copy_weight = (branching as u64 * spec.len_r()) as f64 * copy_rows.iter().sum::<f64>();
    let on_left = rng.gen::<f64>() * (left_weight + copy_weight) < left_weight;
    let rows = if on_left { &left_rows } else { &copy_rows };
    let total: f64 = rows.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut row = k;
    for i in (0..=k).rev() {
        if rows[i as usize] == 0.0 {
            continue;
        }
        row = i;
        if u < rows[i as usize] {
            break;
        }
        u -= rows[i as usize];
    }
    let (base, copy) = if on_left {
        (rng.gen_range(0..spec.split()), None)
    } else {
        (
            spec.split() + rng.gen_range(0..spec.len_r()),
            Some(rng.gen_range(1..=branching) as u8),
        )
    };
    let mut offset = U256::zero();
    for _ in 0..row {
        offset = (offset << 1) | U256::from(rng.gen_range(0..2u8));
    }
    let mut t = TAddress::ROOT;
    for _ in 0..row {
        t = t.child(rng.gen_range(0..3u8));
    }
    let pos = (U256::from(base) << row as usize) | offset;
    (H3Vertex { t, w: WVertex { row, pos } }, copy)
}

/// Samples a ball of radius `r` around a root drawn from the local weak
/// limit: the owning level follows the limit ownership law, the root is
/// uniform among that level's owned vertices, and the ball is read off a
/// finite skeleton deep enough that its top edge cannot be seen.
pub fn sample_limit_ball(r: u32, d: u32, seed: u64, budget: u64) -> Result<RootedSample> {
    let sampler = census::LimitLevelSampler::new(d, GlueMode::TowerSharing)?;
    sample_limit_ball_with(&sampler, r, d, seed, budget)
}

/// [`sample_limit_ball`] with a prebuilt level sampler for `d`.
pub fn sample_limit_ball_with(
    sampler: &census::LimitLevelSampler,
    r: u32,
    d: u32,
    seed: u64,
    budget: u64,
) -> Result<RootedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let level = sampler.sample(&mut rng);
    if level >= MAX_HEIGHT {
        return Err(Error::CoordinateOutOfRange(format!(
            "sampled level {level} exceeds coordinate capacity {MAX_HEIGHT}"
        )));
    }
    let spec = MeatballSpec::new(level, d)?;
    let (local, copy) = sample_owned_local(&spec, d, GlueMode::TowerSharing, &mut rng);
    let mut embed_height = level + 1;
    loop {
        let skeleton = Skeleton::tree(embed_height, d)?;
        let owner = SkeletonAddress::leftmost(embed_height + 1 - level);
        let root = CanonicalVertex::new(owner, local, copy);
        let graph = oracle_ball(&skeleton, &root, r, budget)?;
        let top_spec = skeleton.spec(embed_height);
        let sees_top = graph.vertices().iter().any(|v| {
            v.owner.height() == 1 && v.copy.is_none() && v.local.base_position() < top_spec.len_l()
        });
        if !sees_top {
            return Ok(RootedSample {
                graph,
                root: 0,
                meta: SampleMeta {
                    level,
                    radius: r,
                    d,
                    seed,
                    embed_height,
                },
            });
        }
        if embed_height >= MAX_HEIGHT {
            return Err(Error::CoordinateOutOfRange("limit ball needs a taller skeleton".into()));
        }
        embed_height += 1;
    }
}

/// Sorted edge list with a one-line header.
pub fn export_edges<V: Clone + Eq + std::hash::Hash + fmt::Display>(graph: &Graph<V>, header: &str) -> String {
    let names: Vec<String> = graph.vertices().iter().map(|v| v.to_string()).collect();
    let mut lines: Vec<String> = graph
        .edges()
        .map(|(a, b)| {
            let (x, y) = (&names[a as usize], &names[b as usize]);
            if x < y {
                format!("{x} {y}")
            } else {
                format!("{y} {x}")
            }
        })
        .collect();
    lines.sort();
    let mut out = String::with_capacity(lines.len() * 64);
    out.push_str(header);
    out.push('\n');
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

/// Counts canonical vertices by owner level, split by whether they lie in an
/// `M^L` piece.
pub fn level_census(skeleton: &Skeleton, graph: &Graph<CanonicalVertex>) -> Vec<(u32, u64, u64)> {
    let mut left = vec![0u64; skeleton.n as usize + 1];
    let mut other = vec![0u64; skeleton.n as usize + 1];
    for v in graph.vertices() {
        let k = skeleton.level(&v.owner);
        if v.copy.is_none() {
            left[k as usize] += 1;
        } else {
            other[k as usize] += 1;
        }
    }
    (1..=skeleton.n).map(|k| (k, left[k as usize], other[k as usize])).collect()
}


#[cfg(test)]
mod tests {
    use super::*;

    const BUDGET: u64 = 2_000_000;

    #[test]
    fn address_grammar() {
        let v: CanonicalVertex = "e:12/t:0/w:1,5/c:3".parse().unwrap();
        assert_eq!(v.owner.path(), &[1, 2]);
        assert_eq!(v.copy, Some(3));
        assert_eq!(v.to_string(), "e:12/t:0/w:1,5/c:3");
        let w: CanonicalVertex = "e:1/t:-/w:0,0".parse().unwrap();
        assert_eq!(w.copy, None);
        assert!("e:/t:-/w:0,0".parse::<CanonicalVertex>().is_err());
        assert!("e:10/t:-/w:0,0".parse::<CanonicalVertex>().is_err());
        let wide = SkeletonAddress::new(&[1, 12]);
        assert_eq!(wide.to_string(), "1.12");
        assert_eq!("1.12".parse::<SkeletonAddress>().unwrap(), wide);
    }

    #[test]
    fn canonicalize_moves_shared_tower_to_child() {
        let s = Skeleton::tree(2, 7).unwrap();
        // Edge "1" has level 2; R_2 is base position 20.
        let raw = CanonicalVertex::new(SkeletonAddress::new(&[1]), H3Vertex::base(20), Some(3));
        let c = s.canonicalize(&raw).unwrap();
        assert_eq!(c.to_string(), "e:13/t:-/w:0,0");
        let raw1 = CanonicalVertex::new(
            SkeletonAddress::new(&[1]),
            H3Vertex::new("2".parse().unwrap(), WVertex::new(1, 41)).unwrap(),
            Some(2),
        );
        assert_eq!(s.canonicalize(&raw1).unwrap().to_string(), "e:12/t:2/w:1,1");
        let top = CanonicalVertex::new(
            SkeletonAddress::new(&[1]),
            H3Vertex::new("21".parse().unwrap(), WVertex::new(2, 82)).unwrap(),
            Some(2),
        );
        assert_eq!(s.canonicalize(&top).unwrap(), top);
        let base_only = s.with_mode(GlueMode::BaseOnly);
        assert_eq!(base_only.canonicalize(&raw1).unwrap(), raw1);
    }

    #[test]
    fn non_canonical_input_is_rejected() {
        let s = Skeleton::tree(2, 7).unwrap();
        let raw = CanonicalVertex::new(SkeletonAddress::new(&[1]), H3Vertex::base(20), Some(1));
        assert!(matches!(s.neighbors_global(&raw), Err(Error::NonCanonical(_))));
        let missing_copy = CanonicalVertex::new(SkeletonAddress::new(&[1]), H3Vertex::base(20), None);
        assert!(s.canonicalize(&missing_copy).is_err());
    }

    #[test]
    fn gadget_degrees() {
        let spec = MeatballSpec::new(2, 7).unwrap();
        let g = build_gadget(&spec, 7, BUDGET).unwrap();
        assert_eq!(g.len(), 860 + 7 * 43);
        let b0 = g.id(&GadgetVertex { local: H3Vertex::base(19), copy: None }).unwrap();
        assert_eq!(g.degree(b0), 14);
        let b1 = g
            .id(&GadgetVertex {
                local: H3Vertex::new("0".parse().unwrap(), WVertex::new(1, 39)).unwrap(),
                copy: None,
            })
            .unwrap();
        assert_eq!(g.degree(b1), 15);
        assert!(build_gadget(&MeatballSpec::new(1, 7).unwrap(), 7, BUDGET).is_err());
    }

    #[test]
    fn degenerate_n1_is_disconnected() {
        let t = assemble_tn(1, 7, GlueMode::TowerSharing, BUDGET).unwrap();
        assert_eq!(t.graph.len(), 7 * 14);
        assert_eq!(t.components, 7);
        assert!(!t.is_connected());
    }

    #[test]
    fn spine_k2_source_is_unique() {
        let s = spine_truncation(2, 7, GlueMode::TowerSharing, BUDGET).unwrap();
        assert!(s.graph.is_connected());
        assert_eq!(s.junction(1), vec![s.source]);
        assert_eq!(s.frontier.len(), 4);
        // M^L_1 (14) + M_2 (903) with the shared L_1 tower (1 + 6 vertices).
        assert_eq!(s.graph.len(), 14 + 903 - 7);
        let s3 = spine_truncation(3, 7, GlueMode::TowerSharing, BUDGET).unwrap();
        assert_eq!(s3.junction(2).len(), 4);
    }

    #[test]
    fn oracle_matches_gluing_small() {
        for skeleton in [Skeleton::spine(3, 7).unwrap(), Skeleton::tree(2, 7).unwrap()] {
            for mode in [GlueMode::TowerSharing, GlueMode::BaseOnly] {
                let s = skeleton.with_mode(mode);
                let glued = assemble(&s, BUDGET).unwrap();
                let oracle = s.materialize(BUDGET).unwrap();
                assert_eq!(glued.len(), oracle.len());
                assert_eq!(glued.len() as u128, s.vertex_count());
                for (i, v) in glued.vertices().iter().enumerate() {
                    assert!(s.is_canonical(v), "{v}");
                    let mut a: Vec<_> = glued.neighbors(i as u32).iter().map(|&u| glued.vertex(u).clone()).collect();
                    a.sort();
                    assert_eq!(a, s.neighbors_global(v).unwrap(), "{v}");
                }
            }
        }
    }

    #[test]
    fn limit_ball_is_deterministic() {
        let a = sample_limit_ball(1, 7, 11, 10_000).unwrap();
        let b = sample_limit_ball(1, 7, 11, 10_000).unwrap();
        assert_eq!(a.graph.vertices(), b.graph.vertices());
        assert_eq!(a.meta, b.meta);
        let zero = sample_limit_ball(0, 7, 3, 10).unwrap();
        assert_eq!(zero.graph.len(), 1);
        assert!(a.graph.degree(a.root) <= 15);
    }

    #[test]
    fn export_is_sorted() {
        let s = spine_truncation(2, 7, GlueMode::TowerSharing, BUDGET).unwrap();
        let text = export_edges(&s.graph, "# souvlaki v1 K=2 d=7");
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# souvlaki v1 K=2 d=7"));
        let rest: Vec<&str> = lines.collect();
        assert_eq!(rest.len(), s.graph.edge_count());
        assert!(rest.windows(2).all(|w| w[0] < w[1]));
        assert!(rest.iter().all(|l| {
            let (a, b) = l.split_once(' ').unwrap();
            a < b
        }));
    }
}

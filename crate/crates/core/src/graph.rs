//! Simple undirected graphs in compressed adjacency form, labelled by an
//! arbitrary vertex type.

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

/// Undirected simple graph with `u32` vertex ids and a label per vertex.
#[derive(Clone, Debug)]
pub struct Graph<V> {
    vertices: Vec<V>,
    index: HashMap<V, u32>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl<V: Clone + Eq + Hash> Graph<V> {
    /// Builds a graph from labels and per-vertex neighbor lists. Lists are
    /// sorted and deduplicated; self-loops are dropped. The relation must be
    /// symmetric; this is checked in debug builds.
    pub fn from_adjacency(vertices: Vec<V>, adjacency: Vec<Vec<u32>>) -> Self {
        assert_eq!(vertices.len(), adjacency.len());
        let mut offsets = Vec::with_capacity(vertices.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for (v, mut list) in adjacency.into_iter().enumerate() {
            list.sort_unstable();
            list.dedup();
            list.retain(|&u| u as usize != v);
            targets.extend_from_slice(&list);
            offsets.push(targets.len());
        }
        let index = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i as u32))
            .collect::<HashMap<_, _>>();
        assert_eq!(index.len(), vertices.len(), "duplicate vertex labels");
        let g = Graph {
            vertices,
            index,
            offsets,
            targets,
        };
        debug_assert!(g.is_symmetric());
        g
    }

    /// Builds a graph from labels and an undirected edge list.
    pub fn from_edges(vertices: Vec<V>, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for (a, b) in edges {
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        Self::from_adjacency(vertices, adjacency)
    }

    pub fn id(&self, v: &V) -> Option<u32> {
        self.index.get(v).copied()
    }

    pub fn vertex(&self, id: u32) -> &V {
        &self.vertices[id as usize]
    }

    pub fn vertices(&self) -> &[V] {
        &self.vertices
    }

    /// Relabels vertices with `f`; adjacency is unchanged.
    pub fn map_labels<W: Clone + Eq + Hash>(&self, f: impl Fn(&V) -> W) -> Graph<W> {
        let vertices: Vec<W> = self.vertices.iter().map(f).collect();
        let index = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i as u32))
            .collect::<HashMap<_, _>>();
        assert_eq!(index.len(), vertices.len(), "relabelling is not injective");
        Graph {
            vertices,
            index,
            offsets: self.offsets.clone(),
            targets: self.targets.clone(),
        }
    }

    /// Graph obtained by merging vertices with equal class ids.
    /// Parallel edges are merged and self-loops dropped.
    pub fn quotient<W: Clone + Eq + Hash>(
        &self,
        class_of: impl Fn(u32) -> W,
    ) -> (Graph<W>, Vec<u32>) {
        let mut labels: Vec<W> = Vec::new();
        let mut ids: HashMap<W, u32> = HashMap::new();
        let mut map = Vec::with_capacity(self.len());
        for v in 0..self.len() as u32 {
            let c = class_of(v);
            let id = *ids.entry(c.clone()).or_insert_with(|| {
                labels.push(c);
                (labels.len() - 1) as u32
            });
            map.push(id);
        }
        let mut adjacency = vec![Vec::new(); labels.len()];
        for (a, b) in self.edges() {
            let (x, y) = (map[a as usize], map[b as usize]);
            if x != y {
                adjacency[x as usize].push(y);
                adjacency[y as usize].push(x);
            }
        }
        (Graph::from_adjacency(labels, adjacency), map)
    }

    /// Subgraph induced by `keep`, with ids renumbered in increasing order.
    pub fn induced(&self, keep: &[bool]) -> (Graph<V>, Vec<Option<u32>>) {
        let mut map = vec![None; self.len()];
        let mut labels = Vec::new();
        for v in 0..self.len() {
            if keep[v] {
                map[v] = Some(labels.len() as u32);
                labels.push(self.vertices[v].clone());
            }
        }
        let mut adjacency = vec![Vec::new(); labels.len()];
        for v in 0..self.len() {
            if let Some(a) = map[v] {
                for &u in self.neighbors(v as u32) {
                    if let Some(b) = map[u as usize] {
                        adjacency[a as usize].push(b);
                    }
                }
            }
        }
        (Graph::from_adjacency(labels, adjacency), map)
    }

    /// Same vertex set with a subset of edges.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = (u32, u32)>) -> Graph<V> {
        Graph::from_edges(self.vertices.clone(), edges)
    }
}

impl<V> Graph<V> {
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: u32) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn max_degree(&self) -> usize {
        (0..self.len() as u32).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Edges `(a, b)` with `a < b`, in increasing order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.len() as u32).flat_map(move |a| {
            self.neighbors(a)
                .iter()
                .filter(move |&&b| b > a)
                .map(move |&b| (a, b))
        })
    }

    /// Degree histogram: `hist[d]` is the number of vertices of degree `d`.
    pub fn degree_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.max_degree() + 1];
        for v in 0..self.len() as u32 {
            hist[self.degree(v)] += 1;
        }
        hist
    }

    /// Breadth-first distances from `sources`; `u32::MAX` marks unreachable.
    pub fn bfs_distances(&self, sources: &[u32]) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s as usize] != 0 {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let dv = dist[v as usize];
            for &u in self.neighbors(v) {
                if dist[u as usize] == u32::MAX {
                    dist[u as usize] = dv + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Component id per vertex and the number of components.
    pub fn components(&self) -> (Vec<u32>, usize) {
        let mut comp = vec![u32::MAX; self.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.len() {
            if comp[s] != u32::MAX {
                continue;
            }
            comp[s] = count;
            stack.push(s as u32);
            while let Some(v) = stack.pop() {
                for &u in self.neighbors(v) {
                    if comp[u as usize] == u32::MAX {
                        comp[u as usize] = count;
                        stack.push(u);
                    }
                }
            }
            count += 1;
        }
        (comp, count as usize)
    }

    pub fn is_connected(&self) -> bool {
        self.components().1 <= 1
    }

    fn is_symmetric(&self) -> bool {
        (0..self.len() as u32).all(|a| self.neighbors(a).iter().all(|&b| self.has_edge(b, a)))
    }
}

impl Graph<u32> {
    /// Anonymous graph on `0..n` from an edge list.
    pub fn anonymous(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        Graph::from_edges((0..n as u32).collect(), edges)
    }

    pub fn path(n: usize) -> Self {
        Self::anonymous(n, (1..n as u32).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> Self {
        Self::anonymous(n, (0..n as u32).map(|i| (i, (i + 1) % n as u32)))
    }

    /// Complete binary tree of the given depth, heap-ordered from root 0.
    pub fn binary_tree(depth: u32) -> Self {
        let n = (1usize << (depth + 1)) - 1;
        Self::anonymous(n, (1..n as u32).map(|i| ((i - 1) / 2, i)))
    }
}

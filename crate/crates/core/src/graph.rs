//! Simple undirected graphs, their directed arc index, and planted colorings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected simple graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from unordered pairs. Edges are stored as `(u, v)` with
    /// `u < v` in lexicographic order; neighbor lists are sorted.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
        let mut list = Vec::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &list {
            adj[u].push(v);
            adj[v].push(u);
        }
        for nb in &mut adj {
            nb.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: list,
            adj,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }
}

/// Directed copies of the edges: arc `v->w` and its reverse `w->v` for every
/// edge. Arcs are numbered in lexicographic `(source, target)` order, so the
/// out-arcs of `v` form the contiguous block `offset[v]..offset[v + 1]`.
#[derive(Clone, Debug)]
pub struct ArcTable {
    source: Vec<usize>,
    target: Vec<usize>,
    reverse: Vec<usize>,
    offset: Vec<usize>,
}

impl ArcTable {
    pub fn new(graph: &Graph) -> ArcTable {
        let n = graph.num_vertices();
        let mut offset = Vec::with_capacity(n + 1);
        let mut source = Vec::with_capacity(2 * graph.num_edges());
        let mut target = Vec::with_capacity(2 * graph.num_edges());
        offset.push(0);
        for v in 0..n {
            for &w in graph.neighbors(v) {
                source.push(v);
                target.push(w);
            }
            offset.push(source.len());
        }
        let reverse = (0..source.len())
            .map(|a| {
                let (v, w) = (source[a], target[a]);
                let k = graph
                    .neighbors(w)
                    .binary_search(&v)
                    .expect("adjacency is symmetric");
                offset[w] + k
            })
            .collect();
        ArcTable {
            source,
            target,
            reverse,
            offset,
        }
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn num_vertices(&self) -> usize {
        self.offset.len() - 1
    }

    pub fn source(&self, arc: usize) -> usize {
        self.source[arc]
    }

    pub fn target(&self, arc: usize) -> usize {
        self.target[arc]
    }

    pub fn endpoints(&self, arc: usize) -> (usize, usize) {
        (self.source[arc], self.target[arc])
    }

    pub fn reverse(&self, arc: usize) -> usize {
        self.reverse[arc]
    }

    pub fn out_arcs(&self, v: usize) -> std::ops::Range<usize> {
        self.offset[v]..self.offset[v + 1]
    }

    /// Arcs `u->v` entering `v`, listed in the order of `v`'s neighbors.
    pub fn in_arcs(&self, v: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.out_arcs(v).map(move |a| self.reverse[a])
    }

    pub fn arc(&self, v: usize, w: usize) -> Option<usize> {
        let out = self.out_arcs(v);
        self.target[out.clone()]
            .binary_search(&w)
            .ok()
            .map(|k| out.start + k)
    }
}

/// A partition of the vertices into color classes 0, 1, 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedColoring {
    class_of: Vec<u8>,
    class_sizes: [usize; 3],
}

impl PlantedColoring {
    pub fn new(class_of: Vec<u8>) -> Result<PlantedColoring> {
        let mut class_sizes = [0; 3];
        for (v, &c) in class_of.iter().enumerate() {
            if c > 2 {
                return Err(Error::InvalidParameter(format!(
                    "vertex {v} has class {c}, expected 0, 1 or 2"
                )));
            }
            class_sizes[c as usize] += 1;
        }
        Ok(PlantedColoring {
            class_of,
            class_sizes,
        })
    }

    pub fn class_of(&self, v: usize) -> usize {
        self.class_of[v] as usize
    }

    pub fn classes(&self) -> &[u8] {
        &self.class_of
    }

    pub fn class_sizes(&self) -> [usize; 3] {
        self.class_sizes
    }

    pub fn num_vertices(&self) -> usize {
        self.class_of.len()
    }

    pub fn members(&self, class: usize) -> Vec<usize> {
        (0..self.class_of.len())
            .filter(|&v| self.class_of[v] as usize == class)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeViolation {
    pub vertex: usize,
    pub other_class: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlantedCheck {
    pub pass: bool,
    pub degree_violations: Vec<DegreeViolation>,
    pub intra_class_edges: Vec<(usize, usize)>,
}

/// Checks that every vertex has exactly `d` neighbors in each other class and
/// none in its own.
pub fn check_planted_regular(graph: &Graph, coloring: &PlantedColoring, d: usize) -> PlantedCheck {
    let mut degree_violations = Vec::new();
    for v in 0..graph.num_vertices() {
        let mut counts = [0usize; 3];
        for &w in graph.neighbors(v) {
            counts[coloring.class_of(w)] += 1;
        }
        let own = coloring.class_of(v);
        for (j, &count) in counts.iter().enumerate() {
            if j != own && count != d {
                degree_violations.push(DegreeViolation {
                    vertex: v,
                    other_class: j,
                    count,
                });
            }
        }
    }
    let intra_class_edges: Vec<_> = graph
        .edges()
        .iter()
        .copied()
        .filter(|&(u, v)| coloring.class_of(u) == coloring.class_of(v))
        .collect();
    PlantedCheck {
        pass: degree_violations.is_empty() && intra_class_edges.is_empty(),
        degree_violations,
        intra_class_edges,
    }
}

/// The octahedron K_{2,2,2} with classes {0,1}, {2,3}, {4,5}.
pub fn octahedron() -> (Graph, PlantedColoring) {
    let class_of = vec![0, 0, 1, 1, 2, 2];
    let edges = (0..6)
        .flat_map(|u| (u + 1..6).map(move |v| (u, v)))
        .filter(|&(u, v)| class_of[u] != class_of[v]);
    let g = Graph::from_edges(6, edges).expect("valid edges");
    (g, PlantedColoring::new(class_of).expect("valid classes"))
}

//! Directed and undirected graphs on `0..n` with the structural operations
//! used by skeleton reconstruction: skeletons, moralization, Markov
//! blankets, and triangle enumeration.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Simple directed graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    /// `(from, to)` pairs.
    edges: BTreeSet<(usize, usize)>,
}

impl DirectedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn with_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::new(n);
        for (from, to) in edges {
            g.add_edge(from, to)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<()> {
        if from >= self.n || to >= self.n {
            return Err(Error::InvalidModel(format!(
                "edge ({from}, {to}) out of range for {} nodes",
                self.n
            )));
        }
        if from == to {
            return Err(Error::InvalidModel(format!("self-loop at node {from}")));
        }
        self.edges.insert((from, to));
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn parents(&self, v: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter(|&&(_, to)| to == v)
            .map(|&(from, _)| from)
            .collect()
    }

    pub fn children(&self, v: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter(|&&(from, _)| from == v)
            .map(|&(_, to)| to)
            .collect()
    }

    /// Unordered pairs connected in both directions.
    pub fn two_cycles(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .filter(|&&(a, b)| a < b && self.has_edge(b, a))
            .map(|&(a, b)| (a, b))
            .collect()
    }

    /// Drops orientation.
    pub fn skeleton(&self) -> UndirectedGraph {
        let mut g = UndirectedGraph::new(self.n);
        for &(a, b) in &self.edges {
            g.add_edge(a, b).expect("validated on insertion");
        }
        g
    }

    /// Skeleton plus an edge between every two nodes sharing a child.
    pub fn moral_graph(&self) -> UndirectedGraph {
        let mut g = self.skeleton();
        for child in 0..self.n {
            let parents: Vec<usize> = self.parents(child).into_iter().collect();
            for (i, &a) in parents.iter().enumerate() {
                for &b in &parents[i + 1..] {
                    g.add_edge(a, b).expect("validated on insertion");
                }
            }
        }
        g
    }

    /// Neighbors in the moral graph: parents, children, and coparents.
    pub fn markov_blanket(&self, v: usize) -> BTreeSet<usize> {
        self.moral_graph().neighbors(v)
    }

    /// Topological order of the nodes, or the node sequence of a directed
    /// cycle if one exists.
    pub fn topological_order(&self) -> std::result::Result<Vec<usize>, Vec<usize>> {
        // Iterative DFS with tri-state marks; a back edge yields the cycle.
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let mut color = vec![WHITE; self.n];
        let mut order = Vec::with_capacity(self.n);
        let mut path: Vec<usize> = Vec::new();
        for root in 0..self.n {
            if color[root] != WHITE {
                continue;
            }
            let mut stack = vec![(root, false)];
            while let Some((v, processed)) = stack.pop() {
                if processed {
                    color[v] = BLACK;
                    path.pop();
                    order.push(v);
                    continue;
                }
                if color[v] == BLACK {
                    continue;
                }
                if color[v] == GRAY {
                    continue;
                }
                color[v] = GRAY;
                path.push(v);
                stack.push((v, true));
                for w in self.children(v) {
                    match color[w] {
                        WHITE => stack.push((w, false)),
                        GRAY => {
                            let start = path.iter().position(|&p| p == w).unwrap_or(0);
                            let mut cycle = path[start..].to_vec();
                            cycle.push(w);
                            return Err(cycle);
                        }
                        _ => {}
                    }
                }
            }
        }
        order.reverse();
        Ok(order)
    }
}

/// Simple undirected graph; edges are stored as sorted pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    /// Pairs `(a, b)` with `a < b`.
    edges: BTreeSet<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn with_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::new(n);
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        if a >= self.n || b >= self.n {
            return Err(Error::InvalidModel(format!(
                "edge ({a}, {b}) out of range for {} nodes",
                self.n
            )));
        }
        if a == b {
            return Err(Error::InvalidModel(format!("self-loop at node {a}")));
        }
        self.edges.insert((a.min(b), a.max(b)));
        Ok(())
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) -> bool {
        self.edges.remove(&(a.min(b), a.max(b)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_set(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Is `other` a subgraph of `self` on the same node set?
    pub fn contains(&self, other: &UndirectedGraph) -> bool {
        self.n == other.n && other.edges.is_subset(&self.edges)
    }

    /// All triangles `(a, b, c)` with `a < b < c`, lexicographically sorted.
    pub fn triangles(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            for c in b + 1..self.n {
                if self.has_edge(a, c) && self.has_edge(b, c) {
                    out.push((a, b, c));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn is_triangle_free(&self) -> bool {
        self.triangles().is_empty()
    }
}

//! Heavy-hex coupling graphs in the row/bridge layout of IBM devices.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::HuboError;

/// Supported lattice layouts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeSize {
    /// 156 qubits: eight rows of 16 joined by seven layers of 4 bridge qubits.
    #[default]
    Heron156,
    /// 127 qubits: rows of 14/15/.../15/14 joined by six bridge layers.
    Eagle127,
}

impl LatticeSize {
    pub fn name(self) -> &'static str {
        match self {
            LatticeSize::Heron156 => "heron-156",
            LatticeSize::Eagle127 => "eagle-127",
        }
    }

    fn layout(self) -> RowLayout {
        match self {
            LatticeSize::Heron156 => RowLayout {
                spans: vec![(0, 15); 8],
                bridge_cols: [vec![3, 7, 11, 15], vec![1, 5, 9, 13]],
            },
            LatticeSize::Eagle127 => {
                let mut spans = vec![(0, 14); 7];
                spans[0] = (0, 13);
                spans[6] = (1, 14);
                RowLayout {
                    spans,
                    bridge_cols: [vec![0, 4, 8, 12], vec![2, 6, 10, 14]],
                }
            }
        }
    }
}

impl fmt::Display for LatticeSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeSize {
    type Err = HuboError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "heron-156" | "heron156" | "156" | "default" => Ok(LatticeSize::Heron156),
            "eagle-127" | "eagle127" | "127" => Ok(LatticeSize::Eagle127),
            other => Err(HuboError::Config(format!(
                "unknown lattice selector '{other}' (expected heron-156 or eagle-127)"
            ))),
        }
    }
}

/// Rows of qubits occupying column spans `(first, last)`; after row `r` a
/// bridge qubit sits under every column in `bridge_cols[r % 2]`.
struct RowLayout {
    spans: Vec<(u32, u32)>,
    bridge_cols: [Vec<u32>; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeavyHexGraph {
    size: LatticeSize,
    n_nodes: usize,
    edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
}

impl HeavyHexGraph {
    pub fn build(size: LatticeSize) -> Self {
        let layout = size.layout();
        let mut edges = Vec::new();
        let mut next = 0u32;
        // row_ids[r][c - first]
        let mut row_ids: Vec<Vec<u32>> = Vec::new();
        let mut bridges: Vec<Vec<(u32, u32)>> = Vec::new();
        for (r, &(first, last)) in layout.spans.iter().enumerate() {
            let ids: Vec<u32> = (first..=last)
                .map(|_| {
                    next += 1;
                    next - 1
                })
                .collect();
            for w in ids.windows(2) {
                edges.push((w[0], w[1]));
            }
            row_ids.push(ids);
            if r + 1 < layout.spans.len() {
                let cols = &layout.bridge_cols[r % 2];
                bridges.push(
                    cols.iter()
                        .map(|&c| {
                            next += 1;
                            (c, next - 1)
                        })
                        .collect(),
                );
            }
        }
        let at = |r: usize, c: u32| -> u32 {
            let (first, _) = layout.spans[r];
            row_ids[r][(c - first) as usize]
        };
        for (r, layer) in bridges.iter().enumerate() {
            for &(c, b) in layer {
                edges.push((at(r, c), b));
                edges.push((b, at(r + 1, c)));
            }
        }
        Self::from_edges(size, next as usize, edges)
    }

    fn from_edges(size: LatticeSize, n_nodes: usize, mut edges: Vec<(u32, u32)>) -> Self {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut adjacency = vec![Vec::new(); n_nodes];
        for &(a, b) in &edges {
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for list in adjacency.iter_mut() {
            list.sort_unstable();
        }
        HeavyHexGraph {
            size,
            n_nodes,
            edges,
            adjacency,
        }
    }

    pub fn size(&self) -> LatticeSize {
        self.size
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&(a, b)).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        if self.n_nodes == 0 {
            return true;
        }
        let mut seen = vec![false; self.n_nodes];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v as usize);
                }
            }
        }
        count == self.n_nodes
    }

    /// Whether the given nodes induce a connected subgraph.
    pub fn induces_connected(&self, nodes: &[u32]) -> bool {
        match nodes.len() {
            0 => false,
            1 => (nodes[0] as usize) < self.n_nodes,
            _ => {
                let mut reached = vec![nodes[0]];
                let mut changed = true;
                while changed {
                    changed = false;
                    for &n in nodes {
                        if !reached.contains(&n) && reached.iter().any(|&r| self.has_edge(r, n)) {
                            reached.push(n);
                            changed = true;
                        }
                    }
                }
                reached.len() == nodes.len()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heron_shape() {
        let g = HeavyHexGraph::build(LatticeSize::Heron156);
        assert_eq!(g.n_nodes(), 156);
        assert_eq!(g.max_degree(), 3);
        assert!(g.is_connected());
        // first bridge joins row 0 column 3 to row 1 column 3
        assert!(g.has_edge(3, 16) && g.has_edge(16, 23));
        assert!(g.has_edge(21, 36) && g.has_edge(36, 41));
    }

    #[test]
    fn eagle_shape() {
        let g = HeavyHexGraph::build(LatticeSize::Eagle127);
        assert_eq!(g.n_nodes(), 127);
        assert_eq!(g.max_degree(), 3);
        assert!(g.is_connected());
        assert!(g.has_edge(0, 14) && g.has_edge(14, 18));
        assert!(g.has_edge(20, 33) && g.has_edge(33, 39));
    }

    #[test]
    fn selectors() {
        assert_eq!("heron-156".parse::<LatticeSize>().unwrap(), LatticeSize::Heron156);
        assert_eq!("default".parse::<LatticeSize>().unwrap(), LatticeSize::Heron156);
        assert_eq!("EAGLE-127".parse::<LatticeSize>().unwrap(), LatticeSize::Eagle127);
        assert!("falcon-27".parse::<LatticeSize>().is_err());
    }

    #[test]
    fn connectivity_of_supports() {
        let g = HeavyHexGraph::build(LatticeSize::Heron156);
        assert!(g.induces_connected(&[0, 1, 2]));
        assert!(g.induces_connected(&[2, 3, 16]));
        assert!(!g.induces_connected(&[0, 2]));
        assert!(!g.induces_connected(&[0, 1, 5]));
    }
}

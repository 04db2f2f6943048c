//! Interaction slices, SWAP layers and swap-layer densification.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::lattice::HeavyHexGraph;
use crate::error::{HuboError, Result};

/// Vertex-disjoint interaction supports (physical node indices) that can be
/// applied in parallel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub supports: Vec<Vec<u32>>,
}

/// A matching on graph edges; each pair exchanges the logical qubits it holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapLayer {
    pub pairs: Vec<(u32, u32)>,
}

/// Which slices are applied in each densification round.
///
/// Round 0 is applied on the identity assignment. Round `k >= 1` is applied
/// after SWAP layer `k - 1`; rounds past the end of `rounds` cycle through
/// `rounds[1..]`, and SWAP layers cycle through `swap_layers`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSchedule {
    pub name: String,
    pub slices: Vec<Slice>,
    pub swap_layers: Vec<SwapLayer>,
    pub rounds: Vec<Vec<usize>>,
    /// Adds a 1-local support on every logical variable.
    pub local_fields: bool,
}

impl SliceSchedule {
    pub fn round(&self, k: usize) -> &[usize] {
        if k == 0 || self.rounds.len() == 1 {
            &self.rounds[0]
        } else {
            &self.rounds[1 + (k - 1) % (self.rounds.len() - 1)]
        }
    }

    pub fn swap_layer(&self, k: usize) -> &SwapLayer {
        &self.swap_layers[k % self.swap_layers.len()]
    }

    /// Checks every structural requirement against `graph`.
    pub fn validate(&self, graph: &HeavyHexGraph) -> Result<()> {
        let bad = |msg: String| Err(HuboError::Config(format!("schedule '{}': {msg}", self.name)));
        if self.rounds.is_empty() {
            return bad("no rounds".into());
        }
        if self.swap_layers.is_empty() {
            return bad("no swap layers".into());
        }
        let n = graph.n_nodes();
        for (si, slice) in self.slices.iter().enumerate() {
            let mut used = vec![false; n];
            for sup in &slice.supports {
                if sup.is_empty() || sup.len() > 3 {
                    return bad(format!("slice {si} has a support of size {}", sup.len()));
                }
                for &v in sup {
                    if v as usize >= n {
                        return bad(format!("slice {si} references node {v} >= {n}"));
                    }
                    if used[v as usize] {
                        return bad(format!("slice {si} is not vertex-disjoint at node {v}"));
                    }
                    used[v as usize] = true;
                }
                if !graph.induces_connected(sup) {
                    return bad(format!("slice {si} support {sup:?} is not connected"));
                }
            }
        }
        for (li, layer) in self.swap_layers.iter().enumerate() {
            let mut used = vec![false; n];
            for &(a, b) in &layer.pairs {
                if !graph.has_edge(a, b) {
                    return bad(format!("swap layer {li} pair ({a}, {b}) is not an edge"));
                }
                for v in [a, b] {
                    if used[v as usize] {
                        return bad(format!("swap layer {li} is not a matching at node {v}"));
                    }
                    used[v as usize] = true;
                }
            }
        }
        for (ri, round) in self.rounds.iter().enumerate() {
            if let Some(&s) = round.iter().find(|&&s| s >= self.slices.len()) {
                return bad(format!("round {ri} references missing slice {s}"));
            }
        }
        Ok(())
    }
}

/// Canonical logical supports (sorted indices, deduplicated, ordered by
/// arity then lexicographically).
pub type SupportSet = BTreeSet<SupportKey>;

/// Ordering key that sorts by arity first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportKey {
    arity: usize,
    vars: Vec<u32>,
}

impl SupportKey {
    pub fn new(mut vars: Vec<u32>) -> Self {
        vars.sort_unstable();
        SupportKey {
            arity: vars.len(),
            vars,
        }
    }

    pub fn vars(&self) -> &[u32] {
        &self.vars
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

/// Runs swap-layer densification: round 0 on the identity assignment, then
/// `n_swap_layers` times apply the next SWAP layer and add the next round's
/// supports mapped through the logical-to-physical assignment.
pub fn densify(graph: &HeavyHexGraph, schedule: &SliceSchedule, n_swap_layers: usize) -> Result<SupportSet> {
    schedule.validate(graph)?;
    let n = graph.n_nodes();
    // logical[p] = logical qubit currently held by physical node p
    let mut logical: Vec<u32> = (0..n as u32).collect();
    let mut supports = SupportSet::new();
    if schedule.local_fields {
        supports.extend((0..n as u32).map(|i| SupportKey::new(vec![i])));
    }
    for k in 0..=n_swap_layers {
        if k > 0 {
            for &(a, b) in &schedule.swap_layer(k - 1).pairs {
                logical.swap(a as usize, b as usize);
            }
        }
        for &s in schedule.round(k) {
            for sup in &schedule.slices[s].supports {
                supports.insert(SupportKey::new(sup.iter().map(|&p| logical[p as usize]).collect()));
            }
        }
    }
    Ok(supports)
}

/// Greedy edge coloring in sorted edge order; each class is a matching.
pub fn edge_coloring(graph: &HeavyHexGraph) -> Vec<Vec<(u32, u32)>> {
    let mut colors_at: Vec<Vec<usize>> = vec![Vec::new(); graph.n_nodes()];
    let mut classes: Vec<Vec<(u32, u32)>> = Vec::new();
    for &(a, b) in graph.edges() {
        let c = (0..)
            .find(|c| !colors_at[a as usize].contains(c) && !colors_at[b as usize].contains(c))
            .unwrap();
        if c == classes.len() {
            classes.push(Vec::new());
        }
        classes[c].push((a, b));
        colors_at[a as usize].push(c);
        colors_at[b as usize].push(c);
    }
    classes
}

/// Which nodes may serve as the middle of a 3-local path support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathCenters {
    DegreeThree,
    Any,
}

/// Length-2 paths `a - c - b`, ordered by center then by endpoint pair.
pub fn length_two_paths(graph: &HeavyHexGraph, centers: PathCenters) -> Vec<Vec<u32>> {
    let mut paths = Vec::new();
    for c in 0..graph.n_nodes() {
        let nb = graph.neighbors(c);
        if centers == PathCenters::DegreeThree && nb.len() != 3 {
            continue;
        }
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                paths.push(vec![nb[i], c as u32, nb[j]]);
            }
        }
    }
    paths
}

/// First-fit partition into vertex-disjoint slices.
pub fn first_fit_slices(supports: Vec<Vec<u32>>, n_nodes: usize) -> Vec<Slice> {
    let mut slices: Vec<(Slice, Vec<bool>)> = Vec::new();
    for sup in supports {
        let slot = slices
            .iter_mut()
            .find(|(_, used)| sup.iter().all(|&v| !used[v as usize]));
        let (slice, used) = match slot {
            Some(s) => s,
            None => {
                slices.push((Slice { supports: Vec::new() }, vec![false; n_nodes]));
                slices.last_mut().unwrap()
            }
        };
        for &v in &sup {
            used[v as usize] = true;
        }
        slice.supports.push(sup);
    }
    slices.into_iter().map(|(s, _)| s).collect()
}

/// Parameters that expand into a [`SliceSchedule`] over a graph.
///
/// Two-local slices are the edge-coloring classes; three-local slices are
/// first-fit partitions of length-2 paths. A round entry `(a, b)` applies
/// `a` coloring classes and `b` path slices, each taken cyclically starting
/// where the previous round of that kind stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleRecipe {
    pub path_centers: PathCenters,
    pub local_fields: bool,
    pub rounds: Vec<(usize, usize)>,
    /// Coloring class used by each SWAP layer, cycled.
    pub swap_classes: Vec<usize>,
}

impl ScheduleRecipe {
    pub fn build(&self, graph: &HeavyHexGraph, name: &str) -> Result<SliceSchedule> {
        let colors = edge_coloring(graph);
        let paths = first_fit_slices(length_two_paths(graph, self.path_centers), graph.n_nodes());
        let mut slices: Vec<Slice> = colors
            .iter()
            .map(|class| Slice {
                supports: class.iter().map(|&(a, b)| vec![a, b]).collect(),
            })
            .collect();
        let path_base = slices.len();
        slices.extend(paths.iter().cloned());
        let mut next_color = 0;
        let mut next_path = 0;
        let mut rounds = Vec::with_capacity(self.rounds.len());
        for &(n2, n3) in &self.rounds {
            if n2 > colors.len() || n3 > paths.len() {
                return Err(HuboError::Config(format!(
                    "round ({n2}, {n3}) exceeds {} coloring classes / {} path slices",
                    colors.len(),
                    paths.len()
                )));
            }
            let mut round = Vec::with_capacity(n2 + n3);
            for _ in 0..n2 {
                round.push(next_color % colors.len());
                next_color += 1;
            }
            for _ in 0..n3 {
                round.push(path_base + next_path % paths.len());
                next_path += 1;
            }
            rounds.push(round);
        }
        let swap_layers = self
            .swap_classes
            .iter()
            .map(|&c| {
                colors
                    .get(c)
                    .map(|class| SwapLayer { pairs: class.clone() })
                    .ok_or_else(|| HuboError::Config(format!("swap class {c} out of {} classes", colors.len())))
            })
            .collect::<Result<Vec<_>>>()?;
        let schedule = SliceSchedule {
            name: name.to_string(),
            slices,
            swap_layers,
            rounds,
            local_fields: self.local_fields,
        };
        schedule.validate(graph)?;
        Ok(schedule)
    }
}

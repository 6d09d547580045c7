// SPDX-License-Identifier: Apache-2.0

//! Netlists as undirected featured graphs.
//!
//! Feature row layout (F = 16): columns 0..12 are a one-hot gate-kind code
//! placed according to a [`FeatureMap`], then `is_primary_input`,
//! `is_key_input`, `is_output`, and the assigned key-bit value (+1 for 1,
//! -1 for 0, 0 when no key hypothesis is attached).

use std::collections::VecDeque;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lock::Scheme;
use crate::netlist::{GateKind, Key, Netlist, NodeId};

pub const NUM_KINDS: usize = 12;
pub const FEATURES: usize = 16;
pub const COL_PRIMARY: usize = 12;
pub const COL_KEY: usize = 13;
pub const COL_OUTPUT: usize = 14;
pub const COL_KEY_VALUE: usize = 15;
pub const DEFAULT_HOPS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("feature map has no column for {0:?}")]
    UnmappedKind(KindClass),
    #[error("feature map assignment is not injective")]
    NotInjective,
    #[error("node `{0}` does not consume a key input")]
    NotKeyGate(String),
    #[error("hops must be at least 1")]
    ZeroHops,
    #[error("key has {got} bits but the netlist has {expected} key inputs")]
    KeyWidth { expected: usize, got: usize },
}

/// Gate-kind vocabulary of the one-hot block. `OutputTap` is reserved for
/// netlist formats with explicit output nodes; BENCH outputs are flagged
/// through the `is_output` column instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KindClass {
    Input,
    OutputTap,
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    Mux2,
    Lut,
}

impl KindClass {
    pub const ALL: [KindClass; NUM_KINDS] = [
        KindClass::Input,
        KindClass::OutputTap,
        KindClass::And,
        KindClass::Nand,
        KindClass::Or,
        KindClass::Nor,
        KindClass::Xor,
        KindClass::Xnor,
        KindClass::Not,
        KindClass::Buf,
        KindClass::Mux2,
        KindClass::Lut,
    ];

    pub fn of(kind: GateKind) -> KindClass {
        match kind {
            GateKind::Input => KindClass::Input,
            GateKind::And => KindClass::And,
            GateKind::Nand => KindClass::Nand,
            GateKind::Or => KindClass::Or,
            GateKind::Nor => KindClass::Nor,
            GateKind::Xor => KindClass::Xor,
            GateKind::Xnor => KindClass::Xnor,
            GateKind::Not => KindClass::Not,
            GateKind::Buf => KindClass::Buf,
            GateKind::Mux2 => KindClass::Mux2,
            GateKind::Lut { .. } => KindClass::Lut,
        }
    }

    fn index(self) -> usize {
        KindClass::ALL.iter().position(|&k| k == self).unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "seed")]
pub enum FeaturePolicy {
    /// Kinds in order of first appearance over the corpus.
    Default,
    Random(u64),
    /// Most frequent kind gets column 0.
    ByGateCountDesc,
}

/// Gate-kind to one-hot column assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMap {
    columns: Vec<Option<usize>>,
    pub policy: FeaturePolicy,
}

impl Default for FeatureMap {
    fn default() -> Self {
        FeatureMap { columns: (0..NUM_KINDS).map(Some).collect(), policy: FeaturePolicy::Default }
    }
}

impl FeatureMap {
    /// Builds a map from the kinds seen in `corpus`. Kinds never seen are
    /// appended in vocabulary order.
    pub fn build(policy: FeaturePolicy, corpus: &[&Netlist]) -> FeatureMap {
        let mut order: Vec<KindClass> = match policy {
            FeaturePolicy::Default => {
                let mut seen = Vec::new();
                for nl in corpus {
                    for n in nl.nodes() {
                        let c = KindClass::of(n.kind);
                        if !seen.contains(&c) {
                            seen.push(c);
                        }
                    }
                }
                seen
            }
            FeaturePolicy::Random(seed) => {
                let mut all = KindClass::ALL.to_vec();
                all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                all
            }
            FeaturePolicy::ByGateCountDesc => {
                let mut counts = [0usize; NUM_KINDS];
                for nl in corpus {
                    for n in nl.nodes() {
                        counts[KindClass::of(n.kind).index()] += 1;
                    }
                }
                let mut all = KindClass::ALL.to_vec();
                all.sort_by_key(|k| std::cmp::Reverse(counts[k.index()]));
                all
            }
        };
        for k in KindClass::ALL {
            if !order.contains(&k) {
                order.push(k);
            }
        }
        let mut columns = vec![None; NUM_KINDS];
        for (col, k) in order.into_iter().enumerate() {
            columns[k.index()] = Some(col);
        }
        FeatureMap { columns, policy }
    }

    /// An explicit, possibly partial assignment.
    pub fn from_assignment(pairs: &[(KindClass, usize)]) -> Result<FeatureMap, GraphError> {
        let mut columns = vec![None; NUM_KINDS];
        let mut used = [false; NUM_KINDS];
        for &(k, col) in pairs {
            if col >= NUM_KINDS || used[col] || columns[k.index()].is_some() {
                return Err(GraphError::NotInjective);
            }
            used[col] = true;
            columns[k.index()] = Some(col);
        }
        Ok(FeatureMap { columns, policy: FeaturePolicy::Default })
    }

    pub fn column(&self, kind: KindClass) -> Result<usize, GraphError> {
        self.columns[kind.index()].ok_or(GraphError::UnmappedKind(kind))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphLabels {
    pub scheme: Option<Scheme>,
    pub er: Option<f64>,
    pub key_bits: Option<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitGraph {
    pub features: Array2<f64>,
    /// Undirected edges `(a, b)` with `a < b`, sorted, without duplicates.
    pub edges: Vec<(usize, usize)>,
    pub node_ids: Vec<String>,
    pub center: Option<usize>,
    pub labels: GraphLabels,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    rows: usize,
    cols: usize,
    features: Vec<f64>,
    edges: Vec<(usize, usize)>,
    node_ids: Vec<String>,
    center: Option<usize>,
    labels: GraphLabels,
}

impl CircuitGraph {
    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn with_key_bit(mut self, bit: bool) -> Self {
        self.labels.key_bits = Some(vec![bit]);
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        let g = GraphJson {
            rows: self.features.nrows(),
            cols: self.features.ncols(),
            features: self.features.iter().copied().collect(),
            edges: self.edges.clone(),
            node_ids: self.node_ids.clone(),
            center: self.center,
            labels: self.labels.clone(),
        };
        serde_json::to_value(g).expect("graph serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<CircuitGraph, serde_json::Error> {
        let g: GraphJson = serde_json::from_value(v.clone())?;
        let features = Array2::from_shape_vec((g.rows, g.cols), g.features)
            .map_err(|e| serde::de::Error::custom(e.to_string()))?;
        Ok(CircuitGraph { features, edges: g.edges, node_ids: g.node_ids, center: g.center, labels: g.labels })
    }
}

fn undirected_edges(nl: &Netlist, keep: &[Option<usize>]) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (v, node) in nl.nodes().iter().enumerate() {
        let Some(b) = keep[v] else { continue };
        for &f in &node.fanin {
            if let Some(a) = keep[f] {
                if a != b {
                    edges.push((a.min(b), a.max(b)));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

fn feature_rows(
    nl: &Netlist,
    nodes: &[NodeId],
    fmap: &FeatureMap,
    key: Option<&Key>,
) -> Result<Array2<f64>, GraphError> {
    if let Some(k) = key {
        if k.width() != nl.p() {
            return Err(GraphError::KeyWidth { expected: nl.p(), got: k.width() });
        }
    }
    let mut x = Array2::zeros((nodes.len(), FEATURES));
    for (row, &v) in nodes.iter().enumerate() {
        let node = nl.node(v);
        x[[row, fmap.column(KindClass::of(node.kind))?]] = 1.0;
        let key_index = nl.key_index(v);
        if node.kind == GateKind::Input && key_index.is_none() {
            x[[row, COL_PRIMARY]] = 1.0;
        }
        if let Some(i) = key_index {
            x[[row, COL_KEY]] = 1.0;
            if let Some(k) = key {
                x[[row, COL_KEY_VALUE]] = if k.bits[i] { 1.0 } else { -1.0 };
            }
        }
        if nl.outputs().contains(&v) {
            x[[row, COL_OUTPUT]] = 1.0;
        }
    }
    Ok(x)
}

/// Whole-netlist graph. With a key, key-input rows carry the hypothesized bit.
pub fn to_graph(nl: &Netlist, fmap: &FeatureMap, key: Option<&Key>) -> Result<CircuitGraph, GraphError> {
    let all: Vec<NodeId> = (0..nl.len()).collect();
    let keep: Vec<Option<usize>> = all.iter().map(|&v| Some(v)).collect();
    Ok(CircuitGraph {
        features: feature_rows(nl, &all, fmap, key)?,
        edges: undirected_edges(nl, &keep),
        node_ids: nl.nodes().iter().map(|n| n.id.clone()).collect(),
        center: None,
        labels: GraphLabels::default(),
    })
}

/// Nodes within `hops` undirected steps of `start`, in node order.
pub fn neighborhood(nl: &Netlist, start: NodeId, hops: usize) -> Vec<NodeId> {
    let fanouts = nl.fanouts();
    let mut dist = vec![usize::MAX; nl.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        if dist[v] == hops {
            continue;
        }
        for &u in nl.node(v).fanin.iter().chain(&fanouts[v]) {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    (0..nl.len()).filter(|&v| dist[v] != usize::MAX).collect()
}

/// Induced subgraph around a key gate, centered on it. The key-value column
/// is left unassigned so the structure alone must carry the key bit.
pub fn extract_subgraph(
    nl: &Netlist,
    key_gate: NodeId,
    hops: usize,
    fmap: &FeatureMap,
) -> Result<CircuitGraph, GraphError> {
    if hops == 0 {
        return Err(GraphError::ZeroHops);
    }
    if !nl.node(key_gate).fanin.iter().any(|&f| nl.is_key_input(f)) {
        return Err(GraphError::NotKeyGate(nl.node(key_gate).id.clone()));
    }
    let nodes = neighborhood(nl, key_gate, hops);
    let mut keep = vec![None; nl.len()];
    for (i, &v) in nodes.iter().enumerate() {
        keep[v] = Some(i);
    }
    Ok(CircuitGraph {
        features: feature_rows(nl, &nodes, fmap, None)?,
        edges: undirected_edges(nl, &keep),
        node_ids: nodes.iter().map(|&v| nl.node(v).id.clone()).collect(),
        center: keep[key_gate],
        labels: GraphLabels::default(),
    })
}

/// Subgraph around the key gate of key bit `index`, labeled with that bit
/// of `key` when given.
pub fn key_bit_subgraph(
    nl: &Netlist,
    index: usize,
    hops: usize,
    fmap: &FeatureMap,
    key: Option<&Key>,
) -> Result<CircuitGraph, GraphError> {
    let gate = nl.key_gate(index).ok_or_else(|| GraphError::NotKeyGate(format!("keyinput{index}")))?;
    let g = extract_subgraph(nl, gate, hops, fmap)?;
    Ok(match key {
        Some(k) => g.with_key_bit(k.bits[index]),
        None => g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lock::lock_xor;
    use crate::netlist::{parse_bench, NetlistEditor};

    /// Canonical form oracle: sorted multiset of (own row, sorted neighbour
    /// rows), invariant under node permutation.
    fn canonical(g: &CircuitGraph) -> Vec<(Vec<i64>, Vec<Vec<i64>>)> {
        let row = |i: usize| g.features.row(i).iter().map(|&x| x as i64).collect::<Vec<_>>();
        let mut adj = vec![Vec::new(); g.num_nodes()];
        for &(a, b) in &g.edges {
            adj[a].push(row(b));
            adj[b].push(row(a));
        }
        let mut out: Vec<_> = (0..g.num_nodes())
            .map(|i| {
                let mut n = adj[i].clone();
                n.sort();
                (row(i), n)
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn three_node_and() {
        let nl = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)").unwrap();
        let g = to_graph(&nl, &FeatureMap::default(), None).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.edges, vec![(0, 2), (1, 2)]);
        let y = nl.find("y").unwrap();
        assert_eq!(g.features[[y, KindClass::And.index()]], 1.0);
        assert_eq!(g.features[[y, COL_OUTPUT]], 1.0);
        assert_eq!(g.features[[0, KindClass::Input.index()]], 1.0);
        assert_eq!(g.features[[0, COL_PRIMARY]], 1.0);
        for i in 0..3 {
            assert_eq!(g.features.row(i).iter().take(NUM_KINDS).sum::<f64>(), 1.0);
        }
    }

    /// Reversing every edge yields the same undirected graph.
    #[test]
    fn direction_is_erased() {
        let nl = fixtures::c17();
        let g = to_graph(&nl, &FeatureMap::default(), None).unwrap();
        let mut reversed: Vec<(usize, usize)> = Vec::new();
        for (v, n) in nl.nodes().iter().enumerate() {
            for &f in &n.fanin {
                reversed.push((v.min(f), v.max(f)));
            }
        }
        reversed.sort_unstable();
        reversed.dedup();
        assert_eq!(g.edges, reversed);
    }

    #[test]
    fn permutation_gives_isomorphic_graph() {
        let nl = fixtures::synthetic(&fixtures::SynthParams { seed: 6, ..Default::default() });
        // Same netlist, nodes renamed so that the topological tie-break differs.
        let mut e = NetlistEditor::new("renamed");
        let mut map = vec![0; nl.len()];
        for (v, n) in nl.nodes().iter().enumerate() {
            let id = format!("z{}", nl.len() - v);
            map[v] = if n.kind == GateKind::Input {
                e.add_input(id).unwrap()
            } else {
                e.add_gate(id, n.kind, n.fanin.iter().map(|&f| map[f]).collect()).unwrap()
            };
        }
        for &o in nl.outputs() {
            e.add_output(map[o]);
        }
        let renamed = e.build().unwrap();
        let fm = FeatureMap::default();
        let a = to_graph(&nl, &fm, None).unwrap();
        let b = to_graph(&renamed, &fm, None).unwrap();
        assert_ne!(a.node_ids, b.node_ids);
        assert_eq!(canonical(&a), canonical(&b));
    }

    #[test]
    fn key_values_attach_to_key_inputs() {
        let lc = lock_xor(&fixtures::c17(), 3, 1).unwrap();
        let key: Key = "101".parse().unwrap();
        let g = to_graph(&lc.netlist, &FeatureMap::default(), Some(&key)).unwrap();
        for (i, &k) in lc.netlist.key_inputs().iter().enumerate() {
            assert_eq!(g.features[[k, COL_KEY]], 1.0);
            assert_eq!(g.features[[k, COL_KEY_VALUE]], if key.bits[i] { 1.0 } else { -1.0 });
        }
        let bare = to_graph(&lc.netlist, &FeatureMap::default(), None).unwrap();
        assert!(bare.features.column(COL_KEY_VALUE).iter().all(|&x| x == 0.0));
        assert!(matches!(
            to_graph(&lc.netlist, &FeatureMap::default(), Some(&Key::zeros(2))),
            Err(GraphError::KeyWidth { .. })
        ));
    }

    #[test]
    fn one_hop_around_xor_key_gate() {
        let nl = parse_bench(
            "INPUT(a)\nINPUT(b)\nINPUT(keyinput0)\nOUTPUT(y)\nt = NAND(a, b)\nk = XOR(t, keyinput0)\ny = NOT(k)\nz = AND(k, a)\nOUTPUT(z)",
        )
        .unwrap();
        let g = extract_subgraph(&nl, nl.find("k").unwrap(), 1, &FeatureMap::default()).unwrap();
        let mut ids = g.node_ids.clone();
        ids.sort();
        assert_eq!(ids, ["k", "keyinput0", "t", "y", "z"]);
        assert_eq!(g.node_ids[g.center.unwrap()], "k");
        assert!(matches!(
            extract_subgraph(&nl, nl.find("t").unwrap(), 1, &FeatureMap::default()),
            Err(GraphError::NotKeyGate(_))
        ));
    }

    #[test]
    fn large_hops_cover_component_and_grow_monotonically() {
        let lc = lock_xor(&fixtures::synthetic(&fixtures::SynthParams { seed: 2, ..Default::default() }), 4, 0).unwrap();
        let nl = &lc.netlist;
        let gate = nl.key_gate(0).unwrap();
        let fm = FeatureMap::default();
        let mut prev: Vec<String> = Vec::new();
        for h in 1..6 {
            let ids = extract_subgraph(nl, gate, h, &fm).unwrap().node_ids;
            assert!(prev.iter().all(|p| ids.contains(p)));
            // Oracle: independent BFS count over an explicit adjacency list.
            let mut adj = vec![Vec::new(); nl.len()];
            for (v, n) in nl.nodes().iter().enumerate() {
                for &f in &n.fanin {
                    adj[v].push(f);
                    adj[f].push(v);
                }
            }
            let mut frontier = vec![gate];
            let mut seen = std::collections::HashSet::from([gate]);
            for _ in 0..h {
                let mut next = Vec::new();
                for v in frontier {
                    for &u in &adj[v] {
                        if seen.insert(u) {
                            next.push(u);
                        }
                    }
                }
                frontier = next;
            }
            assert_eq!(ids.len(), seen.len());
            prev = ids;
        }
        let whole = extract_subgraph(nl, gate, 1000, &fm).unwrap();
        let reachable = neighborhood(nl, gate, usize::MAX);
        assert_eq!(whole.num_nodes(), reachable.len());
    }

    #[test]
    fn feature_map_policies() {
        let nl = fixtures::c17();
        let by_count = FeatureMap::build(FeaturePolicy::ByGateCountDesc, &[&nl]);
        assert_eq!(by_count.column(KindClass::Nand).unwrap(), 0);
        assert_eq!(by_count.column(KindClass::Input).unwrap(), 1);
        let first = FeatureMap::build(FeaturePolicy::Default, &[&nl]);
        assert_eq!(first.column(KindClass::Input).unwrap(), 0);
        assert_eq!(first.column(KindClass::Nand).unwrap(), 1);
        let r = FeatureMap::build(FeaturePolicy::Random(3), &[]);
        let mut cols: Vec<usize> = KindClass::ALL.iter().map(|&k| r.column(k).unwrap()).collect();
        cols.sort_unstable();
        assert_eq!(cols, (0..NUM_KINDS).collect::<Vec<_>>());
        let partial = FeatureMap::from_assignment(&[(KindClass::Input, 0), (KindClass::And, 1)]).unwrap();
        let or = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = OR(a, b)").unwrap();
        assert_eq!(to_graph(&or, &partial, None).unwrap_err(), GraphError::UnmappedKind(KindClass::Or));
        assert_eq!(
            FeatureMap::from_assignment(&[(KindClass::Input, 0), (KindClass::And, 0)]).unwrap_err(),
            GraphError::NotInjective
        );
    }

    #[test]
    fn json_round_trip() {
        let lc = lock_xor(&fixtures::c17(), 2, 0).unwrap();
        let g = key_bit_subgraph(&lc.netlist, 1, 2, &FeatureMap::default(), Some(&lc.correct_key)).unwrap();
        assert_eq!(CircuitGraph::from_json(&g.to_json()).unwrap(), g);
    }
}

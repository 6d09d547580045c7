// SPDX-License-Identifier: Apache-2.0

//! Combinational gate-level netlists.
//!
//! A [`Netlist`] is immutable once built: nodes are stored in a deterministic
//! topological order (Kahn's algorithm, ties broken by node id) and every
//! structural invariant has been checked. Transformations go through a
//! [`NetlistEditor`], which is rebuilt and revalidated by
//! [`NetlistEditor::build`].

mod bench;
mod key;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{parse_bench, parse_bench_with, serialize_bench, ParseOptions, DEFAULT_KEY_PREFIX};
pub use key::{Key, KeyError};

/// Index of a node inside its netlist.
pub type NodeId = usize;

/// Gate vocabulary.
///
/// `Mux2` takes `[select, when_low, when_high]`. A `Lut` stores its truth table
/// in the low `2^k` bits of `table`; line `t` is selected by the fan-in values
/// read as a binary number with `fanin[0]` as the most significant bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Input,
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    Mux2,
    Lut { k: u8, table: u64 },
}

pub const MAX_LUT_INPUTS: u8 = 6;

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Input => "INPUT",
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUFF",
            GateKind::Mux2 => "MUX",
            GateKind::Lut { .. } => "LUT",
        }
    }

    /// Whether `n` fan-ins are legal for this kind.
    pub fn accepts_arity(&self, n: usize) -> bool {
        match self {
            GateKind::Input => n == 0,
            GateKind::Not | GateKind::Buf => n == 1,
            GateKind::Mux2 => n == 3,
            GateKind::Lut { k, .. } => n == *k as usize,
            _ => n >= 2,
        }
    }

    pub fn is_xor_family(&self) -> bool {
        matches!(self, GateKind::Xor | GateKind::Xnor)
    }

    /// Output-inverted counterpart for the kinds that have one.
    pub fn complement(&self) -> Option<GateKind> {
        Some(match self {
            GateKind::And => GateKind::Nand,
            GateKind::Nand => GateKind::And,
            GateKind::Or => GateKind::Nor,
            GateKind::Nor => GateKind::Or,
            GateKind::Xor => GateKind::Xnor,
            GateKind::Xnor => GateKind::Xor,
            GateKind::Not => GateKind::Buf,
            GateKind::Buf => GateKind::Not,
            GateKind::Lut { k, table } => {
                let mask = if *k >= 6 { u64::MAX } else { (1u64 << (1u32 << k)) - 1 };
                GateKind::Lut { k: *k, table: !table & mask }
            }
            GateKind::Input | GateKind::Mux2 => return None,
        })
    }

    /// Word-parallel evaluation: each bit lane of the operands is one pattern.
    pub fn eval_word(&self, ins: &[u64]) -> u64 {
        match self {
            GateKind::Input => unreachable!("inputs are assigned, not evaluated"),
            GateKind::And => ins.iter().fold(!0, |a, b| a & b),
            GateKind::Nand => !ins.iter().fold(!0, |a, b| a & b),
            GateKind::Or => ins.iter().fold(0, |a, b| a | b),
            GateKind::Nor => !ins.iter().fold(0, |a, b| a | b),
            GateKind::Xor => ins.iter().fold(0, |a, b| a ^ b),
            GateKind::Xnor => !ins.iter().fold(0, |a, b| a ^ b),
            GateKind::Not => !ins[0],
            GateKind::Buf => ins[0],
            GateKind::Mux2 => (!ins[0] & ins[1]) | (ins[0] & ins[2]),
            GateKind::Lut { k, table } => {
                let k = *k as usize;
                let mut out = 0u64;
                for line in 0..(1usize << k) {
                    if table >> line & 1 == 0 {
                        continue;
                    }
                    let mut sel = !0u64;
                    for (j, w) in ins.iter().enumerate() {
                        let bit = line >> (k - 1 - j) & 1;
                        sel &= if bit == 1 { *w } else { !*w };
                    }
                    out |= sel;
                }
                out
            }
        }
    }

    pub fn eval_bits(&self, ins: &[bool]) -> bool {
        let words: Vec<u64> = ins.iter().map(|&b| if b { !0 } else { 0 }).collect();
        self.eval_word(&words) & 1 == 1
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::Lut { k, table } => write!(f, "LUT{k}(0x{table:x})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub kind: GateKind,
    pub fanin: Vec<NodeId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undefined signal `{0}`")]
    Undefined(String),
    #[error("combinational cycle through `{0}`")]
    Cycle(String),
    #[error("duplicate definition of `{0}`")]
    Duplicate(String),
    #[error("gate `{id}` of kind {kind} cannot take {got} inputs")]
    Arity { id: String, kind: GateKind, got: usize },
    #[error("`{0}` is listed both as a key input and a primary input")]
    KeyIsPrimary(String),
    #[error("fan-in index {0} out of range")]
    DanglingIndex(NodeId),
}

/// A validated combinational netlist.
#[derive(Clone, Debug)]
pub struct Netlist {
    name: String,
    nodes: Vec<Node>,
    primary_inputs: Vec<NodeId>,
    key_inputs: Vec<NodeId>,
    outputs: Vec<NodeId>,
    index: HashMap<String, NodeId>,
}

impl PartialEq for Netlist {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.primary_inputs == other.primary_inputs
            && self.key_inputs == other.key_inputs
            && self.outputs == other.outputs
    }
}

impl Netlist {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn primary_inputs(&self) -> &[NodeId] {
        &self.primary_inputs
    }

    pub fn key_inputs(&self) -> &[NodeId] {
        &self.key_inputs
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    /// Number of primary inputs.
    pub fn n(&self) -> usize {
        self.primary_inputs.len()
    }

    /// Number of outputs.
    pub fn m(&self) -> usize {
        self.outputs.len()
    }

    /// Number of key inputs.
    pub fn p(&self) -> usize {
        self.key_inputs.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn find(&self, id: &str) -> Option<NodeId> {
        self.index.get(id).copied()
    }

    pub fn gate_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind != GateKind::Input).count()
    }

    pub fn is_key_input(&self, id: NodeId) -> bool {
        self.key_inputs.contains(&id)
    }

    /// Fan-out lists, each sorted ascending and free of duplicates.
    pub fn fanouts(&self) -> Vec<Vec<NodeId>> {
        fanouts_of(&self.nodes)
    }

    /// Position of `id` in the key-input list.
    pub fn key_index(&self, id: NodeId) -> Option<usize> {
        self.key_inputs.iter().position(|&k| k == id)
    }

    /// Gates that read key input number `index`.
    pub fn key_consumers(&self, index: usize) -> Vec<NodeId> {
        let key = self.key_inputs[index];
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.fanin.contains(&key))
            .map(|(i, _)| i)
            .collect()
    }

    /// The gate treated as the key gate of key bit `index`.
    ///
    /// When a key input feeds several gates, XOR-family consumers are
    /// preferred, then multi-input gates, then inverters and buffers; ties go
    /// to the smaller node id.
    pub fn key_gate(&self, index: usize) -> Option<NodeId> {
        let rank = |kind: GateKind| match kind {
            GateKind::Xor | GateKind::Xnor => 0,
            GateKind::Not | GateKind::Buf => 2,
            _ => 1,
        };
        self.key_consumers(index)
            .into_iter()
            .min_by(|&a, &b| {
                let (na, nb) = (&self.nodes[a], &self.nodes[b]);
                rank(na.kind).cmp(&rank(nb.kind)).then_with(|| na.id.cmp(&nb.id))
            })
    }

    /// Key-bit to key-gate map derived with [`Netlist::key_gate`].
    pub fn key_provenance(&self) -> std::collections::BTreeMap<usize, String> {
        (0..self.p())
            .filter_map(|i| self.key_gate(i).map(|g| (i, self.nodes[g].id.clone())))
            .collect()
    }

    /// Deterministic topological order; for a built netlist this is `0..len`.
    pub fn topological_order(&self) -> Vec<NodeId> {
        topological_order(&self.nodes).expect("netlist invariant: acyclic")
    }

    pub fn edit(&self) -> NetlistEditor {
        NetlistEditor {
            name: self.name.clone(),
            nodes: self.nodes.clone(),
            primary_inputs: self.primary_inputs.clone(),
            key_inputs: self.key_inputs.clone(),
            outputs: self.outputs.clone(),
            index: self.index.clone(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

fn fanouts_of(nodes: &[Node]) -> Vec<Vec<NodeId>> {
    let mut out = vec![Vec::new(); nodes.len()];
    for (i, n) in nodes.iter().enumerate() {
        for &f in &n.fanin {
            if out[f].last() != Some(&i) {
                out[f].push(i);
            }
        }
    }
    out
}

/// Kahn's algorithm with a min-heap on node ids. Returns the offending node
/// on a cycle.
pub fn topological_order(nodes: &[Node]) -> Result<Vec<NodeId>, NodeId> {
    let fanouts = fanouts_of(nodes);
    let mut pending: Vec<usize> = nodes.iter().map(|n| n.fanin.len()).collect();
    let mut ready: BinaryHeap<Reverse<(&str, NodeId)>> = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.fanin.is_empty())
        .map(|(i, n)| Reverse((n.id.as_str(), i)))
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(Reverse((_, i))) = ready.pop() {
        order.push(i);
        for &succ in &fanouts[i] {
            // A node may list the same fan-in twice.
            let hits = nodes[succ].fanin.iter().filter(|&&f| f == i).count();
            pending[succ] -= hits;
            if pending[succ] == 0 {
                ready.push(Reverse((nodes[succ].id.as_str(), succ)));
            }
        }
    }
    if order.len() == nodes.len() {
        Ok(order)
    } else {
        Err((0..nodes.len()).find(|&i| pending[i] > 0).unwrap_or(0))
    }
}

/// Mutable working copy of a netlist.
///
/// Node indices stay stable while editing; [`NetlistEditor::build`] reorders
/// and revalidates.
#[derive(Clone, Debug)]
pub struct NetlistEditor {
    pub name: String,
    nodes: Vec<Node>,
    primary_inputs: Vec<NodeId>,
    key_inputs: Vec<NodeId>,
    outputs: Vec<NodeId>,
    index: HashMap<String, NodeId>,
}

impl NetlistEditor {
    pub fn new(name: impl Into<String>) -> Self {
        NetlistEditor {
            name: name.into(),
            nodes: Vec::new(),
            primary_inputs: Vec::new(),
            key_inputs: Vec::new(),
            outputs: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn primary_inputs(&self) -> &[NodeId] {
        &self.primary_inputs
    }

    pub fn key_inputs(&self) -> &[NodeId] {
        &self.key_inputs
    }

    pub fn find(&self, id: &str) -> Option<NodeId> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn fanouts(&self) -> Vec<Vec<NodeId>> {
        fanouts_of(&self.nodes)
    }

    /// `base` if unused, otherwise `base_1`, `base_2`, ...
    pub fn fresh_id(&self, base: &str) -> String {
        if !self.contains(base) {
            return base.to_string();
        }
        (1..)
            .map(|i| format!("{base}_{i}"))
            .find(|c| !self.contains(c))
            .unwrap()
    }

    fn push(&mut self, id: String, kind: GateKind, fanin: Vec<NodeId>) -> Result<NodeId, NetlistError> {
        if self.index.contains_key(&id) {
            return Err(NetlistError::Duplicate(id));
        }
        let at = self.nodes.len();
        self.index.insert(id.clone(), at);
        self.nodes.push(Node { id, kind, fanin });
        Ok(at)
    }

    pub fn add_input(&mut self, id: impl Into<String>) -> Result<NodeId, NetlistError> {
        let at = self.push(id.into(), GateKind::Input, Vec::new())?;
        self.primary_inputs.push(at);
        Ok(at)
    }

    /// Appends a key input; it becomes the last key bit.
    pub fn add_key_input(&mut self, id: impl Into<String>) -> Result<NodeId, NetlistError> {
        let at = self.push(id.into(), GateKind::Input, Vec::new())?;
        self.key_inputs.push(at);
        Ok(at)
    }

    pub fn add_gate(&mut self, id: impl Into<String>, kind: GateKind, fanin: Vec<NodeId>) -> Result<NodeId, NetlistError> {
        let id = id.into();
        if let Some(&bad) = fanin.iter().find(|&&f| f >= self.nodes.len()) {
            return Err(NetlistError::DanglingIndex(bad));
        }
        if !kind.accepts_arity(fanin.len()) || kind == GateKind::Input {
            return Err(NetlistError::Arity { id, kind, got: fanin.len() });
        }
        self.push(id, kind, fanin)
    }

    /// Adds a gate under a fresh id derived from `base`.
    pub fn add_fresh(&mut self, base: &str, kind: GateKind, fanin: Vec<NodeId>) -> NodeId {
        let id = self.fresh_id(base);
        self.add_gate(id, kind, fanin).expect("fresh gate with valid fan-in")
    }

    pub fn add_output(&mut self, node: NodeId) {
        self.outputs.push(node);
    }

    pub fn set_output(&mut self, slot: usize, node: NodeId) {
        self.outputs[slot] = node;
    }

    pub fn set_kind(&mut self, node: NodeId, kind: GateKind) {
        self.nodes[node].kind = kind;
    }

    pub fn set_fanin(&mut self, node: NodeId, fanin: Vec<NodeId>) {
        self.nodes[node].fanin = fanin;
    }

    /// Replaces every use of `from` by `to`, in fan-ins and the output list,
    /// except inside the nodes listed in `keep`.
    pub fn redirect(&mut self, from: NodeId, to: NodeId, keep: &[NodeId]) {
        for (i, n) in self.nodes.iter_mut().enumerate() {
            if keep.contains(&i) {
                continue;
            }
            for f in n.fanin.iter_mut() {
                if *f == from {
                    *f = to;
                }
            }
        }
        for o in self.outputs.iter_mut() {
            if *o == from {
                *o = to;
            }
        }
    }

    /// Nodes reachable from `start` along fan-out edges, `start` included.
    pub fn transitive_fanout(&self, start: NodeId) -> Vec<bool> {
        let fanouts = self.fanouts();
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &s in &fanouts[v] {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        seen
    }

    /// Drops gates that drive nothing and are not outputs, repeatedly.
    pub fn sweep(&mut self) {
        loop {
            let fanouts = self.fanouts();
            let dead: Vec<NodeId> = (0..self.nodes.len())
                .filter(|&i| {
                    self.nodes[i].kind != GateKind::Input && fanouts[i].is_empty() && !self.outputs.contains(&i)
                })
                .collect();
            if dead.is_empty() {
                return;
            }
            let mut remap = vec![usize::MAX; self.nodes.len()];
            let mut kept = Vec::with_capacity(self.nodes.len() - dead.len());
            for (i, n) in std::mem::take(&mut self.nodes).into_iter().enumerate() {
                if dead.binary_search(&i).is_err() {
                    remap[i] = kept.len();
                    kept.push(n);
                }
            }
            for n in kept.iter_mut() {
                for f in n.fanin.iter_mut() {
                    *f = remap[*f];
                }
            }
            self.nodes = kept;
            for list in [&mut self.primary_inputs, &mut self.key_inputs, &mut self.outputs] {
                for x in list.iter_mut() {
                    *x = remap[*x];
                }
            }
            self.index = self.nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        }
    }

    /// Validates all invariants and returns a topologically ordered netlist.
    pub fn build(self) -> Result<Netlist, NetlistError> {
        for n in &self.nodes {
            if let Some(&bad) = n.fanin.iter().find(|&&f| f >= self.nodes.len()) {
                return Err(NetlistError::DanglingIndex(bad));
            }
            if !n.kind.accepts_arity(n.fanin.len()) {
                return Err(NetlistError::Arity { id: n.id.clone(), kind: n.kind, got: n.fanin.len() });
            }
            if let GateKind::Lut { k, .. } = n.kind {
                if k == 0 || k > MAX_LUT_INPUTS {
                    return Err(NetlistError::Arity { id: n.id.clone(), kind: n.kind, got: n.fanin.len() });
                }
            }
        }
        for &k in &self.key_inputs {
            if self.primary_inputs.contains(&k) {
                return Err(NetlistError::KeyIsPrimary(self.nodes[k].id.clone()));
            }
        }
        let order = topological_order(&self.nodes).map_err(|i| NetlistError::Cycle(self.nodes[i].id.clone()))?;
        let mut remap = vec![0; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let mut nodes: Vec<Option<Node>> = self.nodes.into_iter().map(Some).collect();
        let nodes: Vec<Node> = order
            .iter()
            .map(|&old| {
                let mut n = nodes[old].take().unwrap();
                for f in n.fanin.iter_mut() {
                    *f = remap[*f];
                }
                n
            })
            .collect();
        let index = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let map = |v: Vec<NodeId>| v.into_iter().map(|i| remap[i]).collect::<Vec<_>>();
        Ok(Netlist {
            name: self.name,
            nodes,
            primary_inputs: map(self.primary_inputs),
            key_inputs: map(self.key_inputs),
            outputs: map(self.outputs),
            index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Netlist {
        let mut e = NetlistEditor::new("chain");
        let a = e.add_input("a").unwrap();
        let b = e.add_gate("b", GateKind::Not, vec![a]).unwrap();
        let c = e.add_gate("c", GateKind::Buf, vec![b]).unwrap();
        e.add_output(c);
        e.build().unwrap()
    }

    #[test]
    fn chain_order() {
        let nl = chain();
        let ids: Vec<&str> = nl.topological_order().iter().map(|&i| nl.node(i).id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn diamond_inputs_first_join_last() {
        let mut e = NetlistEditor::new("diamond");
        // Deliberately add the join gate's operands out of order.
        let x = e.add_input("x").unwrap();
        let l = e.add_gate("l", GateKind::Not, vec![x]).unwrap();
        let r = e.add_gate("r", GateKind::Buf, vec![x]).unwrap();
        let j = e.add_gate("j", GateKind::And, vec![l, r]).unwrap();
        e.add_output(j);
        let nl = e.build().unwrap();
        let order = nl.topological_order();
        assert_eq!(nl.node(order[0]).id, "x");
        assert_eq!(nl.node(*order.last().unwrap()).id, "j");
    }

    #[test]
    fn cycle_is_rejected() {
        let mut e = NetlistEditor::new("loop");
        let a = e.add_input("a").unwrap();
        let g = e.add_gate("g", GateKind::And, vec![a, a]).unwrap();
        e.set_fanin(g, vec![a, g]);
        e.add_output(g);
        assert_eq!(e.build().unwrap_err(), NetlistError::Cycle("g".into()));
    }

    #[test]
    fn arity_checked() {
        let mut e = NetlistEditor::new("bad");
        let a = e.add_input("a").unwrap();
        assert!(matches!(e.add_gate("g", GateKind::And, vec![a]), Err(NetlistError::Arity { .. })));
        assert!(matches!(e.add_gate("m", GateKind::Mux2, vec![a, a]), Err(NetlistError::Arity { .. })));
        assert!(e.add_gate("n", GateKind::Not, vec![a]).is_ok());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut e = NetlistEditor::new("dup");
        e.add_input("a").unwrap();
        assert_eq!(e.add_input("a").unwrap_err(), NetlistError::Duplicate("a".into()));
    }

    #[test]
    fn sweep_removes_dead_logic() {
        let mut e = chain().edit();
        let a = e.find("a").unwrap();
        e.add_gate("dead", GateKind::Not, vec![a]).unwrap();
        e.sweep();
        let nl = e.build().unwrap();
        assert!(nl.find("dead").is_none());
        assert_eq!(nl.len(), 3);
    }

    #[test]
    fn lut_word_eval_matches_table() {
        let xor = GateKind::Lut { k: 2, table: 0b0110 };
        for a in [false, true] {
            for b in [false, true] {
                assert_eq!(xor.eval_bits(&[a, b]), a ^ b);
            }
        }
        let a_and_not_b = GateKind::Lut { k: 2, table: 0b0100 };
        assert!(a_and_not_b.eval_bits(&[true, false]));
        assert!(!a_and_not_b.eval_bits(&[false, true]));
    }
}

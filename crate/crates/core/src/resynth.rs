// SPDX-License-Identifier: Apache-2.0

//! Function-preserving restructuring by inverter migration.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lock::{LockError, LockedCircuit};
use crate::netlist::{GateKind, Netlist, NetlistEditor, NodeId};

pub const DEFAULT_PASSES: usize = 3;

/// Chance that an available rewrite site is taken during a pass.
const SITE_PROBABILITY: f64 = 0.5;

/// Rewrites of a single XOR/XNOR key gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyGateRewrite {
    /// XOR <-> XNOR; the key bit must be complemented.
    ToggleComplementKey,
    /// XOR <-> XNOR plus an explicit inverter on the gate output; the key
    /// bit is unchanged.
    TogglePushInverter,
    /// Both of the above: same gate kind, inverter on the output, key bit
    /// complemented.
    ComplementBoth,
}

pub fn rewrite_key_gate(e: &mut NetlistEditor, gate: NodeId, rw: KeyGateRewrite) -> Result<(), LockError> {
    let kind = e.node(gate).kind;
    if !kind.is_xor_family() {
        return Err(LockError::NotXorFamily(e.node(gate).id.clone()));
    }
    if rw != KeyGateRewrite::ComplementBoth {
        e.set_kind(gate, kind.complement().unwrap());
    }
    if rw != KeyGateRewrite::ToggleComplementKey {
        let inv = e.add_fresh("bp_n", GateKind::Not, vec![gate]);
        e.redirect(gate, inv, &[inv]);
    }
    Ok(())
}

/// Toggles every key gate between XOR and XNOR and complements the key.
/// On a seeded half of the gates the toggle is undone by an inverter pushed
/// into the fan-out, so afterwards the gate kind agrees with the key bit on
/// only about half of the gates.
pub fn xor_xnor_complement(lc: &LockedCircuit) -> Result<LockedCircuit, LockError> {
    let nl = &lc.netlist;
    let p = nl.p();
    let gates: Vec<NodeId> = (0..p)
        .map(|i| nl.key_gate(i).ok_or_else(|| LockError::NotXorFamily(format!("keyinput{i}"))))
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(lc.recipe.seed ^ 0x5eed_c0de);
    let mut pushed = vec![false; p];
    for i in index::sample(&mut rng, p, p / 2) {
        pushed[i] = true;
    }
    let mut e = nl.edit();
    for (i, &g) in gates.iter().enumerate() {
        let rw = if pushed[i] { KeyGateRewrite::ComplementBoth } else { KeyGateRewrite::ToggleComplementKey };
        rewrite_key_gate(&mut e, g, rw)?;
    }
    let netlist = e.build()?.with_name(nl.name());
    let correct_key = lc.correct_key.complement().with_provenance(netlist.key_provenance());
    Ok(LockedCircuit { netlist, correct_key, recipe: lc.recipe.clone(), original_name: lc.original_name.clone() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Site {
    /// NOT(g) with g single-fanout: fold the inverter into g's complement.
    Absorb { not: NodeId, inner: NodeId },
    /// NOT(NOT(a)) -> a.
    DoubleNegation { outer: NodeId, inner: NodeId },
    /// g -> NOT(complement(g)).
    PushOut(NodeId),
    /// AND(a, b) -> NOR(!a, !b) and the three dual forms.
    DeMorgan(NodeId),
    /// XOR(NOT a, b) -> XNOR(a, b).
    XorBubble { gate: NodeId, slot: usize },
}

impl Site {
    fn nodes(&self) -> Vec<NodeId> {
        match *self {
            Site::Absorb { not, inner } => vec![not, inner],
            Site::DoubleNegation { outer, inner } => vec![outer, inner],
            Site::PushOut(g) | Site::DeMorgan(g) => vec![g],
            Site::XorBubble { gate, .. } => vec![gate],
        }
    }
}

fn sites(e: &NetlistEditor) -> Vec<Site> {
    let fanouts = e.fanouts();
    let is_output = |v: NodeId| e.outputs().contains(&v);
    let mut out = Vec::new();
    for (v, node) in e.nodes().iter().enumerate() {
        match node.kind {
            GateKind::Not => {
                let inner = node.fanin[0];
                let ik = e.node(inner).kind;
                if ik == GateKind::Not {
                    let a = e.node(inner).fanin[0];
                    if !(is_output(v) && e.node(a).kind == GateKind::Input) {
                        out.push(Site::DoubleNegation { outer: v, inner });
                    }
                } else if ik != GateKind::Input
                    && ik.complement().is_some()
                    && !matches!(ik, GateKind::Lut { .. })
                    && fanouts[inner] == [v]
                    && !is_output(inner)
                {
                    out.push(Site::Absorb { not: v, inner });
                }
            }
            GateKind::And | GateKind::Or | GateKind::Nand | GateKind::Nor => {
                out.push(Site::DeMorgan(v));
                out.push(Site::PushOut(v));
            }
            GateKind::Xor | GateKind::Xnor => {
                out.push(Site::PushOut(v));
                if let Some(slot) = node.fanin.iter().position(|&f| e.node(f).kind == GateKind::Not) {
                    out.push(Site::XorBubble { gate: v, slot });
                }
            }
            _ => {}
        }
    }
    out
}

fn apply(e: &mut NetlistEditor, site: Site) {
    match site {
        Site::Absorb { not, inner } => {
            let node = e.node(inner).clone();
            e.set_kind(not, node.kind.complement().unwrap());
            e.set_fanin(not, node.fanin);
        }
        Site::DoubleNegation { outer, inner } => {
            let a = e.node(inner).fanin[0];
            e.redirect(outer, a, &[]);
        }
        Site::PushOut(g) => {
            let kind = e.node(g).kind;
            e.set_kind(g, kind.complement().unwrap());
            let inv = e.add_fresh("bp_n", GateKind::Not, vec![g]);
            e.redirect(g, inv, &[inv]);
        }
        Site::DeMorgan(g) => {
            let kind = match e.node(g).kind {
                GateKind::And => GateKind::Nor,
                GateKind::Or => GateKind::Nand,
                GateKind::Nand => GateKind::Or,
                GateKind::Nor => GateKind::And,
                _ => unreachable!(),
            };
            let fanin: Vec<NodeId> = e
                .node(g)
                .fanin
                .clone()
                .into_iter()
                .map(|f| {
                    if e.node(f).kind == GateKind::Not {
                        e.node(f).fanin[0]
                    } else {
                        e.add_fresh("bp_n", GateKind::Not, vec![f])
                    }
                })
                .collect();
            e.set_kind(g, kind);
            e.set_fanin(g, fanin);
        }
        Site::XorBubble { gate, slot } => {
            let mut fanin = e.node(gate).fanin.clone();
            fanin[slot] = e.node(fanin[slot]).fanin[0];
            let kind = e.node(gate).kind.complement().unwrap();
            e.set_kind(gate, kind);
            e.set_fanin(gate, fanin);
        }
    }
}

/// Randomized De Morgan / inverter-migration rewriting.
///
/// Each pass visits the available rewrite sites in seeded random order and
/// takes each with probability one half; a node is touched at most once per
/// pass. If no site was taken at all but one exists, the first one is
/// forced, so the result differs from the input whenever a rewrite applies.
pub fn bubble_push(nl: &Netlist, seed: u64, passes: usize) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = nl.edit();
    let mut applied = 0usize;
    for _ in 0..passes {
        let mut candidates = sites(&e);
        candidates.shuffle(&mut rng);
        let mut touched: HashSet<NodeId> = HashSet::new();
        for site in candidates {
            if !rng.random_bool(SITE_PROBABILITY) {
                continue;
            }
            let nodes = site.nodes();
            if nodes.iter().any(|v| touched.contains(v)) {
                continue;
            }
            // Neighbours of a rewritten node may have changed shape.
            let mut reach = nodes.clone();
            for &v in &nodes {
                reach.extend(e.node(v).fanin.iter().copied());
            }
            if !still_valid(&e, site) {
                continue;
            }
            apply(&mut e, site);
            touched.extend(reach);
            applied += 1;
        }
        e.sweep();
    }
    if applied == 0 {
        if let Some(&site) = sites(&e).first() {
            apply(&mut e, site);
            e.sweep();
        }
    }
    e.build().expect("rewrites preserve validity").with_name(format!("{}_bp{seed}", nl.name()))
}

fn still_valid(e: &NetlistEditor, site: Site) -> bool {
    match site {
        Site::Absorb { not, inner } => {
            e.node(not).kind == GateKind::Not
                && e.node(not).fanin == [inner]
                && e.node(inner).kind.complement().is_some()
                && e.node(inner).kind != GateKind::Input
                && e.fanouts()[inner] == [not]
                && !e.outputs().contains(&inner)
        }
        Site::DoubleNegation { outer, inner } => {
            e.node(outer).kind == GateKind::Not
                && e.node(outer).fanin == [inner]
                && e.node(inner).kind == GateKind::Not
                && !(e.outputs().contains(&outer) && e.node(e.node(inner).fanin[0]).kind == GateKind::Input)
        }
        Site::PushOut(g) => e.node(g).kind.complement().is_some() && e.node(g).kind != GateKind::Input,
        Site::DeMorgan(g) => matches!(e.node(g).kind, GateKind::And | GateKind::Or | GateKind::Nand | GateKind::Nor),
        Site::XorBubble { gate, slot } => {
            e.node(gate).kind.is_xor_family()
                && e.node(gate).fanin.get(slot).is_some_and(|&f| e.node(f).kind == GateKind::Not)
        }
    }
}

fn fnv(words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn kind_code(kind: GateKind) -> u64 {
    match kind {
        GateKind::Lut { k, table } => fnv([100, k as u64, table]),
        other => other.name().bytes().fold(0u64, |acc, b| acc << 8 | b as u64),
    }
}

/// Rename-invariant structural digest: two rounds of Weisfeiler-Lehman
/// refinement over (kind, role) labels using fan-in and fan-out label
/// multisets, then a digest of the sorted label multiset.
pub fn topology_hash(nl: &Netlist) -> u64 {
    let fanouts = nl.fanouts();
    let mut labels: Vec<u64> = (0..nl.len())
        .map(|v| {
            let role = if nl.is_key_input(v) {
                2
            } else if nl.node(v).kind == GateKind::Input {
                1
            } else {
                0
            };
            let outs = nl.outputs().iter().filter(|&&o| o == v).count() as u64;
            fnv([kind_code(nl.node(v).kind), role, outs])
        })
        .collect();
    for _ in 0..2 {
        labels = (0..nl.len())
            .map(|v| {
                let mut ins: Vec<u64> = nl.node(v).fanin.iter().map(|&f| labels[f]).collect();
                let mut outs: Vec<u64> = fanouts[v].iter().map(|&s| labels[s]).collect();
                ins.sort_unstable();
                outs.sort_unstable();
                fnv([labels[v], ins.len() as u64].into_iter().chain(ins).chain([u64::MAX]).chain(outs))
            })
            .collect();
    }
    labels.sort_unstable();
    fnv(labels)
}

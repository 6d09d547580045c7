// SPDX-License-Identifier: Apache-2.0

//! Built-in circuits: ISCAS c17 and a seeded generator of small random
//! combinational netlists used as desk-scale stand-ins for benchmark suites.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netlist::{parse_bench, GateKind, Netlist, NetlistEditor, NodeId};

pub const C17: &str = "\
# c17
INPUT(1)
INPUT(2)
INPUT(3)
INPUT(6)
INPUT(7)
OUTPUT(22)
OUTPUT(23)
10 = NAND(1, 3)
11 = NAND(3, 6)
16 = NAND(2, 11)
19 = NAND(11, 7)
22 = NAND(10, 16)
23 = NAND(16, 19)
";

pub fn c17() -> Netlist {
    parse_bench(C17).expect("c17 fixture parses").with_name("c17")
}

/// Gate-kind weights for generated circuits. NAND-heavy, like the ISCAS
/// combinational suite.
pub fn default_mix() -> Vec<(GateKind, u32)> {
    vec![
        (GateKind::Nand, 66),
        (GateKind::Nor, 6),
        (GateKind::Or, 6),
        (GateKind::And, 4),
        (GateKind::Xor, 2),
        (GateKind::Xnor, 2),
        (GateKind::Not, 10),
        (GateKind::Buf, 4),
    ]
}

#[derive(Clone, Debug)]
pub struct SynthParams {
    pub inputs: usize,
    pub gates: usize,
    /// Minimum number of outputs; every gate without fan-out also becomes one.
    pub outputs: usize,
    pub seed: u64,
    pub mix: Vec<(GateKind, u32)>,
    /// Share of multi-input gates that get three fan-ins instead of two.
    pub wide_fraction: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams { inputs: 10, gates: 50, outputs: 3, seed: 0, mix: default_mix(), wide_fraction: 0.1 }
    }
}

/// Random DAG whose gates mostly read recent signals, so cones stay local.
pub fn synthetic(p: &SynthParams) -> Netlist {
    assert!(p.inputs >= 2 && p.gates >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut e = NetlistEditor::new(format!("syn_s{}", p.seed));
    let mut used: Vec<bool> = Vec::new();
    let mut pis = Vec::new();
    for i in 0..p.inputs {
        pis.push(e.add_input(format!("x{i}")).unwrap());
        used.push(false);
    }
    let total: u32 = p.mix.iter().map(|m| m.1).sum();
    for g in 0..p.gates {
        let mut roll = rng.random_range(0..total);
        let kind = p
            .mix
            .iter()
            .find(|(_, w)| {
                if roll < *w {
                    true
                } else {
                    roll -= w;
                    false
                }
            })
            .unwrap()
            .0;
        let arity = match kind {
            GateKind::Not | GateKind::Buf => 1,
            _ if rng.random_bool(p.wide_fraction) => 3,
            _ => 2,
        };
        let len = used.len();
        let mut fanin: Vec<NodeId> = Vec::with_capacity(arity);
        let unused_pi: Vec<NodeId> = pis.iter().copied().filter(|&x| !used[x]).collect();
        let unused_gate: Vec<NodeId> = (p.inputs..len).filter(|&x| !used[x]).collect();
        let first = if let Some(&x) = unused_pi.choose(&mut rng) {
            x
        } else if !unused_gate.is_empty() && rng.random_bool(0.6) {
            *unused_gate.choose(&mut rng).unwrap()
        } else {
            rng.random_range(len.saturating_sub(12)..len)
        };
        fanin.push(first);
        while fanin.len() < arity {
            let c = if rng.random_bool(0.7) {
                rng.random_range(len.saturating_sub(12)..len)
            } else {
                rng.random_range(0..len)
            };
            if !fanin.contains(&c) {
                fanin.push(c);
            }
        }
        for &f in &fanin {
            used[f] = true;
        }
        e.add_gate(format!("g{g}"), kind, fanin).unwrap();
        used.push(false);
    }
    let mut outs: Vec<NodeId> = (p.inputs..used.len()).filter(|&x| !used[x]).collect();
    let mut extra: Vec<NodeId> = (p.inputs..used.len()).filter(|&x| used[x]).collect();
    while outs.len() < p.outputs && !extra.is_empty() {
        let i = rng.random_range(0..extra.len());
        outs.push(extra.swap_remove(i));
    }
    outs.sort_unstable();
    for o in outs {
        e.add_output(o);
    }
    e.build().expect("generated netlist is valid")
}

/// `count` circuits with 8 to 12 inputs and 40 to 80 gates, named `syn0`,
/// `syn1`, ...
pub fn desk_suite(count: usize, seed: u64) -> Vec<Netlist> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let p = SynthParams {
                inputs: rng.random_range(8..=12),
                gates: rng.random_range(40..=80),
                outputs: rng.random_range(2..=4),
                seed: rng.random(),
                ..Default::default()
            };
            synthetic(&p).with_name(format!("syn{i}"))
        })
        .collect()
}

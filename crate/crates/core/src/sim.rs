// SPDX-License-Identifier: Apache-2.0

//! Netlist evaluation and key error rate.
//!
//! The default engine simulates 64 patterns per machine word. The scalar
//! engine ([`evaluate`], [`scalar_error_rate`]) walks one pattern at a time
//! and is kept as an independent reference for the word engine.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{GateKind, Key, Netlist, NodeId};
use crate::par::{self, Exec};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 20;
pub const DEFAULT_MC_SAMPLES: u64 = 10_000;

/// Patterns per parallel work item (in 64-pattern words).
const WORDS_PER_CHUNK: u64 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("expected {expected} primary input values, got {got}")]
    InputWidth { expected: usize, got: usize },
    #[error("expected a {expected}-bit key, got {got} bits")]
    KeyWidth { expected: usize, got: usize },
    #[error("interface mismatch: {0}")]
    Interface(String),
    #[error("exhaustive simulation over {inputs} inputs exceeds the cap of {cap}")]
    ExhaustiveCap { inputs: usize, cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum ErMode {
    Exhaustive { max_inputs: usize },
    MonteCarlo { samples: u64, seed: u64 },
}

impl ErMode {
    pub fn exhaustive() -> Self {
        ErMode::Exhaustive { max_inputs: DEFAULT_EXHAUSTIVE_CAP }
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        ErMode::MonteCarlo { samples, seed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErMethod {
    Exhaustive,
    MonteCarlo,
}

/// Outcome of an error-rate run: `er = mismatching / total`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErReport {
    pub er: f64,
    pub method: ErMethod,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub mismatching: u64,
    pub total: u64,
}

impl ErReport {
    fn new(mode: ErMode, mismatching: u64, total: u64) -> Self {
        let er = if total == 0 { 0.0 } else { mismatching as f64 / total as f64 };
        match mode {
            ErMode::Exhaustive { .. } => {
                ErReport { er, method: ErMethod::Exhaustive, samples: None, seed: None, mismatching, total }
            }
            ErMode::MonteCarlo { samples, seed } => ErReport {
                er,
                method: ErMethod::MonteCarlo,
                samples: Some(samples),
                seed: Some(seed),
                mismatching,
                total,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Values of the compared inputs (primary inputs, then free key inputs)
    /// for the first distinguishing pattern found.
    pub counterexample: Option<Vec<bool>>,
}

#[inline]
fn eval_gate(kind: GateKind, fanin: &[NodeId], vals: &[u64]) -> u64 {
    let mut it = fanin.iter().map(|&f| vals[f]);
    match kind {
        GateKind::And => it.fold(!0, |a, b| a & b),
        GateKind::Nand => !it.fold(!0, |a, b| a & b),
        GateKind::Or => it.fold(0, |a, b| a | b),
        GateKind::Nor => !it.fold(0, |a, b| a | b),
        GateKind::Xor => it.fold(0, |a, b| a ^ b),
        GateKind::Xnor => !it.fold(0, |a, b| a ^ b),
        GateKind::Not => !it.next().unwrap(),
        GateKind::Buf => it.next().unwrap(),
        GateKind::Mux2 => {
            let (s, lo, hi) = (vals[fanin[0]], vals[fanin[1]], vals[fanin[2]]);
            (!s & lo) | (s & hi)
        }
        GateKind::Lut { .. } => {
            let ins: Vec<u64> = it.collect();
            kind.eval_word(&ins)
        }
        GateKind::Input => unreachable!(),
    }
}

/// Word-parallel evaluation of all nodes. `vals` must already hold the input
/// words; gate slots are overwritten.
pub fn simulate_words(nl: &Netlist, vals: &mut [u64]) {
    for (i, node) in nl.nodes().iter().enumerate() {
        if node.kind != GateKind::Input {
            vals[i] = eval_gate(node.kind, &node.fanin, vals);
        }
    }
}

/// Evaluates one pattern with the scalar engine.
pub fn evaluate(nl: &Netlist, primary: &[bool], key: Option<&Key>) -> Result<Vec<bool>, SimError> {
    if primary.len() != nl.n() {
        return Err(SimError::InputWidth { expected: nl.n(), got: primary.len() });
    }
    let key_bits: &[bool] = key.map(|k| k.bits.as_slice()).unwrap_or(&[]);
    if key_bits.len() != nl.p() {
        return Err(SimError::KeyWidth { expected: nl.p(), got: key_bits.len() });
    }
    let mut vals = vec![false; nl.len()];
    for (&pi, &v) in nl.primary_inputs().iter().zip(primary) {
        vals[pi] = v;
    }
    for (&ki, &v) in nl.key_inputs().iter().zip(key_bits) {
        vals[ki] = v;
    }
    let mut scratch = Vec::new();
    for (i, node) in nl.nodes().iter().enumerate() {
        if node.kind == GateKind::Input {
            continue;
        }
        scratch.clear();
        scratch.extend(node.fanin.iter().map(|&f| vals[f]));
        vals[i] = node.kind.eval_bits(&scratch);
    }
    Ok(nl.outputs().iter().map(|&o| vals[o]).collect())
}

/// One side of a comparison: a netlist with its key either bound to a value
/// or left free (enumerated together with the primary inputs).
#[derive(Clone, Copy)]
struct Side<'a> {
    nl: &'a Netlist,
    key: Option<&'a Key>,
}

const LANE_MASKS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Word of free-input `i` for exhaustive block `block` (pattern index =
/// `block * 64 + lane`, input `i` reads bit `i` of the index).
#[inline]
fn exhaustive_word(i: usize, block: u64) -> u64 {
    if i < 6 {
        LANE_MASKS[i]
    } else if block >> (i - 6) & 1 == 1 {
        !0
    } else {
        0
    }
}

struct Comparison {
    mismatching: u64,
    total: u64,
    first: Option<Vec<bool>>,
}

fn check_interface(a: &Netlist, b: &Netlist) -> Result<(), SimError> {
    if a.n() != b.n() {
        return Err(SimError::Interface(format!("{} vs {} primary inputs", a.n(), b.n())));
    }
    if a.m() != b.m() {
        return Err(SimError::Interface(format!("{} vs {} outputs", a.m(), b.m())));
    }
    Ok(())
}

fn bind(side: Side<'_>, vals: &mut [u64], free: &[u64]) {
    let n = side.nl.n();
    for (j, &pi) in side.nl.primary_inputs().iter().enumerate() {
        vals[pi] = free[j];
    }
    match side.key {
        Some(k) => {
            for (&ki, &b) in side.nl.key_inputs().iter().zip(&k.bits) {
                vals[ki] = if b { !0 } else { 0 };
            }
        }
        None => {
            for (j, &ki) in side.nl.key_inputs().iter().enumerate() {
                vals[ki] = free[n + j];
            }
        }
    }
}

fn compare(a: Side<'_>, b: Side<'_>, mode: ErMode, exec: Exec) -> Result<Comparison, SimError> {
    check_interface(a.nl, b.nl)?;
    for side in [a, b] {
        if let Some(k) = side.key {
            if k.width() != side.nl.p() {
                return Err(SimError::KeyWidth { expected: side.nl.p(), got: k.width() });
            }
        }
    }
    let free_a = a.nl.n() + if a.key.is_none() { a.nl.p() } else { 0 };
    let free_b = b.nl.n() + if b.key.is_none() { b.nl.p() } else { 0 };
    if free_a != free_b {
        return Err(SimError::Interface(format!("{free_a} vs {free_b} free inputs")));
    }
    let free = free_a;

    let run_block = |words: &[u64], valid: u64, va: &mut Vec<u64>, vb: &mut Vec<u64>| -> u64 {
        bind(a, va, words);
        bind(b, vb, words);
        simulate_words(a.nl, va);
        simulate_words(b.nl, vb);
        let diff = a.nl.outputs().iter().zip(b.nl.outputs()).fold(0u64, |acc, (&oa, &ob)| acc | (va[oa] ^ vb[ob]));
        diff & valid
    };

    match mode {
        ErMode::Exhaustive { max_inputs } => {
            if free > max_inputs || free > 63 {
                return Err(SimError::ExhaustiveCap { inputs: free, cap: max_inputs });
            }
            let total = 1u64 << free;
            let blocks = total.div_ceil(64);
            let valid = if total >= 64 { !0 } else { (1u64 << total) - 1 };
            let parts = par::map_chunks(exec, blocks, WORDS_PER_CHUNK, |range| {
                let mut va = vec![0u64; a.nl.len()];
                let mut vb = vec![0u64; b.nl.len()];
                let mut words = vec![0u64; free];
                let mut count = 0u64;
                let mut first = None;
                for block in range {
                    for (i, w) in words.iter_mut().enumerate() {
                        *w = exhaustive_word(i, block);
                    }
                    let diff = run_block(&words, valid, &mut va, &mut vb);
                    if diff != 0 && first.is_none() {
                        first = Some(block * 64 + diff.trailing_zeros() as u64);
                    }
                    count += diff.count_ones() as u64;
                }
                (count, first)
            });
            let mismatching = parts.iter().map(|p| p.0).sum();
            let first = parts.iter().find_map(|p| p.1).map(|idx| (0..free).map(|i| idx >> i & 1 == 1).collect());
            Ok(Comparison { mismatching, total, first })
        }
        ErMode::MonteCarlo { samples, seed } => {
            let blocks = samples.div_ceil(64);
            let parts = par::map_chunks(exec, blocks, WORDS_PER_CHUNK, |range| {
                let mut va = vec![0u64; a.nl.len()];
                let mut vb = vec![0u64; b.nl.len()];
                let mut words = vec![0u64; free];
                let mut count = 0u64;
                let mut first = None;
                for block in range {
                    // One ChaCha stream per block keeps results independent of sharding.
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(block);
                    for w in words.iter_mut() {
                        *w = rng.next_u64();
                    }
                    let remaining = samples - block * 64;
                    let valid = if remaining >= 64 { !0 } else { (1u64 << remaining) - 1 };
                    let diff = run_block(&words, valid, &mut va, &mut vb);
                    if diff != 0 && first.is_none() {
                        let lane = diff.trailing_zeros();
                        first = Some(words.iter().map(|w| w >> lane & 1 == 1).collect::<Vec<_>>());
                    }
                    count += diff.count_ones() as u64;
                }
                (count, first)
            });
            let mismatching = parts.iter().map(|p| p.0).sum();
            let first = parts.into_iter().find_map(|p| p.1);
            Ok(Comparison { mismatching, total: samples, first })
        }
    }
}

/// Key error rate of `locked` under `key`, relative to `original`.
///
/// A pattern counts once when any output differs.
pub fn error_rate(original: &Netlist, locked: &Netlist, key: &Key, mode: ErMode) -> Result<ErReport, SimError> {
    error_rate_with(original, locked, key, mode, Exec::default())
}

pub fn error_rate_with(
    original: &Netlist,
    locked: &Netlist,
    key: &Key,
    mode: ErMode,
    exec: Exec,
) -> Result<ErReport, SimError> {
    if original.p() != 0 {
        return Err(SimError::Interface(format!("original circuit has {} key inputs", original.p())));
    }
    let empty = Key::default();
    let cmp = compare(Side { nl: original, key: Some(&empty) }, Side { nl: locked, key: Some(key) }, mode, exec)?;
    Ok(ErReport::new(mode, cmp.mismatching, cmp.total))
}

/// Functional equivalence. Key inputs, if any, are treated as extra free
/// inputs on both sides (both netlists must have the same key width).
pub fn equivalence_check(a: &Netlist, b: &Netlist, mode: ErMode) -> Result<Equivalence, SimError> {
    if a.p() != b.p() {
        return Err(SimError::Interface(format!("{} vs {} key inputs", a.p(), b.p())));
    }
    let cmp = compare(Side { nl: a, key: None }, Side { nl: b, key: None }, mode, Exec::default())?;
    Ok(Equivalence { equivalent: cmp.mismatching == 0, counterexample: cmp.first })
}

/// Equivalence with both keys bound.
pub fn equivalence_check_keyed(
    a: &Netlist,
    key_a: &Key,
    b: &Netlist,
    key_b: &Key,
    mode: ErMode,
) -> Result<Equivalence, SimError> {
    let cmp = compare(Side { nl: a, key: Some(key_a) }, Side { nl: b, key: Some(key_b) }, mode, Exec::default())?;
    Ok(Equivalence { equivalent: cmp.mismatching == 0, counterexample: cmp.first })
}

/// Exhaustive error rate using only the scalar engine.
pub fn scalar_error_rate(original: &Netlist, locked: &Netlist, key: &Key) -> Result<ErReport, SimError> {
    check_interface(original, locked)?;
    let n = original.n();
    if n > DEFAULT_EXHAUSTIVE_CAP {
        return Err(SimError::ExhaustiveCap { inputs: n, cap: DEFAULT_EXHAUSTIVE_CAP });
    }
    let total = 1u64 << n;
    let mut mismatching = 0;
    let mut pattern = vec![false; n];
    for idx in 0..total {
        for (i, b) in pattern.iter_mut().enumerate() {
            *b = idx >> i & 1 == 1;
        }
        if evaluate(original, &pattern, None)? != evaluate(locked, &pattern, Some(key))? {
            mismatching += 1;
        }
    }
    Ok(ErReport::new(ErMode::exhaustive(), mismatching, total))
}

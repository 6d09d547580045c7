// SPDX-License-Identifier: Apache-2.0

use rand::seq::index;
use rand_chacha::ChaCha8Rng;

use super::{add_keys, lock, LockError, LockRecipe, LockedCircuit, Scheme};
use crate::netlist::{GateKind, Netlist};

pub const DEFAULT_LUT_K: usize = 2;

/// Replaces `width / 2^k` random k-input gates by key-programmed lookup
/// tables. Line `t` of a table is key bit `k_t`; the table is realized as
/// the sum of minterms `OR_t AND(k_t, literals of t)`, and the correct key
/// is the truth table of the replaced gate.
pub fn lock_lut(nl: &Netlist, width: usize, seed: u64, lut_k: usize) -> Result<LockedCircuit, LockError> {
    lock(nl, &LockRecipe::new(Scheme::Lut, width, seed).with_param("lut_k", lut_k))
}

pub(super) fn apply(
    nl: &Netlist,
    width: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Netlist, Vec<bool>), LockError> {
    if !(1..=4).contains(&k) {
        return Err(LockError::BadParam { name: "lut_k".into(), msg: format!("{k} is outside 1..=4") });
    }
    let lines = 1usize << k;
    if width % lines != 0 {
        return Err(LockError::LutWidth { width, k });
    }
    let need = width / lines;
    let candidates: Vec<usize> = (0..nl.len())
        .filter(|&i| {
            let node = nl.node(i);
            node.fanin.len() == k
                && !matches!(node.kind, GateKind::Input | GateKind::Mux2 | GateKind::Lut { .. })
                && {
                    let mut f = node.fanin.clone();
                    f.dedup();
                    f.len() == k
                }
        })
        .collect();
    if candidates.len() < need {
        return Err(LockError::NotEnoughGates { k, need, have: candidates.len() });
    }
    let mut picked: Vec<usize> = index::sample(rng, candidates.len(), need).into_iter().map(|i| candidates[i]).collect();
    picked.sort_unstable();

    let mut e = nl.edit();
    let keys = add_keys(&mut e, width)?;
    let mut bits = Vec::with_capacity(width);
    for (j, &g) in picked.iter().enumerate() {
        let kind = e.node(g).kind;
        let fanin = e.node(g).fanin.clone();
        let mut negated: Vec<Option<usize>> = vec![None; k];
        let mut minterms = Vec::with_capacity(lines);
        for t in 0..lines {
            let values: Vec<bool> = (0..k).map(|i| t >> (k - 1 - i) & 1 == 1).collect();
            bits.push(kind.eval_bits(&values));
            let mut args = vec![keys[j * lines + t]];
            for (i, &v) in values.iter().enumerate() {
                let lit = if v {
                    fanin[i]
                } else {
                    *negated[i].get_or_insert_with(|| e.add_fresh("lk_lut_n", GateKind::Not, vec![fanin[i]]))
                };
                args.push(lit);
            }
            minterms.push(e.add_fresh("lk_lut_m", GateKind::And, args));
        }
        e.set_kind(g, GateKind::Or);
        e.set_fanin(g, minterms);
    }
    Ok((e.build()?, bits))
}

// SPDX-License-Identifier: Apache-2.0

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{add_keys, lock, LockError, LockRecipe, LockedCircuit, Scheme};
use crate::netlist::{GateKind, Netlist, NetlistEditor, NodeId};

/// One-point-flip locking: an output is inverted when the compared inputs
/// equal the applied key, unless they also equal the correct key.
pub fn lock_sar(nl: &Netlist, width: usize, seed: u64) -> Result<LockedCircuit, LockError> {
    lock(nl, &LockRecipe::new(Scheme::Sar, width, seed))
}

/// AND over `args`, or the single argument itself.
pub(super) fn and_of(e: &mut NetlistEditor, base: &str, args: Vec<NodeId>) -> NodeId {
    if args.len() == 1 {
        args[0]
    } else {
        e.add_fresh(base, GateKind::And, args)
    }
}

pub(super) fn apply(nl: &Netlist, width: usize, rng: &mut ChaCha8Rng) -> Result<(Netlist, Vec<bool>), LockError> {
    if width > nl.n() {
        return Err(LockError::WidthTooLarge { width, n: nl.n() });
    }
    let mut xs: Vec<NodeId> =
        index::sample(rng, nl.n(), width).into_iter().map(|i| nl.primary_inputs()[i]).collect();
    xs.sort_unstable();
    let out_slot = rng.random_range(0..nl.m());
    let bits: Vec<bool> = (0..width).map(|_| rng.random_bool(0.5)).collect();

    let mut e = nl.edit();
    let keys = add_keys(&mut e, width)?;
    let eq: Vec<NodeId> =
        xs.iter().zip(&keys).map(|(&x, &k)| e.add_fresh("lk_sar_eq", GateKind::Xnor, vec![x, k])).collect();
    let hit = and_of(&mut e, "lk_sar_hit", eq);
    // X == K*, spelled with plain or inverted input literals.
    let lits: Vec<NodeId> = xs
        .iter()
        .zip(&bits)
        .map(|(&x, &b)| if b { x } else { e.add_fresh("lk_sar_n", GateKind::Not, vec![x]) })
        .collect();
    let is_correct = and_of(&mut e, "lk_sar_mask", lits);
    let not_correct = e.add_fresh("lk_sar_nm", GateKind::Not, vec![is_correct]);
    let flip = e.add_fresh("lk_sar_flip", GateKind::And, vec![hit, not_correct]);
    let o = e.outputs()[out_slot];
    let y = e.add_fresh("lk_sar_out", GateKind::Xor, vec![o, flip]);
    // Only this output slot moves; internal readers of `o` are untouched.
    e.set_output(out_slot, y);
    Ok((e.build()?, bits))
}

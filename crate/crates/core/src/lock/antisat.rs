// SPDX-License-Identifier: Apache-2.0

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::sar::and_of;
use super::{add_keys, lock, LockError, LockRecipe, LockedCircuit, Scheme};
use crate::netlist::{GateKind, Netlist, NodeId};

/// Anti-SAT block `g(X ^ K1) AND NOT g(X ^ K2)` with `g` an AND tree, XORed
/// into one output. Any key with `K1 == K2` is correct; the returned key is
/// one random such pair.
pub fn lock_antisat(nl: &Netlist, width: usize, seed: u64) -> Result<LockedCircuit, LockError> {
    lock(nl, &LockRecipe::new(Scheme::AntiSat, width, seed))
}

pub(super) fn apply(nl: &Netlist, width: usize, rng: &mut ChaCha8Rng) -> Result<(Netlist, Vec<bool>), LockError> {
    if width % 2 != 0 {
        return Err(LockError::OddWidth(width));
    }
    let half = width / 2;
    if half > nl.n() {
        return Err(LockError::WidthTooLarge { width, n: nl.n() });
    }
    let mut xs: Vec<NodeId> = index::sample(rng, nl.n(), half).into_iter().map(|i| nl.primary_inputs()[i]).collect();
    xs.sort_unstable();
    let out_slot = rng.random_range(0..nl.m());
    let k1: Vec<bool> = (0..half).map(|_| rng.random_bool(0.5)).collect();

    let mut e = nl.edit();
    let keys = add_keys(&mut e, width)?;
    let a: Vec<NodeId> =
        xs.iter().zip(&keys[..half]).map(|(&x, &k)| e.add_fresh("lk_as_a", GateKind::Xor, vec![x, k])).collect();
    let b: Vec<NodeId> =
        xs.iter().zip(&keys[half..]).map(|(&x, &k)| e.add_fresh("lk_as_b", GateKind::Xor, vec![x, k])).collect();
    let g = and_of(&mut e, "lk_as_g", a);
    let gbar = if b.len() == 1 {
        e.add_fresh("lk_as_gb", GateKind::Not, b)
    } else {
        e.add_fresh("lk_as_gb", GateKind::Nand, b)
    };
    let y = e.add_fresh("lk_as_y", GateKind::And, vec![g, gbar]);
    let o = e.outputs()[out_slot];
    let out = e.add_fresh("lk_as_out", GateKind::Xor, vec![o, y]);
    e.set_output(out_slot, out);
    let mut bits = k1.clone();
    bits.extend_from_slice(&k1);
    Ok((e.build()?, bits))
}

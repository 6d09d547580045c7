// SPDX-License-Identifier: Apache-2.0

use rand::seq::index;
use rand_chacha::ChaCha8Rng;

use super::xor::{self, Polarity};
use super::{lock, LockError, LockRecipe, LockedCircuit, Scheme};
use crate::netlist::Netlist;
use crate::resynth::{rewrite_key_gate, KeyGateRewrite};

/// Simplified UNSAIL: XOR locking, then on a random half of the key gates
/// the gate is complemented twice over (key bit complemented, inverter
/// pushed into the fan-out). The local gate kind then says nothing about
/// the key bit.
pub fn lock_unsail(nl: &Netlist, width: usize, seed: u64) -> Result<LockedCircuit, LockError> {
    lock(nl, &LockRecipe::new(Scheme::Unsail, width, seed))
}

pub(super) fn apply(nl: &Netlist, width: usize, rng: &mut ChaCha8Rng) -> Result<(Netlist, Vec<bool>), LockError> {
    let (locked, mut bits) = xor::apply(nl, width, Polarity::Random, rng)?;
    let chosen = index::sample(rng, width, width / 2).into_vec();
    let mut e = locked.edit();
    for i in chosen {
        let gate = locked.key_gate(i).expect("xor-locked bit has a key gate");
        rewrite_key_gate(&mut e, gate, KeyGateRewrite::ComplementBoth)?;
        bits[i] = !bits[i];
    }
    Ok((e.build()?, bits))
}

// SPDX-License-Identifier: Apache-2.0

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{add_keys, cut_wire, internal_wires, lock, LockError, LockRecipe, LockedCircuit, Scheme};
use crate::netlist::{GateKind, Netlist};

/// XOR or XNOR choice for each inserted key gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Random,
    Xor,
    Xnor,
}

/// Cuts `width` random wires with XOR (correct bit 0) or XNOR (correct bit 1)
/// key gates.
pub fn lock_xor(nl: &Netlist, width: usize, seed: u64) -> Result<LockedCircuit, LockError> {
    lock(nl, &LockRecipe::new(Scheme::Xor, width, seed))
}

pub fn lock_xor_with(nl: &Netlist, width: usize, seed: u64, polarity: Polarity) -> Result<LockedCircuit, LockError> {
    let name = match polarity {
        Polarity::Random => "random",
        Polarity::Xor => "xor",
        Polarity::Xnor => "xnor",
    };
    lock(nl, &LockRecipe::new(Scheme::Xor, width, seed).with_param("polarity", name))
}

pub(super) fn apply(
    nl: &Netlist,
    width: usize,
    polarity: Polarity,
    rng: &mut ChaCha8Rng,
) -> Result<(Netlist, Vec<bool>), LockError> {
    let wires = internal_wires(nl);
    if wires.len() < width {
        return Err(LockError::InsufficientWires { need: width, have: wires.len() });
    }
    let mut picked: Vec<usize> = index::sample(rng, wires.len(), width).into_vec();
    picked.sort_unstable();
    let mut e = nl.edit();
    let keys = add_keys(&mut e, width)?;
    let mut bits = Vec::with_capacity(width);
    for (i, &w) in picked.iter().enumerate() {
        let bit = match polarity {
            Polarity::Random => rng.random_bool(0.5),
            Polarity::Xor => false,
            Polarity::Xnor => true,
        };
        let kind = if bit { GateKind::Xnor } else { GateKind::Xor };
        cut_wire(&mut e, wires[w], kind, keys[i], "lk_xor");
        bits.push(bit);
    }
    Ok((e.build()?, bits))
}

// SPDX-License-Identifier: Apache-2.0

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{add_keys, internal_wires, lock, LockError, LockRecipe, LockedCircuit, Scheme};
use crate::netlist::{GateKind, Netlist};

/// Routes `width` random wires through key-selected 2:1 multiplexers whose
/// other data input is a dummy signal. The multiplexer is built from
/// primitive gates: `OR(AND(NOT k, in0), AND(k, in1))`.
pub fn lock_mux(nl: &Netlist, width: usize, seed: u64) -> Result<LockedCircuit, LockError> {
    lock(nl, &LockRecipe::new(Scheme::Mux, width, seed))
}

pub(super) fn apply(nl: &Netlist, width: usize, rng: &mut ChaCha8Rng) -> Result<(Netlist, Vec<bool>), LockError> {
    let mut order = internal_wires(nl);
    order.shuffle(rng);
    let mut e = nl.edit();
    let keys = add_keys(&mut e, width)?;
    let mut bits = Vec::with_capacity(width);
    let mut usable = 0;
    for w in order {
        if bits.len() == width {
            break;
        }
        // Dummies are gate outputs outside the wire's transitive fan-out,
        // so the new edge cannot close a cycle.
        let tfo = e.transitive_fanout(w);
        let dummies: Vec<usize> =
            (0..e.nodes().len()).filter(|&d| !tfo[d] && e.node(d).kind != GateKind::Input).collect();
        let Some(&d) = dummies.choose(rng) else { continue };
        usable += 1;
        let k = keys[bits.len()];
        let bit: bool = rng.random_bool(0.5);
        let (in0, in1) = if bit { (d, w) } else { (w, d) };
        let nk = e.add_fresh("lk_mux_n", GateKind::Not, vec![k]);
        let a0 = e.add_fresh("lk_mux_a", GateKind::And, vec![nk, in0]);
        let a1 = e.add_fresh("lk_mux_a", GateKind::And, vec![k, in1]);
        let o = e.add_fresh("lk_mux", GateKind::Or, vec![a0, a1]);
        e.redirect(w, o, &[a0, a1]);
        bits.push(bit);
    }
    if bits.len() < width {
        return Err(LockError::NoDummy { need: width, have: usable });
    }
    Ok((e.build()?, bits))
}

// SPDX-License-Identifier: Apache-2.0

use std::collections::VecDeque;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{add_keys, lock, LockError, LockRecipe, LockedCircuit, Scheme};
use crate::netlist::{GateKind, Netlist, NodeId};

pub const DEFAULT_REGION_SIZE: usize = 8;

/// Simplified bilateral encryption of a sensitive region.
///
/// The region is the `region_size` gates nearest to the output driver with
/// the largest fan-in cone. Its output is XORed with the negation of a key
/// comparator, so every wrong key complements it on all patterns. The
/// comparator checks bit 0 directly and every other bit relative to its
/// predecessor (XNOR when equal, XOR when different), so no single key gate
/// shows an absolute bit value except bit 0.
pub fn lock_ble(nl: &Netlist, width: usize, seed: u64, region_size: usize) -> Result<LockedCircuit, LockError> {
    lock(nl, &LockRecipe::new(Scheme::Ble, width, seed).with_param("ble_region_size", region_size))
}

/// Gates of the fan-in cone of `root`, nearest first, at most `limit`.
pub fn region(nl: &Netlist, root: NodeId, limit: usize) -> Vec<NodeId> {
    let mut seen = vec![false; nl.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(v) = queue.pop_front() {
        if nl.node(v).kind == GateKind::Input {
            continue;
        }
        out.push(v);
        if out.len() == limit {
            break;
        }
        for &f in &nl.node(v).fanin {
            if !seen[f] {
                seen[f] = true;
                queue.push_back(f);
            }
        }
    }
    out
}

fn cone_size(nl: &Netlist, root: NodeId) -> usize {
    region(nl, root, usize::MAX).len()
}

pub(super) fn apply(
    nl: &Netlist,
    width: usize,
    region_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Netlist, Vec<bool>), LockError> {
    if region_size == 0 {
        return Err(LockError::BadParam { name: "ble_region_size".into(), msg: "must be positive".into() });
    }
    let drivers: Vec<NodeId> = nl.outputs().iter().copied().filter(|&o| nl.node(o).kind != GateKind::Input).collect();
    let best = drivers.iter().map(|&o| cone_size(nl, o)).max().ok_or(LockError::NoRegion)?;
    if best < region_size {
        return Err(LockError::NoRegion);
    }
    let tied: Vec<NodeId> = drivers.iter().copied().filter(|&o| cone_size(nl, o) == best).collect();
    let root = *tied.choose(rng).unwrap();
    let bits: Vec<bool> = (0..width).map(|_| rng.random_bool(0.5)).collect();

    let mut e = nl.edit();
    let keys = add_keys(&mut e, width)?;
    let mut terms = Vec::with_capacity(width);
    terms.push(if bits[0] { keys[0] } else { e.add_fresh("lk_ble_n", GateKind::Not, vec![keys[0]]) });
    for i in 1..width {
        let kind = if bits[i] == bits[i - 1] { GateKind::Xnor } else { GateKind::Xor };
        terms.push(e.add_fresh("lk_ble_r", kind, vec![keys[i - 1], keys[i]]));
    }
    // NOT(AND(terms)): 1 for every wrong key.
    let flip = if terms.len() == 1 {
        e.add_fresh("lk_ble_f", GateKind::Not, terms)
    } else {
        e.add_fresh("lk_ble_f", GateKind::Nand, terms)
    };
    let out = e.add_fresh("lk_ble_out", GateKind::Xor, vec![root, flip]);
    e.redirect(root, out, &[out]);
    Ok((e.build()?, bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::netlist::Key;
    use crate::sim::{error_rate, ErMode};
    use rand::SeedableRng;

    #[test]
    fn wrong_keys_share_one_high_er() {
        let nl = fixtures::synthetic(&fixtures::SynthParams { seed: 13, ..Default::default() });
        let lc = lock_ble(&nl, 32, 4, DEFAULT_REGION_SIZE).unwrap();
        let er = |k: &Key| error_rate(&nl, &lc.netlist, k, ErMode::exhaustive()).unwrap().er;
        assert_eq!(er(&lc.correct_key), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ers: Vec<f64> = (0..10).map(|_| er(&Key::random(32, &mut rng))).collect();
        ers.push(er(&lc.correct_key.flipped(17)));
        let mut far = lc.correct_key.clone();
        for i in 0..32 {
            if i % 2 == 0 {
                far = far.flipped(i);
            }
        }
        ers.push(er(&far));
        let (lo, hi) = ers.iter().fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
        assert!(hi - lo <= 0.05, "spread {lo}..{hi}");
        assert!(lo >= 0.5, "ER {lo}");
    }

    #[test]
    fn complement_key_is_wrong() {
        let nl = fixtures::c17();
        let lc = lock_ble(&nl, 4, 0, 3).unwrap();
        let er = error_rate(&nl, &lc.netlist, &lc.correct_key.complement(), ErMode::exhaustive()).unwrap().er;
        assert!(er > 0.0);
    }

    #[test]
    fn oversized_region_rejected() {
        assert!(matches!(lock_ble(&fixtures::c17(), 4, 0, 5), Err(LockError::NoRegion)));
    }

    #[test]
    fn region_is_nearest_cone() {
        let nl = fixtures::c17();
        let root = nl.find("22").unwrap();
        let r: Vec<&str> = region(&nl, root, 3).iter().map(|&g| nl.node(g).id.as_str()).collect();
        assert_eq!(r, ["22", "10", "16"]);
    }
}

// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{GinModel, GnnError};
use crate::graph::{key_bit_subgraph, to_graph};
use crate::netlist::{Key, Netlist};

/// Maximum number of refinement sweeps over the key bits.
pub const MAX_SWEEPS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    StructureOnly,
    CorruptibilityRefined,
}

impl std::str::FromStr for AttackMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "structure_only" | "structure" => Ok(AttackMode::StructureOnly),
            "corruptibility_refined" | "refined" => Ok(AttackMode::CorruptibilityRefined),
            _ => Err(format!("unknown attack mode `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackReport {
    pub key: Key,
    /// Per-bit argmax before refinement.
    pub structure_key: Key,
    /// Probability of 1 for every bit, from the key head.
    pub bit_probs: Vec<f64>,
    pub flips: usize,
    /// Error-rate head output for the reported key.
    pub predicted_er: f64,
}

fn predicted_er(model: &GinModel, nl: &Netlist, key: &Key) -> Result<f64, GnnError> {
    Ok(model.forward(&to_graph(nl, &model.fmap, Some(key))?)?.er_pred)
}

/// Recovers a key from the locked netlist alone.
///
/// Structure-only reads every key bit off its key-gate subgraph. The refined
/// mode then walks the bits greedily and keeps a flip only when the
/// error-rate head strictly prefers it, for at most [`MAX_SWEEPS`] sweeps.
pub fn attack(model: &GinModel, nl: &Netlist, mode: AttackMode) -> Result<AttackReport, GnnError> {
    if !model.trained {
        return Err(GnnError::Untrained);
    }
    if nl.p() == 0 || (0..nl.p()).any(|i| nl.key_gate(i).is_none()) {
        return Err(GnnError::NoKeyGates(nl.name().to_string()));
    }
    let mut bits = Vec::with_capacity(nl.p());
    let mut probs = Vec::with_capacity(nl.p());
    for i in 0..nl.p() {
        let out = model.forward(&key_bit_subgraph(nl, i, model.hyper.hops, &model.fmap, None)?)?;
        bits.push(out.key_bit());
        probs.push(out.key_prob());
    }
    let structure_key = Key::from_bits(bits).with_provenance(nl.key_provenance());
    let mut key = structure_key.clone();
    let mut er = predicted_er(model, nl, &key)?;
    let mut flips = 0;
    if mode == AttackMode::CorruptibilityRefined {
        for _ in 0..MAX_SWEEPS {
            let mut changed = false;
            for i in 0..key.width() {
                let cand = key.flipped(i);
                let e = predicted_er(model, nl, &cand)?;
                if e < er {
                    key = cand;
                    er = e;
                    flips += 1;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    Ok(AttackReport { key, structure_key, bit_probs: probs, flips, predicted_er: er })
}

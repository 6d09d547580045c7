// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeyError {
    #[error("key widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("invalid key character `{0}` (expected 0 or 1)")]
    BadChar(char),
}

/// A key assignment. Bit `i` drives key input `i`; `provenance` records the
/// key gate each bit controls, when known.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Key {
    pub bits: Vec<bool>,
    #[serde(default)]
    pub provenance: BTreeMap<usize, String>,
}

impl Key {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Key { bits, provenance: BTreeMap::new() }
    }

    pub fn zeros(width: usize) -> Self {
        Key::from_bits(vec![false; width])
    }

    pub fn random<R: Rng + ?Sized>(width: usize, rng: &mut R) -> Self {
        Key::from_bits((0..width).map(|_| rng.random()).collect())
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn with_provenance(mut self, provenance: BTreeMap<usize, String>) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn complement(&self) -> Key {
        Key { bits: self.bits.iter().map(|b| !b).collect(), provenance: self.provenance.clone() }
    }

    pub fn flipped(&self, i: usize) -> Key {
        let mut k = self.clone();
        k.bits[i] = !k.bits[i];
        k
    }

    /// Concatenation; provenance indices of `tail` are shifted.
    pub fn concat(&self, tail: &Key) -> Key {
        let off = self.width();
        let mut provenance = self.provenance.clone();
        provenance.extend(tail.provenance.iter().map(|(i, g)| (i + off, g.clone())));
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&tail.bits);
        Key { bits, provenance }
    }

    /// Bits packed little-endian into a word (bit `i` of the result is key bit `i`).
    pub fn as_u64(&self) -> u64 {
        self.bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    pub fn same_bits(&self, other: &Key) -> bool {
        self.bits == other.bits
    }
}

impl fmt::Display for Key {
    /// Bit 0 first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Key {
    type Err = KeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(KeyError::BadChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Key::from_bits)
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Logic-locking schemes.
//!
//! Each scheme maps `(netlist, key width, seed)` to a locked netlist plus the
//! correct key. Key input `i` is named `keyinput<i>` and drives key bit `i`.
//! All randomness comes from the recipe seed, so locking is a pure function
//! of its arguments.

mod antisat;
mod ble;
mod lut;
mod mux;
mod sar;
mod unsail;
mod xor;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{parse_bench, serialize_bench, GateKind, Key, Netlist, NetlistEditor, NetlistError, NodeId};
use crate::sim::{self, ErMode, ErReport, SimError};

pub use antisat::lock_antisat;
pub use ble::{lock_ble, DEFAULT_REGION_SIZE};
pub use lut::{lock_lut, DEFAULT_LUT_K};
pub use mux::lock_mux;
pub use sar::lock_sar;
pub use unsail::lock_unsail;
pub use xor::{lock_xor, lock_xor_with, Polarity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Xor,
    Mux,
    Lut,
    Sar,
    AntiSat,
    Ble,
    Unsail,
}

impl Scheme {
    pub const ALL: [Scheme; 7] =
        [Scheme::Xor, Scheme::Mux, Scheme::Lut, Scheme::Sar, Scheme::AntiSat, Scheme::Ble, Scheme::Unsail];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Xor => "xor",
            Scheme::Mux => "mux",
            Scheme::Lut => "lut",
            Scheme::Sar => "sar",
            Scheme::AntiSat => "anti_sat",
            Scheme::Ble => "ble",
            Scheme::Unsail => "unsail",
        }
    }

    /// BLE and UNSAIL are reduced to the behavior they contribute to a corpus.
    pub fn is_simplified(self) -> bool {
        matches!(self, Scheme::Ble | Scheme::Unsail)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = LockError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace(['-', '_'], "");
        Ok(match norm.as_str() {
            "xor" => Scheme::Xor,
            "mux" => Scheme::Mux,
            "lut" => Scheme::Lut,
            "sar" | "sarlock" => Scheme::Sar,
            "antisat" => Scheme::AntiSat,
            "ble" => Scheme::Ble,
            "unsail" => Scheme::Unsail,
            _ => return Err(LockError::UnknownScheme(s.to_string())),
        })
    }
}

#[derive(Debug, Error)]
pub enum LockError {
    #[error("key width must be at least 1")]
    ZeroWidth,
    #[error("unknown locking scheme `{0}`")]
    UnknownScheme(String),
    #[error("netlist already has {0} key inputs")]
    AlreadyLocked(usize),
    #[error("need {need} lockable wires, found {have}")]
    InsufficientWires { need: usize, have: usize },
    #[error("no cycle-free dummy signal for {need} multiplexers (found {have} usable wires)")]
    NoDummy { need: usize, have: usize },
    #[error("key width {width} is not a multiple of 2^{k}")]
    LutWidth { width: usize, k: usize },
    #[error("need {need} gates with exactly {k} inputs, found {have}")]
    NotEnoughGates { k: usize, need: usize, have: usize },
    #[error("key width {width} exceeds what {n} primary inputs support")]
    WidthTooLarge { width: usize, n: usize },
    #[error("key width {0} must be even")]
    OddWidth(usize),
    #[error("no output cone large enough for the requested region")]
    NoRegion,
    #[error("key gate `{0}` is not an XOR or XNOR")]
    NotXorFamily(String),
    #[error("bad parameter {name}: {msg}")]
    BadParam { name: String, msg: String },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockRecipe {
    pub scheme: Scheme,
    pub key_width: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl LockRecipe {
    pub fn new(scheme: Scheme, key_width: usize, seed: u64) -> Self {
        LockRecipe { scheme, key_width, seed, params: BTreeMap::new() }
    }

    pub fn with_param(mut self, name: &str, value: impl ToString) -> Self {
        self.params.insert(name.to_string(), value.to_string());
        self
    }

    pub fn param_usize(&self, name: &str, default: usize) -> Result<usize, LockError> {
        match self.params.get(name) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| LockError::BadParam { name: name.into(), msg: format!("`{v}`") }),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LockedCircuit {
    pub netlist: Netlist,
    pub correct_key: Key,
    pub recipe: LockRecipe,
    pub original_name: String,
}

#[derive(Serialize, Deserialize)]
struct KeyFile {
    bits: String,
    provenance: BTreeMap<usize, String>,
    scheme: Scheme,
    seed: u64,
    key_width: usize,
    params: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct MetaFile {
    original: String,
    scheme: Scheme,
    simplified_variant: bool,
    n: usize,
    m: usize,
    p: usize,
    gates: usize,
}

impl LockedCircuit {
    pub fn error_rate(&self, original: &Netlist, key: &Key, mode: ErMode) -> Result<ErReport, SimError> {
        sim::error_rate(original, &self.netlist, key, mode)
    }

    /// Writes `locked.bench`, `key.json` and `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), LockError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| LockError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let bench = dir.join("locked.bench");
        fs::write(&bench, serialize_bench(&self.netlist)).map_err(io(&bench))?;
        let key = KeyFile {
            bits: self.correct_key.to_string(),
            provenance: self.correct_key.provenance.clone(),
            scheme: self.recipe.scheme,
            seed: self.recipe.seed,
            key_width: self.recipe.key_width,
            params: self.recipe.params.clone(),
        };
        let meta = MetaFile {
            original: self.original_name.clone(),
            scheme: self.recipe.scheme,
            simplified_variant: self.recipe.scheme.is_simplified(),
            n: self.netlist.n(),
            m: self.netlist.m(),
            p: self.netlist.p(),
            gates: self.netlist.gate_count(),
        };
        for (name, text) in [
            ("key.json", serde_json::to_string_pretty(&key).expect("key serializes")),
            ("meta.json", serde_json::to_string_pretty(&meta).expect("meta serializes")),
        ] {
            let path = dir.join(name);
            fs::write(&path, text + "\n").map_err(io(&path))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<LockedCircuit, LockError> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|source| LockError::Io { path: path.display().to_string(), source })
        };
        let json = |name: &str, e| LockError::Json { path: dir.join(name).display().to_string(), source: e };
        let key: KeyFile = serde_json::from_str(&read("key.json")?).map_err(|e| json("key.json", e))?;
        let meta: MetaFile = serde_json::from_str(&read("meta.json")?).map_err(|e| json("meta.json", e))?;
        let netlist = parse_bench(&read("locked.bench")?)?.with_name(format!("{}_{}", meta.original, key.scheme));
        let bits: Key = key.bits.parse().map_err(|e: crate::netlist::KeyError| LockError::BadParam {
            name: "bits".into(),
            msg: e.to_string(),
        })?;
        Ok(LockedCircuit {
            netlist,
            correct_key: bits.with_provenance(key.provenance),
            recipe: LockRecipe { scheme: key.scheme, key_width: key.key_width, seed: key.seed, params: key.params },
            original_name: meta.original,
        })
    }
}

/// Locks `nl` according to `recipe`.
pub fn lock(nl: &Netlist, recipe: &LockRecipe) -> Result<LockedCircuit, LockError> {
    if recipe.key_width == 0 {
        return Err(LockError::ZeroWidth);
    }
    if nl.p() != 0 {
        return Err(LockError::AlreadyLocked(nl.p()));
    }
    let (netlist, bits) = match recipe.scheme {
        Scheme::Xor => {
            let polarity = match recipe.params.get("polarity").map(String::as_str) {
                None | Some("random") => Polarity::Random,
                Some("xor") => Polarity::Xor,
                Some("xnor") => Polarity::Xnor,
                Some(other) => {
                    return Err(LockError::BadParam { name: "polarity".into(), msg: format!("`{other}`") })
                }
            };
            xor::apply(nl, recipe.key_width, polarity, &mut recipe.rng())?
        }
        Scheme::Mux => mux::apply(nl, recipe.key_width, &mut recipe.rng())?,
        Scheme::Lut => lut::apply(nl, recipe.key_width, recipe.param_usize("lut_k", DEFAULT_LUT_K)?, &mut recipe.rng())?,
        Scheme::Sar => sar::apply(nl, recipe.key_width, &mut recipe.rng())?,
        Scheme::AntiSat => antisat::apply(nl, recipe.key_width, &mut recipe.rng())?,
        Scheme::Ble => ble::apply(
            nl,
            recipe.key_width,
            recipe.param_usize("ble_region_size", DEFAULT_REGION_SIZE)?,
            &mut recipe.rng(),
        )?,
        Scheme::Unsail => unsail::apply(nl, recipe.key_width, &mut recipe.rng())?,
    };
    let netlist = netlist.with_name(format!("{}_{}", nl.name(), recipe.scheme));
    let correct_key = Key::from_bits(bits).with_provenance(netlist.key_provenance());
    Ok(LockedCircuit { netlist, correct_key, recipe: recipe.clone(), original_name: nl.name().to_string() })
}

fn key_name(i: usize) -> String {
    format!("keyinput{i}")
}

/// Adds `width` key inputs named `keyinput0..`.
fn add_keys(e: &mut NetlistEditor, width: usize) -> Result<Vec<NodeId>, LockError> {
    (0..width).map(|i| e.add_key_input(key_name(i)).map_err(LockError::from)).collect()
}

/// Gate outputs, in node order.
fn internal_wires(nl: &Netlist) -> Vec<NodeId> {
    (0..nl.len()).filter(|&i| nl.node(i).kind != GateKind::Input).collect()
}

/// Inserts `gate(w, k)` on wire `w`: every reader of `w` (and the output
/// list) is moved to the new gate.
fn cut_wire(e: &mut NetlistEditor, w: NodeId, kind: GateKind, k: NodeId, base: &str) -> NodeId {
    let g = e.add_fresh(base, kind, vec![w, k]);
    e.redirect(w, g, &[g]);
    g
}

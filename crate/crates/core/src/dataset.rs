// SPDX-License-Identifier: Apache-2.0

//! Multi-label training corpus.
//!
//! Every original circuit is locked with every recipe. Each locked circuit
//! gets `variants` function-preserving rewrites (variant 0 is the locked
//! netlist itself) and a shared candidate-key set: the correct key followed
//! by `wrong_keys` distinct wrong keys. One row is emitted per
//! (circuit, recipe, variant, key) and labeled with the key's error rate.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lock::{self, LockError, LockRecipe, LockedCircuit, Scheme};
use crate::netlist::{parse_bench, serialize_bench, Key, Netlist, NetlistError};
use crate::par::{self, Exec};
use crate::resynth;
use crate::sim::{self, ErMode, SimError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot draw {requested} distinct wrong keys of width {width}")]
    KeyExhaustion { width: usize, requested: usize },
    #[error("duplicate circuit name `{0}`")]
    DuplicateName(String),
    #[error("{0} split is empty")]
    EmptySplit(Split),
    #[error("fraction {0} is outside [0, 1]")]
    Fraction(f64),
    #[error("need at least one original, one recipe and one variant")]
    Empty,
    #[error("locking {circuit} with {scheme}: {source}")]
    Lock { circuit: String, scheme: Scheme, source: LockError },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("malformed dataset: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Train,
    Validation,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WrongKeyPolicy {
    /// Uniform random keys; their error rates land wherever they land.
    #[default]
    Uniform,
    /// Oversample keys at uniformly drawn distances from the correct key,
    /// then pick evenly spaced error-rate quantiles.
    Stratified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub wrong_keys: usize,
    pub variants: usize,
    pub seed: u64,
    pub passes: usize,
    pub wrong_key_policy: WrongKeyPolicy,
    pub er_mode: ErMode,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            wrong_keys: 10,
            variants: 10,
            seed: 0,
            passes: resynth::DEFAULT_PASSES,
            wrong_key_policy: WrongKeyPolicy::Uniform,
            er_mode: ErMode::exhaustive(),
        }
    }
}

/// One line of `dataset.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    /// Directory of the locked circuit, relative to the dataset root.
    pub circuit: String,
    pub variant: usize,
    pub scheme: Scheme,
    pub key_bits: String,
    pub is_correct: bool,
    pub er: f64,
    pub split: Split,
}

/// A locked circuit with its rewrites and candidate keys.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub original: usize,
    pub locked: LockedCircuit,
    /// `variants[0]` is the locked netlist.
    pub variants: Vec<Netlist>,
    /// Correct key first.
    pub keys: Vec<Key>,
    pub split: Split,
}

impl Entry {
    pub fn dir_name(&self) -> String {
        format!("circuits/{}", self.locked.netlist.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub originals: Vec<Netlist>,
    pub recipes: Vec<LockRecipe>,
    pub entries: Vec<Entry>,
    pub rows: Vec<DatasetRow>,
}

/// `|O| * |S| * (W + 1) * V`.
pub fn expected_rows(originals: usize, schemes: usize, wrong_keys: usize, variants: usize) -> usize {
    originals * schemes * (wrong_keys + 1) * variants
}

/// SplitMix64 finalizer over a base seed and a path of indices.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(base, |acc, &x| {
        let mut z = acc ^ x.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    })
}

fn available_wrong_keys(width: usize) -> u128 {
    if width >= 127 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

fn draw_distinct(correct: &Key, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Key>, DatasetError> {
    if count as u128 > available_wrong_keys(correct.width()) {
        return Err(DatasetError::KeyExhaustion { width: correct.width(), requested: count });
    }
    let mut seen: HashSet<Vec<bool>> = HashSet::from([correct.bits.clone()]);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let k = Key::random(correct.width(), rng);
        if seen.insert(k.bits.clone()) {
            out.push(k);
        }
    }
    Ok(out)
}

/// Distinct wrong keys whose distance to the correct key is uniform over
/// `1..=p`, so near-correct keys are not vanishingly rare.
fn draw_by_distance(correct: &Key, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Key>, DatasetError> {
    let p = correct.width();
    if count as u128 > available_wrong_keys(p) {
        return Err(DatasetError::KeyExhaustion { width: p, requested: count });
    }
    let mut seen: HashSet<Vec<bool>> = HashSet::from([correct.bits.clone()]);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let d = rng.random_range(1..=p);
        let mut k = correct.clone();
        for i in rand::seq::index::sample(rng, p, d) {
            k.bits[i] = !k.bits[i];
        }
        if seen.insert(k.bits.clone()) {
            out.push(Key::from_bits(k.bits));
        }
    }
    Ok(out)
}

fn wrong_keys(
    original: &Netlist,
    locked: &LockedCircuit,
    cfg: &DatasetConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Key>, DatasetError> {
    let w = cfg.wrong_keys;
    match cfg.wrong_key_policy {
        WrongKeyPolicy::Uniform => draw_distinct(&locked.correct_key, w, rng),
        WrongKeyPolicy::Stratified => {
            let pool = (8 * w as u128).min(available_wrong_keys(locked.correct_key.width())) as usize;
            let mut scored = draw_by_distance(&locked.correct_key, pool.max(w), rng)?
                .into_iter()
                .map(|k| Ok((sim::error_rate(original, &locked.netlist, &k, cfg.er_mode)?.er, k)))
                .collect::<Result<Vec<_>, DatasetError>>()?;
            scored.sort_by(|a, b| a.0.total_cmp(&b.0));
            if w == 1 {
                return Ok(vec![scored.swap_remove(scored.len() / 2).1]);
            }
            let n = scored.len();
            Ok((0..w).map(|i| scored[i * (n - 1) / (w - 1)].1.clone()).collect())
        }
    }
}

/// Builds the corpus. Recipe seeds are combined with the circuit index, so
/// one recipe list locks every circuit differently but reproducibly.
pub fn build_dataset(
    originals: &[Netlist],
    recipes: &[LockRecipe],
    cfg: &DatasetConfig,
    exec: Exec,
) -> Result<Dataset, DatasetError> {
    if originals.is_empty() || recipes.is_empty() || cfg.variants == 0 {
        return Err(DatasetError::Empty);
    }
    let mut names = HashSet::new();
    for nl in originals {
        if !names.insert(nl.name()) {
            return Err(DatasetError::DuplicateName(nl.name().to_string()));
        }
    }
    let jobs: Vec<(usize, usize)> =
        (0..originals.len()).flat_map(|o| (0..recipes.len()).map(move |r| (o, r))).collect();
    let entries = par::map(exec, &jobs, |&(o, r)| -> Result<Entry, DatasetError> {
        let nl = &originals[o];
        let mut recipe = recipes[r].clone();
        recipe.seed = derive_seed(recipe.seed, &[o as u64]);
        let locked = lock::lock(nl, &recipe).map_err(|source| DatasetError::Lock {
            circuit: nl.name().to_string(),
            scheme: recipe.scheme,
            source,
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[o as u64, r as u64]));
        let mut keys = vec![locked.correct_key.clone()];
        keys.extend(wrong_keys(nl, &locked, cfg, &mut rng)?);
        let mut variants = vec![locked.netlist.clone()];
        for v in 1..cfg.variants {
            let seed = derive_seed(cfg.seed, &[o as u64, r as u64, v as u64]);
            variants.push(resynth::bubble_push(&locked.netlist, seed, cfg.passes).with_name(format!(
                "{}_v{v}",
                locked.netlist.name()
            )));
        }
        Ok(Entry { original: o, locked, variants, keys, split: Split::Train })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let mut cells = Vec::new();
    for (e, entry) in entries.iter().enumerate() {
        for v in 0..entry.variants.len() {
            for k in 0..entry.keys.len() {
                cells.push((e, v, k));
            }
        }
    }
    let ers = par::map(exec, &cells, |&(e, v, k)| {
        let entry = &entries[e];
        sim::error_rate_with(&originals[entry.original], &entry.variants[v], &entry.keys[k], cfg.er_mode, Exec::Sequential)
            .map(|r| r.er)
    });
    let mut rows = Vec::with_capacity(cells.len());
    for (&(e, v, k), er) in cells.iter().zip(ers) {
        let entry = &entries[e];
        rows.push(DatasetRow {
            circuit: entry.dir_name(),
            variant: v,
            scheme: entry.locked.recipe.scheme,
            key_bits: entry.keys[k].to_string(),
            is_correct: k == 0,
            er: er?,
            split: Split::Train,
        });
    }
    debug_assert_eq!(rows.len(), expected_rows(originals.len(), recipes.len(), cfg.wrong_keys, cfg.variants));
    Ok(Dataset { config: cfg.clone(), originals: originals.to_vec(), recipes: recipes.to_vec(), entries, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum SplitPolicy {
    /// Hold out every locked circuit derived from the named originals.
    ByCircuit { holdout: Vec<String> },
    /// Hold out whole locking schemes.
    ByScheme { holdout: Vec<Scheme> },
    /// Hold out a seeded random fraction of locked circuits.
    Random { fraction: f64, seed: u64 },
}

impl Dataset {
    /// Assigns splits per locked circuit, so all variants and keys of one
    /// locked circuit always land on the same side.
    pub fn split(&mut self, policy: &SplitPolicy) -> Result<(), DatasetError> {
        let assign: Vec<Split> = match policy {
            SplitPolicy::ByCircuit { holdout } => self
                .entries
                .iter()
                .map(|e| held(holdout.iter().any(|h| h == self.originals[e.original].name())))
                .collect(),
            SplitPolicy::ByScheme { holdout } => {
                self.entries.iter().map(|e| held(holdout.contains(&e.locked.recipe.scheme))).collect()
            }
            SplitPolicy::Random { fraction, seed } => {
                if !(0.0..=1.0).contains(fraction) {
                    return Err(DatasetError::Fraction(*fraction));
                }
                let n = self.entries.len();
                let take = (fraction * n as f64).round() as usize;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let picked: HashSet<usize> = rand::seq::index::sample(&mut rng, n, take).into_iter().collect();
                (0..n).map(|i| held(picked.contains(&i))).collect()
            }
        };
        for side in [Split::Train, Split::Validation] {
            if !assign.contains(&side) {
                return Err(DatasetError::EmptySplit(side));
            }
        }
        for (entry, &s) in self.entries.iter_mut().zip(&assign) {
            entry.split = s;
        }
        let by_dir: std::collections::HashMap<String, Split> =
            self.entries.iter().map(|e| (e.dir_name(), e.split)).collect();
        for row in &mut self.rows {
            row.split = by_dir[&row.circuit];
        }
        Ok(())
    }

    pub fn entries_in(&self, split: Split) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Rows of one entry, in (variant, key) order.
    pub fn rows_of(&self, entry: usize) -> &[DatasetRow] {
        let per = self.rows.len() / self.entries.len().max(1);
        &self.rows[entry * per..(entry + 1) * per]
    }

    /// Writes `dataset.jsonl`, `manifest.json`, the originals, and one
    /// directory per locked circuit holding its key files and variants.
    pub fn save(&self, dir: &Path) -> Result<(), DatasetError> {
        let orig_dir = dir.join("originals");
        mkdir(&orig_dir)?;
        for nl in &self.originals {
            write(&orig_dir.join(format!("{}.bench", nl.name())), &serialize_bench(nl))?;
        }
        for entry in &self.entries {
            let d = dir.join(entry.dir_name());
            entry.locked.save(&d).map_err(|e| DatasetError::Malformed(e.to_string()))?;
            for (v, nl) in entry.variants.iter().enumerate() {
                write(&d.join(format!("variant_{v}.bench")), &serialize_bench(nl))?;
            }
        }
        let mut jsonl = String::new();
        for row in &self.rows {
            jsonl.push_str(&serde_json::to_string(row).expect("row serializes"));
            jsonl.push('\n');
        }
        write(&dir.join("dataset.jsonl"), &jsonl)?;
        let manifest = Manifest {
            config: self.config.clone(),
            originals: self.originals.iter().map(|n| n.name().to_string()).collect(),
            recipes: self.recipes.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| ManifestEntry {
                    circuit: e.dir_name(),
                    original: self.originals[e.original].name().to_string(),
                    variants: e.variants.len(),
                    keys: e.keys.iter().map(Key::to_string).collect(),
                    split: e.split,
                })
                .collect(),
            rows: self.rows.len(),
        };
        write(&dir.join("manifest.json"), &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))
    }

    pub fn load(dir: &Path) -> Result<Dataset, DatasetError> {
        let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
        let originals = manifest
            .originals
            .iter()
            .map(|name| Ok(parse_bench(&read(&dir.join("originals").join(format!("{name}.bench")))?)?.with_name(name)))
            .collect::<Result<Vec<_>, DatasetError>>()?;
        let mut entries = Vec::new();
        for m in &manifest.entries {
            let d = dir.join(&m.circuit);
            let locked = LockedCircuit::load(&d).map_err(|e| DatasetError::Malformed(e.to_string()))?;
            let original = manifest
                .originals
                .iter()
                .position(|n| *n == m.original)
                .ok_or_else(|| DatasetError::Malformed(format!("unknown original `{}`", m.original)))?;
            let mut variants = vec![locked.netlist.clone()];
            for v in 1..m.variants {
                let text = read(&d.join(format!("variant_{v}.bench")))?;
                variants.push(parse_bench(&text)?.with_name(format!("{}_v{v}", locked.netlist.name())));
            }
            let keys = m
                .keys
                .iter()
                .map(|k| k.parse().map_err(|e: crate::netlist::KeyError| DatasetError::Malformed(e.to_string())))
                .collect::<Result<Vec<Key>, _>>()?;
            entries.push(Entry { original, locked, variants, keys, split: m.split });
        }
        let text = read(&dir.join("dataset.jsonl"))?;
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l)
                    .map_err(|source| DatasetError::Json { path: dir.join("dataset.jsonl").display().to_string(), source })
            })
            .collect::<Result<Vec<DatasetRow>, _>>()?;
        if rows.len() != manifest.rows {
            return Err(DatasetError::Malformed(format!("{} rows, manifest says {}", rows.len(), manifest.rows)));
        }
        Ok(Dataset { config: manifest.config, originals, recipes: manifest.recipes, entries, rows })
    }
}

fn held(h: bool) -> Split {
    if h {
        Split::Validation
    } else {
        Split::Train
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: DatasetConfig,
    originals: Vec<String>,
    recipes: Vec<LockRecipe>,
    entries: Vec<ManifestEntry>,
    rows: usize,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    circuit: String,
    original: String,
    variants: usize,
    keys: Vec<String>,
    split: Split,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError {
    let path: PathBuf = path.to_path_buf();
    move |source| DatasetError::Io { path: path.display().to_string(), source }
}

fn mkdir(path: &Path) -> Result<(), DatasetError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn write(path: &Path, text: &str) -> Result<(), DatasetError> {
    fs::write(path, text).map_err(io_err(path))
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, DatasetError> {
    serde_json::from_str(&read(path)?).map_err(|source| DatasetError::Json { path: path.display().to_string(), source })
}

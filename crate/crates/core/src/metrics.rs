// SPDX-License-Identifier: Apache-2.0

//! Key-recovery metrics and report tables.
//!
//! Prediction accuracy counts matching key bits; key precision measures how
//! closely the reported key reproduces the original function. The two can
//! diverge arbitrarily: one wrong bit on an output XOR gives (p-1)/p bit
//! accuracy with zero precision.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{Key, Netlist};
use crate::sim::{self, ErMode, SimError};

/// Sample counts of the key-precision columns.
pub const SAMPLE_SIZES: [usize; 3] = [5, 10, 50];

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("key widths differ: {0} vs {1}")]
    Width(usize, usize),
    #[error("no results to report")]
    Empty,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn hamming_distance(a: &Key, b: &Key) -> Result<usize, MetricsError> {
    if a.width() != b.width() {
        return Err(MetricsError::Width(a.width(), b.width()));
    }
    Ok(a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count())
}

/// `100 * (1 - HD / p)`.
pub fn prediction_accuracy(reported: &Key, correct: &Key) -> Result<f64, MetricsError> {
    let hd = hamming_distance(reported, correct)?;
    if correct.width() == 0 {
        return Ok(100.0);
    }
    Ok(100.0 * (1.0 - hd as f64 / correct.width() as f64))
}

/// `100 * (1 - ER(reported))`.
pub fn key_precision(original: &Netlist, locked: &Netlist, reported: &Key, mode: ErMode) -> Result<f64, MetricsError> {
    Ok(100.0 * (1.0 - sim::error_rate(original, locked, reported, mode)?.er))
}

/// One attacked circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub scheme_set: String,
    pub circuit: String,
    pub prediction_accuracy: f64,
    pub key_precision: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub scheme_set: String,
    pub records: usize,
    pub prediction_accuracy: f64,
    pub key_precision_5: f64,
    pub key_precision_10: f64,
    pub key_precision_50: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportTable {
    pub rows: Vec<TableRow>,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean key precision over `n` records drawn without replacement (all of
/// them when fewer are available).
pub fn sampled_key_precision(records: &[&AttackRecord], n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = n.min(records.len());
    let mut picks = index::sample(&mut rng, records.len(), take).into_vec();
    picks.sort_unstable();
    mean(picks.into_iter().map(|i| records[i].key_precision))
}

/// Groups records by scheme set (in order of first appearance) and reports
/// mean prediction accuracy plus key precision over 5, 10 and 50 sampled
/// records.
pub fn report_table(results: &[AttackRecord], seed: u64) -> Result<ReportTable, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut groups: Vec<&str> = Vec::new();
    for r in results {
        if !groups.contains(&r.scheme_set.as_str()) {
            groups.push(&r.scheme_set);
        }
    }
    let rows = groups
        .into_iter()
        .map(|g| {
            let members: Vec<&AttackRecord> = results.iter().filter(|r| r.scheme_set == g).collect();
            let kp = |n| sampled_key_precision(&members, n, seed);
            TableRow {
                scheme_set: g.to_string(),
                records: members.len(),
                prediction_accuracy: mean(members.iter().map(|r| r.prediction_accuracy)),
                key_precision_5: kp(SAMPLE_SIZES[0]),
                key_precision_10: kp(SAMPLE_SIZES[1]),
                key_precision_50: kp(SAMPLE_SIZES[2]),
            }
        })
        .collect();
    Ok(ReportTable { rows })
}

impl ReportTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).unwrap()
    }

    pub fn from_csv(text: &str) -> Result<ReportTable, MetricsError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r.deserialize().collect::<Result<Vec<TableRow>, _>>()?;
        Ok(ReportTable { rows })
    }

    pub fn to_text(&self) -> String {
        let header = ["scheme set", "records", "pred. acc. %", "key prec. %@5", "key prec. %@10", "key prec. %@50"];
        let cells: Vec<[String; 6]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.scheme_set.clone(),
                    r.records.to_string(),
                    format!("{:.2}", r.prediction_accuracy),
                    format!("{:.2}", r.key_precision_5),
                    format!("{:.2}", r.key_precision_10),
                    format!("{:.2}", r.key_precision_50),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: &[&str]| {
            for (i, (c, w)) in row.iter().zip(widths).enumerate() {
                if i == 0 {
                    out.push_str(&format!("{c:<w$}"));
                } else {
                    out.push_str(&format!("  {c:>w$}"));
                }
            }
            out.push('\n');
        };
        line(&mut out, &header);
        line(&mut out, &widths.map(|w| "-".repeat(w)).iter().map(String::as_str).collect::<Vec<_>>());
        for row in &cells {
            line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lock::{lock_xor_with, Polarity};
    use crate::netlist::{parse_bench, GateKind};

    #[test]
    fn hamming_basics() {
        let k: Key = "0110".parse().unwrap();
        assert_eq!(hamming_distance(&k, &k).unwrap(), 0);
        assert_eq!(hamming_distance(&k, &k.complement()).unwrap(), 4);
        assert!(matches!(hamming_distance(&k, &"01".parse().unwrap()), Err(MetricsError::Width(4, 2))));
    }

    #[test]
    fn accuracy_arithmetic() {
        let correct = Key::zeros(10);
        let mut reported = correct.clone();
        reported.bits[0] = true;
        reported.bits[5] = true;
        assert_eq!(prediction_accuracy(&reported, &correct).unwrap(), 80.0);
        assert_eq!(prediction_accuracy(&correct, &correct).unwrap(), 100.0);
    }

    #[test]
    fn random_guessing_is_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 1000;
        let total: f64 = (0..trials)
            .map(|_| prediction_accuracy(&Key::random(64, &mut rng), &Key::random(64, &mut rng)).unwrap())
            .sum();
        let m = total / trials as f64;
        assert!((m - 50.0).abs() <= 4.0, "{m}");
    }

    /// One wrong bit on the output key gate, `p - 1` correct bits elsewhere.
    #[test]
    fn accuracy_and_precision_diverge() {
        let nl = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)").unwrap();
        let mut e = nl.edit();
        let p = 8;
        let mut keys = Vec::new();
        for i in 0..p {
            keys.push(e.add_key_input(format!("keyinput{i}")).unwrap());
        }
        let y = e.outputs()[0];
        let mut wire = y;
        for &k in &keys {
            let g = e.add_fresh("kg", GateKind::Xor, vec![wire, k]);
            e.redirect(wire, g, &[g]);
            wire = g;
        }
        let locked = e.build().unwrap();
        let correct = Key::zeros(p);
        let reported = correct.flipped(p - 1);
        assert_eq!(hamming_distance(&reported, &correct).unwrap(), 1);
        assert_eq!(prediction_accuracy(&reported, &correct).unwrap(), 100.0 * (p - 1) as f64 / p as f64);
        assert_eq!(key_precision(&nl, &locked, &reported, ErMode::exhaustive()).unwrap(), 0.0);
        assert_eq!(key_precision(&nl, &locked, &correct, ErMode::exhaustive()).unwrap(), 100.0);
        let lc = lock_xor_with(&nl, 1, 0, Polarity::Xor).unwrap();
        assert_eq!(key_precision(&nl, &lc.netlist, &lc.correct_key.flipped(0), ErMode::exhaustive()).unwrap(), 0.0);
    }

    fn records() -> Vec<AttackRecord> {
        (0..60)
            .map(|i| AttackRecord {
                scheme_set: if i % 3 == 0 { "xor+mux".into() } else { "xor".into() },
                circuit: format!("c{i}"),
                prediction_accuracy: 50.0 + (i % 7) as f64,
                key_precision: 60.0 + (i * 13 % 37) as f64 * 0.5,
            })
            .collect()
    }

    #[test]
    fn table_groups_and_round_trips() {
        let t = report_table(&records(), 1).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].scheme_set, "xor+mux");
        assert_eq!(t.rows[0].records, 20);
        assert_eq!(ReportTable::from_csv(&t.to_csv()).unwrap(), t);
        assert!(t.to_text().lines().count() == 4);
        let single = report_table(&records()[..1], 1).unwrap();
        assert_eq!(single.rows.len(), 1);
        assert!(matches!(report_table(&[], 0), Err(MetricsError::Empty)));
    }

    /// The 50-sample column of a group with 40 members is the mean over all of them.
    #[test]
    fn fifty_sample_mean_recomputed() {
        let recs = records();
        let t = report_table(&recs, 9).unwrap();
        let xor: Vec<f64> = recs.iter().filter(|r| r.scheme_set == "xor").map(|r| r.key_precision).collect();
        let expect = xor.iter().sum::<f64>() / xor.len() as f64;
        assert!((t.rows[1].key_precision_50 - expect).abs() < 1e-12);
    }
}

// SPDX-License-Identifier: Apache-2.0

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GinModel, GnnError, LossWeights, Sample, Target};
use crate::dataset::{derive_seed, Dataset, Entry, Split};
use crate::graph::{key_bit_subgraph, to_graph, FeatureMap};
use crate::par::{self, Exec};
use crate::resynth::xor_xnor_complement;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Epochs over which the rate climbs linearly from `lr_start` to `lr_peak`.
    pub warm_epochs: usize,
    pub lr_start: f64,
    pub lr_peak: f64,
    pub patience: usize,
    pub loss_ceiling: f64,
    pub batch_size: usize,
    pub loss_weights: LossWeights,
    /// Global L2 norm above which a batch gradient is rescaled; 0 disables.
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 200,
            warm_epochs: 100,
            lr_start: 0.001,
            lr_peak: 0.01,
            patience: 5,
            loss_ceiling: 1.0,
            batch_size: 32,
            loss_weights: LossWeights::default(),
            clip_norm: 1.0,
            seed: 0,
        }
    }
}

/// Learning rate of 1-based `epoch`.
pub fn learning_rate(cfg: &TrainConfig, epoch: usize) -> f64 {
    if epoch >= cfg.warm_epochs || cfg.warm_epochs <= 1 {
        return cfg.lr_peak;
    }
    let t = (epoch.max(1) - 1) as f64 / (cfg.warm_epochs - 1) as f64;
    cfg.lr_start + t * (cfg.lr_peak - cfg.lr_start)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    LossCeiling,
    MaxEpochs,
}

/// Stops after `patience` consecutive epochs without a strictly better
/// accuracy, or when the loss rises to the ceiling.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopper {
    pub patience: usize,
    pub ceiling: f64,
    pub best: f64,
    pub stale: usize,
    last_loss: Option<f64>,
}

impl EarlyStopper {
    pub fn new(patience: usize, ceiling: f64) -> Self {
        EarlyStopper { patience, ceiling, best: f64::NEG_INFINITY, stale: 0, last_loss: None }
    }

    /// Records one epoch. Returns whether this epoch set a new best, and
    /// the stop reason if training should end here.
    pub fn observe(&mut self, accuracy: f64, loss: f64) -> (bool, Option<StopReason>) {
        let improved = accuracy > self.best;
        if improved {
            self.best = accuracy;
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        let rising = self.last_loss.is_some_and(|l| loss > l);
        self.last_loss = Some(loss);
        if loss >= self.ceiling && rising {
            return (improved, Some(StopReason::LossCeiling));
        }
        if self.stale >= self.patience {
            return (improved, Some(StopReason::Patience));
        }
        (improved, None)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
    pub key_acc: f64,
    pub er_mse: f64,
    pub val_key_acc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub stop: StopReason,
    pub best_epoch: usize,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.epochs {
            w.serialize(r).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).unwrap()
    }

    pub fn to_json_lines(&self) -> String {
        self.epochs.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
    }
}

/// Which samples to derive from a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSpec {
    pub hops: usize,
    /// Keyed whole-graph samples for the error-rate head.
    pub er_samples: bool,
    /// Also add error-rate samples of the XOR/XNOR-complemented locked
    /// circuit under complemented keys, which keep their error rate.
    /// Skipped for entries whose key gates are not XOR-family.
    pub complemented: bool,
}

/// Key-bit subgraphs of variant 0 labeled with the correct key, plus keyed
/// whole graphs of every variant labeled with their error rate.
pub fn samples_for_entry(
    ds: &Dataset,
    entry: usize,
    fmap: &FeatureMap,
    spec: &SampleSpec,
) -> Result<Vec<Sample>, GnnError> {
    let e: &Entry = &ds.entries[entry];
    let nl = &e.variants[0];
    let mut out = Vec::new();
    for i in 0..nl.p() {
        let g = key_bit_subgraph(nl, i, spec.hops, fmap, Some(&e.locked.correct_key))?;
        out.push(Sample::key(g, e.locked.correct_key.bits[i])?);
    }
    if spec.er_samples {
        let rows = ds.rows_of(entry);
        for (v, variant) in e.variants.iter().enumerate() {
            for (k, key) in e.keys.iter().enumerate() {
                let row = &rows[v * e.keys.len() + k];
                out.push(Sample::er(to_graph(variant, fmap, Some(key))?, row.er));
            }
        }
        if spec.complemented {
            if let Ok(c) = xor_xnor_complement(&e.locked) {
                for (k, key) in e.keys.iter().enumerate() {
                    out.push(Sample::er(to_graph(&c.netlist, fmap, Some(&key.complement()))?, rows[k].er));
                }
            }
        }
    }
    Ok(out)
}

pub fn samples_from_dataset(
    ds: &Dataset,
    fmap: &FeatureMap,
    spec: &SampleSpec,
    split: Split,
    exec: Exec,
) -> Result<Vec<Sample>, GnnError> {
    let idx: Vec<usize> = (0..ds.entries.len()).filter(|&i| ds.entries[i].split == split).collect();
    let parts = par::map(exec, &idx, |&i| samples_for_entry(ds, i, fmap, spec));
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

struct Scores {
    key_acc: f64,
    er_mse: f64,
    er_mae: f64,
    has_key: bool,
    has_er: bool,
}

impl Scores {
    /// Mean of key accuracy and `1 - MAE` over the heads that have samples.
    fn watermark(&self) -> Option<f64> {
        match (self.has_key, self.has_er) {
            (true, true) => Some(0.5 * (self.key_acc + 1.0 - self.er_mae)),
            (true, false) => Some(self.key_acc),
            (false, true) => Some(1.0 - self.er_mae),
            (false, false) => None,
        }
    }
}

fn score(model: &GinModel, samples: &[Sample], exec: Exec) -> Result<Scores, GnnError> {
    let outs = par::map(exec, samples, |s| model.forward(&s.graph));
    let (mut hit, mut nk, mut se, mut ae, mut ne) = (0usize, 0usize, 0.0, 0.0, 0usize);
    for (s, o) in samples.iter().zip(outs) {
        let o = o?;
        match s.target {
            Target::KeyBit(b) => {
                nk += 1;
                hit += (o.key_bit() == b) as usize;
            }
            Target::Er(er) => {
                ne += 1;
                se += (o.er_pred - er).powi(2);
                ae += (o.er_pred - er).abs();
            }
        }
    }
    Ok(Scores {
        key_acc: if nk == 0 { 0.0 } else { hit as f64 / nk as f64 },
        er_mse: if ne == 0 { 0.0 } else { se / ne as f64 },
        er_mae: if ne == 0 { 0.0 } else { ae / ne as f64 },
        has_key: nk > 0,
        has_er: ne > 0,
    })
}

fn clip(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

/// Minibatch Adam training with the warm-up schedule and early stopping.
/// The watermark averages key accuracy and `1 - MAE` of the error-rate head
/// on the validation samples, falling back to the training samples when
/// there are none. The parameters of the best epoch are restored at the end.
pub fn train(
    model: &mut GinModel,
    train: &[Sample],
    validation: &[Sample],
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<History, GnnError> {
    if train.is_empty() {
        return Err(GnnError::EmptyTrain);
    }
    let mut adam = Adam::new(model.params.len());
    let mut stopper = EarlyStopper::new(cfg.patience, cfg.loss_ceiling);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best = model.params.clone();
    let mut best_epoch = 0;
    let mut epochs = Vec::new();
    let mut stop = StopReason::MaxEpochs;
    for epoch in 1..=cfg.max_epochs {
        let lr = learning_rate(cfg, epoch);
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[epoch as u64])));
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &train[i]).collect();
            let (loss, mut grad) = model.batch_grad(&batch, cfg.loss_weights, exec)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(GnnError::NonFinite);
            }
            clip(&mut grad, cfg.clip_norm);
            loss_sum += loss * batch.len() as f64;
            adam.step(&mut model.params, &grad, lr);
        }
        let loss = loss_sum / train.len() as f64;
        let tr = score(model, train, exec)?;
        let va = if validation.is_empty() { None } else { Some(score(model, validation, exec)?) };
        let val_key_acc = va.as_ref().filter(|s| s.has_key).map(|s| s.key_acc);
        let watermark = va.as_ref().and_then(Scores::watermark).or(tr.watermark()).unwrap_or(-loss);
        epochs.push(EpochRecord { epoch, lr, loss, key_acc: tr.key_acc, er_mse: tr.er_mse, val_key_acc });
        let (improved, reason) = stopper.observe(watermark, loss);
        if improved {
            best.clone_from(&model.params);
            best_epoch = epoch;
        }
        if let Some(r) = reason {
            stop = r;
            break;
        }
    }
    model.params = best;
    model.trained = true;
    Ok(History { epochs, stop, best_epoch })
}

// SPDX-License-Identifier: Apache-2.0

//! Graph isomorphism network with a key-bit head and an error-rate head.
//!
//! Layer `l` computes `H' = f(f(((1 + eps) H + A_w H) W1 + b1) W2 + b2)`
//! with `f` the leaky rectifier of slope 0.01 and `A_w` the weighted
//! undirected adjacency. Every edge has weight 1 unless a caller supplies
//! weights (the explainer does), and gradients flow to those weights too.
//!
//! All parameters live in one flat vector; [`Layout`] maps it to tensors.

mod attack;
mod train;

use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CircuitGraph, FeatureMap, GraphError, KindClass, DEFAULT_HOPS, FEATURES};
use crate::par::{self, Exec};

pub use attack::{attack, AttackMode, AttackReport};
pub use train::{
    learning_rate, samples_for_entry, samples_from_dataset, train, Adam, EarlyStopper, EpochRecord, History,
    SampleSpec, StopReason, TrainConfig,
};

pub const DEFAULT_HIDDEN: usize = 32;
pub const DEFAULT_LAYERS: usize = 3;
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("feature width {got}, model expects {expected}")]
    Shape { expected: usize, got: usize },
    #[error("key-bit sample without a center node")]
    MissingCenter,
    #[error("{0} edge weights for {1} edges")]
    EdgeWeights(usize, usize),
    #[error("non-finite loss")]
    NonFinite,
    #[error("training split has no samples")]
    EmptyTrain,
    #[error("model is untrained")]
    Untrained,
    #[error("no key gates found in `{0}`")]
    NoKeyGates(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    Sum,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub hidden: usize,
    pub layers: usize,
    pub readout: Readout,
    /// Pool the concatenation of every layer's output instead of the last.
    pub concat: bool,
    /// Subgraph radius used when building key-bit samples.
    pub hops: usize,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            hidden: DEFAULT_HIDDEN,
            layers: DEFAULT_LAYERS,
            readout: Readout::Sum,
            concat: false,
            hops: DEFAULT_HOPS,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct LayerSlots {
    eps: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    d_in: usize,
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    layers: Vec<LayerSlots>,
    hidden: usize,
    rep: usize,
    key_w: usize,
    key_b: usize,
    er_w: usize,
    er_b: usize,
    total: usize,
}

impl Layout {
    pub fn new(h: &Hyper) -> Layout {
        let mut off = 0;
        let mut layers = Vec::with_capacity(h.layers);
        for l in 0..h.layers {
            let d_in = if l == 0 { FEATURES } else { h.hidden };
            let eps = off;
            let w1 = eps + 1;
            let b1 = w1 + d_in * h.hidden;
            let w2 = b1 + h.hidden;
            let b2 = w2 + h.hidden * h.hidden;
            off = b2 + h.hidden;
            layers.push(LayerSlots { eps, w1, b1, w2, b2, d_in });
        }
        let rep = if h.concat { h.hidden * h.layers } else { h.hidden };
        let key_w = off;
        let key_b = key_w + rep * 2;
        let er_w = key_b + 2;
        let er_b = er_w + rep;
        Layout { layers, hidden: h.hidden, rep, key_w, key_b, er_w, er_b, total: er_b + 1 }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

fn view2(p: &[f64], off: usize, r: usize, c: usize) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((r, c), &p[off..off + r * c]).unwrap()
}

fn view1(p: &[f64], off: usize, n: usize) -> ArrayView1<'_, f64> {
    ArrayView1::from(&p[off..off + n])
}

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn leaky_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weighted neighbour sum `A_w H` over undirected `edges`.
pub fn aggregate(h: &ArrayView2<f64>, edges: &[(usize, usize)], weights: &[f64]) -> Array2<f64> {
    let mut out = Array2::zeros(h.raw_dim());
    for (&(a, b), &w) in edges.iter().zip(weights) {
        out.row_mut(a).scaled_add(w, &h.row(b));
        out.row_mut(b).scaled_add(w, &h.row(a));
    }
    out
}

/// Parameters of one layer, borrowed.
pub struct LayerRef<'a> {
    pub eps: f64,
    pub w1: ArrayView2<'a, f64>,
    pub b1: ArrayView1<'a, f64>,
    pub w2: ArrayView2<'a, f64>,
    pub b2: ArrayView1<'a, f64>,
}

struct LayerCache {
    h_in: Array2<f64>,
    z: Array2<f64>,
    u: Array2<f64>,
    a: Array2<f64>,
    v: Array2<f64>,
}

fn layer_forward(h: Array2<f64>, edges: &[(usize, usize)], weights: &[f64], p: &LayerRef) -> (Array2<f64>, LayerCache) {
    let mut z = aggregate(&h.view(), edges, weights);
    z.scaled_add(1.0 + p.eps, &h);
    let u = z.dot(&p.w1) + &p.b1;
    let a = u.mapv(leaky);
    let v = a.dot(&p.w2) + &p.b2;
    let out = v.mapv(leaky);
    (out, LayerCache { h_in: h, z, u, a, v })
}

/// One aggregate-and-combine step.
pub fn gin_layer(h: &Array2<f64>, edges: &[(usize, usize)], weights: &[f64], layer: &LayerRef) -> Array2<f64> {
    layer_forward(h.clone(), edges, weights, layer).0
}

/// Pools node rows into one graph row.
pub fn readout(h: &ArrayView2<f64>, kind: Readout) -> Result<Array1<f64>, GnnError> {
    if h.nrows() == 0 {
        return Err(GnnError::EmptyGraph);
    }
    Ok(match kind {
        Readout::Sum => h.sum_axis(Axis(0)),
        Readout::Mean => h.mean_axis(Axis(0)).unwrap(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Output {
    pub key_logits: [f64; 2],
    pub er_pred: f64,
}

impl Output {
    /// Probability of key bit 1.
    pub fn key_prob(&self) -> f64 {
        softmax(self.key_logits)[1]
    }

    pub fn key_bit(&self) -> bool {
        self.key_logits[1] > self.key_logits[0]
    }
}

pub fn softmax(l: [f64; 2]) -> [f64; 2] {
    let m = l[0].max(l[1]);
    let e = [(l[0] - m).exp(), (l[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

/// Everything the backward pass needs.
pub struct Cache {
    layers: Vec<LayerCache>,
    key_rep: Array1<f64>,
    graph_rep: Array1<f64>,
    er_pred: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    pub params: Vec<f64>,
    pub edges: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    KeyBit(bool),
    Er(f64),
}

/// A graph with one supervised label.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub graph: CircuitGraph,
    pub target: Target,
}

impl Sample {
    pub fn key(graph: CircuitGraph, bit: bool) -> Result<Sample, GnnError> {
        if graph.center.is_none() {
            return Err(GnnError::MissingCenter);
        }
        Ok(Sample { graph, target: Target::KeyBit(bit) })
    }

    pub fn er(graph: CircuitGraph, er: f64) -> Sample {
        Sample { graph, target: Target::Er(er) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub key: f64,
    pub er: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { key: 1.0, er: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GinModel {
    pub hyper: Hyper,
    pub fmap: FeatureMap,
    pub params: Vec<f64>,
    pub trained: bool,
}

impl GinModel {
    /// Uniform initialization in `+-1/sqrt(fan_in)` per affine map, `eps = 0`.
    pub fn new(hyper: Hyper, fmap: FeatureMap) -> GinModel {
        let layout = Layout::new(&hyper);
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let mut params = vec![0.0; layout.len()];
        let mut fill = |params: &mut [f64], off: usize, n: usize, fan_in: usize| {
            let r = 1.0 / (fan_in as f64).sqrt();
            for x in &mut params[off..off + n] {
                *x = rng.random_range(-r..r);
            }
        };
        for l in &layout.layers {
            fill(&mut params, l.w1, l.d_in * hyper.hidden, l.d_in);
            fill(&mut params, l.b1, hyper.hidden, l.d_in);
            fill(&mut params, l.w2, hyper.hidden * hyper.hidden, hyper.hidden);
            fill(&mut params, l.b2, hyper.hidden, hyper.hidden);
        }
        fill(&mut params, layout.key_w, layout.rep * 2, layout.rep);
        fill(&mut params, layout.key_b, 2, layout.rep);
        fill(&mut params, layout.er_w, layout.rep, layout.rep);
        fill(&mut params, layout.er_b, 1, layout.rep);
        GinModel { hyper, fmap, params, trained: false }
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.hyper)
    }

    pub fn layer(&self, l: usize) -> LayerRef<'_> {
        let layout = self.layout();
        let s = &layout.layers[l];
        let h = self.hyper.hidden;
        LayerRef {
            eps: self.params[s.eps],
            w1: view2(&self.params, s.w1, s.d_in, h),
            b1: view1(&self.params, s.b1, h),
            w2: view2(&self.params, s.w2, h, h),
            b2: view1(&self.params, s.b2, h),
        }
    }

    pub fn forward(&self, g: &CircuitGraph) -> Result<Output, GnnError> {
        let w = vec![1.0; g.edges.len()];
        Ok(self.forward_cached(g, &w)?.0)
    }

    pub fn forward_weighted(&self, g: &CircuitGraph, weights: &[f64]) -> Result<Output, GnnError> {
        Ok(self.forward_cached(g, weights)?.0)
    }

    fn rep_row(&self, outs: &[Array2<f64>], v: usize) -> Array1<f64> {
        let src: &[Array2<f64>] = if self.hyper.concat { outs } else { &outs[outs.len() - 1..] };
        let mut r = Array1::zeros(src.len() * self.hyper.hidden);
        for (i, h) in src.iter().enumerate() {
            r.slice_mut(s![i * self.hyper.hidden..(i + 1) * self.hyper.hidden]).assign(&h.row(v));
        }
        r
    }

    pub fn forward_cached(&self, g: &CircuitGraph, weights: &[f64]) -> Result<(Output, Cache), GnnError> {
        let n = g.num_nodes();
        if n == 0 {
            return Err(GnnError::EmptyGraph);
        }
        if g.features.ncols() != FEATURES {
            return Err(GnnError::Shape { expected: FEATURES, got: g.features.ncols() });
        }
        if weights.len() != g.edges.len() {
            return Err(GnnError::EdgeWeights(weights.len(), g.edges.len()));
        }
        let layout = self.layout();
        let mut h = g.features.clone();
        let mut layers = Vec::with_capacity(self.hyper.layers);
        let mut outs = Vec::with_capacity(self.hyper.layers);
        for l in 0..self.hyper.layers {
            let (out, cache) = layer_forward(h, &g.edges, weights, &self.layer(l));
            layers.push(cache);
            outs.push(out.clone());
            h = out;
        }
        let pooled: Vec<Array1<f64>> = if self.hyper.concat { outs.iter().collect::<Vec<_>>() } else { vec![&outs[outs.len() - 1]] }
            .into_iter()
            .map(|o| readout(&o.view(), self.hyper.readout))
            .collect::<Result<_, _>>()?;
        let mut graph_rep = Array1::zeros(layout.rep);
        for (i, p) in pooled.iter().enumerate() {
            graph_rep.slice_mut(s![i * self.hyper.hidden..(i + 1) * self.hyper.hidden]).assign(p);
        }
        let key_rep = match g.center {
            Some(c) => self.rep_row(&outs, c),
            None => graph_rep.clone(),
        };
        let kw = view2(&self.params, layout.key_w, layout.rep, 2);
        let kb = view1(&self.params, layout.key_b, 2);
        let logits = key_rep.dot(&kw) + kb;
        let er_logit = graph_rep.dot(&view1(&self.params, layout.er_w, layout.rep)) + self.params[layout.er_b];
        let er_pred = sigmoid(er_logit);
        let out = Output { key_logits: [logits[0], logits[1]], er_pred };
        Ok((out, Cache { layers, key_rep, graph_rep, er_pred }))
    }

    /// Reverse pass for upstream gradients on the key logits and on the
    /// error-rate prediction.
    pub fn backward(&self, g: &CircuitGraph, weights: &[f64], cache: &Cache, d_logits: [f64; 2], d_er: f64) -> Grads {
        let layout = self.layout();
        let hd = self.hyper.hidden;
        let n = g.num_nodes();
        let mut gp = vec![0.0; layout.len()];
        let mut ge = vec![0.0; g.edges.len()];

        // Heads.
        let d_logits = Array1::from(d_logits.to_vec());
        for i in 0..layout.rep {
            for c in 0..2 {
                gp[layout.key_w + i * 2 + c] += cache.key_rep[i] * d_logits[c];
            }
        }
        gp[layout.key_b] += d_logits[0];
        gp[layout.key_b + 1] += d_logits[1];
        let d_key_rep = view2(&self.params, layout.key_w, layout.rep, 2).dot(&d_logits);
        let d_er_logit = d_er * cache.er_pred * (1.0 - cache.er_pred);
        for i in 0..layout.rep {
            gp[layout.er_w + i] += cache.graph_rep[i] * d_er_logit;
        }
        gp[layout.er_b] += d_er_logit;
        let mut d_graph_rep = view1(&self.params, layout.er_w, layout.rep).to_owned() * d_er_logit;
        if g.center.is_none() {
            d_graph_rep += &d_key_rep;
        }

        // Readout into per-layer output gradients.
        let first = if self.hyper.concat { 0 } else { self.hyper.layers - 1 };
        let scale = match self.hyper.readout {
            Readout::Sum => 1.0,
            Readout::Mean => 1.0 / n as f64,
        };
        let mut d_outs: Vec<Array2<f64>> = (0..self.hyper.layers).map(|_| Array2::zeros((n, hd))).collect();
        for (slot, l) in (first..self.hyper.layers).enumerate() {
            let seg = d_graph_rep.slice(s![slot * hd..(slot + 1) * hd]).to_owned() * scale;
            for mut row in d_outs[l].rows_mut() {
                row += &seg;
            }
            if let Some(c) = g.center {
                let seg = d_key_rep.slice(s![slot * hd..(slot + 1) * hd]);
                let mut row = d_outs[l].row_mut(c);
                row += &seg;
            }
        }

        // Layers, last to first.
        for l in (0..self.hyper.layers).rev() {
            let s = &layout.layers[l];
            let p = self.layer(l);
            let c = &cache.layers[l];
            let dv = &d_outs[l] * &c.v.mapv(leaky_grad);
            acc2(&mut gp, s.w2, &c.a.t().dot(&dv));
            acc1(&mut gp, s.b2, &dv.sum_axis(Axis(0)));
            let da = dv.dot(&p.w2.t());
            let du = da * c.u.mapv(leaky_grad);
            acc2(&mut gp, s.w1, &c.z.t().dot(&du));
            acc1(&mut gp, s.b1, &du.sum_axis(Axis(0)));
            let dz = du.dot(&p.w1.t());
            gp[s.eps] += (&dz * &c.h_in).sum();
            for (e, &(a, b)) in g.edges.iter().enumerate() {
                ge[e] += dz.row(a).dot(&c.h_in.row(b)) + dz.row(b).dot(&c.h_in.row(a));
            }
            if l > 0 {
                let mut dh = aggregate(&dz.view(), &g.edges, weights);
                dh.scaled_add(1.0 + p.eps, &dz);
                d_outs[l - 1] += &dh;
            }
        }
        Grads { params: gp, edges: ge }
    }

    /// Weighted loss of one sample and its parameter gradient.
    pub fn sample_grad(&self, s: &Sample, w: LossWeights) -> Result<(f64, Vec<f64>), GnnError> {
        let ones = vec![1.0; s.graph.edges.len()];
        let (out, cache) = self.forward_cached(&s.graph, &ones)?;
        let (loss, d_logits, d_er) = sample_loss(&out, s.target, w);
        if !loss.is_finite() {
            return Err(GnnError::NonFinite);
        }
        Ok((loss, self.backward(&s.graph, &ones, &cache, d_logits, d_er).params))
    }

    /// Mean loss and mean gradient over a batch. Per-sample work may run in
    /// parallel; the reduction always sums in sample order.
    pub fn batch_grad(&self, batch: &[&Sample], w: LossWeights, exec: Exec) -> Result<(f64, Vec<f64>), GnnError> {
        let parts = par::map(exec, batch, |s| self.sample_grad(s, w));
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.params.len()];
        for part in parts {
            let (l, g) = part?;
            loss += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        let k = batch.len().max(1) as f64;
        grad.iter_mut().for_each(|x| *x /= k);
        Ok((loss / k, grad))
    }

    pub fn batch_loss(&self, batch: &[&Sample], w: LossWeights) -> Result<f64, GnnError> {
        let mut total = 0.0;
        for s in batch {
            let out = self.forward(&s.graph)?;
            total += sample_loss(&out, s.target, w).0;
        }
        Ok(total / batch.len().max(1) as f64)
    }
}

/// `(loss, d loss / d logits, d loss / d er_pred)` for one sample.
pub fn sample_loss(out: &Output, target: Target, w: LossWeights) -> (f64, [f64; 2], f64) {
    match target {
        Target::KeyBit(bit) => {
            let p = softmax(out.key_logits);
            let y = bit as usize;
            let mut d = [w.key * p[0], w.key * p[1]];
            d[y] -= w.key;
            (-w.key * p[y].max(f64::MIN_POSITIVE).ln(), d, 0.0)
        }
        Target::Er(er) => {
            let diff = out.er_pred - er;
            (w.er * diff * diff, [0.0; 2], 2.0 * w.er * diff)
        }
    }
}

fn acc2(g: &mut [f64], off: usize, m: &Array2<f64>) {
    for (x, v) in g[off..off + m.len()].iter_mut().zip(m.iter()) {
        *x += v;
    }
}

fn acc1(g: &mut [f64], off: usize, m: &Array1<f64>) {
    for (x, v) in g[off..off + m.len()].iter_mut().zip(m.iter()) {
        *x += v;
    }
}

const MAGIC: &[u8; 4] = b"LBGN";
const VERSION: u32 = 1;

/// Checkpoint layout, all integers and floats little-endian:
///
/// ```text
/// magic "LBGN" | u32 version | u32 hidden | u32 layers | u8 readout (0 sum, 1 mean)
/// | u8 concat | u32 hops | u64 seed | u8 trained | 12 x u8 feature columns (255 = none)
/// | u8 feature policy (0 default, 1 random, 2 by count) | u64 policy seed
/// | u64 parameter count | f64 parameters
/// ```
impl GinModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(64 + 8 * self.params.len());
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&(self.hyper.hidden as u32).to_le_bytes());
        b.extend_from_slice(&(self.hyper.layers as u32).to_le_bytes());
        b.push(match self.hyper.readout {
            Readout::Sum => 0,
            Readout::Mean => 1,
        });
        b.push(self.hyper.concat as u8);
        b.extend_from_slice(&(self.hyper.hops as u32).to_le_bytes());
        b.extend_from_slice(&self.hyper.seed.to_le_bytes());
        b.push(self.trained as u8);
        for k in KindClass::ALL {
            b.push(self.fmap.column(k).map(|c| c as u8).unwrap_or(255));
        }
        let (tag, seed) = match self.fmap.policy {
            crate::graph::FeaturePolicy::Default => (0u8, 0u64),
            crate::graph::FeaturePolicy::Random(s) => (1, s),
            crate::graph::FeaturePolicy::ByGateCountDesc => (2, 0),
        };
        b.push(tag);
        b.extend_from_slice(&seed.to_le_bytes());
        b.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            b.extend_from_slice(&p.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<GinModel, GnnError> {
        let mut r = Reader { b: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(GnnError::Checkpoint("wrong magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(GnnError::Checkpoint(format!("unsupported version {version}")));
        }
        let hidden = r.u32()? as usize;
        let layers = r.u32()? as usize;
        let readout = match r.u8()? {
            0 => Readout::Sum,
            1 => Readout::Mean,
            x => return Err(GnnError::Checkpoint(format!("readout tag {x}"))),
        };
        let concat = r.u8()? != 0;
        let hops = r.u32()? as usize;
        let seed = r.u64()?;
        let trained = r.u8()? != 0;
        let mut pairs = Vec::new();
        for k in KindClass::ALL {
            let c = r.u8()?;
            if c != 255 {
                pairs.push((k, c as usize));
            }
        }
        let mut fmap = FeatureMap::from_assignment(&pairs)?;
        let tag = r.u8()?;
        let pseed = r.u64()?;
        fmap.policy = match tag {
            0 => crate::graph::FeaturePolicy::Default,
            1 => crate::graph::FeaturePolicy::Random(pseed),
            2 => crate::graph::FeaturePolicy::ByGateCountDesc,
            x => return Err(GnnError::Checkpoint(format!("feature policy tag {x}"))),
        };
        let hyper = Hyper { hidden, layers, readout, concat, hops, seed };
        let count = r.u64()? as usize;
        if count != Layout::new(&hyper).len() {
            return Err(GnnError::Checkpoint(format!("{count} parameters do not fit the layout")));
        }
        let params = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        if r.pos != bytes.len() {
            return Err(GnnError::Checkpoint("trailing bytes".into()));
        }
        Ok(GinModel { hyper, fmap, params, trained })
    }

    pub fn save(&self, path: &Path) -> Result<(), GnnError> {
        std::fs::write(path, self.to_bytes()).map_err(|source| GnnError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<GinModel, GnnError> {
        let bytes = std::fs::read(path).map_err(|source| GnnError::Io { path: path.display().to_string(), source })?;
        GinModel::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GnnError> {
        let end = self.pos + n;
        if end > self.b.len() {
            return Err(GnnError::Checkpoint("truncated".into()));
        }
        let s = &self.b[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, GnnError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, GnnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, GnnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, GnnError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

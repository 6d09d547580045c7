// SPDX-License-Identifier: Apache-2.0

//! Per-instance edge-mask explanations of key-head predictions.
//!
//! Each edge gets a mask `m = sigmoid(theta)`, starting at one half. The
//! mask is trained with Adam to keep the masked prediction close to the
//! unmasked one (cross-entropy against the unmasked class probabilities)
//! while paying `lambda * sum(m)`. Edges whose mask survives the sparsity
//! pressure are the explanation.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gnn::{sigmoid, softmax, GinModel, GnnError};
use crate::graph::CircuitGraph;
use crate::par::{self, Exec};

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("model is untrained")]
    Untrained,
    #[error("budget k = {k} is outside 1..={edges}")]
    Budget { k: usize, edges: usize },
    #[error("graph {0} has an empty ground-truth edge set")]
    EmptyTruth(usize),
    #[error("{0} explanations but {1} truth sets")]
    Mismatch(usize, usize),
    #[error(transparent)]
    Gnn(#[from] GnnError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub k: usize,
    pub steps: usize,
    pub lr: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig { k: 4, steps: 300, lr: 0.01, lambda: 0.05, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub graph_ref: String,
    pub edges: Vec<(usize, usize)>,
    pub node_ids: Vec<String>,
    /// Final mask value per edge, aligned with `edges`.
    pub edge_scores: Vec<f64>,
    /// Edge indices, best first; ties broken by lower index.
    pub top_k: Vec<usize>,
    pub predicted_label: bool,
}

impl Explanation {
    pub fn mask_sum(&self) -> f64 {
        self.edge_scores.iter().sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("explanation serializes")
    }

    /// Graphviz rendering with the explanation edges drawn bold.
    pub fn to_dot(&self) -> String {
        let top: HashSet<usize> = self.top_k.iter().copied().collect();
        let mut s = String::from("graph explanation {\n  node [shape=box];\n");
        for (i, id) in self.node_ids.iter().enumerate() {
            let _ = writeln!(s, "  n{i} [label=\"{}\"];", id.replace('"', "\\\""));
        }
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            let style = if top.contains(&e) { " [style=bold, penwidth=3, color=red]" } else { "" };
            let _ = writeln!(s, "  n{a} -- n{b}{style}; // {:.4}", self.edge_scores[e]);
        }
        s.push_str("}\n");
        s
    }
}

/// Indices of the `k` highest scores; stable on ties.
pub fn rank_edges(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

pub fn explain_graph(model: &GinModel, graph: &CircuitGraph, cfg: &ExplainConfig) -> Result<Explanation, ExplainError> {
    if !model.trained {
        return Err(ExplainError::Untrained);
    }
    let ne = graph.edges.len();
    if cfg.k == 0 || cfg.k > ne {
        return Err(ExplainError::Budget { k: cfg.k, edges: ne });
    }
    let target = softmax(model.forward(graph)?.key_logits);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta: Vec<f64> = (0..ne).map(|_| rng.random_range(-1e-3..1e-3)).collect();
    let (mut m1, mut m2) = (vec![0.0; ne], vec![0.0; ne]);
    let (b1, b2) = (0.9f64, 0.999f64);
    for t in 1..=cfg.steps {
        let mask: Vec<f64> = theta.iter().map(|&x| sigmoid(x)).collect();
        let (out, cache) = model.forward_cached(graph, &mask)?;
        let p = softmax(out.key_logits);
        let d_logits = [p[0] - target[0], p[1] - target[1]];
        let g = model.backward(graph, &mask, &cache, d_logits, 0.0);
        let c1 = 1.0 - b1.powi(t as i32);
        let c2 = 1.0 - b2.powi(t as i32);
        for e in 0..ne {
            let grad = (g.edges[e] + cfg.lambda) * mask[e] * (1.0 - mask[e]);
            m1[e] = b1 * m1[e] + (1.0 - b1) * grad;
            m2[e] = b2 * m2[e] + (1.0 - b2) * grad * grad;
            theta[e] -= cfg.lr * (m1[e] / c1) / ((m2[e] / c2).sqrt() + 1e-8);
        }
    }
    let edge_scores: Vec<f64> = theta.iter().map(|&x| sigmoid(x)).collect();
    Ok(Explanation {
        graph_ref: graph.center.map(|c| graph.node_ids[c].clone()).unwrap_or_default(),
        edges: graph.edges.clone(),
        node_ids: graph.node_ids.clone(),
        top_k: rank_edges(&edge_scores, cfg.k),
        edge_scores,
        predicted_label: target[1] > target[0],
    })
}

/// Explains every graph, seeding graph `i` with `derive(seed, i)`.
pub fn explain_all(
    model: &GinModel,
    graphs: &[CircuitGraph],
    cfg: &ExplainConfig,
    exec: Exec,
) -> Result<Vec<Explanation>, ExplainError> {
    let idx: Vec<usize> = (0..graphs.len()).collect();
    par::map(exec, &idx, |&i| {
        let cfg = ExplainConfig { seed: crate::dataset::derive_seed(cfg.seed, &[i as u64]), k: cfg.k.min(graphs[i].edges.len()), ..cfg.clone() };
        explain_graph(model, &graphs[i], &cfg)
    })
    .into_iter()
    .collect()
}

/// Edges incident to the graph's center: the key gate's one-hop edges.
pub fn key_gate_truth(graph: &CircuitGraph) -> HashSet<usize> {
    let Some(c) = graph.center else { return HashSet::new() };
    graph.edges.iter().enumerate().filter(|(_, &(a, b))| a == c || b == c).map(|(i, _)| i).collect()
}

/// Mean over graphs of `|top_k & truth| / min(k, |truth|)`.
pub fn explanation_accuracy(expls: &[Explanation], truth: &[HashSet<usize>]) -> Result<f64, ExplainError> {
    if expls.len() != truth.len() {
        return Err(ExplainError::Mismatch(expls.len(), truth.len()));
    }
    let mut total = 0.0;
    for (i, (x, t)) in expls.iter().zip(truth).enumerate() {
        if t.is_empty() {
            return Err(ExplainError::EmptyTruth(i));
        }
        let hit = x.top_k.iter().filter(|e| t.contains(e)).count();
        total += hit as f64 / x.top_k.len().min(t.len()) as f64;
    }
    Ok(if expls.is_empty() { 0.0 } else { total / expls.len() as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::gnn::{train, Hyper, Sample, TrainConfig};
    use crate::graph::{to_graph, FeatureMap};
    use crate::lock::lock_xor;
    use crate::netlist::Key;

    fn trained_tiny() -> GinModel {
        let mut m = GinModel::new(Hyper { hidden: 8, layers: 2, seed: 1, ..Default::default() }, FeatureMap::default());
        m.trained = true;
        m
    }

    #[test]
    fn identity_mask_matches_plain_forward() {
        let model = trained_tiny();
        let lc = lock_xor(&fixtures::c17(), 2, 0).unwrap();
        let g = to_graph(&lc.netlist, &model.fmap, Some(&lc.correct_key)).unwrap();
        let a = model.forward(&g).unwrap();
        let b = model.forward_weighted(&g, &vec![1.0; g.edges.len()]).unwrap();
        assert!((a.key_logits[0] - b.key_logits[0]).abs() <= 1e-9);
        assert!((a.key_logits[1] - b.key_logits[1]).abs() <= 1e-9);
        assert!((a.er_pred - b.er_pred).abs() <= 1e-9);
    }

    #[test]
    fn accuracy_bounds() {
        let x = Explanation {
            graph_ref: "g".into(),
            edges: vec![(0, 1), (1, 2), (2, 3)],
            node_ids: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            edge_scores: vec![0.9, 0.8, 0.1],
            top_k: vec![0, 1],
            predicted_label: true,
        };
        assert_eq!(explanation_accuracy(&[x.clone()], &[HashSet::from([0, 1])]).unwrap(), 1.0);
        assert_eq!(explanation_accuracy(&[x.clone()], &[HashSet::from([2])]).unwrap(), 0.0);
        assert_eq!(explanation_accuracy(&[x.clone()], &[HashSet::from([1])]).unwrap(), 1.0);
        assert!(matches!(explanation_accuracy(&[x.clone()], &[HashSet::new()]), Err(ExplainError::EmptyTruth(0))));
        assert!(x.to_dot().contains("n0 -- n1 [style=bold"));
        assert!(!x.to_dot().contains("n2 -- n3 [style"));
    }

    #[test]
    fn ranking_is_stable_on_ties() {
        assert_eq!(rank_edges(&[0.5, 0.7, 0.5, 0.7], 3), vec![1, 3, 0]);
    }

    #[test]
    fn budget_and_training_checks() {
        let mut model = trained_tiny();
        let g = to_graph(&fixtures::c17(), &model.fmap, None).unwrap();
        let cfg = ExplainConfig { k: 0, ..Default::default() };
        assert!(matches!(explain_graph(&model, &g, &cfg), Err(ExplainError::Budget { .. })));
        let cfg = ExplainConfig { k: g.edges.len() + 1, ..Default::default() };
        assert!(matches!(explain_graph(&model, &g, &cfg), Err(ExplainError::Budget { .. })));
        model.trained = false;
        assert!(matches!(explain_graph(&model, &g, &ExplainConfig::default()), Err(ExplainError::Untrained)));
    }

    /// Keyed whole graphs of a 1-key circuit, centered on the key gate and
    /// labeled with the assigned key value. The key input's only edge is the
    /// one to the key gate, so that edge alone carries the label.
    pub(crate) fn planted() -> (GinModel, Vec<CircuitGraph>) {
        let fmap = FeatureMap::default();
        let mut graphs = Vec::new();
        let mut samples = Vec::new();
        for seed in 0..6 {
            let nl = fixtures::synthetic(&fixtures::SynthParams { inputs: 5, gates: 12, seed, ..Default::default() });
            let lc = lock_xor(&nl, 1, seed).unwrap();
            let gate = lc.netlist.key_gate(0).unwrap();
            for bit in [false, true] {
                let mut g = to_graph(&lc.netlist, &fmap, Some(&Key::from_bits(vec![bit]))).unwrap();
                g.center = Some(gate);
                samples.push(Sample::key(g.clone(), bit).unwrap());
                graphs.push(g);
            }
        }
        let mut model = GinModel::new(Hyper { hidden: 8, layers: 2, seed: 2, ..Default::default() }, fmap);
        let cfg = TrainConfig { max_epochs: 60, batch_size: 4, patience: 60, warm_epochs: 1, ..Default::default() };
        train(&mut model, &samples, &[], &cfg, Exec::Sequential).unwrap();
        (model, graphs)
    }

    #[test]
    fn planted_edge_ranks_first_across_seeds() {
        let (model, graphs) = planted();
        let g = &graphs[1];
        let key = g.features.column(crate::graph::COL_KEY).iter().position(|&x| x == 1.0).unwrap();
        let c = g.center.unwrap();
        let planted = g.edges.iter().position(|&e| e == (key.min(c), key.max(c))).unwrap();
        let mut hits = 0;
        for seed in 0..5 {
            let cfg = ExplainConfig { k: 1, seed, ..Default::default() };
            hits += (explain_graph(&model, g, &cfg).unwrap().top_k[0] == planted) as usize;
        }
        assert!(hits >= 4, "{hits}/5");
    }

    #[test]
    fn larger_lambda_never_grows_the_mask() {
        let (model, graphs) = planted();
        let sums: Vec<f64> = [0.01, 0.05, 0.2]
            .iter()
            .map(|&lambda| {
                let cfg = ExplainConfig { lambda, k: 1, steps: 100, seed: 3, ..Default::default() };
                explain_graph(&model, &graphs[0], &cfg).unwrap().mask_sum()
            })
            .collect();
        assert!(sums[0] >= sums[1] && sums[1] >= sums[2], "{sums:?}");
    }
}

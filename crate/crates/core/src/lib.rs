// SPDX-License-Identifier: Apache-2.0

//! Logic-locking workbench.
//!
//! Netlists are parsed from BENCH text ([`netlist`]), locked with one of
//! seven schemes ([`lock`]), restructured by function-preserving rewrites
//! ([`resynth`]) and labeled with their exact key error rate ([`sim`]) to
//! build a training corpus ([`dataset`]). A small graph isomorphism network
//! ([`gnn`]) trained on featured circuit graphs ([`graph`]) predicts key
//! bits without an oracle, and an edge-mask explainer ([`explain`]) shows
//! which structures drove each prediction. [`metrics`] holds the evaluation
//! vocabulary: hamming distance, prediction accuracy and key precision.

pub mod dataset;
pub mod explain;
pub mod fixtures;
pub mod gnn;
pub mod graph;
pub mod lock;
pub mod metrics;
pub mod netlist;
pub mod par;
pub mod resynth;
pub mod sim;

pub use netlist::{GateKind, Key, Netlist, NodeId};

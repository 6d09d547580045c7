// SPDX-License-Identifier: Apache-2.0

use lockbench::dataset::{build_dataset, Dataset, DatasetConfig, Split, SplitPolicy};
use lockbench::fixtures::desk_suite;
use lockbench::gnn::{attack, samples_from_dataset, train, AttackMode, GinModel, Hyper, SampleSpec, TrainConfig};
use lockbench::graph::{key_bit_subgraph, FeatureMap};
use lockbench::lock::{LockRecipe, Scheme};
use lockbench::metrics::{hamming_distance, key_precision};
use lockbench::par::Exec;
use lockbench::sim::{scalar_error_rate, ErMode};

fn corpus(count: usize, scheme: Scheme) -> Dataset {
    let cfg = DatasetConfig { wrong_keys: 2, variants: 2, seed: 5, ..Default::default() };
    let mut ds = build_dataset(&desk_suite(count, 11), &[LockRecipe::new(scheme, 8, 2)], &cfg, Exec::Parallel).unwrap();
    ds.split(&SplitPolicy::Random { fraction: 0.25, seed: 1 }).unwrap();
    ds
}

#[test]
fn saved_dataset_loads_back_with_identical_rows() {
    let ds = corpus(3, Scheme::Mux);
    let dir = tempfile::tempdir().unwrap();
    ds.save(dir.path()).unwrap();
    let back = Dataset::load(dir.path()).unwrap();
    assert_eq!(back.rows, ds.rows);
    assert_eq!(back.entries.len(), ds.entries.len());
    for (a, b) in back.entries.iter().zip(&ds.entries) {
        assert_eq!(a.locked.correct_key, b.locked.correct_key);
        assert_eq!(a.variants.len(), b.variants.len());
    }
}

#[test]
fn manifest_error_rates_match_the_scalar_oracle() {
    let ds = corpus(2, Scheme::Xor);
    for (i, e) in ds.entries.iter().enumerate() {
        let rows = ds.rows_of(i);
        for (v, variant) in e.variants.iter().enumerate() {
            for (k, key) in e.keys.iter().enumerate() {
                let oracle = scalar_error_rate(&ds.originals[e.original], variant, key).unwrap();
                assert_eq!(rows[v * e.keys.len() + k].er, oracle.er);
            }
        }
    }
}

#[test]
fn xor_model_recovers_seen_keys() {
    let ds = corpus(24, Scheme::Xor);
    let fmap = FeatureMap::default();
    let spec = SampleSpec { hops: 2, er_samples: false, complemented: false };
    let tr = samples_from_dataset(&ds, &fmap, &spec, Split::Train, Exec::Parallel).unwrap();
    let mut model = GinModel::new(Hyper { hidden: 16, ..Hyper::default() }, fmap.clone());
    let cfg = TrainConfig { batch_size: 8, max_epochs: 40, ..Default::default() };
    train(&mut model, &tr, &[], &cfg, Exec::Parallel).unwrap();

    for e in ds.entries_in(Split::Train) {
        let nl = &e.locked.netlist;
        let report = attack(&model, nl, AttackMode::StructureOnly).unwrap();
        let kp = key_precision(&ds.originals[e.original], nl, &report.key, ErMode::exhaustive()).unwrap();
        assert!(kp >= 90.0, "{}: key precision {kp}", nl.name());
        let all_right = (0..nl.p()).all(|i| {
            let g = key_bit_subgraph(nl, i, 2, &fmap, None).unwrap();
            model.forward(&g).unwrap().key_bit() == e.locked.correct_key.bits[i]
        });
        if all_right {
            assert_eq!(hamming_distance(&report.key, &e.locked.correct_key).unwrap(), 0);
        }
    }
}

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sparse_csi::analysis::{run_experiment, ExperimentKind, ExperimentSpec};
use sparse_csi::parallel::{map_indexed, parallel_enabled};
use std::hint::black_box;

const RECOVER_SPEC: &str = r#"{
  "geometry": { "cells": 2, "ues_per_cell": 8, "antennas": 32 },
  "sweep": { "name": "tau", "values": [16] },
  "trials": 16,
  "methods": ["bg_amp_em", "ls"],
  "params": { "scenario": "sparse_ue", "activity": 0.1, "snr_db": 20 }
}"#;

const PHASE_SPEC: &str = r#"{
  "geometry": { "antennas": 64 },
  "sweep": { "name": "N", "values": [24] },
  "trials": 16,
  "methods": ["weighted_l1"],
  "noise_std": 0.0,
  "params": { "sparsity": 6, "alphas": [0.8] }
}"#;

fn thread_counts() -> Vec<usize> {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut counts = vec![1];
    if parallel_enabled() {
        counts.push(avail.max(2));
    }
    counts
}

fn bench_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("map_indexed");
    for threads in thread_counts() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| {
                map_indexed(64, t, |i| {
                    let mut acc = i as f64;
                    for k in 0..20_000 {
                        acc = (acc + k as f64).sqrt();
                    }
                    black_box(acc)
                })
            })
        });
    }
    group.finish();
}

fn bench_experiments(c: &mut Criterion) {
    let cases = [
        ("recover", ExperimentKind::Recover, RECOVER_SPEC),
        ("phase", ExperimentKind::PhaseTransition, PHASE_SPEC),
    ];
    for (name, kind, json) in cases {
        let spec = ExperimentSpec::from_json(json).expect("bench spec");
        let mut group = c.benchmark_group(name);
        group.sample_size(10);
        for threads in thread_counts() {
            group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
                b.iter(|| run_experiment(kind, &spec, t).expect("bench run"))
            });
        }
        group.finish();
    }
}

criterion_group!(benches, bench_map, bench_experiments);
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use cliquesum::cycles::DEFAULT_CYCLE_CAP;
use cliquesum::dynamic::{update, DynConfig};
use cliquesum::generate::insertion_batch;
use cliquesum::isolation::{extract_min_pm, matching_weights};
use cliquesum::pullback::{end_to_end, PipelineOptions};
use cliquesum::verify::verify_nonzero_circulation;
use cliquesum_bench::{instances, sized};

fn weigh(c: &mut Criterion) {
    let mut group = c.benchmark_group("weigh");
    for n in [16, 32, 64] {
        let g = sized(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| end_to_end(black_box(g), &PipelineOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn verify(c: &mut Criterion) {
    let gs = instances(0..5, false);
    let ws: Vec<_> = gs.iter().map(|g| end_to_end(g, &PipelineOptions::default()).unwrap().weights).collect();
    c.bench_function("verify/5 instances", |b| {
        b.iter(|| {
            for (g, w) in gs.iter().zip(&ws) {
                black_box(verify_nonzero_circulation(g, w, DEFAULT_CYCLE_CAP).unwrap());
            }
        })
    });
}

fn matching(c: &mut Criterion) {
    let gs = instances(0..10, true);
    let ws: Vec<_> = gs
        .iter()
        .map(|g| matching_weights(g, &end_to_end(g, &PipelineOptions::default()).unwrap().weights).unwrap())
        .collect();
    c.bench_function("min perfect matching/10 instances", |b| {
        b.iter(|| {
            for (g, w) in gs.iter().zip(&ws) {
                let _ = black_box(extract_min_pm(g, w));
            }
        })
    });
}

fn dynamic(c: &mut Criterion) {
    let g = &instances(5..6, true)[0];
    let w_old = matching_weights(g, &end_to_end(g, &PipelineOptions::default()).unwrap().weights).unwrap();
    let (g2, ids) = insertion_batch(g, 5, 4);
    c.bench_function("dyn-update/4 insertions", |b| {
        b.iter(|| update(black_box(&g2), &ids, &w_old, &DynConfig::default()).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = weigh, verify, matching, dynamic
}
criterion_main!(benches);

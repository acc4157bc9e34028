use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use irsa_bac::analysis::PayloadRounding;
use irsa_bac::codebook::FrameGraph;
use irsa_bac::decoders::DecoderKind;
use irsa_bac::montecarlo::{run_pi_u_point, run_shared, FrameBudget, PointParams, PreparedPoint};
use irsa_bac::protocol::DegreeDistribution;
use irsa_bac::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn point(load: f64) -> PointParams {
    PointParams::from_load(load, 200, 0.2, 2.0, 0.9, DegreeDistribution::regular(2), 0.5, PayloadRounding::Round).unwrap()
}

fn frame_batches(c: &mut Criterion) {
    let mut group = c.benchmark_group("frames");
    group.sample_size(10);
    for kind in [DecoderKind::EdMpr, DecoderKind::EdFg] {
        let prepared = PreparedPoint::build(point(2.2), &[kind], 1, Execution::Parallel).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(format!("{kind}/{name}"), 256), &exec, |b, &exec| {
                b.iter(|| black_box(run_shared(0, &prepared, &[kind], FrameBudget::fixed(256), 1, exec).unwrap()))
            });
        }
    }
    group.finish();
}

fn graph_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph");
    let degrees = DegreeDistribution::regular(2);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, 50_000), |b| {
            b.iter(|| black_box(FrameGraph::build_with(50_000, &degrees, 1000, 7, exec).unwrap()))
        });
    }
    group.finish();
}

fn slot_trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("slot_trials");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, 100_000), |b| {
            b.iter(|| black_box(run_pi_u_point(3, 25, 0.5, 5000, 0.01, 100_000, 3, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, frame_batches, graph_build, slot_trials);
criterion_main!(benches);

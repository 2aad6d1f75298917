use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use momentcert::catalog;
use momentcert::diagnosis::{diagnose, DiagnosisOptions};
use momentcert::extraction;
use momentcert::linalg::DEFAULT_RANK_TAU;
use momentcert::optimality::{certify, Tolerances};
use momentcert::relaxation;
use momentcert::sdp::{self, SdpOptions};
use momentcert_bench::robinson_mixture;

fn relaxation_build(c: &mut Criterion) {
    let p = catalog::robinson();
    let mut group = c.benchmark_group("relaxation_build");
    for k in [3, 4, 5] {
        group.bench_function(format!("robinson_k{k}"), |b| {
            b.iter(|| {
                relaxation::build(black_box(&p), k)
                    .unwrap()
                    .to_sdp()
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn sdp_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("sdp_solve");
    group.sample_size(10);
    for (name, p, k) in [
        ("robinson_k3", catalog::robinson(), 3),
        ("robinson_k4", catalog::robinson(), 4),
        ("motzkin_ball_k3", catalog::motzkin_ball(), 3),
    ] {
        let emb = relaxation::build(&p, k).unwrap().to_sdp().unwrap();
        group.bench_function(name, |b| {
            b.iter(|| sdp::solve(black_box(&emb.problem), &SdpOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn extraction(c: &mut Criterion) {
    let (p, y) = robinson_mixture(5);
    c.bench_function("extract_robinson_mixture_k5", |b| {
        b.iter(|| extraction::extract(black_box(&y), &p, DEFAULT_RANK_TAU).unwrap())
    });
}

fn certification(c: &mut Criterion) {
    let p = catalog::robinson();
    let points = catalog::robinson_minimizers();
    let tol = Tolerances::default();
    c.bench_function("certify_robinson_minimizers", |b| {
        b.iter(|| {
            for u in &points {
                black_box(certify(&p, u, &tol).unwrap());
            }
        })
    });
}

fn end_to_end(c: &mut Criterion) {
    let mut group = c.benchmark_group("diagnose");
    group.sample_size(10);
    let opts = DiagnosisOptions {
        orders: Some((3, 5)),
        ..Default::default()
    };
    group.bench_function("robinson_k3_5", |b| {
        b.iter_batched(
            catalog::robinson,
            |p| diagnose(&p, &opts),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(
    benches,
    relaxation_build,
    sdp_solve,
    extraction,
    certification,
    end_to_end
);
criterion_main!(benches);

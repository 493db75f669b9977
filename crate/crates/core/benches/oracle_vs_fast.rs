//! Vertex oracle against the dispatched fast path. Run once with default
//! features and once with `--no-default-features` to compare the parallel
//! and sequential cores; group names carry the mode.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kfunc_core::grid::{gen_field, Law};
use kfunc_core::interp::{default_window, k_curve, CurveMethod};
use kfunc_core::oracle::{k_vertex_exhaustive, FunctionalForm, DEFAULT_CAP};
use kfunc_core::par::MODE;
use kfunc_core::solver::k_dispatch;
use kfunc_core::spaces::CouplePair;

const PAIRS: [(&str, &str); 4] = [
    ("i", "s=0,q=1,A=lp(1);s=1,q=2,A=lp(1)"),
    ("ii", "s=0,q=2,A=lp(1);s=0.5,q=2,A=sup"),
    ("iii", "s=0,q=1,A=lp(1);s=0.5,q=2,A=lp(2)"),
    ("iv", "s=0,q=1,A=lp(1);s=0.5,q=inf,A=lp(2)"),
];

fn single_t(c: &mut Criterion) {
    let field = gen_field(7, (0, 3), 4, Law::Uniform).unwrap();
    let mut group = c.benchmark_group(format!("k_at_t/{MODE}"));
    for (tag, spec) in PAIRS {
        let pair: CouplePair = spec.parse().unwrap();
        let form = if matches!(tag, "i" | "ii") {
            FunctionalForm::Sum
        } else {
            FunctionalForm::Max
        };
        group.bench_with_input(BenchmarkId::new("oracle", tag), &pair, |b, pair| {
            b.iter(|| k_vertex_exhaustive(black_box(1.0), &field, pair, form, DEFAULT_CAP).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fast", tag), &pair, |b, pair| {
            b.iter(|| k_dispatch(black_box(1.0), &field, pair, DEFAULT_CAP).unwrap())
        });
    }
    group.finish();
}

fn curve(c: &mut Criterion) {
    let field = gen_field(11, (0, 3), 4, Law::Uniform).unwrap();
    let pair: CouplePair = PAIRS[2].1.parse().unwrap();
    let spec = default_window(&field, &pair);
    let mut group = c.benchmark_group(format!("k_curve/{MODE}"));
    group.sample_size(20);
    group.bench_function("oracle", |b| {
        b.iter(|| k_curve(&field, &pair, &spec, CurveMethod::Oracle(FunctionalForm::Max), DEFAULT_CAP).unwrap())
    });
    group.bench_function("fast", |b| {
        b.iter(|| k_curve(&field, &pair, &spec, CurveMethod::Fast, DEFAULT_CAP).unwrap())
    });
    group.finish();
}

criterion_group!(benches, single_t, curve);
criterion_main!(benches);

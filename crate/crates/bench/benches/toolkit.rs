use std::hint::black_box;

use asyncdes::checks::{abstract_model, Prototype};
use asyncdes::{des_apply, des_network, explore, minimize, BitDomain, ExploreOptions, Relation, SemanticsOptions, Word};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_des_apply(c: &mut Criterion) {
    let (data, key) = (Word::concrete(64, 0x0123_4567_89AB_CDEF), Word::concrete(64, 0x1334_5779_9BBC_DFF1));
    c.bench_function("des_apply", |b| b.iter(|| des_apply(black_box(data), black_box(key), true)));
}

fn bench_prototype(c: &mut Criterion) {
    let mut proto = Prototype::new(&SemanticsOptions::lnt()).unwrap();
    let (data, key) = (Word::concrete(64, 0x0123_4567_89AB_CDEF), Word::concrete(64, 0x1334_5779_9BBC_DFF1));
    c.bench_function("prototype_encrypt", |b| b.iter(|| proto.compute(true, black_box(data), key).unwrap()));
}

fn bench_explore(c: &mut Criterion) {
    let opts = SemanticsOptions::lnt();
    let closed = des_network(BitDomain::Concrete, &opts, true).unwrap().hide_all_but(&["CRYPT", "DATA", "KEY", "OUTPUT"]);
    let mut group = c.benchmark_group("explore");
    group.sample_size(10);
    for jobs in [1, 4] {
        let eo = ExploreOptions::default().with_jobs(jobs).with_tau_confluence(true);
        group.bench_with_input(BenchmarkId::new("closed_sample", jobs), &eo, |b, eo| {
            b.iter(|| explore(&closed, eo).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("abstract_model", jobs), &eo, |b, eo| {
            b.iter(|| abstract_model(&opts, true, eo).unwrap())
        });
    }
    group.finish();
}

fn bench_minimize(c: &mut Criterion) {
    let eo = ExploreOptions::default().with_tau_confluence(true);
    let sample = des_network(BitDomain::Concrete, &SemanticsOptions::lnt(), true).unwrap();
    let sample = explore(&sample.hide_all_but(&["CRYPT", "OUTPUT"]), &eo).unwrap();
    let model = abstract_model(&SemanticsOptions::lnt(), true, &eo).unwrap().lts;
    let mut group = c.benchmark_group("minimize");
    for (name, lts) in [("abstract_model", &model), ("closed_sample", &sample)] {
        for relation in [Relation::Strong, Relation::Branching] {
            group.bench_function(BenchmarkId::new(name, relation), |b| b.iter(|| minimize(lts, relation)));
        }
    }
    group.finish();
}

criterion_group!(benches, bench_des_apply, bench_prototype, bench_explore, bench_minimize);
criterion_main!(benches);

use std::collections::BTreeMap;

use ariel_bench::{compile_named, compile_source, deadlines, synthetic_script, voter_source, world};
use ariel_core::gossip::{simulate, PermKind};
use ariel_core::model::codes::source;
use ariel_core::model::{Database, EntityRef, Notification};
use ariel_core::rcode::{execute, ActionRequest};
use ariel_core::tom::{simulate_congestion, AlarmMode, CongestionParams, TimeoutList};
use ariel_core::voting::{vote, Algorithm, MetricRegistry, VoteParams};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_gossip(c: &mut Criterion) {
    let mut group = c.benchmark_group("gossip");
    for n in [16, 64, 160] {
        group.bench_with_input(BenchmarkId::new("identity", n), &n, |b, &n| b.iter(|| simulate(n, PermKind::Identity, 1, 0).unwrap()));
        group.bench_with_input(BenchmarkId::new("pipelined", n), &n, |b, &n| b.iter(|| simulate(n, PermKind::Pipelined, 1, 0).unwrap()));
    }
    group.finish();
}

fn bench_tom(c: &mut Criterion) {
    let mut group = c.benchmark_group("tom");
    for n in [100, 1000] {
        let ds = deadlines(n, 1_000_000);
        group.bench_with_input(BenchmarkId::new("insert", n), &ds, |b, ds| {
            b.iter(|| {
                let mut l = TimeoutList::new();
                for (i, &d) in ds.iter().enumerate() {
                    l.insert(d, false, i, 0);
                }
                l
            })
        });
        group.bench_with_input(BenchmarkId::new("insert_scan", n), &ds, |b, ds| {
            b.iter(|| {
                let mut l = TimeoutList::new();
                for (i, &d) in ds.iter().enumerate() {
                    l.insert(d, false, i, 0);
                }
                let mut fired = 0;
                let mut now = 0;
                while !l.is_empty() {
                    now += 50_000;
                    fired += l.scan(now).len();
                }
                fired
            })
        });
    }
    let p = CongestionParams { timeouts: 1000, workers: 2, mode: AlarmMode::Wait, ..CongestionParams::default() };
    group.bench_function("congestion_1000", |b| b.iter(|| simulate_congestion(black_box(&p)).unwrap()));
    group.finish();
}

fn bench_compile(c: &mut Criterion) {
    let mut group = c.benchmark_group("compile");
    group.bench_function("voter", |b| b.iter(|| compile_source(black_box(voter_source()))));
    group.bench_function("tmr_spare", |b| b.iter(|| compile_named("tmr_spare")));
    let big = synthetic_script(64, 200);
    group.bench_function("synthetic_200_sections", |b| b.iter(|| compile_source(black_box(&big))));
    group.finish();
}

fn bench_vm(c: &mut Criterion) {
    let out = compile_named("voter");
    let (p, bundle) = (out.program.unwrap(), out.bundle.unwrap());
    let mut db = Database::new(bundle.topology.clone(), &BTreeMap::new()).unwrap();
    db.raise_event(Notification::phase(EntityRef::task(0), 9999, source::USER, 1, 0)).unwrap();
    c.bench_function("vm/voter_failed", |b| {
        b.iter(|| {
            let mut sink = |_: &ActionRequest| {};
            execute(black_box(&p), black_box(&db), &mut sink).unwrap()
        })
    });
}

fn bench_vote(c: &mut Criterion) {
    let m = MetricRegistry::default().get("abs_num").unwrap();
    let mut group = c.benchmark_group("vote");
    for n in [3usize, 7, 31] {
        let values: Vec<Option<f64>> = (0..n).map(|i| Some(if i % 3 == 0 { 2.0 } else { 1.0 })).collect();
        for alg in [Algorithm::Majority, Algorithm::Median, Algorithm::Plurality] {
            group.bench_with_input(BenchmarkId::new(format!("{alg:?}"), n), &values, |b, v| b.iter(|| vote(alg, black_box(v), &m, VoteParams::default())));
        }
    }
    group.finish();
}

fn bench_world(c: &mut Criterion) {
    let mut group = c.benchmark_group("world");
    group.sample_size(10);
    group.bench_function("quiet_60s", |b| {
        b.iter(|| {
            let mut w = world("quiet");
            w.run().len()
        })
    });
    group.bench_function("tmr_spare", |b| {
        b.iter(|| {
            let mut w = world("tmr_spare");
            w.run().len()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_gossip, bench_tom, bench_compile, bench_vm, bench_vote, bench_world);
criterion_main!(benches);

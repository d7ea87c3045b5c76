use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};

use cartae_bench::{fixture_inputs, fixture_snapshot};
use cartae_core::lingproc::{pos_tag, tokenize};
use cartae_core::pipeline::{build_snapshot, process_document};
use cartae_core::store::{persist, query, Query};
use cartae_core::structure::segment_notices;
use cartae_core::TimeRange;

fn pipeline(c: &mut Criterion) {
    let (res, docs) = fixture_inputs();
    let bytes: usize = docs.iter().map(|d| d.text().len()).sum();

    let mut g = c.benchmark_group("pipeline");
    g.throughput(Throughput::Bytes(bytes as u64));
    g.bench_function("tokenize", |b| b.iter(|| docs.iter().map(|d| tokenize(black_box(d.text())).len()).sum::<usize>()));
    g.bench_function("pos_tag", |b| {
        let toks: Vec<_> = docs.iter().map(|d| (tokenize(d.text()), &res.lexicons[&d.meta.language])).collect();
        b.iter(|| toks.iter().map(|(t, lex)| pos_tag(black_box(t), lex).len()).sum::<usize>())
    });
    g.bench_function("segment", |b| b.iter(|| docs.iter().map(|d| segment_notices(d, &res.grammar).notices.len()).sum::<usize>()));
    g.bench_function("process_document", |b| {
        b.iter(|| docs.iter().map(|d| process_document(d, &res).unwrap().mentions.len()).sum::<usize>())
    });
    g.bench_function("build_snapshot", |b| {
        b.iter_batched(|| docs.clone(), |docs| build_snapshot(docs, &res).unwrap(), BatchSize::SmallInput)
    });
    g.finish();
}

fn search(c: &mut Criterion) {
    let snap = fixture_snapshot();
    let queries = [
        ("match_all", Query::default()),
        ("one_term", Query::new(&["fibule"])),
        ("two_terms", Query::new(&["pottery", "coins"])),
        ("concept", Query { concept_id: Some("C001".into()), ..Default::default() }),
        ("period", Query { period: TimeRange::new(-150, -120).ok(), ..Default::default() }),
        ("combined", Query { period: TimeRange::new(-800, 800).ok(), ..Query::new(&["Keramik"]) }),
    ];
    let mut g = c.benchmark_group("query");
    for (name, q) in &queries {
        g.bench_function(*name, |b| b.iter(|| query(black_box(&snap), q)));
    }
    g.finish();

    let dir = std::env::temp_dir().join(format!("cartae-bench-{}", std::process::id()));
    c.bench_function("persist_load", |b| {
        b.iter(|| {
            persist(&snap, &dir).unwrap();
            cartae_core::store::load(&dir).unwrap()
        })
    });
    let _ = std::fs::remove_dir_all(&dir);
}

criterion_group!(benches, pipeline, search);
criterion_main!(benches);

use std::hint::black_box;

use chronomark::temporal::{emit_link_header, parse_link_header};
use chronomark::{Instant, LinkEntry, Term, TimeInterval};
use chronomark_bench::{archive, collection, graph, START};
use criterion::{criterion_group, criterion_main, Criterion};

fn link_header(c: &mut Criterion) {
    let entries: Vec<LinkEntry> = (0..20)
        .map(|k| {
            LinkEntry::new(
                format!("http://archive.example.org/{k}/http://ex.org/r"),
                "memento",
            )
            .with_datetime(Instant::from_unix(START + k * 86_400))
        })
        .collect();
    let header = emit_link_header(&entries);
    c.bench_function("link_header_parse_20", |b| {
        b.iter(|| parse_link_header(black_box(&header)).unwrap())
    });
}

fn graph_match(c: &mut Criterion) {
    let g = graph(10_000);
    let s = Term::iri("http://ex.org/s3");
    let p = Term::iri("http://ex.org/p3");
    c.bench_function("graph_match_subject_predicate_10k", |b| {
        b.iter(|| g.match_pattern(black_box(Some(&s)), Some(&p), None).len())
    });
}

fn timegate(c: &mut Criterion) {
    let a = archive("http://ex.org/r", 1000);
    let t = Instant::from_unix(START + 3600 * 617 + 12);
    c.bench_function("timegate_1000_mementos", |b| {
        b.iter(|| {
            a.resolve_timegate("http://ex.org/r", black_box(t))
                .unwrap()
                .uri_m
                .len()
        })
    });
}

fn search(c: &mut Criterion) {
    let coll = collection(2000, 10);
    let window = TimeInterval::new(
        Instant::from_unix(START),
        Instant::from_unix(START + 3600 * 500),
    )
    .unwrap();
    c.bench_function("search_2000_annotations", |b| {
        b.iter(|| {
            coll.search(black_box("http://ex.org/t3"), Some(&window))
                .len()
        })
    });
}

criterion_group!(benches, link_header, graph_match, timegate, search);
criterion_main!(benches);

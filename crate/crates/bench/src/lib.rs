//! Deterministic fixtures shared by the benchmarks.

use chronomark::model::build_annotation;
use chronomark::{
    AnnotationView, Archive, ArchiveKind, Collection, ContextRole, ContextView, Graph, Instant,
    ResourceTimeline, Term, Triple, VersionRecord,
};

pub const START: i64 = 1_262_304_000;

/// A graph of `n` triples over a small vocabulary.
pub fn graph(n: usize) -> Graph {
    (0..n)
        .map(|k| {
            Triple::new(
                Term::iri(format!("http://ex.org/s{}", k % 97)),
                Term::iri(format!("http://ex.org/p{}", k % 7)),
                Term::literal(k.to_string()),
            )
            .unwrap()
        })
        .collect()
}

/// A transactional archive holding `versions` hourly versions of `uri`.
pub fn archive(uri: &str, versions: usize) -> Archive {
    let records = (0..versions)
        .map(|k| VersionRecord {
            valid_from: Instant::from_unix(START + 3600 * k as i64),
            body: format!("version {k}").into_bytes(),
        })
        .collect();
    let tl = ResourceTimeline::new(uri, records).unwrap();
    let mut a = Archive::new(ArchiveKind::Transactional, "http://archive.example.org");
    a.capture_transactional(&tl, tl.last_valid_from()).unwrap();
    a
}

/// A collection of `n` annotations spread over `targets` resources, dated hourly.
pub fn collection(n: usize, targets: usize) -> Collection {
    let mut c = Collection::new();
    for k in 0..n {
        let target = format!("http://ex.org/t{}", k % targets);
        let uri_a = format!("http://ex.org/anno/{k}");
        let mut v = AnnotationView::new(&uri_a, format!("http://ex.org/note/{k}"), &target);
        v.contexts.push(
            ContextView::new(
                format!("{uri_a}#target"),
                &target,
                ContextRole::TargetContext,
            )
            .at(Instant::from_unix(START + 3600 * k as i64)),
        );
        let uri_trn = format!("http://ex.org/trn/{k}");
        v.transcription = Some(uri_trn.clone());
        let text = build_annotation(&v).unwrap().serialize();
        c.ingest(&uri_trn, &text).unwrap();
    }
    c
}

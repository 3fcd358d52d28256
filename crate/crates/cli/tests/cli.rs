use std::path::Path;
use std::process::{Command, Output};

use chronomark::model::build_annotation;
use chronomark::{AnnotationView, Workspace};
use sha2::{Digest, Sha256};

const R: &str = "http://lanlsource.lanl.gov/hello";
const DAY1: &str = "Thu, 21 Jan 2010 01:00:02 GMT";
const DAY2: &str = "Fri, 22 Jan 2010 01:00:02 GMT";
const DAY3: &str = "Sat, 23 Jan 2010 01:00:02 GMT";
const NOW: &str = "Sun, 24 Jan 2010 00:00:00 GMT";

fn run(ws: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chronomark"))
        .arg("--workspace")
        .arg(ws)
        .args(["--now", NOW])
        .args(args)
        .env_remove("CHRONOMARK_NOW")
        .env_remove("CHRONOMARK_WORKSPACE")
        .output()
        .unwrap()
}

fn ok(ws: &Path, args: &[&str]) -> String {
    let out = run(ws, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn values<'a>(out: &'a str, key: &str) -> Vec<&'a str> {
    out.lines()
        .flat_map(|l| l.split(' '))
        .filter_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .collect()
}

fn sha(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

/// The empty page, then a page full of news the next day.
fn seed_news(ws: &Path) {
    ok(
        ws,
        &["seed-timeline", "--uri", R, "--at", DAY1, "--body", ""],
    );
    ok(
        ws,
        &[
            "seed-timeline",
            "--uri",
            R,
            "--at",
            DAY2,
            "--body",
            "headline one\nheadline two\n",
        ],
    );
    ok(ws, &["capture", "--uri", R, "--mode", "transactional"]);
}

#[test]
fn no_news_is_good_news() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    seed_news(ws);
    let out = ok(
        ws,
        &[
            "annotate",
            "--target",
            R,
            "--at",
            "Thu, 21 Jan 2010 12:00:00 GMT",
            "--content",
            "No news is good news",
        ],
    );
    assert_eq!(values(&out, "collection.size"), ["1"]);
    let trn = values(&out, "transcription")[0].to_string();

    let out = ok(ws, &["reconstruct", "--annotation", &trn]);
    let line = out
        .lines()
        .find(|l| l.starts_with(&format!("resource={R} ")))
        .unwrap();
    assert!(line.contains("memento=") && line.contains("clamped=false"));
    assert!(line.ends_with(&format!("sha256={}", sha(""))));

    let out = ok(ws, &["reconstruct", "--annotation", &trn, "--no-memento"]);
    let line = out
        .lines()
        .find(|l| l.starts_with(&format!("resource={R} ")))
        .unwrap();
    assert!(!line.contains("memento="));
    assert!(!line.ends_with(&format!("sha256={}", sha(""))));
}

#[test]
fn timeless_annotation_has_no_resolutions() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    seed_news(ws);
    let w = Workspace::open(ws).unwrap();
    let mut v = AnnotationView::new("http://example.org/anno/t", "http://example.org/note", R);
    v.transcription = Some(w.content_uri("timeless"));
    w.put_content(
        "timeless",
        build_annotation(&v).unwrap().serialize().as_bytes(),
    )
    .unwrap();
    ok(
        ws,
        &[
            "seed-timeline",
            "--uri",
            "http://example.org/note",
            "--at",
            DAY1,
            "--body",
            "note",
        ],
    );
    assert_eq!(values(&ok(ws, &["harvest"]), "collection.size"), ["1"]);

    let out = ok(
        ws,
        &["reconstruct", "--annotation", &w.content_uri("timeless")],
    );
    assert!(!out.contains("memento="));
    assert_eq!(values(&out, "current"), ["true", "true"]);
}

#[test]
fn unresolvable_resource_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    let out = ok(
        ws,
        &[
            "annotate",
            "--target",
            "http://never.captured/",
            "--at",
            DAY1,
            "--content",
            "hello",
        ],
    );
    let trn = values(&out, "transcription")[0].to_string();
    let out = run(ws, &["reconstruct", "--annotation", &trn]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("http://never.captured/"));
}

#[test]
fn capture_modes_write_timemaps() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    seed_news(ws);
    let w = Workspace::open(ws).unwrap();
    let tm = |uri: &str| {
        let name = format!("{}.nt", chronomark::encoding::encode_component(uri));
        std::fs::read_to_string(ws.join("archives").join(name)).unwrap()
    };
    assert_eq!(tm(R).matches("validOver").count(), 2);

    let crawled = "http://example.org/crawled";
    ok(
        ws,
        &[
            "seed-timeline",
            "--uri",
            crawled,
            "--at",
            DAY1,
            "--body",
            "a",
        ],
    );
    ok(
        ws,
        &[
            "seed-timeline",
            "--uri",
            crawled,
            "--at",
            DAY3,
            "--body",
            "b",
        ],
    );
    let out = ok(
        ws,
        &[
            "capture",
            "--uri",
            crawled,
            "--mode",
            "crawler",
            "--crawls",
            "20100121020000,20100122020000,20100123020000",
        ],
    );
    assert_eq!(values(&out, "memento").len(), 2);
    let text = tm(crawled);
    assert!(text.contains("observedOver") && text.contains("observations> \"2\""));
    assert!(w.load_archive(crawled).unwrap().is_some());

    let out = run(ws, &["capture", "--uri", crawled, "--mode", "crawler"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(
        ws,
        &[
            "capture",
            "--uri",
            "http://unseeded/",
            "--mode",
            "transactional",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_datetime_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "annotate",
            "--target",
            R,
            "--at",
            "21/01/2010",
            "--content",
            "x",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("MalformedDatetime"));
}

#[test]
fn discover_t_shirt_day_two() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    for (at, body) in [
        (DAY1, "plain shirt"),
        (DAY2, "striped shirt"),
        (DAY3, "dotted shirt"),
    ] {
        ok(
            ws,
            &["seed-timeline", "--uri", R, "--at", at, "--body", body],
        );
    }
    ok(ws, &["capture", "--uri", R, "--mode", "transactional"]);
    let mut trns = Vec::new();
    for (n, at) in [
        "Thu, 21 Jan 2010 09:00:00 GMT",
        "Fri, 22 Jan 2010 09:00:00 GMT",
        "Sat, 23 Jan 2010 09:00:00 GMT",
    ]
    .iter()
    .enumerate()
    {
        let out = ok(
            ws,
            &[
                "annotate",
                "--target",
                R,
                "--at",
                at,
                "--content",
                &format!("comment {n}"),
            ],
        );
        trns.push(values(&out, "transcription")[0].to_string());
    }
    let w = Workspace::open(ws).unwrap();
    let day2 = format!("{}/20100122010002/{R}", w.memento_base());

    let out = ok(ws, &["discover", "--memento", &day2, "--use-timemap"]);
    assert_eq!(values(&out, "original"), [R]);
    assert_eq!(values(&out, "certainty"), ["valid"]);
    assert_eq!(values(&out, "annotation"), [trns[1].as_str()]);

    let out = ok(ws, &["discover", "--memento", &day2]);
    assert_eq!(values(&out, "certainty"), ["approximate"]);
    assert!(values(&out, "annotation").contains(&trns[1].as_str()));

    assert_eq!(ok(ws, &["search", "--target", R]).lines().count(), 3);

    // The annotation content resources are archived but never annotated.
    let note = format!(
        "{}/20100121090000/{}",
        w.memento_base(),
        w.resource_uri("note-1")
    );
    let out = ok(ws, &["discover", "--memento", &note, "--use-timemap"]);
    assert!(values(&out, "annotation").is_empty());

    let out = run(ws, &["discover", "--memento", "http://nowhere/memento/1/x"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evaluate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["evaluate", "--seed", "42", "--timelines", "10"];
    let a = ok(dir.path(), &args);
    assert_eq!(a, ok(dir.path(), &args));
    assert_eq!(values(&a, "valid.jaccard"), ["1.000000"]);
    assert_eq!(values(&a, "valid.precision"), ["1.000000"]);
    assert_eq!(values(&a, "valid.recall"), ["1.000000"]);

    let dense = ok(
        dir.path(),
        &[
            "evaluate",
            "--seed",
            "5",
            "--timelines",
            "30",
            "--crawl-density",
            "0.5",
        ],
    );
    let sparse = ok(
        dir.path(),
        &[
            "evaluate",
            "--seed",
            "5",
            "--timelines",
            "30",
            "--crawl-density",
            "0.05",
        ],
    );
    let observed = |s: &str| values(s, "observed.jaccard")[0].parse::<f64>().unwrap();
    assert!(observed(&dense) >= observed(&sparse));

    for bad in [
        ["--timelines", "0"],
        ["--crawl-density", "1.5"],
        ["--versions", "5..2"],
    ] {
        let out = run(dir.path(), &[&["evaluate"][..], &bad[..]].concat());
        assert_eq!(out.status.code(), Some(2), "{bad:?}");
    }
}

//! Randomized evaluation of both retrieval pipelines against ground truth.
//!
//! Every scenario generates a fresh [`ResourceTimeline`], captures it into a
//! transactional and a crawler archive, publishes annotations as
//! transcription text, and scores what the pipelines recover. Ground truth
//! is read from the timeline only, never from archive output.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::archive::{Archive, ArchiveError, ArchiveKind, ResourceTimeline, VersionRecord};
use crate::collection::{Collection, CollectionEntry, CollectionError};
use crate::discovery::{
    annotations_for_memento, reconstruct, DiscoveryError, IntervalEstimate, MementoHeaders,
};
use crate::model::{build_annotation, AnnotationView, ContextRole, ContextView, ModelError};
use crate::temporal::{Instant, TemporalError, TimeInterval};

/// 2010-01-01T00:00:00Z
pub const EPOCH_START: i64 = 1_262_304_000;
/// Crawl opportunities come once per tick.
pub const CRAWL_TICK: i64 = 3600;
/// Version lifetimes are drawn from [1, 48] ticks.
pub const MAX_VERSION_TICKS: i64 = 48;

const ORIGIN: &str = "http://origin.example.org";
const TA_BASE: &str = "http://archive.example.org/ta";
const CR_BASE: &str = "http://archive.example.org/cr";

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Collection(#[from] CollectionError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub seed: u64,
    /// Scenarios per trial.
    pub timelines: usize,
    pub versions_min: usize,
    pub versions_max: usize,
    /// Per-tick crawl probability, drawn per scenario from this range.
    pub crawl_density_min: f64,
    pub crawl_density_max: f64,
    /// Dated annotations per resource in the discovery scenarios.
    pub annotations_min: usize,
    pub annotations_max: usize,
    pub trials: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            seed: 1,
            timelines: 100,
            versions_min: 2,
            versions_max: 8,
            crawl_density_min: 0.05,
            crawl_density_max: 0.5,
            annotations_min: 3,
            annotations_max: 10,
            trials: 1,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), EvaluateError> {
        let bad = |m: &str| Err(EvaluateError::InvalidSpec(m.to_string()));
        if self.timelines == 0
            || self.trials == 0
            || self.versions_min == 0
            || self.annotations_min == 0
        {
            return bad("counts must be at least 1");
        }
        if self.versions_min > self.versions_max {
            return bad("versions_min exceeds versions_max");
        }
        if self.annotations_min > self.annotations_max {
            return bad("annotations_min exceeds annotations_max");
        }
        let in_range = |d: f64| d > 0.0 && d <= 1.0;
        if !in_range(self.crawl_density_min) || !in_range(self.crawl_density_max) {
            return bad("crawl densities must lie in (0, 1]");
        }
        if self.crawl_density_min > self.crawl_density_max {
            return bad("crawl_density_min exceeds crawl_density_max");
        }
        Ok(())
    }
}

/// Scores for one interval strategy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StrategyStats {
    pub mementos: usize,
    pub jaccard_sum: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub relevant: usize,
}

impl StrategyStats {
    pub fn mean_jaccard(&self) -> f64 {
        if self.mementos == 0 {
            return 0.0;
        }
        self.jaccard_sum / self.mementos as f64
    }

    /// Micro-averaged; 1.0 when nothing was returned.
    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.predicted)
    }

    /// Micro-averaged; 1.0 when nothing was relevant.
    pub fn recall(&self) -> f64 {
        ratio(self.true_positives, self.relevant)
    }
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        1.0
    } else {
        n as f64 / d as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub scenarios: usize,
    pub q1_resolutions: usize,
    pub q1_clamped: usize,
    pub q1_faithful: usize,
    pub q1_edited: usize,
    pub q1_control_differs: usize,
    pub valid: StrategyStats,
    pub observed: StrategyStats,
    pub approximate: StrategyStats,
    pub approximate_contains_snapshot: usize,
}

impl Report {
    /// Share of non-clamped resolutions whose body matched the annotated one.
    pub fn q1_fidelity(&self) -> f64 {
        ratio(self.q1_faithful, self.q1_resolutions - self.q1_clamped)
    }

    /// Share of edited resources whose current body differs from the
    /// annotated one.
    pub fn q1_control_differs_rate(&self) -> f64 {
        ratio(self.q1_control_differs, self.q1_edited)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "scenarios={}", self.scenarios)?;
        writeln!(f, "q1.resolutions={}", self.q1_resolutions)?;
        writeln!(f, "q1.clamped={}", self.q1_clamped)?;
        writeln!(f, "q1.fidelity={:.6}", self.q1_fidelity())?;
        writeln!(f, "q1.edited={}", self.q1_edited)?;
        writeln!(
            f,
            "q1.control_differs={:.6}",
            self.q1_control_differs_rate()
        )?;
        for (name, s) in [
            ("valid", &self.valid),
            ("observed", &self.observed),
            ("approximate", &self.approximate),
        ] {
            writeln!(f, "{name}.mementos={}", s.mementos)?;
            writeln!(f, "{name}.jaccard={:.6}", s.mean_jaccard())?;
            writeln!(f, "{name}.precision={:.6}", s.precision())?;
            writeln!(f, "{name}.recall={:.6}", s.recall())?;
        }
        writeln!(
            f,
            "approximate.contains_snapshot={:.6}",
            ratio(
                self.approximate_contains_snapshot,
                self.approximate.mementos
            )
        )
    }
}

/// A generated resource and the instant the scenario ends.
struct World {
    tl: ResourceTimeline,
    now: Instant,
}

fn gen_world<R: Rng>(
    rng: &mut R,
    spec: &ScenarioSpec,
    uri_r: &str,
) -> Result<World, EvaluateError> {
    let n = rng.random_range(spec.versions_min..=spec.versions_max);
    let mut t = EPOCH_START + rng.random_range(0..CRAWL_TICK);
    let mut versions = Vec::with_capacity(n);
    for i in 0..n {
        versions.push(VersionRecord {
            valid_from: Instant::from_unix(t),
            body: format!(
                "<html>{uri_r} version {i} {:016x}</html>",
                rng.random::<u64>()
            )
            .into_bytes(),
        });
        t += rng.random_range(CRAWL_TICK..=MAX_VERSION_TICKS * CRAWL_TICK);
    }
    let tl = ResourceTimeline::new(uri_r, versions)?;
    // The last version lives as long as a random version would.
    Ok(World {
        tl,
        now: Instant::from_unix(t - 1),
    })
}

fn gen_crawls<R: Rng>(rng: &mut R, w: &World, density: f64) -> Vec<Instant> {
    let start = w.tl.first_valid_from().unix();
    (0..)
        .map(|k| start + k * CRAWL_TICK)
        .take_while(|&t| t <= w.now.unix())
        .filter(|_| rng.random_bool(density))
        .map(Instant::from_unix)
        .collect()
}

/// The true span over which the representation served at `t` was current.
fn true_span(w: &World, t: Instant) -> Result<TimeInterval, EvaluateError> {
    let idx = w.tl.version_index_at(t)?;
    Ok(w.tl.version_span(idx, w.now))
}

fn dated_annotation(
    uri_a: &str,
    content: &str,
    target: &str,
    when: Instant,
    trn: &str,
) -> AnnotationView {
    let mut v = AnnotationView::new(uri_a, content, target);
    v.contexts.push(
        ContextView::new(
            format!("{uri_a}#target"),
            target,
            ContextRole::TargetContext,
        )
        .at(when),
    );
    v.contexts.push(
        ContextView::new(
            format!("{uri_a}#content"),
            content,
            ContextRole::ContentContext,
        )
        .at(when),
    );
    v.transcription = Some(trn.to_string());
    v
}

fn random_instant<R: Rng>(rng: &mut R, span: TimeInterval) -> Instant {
    Instant::from_unix(rng.random_range(span.start().unix()..=span.end().unix()))
}

/// Annotate once, edit afterwards, and rebuild.
fn q1<R: Rng>(
    rng: &mut R,
    spec: &ScenarioSpec,
    s: usize,
    report: &mut Report,
) -> Result<(), EvaluateError> {
    let uri_r = format!("{ORIGIN}/q1/{s}");
    let w = gen_world(rng, spec, &uri_r)?;
    let last_edit = w.tl.last_valid_from();
    let window = if w.tl.versions().len() > 1 {
        TimeInterval::new(
            w.tl.first_valid_from(),
            Instant::from_unix(last_edit.unix() - 1),
        )?
    } else {
        TimeInterval::new(w.tl.first_valid_from(), w.now)?
    };
    let t_a = random_instant(rng, window);
    let content_uri = format!("{ORIGIN}/q1/{s}/note");
    let content = ResourceTimeline::single(&content_uri, t_a, format!("note on {uri_r}"));

    let mut archive = Archive::new(ArchiveKind::Transactional, TA_BASE);
    archive.capture_transactional(&w.tl, w.now)?;
    archive.capture_transactional(&content, w.now)?;

    let uri_a = format!("{ORIGIN}/q1/{s}/anno");
    let view = dated_annotation(
        &uri_a,
        &content_uri,
        &uri_r,
        t_a,
        &format!("{ORIGIN}/q1/{s}/trn"),
    );
    let mut collection = Collection::new();
    let trn = view.transcription.clone().unwrap_or_default();
    collection.ingest(&trn, &build_annotation(&view)?.serialize())?;
    let view = &collection.search(&uri_r, None)[0].view;

    let rebuilt = reconstruct(view, |r, t| archive.resolve_timegate(r, t).cloned(), w.now)?;
    for res in &rebuilt.resolutions {
        report.q1_resolutions += 1;
        if res.clamped {
            report.q1_clamped += 1;
            continue;
        }
        let truth = if res.uri_r == uri_r { &w.tl } else { &content };
        if truth.rep_at(res.requested)? == res.body.as_slice() {
            report.q1_faithful += 1;
        }
    }
    if last_edit > t_a {
        report.q1_edited += 1;
        if w.tl.rep_at(w.now)? != w.tl.rep_at(t_a)? {
            report.q1_control_differs += 1;
        }
    }
    Ok(())
}

fn score(
    stats: &mut StrategyStats,
    estimate: IntervalEstimate,
    truth: TimeInterval,
    found: BTreeSet<String>,
    relevant: &BTreeSet<String>,
) {
    stats.mementos += 1;
    stats.jaccard_sum += estimate.interval.jaccard(&truth);
    stats.predicted += found.len();
    stats.relevant += relevant.len();
    stats.true_positives += found.intersection(relevant).count();
}

/// Annotate many times, then go from each memento back to its annotations.
fn q2<R: Rng>(
    rng: &mut R,
    spec: &ScenarioSpec,
    s: usize,
    report: &mut Report,
) -> Result<(), EvaluateError> {
    let uri_r = format!("{ORIGIN}/q2/{s}");
    let w = gen_world(rng, spec, &uri_r)?;
    let density = rng.random_range(spec.crawl_density_min..=spec.crawl_density_max);
    let crawls = gen_crawls(rng, &w, density);

    let mut ta = Archive::new(ArchiveKind::Transactional, TA_BASE);
    ta.capture_transactional(&w.tl, w.now)?;
    let mut cr = Archive::new(ArchiveKind::Crawler, CR_BASE);
    cr.capture_crawls(&w.tl, &crawls)?;

    let whole = TimeInterval::new(w.tl.first_valid_from(), w.now)?;
    let k = rng.random_range(spec.annotations_min..=spec.annotations_max);
    let mut collection = Collection::new();
    let mut annotated = Vec::with_capacity(k);
    for j in 0..k {
        let when = random_instant(rng, whole);
        let trn = format!("{ORIGIN}/q2/{s}/trn/{j}");
        let view = dated_annotation(
            &format!("{ORIGIN}/q2/{s}/anno/{j}"),
            &format!("{ORIGIN}/q2/{s}/note/{j}"),
            &uri_r,
            when,
            &trn,
        );
        collection.ingest(&trn, &build_annotation(&view)?.serialize())?;
        annotated.push((trn, when));
    }
    let relevant_for = |span: TimeInterval| -> BTreeSet<String> {
        annotated
            .iter()
            .filter(|(_, when)| span.contains(*when))
            .map(|(trn, _)| trn.clone())
            .collect()
    };
    let found = |entries: Vec<CollectionEntry>| entries.into_iter().map(|e| e.uri_trn).collect();

    let ta_tm = ta.timemap(&uri_r)?;
    for m in ta.mementos(&uri_r) {
        let truth = true_span(&w, m.snapshot_time)?;
        let headers = MementoHeaders {
            content_datetime: m.snapshot_time,
            links: ta.memento_links(m, &format!("{TA_BASE}/timemap"))?,
        };
        let hit = annotations_for_memento(&m.uri_m, &headers, Some(&ta_tm), &collection, w.now)?;
        score(
            &mut report.valid,
            hit.estimate,
            truth,
            found(hit.entries),
            &relevant_for(truth),
        );
    }

    if crawls.is_empty() {
        return Ok(());
    }
    let cr_tm = cr.timemap(&uri_r)?;
    for m in cr.mementos(&uri_r) {
        let truth = true_span(&w, m.snapshot_time)?;
        let relevant = relevant_for(truth);
        let headers = MementoHeaders {
            content_datetime: m.snapshot_time,
            links: cr.memento_links(m, &format!("{CR_BASE}/timemap"))?,
        };
        let observed =
            annotations_for_memento(&m.uri_m, &headers, Some(&cr_tm), &collection, w.now)?;
        score(
            &mut report.observed,
            observed.estimate,
            truth,
            found(observed.entries),
            &relevant,
        );

        let approx = annotations_for_memento(&m.uri_m, &headers, None, &collection, w.now)?;
        if approx.estimate.interval.contains(m.snapshot_time) {
            report.approximate_contains_snapshot += 1;
        }
        score(
            &mut report.approximate,
            approx.estimate,
            truth,
            found(approx.entries),
            &relevant,
        );
    }
    Ok(())
}

pub fn evaluate(spec: &ScenarioSpec) -> Result<Report, EvaluateError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut report = Report {
        seed: spec.seed,
        ..Report::default()
    };
    for s in 0..spec.timelines * spec.trials {
        q1(&mut rng, spec, s, &mut report)?;
        q2(&mut rng, spec, s, &mut report)?;
        report.scenarios += 1;
    }
    Ok(report)
}

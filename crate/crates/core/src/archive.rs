//! Versioned resources, the two archive capture models, TimeGate negotiation
//! and TimeMap generation.
//!
//! A [`ResourceTimeline`] is ground truth: what an Original Resource served
//! at every second. An [`Archive`] is what an archive managed to record:
//!
//! * a transactional archive sees every change and records the exact span
//!   over which each representation was served (`mem:validOver`);
//! * a crawler archive only sees periodic snapshots, collapsing consecutive
//!   identical ones into a single memento with an observed span
//!   (`mem:observedOver`) and an observation count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, Term};
use crate::temporal::{
    format_archive_timestamp, format_xsd_datetime, parse_xsd_datetime, Instant, LinkEntry,
    TimeInterval,
};
use crate::vocab::{mem, RDF_TYPE, XSD_DATETIME};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArchiveError {
    #[error("{uri_r} has no representation at {} (first version {})", .t.unix(), .first.unix())]
    BeforeCreation {
        uri_r: String,
        t: Instant,
        first: Instant,
    },
    #[error("no mementos for {0}")]
    UnknownResource(String),
    #[error("memento {0} is not in this archive")]
    NotInArchive(String),
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
    #[error("order violation: {0}")]
    OrderViolation(String),
    #[error("malformed timemap: {0}")]
    MalformedTimeMap(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionRecord {
    pub valid_from: Instant,
    #[serde(with = "body_base64")]
    pub body: Vec<u8>,
}

/// Every representation an Original Resource has served, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TimelineRepr")]
pub struct ResourceTimeline {
    uri_r: String,
    versions: Vec<VersionRecord>,
}

#[derive(Deserialize)]
struct TimelineRepr {
    uri_r: String,
    versions: Vec<VersionRecord>,
}

impl TryFrom<TimelineRepr> for ResourceTimeline {
    type Error = ArchiveError;

    fn try_from(r: TimelineRepr) -> Result<Self, Self::Error> {
        ResourceTimeline::new(r.uri_r, r.versions)
    }
}

impl ResourceTimeline {
    pub fn new(
        uri_r: impl Into<String>,
        versions: Vec<VersionRecord>,
    ) -> Result<Self, ArchiveError> {
        let uri_r = uri_r.into();
        if versions.is_empty() {
            return Err(ArchiveError::InvalidTimeline(format!(
                "{uri_r} has no versions"
            )));
        }
        for pair in versions.windows(2) {
            if pair[1].valid_from <= pair[0].valid_from {
                return Err(ArchiveError::InvalidTimeline(format!(
                    "{uri_r}: version at {} does not follow {}",
                    pair[1].valid_from.unix(),
                    pair[0].valid_from.unix()
                )));
            }
            if pair[1].body == pair[0].body {
                return Err(ArchiveError::InvalidTimeline(format!(
                    "{uri_r}: version at {} repeats the previous body",
                    pair[1].valid_from.unix()
                )));
            }
        }
        Ok(ResourceTimeline { uri_r, versions })
    }

    pub fn single(uri_r: impl Into<String>, valid_from: Instant, body: impl Into<Vec<u8>>) -> Self {
        ResourceTimeline {
            uri_r: uri_r.into(),
            versions: vec![VersionRecord {
                valid_from,
                body: body.into(),
            }],
        }
    }

    pub fn uri_r(&self) -> &str {
        &self.uri_r
    }

    pub fn versions(&self) -> &[VersionRecord] {
        &self.versions
    }

    pub fn first_valid_from(&self) -> Instant {
        self.versions[0].valid_from
    }

    pub fn last_valid_from(&self) -> Instant {
        self.versions[self.versions.len() - 1].valid_from
    }

    /// Appends a version; it must be later than, and differ from, the current one.
    pub fn push(
        &mut self,
        valid_from: Instant,
        body: impl Into<Vec<u8>>,
    ) -> Result<(), ArchiveError> {
        let body = body.into();
        let last = &self.versions[self.versions.len() - 1];
        if valid_from <= last.valid_from {
            return Err(ArchiveError::InvalidTimeline(format!(
                "{}: new version at {} does not follow {}",
                self.uri_r,
                valid_from.unix(),
                last.valid_from.unix()
            )));
        }
        if body == last.body {
            return Err(ArchiveError::InvalidTimeline(format!(
                "{}: new version repeats the current body",
                self.uri_r
            )));
        }
        self.versions.push(VersionRecord { valid_from, body });
        Ok(())
    }

    /// Index of the version served at `t`.
    pub fn version_index_at(&self, t: Instant) -> Result<usize, ArchiveError> {
        let n = self.versions.partition_point(|v| v.valid_from <= t);
        if n == 0 {
            return Err(ArchiveError::BeforeCreation {
                uri_r: self.uri_r.clone(),
                t,
                first: self.first_valid_from(),
            });
        }
        Ok(n - 1)
    }

    /// The representation served at `t`.
    pub fn rep_at(&self, t: Instant) -> Result<&[u8], ArchiveError> {
        Ok(&self.versions[self.version_index_at(t)?].body)
    }

    /// Span over which version `idx` was served, closing the last one at `now`.
    pub fn version_span(&self, idx: usize, now: Instant) -> TimeInterval {
        let start = self.versions[idx].valid_from;
        let end = match self.versions.get(idx + 1) {
            Some(next) => Instant::from_unix(next.valid_from.unix() - 1),
            None => now.max(start),
        };
        TimeInterval::new(start, end).expect("version spans are ordered")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchiveKind {
    Transactional,
    Crawler,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MementoRecord {
    pub uri_m: String,
    pub uri_r: String,
    pub snapshot_time: Instant,
    #[serde(with = "body_base64")]
    pub body: Vec<u8>,
    pub span: Option<TimeInterval>,
    pub observed_span: Option<TimeInterval>,
    pub observations: Option<u32>,
}

impl MementoRecord {
    /// Whether this memento is the archive's answer for `t` without clamping.
    ///
    /// Transactional mementos cover their validity span; crawler mementos
    /// cover everything from their snapshot on, since negotiation picks the
    /// latest snapshot not after `t`.
    pub fn covers(&self, t: Instant) -> bool {
        match (self.span, self.observed_span) {
            (Some(span), _) => span.contains(t),
            (None, Some(_)) => self.snapshot_time <= t,
            (None, None) => self.snapshot_time == t,
        }
    }
}

/// The mementos an archive holds, per Original Resource, in snapshot order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Archive {
    kind: ArchiveKind,
    base: String,
    mementos: BTreeMap<String, Vec<MementoRecord>>,
}

/// `<base>/<14-digit stamp>/<uri_r>`
pub fn memento_uri(base: &str, snapshot: Instant, uri_r: &str) -> String {
    format!(
        "{}/{}/{}",
        base.trim_end_matches('/'),
        format_archive_timestamp(snapshot),
        uri_r
    )
}

impl Archive {
    pub fn new(kind: ArchiveKind, base: impl Into<String>) -> Self {
        Archive {
            kind,
            base: base.into().trim_end_matches('/').to_string(),
            mementos: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> ArchiveKind {
        self.kind
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn resources(&self) -> impl Iterator<Item = &str> {
        self.mementos.keys().map(String::as_str)
    }

    pub fn mementos(&self, uri_r: &str) -> &[MementoRecord] {
        self.mementos.get(uri_r).map_or(&[], Vec::as_slice)
    }

    fn known(&self, uri_r: &str) -> Result<&[MementoRecord], ArchiveError> {
        match self.mementos.get(uri_r) {
            Some(list) if !list.is_empty() => Ok(list),
            _ => Err(ArchiveError::UnknownResource(uri_r.to_string())),
        }
    }

    pub fn find(&self, uri_m: &str) -> Option<&MementoRecord> {
        self.mementos.values().flatten().find(|m| m.uri_m == uri_m)
    }

    /// Copies `other`'s mementos of `uri_r` into this archive, replacing any
    /// held for that resource.
    pub fn extend_from(&mut self, other: &Archive, uri_r: &str) {
        self.mementos
            .insert(uri_r.to_string(), other.mementos(uri_r).to_vec());
    }

    /// Looks a memento up by its resource and snapshot time.
    pub fn memento_at(&self, uri_r: &str, snapshot: Instant) -> Option<&MementoRecord> {
        let list = self.mementos.get(uri_r)?;
        list.binary_search_by_key(&snapshot, |m| m.snapshot_time)
            .ok()
            .map(|i| &list[i])
    }

    /// Records a timeline's versions with their exact validity spans; the
    /// last span closes at `now`.
    pub fn capture_transactional(
        &mut self,
        tl: &ResourceTimeline,
        now: Instant,
    ) -> Result<(), ArchiveError> {
        if now < tl.last_valid_from() {
            return Err(ArchiveError::OrderViolation(format!(
                "capture time {} precedes the last version of {}",
                now.unix(),
                tl.uri_r()
            )));
        }
        let records = tl
            .versions()
            .iter()
            .enumerate()
            .map(|(i, v)| MementoRecord {
                uri_m: memento_uri(&self.base, v.valid_from, tl.uri_r()),
                uri_r: tl.uri_r().to_string(),
                snapshot_time: v.valid_from,
                body: v.body.clone(),
                span: Some(tl.version_span(i, now)),
                observed_span: None,
                observations: None,
            })
            .collect();
        self.mementos.insert(tl.uri_r().to_string(), records);
        Ok(())
    }

    /// Snapshots the timeline at each crawl instant, merging runs of
    /// consecutive byte-identical snapshots into one memento.
    pub fn capture_crawls(
        &mut self,
        tl: &ResourceTimeline,
        crawls: &[Instant],
    ) -> Result<(), ArchiveError> {
        if crawls.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ArchiveError::OrderViolation(
                "crawl instants must strictly increase".into(),
            ));
        }
        let mut records: Vec<MementoRecord> = Vec::new();
        for &t in crawls {
            let body = tl.rep_at(t)?;
            match records.last_mut() {
                Some(run) if run.body == body => {
                    let first = run.snapshot_time;
                    run.observed_span = Some(TimeInterval::new(first, t).expect("crawls increase"));
                    run.observations = run.observations.map(|n| n + 1);
                }
                _ => records.push(MementoRecord {
                    uri_m: memento_uri(&self.base, t, tl.uri_r()),
                    uri_r: tl.uri_r().to_string(),
                    snapshot_time: t,
                    body: body.to_vec(),
                    span: None,
                    observed_span: Some(TimeInterval::point(t)),
                    observations: Some(1),
                }),
            }
        }
        if records.is_empty() {
            self.mementos.remove(tl.uri_r());
        } else {
            self.mementos.insert(tl.uri_r().to_string(), records);
        }
        Ok(())
    }

    /// Resolves `(uri_r, t)` to a memento. Requests outside the archive's
    /// coverage clamp to the nearest end.
    pub fn resolve_timegate(
        &self,
        uri_r: &str,
        t: Instant,
    ) -> Result<&MementoRecord, ArchiveError> {
        let list = self.known(uri_r)?;
        let idx = match self.kind {
            ArchiveKind::Transactional => {
                // Spans are disjoint and ordered; the first span ending at or
                // after t either contains t or lies after it.
                let i = list.partition_point(|m| m.span.is_some_and(|s| s.end() < t));
                i.min(list.len() - 1)
            }
            ArchiveKind::Crawler => list
                .partition_point(|m| m.snapshot_time <= t)
                .saturating_sub(1),
        };
        Ok(&list[idx])
    }

    /// The mementos immediately before and after `m` for the same resource.
    pub fn adjacent(
        &self,
        m: &MementoRecord,
    ) -> Result<(Option<&MementoRecord>, Option<&MementoRecord>), ArchiveError> {
        let list = self
            .mementos
            .get(&m.uri_r)
            .ok_or_else(|| ArchiveError::NotInArchive(m.uri_m.clone()))?;
        let i = list
            .binary_search_by_key(&m.snapshot_time, |x| x.snapshot_time)
            .ok()
            .filter(|&i| list[i].uri_m == m.uri_m)
            .ok_or_else(|| ArchiveError::NotInArchive(m.uri_m.clone()))?;
        Ok((i.checked_sub(1).map(|p| &list[p]), list.get(i + 1)))
    }

    /// The `Link` entries a Memento or TimeGate response carries for `m`:
    /// original, timemap, and the neighbouring mementos with their datetimes.
    pub fn memento_links(
        &self,
        m: &MementoRecord,
        timemap: &str,
    ) -> Result<Vec<LinkEntry>, ArchiveError> {
        let (prev, next) = self.adjacent(m)?;
        let mut links = vec![
            LinkEntry::new(&m.uri_r, "original"),
            LinkEntry::new(timemap, "timemap"),
        ];
        if let Some(p) = prev {
            links.push(LinkEntry::new(&p.uri_m, "prev-memento").with_datetime(p.snapshot_time));
        }
        if let Some(n) = next {
            links.push(LinkEntry::new(&n.uri_m, "next-memento").with_datetime(n.snapshot_time));
        }
        Ok(links)
    }

    /// TimeMap graph for one Original Resource.
    pub fn timemap(&self, uri_r: &str) -> Result<Graph, ArchiveError> {
        let list = self.known(uri_r)?;
        let iri = Term::iri;
        let dt = |t: Instant| Term::typed(format_xsd_datetime(t), XSD_DATETIME);
        let mut g = Graph::new();
        let r = iri(uri_r);
        g.insert(r.clone(), iri(RDF_TYPE), iri(mem::ORIGINAL_RESOURCE))?;
        for m in list {
            let node = iri(&m.uri_m);
            g.insert(node.clone(), iri(RDF_TYPE), iri(mem::MEMENTO))?;
            g.insert(node.clone(), iri(mem::MEMENTO_FOR), r.clone())?;
            g.insert(node.clone(), iri(mem::DATETIME), dt(m.snapshot_time))?;
            let spans = [
                (mem::VALID_OVER, m.span),
                (mem::OBSERVED_OVER, m.observed_span),
            ];
            for (pred, span) in spans {
                if let Some(span) = span {
                    let span_node = Term::iri(format!("{}#span", m.uri_m));
                    g.insert(node.clone(), iri(pred), span_node.clone())?;
                    g.insert(span_node.clone(), iri(RDF_TYPE), iri(mem::TIME_SPAN))?;
                    g.insert(span_node.clone(), iri(mem::START), dt(span.start()))?;
                    g.insert(span_node, iri(mem::END), dt(span.end()))?;
                }
            }
            if let Some(n) = m.observations {
                g.insert(node, iri(mem::OBSERVATIONS), Term::literal(n.to_string()))?;
            }
        }
        Ok(g)
    }
}

pub fn transactional_capture(
    base: &str,
    tl: &ResourceTimeline,
    now: Instant,
) -> Result<Archive, ArchiveError> {
    let mut a = Archive::new(ArchiveKind::Transactional, base);
    a.capture_transactional(tl, now)?;
    Ok(a)
}

pub fn crawler_capture(
    base: &str,
    tl: &ResourceTimeline,
    crawls: &[Instant],
) -> Result<Archive, ArchiveError> {
    let mut a = Archive::new(ArchiveKind::Crawler, base);
    a.capture_crawls(tl, crawls)?;
    Ok(a)
}

/// One memento as described by a TimeMap (bodies are not part of it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeMapEntry {
    pub uri_m: String,
    pub uri_r: String,
    pub snapshot_time: Instant,
    pub span: Option<TimeInterval>,
    pub observed_span: Option<TimeInterval>,
    pub observations: Option<u32>,
}

impl From<&MementoRecord> for TimeMapEntry {
    fn from(m: &MementoRecord) -> Self {
        TimeMapEntry {
            uri_m: m.uri_m.clone(),
            uri_r: m.uri_r.clone(),
            snapshot_time: m.snapshot_time,
            span: m.span,
            observed_span: m.observed_span,
            observations: m.observations,
        }
    }
}

fn malformed(msg: impl Into<String>) -> ArchiveError {
    ArchiveError::MalformedTimeMap(msg.into())
}

fn single<'a>(g: &'a Graph, s: &Term, p: &str) -> Result<Option<&'a Term>, ArchiveError> {
    let objs = g.objects(s, &Term::iri(p));
    match objs.as_slice() {
        [] => Ok(None),
        [one] => Ok(Some(*one)),
        _ => Err(malformed(format!("{} has several {p}", s))),
    }
}

fn datetime_of(g: &Graph, s: &Term, p: &str) -> Result<Option<Instant>, ArchiveError> {
    match single(g, s, p)? {
        None => Ok(None),
        Some(term) => match term.as_literal() {
            Some((v, Some(XSD_DATETIME))) => parse_xsd_datetime(v)
                .map(Some)
                .map_err(|e| malformed(e.to_string())),
            _ => Err(malformed(format!("{p} of {s} is not a dateTime literal"))),
        },
    }
}

/// Reads the `mem:start`/`mem:end` span hanging off `uri_m` via `predicate`.
pub fn timemap_span(
    g: &Graph,
    uri_m: &str,
    predicate: &str,
) -> Result<Option<TimeInterval>, ArchiveError> {
    let Some(span_node) = single(g, &Term::iri(uri_m), predicate)? else {
        return Ok(None);
    };
    let start = datetime_of(g, span_node, mem::START)?;
    let end = datetime_of(g, span_node, mem::END)?;
    match (start, end) {
        (Some(s), Some(e)) => TimeInterval::new(s, e)
            .map(Some)
            .map_err(|e| malformed(e.to_string())),
        _ => Err(malformed(format!("span of {uri_m} lacks start or end"))),
    }
}

/// Recovers the memento list from a TimeMap graph, in snapshot order.
pub fn parse_timemap(g: &Graph) -> Result<Vec<TimeMapEntry>, ArchiveError> {
    let mut out = Vec::new();
    for t in g.match_pattern(None, Some(&Term::iri(mem::MEMENTO_FOR)), None) {
        let uri_m = t.subject().as_iri().expect("subjects are IRIs").to_string();
        let uri_r = t
            .object()
            .as_iri()
            .ok_or_else(|| malformed("mementoFor object is a literal"))?
            .to_string();
        let node = Term::iri(&uri_m);
        let snapshot_time = datetime_of(g, &node, mem::DATETIME)?
            .ok_or_else(|| malformed(format!("{uri_m} has no datetime")))?;
        let observations = match single(g, &node, mem::OBSERVATIONS)? {
            None => None,
            Some(term) => Some(
                term.as_literal()
                    .and_then(|(v, _)| v.parse::<u32>().ok())
                    .filter(|n| *n > 0)
                    .ok_or_else(|| malformed(format!("bad observation count on {uri_m}")))?,
            ),
        };
        out.push(TimeMapEntry {
            span: timemap_span(g, &uri_m, mem::VALID_OVER)?,
            observed_span: timemap_span(g, &uri_m, mem::OBSERVED_OVER)?,
            uri_m,
            uri_r,
            snapshot_time,
            observations,
        });
    }
    out.sort_by(|a, b| (&a.uri_r, a.snapshot_time).cmp(&(&b.uri_r, b.snapshot_time)));
    Ok(out)
}

/// Original Resources declared in a TimeMap that some memento points at.
pub fn timemap_original(g: &Graph) -> Vec<String> {
    let mut out: Vec<String> = g
        .subjects(&Term::iri(RDF_TYPE), &Term::iri(mem::ORIGINAL_RESOURCE))
        .into_iter()
        .filter(|r| !g.subjects(&Term::iri(mem::MEMENTO_FOR), r).is_empty())
        .filter_map(|r| r.as_iri().map(str::to_string))
        .collect();
    out.dedup();
    out
}

mod body_base64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(body: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(body))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        STANDARD.decode(s).map_err(serde::de::Error::custom)
    }
}

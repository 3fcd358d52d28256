//! The two retrieval pipelines.
//!
//! * [`reconstruct`]: given an annotation, find the mementos of each resource
//!   as they were when the annotation was made.
//! * [`annotations_for_memento`]: given a memento, find the original
//!   resource, estimate the interval over which its representation was
//!   served, and search the collection with both.
//!
//! Interval evidence is preferred in the order Valid (transactional
//! TimeMap), Observed (crawler TimeMap), Approximate (midpoints between
//! neighbouring mementos from the Link header).

use std::fmt;

use thiserror::Error;

use crate::archive::{timemap_span, ArchiveError, MementoRecord};
use crate::collection::{Collection, CollectionEntry};
use crate::graph::{Graph, Term};
use crate::model::{
    classify_time, extract_time_tuples, rewrite_uniform_to_varied, AnnotationView, ModelError,
    TimeClass,
};
use crate::temporal::{
    midpoint, parse_http_datetime, parse_link_header, Instant, LinkEntry, TemporalError,
    TimeInterval,
};
use crate::vocab::mem;

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("could not resolve {uri_r}: {source}")]
    ResolutionFailed {
        uri_r: String,
        #[source]
        source: ArchiveError,
    },
    #[error("no rel=\"original\" link")]
    NoOriginalLink,
    #[error("memento {0} not described by the TimeMap")]
    UnknownMemento(String),
    #[error("TimeMap has no span evidence for {0}")]
    NoSpanEvidence(String),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub uri_r: String,
    pub requested: Instant,
    pub uri_m: String,
    pub snapshot_time: Instant,
    pub body: Vec<u8>,
    /// The memento does not cover the requested instant.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconstructedAnnotation {
    /// The annotation, with Uniform time rewritten to per-resource contexts.
    pub view: AnnotationView,
    pub time_class: TimeClass,
    pub resolutions: Vec<Resolution>,
    pub reconstructed_at: Instant,
}

/// Resolves every dated resource of `view` through `gate`.
///
/// Timeless annotations have no resolutions; they apply to whatever the
/// resources currently serve.
pub fn reconstruct<G>(
    view: &AnnotationView,
    mut gate: G,
    now: Instant,
) -> Result<ReconstructedAnnotation, DiscoveryError>
where
    G: FnMut(&str, Instant) -> Result<MementoRecord, ArchiveError>,
{
    view.validate()?;
    let time_class = classify_time(view);
    let view = match time_class {
        TimeClass::UniformTime => rewrite_uniform_to_varied(view)?,
        _ => view.clone(),
    };
    let mut resolutions = Vec::new();
    for (uri_r, requested) in extract_time_tuples(&view) {
        let m = gate(&uri_r, requested).map_err(|source| DiscoveryError::ResolutionFailed {
            uri_r: uri_r.clone(),
            source,
        })?;
        resolutions.push(Resolution {
            clamped: !m.covers(requested),
            uri_r,
            requested,
            uri_m: m.uri_m,
            snapshot_time: m.snapshot_time,
            body: m.body,
        });
    }
    Ok(ReconstructedAnnotation {
        view,
        time_class,
        resolutions,
        reconstructed_at: now,
    })
}

pub fn discover_original(links: &[LinkEntry]) -> Result<String, DiscoveryError> {
    links
        .iter()
        .find(|l| l.rel.split_ascii_whitespace().any(|r| r == "original"))
        .map(|l| l.target.clone())
        .ok_or(DiscoveryError::NoOriginalLink)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Certainty {
    Valid,
    Observed,
    Approximate,
}

impl fmt::Display for Certainty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Certainty::Valid => "valid",
            Certainty::Observed => "observed",
            Certainty::Approximate => "approximate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalEstimate {
    pub interval: TimeInterval,
    pub certainty: Certainty,
}

/// Midpoint estimate of the interval over which the current memento's
/// representation was served. The first memento is its own lower bound and
/// the most recent one extends to `now`.
pub fn approximate_interval(
    prev: Option<Instant>,
    cur: Instant,
    next: Option<Instant>,
    now: Instant,
) -> Result<IntervalEstimate, DiscoveryError> {
    let order = |msg: String| DiscoveryError::Temporal(TemporalError::OrderViolation(msg));
    if let Some(p) = prev.filter(|p| *p >= cur) {
        return Err(order(format!(
            "previous memento {} not before {}",
            p.unix(),
            cur.unix()
        )));
    }
    if let Some(n) = next.filter(|n| *n <= cur) {
        return Err(order(format!(
            "next memento {} not after {}",
            n.unix(),
            cur.unix()
        )));
    }
    if cur > now {
        return Err(order(format!(
            "memento {} is in the future of {}",
            cur.unix(),
            now.unix()
        )));
    }
    let lower = match prev {
        Some(p) => midpoint(p, cur)?,
        None => cur,
    };
    let upper = match next {
        Some(n) => midpoint(cur, n)?,
        None => now,
    };
    Ok(IntervalEstimate {
        interval: TimeInterval::new(lower, upper)?,
        certainty: Certainty::Approximate,
    })
}

/// Reads the memento's span evidence from a TimeMap.
pub fn precise_interval(tm: &Graph, uri_m: &str) -> Result<IntervalEstimate, DiscoveryError> {
    if tm
        .match_pattern(
            Some(&Term::iri(uri_m)),
            Some(&Term::iri(mem::MEMENTO_FOR)),
            None,
        )
        .is_empty()
    {
        return Err(DiscoveryError::UnknownMemento(uri_m.to_string()));
    }
    for (predicate, certainty) in [
        (mem::VALID_OVER, Certainty::Valid),
        (mem::OBSERVED_OVER, Certainty::Observed),
    ] {
        if let Some(interval) = timemap_span(tm, uri_m, predicate)? {
            return Ok(IntervalEstimate {
                interval,
                certainty,
            });
        }
    }
    Err(DiscoveryError::NoSpanEvidence(uri_m.to_string()))
}

/// What a Memento or TimeGate response tells a client about the memento.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MementoHeaders {
    pub content_datetime: Instant,
    pub links: Vec<LinkEntry>,
}

impl MementoHeaders {
    /// From the raw `Content-Datetime` and `Link` header values.
    pub fn from_values(content_datetime: &str, link: &str) -> Result<Self, DiscoveryError> {
        Ok(MementoHeaders {
            content_datetime: parse_http_datetime(content_datetime)?,
            links: parse_link_header(link)?,
        })
    }

    fn neighbour(&self, rel: &str) -> Result<Option<Instant>, DiscoveryError> {
        match self
            .links
            .iter()
            .find(|l| l.rel.split_ascii_whitespace().any(|r| r == rel))
        {
            None => Ok(None),
            Some(l) => match l.datetime() {
                Some(t) => Ok(Some(t?)),
                None => Err(TemporalError::MalformedLinkHeader(format!(
                    "{rel} link without datetime"
                ))
                .into()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MementoAnnotations {
    pub uri_r: String,
    pub estimate: IntervalEstimate,
    pub entries: Vec<CollectionEntry>,
}

/// Finds the annotations that apply to the representation archived at `uri_m`.
pub fn annotations_for_memento(
    uri_m: &str,
    headers: &MementoHeaders,
    tm: Option<&Graph>,
    collection: &Collection,
    now: Instant,
) -> Result<MementoAnnotations, DiscoveryError> {
    let uri_r = discover_original(&headers.links)?;
    let precise = match tm {
        Some(tm) => match precise_interval(tm, uri_m) {
            Ok(est) => Some(est),
            Err(DiscoveryError::NoSpanEvidence(_)) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    let estimate = match precise {
        Some(est) => est,
        None => approximate_interval(
            headers.neighbour("prev-memento")?,
            headers.content_datetime,
            headers.neighbour("next-memento")?,
            now,
        )?,
    };
    let entries = collection
        .search(&uri_r, Some(&estimate.interval))
        .into_iter()
        .cloned()
        .collect();
    Ok(MementoAnnotations {
        uri_r,
        estimate,
        entries,
    })
}

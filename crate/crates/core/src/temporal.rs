//! Temporal primitives and the HTTP header micro-formats built on them.
//!
//! Everything here works at one-second granularity in UTC. Three wire
//! formats are supported, each with a strict parser and a canonical emitter:
//!
//! * RFC 1123 datetimes in GMT (`Fri, 22 Jan 2010 01:00:02 GMT`), used by
//!   `Accept-Datetime`, `Content-Datetime` and the `datetime` Link parameter.
//! * 14-digit archive path stamps (`20100122010002`).
//! * `Link` header values (`<uri>;rel="timegate";k="v", ...`).

use std::fmt;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const HTTP_DATE_FORMAT: &str = "%a, %d %b %Y %H:%M:%S GMT";
const ARCHIVE_STAMP_FORMAT: &str = "%Y%m%d%H%M%S";
const XSD_DATETIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("malformed datetime {0:?}")]
    MalformedDatetime(String),
    #[error("malformed archive timestamp {0:?}")]
    MalformedTimestamp(String),
    #[error("malformed link header: {0}")]
    MalformedLinkHeader(String),
    #[error("order violation: {0}")]
    OrderViolation(String),
}

/// A UTC point in time, in whole seconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instant(i64);

impl Instant {
    pub const EPOCH: Instant = Instant(0);

    pub const fn from_unix(seconds: i64) -> Self {
        Instant(seconds)
    }

    pub const fn unix(self) -> i64 {
        self.0
    }

    pub fn now() -> Self {
        Instant(Utc::now().timestamp())
    }

    pub fn checked_add(self, seconds: i64) -> Option<Self> {
        self.0.checked_add(seconds).map(Instant)
    }

    fn to_chrono(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.0, 0).expect("instant within chrono range")
    }
}

impl fmt::Display for Instant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_http_datetime(*self))
    }
}

/// A closed interval `[start, end]` of instants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "IntervalRepr")]
pub struct TimeInterval {
    start: Instant,
    end: Instant,
}

#[derive(Deserialize)]
struct IntervalRepr {
    start: Instant,
    end: Instant,
}

impl TryFrom<IntervalRepr> for TimeInterval {
    type Error = TemporalError;

    fn try_from(r: IntervalRepr) -> Result<Self, Self::Error> {
        TimeInterval::new(r.start, r.end)
    }
}

impl TimeInterval {
    pub fn new(start: Instant, end: Instant) -> Result<Self, TemporalError> {
        if start > end {
            return Err(TemporalError::OrderViolation(format!(
                "interval start {} after end {}",
                start.unix(),
                end.unix()
            )));
        }
        Ok(TimeInterval { start, end })
    }

    pub fn point(t: Instant) -> Self {
        TimeInterval { start: t, end: t }
    }

    pub fn start(&self) -> Instant {
        self.start
    }

    pub fn end(&self) -> Instant {
        self.end
    }

    pub fn contains(&self, t: Instant) -> bool {
        self.start <= t && t <= self.end
    }

    /// Number of whole seconds covered, counting both ends.
    pub fn len_seconds(&self) -> u64 {
        (self.end.unix() - self.start.unix()) as u64 + 1
    }

    pub fn intersection(&self, other: &TimeInterval) -> Option<TimeInterval> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start <= end).then_some(TimeInterval { start, end })
    }

    /// Jaccard overlap of the two intervals measured in covered seconds.
    pub fn jaccard(&self, other: &TimeInterval) -> f64 {
        let inter = self.intersection(other).map_or(0, |i| i.len_seconds());
        let union = self.len_seconds() + other.len_seconds() - inter;
        inter as f64 / union as f64
    }
}

/// One relation from an HTTP `Link` header.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinkEntry {
    pub target: String,
    pub rel: String,
    pub params: Vec<(String, String)>,
}

impl LinkEntry {
    pub fn new(target: impl Into<String>, rel: impl Into<String>) -> Self {
        LinkEntry {
            target: target.into(),
            rel: rel.into(),
            params: Vec::new(),
        }
    }

    pub fn with_param(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.push((name.into(), value.into()));
        self
    }

    pub fn with_datetime(self, t: Instant) -> Self {
        self.with_param("datetime", format_http_datetime(t))
    }

    pub fn param(&self, name: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// The `datetime` parameter parsed as an RFC 1123 datetime, if present.
    pub fn datetime(&self) -> Option<Result<Instant, TemporalError>> {
        self.param("datetime").map(parse_http_datetime)
    }
}

/// Checks the `scheme ":" rest` shape of an absolute URI, rejecting characters
/// that can never appear unescaped in one.
pub fn is_absolute_uri(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    let scheme_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    scheme_ok
        && !rest.is_empty()
        && !s.chars().any(|c| {
            c.is_whitespace()
                || c.is_control()
                || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`')
        })
}

pub fn parse_http_datetime(s: &str) -> Result<Instant, TemporalError> {
    let malformed = || TemporalError::MalformedDatetime(s.to_string());
    // Fixed-width: "Www, DD Mon YYYY HH:MM:SS GMT"
    if s.len() != 29 || !s.is_ascii() || !s.ends_with(" GMT") {
        return Err(malformed());
    }
    let parsed = NaiveDateTime::parse_from_str(s, HTTP_DATE_FORMAT).map_err(|_| malformed())?;
    Ok(Instant(parsed.and_utc().timestamp()))
}

pub fn format_http_datetime(t: Instant) -> String {
    t.to_chrono().format(HTTP_DATE_FORMAT).to_string()
}

pub fn parse_archive_timestamp(s: &str) -> Result<Instant, TemporalError> {
    if s.len() != 14 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(TemporalError::MalformedTimestamp(s.to_string()));
    }
    let parsed = NaiveDateTime::parse_from_str(s, ARCHIVE_STAMP_FORMAT)
        .map_err(|_| TemporalError::MalformedTimestamp(s.to_string()))?;
    Ok(Instant(parsed.and_utc().timestamp()))
}

pub fn format_archive_timestamp(t: Instant) -> String {
    t.to_chrono().format(ARCHIVE_STAMP_FORMAT).to_string()
}

/// Parses the `Z`-suffixed XML Schema dateTime form used in graph literals.
pub fn parse_xsd_datetime(s: &str) -> Result<Instant, TemporalError> {
    if s.len() != 20 || !s.is_ascii() || !s.ends_with('Z') {
        return Err(TemporalError::MalformedDatetime(s.to_string()));
    }
    let parsed = NaiveDateTime::parse_from_str(s, XSD_DATETIME_FORMAT)
        .map_err(|_| TemporalError::MalformedDatetime(s.to_string()))?;
    Ok(Instant(parsed.and_utc().timestamp()))
}

pub fn format_xsd_datetime(t: Instant) -> String {
    t.to_chrono().format(XSD_DATETIME_FORMAT).to_string()
}

/// Floor of the arithmetic mean of two ordered instants.
pub fn midpoint(a: Instant, b: Instant) -> Result<Instant, TemporalError> {
    if a > b {
        return Err(TemporalError::OrderViolation(format!(
            "midpoint of {} and {}",
            a.unix(),
            b.unix()
        )));
    }
    Ok(Instant(a.0 + (b.0 - a.0).div_euclid(2)))
}

fn is_token_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "!#$%&'*+-.^_`|~".contains(c)
}

struct LinkCursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> LinkCursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start_matches([' ', '\t']);
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn err(&self, what: &str) -> TemporalError {
        TemporalError::MalformedLinkHeader(format!("{what} at byte {}", self.pos))
    }

    fn until(&mut self, close: char, what: &str) -> Result<&'a str, TemporalError> {
        let rest = self.rest();
        let end = rest.find(close).ok_or_else(|| self.err(what))?;
        self.pos += end + close.len_utf8();
        Ok(&rest[..end])
    }

    fn token(&mut self) -> Result<&'a str, TemporalError> {
        let rest = self.rest();
        let len = rest.find(|c: char| !is_token_char(c)).unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected parameter name"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }
}

/// Parses a `Link` header value into its entries, in source order.
pub fn parse_link_header(s: &str) -> Result<Vec<LinkEntry>, TemporalError> {
    let mut cur = LinkCursor { src: s, pos: 0 };
    let mut entries = Vec::new();
    loop {
        cur.skip_ws();
        if !cur.eat('<') {
            return Err(cur.err("expected '<'"));
        }
        let target = cur.until('>', "unbalanced '<'")?;
        if target.contains('<') {
            return Err(cur.err("unbalanced '<'"));
        }
        if !is_absolute_uri(target) {
            return Err(TemporalError::MalformedLinkHeader(format!(
                "link target {target:?} is not an absolute URI"
            )));
        }
        let mut rel: Option<String> = None;
        let mut params = Vec::new();
        loop {
            cur.skip_ws();
            if !cur.eat(';') {
                break;
            }
            cur.skip_ws();
            let name = cur.token()?;
            cur.skip_ws();
            if !cur.eat('=') {
                return Err(cur.err("expected '='"));
            }
            cur.skip_ws();
            if !cur.eat('"') {
                return Err(cur.err("expected quoted value"));
            }
            let value = cur.until('"', "unbalanced '\"'")?;
            if name.eq_ignore_ascii_case("rel") {
                if rel.is_some() {
                    return Err(cur.err("duplicate rel"));
                }
                if value.is_empty() {
                    return Err(cur.err("empty rel"));
                }
                rel = Some(value.to_string());
            } else {
                params.push((name.to_string(), value.to_string()));
            }
        }
        let rel = rel.ok_or_else(|| {
            TemporalError::MalformedLinkHeader(format!("entry <{target}> has no rel"))
        })?;
        entries.push(LinkEntry {
            target: target.to_string(),
            rel,
            params,
        });
        cur.skip_ws();
        if cur.at_end() {
            return Ok(entries);
        }
        if !cur.eat(',') {
            return Err(cur.err("expected ',' between entries"));
        }
    }
}

/// Canonical `Link` header value for `entries`.
pub fn emit_link_header(entries: &[LinkEntry]) -> String {
    let mut out = String::new();
    for (i, e) in entries.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('<');
        out.push_str(&e.target);
        out.push_str(">;rel=\"");
        out.push_str(&e.rel);
        out.push('"');
        for (k, v) in &e.params {
            out.push(';');
            out.push_str(k);
            out.push_str("=\"");
            out.push_str(v);
            out.push('"');
        }
    }
    out
}

//! A small set-semantics triple store and its line-oriented text format.
//!
//! Each line of the text format holds one triple:
//!
//! ```text
//! <http://s> <http://p> <http://o> .
//! <http://s> <http://p> "plain" .
//! <http://s> <http://p> "2010-01-22T01:00:02Z"^^<http://www.w3.org/2001/XMLSchema#dateTime> .
//! ```
//!
//! There are no blank nodes. Serialization sorts lines, so equal graphs
//! always serialize to identical bytes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::temporal::is_absolute_uri;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("malformed triple on line {line}: {reason}")]
    MalformedTriple { line: usize, reason: String },
    #[error("invalid term: {0}")]
    InvalidTerm(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    Literal {
        value: String,
        datatype: Option<String>,
    },
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn literal(s: impl Into<String>) -> Self {
        Term::Literal {
            value: s.into(),
            datatype: None,
        }
    }

    pub fn typed(s: impl Into<String>, datatype: impl Into<String>) -> Self {
        Term::Literal {
            value: s.into(),
            datatype: Some(datatype.into()),
        }
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            Term::Literal { .. } => None,
        }
    }

    pub fn as_literal(&self) -> Option<(&str, Option<&str>)> {
        match self {
            Term::Literal { value, datatype } => Some((value, datatype.as_deref())),
            Term::Iri(_) => None,
        }
    }

    fn validate(&self) -> Result<(), GraphError> {
        match self {
            Term::Iri(s) if !is_absolute_uri(s) => Err(GraphError::InvalidTerm(format!(
                "{s:?} is not an absolute IRI"
            ))),
            Term::Literal {
                datatype: Some(dt), ..
            } if !is_absolute_uri(dt) => Err(GraphError::InvalidTerm(format!(
                "datatype {dt:?} is not an absolute IRI"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(s) => write!(f, "<{s}>"),
            Term::Literal { value, datatype } => {
                f.write_str("\"")?;
                for c in value.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                if let Some(dt) = datatype {
                    write!(f, "^^<{dt}>")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    subject: Term,
    predicate: Term,
    object: Term,
}

impl Triple {
    /// Builds a triple, checking that subject and predicate are IRIs and
    /// every IRI is absolute.
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, GraphError> {
        if subject.as_iri().is_none() {
            return Err(GraphError::InvalidTerm(
                "literal in subject position".into(),
            ));
        }
        if predicate.as_iri().is_none() {
            return Err(GraphError::InvalidTerm(
                "literal in predicate position".into(),
            ));
        }
        subject.validate()?;
        predicate.validate()?;
        object.validate()?;
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Term {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// A set of triples with per-position indexes.
///
/// Triples are keyed by their serialized line, which gives `match_pattern`
/// and `serialize` their lexicographic order for free.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: BTreeMap<String, Triple>,
    by_subject: HashMap<Term, BTreeSet<String>>,
    by_predicate: HashMap<Term, BTreeSet<String>>,
    by_object: HashMap<Term, BTreeSet<String>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.triples.keys().eq(other.triples.keys())
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Inserts `t`, returning false if it was already present.
    pub fn add(&mut self, t: Triple) -> bool {
        let key = t.to_string();
        if self.triples.contains_key(&key) {
            return false;
        }
        self.by_subject
            .entry(t.subject.clone())
            .or_default()
            .insert(key.clone());
        self.by_predicate
            .entry(t.predicate.clone())
            .or_default()
            .insert(key.clone());
        self.by_object
            .entry(t.object.clone())
            .or_default()
            .insert(key.clone());
        self.triples.insert(key, t);
        true
    }

    /// Convenience for `add(Triple::new(s, p, o)?)`.
    pub fn insert(&mut self, s: Term, p: Term, o: Term) -> Result<bool, GraphError> {
        Ok(self.add(Triple::new(s, p, o)?))
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains_key(&t.to_string())
    }

    pub fn extend(&mut self, other: &Graph) {
        for t in other.iter() {
            self.add(t.clone());
        }
    }

    /// All triples in serialized order.
    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.values()
    }

    /// Triples agreeing with every bound position, in serialized order.
    pub fn match_pattern(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
    ) -> Vec<&Triple> {
        let mut candidates: Option<&BTreeSet<String>> = None;
        for (bound, index) in [
            (s, &self.by_subject),
            (p, &self.by_predicate),
            (o, &self.by_object),
        ] {
            if let Some(term) = bound {
                match index.get(term) {
                    None => return Vec::new(),
                    Some(keys) => {
                        if candidates.is_none_or(|c| keys.len() < c.len()) {
                            candidates = Some(keys);
                        }
                    }
                }
            }
        }
        let agrees = |t: &Triple| {
            s.is_none_or(|s| *s == t.subject)
                && p.is_none_or(|p| *p == t.predicate)
                && o.is_none_or(|o| *o == t.object)
        };
        match candidates {
            None => self.triples.values().collect(),
            Some(keys) => keys
                .iter()
                .map(|k| &self.triples[k])
                .filter(|t| agrees(t))
                .collect(),
        }
    }

    /// Objects of `(s, p, ?)`.
    pub fn objects<'a>(&'a self, s: &Term, p: &Term) -> Vec<&'a Term> {
        self.match_pattern(Some(s), Some(p), None)
            .into_iter()
            .map(|t| &t.object)
            .collect()
    }

    /// Subjects of `(?, p, o)`.
    pub fn subjects<'a>(&'a self, p: &Term, o: &Term) -> Vec<&'a Term> {
        self.match_pattern(None, Some(p), Some(o))
            .into_iter()
            .map(|t| &t.subject)
            .collect()
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for line in self.triples.keys() {
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Graph, GraphError> {
        let mut g = Graph::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            g.add(parse_line(line, idx + 1)?);
        }
        Ok(g)
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut g = Graph::new();
        for t in iter {
            g.add(t);
        }
        g
    }
}

struct LineParser<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl LineParser<'_> {
    fn err(&self, reason: impl Into<String>) -> GraphError {
        GraphError::MalformedTriple {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn skip_ws(&mut self) -> bool {
        let mut any = false;
        while self.chars.peek().is_some_and(|c| *c == ' ' || *c == '\t') {
            self.chars.next();
            any = true;
        }
        any
    }

    fn iri(&mut self) -> Result<String, GraphError> {
        let mut out = String::new();
        loop {
            match self.chars.next() {
                Some('>') => return Ok(out),
                Some(c) if c == '<' || c == '"' || c.is_whitespace() => {
                    return Err(self.err(format!("unexpected {c:?} inside IRI")))
                }
                Some(c) => out.push(c),
                None => return Err(self.err("unterminated IRI")),
            }
        }
    }

    fn term(&mut self) -> Result<Term, GraphError> {
        match self.chars.next() {
            Some('<') => Ok(Term::Iri(self.iri()?)),
            Some('"') => {
                let mut value = String::new();
                loop {
                    match self.chars.next() {
                        Some('"') => break,
                        Some('\\') => match self.chars.next() {
                            Some('"') => value.push('"'),
                            Some('\\') => value.push('\\'),
                            Some('n') => value.push('\n'),
                            Some('r') => value.push('\r'),
                            Some('t') => value.push('\t'),
                            other => return Err(self.err(format!("bad escape {other:?}"))),
                        },
                        Some(c) => value.push(c),
                        None => return Err(self.err("unterminated literal")),
                    }
                }
                let datatype = if self.chars.peek() == Some(&'^') {
                    self.chars.next();
                    if self.chars.next() != Some('^') || self.chars.next() != Some('<') {
                        return Err(self.err("expected ^^<datatype>"));
                    }
                    Some(self.iri()?)
                } else {
                    None
                };
                Ok(Term::Literal { value, datatype })
            }
            other => Err(self.err(format!("expected term, found {other:?}"))),
        }
    }
}

fn parse_line(line: &str, number: usize) -> Result<Triple, GraphError> {
    let mut p = LineParser {
        chars: line.chars().peekable(),
        line: number,
    };
    let s = p.term()?;
    if !p.skip_ws() {
        return Err(p.err("expected whitespace after subject"));
    }
    let pred = p.term()?;
    if !p.skip_ws() {
        return Err(p.err("expected whitespace after predicate"));
    }
    let o = p.term()?;
    if !p.skip_ws() || p.chars.next() != Some('.') {
        return Err(p.err("missing trailing ' .'"));
    }
    p.skip_ws();
    if p.chars.next().is_some() {
        return Err(p.err("trailing characters after '.'"));
    }
    Triple::new(s, pred, o).map_err(|e| p.err(e.to_string()))
}

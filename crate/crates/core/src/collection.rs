//! The annotation collection: harvests Transcriptions and answers
//! target + time interval searches.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::encoding::encode_component;
use crate::graph::{Graph, GraphError, Term};
use crate::model::{
    classify_time, parse_annotation, AnnotationView, ContextRole, ModelError, TimeClass,
};
use crate::temporal::{Instant, TimeInterval};
use crate::vocab::oac;

const INDEX_FILE: &str = "index.tsv";

#[derive(Debug, Error)]
pub enum CollectionError {
    #[error("malformed transcription: {0}")]
    MalformedTranscription(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("fetching {uri} failed: {reason}")]
    FetchFailed { uri: String, reason: String },
    #[error("collection storage: {0}")]
    Io(#[from] io::Error),
}

impl From<GraphError> for CollectionError {
    fn from(e: GraphError) -> Self {
        CollectionError::MalformedTranscription(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectionEntry {
    pub uri_trn: String,
    pub view: AnnotationView,
    pub time_class: TimeClass,
    text: String,
}

impl CollectionEntry {
    /// The instants at which this annotation considers `target`.
    ///
    /// Uniform annotations apply their single instant to every target.
    pub fn target_whens(&self, target: &str) -> Vec<Instant> {
        match self.time_class {
            TimeClass::Timeless => Vec::new(),
            TimeClass::UniformTime => self.view.annotation_when.into_iter().collect(),
            TimeClass::VariedTime => {
                let mut whens: Vec<Instant> = self
                    .view
                    .contexts
                    .iter()
                    .filter(|c| c.role == ContextRole::TargetContext && c.about == target)
                    .filter_map(|c| c.when)
                    .collect();
                whens.sort();
                whens
            }
        }
    }

    /// The transcription text this entry was ingested from.
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Whether this entry answers a search for `target` over `interval`,
    /// and if so the instant it sorts under.
    ///
    /// Entries with no instant for the target (Timeless, or Varied without a
    /// dated context on it) match every interval.
    pub fn match_key(
        &self,
        target: &str,
        interval: Option<&TimeInterval>,
    ) -> Option<Option<Instant>> {
        if !self.view.targets.iter().any(|t| t == target) {
            return None;
        }
        let whens = self.target_whens(target);
        if whens.is_empty() {
            return Some(None);
        }
        match interval {
            None => Some(whens.first().copied()),
            Some(iv) => whens.into_iter().find(|w| iv.contains(*w)).map(Some),
        }
    }
}

/// Parses a transcription document holding exactly one annotation.
pub fn parse_transcription(text: &str) -> Result<AnnotationView, CollectionError> {
    let g = Graph::parse(text)?;
    let transcribes = g.match_pattern(None, Some(&Term::iri(oac::TRANSCRIBES)), None);
    let [t] = transcribes.as_slice() else {
        return Err(CollectionError::MalformedTranscription(format!(
            "expected exactly one oac:transcribes triple, found {}",
            transcribes.len()
        )));
    };
    let uri_a = t
        .object()
        .as_iri()
        .ok_or_else(|| {
            CollectionError::MalformedTranscription("oac:transcribes object is a literal".into())
        })?
        .to_string();
    Ok(parse_annotation(&g, &uri_a)?)
}

#[derive(Debug, Default)]
pub struct HarvestReport {
    pub ingested: Vec<String>,
    pub failures: Vec<(String, CollectionError)>,
}

#[derive(Debug, Clone, Default)]
pub struct Collection {
    entries: BTreeMap<String, CollectionEntry>,
    by_target: HashMap<String, BTreeSet<String>>,
}

impl Collection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, uri_trn: &str) -> Option<&CollectionEntry> {
        self.entries.get(uri_trn)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CollectionEntry> {
        self.entries.values()
    }

    fn unindex(&mut self, uri_trn: &str) {
        if let Some(old) = self.entries.remove(uri_trn) {
            for t in &old.view.targets {
                if let Some(set) = self.by_target.get_mut(t) {
                    set.remove(uri_trn);
                    if set.is_empty() {
                        self.by_target.remove(t);
                    }
                }
            }
        }
    }

    /// Adds or replaces the entry for `uri_trn`.
    pub fn ingest(
        &mut self,
        uri_trn: &str,
        text: &str,
    ) -> Result<&CollectionEntry, CollectionError> {
        let view = parse_transcription(text)?;
        self.unindex(uri_trn);
        for t in &view.targets {
            self.by_target
                .entry(t.clone())
                .or_default()
                .insert(uri_trn.to_string());
        }
        let entry = CollectionEntry {
            uri_trn: uri_trn.to_string(),
            time_class: classify_time(&view),
            view,
            text: text.to_string(),
        };
        self.entries.insert(uri_trn.to_string(), entry);
        Ok(&self.entries[uri_trn])
    }

    /// Fetches and ingests every feed URI, collecting per-item failures.
    pub fn harvest<F>(&mut self, feed: &[String], mut fetch: F) -> HarvestReport
    where
        F: FnMut(&str) -> Result<String, String>,
    {
        let mut report = HarvestReport::default();
        for uri in feed {
            let result = fetch(uri)
                .map_err(|reason| CollectionError::FetchFailed {
                    uri: uri.clone(),
                    reason,
                })
                .and_then(|text| self.ingest(uri, &text).map(|_| ()));
            match result {
                Ok(()) => report.ingested.push(uri.clone()),
                Err(e) => report.failures.push((uri.clone(), e)),
            }
        }
        report
    }

    /// Entries annotating `target`, restricted to `interval` when given,
    /// ordered by (instant, transcription URI).
    pub fn search(&self, target: &str, interval: Option<&TimeInterval>) -> Vec<&CollectionEntry> {
        let Some(candidates) = self.by_target.get(target) else {
            return Vec::new();
        };
        let mut hits: Vec<(Option<Instant>, &CollectionEntry)> = candidates
            .iter()
            .map(|k| &self.entries[k])
            .filter_map(|e| e.match_key(target, interval).map(|when| (when, e)))
            .collect();
        hits.sort_by(|a, b| (a.0, &a.1.uri_trn).cmp(&(b.0, &b.1.uri_trn)));
        hits.into_iter().map(|(_, e)| e).collect()
    }

    /// Writes each transcription to `dir` plus an index naming them.
    pub fn save(&self, dir: &Path) -> Result<(), CollectionError> {
        fs::create_dir_all(dir)?;
        let mut index = String::new();
        for e in self.entries.values() {
            let file = format!("{}.nt", encode_component(&e.uri_trn));
            fs::write(dir.join(&file), &e.text)?;
            index.push_str(&e.uri_trn);
            index.push('\t');
            index.push_str(&file);
            index.push('\n');
        }
        fs::write(dir.join(INDEX_FILE), index)?;
        Ok(())
    }

    /// Rebuilds a collection from a directory written by [`Collection::save`].
    /// A missing directory yields an empty collection.
    pub fn load(dir: &Path) -> Result<Self, CollectionError> {
        let mut c = Collection::new();
        let index = match fs::read_to_string(dir.join(INDEX_FILE)) {
            Ok(s) => s,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(c),
            Err(e) => return Err(e.into()),
        };
        for line in index.lines().filter(|l| !l.is_empty()) {
            let (uri_trn, file) = line.split_once('\t').ok_or_else(|| {
                CollectionError::MalformedTranscription(format!("bad index line {line:?}"))
            })?;
            let text = fs::read_to_string(dir.join(file))?;
            c.ingest(uri_trn, &text)?;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_annotation, ContextView};

    const T: &str = "http://lanlsource.lanl.gov/hello";

    fn varied(n: u32, target: &str, when: i64) -> (String, String) {
        let uri_a = format!("http://ex.org/anno/{n}");
        let uri_trn = format!("http://ex.org/trn/{n}");
        let mut v = AnnotationView::new(&uri_a, format!("http://ex.org/note/{n}"), target);
        v.contexts.push(
            ContextView::new(format!("{uri_a}#t"), target, ContextRole::TargetContext)
                .at(Instant::from_unix(when)),
        );
        v.transcription = Some(uri_trn.clone());
        (uri_trn, build_annotation(&v).unwrap().serialize())
    }

    fn timeless(n: u32, target: &str) -> (String, String) {
        let mut v = AnnotationView::new(
            format!("http://ex.org/anno/{n}"),
            format!("http://ex.org/note/{n}"),
            target,
        );
        let uri_trn = format!("http://ex.org/trn/{n}");
        v.transcription = Some(uri_trn.clone());
        (uri_trn, build_annotation(&v).unwrap().serialize())
    }

    fn iv(a: i64, b: i64) -> TimeInterval {
        TimeInterval::new(Instant::from_unix(a), Instant::from_unix(b)).unwrap()
    }

    fn uris(hits: Vec<&CollectionEntry>) -> Vec<&str> {
        hits.into_iter().map(|e| e.uri_trn.as_str()).collect()
    }

    #[test]
    fn ingest_and_replace() {
        let mut c = Collection::new();
        let (u, text) = varied(1, T, 100);
        c.ingest(&u, &text).unwrap();
        assert_eq!(c.len(), 1);
        let (_, text2) = varied(1, "http://other.example/", 100);
        c.ingest(&u, &text2).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.search(T, None).is_empty());
        assert_eq!(c.search("http://other.example/", None).len(), 1);
    }

    #[test]
    fn rejects_two_transcribes() {
        let (_, a) = varied(1, T, 100);
        let (_, b) = varied(2, T, 200);
        let mut c = Collection::new();
        assert!(matches!(
            c.ingest("http://ex.org/trn/x", &format!("{a}{b}")),
            Err(CollectionError::MalformedTranscription(_))
        ));
        assert!(matches!(
            c.ingest("http://ex.org/trn/x", "<http://a> <http://b> <http://c> ."),
            Err(CollectionError::MalformedTranscription(_))
        ));
        assert!(c.is_empty());
    }

    #[test]
    fn harvest_collects_failures() {
        let docs: Vec<(String, String)> = (1..=3).map(|n| varied(n, T, n as i64 * 100)).collect();
        let feed: Vec<String> = docs.iter().map(|d| d.0.clone()).collect();
        let fetch = |uri: &str| {
            if uri.ends_with("/2") {
                return Err("404".to_string());
            }
            Ok(docs.iter().find(|d| d.0 == uri).unwrap().1.clone())
        };
        let mut c = Collection::new();
        let report = c.harvest(&feed, fetch);
        assert_eq!(report.ingested.len(), 2);
        assert_eq!(report.failures.len(), 1);
        assert!(matches!(
            report.failures[0].1,
            CollectionError::FetchFailed { .. }
        ));
        assert_eq!(c.len(), 2);

        let report = c.harvest(&[], |_| unreachable!());
        assert!(report.ingested.is_empty() && report.failures.is_empty());
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn interval_search() {
        let mut c = Collection::new();
        for (n, t) in [(1, 100), (2, 200), (3, 300)] {
            let (u, text) = varied(n, T, t);
            c.ingest(&u, &text).unwrap();
        }
        assert_eq!(
            uris(c.search(T, Some(&iv(150, 250)))),
            vec!["http://ex.org/trn/2"]
        );
        assert_eq!(
            uris(c.search(T, Some(&iv(200, 300)))),
            vec!["http://ex.org/trn/2", "http://ex.org/trn/3"]
        );
        assert_eq!(c.search(T, None).len(), 3);
        assert!(c.search("http://unknown/", None).is_empty());

        let (u, text) = timeless(9, T);
        c.ingest(&u, &text).unwrap();
        assert_eq!(
            uris(c.search(T, Some(&iv(150, 250)))),
            vec!["http://ex.org/trn/9", "http://ex.org/trn/2"]
        );
    }

    #[test]
    fn uniform_matches_each_target() {
        let mut v = AnnotationView::new("http://ex.org/anno/u", "http://ex.org/note/u", T);
        v.targets.push("http://second.example/".into());
        v.annotation_when = Some(Instant::from_unix(500));
        v.transcription = Some("http://ex.org/trn/u".into());
        let mut c = Collection::new();
        c.ingest(
            "http://ex.org/trn/u",
            &build_annotation(&v).unwrap().serialize(),
        )
        .unwrap();
        for target in [T, "http://second.example/"] {
            assert_eq!(c.search(target, Some(&iv(500, 500))).len(), 1);
            assert!(c.search(target, Some(&iv(501, 900))).is_empty());
        }
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Collection::new();
        for n in 1..=3 {
            let (u, text) = varied(n, T, n as i64);
            c.ingest(&u, &text).unwrap();
        }
        c.save(dir.path()).unwrap();
        let loaded = Collection::load(dir.path()).unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(
            loaded.get("http://ex.org/trn/2"),
            c.get("http://ex.org/trn/2")
        );
        assert!(Collection::load(&dir.path().join("missing"))
            .unwrap()
            .is_empty());
    }
}

//! Typed views over annotation graphs.
//!
//! An annotation relates exactly one Content resource to one or more Target
//! resources. Per-resource information (a `when` instant, a segment) hangs
//! off Context nodes. Where the `when` instant appears decides the
//! annotation's [`TimeClass`].

use std::collections::HashSet;

use thiserror::Error;

use crate::graph::{Graph, GraphError, Term};
use crate::temporal::{format_xsd_datetime, is_absolute_uri, parse_xsd_datetime, Instant};
use crate::vocab::{oac, RDF_TYPE, RDF_VALUE, XSD_DATETIME};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model violation: {0}")]
    ModelViolation(String),
    #[error("annotation is not Uniform Time")]
    NotUniform,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn violation(msg: impl Into<String>) -> ModelError {
    ModelError::ModelViolation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeClass {
    Timeless,
    UniformTime,
    VariedTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContextRole {
    TargetContext,
    ContentContext,
}

impl ContextRole {
    fn link_predicate(self) -> &'static str {
        match self {
            ContextRole::TargetContext => oac::HAS_TARGET_CONTEXT,
            ContextRole::ContentContext => oac::HAS_CONTENT_CONTEXT,
        }
    }
}

/// An immutable description of the part of a resource being annotated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SegmentDescription {
    pub uri_sd: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContextView {
    pub uri_ctx: String,
    pub about: String,
    pub role: ContextRole,
    pub when: Option<Instant>,
    pub segment: Option<SegmentDescription>,
}

impl ContextView {
    pub fn new(uri_ctx: impl Into<String>, about: impl Into<String>, role: ContextRole) -> Self {
        ContextView {
            uri_ctx: uri_ctx.into(),
            about: about.into(),
            role,
            when: None,
            segment: None,
        }
    }

    pub fn at(mut self, when: Instant) -> Self {
        self.when = Some(when);
        self
    }

    pub fn with_segment(mut self, uri_sd: impl Into<String>, body: impl Into<String>) -> Self {
        self.segment = Some(SegmentDescription {
            uri_sd: uri_sd.into(),
            body: body.into(),
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationView {
    pub uri_a: String,
    pub content: String,
    pub targets: Vec<String>,
    pub predicate: String,
    pub annotation_when: Option<Instant>,
    pub contexts: Vec<ContextView>,
    pub transcription: Option<String>,
}

impl AnnotationView {
    /// A Timeless annotation with the default `oac:annotates` predicate.
    pub fn new(
        uri_a: impl Into<String>,
        content: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        AnnotationView {
            uri_a: uri_a.into(),
            content: content.into(),
            targets: vec![target.into()],
            predicate: oac::ANNOTATES.to_string(),
            annotation_when: None,
            contexts: Vec::new(),
            transcription: None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let check_uri = |what: &str, u: &str| {
            if is_absolute_uri(u) {
                Ok(())
            } else {
                Err(violation(format!("{what} {u:?} is not an absolute URI")))
            }
        };
        check_uri("annotation", &self.uri_a)?;
        check_uri("content", &self.content)?;
        check_uri("predicate", &self.predicate)?;
        if self.targets.is_empty() {
            return Err(violation("annotation has no target"));
        }
        let mut seen_targets = HashSet::new();
        for t in &self.targets {
            check_uri("target", t)?;
            if !seen_targets.insert(t.as_str()) {
                return Err(violation(format!("duplicate target {t}")));
            }
        }

        // Structural nodes must be distinct from each other and from the
        // resources they describe, otherwise the graph is ambiguous.
        let mut nodes: HashSet<&str> = HashSet::new();
        let node = |what: &str, u: &'_ str| -> Result<(), ModelError> {
            check_uri(what, u)?;
            if u == self.content || seen_targets.contains(u) {
                return Err(violation(format!("{what} {u} reuses a resource URI")));
            }
            Ok(())
        };
        node("annotation", &self.uri_a)?;
        let mut owned_nodes = vec![self.uri_a.as_str()];
        if let Some(trn) = &self.transcription {
            node("transcription", trn)?;
            owned_nodes.push(trn);
        }
        for ctx in &self.contexts {
            node("context", &ctx.uri_ctx)?;
            owned_nodes.push(&ctx.uri_ctx);
            let about_ok = match ctx.role {
                ContextRole::ContentContext => ctx.about == self.content,
                ContextRole::TargetContext => seen_targets.contains(ctx.about.as_str()),
            };
            if !about_ok {
                return Err(violation(format!(
                    "context {} is about {} which is not its annotation's {:?} resource",
                    ctx.uri_ctx, ctx.about, ctx.role
                )));
            }
            if let Some(sd) = &ctx.segment {
                node("segment description", &sd.uri_sd)?;
                owned_nodes.push(&sd.uri_sd);
            }
        }
        for n in owned_nodes {
            if !nodes.insert(n) {
                return Err(violation(format!("node URI {n} used twice")));
            }
        }

        if self.annotation_when.is_some() && self.contexts.iter().any(|c| c.when.is_some()) {
            return Err(violation("when set on both the annotation and a context"));
        }
        Ok(())
    }

    /// Canonical ordering of targets and contexts; graph form carries no order.
    pub fn normalized(mut self) -> Self {
        self.targets.sort();
        self.contexts.sort_by(|a, b| a.uri_ctx.cmp(&b.uri_ctx));
        self
    }
}

fn iri(s: &str) -> Term {
    Term::iri(s)
}

fn when_literal(t: Instant) -> Term {
    Term::typed(format_xsd_datetime(t), XSD_DATETIME)
}

pub fn build_annotation(view: &AnnotationView) -> Result<Graph, ModelError> {
    view.validate()?;
    let mut g = Graph::new();
    let a = iri(&view.uri_a);
    let rdf_type = iri(RDF_TYPE);
    g.insert(a.clone(), rdf_type.clone(), iri(oac::ANNOTATION))?;
    g.insert(a.clone(), iri(oac::HAS_CONTENT), iri(&view.content))?;
    for t in &view.targets {
        g.insert(a.clone(), iri(oac::HAS_TARGET), iri(t))?;
    }
    g.insert(a.clone(), iri(oac::PREDICATE), iri(&view.predicate))?;
    if let Some(when) = view.annotation_when {
        g.insert(a.clone(), iri(oac::WHEN), when_literal(when))?;
    }
    for ctx in &view.contexts {
        let c = iri(&ctx.uri_ctx);
        g.insert(a.clone(), iri(ctx.role.link_predicate()), c.clone())?;
        g.insert(c.clone(), rdf_type.clone(), iri(oac::CONTEXT))?;
        g.insert(c.clone(), iri(oac::CONTEXT_ABOUT), iri(&ctx.about))?;
        if let Some(when) = ctx.when {
            g.insert(c.clone(), iri(oac::WHEN), when_literal(when))?;
        }
        if let Some(sd) = &ctx.segment {
            let s = iri(&sd.uri_sd);
            g.insert(c.clone(), iri(oac::HAS_SEGMENT_DESCRIPTION), s.clone())?;
            g.insert(s.clone(), rdf_type.clone(), iri(oac::SEGMENT_DESCRIPTION))?;
            g.insert(s, iri(RDF_VALUE), Term::literal(&sd.body))?;
        }
    }
    if let Some(trn) = &view.transcription {
        let trn = iri(trn);
        g.insert(trn.clone(), rdf_type, iri(oac::TRANSCRIPTION))?;
        g.insert(trn, iri(oac::TRANSCRIBES), a)?;
    }
    Ok(g)
}

fn iri_values(terms: Vec<&Term>, what: &str) -> Result<Vec<String>, ModelError> {
    terms
        .into_iter()
        .map(|t| {
            t.as_iri()
                .map(str::to_string)
                .ok_or_else(|| violation(format!("{what} must be an IRI")))
        })
        .collect()
}

fn at_most_one<T>(mut values: Vec<T>, what: &str) -> Result<Option<T>, ModelError> {
    match values.len() {
        0 => Ok(None),
        1 => Ok(values.pop()),
        n => Err(violation(format!(
            "{n} values for {what}, expected at most one"
        ))),
    }
}

fn exactly_one<T>(values: Vec<T>, what: &str) -> Result<T, ModelError> {
    let n = values.len();
    at_most_one(values, what)?
        .ok_or_else(|| violation(format!("{n} values for {what}, expected one")))
}

fn when_value(g: &Graph, node: &Term) -> Result<Option<Instant>, ModelError> {
    let lits = g.objects(node, &iri(oac::WHEN));
    let Some(term) = at_most_one(lits, "oac:when")? else {
        return Ok(None);
    };
    match term.as_literal() {
        Some((value, Some(XSD_DATETIME))) => parse_xsd_datetime(value)
            .map(Some)
            .map_err(|e| violation(e.to_string())),
        _ => Err(violation("oac:when must be an xsd:dateTime literal")),
    }
}

/// Reads the annotation rooted at `uri_a` out of `g`. Targets and contexts
/// come back in canonical order (see [`AnnotationView::normalized`]).
pub fn parse_annotation(g: &Graph, uri_a: &str) -> Result<AnnotationView, ModelError> {
    let a = iri(uri_a);
    let rdf_type = iri(RDF_TYPE);
    if !g
        .objects(&a, &rdf_type)
        .iter()
        .any(|t| t.as_iri() == Some(oac::ANNOTATION))
    {
        return Err(violation(format!("{uri_a} is not typed oac:Annotation")));
    }
    let content = exactly_one(
        iri_values(g.objects(&a, &iri(oac::HAS_CONTENT)), "oac:hasContent")?,
        "oac:hasContent",
    )?;
    let targets = iri_values(g.objects(&a, &iri(oac::HAS_TARGET)), "oac:hasTarget")?;
    if targets.is_empty() {
        return Err(violation("annotation has no oac:hasTarget"));
    }
    let predicate = at_most_one(
        iri_values(g.objects(&a, &iri(oac::PREDICATE)), "oac:predicate")?,
        "oac:predicate",
    )?
    .unwrap_or_else(|| oac::ANNOTATES.to_string());
    let annotation_when = when_value(g, &a)?;

    let mut contexts = Vec::new();
    for role in [ContextRole::TargetContext, ContextRole::ContentContext] {
        for uri_ctx in iri_values(g.objects(&a, &iri(role.link_predicate())), "context link")? {
            let c = iri(&uri_ctx);
            if !g
                .objects(&c, &rdf_type)
                .iter()
                .any(|t| t.as_iri() == Some(oac::CONTEXT))
            {
                return Err(violation(format!("{uri_ctx} is not typed oac:Context")));
            }
            let about = exactly_one(
                iri_values(g.objects(&c, &iri(oac::CONTEXT_ABOUT)), "oac:contextAbout")?,
                "oac:contextAbout",
            )?;
            let when = when_value(g, &c)?;
            let segment = match at_most_one(
                iri_values(g.objects(&c, &iri(oac::HAS_SEGMENT_DESCRIPTION)), "segment")?,
                "oac:hasSegmentDescription",
            )? {
                None => None,
                Some(uri_sd) => {
                    let body =
                        exactly_one(g.objects(&iri(&uri_sd), &iri(RDF_VALUE)), "segment body")?;
                    let body = body
                        .as_literal()
                        .ok_or_else(|| violation("segment body must be a literal"))?
                        .0
                        .to_string();
                    Some(SegmentDescription { uri_sd, body })
                }
            };
            contexts.push(ContextView {
                uri_ctx,
                about,
                role,
                when,
                segment,
            });
        }
    }

    let transcription = at_most_one(
        iri_values(g.subjects(&iri(oac::TRANSCRIBES), &a), "transcription")?,
        "oac:transcribes",
    )?;

    let view = AnnotationView {
        uri_a: uri_a.to_string(),
        content,
        targets,
        predicate,
        annotation_when,
        contexts,
        transcription,
    }
    .normalized();
    view.validate()?;
    Ok(view)
}

pub fn classify_time(view: &AnnotationView) -> TimeClass {
    if view.annotation_when.is_some() {
        TimeClass::UniformTime
    } else if view.contexts.iter().any(|c| c.when.is_some()) {
        TimeClass::VariedTime
    } else {
        TimeClass::Timeless
    }
}

/// Moves a Uniform annotation's single `when` onto per-resource contexts.
///
/// Existing contexts are reused; every target and the content without one
/// gets a minted context `<uri_a>#ctx-<n>`.
pub fn rewrite_uniform_to_varied(view: &AnnotationView) -> Result<AnnotationView, ModelError> {
    if classify_time(view) != TimeClass::UniformTime {
        return Err(ModelError::NotUniform);
    }
    let when = view.annotation_when.expect("uniform annotation has a when");
    let mut out = view.clone();
    out.annotation_when = None;
    for ctx in &mut out.contexts {
        ctx.when = Some(when);
    }

    let mut used: HashSet<String> = out.contexts.iter().map(|c| c.uri_ctx.clone()).collect();
    used.extend(
        out.contexts
            .iter()
            .filter_map(|c| c.segment.as_ref().map(|s| s.uri_sd.clone())),
    );
    used.extend(out.transcription.iter().cloned());
    let resources = view
        .targets
        .iter()
        .map(|t| (t.clone(), ContextRole::TargetContext))
        .chain(std::iter::once((
            view.content.clone(),
            ContextRole::ContentContext,
        )));
    let mut n = 0;
    for (about, role) in resources {
        if out
            .contexts
            .iter()
            .any(|c| c.about == about && c.role == role)
        {
            continue;
        }
        let uri_ctx = loop {
            n += 1;
            let candidate = format!("{}#ctx-{n}", view.uri_a);
            if !used.contains(&candidate) {
                break candidate;
            }
        };
        used.insert(uri_ctx.clone());
        out.contexts
            .push(ContextView::new(uri_ctx, about, role).at(when));
    }
    Ok(out)
}

/// `(resource, when)` pairs: targets in declaration order, then the content.
///
/// Uniform annotations pair every target and the content with the
/// annotation's instant; Timeless ones yield nothing.
pub fn extract_time_tuples(view: &AnnotationView) -> Vec<(String, Instant)> {
    match classify_time(view) {
        TimeClass::Timeless => Vec::new(),
        TimeClass::UniformTime => {
            let when = view.annotation_when.expect("uniform annotation has a when");
            view.targets
                .iter()
                .chain(std::iter::once(&view.content))
                .map(|r| (r.clone(), when))
                .collect()
        }
        TimeClass::VariedTime => {
            let dated = |about: &str, role: ContextRole| {
                view.contexts
                    .iter()
                    .filter(move |c| c.role == role && c.about == about)
                    .filter_map(|c| c.when.map(|w| (c.about.clone(), w)))
                    .collect::<Vec<_>>()
            };
            let mut out = Vec::new();
            for t in &view.targets {
                out.extend(dated(t, ContextRole::TargetContext));
            }
            out.extend(dated(&view.content, ContextRole::ContentContext));
            out
        }
    }
}

//! `chronomark`: operator commands over a workspace directory.
//!
//! Exit status is 0 on success, 1 when a command fails, and 2 for usage
//! errors, including malformed datetimes in flags.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use chronomark::archive::ArchiveKind;
use chronomark::discovery::{annotations_for_memento, reconstruct, DiscoveryError};
use chronomark::encoding::encode_component;
use chronomark::evaluate::{evaluate, ScenarioSpec};
use chronomark::model::build_annotation;
use chronomark::temporal::{
    format_archive_timestamp, format_http_datetime, is_absolute_uri, parse_archive_timestamp,
    parse_http_datetime,
};
use chronomark::{
    AnnotationView, Archive, ContextRole, ContextView, Graph, Instant, MementoHeaders,
    ResourceTimeline, TimeClass, TimeInterval, Workspace,
};
use chronomark_service::{call, router, AppState, ServiceConfig, CONTENT_DATETIME};
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(
    name = "chronomark",
    version,
    about = "Time-robust web annotations over Memento archives"
)]
struct Cli {
    /// Workspace directory holding timelines, archives, content and the collection.
    #[arg(long, global = true, env = "CHRONOMARK_WORKSPACE", default_value = ".")]
    workspace: PathBuf,
    /// Treat this RFC 1123 datetime as the current time.
    #[arg(long, global = true, env = "CHRONOMARK_NOW", value_parser = http_datetime)]
    now: Option<Instant>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Set the base URI the workspace's resources are served under.
    Init {
        #[arg(long)]
        base: String,
    },
    /// Create a resource timeline or add a version to it.
    SeedTimeline {
        #[arg(long)]
        uri: String,
        /// When this version starts being served (RFC 1123).
        #[arg(long, value_parser = http_datetime)]
        at: Instant,
        #[arg(
            long,
            conflicts_with = "body_file",
            required_unless_present = "body_file"
        )]
        body: Option<String>,
        #[arg(long)]
        body_file: Option<PathBuf>,
    },
    /// Capture a seeded timeline into the archive.
    Capture {
        #[arg(long)]
        uri: String,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Crawl instants for crawler mode: 14-digit stamps separated by
        /// commas, or RFC 1123 datetimes separated by semicolons.
        #[arg(long, value_parser = crawl_list, required_if_eq("mode", "crawler"))]
        crawls: Option<Crawls>,
    },
    /// Publish a dated annotation of the targets and harvest it.
    Annotate {
        #[arg(long, required = true)]
        target: Vec<String>,
        #[arg(long, value_parser = http_datetime)]
        at: Instant,
        #[arg(long)]
        content: String,
    },
    /// Re-harvest every transcription on the content server.
    Harvest,
    /// Rebuild an annotation against the representations it was made about.
    Reconstruct {
        #[arg(long)]
        annotation: String,
        /// Show what the resources serve now instead.
        #[arg(long)]
        no_memento: bool,
    },
    /// Find the annotations made about a memento's representation.
    Discover {
        #[arg(long)]
        memento: String,
        /// Use the TimeMap's span evidence instead of neighbouring mementos.
        #[arg(long)]
        use_timemap: bool,
    },
    /// Search the collection by target and optional interval.
    Search {
        #[arg(long)]
        target: String,
        #[arg(long, value_parser = http_datetime, requires = "until")]
        from: Option<Instant>,
        #[arg(long, value_parser = http_datetime, requires = "from")]
        until: Option<Instant>,
    },
    /// Run the randomized evaluation and print a key=value report.
    Evaluate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        timelines: usize,
        /// Versions per timeline, `N` or `MIN..MAX`.
        #[arg(long, default_value = "2..8", value_parser = usize_range)]
        versions: (usize, usize),
        /// Per-hour crawl probability, `P` or `MIN..MAX`.
        #[arg(long, default_value = "0.05..0.5", value_parser = density_range)]
        crawl_density: (f64, f64),
        /// Annotations per discovery scenario, `N` or `MIN..MAX`.
        #[arg(long, default_value = "3..10", value_parser = usize_range)]
        annotations: (usize, usize),
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
    /// Serve the workspace over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Transactional,
    Crawler,
}

#[derive(Clone)]
struct Crawls(Vec<Instant>);

fn http_datetime(s: &str) -> Result<Instant, String> {
    parse_http_datetime(s).map_err(|e| format!("MalformedDatetime: {e}"))
}

fn crawl_list(s: &str) -> Result<Crawls, String> {
    let items: Vec<&str> = if s.contains(';') || s.contains(' ') {
        s.split(';').collect()
    } else {
        s.split(',').collect()
    };
    items
        .into_iter()
        .map(str::trim)
        .filter(|i| !i.is_empty())
        .map(|i| {
            parse_archive_timestamp(i)
                .or_else(|_| parse_http_datetime(i))
                .map_err(|e| format!("MalformedDatetime: {e}"))
        })
        .collect::<Result<_, _>>()
        .map(Crawls)
}

fn range<T: std::str::FromStr + Copy>(s: &str) -> Result<(T, T), String> {
    let parse = |v: &str| {
        v.trim()
            .parse::<T>()
            .map_err(|_| format!("invalid value {v:?}"))
    };
    match s.split_once("..") {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => parse(s).map(|v| (v, v)),
    }
}

fn usize_range(s: &str) -> Result<(usize, usize), String> {
    range(s)
}

fn density_range(s: &str) -> Result<(f64, f64), String> {
    range(s)
}

/// A usage error found after flag parsing; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn stamp(t: Instant) -> String {
    format_archive_timestamp(t)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<Usage>() { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let now = cli.now.unwrap_or_else(Instant::now);
    let ws = Workspace::open(&cli.workspace)?;
    match cli.command {
        Command::Init { base } => {
            if !is_absolute_uri(&base) {
                bail!("base {base:?} is not an absolute URI");
            }
            let ws = Workspace::init(&cli.workspace, &base)?;
            println!("base={}", ws.base());
        }
        Command::SeedTimeline {
            uri,
            at,
            body,
            body_file,
        } => {
            if !is_absolute_uri(&uri) {
                bail!("{uri:?} is not an absolute URI");
            }
            let body = match (body, body_file) {
                (Some(b), _) => b.into_bytes(),
                (None, Some(p)) => std::fs::read(&p).with_context(|| p.display().to_string())?,
                (None, None) => unreachable!("clap requires one of --body, --body-file"),
            };
            let tl = match ws.load_timeline(&uri)? {
                Some(mut tl) => {
                    tl.push(at, body)?;
                    tl
                }
                None => ResourceTimeline::single(&uri, at, body),
            };
            ws.save_timeline(&tl)?;
            println!("resource={uri} versions={}", tl.versions().len());
        }
        Command::Capture { uri, mode, crawls } => {
            let tl = ws
                .load_timeline(&uri)?
                .ok_or_else(|| anyhow!("no seeded timeline for {uri}"))?;
            let archive = match mode {
                Mode::Transactional => {
                    let mut a = Archive::new(ArchiveKind::Transactional, ws.memento_base());
                    a.capture_transactional(&tl, now)?;
                    a
                }
                Mode::Crawler => {
                    let Crawls(crawls) = crawls.unwrap_or(Crawls(Vec::new()));
                    let mut a = Archive::new(ArchiveKind::Crawler, ws.memento_base());
                    a.capture_crawls(&tl, &crawls)?;
                    a
                }
            };
            ws.save_archive(&archive)?;
            for m in archive.mementos(&uri) {
                println!("memento={} datetime={}", m.uri_m, stamp(m.snapshot_time));
            }
        }
        Command::Annotate {
            target,
            at,
            content,
        } => annotate(&ws, &target, at, &content, now)?,
        Command::Harvest => {
            let mut c = ws.load_collection()?;
            let report = ws.harvest(&mut c)?;
            ws.save_collection(&c)?;
            for uri in &report.ingested {
                println!("ingested={uri}");
            }
            for (uri, e) in &report.failures {
                eprintln!("failed {uri}: {e}");
            }
            println!("collection.size={}", c.len());
            if !report.failures.is_empty() {
                bail!("{} transcriptions failed to harvest", report.failures.len());
            }
        }
        Command::Reconstruct {
            annotation,
            no_memento,
        } => reconstruct_cmd(&ws, &annotation, no_memento, now)?,
        Command::Discover {
            memento,
            use_timemap,
        } => discover(&ws, &memento, use_timemap, now)?,
        Command::Search {
            target,
            from,
            until,
        } => {
            let interval = match (from, until) {
                (Some(f), Some(u)) => Some(TimeInterval::new(f, u)?),
                _ => None,
            };
            for e in ws.load_collection()?.search(&target, interval.as_ref()) {
                println!("{}", e.uri_trn);
            }
        }
        Command::Evaluate {
            seed,
            timelines,
            versions,
            crawl_density,
            annotations,
            trials,
        } => {
            let spec = ScenarioSpec {
                seed,
                timelines,
                versions_min: versions.0,
                versions_max: versions.1,
                crawl_density_min: crawl_density.0,
                crawl_density_max: crawl_density.1,
                annotations_min: annotations.0,
                annotations_max: annotations.1,
                trials,
            };
            spec.validate().map_err(|e| Usage(e.to_string()))?;
            print!("{}", evaluate(&spec)?);
        }
        Command::Serve { listen } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(chronomark_service::serve(ServiceConfig {
                listen,
                workspace: cli.workspace.clone(),
                now: cli.now,
            }))
            .map_err(|e| anyhow!(e))?;
        }
    }
    Ok(())
}

/// Mints a Content resource for `text`, archives it, and publishes a Varied
/// annotation pinning every target and the content to `at`.
fn annotate(
    ws: &Workspace,
    targets: &[String],
    at: Instant,
    text: &str,
    now: Instant,
) -> Result<()> {
    let n = (1..)
        .find(|n| matches!(ws.get_content(&format!("anno-{n}")), Ok(None)))
        .unwrap_or(1);
    let content_uri = ws.resource_uri(&format!("note-{n}"));
    let content = ResourceTimeline::single(&content_uri, at, text);
    ws.save_timeline(&content)?;
    let mut archive = Archive::new(ArchiveKind::Transactional, ws.memento_base());
    archive.capture_transactional(&content, now.max(at))?;
    ws.save_archive(&archive)?;

    let uri_a = format!("{}/annotation/{n}", ws.base());
    let mut view = AnnotationView::new(&uri_a, &content_uri, &targets[0]);
    view.targets = targets.to_vec();
    for (k, t) in targets.iter().enumerate() {
        view.contexts.push(
            ContextView::new(format!("{uri_a}#target-{k}"), t, ContextRole::TargetContext).at(at),
        );
    }
    view.contexts.push(
        ContextView::new(
            format!("{uri_a}#content"),
            &content_uri,
            ContextRole::ContentContext,
        )
        .at(at),
    );
    let id = format!("anno-{n}");
    view.transcription = Some(ws.content_uri(&id));
    let text = build_annotation(&view)?.serialize();
    ws.put_content(&id, text.as_bytes())?;

    let mut c = ws.load_collection()?;
    let report = ws.harvest(&mut c)?;
    ws.save_collection(&c)?;
    if let Some((uri, e)) = report.failures.first() {
        bail!("harvest of {uri} failed: {e}");
    }
    println!("transcription={}", ws.content_uri(&id));
    println!("annotation={uri_a}");
    println!("collection.size={}", c.len());
    Ok(())
}

fn reconstruct_cmd(ws: &Workspace, uri_trn: &str, no_memento: bool, now: Instant) -> Result<()> {
    let c = ws.load_collection()?;
    let entry = c
        .get(uri_trn)
        .ok_or_else(|| anyhow!("{uri_trn} is not in the collection"))?;
    let current = |uri_r: &str| -> Result<()> {
        let tl = ws
            .load_timeline(uri_r)?
            .ok_or_else(|| anyhow!("no timeline for {uri_r}"))?;
        println!(
            "resource={uri_r} current=true sha256={}",
            digest(tl.rep_at(now)?)
        );
        Ok(())
    };
    let view = &entry.view;
    if no_memento || entry.time_class == TimeClass::Timeless {
        let mut seen = Vec::new();
        for u in view.targets.iter().chain([&view.content]) {
            if !seen.contains(&u) {
                current(u)?;
                seen.push(u);
            }
        }
        return Ok(());
    }
    let archives = ws.archives()?;
    let rebuilt = reconstruct(
        view,
        |uri_r, t| match archives.get(uri_r) {
            Some(a) => a.resolve_timegate(uri_r, t).cloned(),
            None => Err(chronomark::ArchiveError::UnknownResource(uri_r.to_string())),
        },
        now,
    )?;
    for r in &rebuilt.resolutions {
        println!(
            "resource={} memento={} requested={} clamped={} sha256={}",
            r.uri_r,
            r.uri_m,
            stamp(r.requested),
            r.clamped,
            digest(&r.body)
        );
    }
    Ok(())
}

fn discover(ws: &Workspace, uri_m: &str, use_timemap: bool, now: Instant) -> Result<()> {
    let archives = ws.archives()?;
    let m = archives
        .values()
        .find_map(|a| a.find(uri_m))
        .ok_or_else(|| DiscoveryError::UnknownMemento(uri_m.to_string()))?;
    let app = router(Arc::new(AppState::load(ws.clone(), Some(now))?));
    let rt = tokio::runtime::Builder::new_current_thread().build()?;
    let get = |path: String| {
        rt.block_on(call(
            &app,
            Request::get(path)
                .body(Body::empty())
                .expect("valid request"),
        ))
    };

    let (status, headers, _) = get(format!(
        "/memento/{}/{}",
        stamp(m.snapshot_time),
        encode_component(&m.uri_r)
    ));
    if status != StatusCode::OK {
        bail!("memento {uri_m} answered {status}");
    }
    let value = |name: &str| {
        headers
            .get(name)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
    };
    let mh = MementoHeaders::from_values(value(CONTENT_DATETIME), value("link"))?;
    let tm = if use_timemap {
        let uri_r = chronomark::discovery::discover_original(&mh.links)?;
        let (status, _, body) = get(format!("/timemap/{}", encode_component(&uri_r)));
        if status != StatusCode::OK {
            bail!("timemap for {uri_r} answered {status}");
        }
        Some(Graph::parse(std::str::from_utf8(&body)?)?)
    } else {
        None
    };
    let found = annotations_for_memento(uri_m, &mh, tm.as_ref(), &ws.load_collection()?, now)?;
    println!("original={}", found.uri_r);
    println!(
        "start={}",
        format_http_datetime(found.estimate.interval.start())
    );
    println!(
        "end={}",
        format_http_datetime(found.estimate.interval.end())
    );
    println!("certainty={}", found.estimate.certainty);
    for e in &found.entries {
        println!("annotation={}", e.uri_trn);
    }
    Ok(())
}

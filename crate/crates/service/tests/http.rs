use std::sync::Arc;

use axum::body::Body;
use axum::http::{HeaderMap, Request, StatusCode};
use axum::Router;
use chronomark::archive::{parse_timemap, ArchiveKind};
use chronomark::discovery::annotations_for_memento;
use chronomark::encoding::encode_component;
use chronomark::model::build_annotation;
use chronomark::temporal::{
    format_http_datetime, parse_archive_timestamp, parse_http_datetime, parse_link_header,
};
use chronomark::{
    AnnotationView, Archive, ContextRole, ContextView, Graph, Instant, MementoHeaders,
    ResourceTimeline, VersionRecord, Workspace,
};
use chronomark_service::{router, AppState, CLAMPED};
use http_body_util::BodyExt;
use tempfile::TempDir;
use tower::ServiceExt;

const R: &str = "http://lanlsource.lanl.gov/hello";
const CRAWLED: &str = "http://example.org/crawled?page=1";
const DAY1: i64 = 1_264_035_602;
const DAY2: i64 = 1_264_122_002;
const DAY3: i64 = 1_264_208_402;
const NOW: i64 = 1_264_291_200;

fn i(s: i64) -> Instant {
    Instant::from_unix(s)
}

fn version(t: i64, body: &str) -> VersionRecord {
    VersionRecord {
        valid_from: i(t),
        body: body.as_bytes().to_vec(),
    }
}

fn transcription(ws: &Workspace, n: usize, when: i64) -> String {
    let uri_a = format!("http://example.org/anno/{n}");
    let mut v = AnnotationView::new(&uri_a, format!("http://example.org/note/{n}"), R);
    v.contexts
        .push(ContextView::new(format!("{uri_a}#t"), R, ContextRole::TargetContext).at(i(when)));
    v.transcription = Some(ws.content_uri(&format!("anno-{n}")));
    build_annotation(&v).unwrap().serialize()
}

struct Fixture {
    _dir: TempDir,
    ws: Workspace,
    app: Router,
}

/// Three daily versions captured transactionally, one crawled resource, and
/// one annotation per day published on the content server.
async fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::open(dir.path()).unwrap();
    let tl = ResourceTimeline::new(
        R,
        vec![
            version(DAY1, "blank"),
            version(DAY2, "white"),
            version(DAY3, "blue"),
        ],
    )
    .unwrap();
    ws.save_timeline(&tl).unwrap();
    let mut ta = Archive::new(ArchiveKind::Transactional, ws.memento_base());
    ta.capture_transactional(&tl, i(NOW)).unwrap();
    ws.save_archive(&ta).unwrap();

    let crawled =
        ResourceTimeline::new(CRAWLED, vec![version(DAY1, "x"), version(DAY2, "y")]).unwrap();
    ws.save_timeline(&crawled).unwrap();
    let mut cr = Archive::new(ArchiveKind::Crawler, ws.memento_base());
    cr.capture_crawls(&crawled, &[i(DAY1), i(DAY1 + 3600), i(DAY2 + 60)])
        .unwrap();
    ws.save_archive(&cr).unwrap();

    let sole = ResourceTimeline::single("http://example.org/sole", i(DAY1), "only");
    ws.save_timeline(&sole).unwrap();
    let mut a = Archive::new(ArchiveKind::Transactional, ws.memento_base());
    a.capture_transactional(&sole, i(NOW)).unwrap();
    ws.save_archive(&a).unwrap();

    let app = router(Arc::new(AppState::load(ws.clone(), Some(i(NOW))).unwrap()));
    for (n, when) in [(1, DAY1 + 3600), (2, DAY2 + 3600), (3, DAY3 + 3600)] {
        let (status, _, _) = send(
            &app,
            put(&format!("/content/anno-{n}"), transcription(&ws, n, when)),
        )
        .await;
        assert_eq!(status, StatusCode::CREATED);
    }
    let (status, _, body) =
        send(&app, Request::post("/harvest").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        body.lines().filter(|l| l.starts_with("ingested ")).count(),
        3
    );
    Fixture { _dir: dir, ws, app }
}

fn get(path: &str) -> Request<Body> {
    Request::get(path).body(Body::empty()).unwrap()
}

fn put(path: &str, body: String) -> Request<Body> {
    Request::put(path).body(Body::from(body)).unwrap()
}

fn negotiate(uri_r: &str, accept: Option<&str>) -> Request<Body> {
    let mut b = Request::get(format!("/timegate/{}", encode_component(uri_r)));
    if let Some(a) = accept {
        b = b.header("Accept-Datetime", a);
    }
    b.body(Body::empty()).unwrap()
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, HeaderMap, String) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, headers, String::from_utf8(bytes.to_vec()).unwrap())
}

fn h<'a>(headers: &'a HeaderMap, name: &str) -> &'a str {
    headers.get(name).map(|v| v.to_str().unwrap()).unwrap_or("")
}

/// Path and query of an absolute URI on the workspace base.
fn local(ws: &Workspace, uri: &str) -> String {
    uri.strip_prefix(ws.base()).unwrap().to_string()
}

#[tokio::test]
async fn original_resource_advertises_timegate() {
    let f = fixture().await;
    let (status, headers, body) =
        send(&f.app, get(&format!("/resource/{}", encode_component(R)))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, "blue");
    let expected = format!(
        "<{}/timegate/{}>;rel=\"timegate\"",
        f.ws.base(),
        encode_component(R)
    );
    assert_eq!(h(&headers, "link"), expected);
    let (status, _, _) = send(&f.app, get("/resource/nope")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn timegate_negotiates_and_clamps() {
    let f = fixture().await;
    let (status, headers, _) = send(
        &f.app,
        negotiate(R, Some(&format_http_datetime(i(DAY2 + 7200)))),
    )
    .await;
    assert_eq!(status, StatusCode::FOUND);
    assert!(h(&headers, "location").contains("/20100122010002/"));
    assert_eq!(h(&headers, CLAMPED), "false");
    let link = h(&headers, "link");
    assert!(link.contains(&format!("<{R}>;rel=\"original\"")));
    assert!(link.contains("rel=\"timemap\""));
    assert!(link.contains("rel=\"prev-memento\";datetime=\"Thu, 21 Jan 2010 01:00:02 GMT\""));
    assert!(link.contains("rel=\"next-memento\";datetime=\"Sat, 23 Jan 2010 01:00:02 GMT\""));

    let (status, headers, _) =
        send(&f.app, negotiate(R, Some("Mon, 01 Jan 2001 00:00:00 GMT"))).await;
    assert_eq!(status, StatusCode::FOUND);
    assert!(h(&headers, "location").contains("/20100121010002/"));
    assert_eq!(h(&headers, CLAMPED), "true");

    let (_, headers, _) = send(&f.app, negotiate(R, None)).await;
    assert!(h(&headers, "location").contains("/20100123010002/"));

    let (status, _, _) = send(&f.app, negotiate(R, Some("yesterday"))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, body) = send(&f.app, negotiate("http://unknown.example/", None)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body.contains("http://unknown.example/"));
}

#[tokio::test]
async fn memento_headers() {
    let f = fixture().await;
    let (status, headers, body) = send(&f.app, get(&format!("/memento/20100122010002/{R}"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, "white");
    assert_eq!(
        h(&headers, "content-datetime"),
        "Fri, 22 Jan 2010 01:00:02 GMT"
    );
    let links = parse_link_header(h(&headers, "link")).unwrap();
    let rels: Vec<&str> = links.iter().map(|l| l.rel.as_str()).collect();
    assert_eq!(
        rels,
        ["original", "timemap", "prev-memento", "next-memento"]
    );

    let (status, headers, _) = send(
        &f.app,
        get("/memento/20100121010002/http://example.org/sole"),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!(!h(&headers, "link").contains("-memento"));

    let (status, _, body) = send(&f.app, get(&format!("/memento/20100121010002/{CRAWLED}"))).await;
    assert_eq!(status, StatusCode::OK, "query string kept");
    assert_eq!(body, "x");
    let (status, _, _) = send(
        &f.app,
        get(&format!(
            "/memento/20100121010002/{}",
            encode_component(CRAWLED)
        )),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "encoded form accepted");

    for path in [
        format!("/memento/20100122010003/{R}"),
        format!("/memento/2010/{R}"),
        "/memento/20100122010002/http://nope/".into(),
    ] {
        let (status, _, _) = send(&f.app, get(&path)).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{path}");
    }
}

#[tokio::test]
async fn every_redirect_dereferences() {
    let f = fixture().await;
    for t in [
        DAY1 - 10,
        DAY1,
        DAY1 + 5,
        DAY2 - 1,
        DAY2,
        DAY3 + 99,
        NOW,
        NOW + 1000,
    ] {
        let (status, headers, _) =
            send(&f.app, negotiate(R, Some(&format_http_datetime(i(t))))).await;
        assert_eq!(status, StatusCode::FOUND);
        let clamped = h(&headers, CLAMPED) == "true";
        let (status, headers, _) = send(&f.app, get(&local(&f.ws, h(&headers, "location")))).await;
        assert_eq!(status, StatusCode::OK);
        let cd = parse_http_datetime(h(&headers, "content-datetime")).unwrap();
        if clamped {
            assert!(!(DAY1..=NOW).contains(&t));
        } else {
            assert!(cd <= i(t));
        }
    }
}

#[tokio::test]
async fn timemaps() {
    let f = fixture().await;
    let (status, headers, body) =
        send(&f.app, get(&format!("/timemap/{}", encode_component(R)))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(h(&headers, "content-type"), "text/plain; charset=utf-8");
    let g = Graph::parse(&body).unwrap();
    assert_eq!(g.serialize(), body);
    let entries = parse_timemap(&g).unwrap();
    let spans: Vec<_> = entries
        .iter()
        .map(|e| e.span.map(|s| (s.start().unix(), s.end().unix())))
        .collect();
    assert_eq!(
        spans,
        [
            Some((DAY1, DAY2 - 1)),
            Some((DAY2, DAY3 - 1)),
            Some((DAY3, NOW))
        ]
    );

    let (_, _, body) = send(
        &f.app,
        get(&format!("/timemap/{}", encode_component(CRAWLED))),
    )
    .await;
    assert!(body.contains("observations"));
    let (status, _, _) = send(&f.app, get("/timemap/http%3A%2F%2Fnope")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn content_round_trip() {
    let f = fixture().await;
    let text = transcription(&f.ws, 9, DAY1);
    let (status, headers, _) = send(&f.app, put("/content/t9", text.clone())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(h(&headers, "location"), f.ws.content_uri("t9"));
    let (status, _, body) = send(&f.app, get("/content/t9")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, text);
    let (status, _, _) = send(&f.app, put("/content/t9", text)).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _, _) = send(&f.app, put("/content/t10", "<a> <b> .\n".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = send(&f.app, get("/content/t10")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn annotation_search() {
    let f = fixture().await;
    let target = encode_component(R);
    let day2 = |t: i64| encode_component(&format_http_datetime(i(t)));
    let (status, _, body) = send(
        &f.app,
        get(&format!(
            "/annotations?target={target}&from={}&until={}",
            day2(DAY2),
            day2(DAY3 - 1)
        )),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, format!("{}\n", f.ws.content_uri("anno-2")));

    let (_, _, body) = send(&f.app, get(&format!("/annotations?target={target}"))).await;
    let expected: String = (1..=3)
        .map(|n| format!("{}\n", f.ws.content_uri(&format!("anno-{n}"))))
        .collect();
    assert_eq!(body, expected);

    let (status, _, body) = send(&f.app, get("/annotations?target=http%3A%2F%2Fother")).await;
    assert_eq!((status, body.as_str()), (StatusCode::OK, ""));

    for bad in [
        format!("/annotations?target={target}&from=bad&until={}", day2(DAY3)),
        format!(
            "/annotations?target={target}&from={}&until={}",
            day2(DAY3),
            day2(DAY2)
        ),
        format!("/annotations?target={target}&from={}", day2(DAY2)),
        "/annotations".to_string(),
    ] {
        let (status, _, _) = send(&f.app, get(&bad)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
    }
}

#[tokio::test]
async fn wire_headers_drive_discovery() {
    let f = fixture().await;
    let uri_m = format!("{}/20100122010002/{R}", f.ws.memento_base());
    let (_, headers, _) = send(&f.app, get(&local(&f.ws, &uri_m))).await;
    let mh =
        MementoHeaders::from_values(h(&headers, "content-datetime"), h(&headers, "link")).unwrap();
    assert_eq!(
        mh.content_datetime,
        parse_archive_timestamp("20100122010002").unwrap()
    );
    let (_, _, tm) = send(&f.app, get(&format!("/timemap/{}", encode_component(R)))).await;
    let tm = Graph::parse(&tm).unwrap();
    let c = f.ws.load_collection().unwrap();
    let hit = annotations_for_memento(&uri_m, &mh, Some(&tm), &c, i(NOW)).unwrap();
    let got: Vec<&str> = hit.entries.iter().map(|e| e.uri_trn.as_str()).collect();
    assert_eq!(got, [f.ws.content_uri("anno-2")]);
}

#[tokio::test]
async fn responses_are_deterministic() {
    let f = fixture().await;
    let g = fixture().await;
    for path in [
        format!("/resource/{}", encode_component(R)),
        format!("/timemap/{}", encode_component(R)),
        format!("/memento/20100122010002/{R}"),
    ] {
        let a = send(&f.app, get(&path)).await;
        let b = send(&g.app, get(&path)).await;
        assert_eq!(a.0, b.0);
        assert_eq!(a.2.replace(f.ws.base(), ""), b.2.replace(g.ws.base(), ""));
    }
}

#[tokio::test]
async fn serves_over_tcp() {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let f = fixture().await;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = f.app.clone();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });

    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    let req = format!(
        "GET /timegate/{} HTTP/1.1\r\nHost: localhost\r\nAccept-Datetime: Fri, 22 Jan 2010 12:00:00 GMT\r\nConnection: close\r\n\r\n",
        encode_component(R)
    );
    stream.write_all(req.as_bytes()).await.unwrap();
    let mut resp = String::new();
    stream.read_to_string(&mut resp).await.unwrap();
    assert!(resp.starts_with("HTTP/1.1 302"), "{resp}");
    assert!(resp.to_ascii_lowercase().contains("location: "));
    assert!(resp.contains("/20100122010002/"));
}

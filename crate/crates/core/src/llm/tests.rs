use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};

use super::*;

/// Serves canned `(status, body)` replies in order on a loopback port and
/// records each request as `(headers, body)`.
struct MockServer {
    url: String,
    requests: Arc<Mutex<Vec<(String, String)>>>,
}

impl MockServer {
    fn start(replies: Vec<(u16, String)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        std::thread::spawn(move || {
            for (status, body) in replies {
                let Ok((stream, _)) = listener.accept() else {
                    return;
                };
                let mut reader = BufReader::new(stream);
                let mut headers = String::new();
                let mut length = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                    headers.push_str(&line);
                }
                let mut buf = vec![0; length];
                reader.read_exact(&mut buf).unwrap();
                log.lock()
                    .unwrap()
                    .push((headers, String::from_utf8(buf).unwrap()));
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                reader.get_mut().write_all(reply.as_bytes()).unwrap();
            }
        });
        MockServer { url, requests }
    }
}

fn chat_body(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]})
        .to_string()
}

fn client(url: &str) -> ChatClient {
    ChatClient::new(ClientConfig {
        endpoint: url.into(),
        max_retries: 2,
        backoff_ms: 1,
        timeout_secs: 5,
        api_key: Some("k".into()),
        ..ClientConfig::default()
    })
    .unwrap()
}

fn corpus(lines: &[&str]) -> RawCorpus {
    RawCorpus::new("t", lines.iter().map(|s| s.to_string()).collect()).unwrap()
}

#[test]
fn batches_partition_the_corpus() {
    for k in [1, 2, 4, 5, 10, 17, 100] {
        let plan = make_batches(k, 7);
        let size = BatchPlan::batch_size(k);
        assert!(size * size >= k && (size - 1) * (size - 1) < k);
        let all: BTreeSet<usize> = plan.batches.iter().flatten().copied().collect();
        assert_eq!(all, (0..k).collect());
        assert_eq!(plan.batches.iter().map(Vec::len).sum::<usize>(), k);
        assert!(plan.batches.iter().all(|b| b.len() <= size));
        assert_eq!(plan, make_batches(k, 7));
    }
    assert_ne!(make_batches(100, 1), make_batches(100, 2));
    assert!(make_batches(0, 0).batches.is_empty());
}

#[test]
fn prompt_template() {
    let cfg = ClientConfig::default();
    cfg.validate().unwrap();
    assert_eq!(
        cfg.render_prompt(&["甲乙", "丙"]),
        DEFAULT_PROMPT.replace(TEXT_SLOT, "甲乙\n丙")
    );
    for bad in ["no slot", "{TEXT} {TEXT}"] {
        let cfg = ClientConfig {
            prompt_template: bad.into(),
            ..ClientConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
    let cfg: ClientConfig = toml::from_str("model = \"m\"\ntemperature = 0.5").unwrap();
    assert_eq!((cfg.model.as_str(), cfg.temperature), ("m", 0.5));
    assert_eq!(cfg.max_retries, ClientConfig::default().max_retries);
    assert!(toml::from_str::<ClientConfig>("modle = \"m\"").is_err());
}

#[test]
fn fixture_format() {
    let f = Fixture::parse(">ab\n<a b\n\n>cd\n<\n>ab\n<ab\n").unwrap();
    assert_eq!(f.len(), 2);
    assert_eq!(f.get("ab"), Some("ab"));
    assert_eq!(f.get("cd"), Some(""));
    assert_eq!(Fixture::parse(&f.to_text()).unwrap(), f);
    assert_eq!(Fixture::parse(">ab\n>cd\n<c d").unwrap_err().0, 1);
    assert_eq!(Fixture::parse("<x").unwrap_err().0, 1);
    assert_eq!(Fixture::parse(">a\n<a\nzzz").unwrap_err().0, 3);
    assert_eq!(Fixture::parse(">a").unwrap_err().0, 1);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.txt");
    f.save(&p).unwrap();
    assert_eq!(Fixture::load(&p).unwrap(), f);
    std::fs::write(&p, "junk\n").unwrap();
    assert!(matches!(
        Fixture::load(&p),
        Err(Error::Format { line: 1, .. })
    ));
}

#[test]
fn fixture_replay_validates_lines() {
    let mut f = Fixture::new();
    f.insert("甲乙丙", "甲乙 丙");
    f.insert("丁戊", "丁 己");
    let c = corpus(&["甲乙丙", "丁戊", "庚"]);
    let run = sample(&f, &c, 3, 2).unwrap();
    assert_eq!(
        run.accepted(),
        [(0, vec!["甲乙".to_string(), "丙".to_string()])]
    );
    assert_eq!(
        (
            run.accepted_count(),
            run.rejected_count(),
            run.failed_batches()
        ),
        (1, 2, 0)
    );
    assert_eq!(run.counts().count("甲乙"), 1);
}

#[test]
fn sampling_is_independent_of_concurrency() {
    let sentences: Vec<String> = (0..40).map(|i| format!("句{i}子")).collect();
    let mut f = Fixture::new();
    for s in &sentences {
        let c: Vec<char> = s.chars().collect();
        f.insert(
            s.clone(),
            format!("{} {}", c[0], c[1..].iter().collect::<String>()),
        );
    }
    let c = RawCorpus::new("t", sentences).unwrap();
    let one = sample(&f, &c, 9, 1).unwrap();
    let many = sample(&f, &c, 9, 8).unwrap();
    assert_eq!(one.accepted(), many.accepted());
    assert_eq!(one.accepted().len(), 40);
    assert_eq!(one.counts(), many.counts());
}

#[test]
fn recorder_round_trip() {
    let mut f = Fixture::new();
    f.insert("ab", "a b");
    let rec = Recorder::new(&f);
    let c = corpus(&["ab", "cd"]);
    let live = sample(&rec, &c, 0, 1).unwrap();
    let replay = sample(&rec.fixture(), &c, 0, 1).unwrap();
    assert_eq!(live.accepted(), replay.accepted());
    assert_eq!(rec.fixture().get("cd"), Some(""));
}

struct Failing;

impl SegmentationSource for Failing {
    fn segment_batch(&self, _: &[&str]) -> std::result::Result<Vec<String>, BatchFailure> {
        Err(BatchFailure("down".into()))
    }
}

#[test]
fn whole_pass_failures() {
    let c = corpus(&["ab", "cd", "ef"]);
    let idx = SuffixIndex::build(&c);
    let opts = WsOptions::default();
    assert!(matches!(
        run_llm_ws(&Failing, &c, &idx, &opts),
        Err(Error::Upstream(_))
    ));
    assert!(matches!(
        run_llm_ws(&Fixture::new(), &c, &idx, &opts),
        Err(Error::EmptyVocabulary)
    ));
    assert!(matches!(
        run_llm_ws(&Fixture::new(), &corpus(&[]), &idx, &opts),
        Err(Error::EmptyInput(_))
    ));
}

#[test]
fn filter_scopes() {
    let sentences = ["甲乙丙", "甲乙丁", "丙丁", "甲乙", "乙丙丁"];
    let mut f = Fixture::new();
    for s in sentences {
        let c: Vec<String> = s.chars().map(String::from).collect();
        f.insert(s, c.join(" "));
    }
    f.insert("甲乙丙", "甲乙 丙");
    f.insert("甲乙", "甲乙");
    let c = corpus(&sentences);
    let idx = SuffixIndex::build(&c);
    let pooled = run_llm_ws(&f, &c, &idx, &WsOptions::default()).unwrap();
    assert_eq!(pooled.count("甲乙"), 2);
    assert_eq!(pooled.count("丁"), 3);
    let batch = run_llm_ws(
        &f,
        &c,
        &idx,
        &WsOptions {
            scope: FilterScope::Batch,
            ..WsOptions::default()
        },
    )
    .unwrap();
    // single characters always survive, so totals agree on them
    assert_eq!(batch.count("丁"), 3);
    assert!(batch.len() <= pooled.len() + 1);
    assert_eq!("batch".parse::<FilterScope>().unwrap(), FilterScope::Batch);
    assert!("both".parse::<FilterScope>().is_err());
}

#[test]
fn http_success() {
    let server = MockServer::start(vec![(200, chat_body("甲乙 丙\n丁 戊"))]);
    let lines = client(&server.url)
        .request_segmentation(&["甲乙丙", "丁戊"])
        .unwrap();
    assert_eq!(lines, ["甲乙 丙", "丁 戊"]);
    let requests = server.requests.lock().unwrap();
    let (headers, body) = &requests[0];
    assert!(headers
        .to_ascii_lowercase()
        .contains("authorization: bearer k"));
    let json: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(json["temperature"], 0.0);
    assert_eq!(json["messages"][0]["role"], "user");
    assert!(json["messages"][0]["content"]
        .as_str()
        .unwrap()
        .ends_with("甲乙丙\n丁戊"));
}

#[test]
fn http_retries_then_succeeds() {
    let server = MockServer::start(vec![
        (500, "{}".into()),
        (503, "{}".into()),
        (200, chat_body("a b")),
    ]);
    assert_eq!(
        client(&server.url).request_segmentation(&["ab"]).unwrap(),
        ["a b"]
    );
    assert_eq!(server.requests.lock().unwrap().len(), 3);
}

#[test]
fn http_gives_up() {
    let server = MockServer::start(vec![(500, "{}".into()); 3]);
    let err = client(&server.url)
        .request_segmentation(&["ab"])
        .unwrap_err();
    assert!(err.0.contains("500"), "{err:?}");
    assert_eq!(server.requests.lock().unwrap().len(), 3);
}

#[test]
fn http_malformed_body_rejects_the_batch() {
    let server = MockServer::start(vec![(200, "<html>".into())]);
    let c = client(&server.url);
    let run = sample(&c, &corpus(&["ab"]), 0, 1).unwrap();
    assert_eq!(
        (
            run.accepted_count(),
            run.rejected_count(),
            run.failed_batches()
        ),
        (0, 1, 0)
    );
}

#[test]
fn http_unreachable_is_upstream() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let c = client(&format!("http://127.0.0.1:{port}/v1/chat/completions"));
    let corpus = corpus(&["ab"]);
    let idx = SuffixIndex::build(&corpus);
    let err = run_llm_ws(&c, &corpus, &idx, &WsOptions::default()).unwrap_err();
    assert_eq!(err.class(), crate::ErrorClass::Upstream);
}

//! HTTP backends against a scripted server on localhost.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use claimcheck::http::{
    ChatBackend, ChatSettings, SerperSearch, SerperSettings, ThrottleConfig, WikidataBackend, WikidataSettings,
};
use claimcheck_core::kg::{Direction, EntityId, KgBackend, KgError};
use claimcheck_core::llm::{Decoding, LlmBackend, LlmError};
use claimcheck_core::web::{SearchProvider, WebError};
use serde_json::{json, Value};

const KEY_VAR: &str = "CLAIMCHECK_HTTP_TEST_KEY";

#[derive(Clone)]
struct Reply {
    status: u16,
    body: String,
    delay: Duration,
}

fn reply(status: u16, body: Value) -> Reply {
    Reply {
        status,
        body: body.to_string(),
        delay: Duration::ZERO,
    }
}

/// Raw request: request line, lowercased headers and body.
#[derive(Debug, Clone)]
struct Request {
    line: String,
    headers: Vec<(String, String)>,
    body: String,
}

impl Request {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

/// Serves the scripted replies in order (the last one repeats), one
/// connection per request.
struct Server {
    url: String,
    requests: Arc<Mutex<Vec<Request>>>,
}

impl Server {
    fn start(replies: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = requests.clone();
        thread::spawn(move || {
            for (i, stream) in listener.incoming().enumerate() {
                let Ok(stream) = stream else { break };
                let r = replies[i.min(replies.len() - 1)].clone();
                let log = log.clone();
                thread::spawn(move || serve(stream, r, &log));
            }
        });
        Self { url, requests }
    }

    fn requests(&self) -> Vec<Request> {
        self.requests.lock().unwrap().clone()
    }
}

fn serve(mut stream: TcpStream, r: Reply, log: &Mutex<Vec<Request>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).is_err() {
        return;
    }
    let mut headers = Vec::new();
    loop {
        let mut h = String::new();
        if reader.read_line(&mut h).is_err() || h.trim().is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            headers.push((k.trim().to_lowercase(), v.trim().to_string()));
        }
    }
    let len: usize = headers
        .iter()
        .find(|(k, _)| k == "content-length")
        .and_then(|(_, v)| v.parse().ok())
        .unwrap_or(0);
    let mut body = vec![0; len];
    let _ = reader.read_exact(&mut body);
    log.lock().unwrap().push(Request {
        line: line.trim().to_string(),
        headers,
        body: String::from_utf8_lossy(&body).into_owned(),
    });
    thread::sleep(r.delay);
    let _ = write!(
        stream,
        "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        r.status,
        r.body.len(),
        r.body
    );
}

fn fast_throttle() -> ThrottleConfig {
    ThrottleConfig {
        requests_per_second: 1000.0,
        burst: 100,
        max_in_flight: 8,
    }
}

fn wikidata(server: &Server) -> WikidataSettings {
    WikidataSettings {
        sparql_endpoint: format!("{}/sparql", server.url),
        search_endpoint: format!("{}/w/api.php", server.url),
        timeout: Duration::from_secs(5),
        retry_delay: Duration::from_millis(10),
        throttle: fast_throttle(),
        ..WikidataSettings::default()
    }
}

fn sparql_rows() -> Value {
    json!({"results": {"bindings": [
        {"prop": {"value": "http://www.wikidata.org/prop/direct/P36"}, "propLabel": {"value": "capital"},
         "other": {"value": "http://www.wikidata.org/entity/Q3870"}, "otherLabel": {"value": "Nairobi"}}
    ]}})
}

#[test]
fn wikidata_search_and_edges_are_parsed_and_cached() {
    let server = Server::start(vec![
        reply(200, json!({"search": [{"id": "Q114", "label": "Kenya"}]})),
        reply(200, sparql_rows()),
    ]);
    let cache = tempfile::tempdir().unwrap();
    let kg = WikidataBackend::new(WikidataSettings {
        cache_dir: Some(cache.path().into()),
        ..wikidata(&server)
    })
    .unwrap();

    let hits = kg.search_entities("Kenya", 5).unwrap();
    assert_eq!(hits, vec![EntityId::new("Q114", "Kenya")]);
    let kenya = EntityId::new("Q114", "Kenya");
    let edges = kg.edges(&kenya, Direction::Outgoing).unwrap();
    assert_eq!(edges.len(), 1);
    assert_eq!(
        (edges[0].relation.id.as_str(), edges[0].other.id.as_str()),
        ("P36", "Q3870")
    );

    let reqs = server.requests();
    assert_eq!(reqs.len(), 2);
    assert!(reqs[0].line.starts_with("GET /w/api.php?"), "{}", reqs[0].line);
    assert!(reqs[0].line.contains("action=wbsearchentities"));
    assert!(reqs[0].header("user-agent").unwrap().starts_with("claimcheck/"));
    assert!(reqs[1].line.contains("/sparql"), "{}", reqs[1].line);

    // repeated queries are answered from the cache
    assert_eq!(kg.edges(&kenya, Direction::Outgoing).unwrap(), edges);
    assert_eq!(kg.search_entities("Kenya", 5).unwrap(), hits);
    assert_eq!(server.requests().len(), 2);
    // non-item ids never reach the endpoint
    assert!(kg
        .edges(&EntityId::new("W:abc", "web"), Direction::Incoming)
        .unwrap()
        .is_empty());
    assert_eq!(server.requests().len(), 2);
}

#[test]
fn wikidata_retries_then_reports_transport_errors() {
    let server = Server::start(vec![reply(500, json!({})), reply(500, json!({}))]);
    let kg = WikidataBackend::new(wikidata(&server)).unwrap();
    let err = kg.edges(&EntityId::new("Q1", "one"), Direction::Outgoing).unwrap_err();
    assert!(matches!(err, KgError::Transport(_)), "{err:?}");
    assert_eq!(server.requests().len(), 2);
}

#[test]
fn wikidata_recovers_after_one_failure() {
    let server = Server::start(vec![reply(503, json!({})), reply(200, sparql_rows())]);
    let kg = WikidataBackend::new(wikidata(&server)).unwrap();
    assert_eq!(
        kg.edges(&EntityId::new("Q1", "one"), Direction::Incoming)
            .unwrap()
            .len(),
        1
    );
}

#[test]
fn slow_wikidata_is_a_timeout() {
    let slow = Reply {
        status: 200,
        body: sparql_rows().to_string(),
        delay: Duration::from_millis(800),
    };
    let server = Server::start(vec![slow]);
    let kg = WikidataBackend::new(WikidataSettings {
        timeout: Duration::from_millis(150),
        ..wikidata(&server)
    })
    .unwrap();
    let err = kg.edges(&EntityId::new("Q1", "one"), Direction::Outgoing).unwrap_err();
    assert_eq!(err, KgError::QueryTimeout);
}

fn serper(server: &Server) -> SerperSettings {
    std::env::set_var(KEY_VAR, "test-key");
    SerperSettings {
        endpoint: format!("{}/search", server.url),
        api_key_env: KEY_VAR.into(),
        throttle: fast_throttle(),
        ..SerperSettings::default()
    }
}

#[test]
fn serper_posts_the_query_and_parses_organic_results() {
    let server = Server::start(vec![reply(
        200,
        json!({"organic": [
            {"title": "Kenya", "link": "https://en.example.org/Kenya", "snippet": "Nairobi is the capital.", "position": 1},
            {"title": "Other", "link": "https://other.example", "snippet": "More.", "position": 2}
        ]}),
    )]);
    let web = SerperSearch::new(serper(&server)).unwrap();
    let docs = web.search("capital of Kenya", 5).unwrap();
    assert_eq!(docs.len(), 2);
    assert_eq!(docs[0].url, "https://en.example.org/Kenya");
    assert_eq!(docs[1].provider_rank, 2);

    let reqs = server.requests();
    assert!(reqs[0].line.starts_with("POST /search"));
    assert_eq!(reqs[0].header("x-api-key"), Some("test-key"));
    let body: Value = serde_json::from_str(&reqs[0].body).unwrap();
    assert_eq!(body, json!({"q": "capital of Kenya", "num": 5}));
}

#[test]
fn serper_rate_limit_is_a_quota_error() {
    let server = Server::start(vec![reply(429, json!({"message": "quota"}))]);
    let web = SerperSearch::new(serper(&server)).unwrap();
    assert!(matches!(
        web.search("anything", 3),
        Err(WebError::ProviderQuotaExceeded)
    ));
}

fn chat(server: &Server) -> ChatSettings {
    std::env::set_var(KEY_VAR, "test-key");
    ChatSettings {
        endpoint: format!("{}/v1/", server.url),
        model: "test-model".into(),
        api_key_env: KEY_VAR.into(),
        retry_delay: Duration::from_millis(10),
        throttle: fast_throttle(),
        ..ChatSettings::default()
    }
}

fn completion(text: &str) -> Value {
    json!({"choices": [{"message": {"role": "assistant", "content": text}}], "usage": {"prompt_tokens": 7, "completion_tokens": 3}})
}

#[test]
fn chat_retries_server_errors_and_sends_the_decoding() {
    let server = Server::start(vec![
        reply(500, json!({})),
        reply(429, json!({})),
        reply(200, completion("{\"ok\":true}")),
    ]);
    let llm = ChatBackend::new(chat(&server)).unwrap();
    let decoding = Decoding {
        temperature: 0.0,
        max_output_tokens: 256,
    };
    let c = llm.complete("hello", &decoding).unwrap();
    assert_eq!(c.text, "{\"ok\":true}");
    assert_eq!(c.output_tokens, Some(3));

    let reqs = server.requests();
    assert_eq!(reqs.len(), 3);
    assert!(
        reqs[2].line.starts_with("POST /v1/chat/completions"),
        "{}",
        reqs[2].line
    );
    assert_eq!(reqs[2].header("authorization"), Some("Bearer test-key"));
    let body: Value = serde_json::from_str(&reqs[2].body).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0], json!({"role": "user", "content": "hello"}));
    assert_eq!(
        (body["temperature"].as_f64(), body["max_tokens"].as_u64()),
        (Some(0.0), Some(256))
    );
}

#[test]
fn chat_client_errors_are_not_retried() {
    let server = Server::start(vec![reply(400, json!({"error": "bad request"}))]);
    let llm = ChatBackend::new(chat(&server)).unwrap();
    let err = llm.complete("hello", &Decoding::default()).unwrap_err();
    assert!(matches!(&err, LlmError::Transport(m) if m.contains("400")), "{err:?}");
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn chat_gives_up_after_the_retry_budget() {
    let server = Server::start(vec![reply(503, json!({}))]);
    let llm = ChatBackend::new(ChatSettings {
        max_retries: 2,
        ..chat(&server)
    })
    .unwrap();
    assert!(llm.complete("hello", &Decoding::default()).is_err());
    assert_eq!(server.requests().len(), 3);
}

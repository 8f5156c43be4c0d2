//! The /v1 API over a real socket.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use greenroom::flow::{Session, StyleConfig};
use greenroom::sheet::read_sheet_dir;
use greenroom::LeadSheet;
use greenroom_server::{router, AppState, Config};
use serde_json::{json, Value};

fn data_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn corpus() -> Vec<LeadSheet> {
    read_sheet_dir(data_root().join("corpora/showtunes")).unwrap()
}

struct Server {
    base: String,
    task: tokio::task::JoinHandle<()>,
    client: reqwest::Client,
}

impl Server {
    async fn start(state_dir: &std::path::Path) -> Server {
        let config = Config { state_dir: state_dir.into(), data_root: data_root(), budget: Duration::from_secs(30) };
        let state = AppState::new(config).unwrap();
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let task = tokio::spawn(async move {
            axum::serve(listener, router(state)).await.unwrap();
        });
        Server { base, task, client: reqwest::Client::new() }
    }

    async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self.client.post(format!("{}{}", self.base, path)).json(&body).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.client.get(format!("{}{}", self.base, path)).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn create(&self, sheet: &LeadSheet) -> String {
        let (status, body) = self.post("/v1/sessions", json!({ "corpus": "showtunes", "sheet": sheet })).await;
        assert_eq!(status, 201, "{}", body);
        body["id"].as_str().unwrap().to_string()
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.task.abort();
    }
}

#[tokio::test]
async fn create_get_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path()).await;
    let sheet = corpus().remove(0);
    let id = server.create(&sheet).await;
    assert_eq!(id.len(), 32);
    let (status, body) = server.get(&format!("/v1/sessions/{}/sheet", id)).await;
    assert_eq!(status, 200);
    assert_eq!(body["revision"], 0);
    assert_eq!(serde_json::from_value::<LeadSheet>(body["sheet"].clone()).unwrap(), sheet);

    let (status, body) = server.post("/v1/sessions", json!({ "corpus": "showtunes" })).await;
    assert_eq!(status, 201);
    assert_eq!(body["sheet"]["bars"].as_array().unwrap().len(), 0);

    assert_eq!(server.post("/v1/sessions", json!({ "corpus": "nope" })).await.0, 404);
    assert_eq!(server.get("/v1/sessions/0123456789abcdef0123456789abcdef/sheet").await.0, 404);
    let (status, _) =
        server.post(&format!("/v1/sessions/{}/compose", id), json!({ "revision": 0, "zone": "bogus" })).await;
    assert_eq!(status, 422);
}

#[tokio::test]
async fn undo_on_a_fresh_session_keeps_the_revision() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path()).await;
    let id = server.create(&corpus()[1]).await;
    let (status, body) = server.post(&format!("/v1/sessions/{}/undo", id), json!({ "revision": 0 })).await;
    assert_eq!(status, 200);
    assert_eq!(body["revision"], 0);
    assert_eq!(body["outcome"], "nothing_to_undo");
}

#[tokio::test]
async fn compose_matches_the_library_and_rejects_stale_revisions() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path()).await;
    let sheets = corpus();
    let sheet = sheets[2].clone();
    let id = server.create(&sheet).await;
    let path = format!("/v1/sessions/{}/compose", id);
    let (status, body) =
        server.post(&path, json!({ "revision": 0, "zone": "b1.0-b3.0", "seed": 42, "candidates": 4 })).await;
    assert_eq!(status, 200, "{}", body);
    assert_eq!(body["revision"], 1);
    assert_eq!(body["seed"], 42);

    let (model, _) = StyleConfig::default().build(&sheets).unwrap();
    let mut local = Session::new(sheet, Arc::new(model)).unwrap();
    local.regenerate_with_controls(&"b1.0-b3.0".parse().unwrap(), 4, 42).unwrap();
    assert_eq!(serde_json::from_value::<LeadSheet>(body["sheet"].clone()).unwrap(), local.sheet);

    let (status, body) = server.post(&path, json!({ "revision": 0, "zone": "b1.0-b3.0", "seed": 1 })).await;
    assert_eq!(status, 409);
    assert_eq!(body["current_revision"], 1);

    let (status, body) =
        server.post(&format!("/v1/sessions/{}/learn", id), json!({ "revision": 1, "zones": ["b0.0-b2.0"] })).await;
    assert_eq!(status, 200, "{}", body);
    assert_eq!(body["revision"], 2);
    let (_, history) = server.get(&format!("/v1/sessions/{}/history", id)).await;
    assert_eq!(history["undo_depth"], 1);
    assert_eq!(history["corpus_version"], body["corpus_version"]);
}

#[tokio::test]
async fn concurrent_mutations_have_one_winner() {
    let dir = tempfile::tempdir().unwrap();
    let server = Arc::new(Server::start(dir.path()).await);
    let id = server.create(&corpus()[0]).await;
    let mut tasks = Vec::new();
    for seed in 0..8u64 {
        let (server, id) = (server.clone(), id.clone());
        tasks.push(tokio::spawn(async move {
            server
                .post(
                    &format!("/v1/sessions/{}/compose", id),
                    json!({ "revision": 0, "zone": "b0.0-b2.0", "seed": seed }),
                )
                .await
        }));
    }
    let mut statuses = Vec::new();
    for t in tasks {
        statuses.push(t.await.unwrap().0);
    }
    assert_eq!(statuses.iter().filter(|s| **s == 200).count(), 1, "{:?}", statuses);
    assert_eq!(statuses.iter().filter(|s| **s == 409).count(), 7);
    assert_eq!(server.get(&format!("/v1/sessions/{}/sheet", id)).await.1["revision"], 1);
}

#[tokio::test]
async fn acknowledged_sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let id;
    let before;
    {
        let server = Server::start(dir.path()).await;
        id = server.create(&corpus()[3]).await;
        let (status, _) = server
            .post(&format!("/v1/sessions/{}/compose", id), json!({ "revision": 0, "zone": "b0.0-b2.0", "seed": 5 }))
            .await;
        assert_eq!(status, 200);
        let (status, _) =
            server.post(&format!("/v1/sessions/{}/learn", id), json!({ "revision": 1, "zones": ["b2.0-b4.0"] })).await;
        assert_eq!(status, 200);
        before = (
            server.get(&format!("/v1/sessions/{}/sheet", id)).await.1,
            server.get(&format!("/v1/sessions/{}/history", id)).await.1,
        );
    }
    let server = Server::start(dir.path()).await;
    let after = (
        server.get(&format!("/v1/sessions/{}/sheet", id)).await.1,
        server.get(&format!("/v1/sessions/{}/history", id)).await.1,
    );
    assert_eq!(before, after);
    let (status, body) = server.post(&format!("/v1/sessions/{}/undo", id), json!({ "revision": 2 })).await;
    assert_eq!(status, 200);
    assert_eq!(body["revision"], 3);
}

#[tokio::test]
async fn stateless_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path()).await;
    let kb = std::fs::read_to_string(data_root().join("kb/dog.kb")).unwrap();
    let (status, body) = server.post("/v1/ideas", json!({ "kb": kb })).await;
    assert_eq!(status, 200, "{}", body);
    assert!(body.to_string().contains("What if a dog learned how to ride a horse?"));

    let (status, body) = server.post("/v1/lyrics", json!({ "creativity": 0.7, "max_chars": 120, "order": 3 })).await;
    assert_eq!(status, 200, "{}", body);
    assert_eq!(body["creativity"], 0.7);
    let seed = body["seed"].as_u64().unwrap();
    let (_, again) =
        server.post("/v1/lyrics", json!({ "creativity": 0.7, "max_chars": 120, "order": 3, "seed": seed })).await;
    assert_eq!(again["text"], body["text"]);

    let (status, body) = server.post("/v1/plots", json!({ "seed": 3, "smoothing": 0.0 })).await;
    assert_eq!(status, 200, "{}", body);
    assert_eq!(body["elements"].as_array().unwrap().len(), 10);
    assert_eq!(body["seed"], 3);

    let (status, body) = server.post("/v1/clouds", json!({ "song_type": "I Want" })).await;
    assert_eq!(status, 200, "{}", body);
    assert!(!body["words"].as_array().unwrap().is_empty());

    let shows: Value =
        serde_json::from_str(&std::fs::read_to_string(data_root().join("analytics/shows.json")).unwrap()).unwrap();
    let (status, body) = server.post("/v1/analytics/classify", json!({ "shows": shows })).await;
    assert_eq!(status, 200, "{}", body);
    assert_eq!(body["shows"].as_array().unwrap().len(), shows.as_array().unwrap().len());
    let (status, body) = server.post("/v1/analytics/propensity", json!({ "shows": shows })).await;
    assert_eq!(status, 200, "{}", body);
    assert!(body["csv"].as_str().unwrap().starts_with("factor"));
    assert_eq!(server.post("/v1/analytics/nope", json!({})).await.0, 404);
}

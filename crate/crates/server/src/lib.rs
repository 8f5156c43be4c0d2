//! JSON-over-HTTP session service for lead-sheet co-writing.
//!
//! Sessions live in memory and in one file each under the state directory;
//! every acknowledged mutation is on disk before the response is sent.
//! Mutations carry the revision the client last saw and are rejected with
//! `409 Conflict` when it is stale.

mod api;
mod error;
pub mod store;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use greenroom::flow::{Session, StyleConfig, StyleModel};
use greenroom::lyrics::CharLm;

pub use api::router;
pub use error::ApiError;

pub const DEFAULT_BUDGET: Duration = Duration::from_secs(30);

#[derive(Clone, Debug)]
pub struct Config {
    /// Where session files are kept.
    pub state_dir: PathBuf,
    /// Holds `corpora/<id>/` lead-sheet corpora, `plots/annotated.json`
    /// and a `lyrics/` corpus.
    pub data_root: PathBuf,
    /// Wall-clock limit for one generation request.
    pub budget: Duration,
}

/// A loaded session and the bookkeeping persisted with it.
#[derive(Clone)]
pub(crate) struct Live {
    pub id: String,
    pub revision: u64,
    pub corpus: String,
    pub params: StyleConfig,
    pub learned: Vec<Vec<greenroom::flow::Material>>,
    pub session: Session,
}

impl Live {
    pub fn persisted(&self) -> store::PersistedSession {
        store::PersistedSession {
            schema_version: store::SCHEMA_VERSION,
            id: self.id.clone(),
            last_modified: store::now_millis(),
            revision: self.revision,
            corpus: self.corpus.clone(),
            params: self.params.clone(),
            sheet: self.session.sheet.clone(),
            history: self.session.history.clone(),
            controls: self.session.controls,
            learned: self.learned.clone(),
        }
    }
}

pub struct AppState {
    pub config: Config,
    pub(crate) sessions: tokio::sync::Mutex<HashMap<String, Arc<tokio::sync::Mutex<Live>>>>,
    models: Mutex<HashMap<(String, StyleConfig), Arc<StyleModel>>>,
    lyric_models: Mutex<HashMap<usize, Arc<CharLm>>>,
}

impl AppState {
    pub fn new(config: Config) -> std::io::Result<Arc<Self>> {
        std::fs::create_dir_all(&config.state_dir)?;
        Ok(Arc::new(AppState {
            config,
            sessions: Default::default(),
            models: Default::default(),
            lyric_models: Default::default(),
        }))
    }

    fn corpus_dir(&self, corpus: &str) -> Result<PathBuf, ApiError> {
        let ok = !corpus.is_empty() && corpus.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
        let dir = self.config.data_root.join("corpora").join(corpus);
        if !ok || !dir.is_dir() {
            return Err(ApiError::not_found(format!("unknown corpus {:?}", corpus)));
        }
        Ok(dir)
    }

    /// The corpus model for these parameters, built once and shared.
    pub(crate) fn style_model(&self, corpus: &str, params: &StyleConfig) -> Result<Arc<StyleModel>, ApiError> {
        let key = (corpus.to_string(), params.clone());
        if let Some(m) = self.models.lock().expect("model cache poisoned").get(&key) {
            return Ok(m.clone());
        }
        let sheets = greenroom::sheet::read_sheet_dir(self.corpus_dir(corpus)?).map_err(ApiError::internal)?;
        let (model, _) = params.build(&sheets).map_err(ApiError::unprocessable)?;
        let model = Arc::new(model);
        self.models.lock().expect("model cache poisoned").insert(key, model.clone());
        Ok(model)
    }

    pub(crate) fn lyric_model(&self, order: usize) -> Result<Arc<CharLm>, ApiError> {
        if let Some(m) = self.lyric_models.lock().expect("lyric cache poisoned").get(&order) {
            return Ok(m.clone());
        }
        let corpus =
            greenroom::lyrics::read_lyric_corpus(self.config.data_root.join("lyrics")).map_err(ApiError::internal)?;
        let model = Arc::new(greenroom::lyrics::train_char_lm(&corpus.stages, order).map_err(ApiError::unprocessable)?);
        self.lyric_models.lock().expect("lyric cache poisoned").insert(order, model.clone());
        Ok(model)
    }

    /// Rebuilds a session from its file: corpus model, then every learned
    /// batch in order.
    pub(crate) fn restore(&self, saved: store::PersistedSession) -> Result<Live, ApiError> {
        let mut model = self.style_model(&saved.corpus, &saved.params)?;
        for batch in &saved.learned {
            model = Arc::new(model.learn(batch).map_err(ApiError::internal)?);
        }
        let session = Session { sheet: saved.sheet, model, history: saved.history, controls: saved.controls };
        Ok(Live {
            id: saved.id,
            revision: saved.revision,
            corpus: saved.corpus,
            params: saved.params,
            learned: saved.learned,
            session,
        })
    }
}

/// Binds `addr`, prints `listening on ADDR` and serves until interrupted.
pub async fn serve(config: Config, addr: SocketAddr) -> std::io::Result<()> {
    let state = AppState::new(config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("listening on {}", listener.local_addr()?);
    use std::io::Write;
    std::io::stdout().flush()?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

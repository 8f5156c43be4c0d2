//! One JSON file per session, replaced atomically.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use greenroom::flow::{History, Material, StyleConfig};
use greenroom::sheet::ControlTargets;
use greenroom::LeadSheet;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything needed to rebuild a session. The style model itself is not
/// stored: it is rebuilt from the corpus and the learned batches replayed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistedSession {
    pub schema_version: u32,
    pub id: String,
    /// Milliseconds since the Unix epoch.
    pub last_modified: u64,
    pub revision: u64,
    pub corpus: String,
    pub params: StyleConfig,
    pub sheet: LeadSheet,
    pub history: History,
    pub controls: ControlTargets,
    /// Material of each learn call, in order.
    pub learned: Vec<Vec<Material>>,
}

pub fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

/// Session ids are 32 lowercase hex digits.
pub fn valid_id(id: &str) -> bool {
    id.len() == 32 && id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

pub fn session_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{}.json", id))
}

/// Writes to a temporary file, syncs it, renames it over the session file
/// and syncs the directory.
pub fn save(dir: &Path, session: &PersistedSession) -> std::io::Result<()> {
    let bytes = serde_json::to_vec(session).map_err(std::io::Error::other)?;
    let tmp = dir.join(format!(".{}.json.tmp", session.id));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, session_path(dir, &session.id))?;
    File::open(dir)?.sync_all()
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("no such session")]
    Missing,
    #[error("session file {path}: {message}")]
    Corrupt { path: String, message: String },
}

pub fn load(dir: &Path, id: &str) -> Result<PersistedSession, LoadError> {
    let path = session_path(dir, id);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(LoadError::Missing),
        Err(e) => return Err(LoadError::Corrupt { path: path.display().to_string(), message: e.to_string() }),
    };
    let corrupt = |message: String| LoadError::Corrupt { path: path.display().to_string(), message };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        other => return Err(corrupt(format!("unsupported schema version {:?}", other))),
    }
    serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))
}

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use greenroom::analytics::{self, ArcDataset, CurveRecord, ShowRecord, Thresholds};
use greenroom::flow::{extract_region, Outcome, Session, StyleConfig, Zone};
use greenroom::ideation::{self, IdeateOptions, MeasureWeights, RankingContext};
use greenroom::lyrics::{self, Creativity, SongType};
use greenroom::plot;
use greenroom::sheet::ControlTargets;
use greenroom::LeadSheet;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{store, ApiError, AppState, Live};

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}/sheet", get(get_sheet).post(edit_sheet))
        .route("/v1/sessions/{id}/compose", post(compose))
        .route("/v1/sessions/{id}/undo", post(undo))
        .route("/v1/sessions/{id}/redo", post(redo))
        .route("/v1/sessions/{id}/learn", post(learn))
        .route("/v1/sessions/{id}/controls", post(set_controls))
        .route("/v1/sessions/{id}/history", get(history))
        .route("/v1/ideas", post(ideas))
        .route("/v1/plots", post(plots))
        .route("/v1/lyrics", post(lyrics_endpoint))
        .route("/v1/clouds", post(clouds))
        .route("/v1/analytics/{report}", post(analytics_report))
        .with_state(state)
}

fn fresh_seed() -> u64 {
    rand::random()
}

async fn blocking<T: Send + 'static>(
    state: &AppState,
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    let budget = state.config.budget;
    match tokio::time::timeout(budget, tokio::task::spawn_blocking(f)).await {
        Ok(Ok(result)) => result,
        Ok(Err(join)) => Err(ApiError::internal(join)),
        Err(_) => Err(ApiError::budget(budget.as_secs_f64())),
    }
}

async fn session_entry(state: &Shared, id: &str) -> Result<Arc<tokio::sync::Mutex<Live>>, ApiError> {
    if !store::valid_id(id) {
        return Err(ApiError::not_found(format!("no session {}", id)));
    }
    let mut sessions = state.sessions.lock().await;
    if let Some(entry) = sessions.get(id) {
        return Ok(entry.clone());
    }
    let (st, key) = (state.clone(), id.to_string());
    let live = blocking(state, move || match store::load(&st.config.state_dir, &key) {
        Ok(saved) => st.restore(saved),
        Err(store::LoadError::Missing) => Err(ApiError::not_found(format!("no session {}", key))),
        Err(e) => Err(ApiError::internal(e)),
    })
    .await?;
    let entry = Arc::new(tokio::sync::Mutex::new(live));
    sessions.insert(id.to_string(), entry.clone());
    Ok(entry)
}

#[derive(Serialize)]
struct SheetResponse {
    id: String,
    revision: u64,
    sheet: LeadSheet,
    #[serde(skip_serializing_if = "Option::is_none")]
    outcome: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    corpus_version: Option<u64>,
}

impl SheetResponse {
    fn of(live: &Live) -> Self {
        SheetResponse {
            id: live.id.clone(),
            revision: live.revision,
            sheet: live.session.sheet.clone(),
            outcome: None,
            seed: None,
            corpus_version: None,
        }
    }
}

#[derive(Default)]
struct Extra {
    outcome: Option<Outcome>,
    seed: Option<u64>,
    corpus_version: Option<u64>,
}

async fn persist(state: &Shared, live: &Live) -> Result<(), ApiError> {
    let (dir, saved) = (state.config.state_dir.clone(), live.persisted());
    tokio::task::spawn_blocking(move || store::save(&dir, &saved))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)
}

/// Applies `f` to a copy of the session under its lock, persists the copy
/// and only then commits it. Undo or redo with nothing to do leaves the
/// revision alone.
async fn mutate<F>(state: Shared, id: String, seen: u64, f: F) -> Result<Json<SheetResponse>, ApiError>
where
    F: FnOnce(&mut Live) -> Result<Extra, ApiError> + Send + 'static,
{
    let entry = session_entry(&state, &id).await?;
    let mut live = entry.lock().await;
    if live.revision != seen {
        return Err(ApiError::conflict(live.revision, seen));
    }
    let mut next = live.clone();
    let (next, extra) = blocking(&state, move || {
        let extra = f(&mut next)?;
        Ok((next, extra))
    })
    .await?;
    let unchanged = matches!(extra.outcome, Some(Outcome::NothingToUndo | Outcome::NothingToRedo));
    if !unchanged {
        let mut next = next;
        next.revision += 1;
        persist(&state, &next).await?;
        *live = next;
    }
    let mut out = SheetResponse::of(&live);
    out.outcome = extra.outcome;
    out.seed = extra.seed;
    out.corpus_version = extra.corpus_version;
    Ok(Json(out))
}

fn zone_of(text: &str) -> Result<Zone, ApiError> {
    text.parse().map_err(ApiError::unprocessable)
}

#[derive(Deserialize)]
struct CreateRequest {
    corpus: String,
    #[serde(default)]
    params: StyleConfig,
    #[serde(default)]
    sheet: Option<LeadSheet>,
}

async fn create_session(
    State(state): State<Shared>,
    Json(req): Json<CreateRequest>,
) -> Result<(StatusCode, Json<SheetResponse>), ApiError> {
    if req.params.max_order == 0 {
        return Err(ApiError::unprocessable("max_order must be at least 1"));
    }
    let st = state.clone();
    let live = blocking(&state, move || {
        let model = st.style_model(&req.corpus, &req.params)?;
        let sheet = req.sheet.unwrap_or_else(|| {
            LeadSheet::empty(greenroom::sheet::Key::major(0), greenroom::sheet::Meter::new(4, 4).expect("4/4"), 0)
        });
        let session = Session::new(sheet, model).map_err(ApiError::unprocessable)?;
        Ok(Live {
            id: uuid::Uuid::new_v4().simple().to_string(),
            revision: 0,
            corpus: req.corpus,
            params: req.params,
            learned: Vec::new(),
            session,
        })
    })
    .await?;
    persist(&state, &live).await?;
    let out = SheetResponse::of(&live);
    state.sessions.lock().await.insert(live.id.clone(), Arc::new(tokio::sync::Mutex::new(live)));
    Ok((StatusCode::CREATED, Json(out)))
}

async fn get_sheet(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<SheetResponse>, ApiError> {
    let entry = session_entry(&state, &id).await?;
    let live = entry.lock().await;
    Ok(Json(SheetResponse::of(&live)))
}

#[derive(Deserialize)]
struct EditRequest {
    revision: u64,
    sheet: LeadSheet,
}

async fn edit_sheet(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<EditRequest>,
) -> Result<Json<SheetResponse>, ApiError> {
    mutate(state, id, req.revision, move |live| {
        live.session.edit(req.sheet).map_err(ApiError::unprocessable)?;
        Ok(Extra::default())
    })
    .await
}

#[derive(Deserialize)]
struct ComposeRequest {
    revision: u64,
    zone: String,
    #[serde(default)]
    controls: Option<ControlTargets>,
    #[serde(default = "one")]
    candidates: usize,
    #[serde(default)]
    seed: Option<u64>,
}

fn one() -> usize {
    1
}

async fn compose(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<ComposeRequest>,
) -> Result<Json<SheetResponse>, ApiError> {
    let zone = zone_of(&req.zone)?;
    let seed = req.seed.unwrap_or_else(fresh_seed);
    mutate(state, id, req.revision, move |live| {
        if let Some(controls) = req.controls {
            live.session.set_controls(controls);
        }
        live.session.regenerate_with_controls(&zone, req.candidates, seed).map_err(ApiError::unprocessable)?;
        Ok(Extra { seed: Some(seed), ..Extra::default() })
    })
    .await
}

#[derive(Deserialize)]
struct RevisionRequest {
    revision: u64,
}

async fn undo(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<RevisionRequest>,
) -> Result<Json<SheetResponse>, ApiError> {
    mutate(state, id, req.revision, |live| Ok(Extra { outcome: Some(live.session.undo()), ..Extra::default() })).await
}

async fn redo(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<RevisionRequest>,
) -> Result<Json<SheetResponse>, ApiError> {
    mutate(state, id, req.revision, |live| Ok(Extra { outcome: Some(live.session.redo()), ..Extra::default() })).await
}

#[derive(Deserialize)]
struct LearnRequest {
    revision: u64,
    zones: Vec<String>,
}

async fn learn(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<LearnRequest>,
) -> Result<Json<SheetResponse>, ApiError> {
    let zones = req.zones.iter().map(|z| zone_of(z)).collect::<Result<Vec<_>, _>>()?;
    mutate(state, id, req.revision, move |live| {
        let version = live.session.learn(&zones).map_err(ApiError::unprocessable)?;
        live.learned.push(zones.iter().map(|z| extract_region(&live.session.sheet, z)).collect());
        Ok(Extra { corpus_version: Some(version), ..Extra::default() })
    })
    .await
}

#[derive(Deserialize)]
struct ControlsRequest {
    revision: u64,
    controls: ControlTargets,
}

async fn set_controls(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<ControlsRequest>,
) -> Result<Json<SheetResponse>, ApiError> {
    mutate(state, id, req.revision, move |live| {
        live.session.set_controls(req.controls);
        Ok(Extra::default())
    })
    .await
}

async fn history(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let entry = session_entry(&state, &id).await?;
    let live = entry.lock().await;
    let stats: BTreeMap<&str, _> =
        live.session.model.stats.0.iter().map(|(param, stats)| (param.name(), *stats)).collect();
    Ok(Json(json!({
        "id": live.id,
        "revision": live.revision,
        "undo_depth": live.session.history.undo.len(),
        "redo_depth": live.session.history.redo.len(),
        "corpus": live.corpus,
        "corpus_version": live.session.model.corpus_version,
        "controls": live.session.controls,
        "control_stats": stats,
    })))
}

#[derive(Deserialize)]
struct IdeasRequest {
    kb: String,
    #[serde(default)]
    template: Option<String>,
    #[serde(default)]
    theme: Option<String>,
    #[serde(default = "ten")]
    limit: usize,
    #[serde(default)]
    weights: MeasureWeights,
}

fn ten() -> usize {
    10
}

async fn ideas(Json(req): Json<IdeasRequest>) -> Result<Json<Value>, ApiError> {
    let kb = ideation::parse_kb(&req.kb).map_err(ApiError::unprocessable)?;
    let template = match &req.template {
        None => ideation::Template::default_what_if(),
        Some(id) => ideation::bundled_templates()
            .into_iter()
            .find(|t| &t.id == id)
            .ok_or_else(|| ApiError::not_found(format!("unknown template {:?}", id)))?,
    };
    let options = IdeateOptions { theme: req.theme, limit: req.limit, weights: req.weights };
    let ideas =
        ideation::ideate(&kb, &template, &options, &RankingContext::default()).map_err(ApiError::unprocessable)?;
    Ok(Json(json!({ "template": template.id, "ideas": ideas })))
}

#[derive(Deserialize)]
struct PlotRequest {
    #[serde(default)]
    plots: Option<Vec<Vec<String>>>,
    #[serde(default = "ten")]
    length: usize,
    #[serde(default)]
    start: Option<String>,
    #[serde(default = "default_smoothing")]
    smoothing: f64,
    #[serde(default)]
    seed: Option<u64>,
}

fn default_smoothing() -> f64 {
    plot::DEFAULT_SMOOTHING
}

async fn plots(State(state): State<Shared>, Json(req): Json<PlotRequest>) -> Result<Json<Value>, ApiError> {
    let plots = match req.plots {
        Some(p) => p,
        None => {
            plot::read_plot_corpus(state.config.data_root.join("plots/annotated.json")).map_err(ApiError::internal)?
        }
    };
    let model =
        plot::train_plot_model(&plots, plot::bundled_vocabulary(), req.smoothing).map_err(ApiError::unprocessable)?;
    let seed = req.seed.unwrap_or_else(fresh_seed);
    let line = plot::generate_plot(&model, req.length, req.start.as_deref(), seed).map_err(ApiError::unprocessable)?;
    let names: Vec<&str> =
        line.elements.iter().map(|id| model.element(id).map_or(id.as_str(), |e| e.name.as_str())).collect();
    Ok(Json(
        json!({ "seed": seed, "elements": line.elements, "names": names, "log_probability": line.log_probability }),
    ))
}

#[derive(Deserialize)]
struct LyricsRequest {
    #[serde(default = "default_creativity")]
    creativity: f64,
    #[serde(default = "default_max_chars")]
    max_chars: usize,
    #[serde(default)]
    seed_text: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "default_order")]
    order: usize,
}

fn default_creativity() -> f64 {
    0.7
}

fn default_max_chars() -> usize {
    2000
}

fn default_order() -> usize {
    lyrics::DEFAULT_ORDER
}

async fn lyrics_endpoint(State(state): State<Shared>, Json(req): Json<LyricsRequest>) -> Result<Json<Value>, ApiError> {
    let creativity = Creativity::new(req.creativity).map_err(ApiError::unprocessable)?;
    let seed = req.seed.unwrap_or_else(fresh_seed);
    let st = state.clone();
    let out = blocking(&state, move || {
        let model = st.lyric_model(req.order)?;
        lyrics::generate_lyrics(&model, creativity, req.max_chars, req.seed_text.as_deref(), seed)
            .map_err(ApiError::unprocessable)
    })
    .await?;
    Ok(Json(json!({
        "creativity": creativity.value(),
        "seed": seed,
        "text": out.text,
        "mean_entropy": out.mean_entropy(),
    })))
}

#[derive(Deserialize)]
struct CloudRequest {
    song_type: String,
}

async fn clouds(State(state): State<Shared>, Json(req): Json<CloudRequest>) -> Result<Json<Value>, ApiError> {
    let song_type: SongType = req.song_type.parse().map_err(ApiError::unprocessable)?;
    let corpus = lyrics::read_lyric_corpus(state.config.data_root.join("lyrics")).map_err(ApiError::internal)?;
    let cloud = lyrics::build_word_cloud(&corpus.typed, song_type).map_err(ApiError::unprocessable)?;
    let words: Vec<Value> = cloud.ranked().into_iter().map(|(w, s)| json!({ "word": w, "weight": s })).collect();
    Ok(Json(json!({ "song_type": song_type, "words": words })))
}

fn shows_from(body: &Value) -> Result<(Vec<ShowRecord>, Thresholds), ApiError> {
    let shows: Vec<ShowRecord> = serde_json::from_value(body.get("shows").cloned().unwrap_or(Value::Null))
        .map_err(|e| ApiError::bad_request(format!("shows: {}", e)))?;
    let thresholds = match body.get("thresholds") {
        Some(t) => {
            serde_json::from_value(t.clone()).map_err(|e| ApiError::bad_request(format!("thresholds: {}", e)))?
        }
        None => Thresholds::default(),
    };
    Ok((shows, thresholds))
}

fn n_points(body: &Value) -> usize {
    body.get("n_points").and_then(Value::as_u64).unwrap_or(101) as usize
}

async fn analytics_report(Path(report): Path<String>, Json(body): Json<Value>) -> Result<Json<Value>, ApiError> {
    let bad = ApiError::unprocessable;
    match report.as_str() {
        "classify" => {
            let (shows, thresholds) = shows_from(&body)?;
            let rows = shows
                .iter()
                .map(|s| Ok(json!({ "name": s.name, "category": analytics::classify(s, thresholds).map_err(bad)? })))
                .collect::<Result<Vec<_>, ApiError>>()?;
            Ok(Json(json!({ "shows": rows })))
        }
        "propensity" => {
            let (shows, thresholds) = shows_from(&body)?;
            let factors: Vec<String> = match body.get("factors") {
                Some(f) => {
                    serde_json::from_value(f.clone()).map_err(|e| ApiError::bad_request(format!("factors: {}", e)))?
                }
                None => analytics::boolean_factors(&shows),
            };
            let rows = analytics::propensity_table(&shows, thresholds, &factors).map_err(bad)?;
            Ok(Json(json!({
                "rows": rows.iter().map(|(f, p)| json!({ "factor": f, "hit_rate": p.hit_rate, "flop_rate": p.flop_rate })).collect::<Vec<_>>(),
                "csv": analytics::propensity_csv(&rows).map_err(bad)?,
                "svg": analytics::propensity_svg(&rows),
            })))
        }
        "curves" => {
            let records: Vec<CurveRecord> = serde_json::from_value(body.get("records").cloned().unwrap_or(Value::Null))
                .map_err(|e| ApiError::bad_request(format!("records: {}", e)))?;
            let means = analytics::flop_curve_means(&records, n_points(&body)).map_err(bad)?;
            Ok(Json(json!({
                "csv": analytics::curves_csv(&means).map_err(bad)?,
                "svg": analytics::curves_svg(&means),
                "means": means,
            })))
        }
        "arcs" => {
            let data: ArcDataset =
                serde_json::from_value(body.clone()).map_err(|e| ApiError::bad_request(format!("arcs: {}", e)))?;
            let means = data.flop_means(n_points(&body)).map_err(bad)?;
            Ok(Json(json!({
                "csv": analytics::curves_csv(&means).map_err(bad)?,
                "svg": analytics::curves_svg(&means),
                "means": means,
            })))
        }
        other => Err(ApiError::not_found(format!("unknown report {:?}", other))),
    }
}

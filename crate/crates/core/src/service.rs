//! HTTP service: disambiguation, sense browsing and neighbour queries over
//! one bundle (embeddings + inventory) per language.
//!
//! Every response body is JSON; failures carry `{"error": message}`.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::disambig::{SenseModel, TokenAnalysis, Window};
use crate::inventory::{InventoryError, SenseCluster, SenseInventory};
use crate::vectorstore::{EmbeddingMatrix, VectorError, DEFAULT_VOCAB_LIMIT};

pub const DEFAULT_MAX_TEXT_LEN: usize = 10_000;
pub const DEFAULT_NEIGHBORS: usize = 50;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot read config {path}: {source}")]
    ConfigIo {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {reason}")]
    Config { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Embeddings { path: PathBuf, source: VectorError },
    #[error("{path}: {source}")]
    Inventory {
        path: PathBuf,
        source: InventoryError,
    },
    #[error("bundle {lang}: {reason}")]
    Mismatch { lang: String, reason: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

fn default_host() -> String {
    "127.0.0.1".into()
}
fn default_port() -> u16 {
    8080
}
fn default_max_text_len() -> usize {
    DEFAULT_MAX_TEXT_LEN
}
fn default_vocab_limit() -> usize {
    DEFAULT_VOCAB_LIMIT
}
fn default_cors() -> Vec<String> {
    vec!["*".into()]
}

/// Service configuration, read from a TOML file.
///
/// ```toml
/// port = 8080
/// max_text_len = 10000
///
/// [[bundles]]
/// lang = "en"
/// embeddings_path = "cc.en.300.vec"
/// inventory_path = "en.inventory.tsv"
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_host")]
    pub host: String,
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default = "default_max_text_len")]
    pub max_text_len: usize,
    #[serde(default = "default_vocab_limit")]
    pub vocab_limit: usize,
    /// Allowed UI origins; `"*"` allows any.
    #[serde(default = "default_cors")]
    pub cors_origins: Vec<String>,
    #[serde(default)]
    pub bundles: Vec<BundleConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleConfig {
    pub lang: String,
    pub embeddings_path: PathBuf,
    pub inventory_path: PathBuf,
}

impl ServiceConfig {
    /// Reads the config; relative bundle paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::ConfigIo {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: Self = toml::from_str(&text).map_err(|e| ServiceError::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for b in &mut config.bundles {
            b.embeddings_path = base.join(&b.embeddings_path);
            b.inventory_path = base.join(&b.inventory_path);
        }
        Ok(config)
    }
}

/// Embeddings and inventory of one language.
#[derive(Debug)]
pub struct LanguageBundle {
    pub lang: String,
    pub matrix: EmbeddingMatrix,
    pub inventory: SenseInventory,
}

impl LanguageBundle {
    pub fn new(
        lang: impl Into<String>,
        matrix: EmbeddingMatrix,
        inventory: SenseInventory,
    ) -> Result<Self, ServiceError> {
        let lang = lang.into();
        if inventory.header.language != lang {
            return Err(ServiceError::Mismatch {
                reason: format!("inventory language is {:?}", inventory.header.language),
                lang,
            });
        }
        Ok(Self {
            lang,
            matrix,
            inventory,
        })
    }

    /// Loads both files and checks that the inventory names this embedding file.
    pub fn load(config: &BundleConfig, vocab_limit: usize) -> Result<Self, ServiceError> {
        let inventory = SenseInventory::load(&config.inventory_path).map_err(|source| {
            ServiceError::Inventory {
                path: config.inventory_path.clone(),
                source,
            }
        })?;
        let file_name = source_id(&config.embeddings_path);
        if inventory.header.source != file_name {
            return Err(ServiceError::Mismatch {
                lang: config.lang.clone(),
                reason: format!(
                    "inventory was induced from {:?}, not {:?}",
                    inventory.header.source, file_name
                ),
            });
        }
        let matrix =
            EmbeddingMatrix::load(&config.embeddings_path, vocab_limit).map_err(|source| {
                ServiceError::Embeddings {
                    path: config.embeddings_path.clone(),
                    source,
                }
            })?;
        Self::new(config.lang.clone(), matrix, inventory)
    }

    pub fn model(&self) -> SenseModel<'_> {
        SenseModel::new(&self.matrix, &self.inventory)
    }
}

/// Identifier recorded as an inventory's provenance: the file name.
pub fn source_id(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub type Bundles = BTreeMap<String, LanguageBundle>;

/// Shared handler state. Bundles are `None` until loading finishes.
#[derive(Clone)]
pub struct AppState {
    bundles: Arc<RwLock<Option<Arc<Bundles>>>>,
    max_text_len: usize,
}

impl AppState {
    pub fn new(max_text_len: usize) -> Self {
        Self {
            bundles: Arc::new(RwLock::new(None)),
            max_text_len,
        }
    }

    pub fn with_bundles(bundles: Bundles, max_text_len: usize) -> Self {
        let state = Self::new(max_text_len);
        state.install(bundles);
        state
    }

    /// Swaps in a new set of bundles; in-flight requests keep the old set.
    pub fn install(&self, bundles: Bundles) {
        *self.bundles.write().expect("bundle lock poisoned") = Some(Arc::new(bundles));
    }

    fn current(&self) -> Result<Arc<Bundles>, ApiError> {
        self.bundles
            .read()
            .expect("bundle lock poisoned")
            .clone()
            .ok_or_else(|| {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "bundles are still loading")
            })
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(serde_json::json!({ "error": self.message })),
        )
            .into_response()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseSummary {
    pub id: usize,
    pub keyword: String,
    pub score: f64,
    pub margin: f64,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenBody {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub ambiguous: bool,
    pub n_senses: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sense: Option<SenseSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisambiguateBody {
    pub lang: String,
    pub tokens: Vec<TokenBody>,
}

/// The `/disambiguate` response for an analysed text.
pub fn disambiguate_body(lang: &str, analyses: &[TokenAnalysis]) -> DisambiguateBody {
    DisambiguateBody {
        lang: lang.to_string(),
        tokens: analyses
            .iter()
            .map(|a| TokenBody {
                surface: a.token.surface.clone(),
                start: a.token.char_start,
                end: a.token.char_end,
                ambiguous: a.ambiguous(),
                n_senses: a.n_senses,
                sense: a.result.as_ref().map(|r| SenseSummary {
                    id: r.sense_id,
                    keyword: r.keyword.clone(),
                    score: r.score,
                    margin: r.margin,
                    low_confidence: r.low_confidence,
                }),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberBody {
    pub word: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseBody {
    pub sense_id: usize,
    pub keyword: String,
    pub members: Vec<MemberBody>,
}

pub fn senses_body(senses: &[SenseCluster]) -> Vec<SenseBody> {
    senses
        .iter()
        .map(|s| SenseBody {
            sense_id: s.sense_id,
            keyword: s.keyword.clone(),
            members: s
                .members
                .iter()
                .map(|m| MemberBody {
                    word: m.word.clone(),
                    weight: m.weight,
                })
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborBody {
    pub word: String,
    pub score: f64,
}

/// Top-`k` neighbours of a word, excluding the word itself.
pub fn neighbors_body(
    matrix: &EmbeddingMatrix,
    word: &str,
    k: usize,
) -> Result<Vec<NeighborBody>, VectorError> {
    let id = matrix.lookup(word)?;
    Ok(matrix
        .neighbors(id, k)?
        .into_iter()
        .map(|n| NeighborBody {
            word: matrix.word(n.word_id).to_string(),
            score: n.score,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsBody {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub lambda: f64,
    pub vocab: usize,
    pub seed: u64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageBody {
    pub lang: String,
    pub n_words: usize,
    pub params: ParamsBody,
}

#[derive(Debug, Deserialize)]
struct DisambiguateRequest {
    text: String,
    lang: String,
    #[serde(default)]
    window: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct NeighborQuery {
    k: Option<usize>,
}

async fn health(State(state): State<AppState>) -> Result<Json<serde_json::Value>, ApiError> {
    state.current()?;
    Ok(Json(serde_json::json!({ "status": "ok" })))
}

async fn languages(State(state): State<AppState>) -> Result<Json<Vec<LanguageBody>>, ApiError> {
    let bundles = state.current()?;
    Ok(Json(
        bundles
            .values()
            .map(|b| {
                let h = &b.inventory.header;
                LanguageBody {
                    lang: b.lang.clone(),
                    n_words: b.inventory.len(),
                    params: ParamsBody {
                        n: h.n,
                        k: h.k,
                        lambda: h.lambda,
                        vocab: h.vocab_limit,
                        seed: h.seed,
                        source: h.source.clone(),
                    },
                }
            })
            .collect(),
    ))
}

fn bundle<'a>(bundles: &'a Bundles, lang: &str) -> Result<&'a LanguageBundle, ApiError> {
    bundles
        .get(lang)
        .ok_or_else(|| ApiError::not_found(format!("language {lang:?} is not loaded")))
}

async fn disambiguate(
    State(state): State<AppState>,
    request: Result<Json<DisambiguateRequest>, JsonRejection>,
) -> Result<Json<DisambiguateBody>, ApiError> {
    let Json(request) =
        request.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.body_text()))?;
    let bundles = state.current()?;
    let bundle = bundle(&bundles, &request.lang)?;
    let length = request.text.chars().count();
    if length > state.max_text_len {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            format!(
                "text has {length} characters, limit is {}",
                state.max_text_len
            ),
        ));
    }
    let window = request.window.map_or(Window::Sentence, Window::Tokens);
    let analyses = bundle
        .model()
        .disambiguate_text(&request.text, window)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(disambiguate_body(&bundle.lang, &analyses)))
}

async fn senses(
    State(state): State<AppState>,
    UrlPath((lang, word)): UrlPath<(String, String)>,
) -> Result<Json<Vec<SenseBody>>, ApiError> {
    let bundles = state.current()?;
    let bundle = bundle(&bundles, &lang)?;
    let (_, senses) = bundle
        .model()
        .entry(&word)
        .ok_or_else(|| ApiError::not_found(format!("no senses for {word:?}")))?;
    Ok(Json(senses_body(senses)))
}

async fn neighbors(
    State(state): State<AppState>,
    UrlPath((lang, word)): UrlPath<(String, String)>,
    Query(query): Query<NeighborQuery>,
) -> Result<Json<Vec<NeighborBody>>, ApiError> {
    let bundles = state.current()?;
    let bundle = bundle(&bundles, &lang)?;
    let k = query.k.unwrap_or(DEFAULT_NEIGHBORS);
    match neighbors_body(&bundle.matrix, &word, k) {
        Ok(body) => Ok(Json(body)),
        Err(e @ VectorError::OutOfVocabulary(_)) => Err(ApiError::not_found(e.to_string())),
        Err(e) => Err(ApiError::new(StatusCode::BAD_REQUEST, e.to_string())),
    }
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such endpoint")
}

fn cors(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    if origins.iter().any(|o| o == "*") {
        layer.allow_origin(Any)
    } else {
        let parsed: Vec<HeaderValue> = origins.iter().filter_map(|o| o.parse().ok()).collect();
        layer.allow_origin(AllowOrigin::list(parsed))
    }
}

pub fn router(state: AppState, cors_origins: &[String]) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/languages", get(languages))
        .route("/disambiguate", post(disambiguate))
        .route("/senses/{lang}/{word}", get(senses))
        .route("/neighbors/{lang}/{word}", get(neighbors))
        .fallback(fallback)
        .layer(cors(cors_origins))
        .with_state(state)
}

pub fn load_bundles(config: &ServiceConfig) -> Result<Bundles, ServiceError> {
    let mut bundles = Bundles::new();
    for b in &config.bundles {
        log::info!(
            "loading bundle {} from {}",
            b.lang,
            b.embeddings_path.display()
        );
        let bundle = LanguageBundle::load(b, config.vocab_limit)?;
        bundles.insert(b.lang.clone(), bundle);
    }
    Ok(bundles)
}

/// Binds the port, then loads bundles in the background; `/health` answers
/// 503 until they are installed. Runs until the process is interrupted or a
/// bundle fails to load.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::new(config.max_text_len);
    let app = router(state.clone(), &config.cors_origins);
    let addr: SocketAddr = format!("{}:{}", config.host, config.port).parse().map_err(
        |e: std::net::AddrParseError| ServiceError::Config {
            path: PathBuf::new(),
            reason: e.to_string(),
        },
    )?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);

    let server = tokio::spawn(async move { axum::serve(listener, app).await });
    let loaded = tokio::task::spawn_blocking(move || load_bundles(&config))
        .await
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    match loaded {
        Ok(bundles) => {
            log::info!("{} bundle(s) ready", bundles.len());
            state.install(bundles);
        }
        Err(e) => {
            server.abort();
            return Err(e);
        }
    }
    server
        .await
        .map_err(|e| std::io::Error::other(e.to_string()))??;
    Ok(())
}

//! HTTP routes.
//!
//! | method | path | auth |
//! |---|---|---|
//! | POST | `/tx` | signed transaction body |
//! | GET | `/tx/{hash}` | |
//! | GET | `/chain/head` | |
//! | GET | `/chain/blocks/{height}` | |
//! | GET | `/accounts/{id}` | |
//! | GET | `/patients/{id}/records/{n}` | read headers |
//! | GET | `/patients/{id}/records/count` | read headers |
//! | GET | `/doctors/{id}` | |
//! | POST | `/documents` | |
//! | GET | `/documents/{hash}` | |
//!
//! Reads answer from the last committed snapshot and carry its height in
//! the `x-ledger-height` header and a `height` body field; the state root
//! is in `x-state-root`.

use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use medledger_core::contract::{ContractError, ContractState, Output, Role};
use medledger_core::ledger::{Transaction, TxError};
use medledger_core::store::StoreError;
use medledger_core::{AccountId, ContentHash, Hash32};
use serde_json::{json, Value};

use crate::auth::ReadAuth;
use crate::node::{LiveNode, Snapshot, TxStatus};

pub const HEIGHT_HEADER: &str = "x-ledger-height";
pub const STATE_ROOT_HEADER: &str = "x-state-root";

type Shared = Arc<LiveNode>;

pub fn router(node: Shared) -> Router {
    let body_limit = node.store().limit() + 1;
    Router::new()
        .route("/tx", post(submit_tx))
        .route("/tx/:hash", get(tx_status))
        .route("/chain/head", get(chain_head))
        .route("/chain/blocks/:height", get(chain_block))
        .route("/accounts/:id", get(account))
        .route("/patients/:id/records/count", get(record_count))
        .route("/patients/:id/records/:n", get(patient_record))
        .route("/doctors/:id", get(doctor))
        .route("/documents", post(put_document))
        .route("/documents/:hash", get(get_document))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(node)
}

/// Produces a block every interval while transactions are pending.
pub fn spawn_block_producer(node: Shared) -> tokio::task::JoinHandle<()> {
    let interval = Duration::from_secs(node.block_interval_secs());
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(interval);
        loop {
            tick.tick().await;
            if let Err(e) = node.produce_block() {
                tracing::error!(error = %e, "block production failed");
            }
        }
    })
}

pub async fn serve(node: Shared, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    spawn_block_producer(node.clone());
    axum::serve(listener, router(node)).await
}

struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "MALFORMED", message)
    }

    fn not_found(what: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "NOT_FOUND",
            format!("{what} not found"),
        )
    }

    fn contract(e: ContractError) -> Self {
        Self::new(StatusCode::FORBIDDEN, e.code(), e.message())
    }

    fn tx(e: TxError) -> Self {
        let status = match e {
            TxError::Malformed(_) | TxError::UnknownOperation(_) | TxError::WrongChain { .. } => {
                StatusCode::BAD_REQUEST
            }
            TxError::BadSignature => StatusCode::UNAUTHORIZED,
            TxError::BadNonce { .. } | TxError::Duplicate => StatusCode::CONFLICT,
            TxError::UnknownSender(_) => StatusCode::FORBIDDEN,
        };
        let message = match e {
            TxError::UnknownSender(_) => ContractError::NotRegistered(None).message(),
            ref other => other.to_string(),
        };
        Self::new(status, e.code(), message)
    }

    fn store(e: StoreError) -> Self {
        match e {
            StoreError::BlobTooLarge { .. } => Self::new(
                StatusCode::PAYLOAD_TOO_LARGE,
                "BLOB_TOO_LARGE",
                e.to_string(),
            ),
            StoreError::NotFound(_) => Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", e.to_string()),
            StoreError::Integrity { .. } => Self::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "INTEGRITY",
                e.to_string(),
            ),
            StoreError::Io(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "IO", e.to_string()),
        }
    }

    fn with_snapshot(self, s: &Snapshot) -> Response {
        let body = json!({"error": self.code, "message": self.message, "height": s.height});
        with_headers(s, (self.status, Json(body)).into_response())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({"error": self.code, "message": self.message})),
        )
            .into_response()
    }
}

fn with_headers(s: &Snapshot, mut response: Response) -> Response {
    let h = response.headers_mut();
    h.insert(HEIGHT_HEADER, HeaderValue::from(s.height));
    h.insert(
        STATE_ROOT_HEADER,
        HeaderValue::from_str(&s.state_root.to_hex()).expect("hex is a valid header"),
    );
    response
}

fn ok(s: &Snapshot, mut body: Value) -> Response {
    body["height"] = json!(s.height);
    with_headers(s, Json(body).into_response())
}

fn reply(s: &Snapshot, result: Result<Value, ApiError>) -> Response {
    match result {
        Ok(body) => ok(s, body),
        Err(e) => e.with_snapshot(s),
    }
}

fn parse_account(text: &str) -> Result<AccountId, ApiError> {
    text.parse()
        .map_err(|_| ApiError::bad_request(format!("bad account id {text:?}")))
}

fn authenticate(node: &LiveNode, headers: &HeaderMap, uri: &Uri) -> Result<AccountId, ApiError> {
    let unauthorized = |e: crate::auth::AuthError| {
        ApiError::new(StatusCode::UNAUTHORIZED, "UNAUTHORIZED", e.to_string())
    };
    let auth = ReadAuth::from_headers(|name| headers.get(name).and_then(|v| v.to_str().ok()))
        .map_err(unauthorized)?;
    node.authenticate(&auth, "GET", uri.path())
        .map_err(unauthorized)
}

async fn submit_tx(State(node): State<Shared>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let tx = Transaction::from_json(&body).map_err(ApiError::tx)?;
    let hash = node.submit(tx).map_err(ApiError::tx)?;
    Ok(Json(json!({"tx_hash": hash, "status": "pending"})))
}

async fn tx_status(
    State(node): State<Shared>,
    Path(hash): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let hash = Hash32::from_hex(&hash).map_err(|e| ApiError::bad_request(e.to_string()))?;
    match node.tx_status(&hash) {
        TxStatus::Pending => Ok(Json(json!({"tx_hash": hash, "status": "pending"}))),
        TxStatus::Committed { height, receipt } => Ok(Json(json!({
            "tx_hash": hash,
            "status": "committed",
            "height": height,
            "receipt": receipt,
        }))),
        TxStatus::Unknown => Err(ApiError::not_found("transaction")),
    }
}

async fn chain_head(State(node): State<Shared>) -> Response {
    let s = node.snapshot();
    ok(
        &s,
        json!({
            "chain_id": s.state.chain_id(),
            "hash": s.head_hash,
            "state_root": s.state_root,
            "timestamp": s.timestamp,
            "proposer": s.proposer,
        }),
    )
}

async fn chain_block(
    State(node): State<Shared>,
    Path(height): Path<u64>,
) -> Result<Json<Value>, ApiError> {
    let block = node
        .block(height)
        .ok_or_else(|| ApiError::not_found("block"))?;
    Ok(Json(json!({"hash": block.hash(), "block": block})))
}

async fn account(State(node): State<Shared>, Path(id): Path<String>) -> Response {
    let s = node.snapshot();
    let result = parse_account(&id).map(|id| {
        let c = &s.state.contract;
        json!({
            "account": id,
            "role": c.role(&id),
            "nonce": s.state.nonce(&id),
            "balance": c.balance(&id).to_string(),
        })
    });
    reply(&s, result)
}

fn output(result: Result<Output, ContractError>) -> Result<Value, ApiError> {
    result
        .map(|o| json!({"result": o}))
        .map_err(ApiError::contract)
}

/// Chooses the read a caller's role entitles it to for `patient`'s record
/// `n`.
fn read_record(
    c: &ContractState,
    caller: AccountId,
    patient: AccountId,
    n: u64,
) -> Result<Value, ApiError> {
    use medledger_core::contract::Call;
    match c.role(&caller) {
        _ if caller == patient => output(c.query(&caller, &Call::GetRecord { record_id: n })),
        Some(Role::Doctor) => output(c.query(
            &caller,
            &Call::DoctorGetRecord {
                patient,
                record_id: n,
            },
        )),
        Some(Role::Pharmacy) => {
            let grant = c.grant(&patient, &caller);
            if grant.allowed && grant.record_id != n {
                return Err(ApiError::contract(ContractError::NotAllowed));
            }
            output(c.query(&caller, &Call::PharmacyGetRecord { patient }))
        }
        Some(Role::Insurer) => {
            let link = c.link(&patient, &caller);
            if link.flag_raised && link.claimed_record_id != n {
                return Err(ApiError::contract(ContractError::RequestNotRaised));
            }
            output(c.query(&caller, &Call::InsurerGetRecord { patient }))
        }
        Some(Role::Patient) => Err(ApiError::contract(ContractError::NotAllowed)),
        _ => output(c.query(&caller, &Call::GetRecord { record_id: n })),
    }
}

async fn patient_record(
    State(node): State<Shared>,
    Path((id, n)): Path<(String, String)>,
    headers: HeaderMap,
    uri: Uri,
) -> Response {
    let s = node.snapshot();
    let result = (|| {
        let patient = parse_account(&id)?;
        let n: u64 = n
            .parse()
            .map_err(|_| ApiError::bad_request(format!("bad record id {n:?}")))?;
        let caller = authenticate(&node, &headers, &uri)?;
        read_record(&s.state.contract, caller, patient, n)
    })();
    reply(&s, result)
}

async fn record_count(
    State(node): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    uri: Uri,
) -> Response {
    use medledger_core::contract::Call;
    let s = node.snapshot();
    let result = (|| {
        let patient = parse_account(&id)?;
        let caller = authenticate(&node, &headers, &uri)?;
        let c = &s.state.contract;
        match c.role(&caller) {
            _ if caller == patient => output(c.query(&caller, &Call::GetRecordCount)),
            Some(Role::Doctor) => output(c.query(&caller, &Call::DoctorGetRecordCount { patient })),
            Some(Role::Patient) => Err(ApiError::contract(ContractError::NotAllowed)),
            _ => output(c.query(&caller, &Call::GetRecordCount)),
        }
    })();
    reply(&s, result)
}

async fn doctor(State(node): State<Shared>, Path(id): Path<String>) -> Response {
    use medledger_core::contract::Call;
    let s = node.snapshot();
    let result = parse_account(&id).and_then(|doctor| {
        output(
            s.state
                .contract
                .query(&AccountId::ZERO, &Call::GetDoctor { doctor }),
        )
    });
    reply(&s, result)
}

async fn put_document(State(node): State<Shared>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let size = body.len();
    let hash = tokio::task::spawn_blocking(move || node.store().put(&body))
        .await
        .expect("store task panicked")
        .map_err(ApiError::store)?;
    Ok(Json(json!({"hash": hash, "size": size})))
}

async fn get_document(
    State(node): State<Shared>,
    Path(hash): Path<String>,
) -> Result<Response, ApiError> {
    let hash: ContentHash = hash
        .parse()
        .map_err(|_| ApiError::bad_request(format!("bad content hash {hash:?}")))?;
    let bytes = tokio::task::spawn_blocking(move || node.store().get(&hash))
        .await
        .expect("store task panicked")
        .map_err(ApiError::store)?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

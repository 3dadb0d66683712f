use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use medledger_core::contract::Call;
use medledger_core::ledger::{GenesisConfig, Transaction};
use medledger_core::store::BlobStore;
use medledger_core::{ContentHash, Keypair};
use medledger_gateway::api::{HEIGHT_HEADER, STATE_ROOT_HEADER};
use medledger_gateway::auth::sign_read;
use medledger_gateway::{Clock, LiveNode, NodeConfig};
use serde_json::Value;
use tower::ServiceExt;

const CHAIN: &str = "gw-test";

struct Fixture {
    _dir: tempfile::TempDir,
    node: Arc<LiveNode>,
    app: Router,
    admin: Keypair,
    nonces: std::collections::HashMap<String, u64>,
    read_nonce: u64,
}

fn key(name: &str) -> Keypair {
    Keypair::from_seed(name)
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let admin = key("admin");
        let authority = key("authority");
        let genesis = GenesisConfig {
            chain_id: CHAIN.into(),
            genesis_time: 1_700_000_000,
            block_interval_secs: 2,
            authorities: vec![authority.public()],
            administrators: vec![admin.account()],
            balances: [(admin.account(), 10_000), (key("insurer").account(), 5_000)]
                .into_iter()
                .collect(),
            permissive_guards: false,
        };
        let node = Arc::new(
            LiveNode::open(NodeConfig {
                genesis,
                keys: vec![authority],
                chain_file: Some(dir.path().join("chain.ndjson")),
                store: BlobStore::open_with_limit(dir.path().join("store"), 1024).unwrap(),
                clock: Clock::Earliest,
                max_block_txs: 256,
            })
            .unwrap(),
        );
        let app = medledger_gateway::router(node.clone());
        Fixture {
            _dir: dir,
            node,
            app,
            admin,
            nonces: Default::default(),
            read_nonce: 0,
        }
    }

    fn sign(&mut self, signer: &Keypair, value: u128, call: Call) -> Transaction {
        let n = self.nonces.entry(signer.account().to_string()).or_default();
        let tx = Transaction::sign(CHAIN, signer, *n, value, call);
        *n += 1;
        tx
    }

    async fn request(&self, req: Request<Body>) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let body = to_bytes(resp.into_body(), usize::MAX)
            .await
            .unwrap()
            .to_vec();
        (status, headers, body)
    }

    async fn post(&self, path: &str, body: Vec<u8>) -> (StatusCode, Value) {
        let req = Request::post(path).body(Body::from(body)).unwrap();
        let (status, _, body) = self.request(req).await;
        (status, serde_json::from_slice(&body).unwrap_or(Value::Null))
    }

    async fn get(&self, path: &str) -> (StatusCode, axum::http::HeaderMap, Value) {
        let (s, h, b) = self
            .request(Request::get(path).body(Body::empty()).unwrap())
            .await;
        (s, h, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    async fn get_as(
        &mut self,
        reader: &Keypair,
        path: &str,
    ) -> (StatusCode, axum::http::HeaderMap, Value) {
        self.read_nonce += 1;
        let mut req = Request::get(path);
        for (k, v) in sign_read(reader, CHAIN, "GET", path, self.read_nonce) {
            req = req.header(k, v);
        }
        let (s, h, b) = self.request(req.body(Body::empty()).unwrap()).await;
        (s, h, serde_json::from_slice(&b).unwrap())
    }

    async fn send(&mut self, signer: &Keypair, value: u128, call: Call) -> Value {
        let tx = self.sign(signer, value, call);
        let (status, body) = self.post("/tx", serde_json::to_vec(&tx).unwrap()).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        body
    }

    fn commit(&self) {
        self.node.produce_block().unwrap();
    }

    /// All five roles registered, one record with a prescription.
    async fn populated() -> Self {
        let mut f = Fixture::new();
        let admin = f.admin.clone();
        let (p, d, h, i, ph) = (
            key("patient"),
            key("doctor"),
            key("hospital"),
            key("insurer"),
            key("pharmacy"),
        );
        for call in [
            Call::RegisterHospital {
                hospital: h.account(),
            },
            Call::RegisterPatient {
                patient: p.account(),
                age: 30,
                gender: "F".into(),
            },
            Call::RegisterDoctor {
                doctor: d.account(),
                name: "Ada".into(),
                hospital: h.account(),
                specialization: "gp".into(),
            },
            Call::RegisterInsurer {
                insurer: i.account(),
            },
            Call::RegisterPharmacy {
                pharmacy: ph.account(),
            },
        ] {
            f.send(&admin, 0, call).await;
        }
        f.commit();
        f.send(
            &h,
            0,
            Call::AddRecord {
                patient: p.account(),
                doctor: d.account(),
                admission: 1,
                discharge: 2,
            },
        )
        .await;
        f.commit();
        f.send(
            &d,
            0,
            Call::AddPrescription {
                patient: p.account(),
                prescription: ContentHash::of(b"rx"),
            },
        )
        .await;
        f.commit();
        f
    }
}

fn record_path(patient: &Keypair, n: &str) -> String {
    format!("/patients/{}/records/{n}", patient.account())
}

#[tokio::test]
async fn submit_then_commit_receipt() {
    let mut f = Fixture::new();
    let admin = f.admin.clone();
    let body = f
        .send(
            &admin,
            0,
            Call::RegisterHospital {
                hospital: key("h").account(),
            },
        )
        .await;
    assert_eq!(body["status"], "pending");
    let hash = body["tx_hash"].as_str().unwrap().to_string();
    let (_, _, pending) = f.get(&format!("/tx/{hash}")).await;
    assert_eq!(pending["status"], "pending");
    f.commit();
    let (status, _, done) = f.get(&format!("/tx/{hash}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(done["status"], "committed");
    assert_eq!(done["height"], 1);
    assert_eq!(done["receipt"]["ok"], true);
    let (_, _, head) = f.get("/chain/head").await;
    assert_eq!(head["height"], 1);
    let (status, _, block) = f.get("/chain/blocks/1").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(block["block"]["transactions"][0]["nonce"], 0);
    assert_eq!(f.get("/chain/blocks/9").await.0, StatusCode::NOT_FOUND);
    assert_eq!(
        f.get(&format!("/tx/{}", "ab".repeat(32))).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn submit_errors() {
    let mut f = Fixture::new();
    let admin = f.admin.clone();
    assert_eq!(
        f.post("/tx", b"{garbage".to_vec()).await.0,
        StatusCode::BAD_REQUEST
    );

    let mut tx = f.sign(
        &admin,
        0,
        Call::RegisterHospital {
            hospital: key("h").account(),
        },
    );
    tx.nonce += 1;
    assert_eq!(
        f.post("/tx", serde_json::to_vec(&tx).unwrap()).await.0,
        StatusCode::UNAUTHORIZED
    );

    let stale = Transaction::sign(CHAIN, &admin, 5, 0, Call::GetRecordCount);
    let (status, body) = f.post("/tx", serde_json::to_vec(&stale).unwrap()).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "BAD_NONCE");

    let stranger = Transaction::sign(CHAIN, &key("stranger"), 0, 0, Call::GetRecordCount);
    let (status, body) = f.post("/tx", serde_json::to_vec(&stranger).unwrap()).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["message"], "Not Registered");
}

#[tokio::test]
async fn patient_reads_own_record_unrelated_pharmacy_is_refused() {
    let mut f = Fixture::populated().await;
    let (p, ph, d) = (key("patient"), key("pharmacy"), key("doctor"));
    let path = record_path(&p, "1");
    let (status, headers, body) = f.get_as(&p, &path).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["result"]["kind"], "record");
    assert_eq!(
        body["result"]["prescription"],
        ContentHash::of(b"rx").to_string()
    );
    assert_eq!(body["result"]["bill"], "");
    assert_eq!(headers[HEIGHT_HEADER], "3");
    assert_eq!(body["height"], 3);

    let (status, _, body) = f.get_as(&ph, &path).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["message"], "Not Allowed");

    let (status, _, body) = f.get_as(&d, &path).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["result"]["kind"], "prescription");

    let (status, _, body) = f.get_as(&p, &record_path(&p, "2")).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["message"], "Not Valid");

    let (status, _, body) = f.get_as(&key("hospital"), &path).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["message"], "Not Registered");
}

#[tokio::test]
async fn pharmacy_window_over_http() {
    let mut f = Fixture::populated().await;
    let (p, ph) = (key("patient"), key("pharmacy"));
    f.send(
        &p,
        0,
        Call::AllowPharmacy {
            pharmacy: ph.account(),
            record_id: 1,
        },
    )
    .await;
    f.commit();
    let (status, _, body) = f.get_as(&ph, &record_path(&p, "1")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        body["result"]["prescription"],
        ContentHash::of(b"rx").to_string()
    );
    f.send(
        &ph,
        0,
        Call::SetBill {
            patient: p.account(),
            bill: ContentHash::of(b"bill"),
        },
    )
    .await;
    f.commit();
    let (status, _, body) = f.get_as(&ph, &record_path(&p, "1")).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["message"], "Not Allowed");
}

#[tokio::test]
async fn insurer_sees_claim_only() {
    let mut f = Fixture::populated().await;
    let (p, i) = (key("patient"), key("insurer"));
    let (status, _, body) = f.get_as(&i, &record_path(&p, "1")).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["message"], "Request Not Raised");
    f.send(
        &i,
        0,
        Call::AddCustomer {
            patient: p.account(),
        },
    )
    .await;
    f.commit();
    f.send(
        &p,
        0,
        Call::AllowInsurer {
            insurer: i.account(),
            record_id: 1,
        },
    )
    .await;
    f.commit();
    let (status, _, body) = f.get_as(&i, &record_path(&p, "1")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["result"]["kind"], "claim");
    f.send(
        &i,
        50,
        Call::InsurancePayment {
            patient: p.account(),
        },
    )
    .await;
    f.commit();
    let (status, _, _) = f.get_as(&i, &record_path(&p, "1")).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (_, _, acct) = f.get(&format!("/accounts/{}", p.account())).await;
    assert_eq!(acct["balance"], "50");
    assert_eq!(acct["role"], "patient");
}

#[tokio::test]
async fn read_auth_is_required_and_fresh() {
    let f = Fixture::populated().await;
    let p = key("patient");
    let path = record_path(&p, "1");
    assert_eq!(f.get(&path).await.0, StatusCode::UNAUTHORIZED);

    let mut req = Request::get(&path);
    for (k, v) in sign_read(&p, CHAIN, "GET", &path, 100) {
        req = req.header(k, v);
    }
    let req = req.body(Body::empty()).unwrap();
    let (parts, body) = req.into_parts();
    let replay = Request::from_parts(parts.clone(), Body::empty());
    assert_eq!(
        f.request(Request::from_parts(parts, body)).await.0,
        StatusCode::OK
    );
    assert_eq!(f.request(replay).await.0, StatusCode::UNAUTHORIZED);

    let mut req = Request::get(&path);
    for (k, v) in sign_read(&p, CHAIN, "GET", &record_path(&p, "2"), 200) {
        req = req.header(k, v);
    }
    assert_eq!(
        f.request(req.body(Body::empty()).unwrap()).await.0,
        StatusCode::UNAUTHORIZED
    );
}

#[tokio::test]
async fn record_count_and_doctor_profile() {
    let mut f = Fixture::populated().await;
    let (p, d) = (key("patient"), key("doctor"));
    let path = format!("/patients/{}/records/count", p.account());
    let (status, _, body) = f.get_as(&p, &path).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["result"]["count"], 1);
    let (_, _, body) = f.get_as(&d, &path).await;
    assert_eq!(body["result"]["count"], 1);
    let (status, _, body) = f.get_as(&key("pharmacy"), &path).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["message"], "Not Registered");

    let (status, _, body) = f.get(&format!("/doctors/{}", d.account())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["result"]["name"], "Ada");
    let (status, _, body) = f
        .get(&format!("/doctors/{}", key("nobody").account()))
        .await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["message"], "Not Registered");
}

#[tokio::test]
async fn state_root_header_changes_after_write() {
    let mut f = Fixture::populated().await;
    let (_, before, _) = f.get("/chain/head").await;
    let admin = f.admin.clone();
    f.send(
        &admin,
        0,
        Call::RegisterHospital {
            hospital: key("h2").account(),
        },
    )
    .await;
    f.commit();
    let (_, after, _) = f.get("/chain/head").await;
    assert_ne!(before[STATE_ROOT_HEADER], after[STATE_ROOT_HEADER]);
    assert_ne!(before[HEIGHT_HEADER], after[HEIGHT_HEADER]);
}

#[tokio::test]
async fn documents_round_trip() {
    let f = Fixture::new();
    let (status, body) = f.post("/documents", Vec::new()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        body["hash"],
        "sha256:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
    let (_, again) = f.post("/documents", b"hello".to_vec()).await;
    let hash = again["hash"].as_str().unwrap().to_string();
    let (status, _, bytes) = f
        .request(
            Request::get(format!("/documents/{hash}"))
                .body(Body::empty())
                .unwrap(),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bytes, b"hello");
    assert_eq!(
        f.post("/documents", vec![0; 1025]).await.0,
        StatusCode::PAYLOAD_TOO_LARGE
    );
    assert_eq!(f.post("/documents", vec![0; 1024]).await.0, StatusCode::OK);
    let missing = ContentHash::of(b"missing");
    assert_eq!(
        f.get(&format!("/documents/{missing}")).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(f.get("/documents/nothex").await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn restart_replays_chain_file() {
    let f = Fixture::populated().await;
    let head = f.node.snapshot();
    let dir = f._dir.path().to_path_buf();
    let genesis = {
        let g = f.node.block(0).unwrap();
        assert_eq!(g.height(), 0);
        g
    };
    drop(genesis);
    let reopened = LiveNode::open(NodeConfig {
        genesis: GenesisConfig {
            chain_id: CHAIN.into(),
            genesis_time: 1_700_000_000,
            block_interval_secs: 2,
            authorities: vec![key("authority").public()],
            administrators: vec![key("admin").account()],
            balances: [
                (key("admin").account(), 10_000),
                (key("insurer").account(), 5_000),
            ]
            .into_iter()
            .collect(),
            permissive_guards: false,
        },
        keys: vec![key("authority")],
        chain_file: Some(dir.join("chain.ndjson")),
        store: BlobStore::open(dir.join("store2")).unwrap(),
        clock: Clock::Earliest,
        max_block_txs: 256,
    })
    .unwrap();
    assert_eq!(reopened.snapshot().head_hash, head.head_hash);
    assert_eq!(reopened.snapshot().state_root, head.state_root);
}

//! Command bodies, separate from argument parsing so tests can call them.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use medledger_core::contract::Call;
use medledger_core::ledger::{
    verify_chain_file, ChainFault, GenesisConfig, Receipt, Transaction, TxError,
};
use medledger_core::store::BlobStore;
use medledger_core::{Hash32, Keypair};
use medledger_gateway::{Clock, LiveNode, NodeConfig, TxStatus};
use medledger_sim::{SimConfig, SimReport};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verified {
    Ok {
        height: u64,
        head: Hash32,
        state_root: Hash32,
    },
    Fault(ChainFault),
}

impl Verified {
    pub fn to_json(&self) -> Value {
        match self {
            Verified::Ok {
                height,
                head,
                state_root,
            } => {
                json!({"ok": true, "height": height, "head": head, "state_root": state_root})
            }
            Verified::Fault(f) => {
                json!({"ok": false, "height": f.height, "reason": f.reason.to_string()})
            }
        }
    }
}

pub fn chain_verify(genesis: &GenesisConfig, path: &Path) -> CliResult<Verified> {
    let result = verify_chain_file(genesis, path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(match result {
        Ok(chain) => Verified::Ok {
            height: chain.height(),
            head: chain.tip().hash(),
            state_root: chain.tip().header.state_root,
        },
        Err(fault) => Verified::Fault(fault),
    })
}

pub fn read_sim_config(path: Option<&Path>) -> CliResult<SimConfig> {
    let config = match path {
        Some(p) => serde_json::from_slice(&crate::keys::read(p)?)
            .map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?,
        None => SimConfig::default(),
    };
    Ok(config)
}

pub fn sim_run(config: SimConfig) -> CliResult<SimReport> {
    medledger_sim::run_simulation(config).map_err(|e| CliError::validation(e.to_string()))
}

/// Builds a call from an operation name and its JSON arguments.
pub fn parse_call(op: &str, args: Option<&str>) -> CliResult<Call> {
    let mut json = json!({ "op": op });
    if let Some(args) = args {
        json["args"] =
            serde_json::from_str(args).map_err(|e| CliError::validation(format!("--args: {e}")))?;
    }
    serde_json::from_value(json).map_err(|e| CliError::validation(format!("{op}: {e}")))
}

/// Exit class for a committed receipt.
pub fn receipt_result(receipt: &Receipt) -> CliResult<()> {
    if receipt.ok {
        Ok(())
    } else {
        Err(CliError::guard(receipt.message.clone()))
    }
}

fn tx_error(e: &TxError) -> CliError {
    match e {
        TxError::UnknownSender(_) => CliError::guard("Not Registered"),
        other => CliError::validation(other.to_string()),
    }
}

/// Where `tx send` delivers.
pub enum Target {
    /// A running gateway.
    Remote { url: String, timeout: Duration },
    /// The chain file itself, sealed with a locally held authority key.
    Local {
        genesis: GenesisConfig,
        chain_file: PathBuf,
        store_dir: PathBuf,
        authorities: Vec<Keypair>,
    },
}

pub fn tx_send(
    target: &Target,
    key: &Keypair,
    value: u128,
    call: Call,
    nonce: Option<u64>,
) -> CliResult<(u64, Receipt)> {
    match target {
        Target::Local {
            genesis,
            chain_file,
            store_dir,
            authorities,
        } => {
            let node = open_node(
                genesis.clone(),
                authorities.clone(),
                Some(chain_file.clone()),
                store_dir,
                Clock::Earliest,
                None,
            )?;
            let nonce = nonce.unwrap_or_else(|| node.snapshot().state.nonce(&key.account()));
            let tx = Transaction::sign(&genesis.chain_id, key, nonce, value, call);
            let hash = node.submit(tx).map_err(|e| tx_error(&e))?;
            node.produce_block()
                .map_err(|e| CliError::io(e.to_string()))?;
            match node.tx_status(&hash) {
                TxStatus::Committed { height, receipt } => Ok((height, *receipt)),
                other => unreachable!("sole pending transaction was not sealed: {other:?}"),
            }
        }
        Target::Remote { url, timeout } => remote_send(url, *timeout, key, value, call, nonce),
    }
}

fn http_error(e: reqwest::Error) -> CliError {
    CliError::io(format!("gateway: {e}"))
}

fn remote_send(
    url: &str,
    timeout: Duration,
    key: &Keypair,
    value: u128,
    call: Call,
    nonce: Option<u64>,
) -> CliResult<(u64, Receipt)> {
    let url = url.trim_end_matches('/');
    let client = reqwest::blocking::Client::new();
    let head: Value = client
        .get(format!("{url}/chain/head"))
        .send()
        .map_err(http_error)?
        .json()
        .map_err(http_error)?;
    let chain_id = head["chain_id"]
        .as_str()
        .ok_or_else(|| CliError::io("gateway head carries no chain_id"))?
        .to_string();
    let nonce = match nonce {
        Some(n) => n,
        None => {
            let account: Value = client
                .get(format!("{url}/accounts/{}", key.account()))
                .send()
                .map_err(http_error)?
                .json()
                .map_err(http_error)?;
            account["nonce"].as_u64().unwrap_or(0)
        }
    };
    let tx = Transaction::sign(&chain_id, key, nonce, value, call);
    let resp = client
        .post(format!("{url}/tx"))
        .json(&tx)
        .send()
        .map_err(http_error)?;
    let status = resp.status();
    let body: Value = resp.json().map_err(http_error)?;
    let message = body["message"].as_str().unwrap_or_default().to_string();
    match status.as_u16() {
        200 => {}
        403 => return Err(CliError::guard(message)),
        _ => return Err(CliError::validation(format!("{status}: {message}"))),
    }
    let hash = tx.hash();
    let deadline = Instant::now() + timeout;
    loop {
        let body: Value = client
            .get(format!("{url}/tx/{hash}"))
            .send()
            .map_err(http_error)?
            .json()
            .map_err(http_error)?;
        if body["status"] == "committed" {
            let receipt: Receipt = serde_json::from_value(body["receipt"].clone())
                .map_err(|e| CliError::io(format!("gateway receipt: {e}")))?;
            return Ok((body["height"].as_u64().unwrap_or(0), receipt));
        }
        if Instant::now() >= deadline {
            return Err(CliError::io(format!(
                "transaction {hash} not committed within {timeout:?}"
            )));
        }
        std::thread::sleep(Duration::from_millis(100));
    }
}

pub fn open_node(
    genesis: GenesisConfig,
    keys: Vec<Keypair>,
    chain_file: Option<PathBuf>,
    store_dir: &Path,
    clock: Clock,
    max_blob_bytes: Option<usize>,
) -> CliResult<LiveNode> {
    let store = match max_blob_bytes {
        Some(limit) => BlobStore::open_with_limit(store_dir, limit),
        None => BlobStore::open(store_dir),
    }
    .map_err(|e| CliError::io(format!("{}: {e}", store_dir.display())))?;
    LiveNode::open(NodeConfig {
        genesis,
        keys,
        chain_file,
        store,
        clock,
        max_block_txs: 1024,
    })
    .map_err(|e| match e {
        medledger_gateway::NodeError::Io(e) => CliError::io(e.to_string()),
        other => CliError::validation(other.to_string()),
    })
}

/// Serves the gateway until the process is stopped. `on_bound` receives
/// the listening address.
pub fn node_run(
    node: LiveNode,
    listen: &str,
    on_bound: impl FnOnce(std::net::SocketAddr),
) -> CliResult<()> {
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .map_err(|e| CliError::io(format!("bind {listen}: {e}")))?;
        on_bound(listener.local_addr()?);
        medledger_gateway::serve(Arc::new(node), listener).await?;
        Ok(())
    })
}

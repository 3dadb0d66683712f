//! Scripted multi-actor runs against an in-process chain.
//!
//! A script names actors by alias; each alias gets a key derived from the
//! run seed, so a script, seed and guard mode fully determine the
//! transcript. Every step that contains a write is sealed into its own
//! block. Read operations are answered from the committed state without a
//! transaction.
//!
//! Script:
//!
//! ```json
//! {
//!   "chain_id": "care-cycle",
//!   "administrators": ["admin"],
//!   "balances": {"insurer": 1000},
//!   "steps": [
//!     {"name": "register", "calls": [
//!       {"actor": "admin", "op": "register_hospital", "args": {"hospital": "@clinic"}}
//!     ]},
//!     {"name": "prescribe", "actor": "doctor", "op": "add_prescription",
//!      "args": {"patient": "@alice", "prescription": {"document": "rx"}}},
//!     {"name": "peek", "actor": "pharmacy", "op": "pharmacy_get_record",
//!      "args": {"patient": "@alice"}, "expect": {"error": "Not Allowed"}}
//!   ]
//! }
//! ```
//!
//! In `args`, a string `"@alias"` becomes that actor's account and
//! `{"document": text}` becomes the content hash of `text` (stored in the
//! document store when one is given). `expect` is `"ok"` (the default) or
//! `{"error": message-or-code}`; a step whose outcome differs aborts the
//! run.
//!
//! Transcript:
//!
//! ```json
//! {
//!   "chain_id", "seed", "permissive_guards",
//!   "actors": {alias: account},
//!   "steps": [{"index", "name", "height", "state_root",
//!              "outcome": "ok" | {"error": message, "code": code},
//!              "calls": [{"actor", "op", "ok", "code", "message", "output"?, "tx_hash"?}]}],
//!   "aborted": null | {"step": index, "reason": text},
//!   "head": {"height", "hash", "state_root"}
//! }
//! ```

use std::collections::BTreeMap;

use medledger_core::contract::{Call, ContractState, Output};
use medledger_core::ledger::{Chain, GenesisConfig, Transaction, TxError};
use medledger_core::store::BlobStore;
use medledger_core::{AccountId, ContentHash, Hash32, Keypair};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult, ExitKind};

pub const DEFAULT_GENESIS_TIME: u64 = 1_700_000_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    #[serde(default = "default_chain_id")]
    pub chain_id: String,
    #[serde(default = "default_genesis_time")]
    pub genesis_time: u64,
    #[serde(default = "default_admins")]
    pub administrators: Vec<String>,
    #[serde(default)]
    pub balances: BTreeMap<String, u128>,
    pub steps: Vec<Step>,
}

fn default_chain_id() -> String {
    "scenario".into()
}

fn default_genesis_time() -> u64 {
    DEFAULT_GENESIS_TIME
}

fn default_admins() -> Vec<String> {
    vec!["admin".into()]
}

/// Either a single call written inline or a list under `calls`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub name: String,
    #[serde(default)]
    pub actor: Option<String>,
    #[serde(default)]
    pub op: Option<String>,
    #[serde(default)]
    pub args: Option<Value>,
    #[serde(default)]
    pub value: u128,
    #[serde(default)]
    pub calls: Vec<StepCall>,
    #[serde(default)]
    pub expect: Expect,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepCall {
    pub actor: String,
    pub op: String,
    #[serde(default)]
    pub args: Option<Value>,
    #[serde(default)]
    pub value: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Expect {
    #[default]
    Ok,
    Error {
        error: String,
    },
}

impl<'de> Deserialize<'de> for Expect {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged, deny_unknown_fields)]
        enum Raw {
            Word(String),
            Error { error: String },
        }
        match Raw::deserialize(d)? {
            Raw::Word(w) if w == "ok" => Ok(Expect::Ok),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected \"ok\", got {w:?}"
            ))),
            Raw::Error { error } => Ok(Expect::Error { error }),
        }
    }
}

impl Step {
    fn calls(&self) -> CliResult<Vec<StepCall>> {
        match (&self.op, self.calls.is_empty()) {
            (Some(op), true) => Ok(vec![StepCall {
                actor: self.actor.clone().ok_or_else(|| {
                    CliError::validation(format!("step {:?} has no actor", self.name))
                })?,
                op: op.clone(),
                args: self.args.clone(),
                value: self.value,
            }]),
            (None, false) if self.actor.is_none() && self.args.is_none() => Ok(self.calls.clone()),
            _ => Err(CliError::validation(format!(
                "step {:?} needs either op or calls",
                self.name
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    pub seed: u64,
    pub permissive_guards: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub chain_id: String,
    pub seed: u64,
    pub permissive_guards: bool,
    pub actors: BTreeMap<String, AccountId>,
    pub steps: Vec<StepResult>,
    pub aborted: Option<Abort>,
    pub head: Head,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepResult {
    pub index: usize,
    pub name: String,
    pub height: u64,
    pub state_root: Hash32,
    pub outcome: Outcome,
    pub calls: Vec<CallResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Ok(&'static str),
    Error { error: String, code: String },
}

impl Outcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, Outcome::Ok(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallResult {
    pub actor: String,
    pub op: String,
    pub ok: bool,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<Output>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_hash: Option<Hash32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Abort {
    pub step: usize,
    pub reason: String,
    /// Whether the unexpected outcome was a contract rejection.
    #[serde(skip)]
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Head {
    pub height: u64,
    pub hash: Hash32,
    pub state_root: Hash32,
}

/// Everything a run produced: the transcript, the final chain and the
/// contract state after each step.
pub struct ScenarioRun {
    pub transcript: Transcript,
    pub chain: Chain,
    pub keys: BTreeMap<String, Keypair>,
    pub states: Vec<ContractState>,
}

impl ScenarioRun {
    pub fn account(&self, alias: &str) -> AccountId {
        self.transcript.actors[alias]
    }

    /// The exit class a CLI run reports.
    pub fn exit(&self) -> Result<(), CliError> {
        match &self.transcript.aborted {
            None => Ok(()),
            Some(a) => Err(CliError {
                kind: if a.rejected {
                    ExitKind::GuardRejection
                } else {
                    ExitKind::Validation
                },
                message: format!("step {} aborted: {}", a.step, a.reason),
            }),
        }
    }
}

pub fn parse_script(bytes: &[u8]) -> CliResult<ScenarioScript> {
    serde_json::from_slice(bytes).map_err(|e| CliError::validation(format!("scenario script: {e}")))
}

struct Runner<'a> {
    options: Options,
    store: Option<&'a BlobStore>,
    keys: BTreeMap<String, Keypair>,
}

impl Runner<'_> {
    fn key(&mut self, alias: &str) -> CliResult<&Keypair> {
        if alias.is_empty() || alias.starts_with('@') {
            return Err(CliError::validation(format!(
                "invalid actor alias {alias:?}"
            )));
        }
        let seed = self.options.seed;
        Ok(self
            .keys
            .entry(alias.to_string())
            .or_insert_with(|| Keypair::from_seed(&format!("scenario/{seed}/{alias}"))))
    }

    fn resolve(&mut self, v: &Value) -> CliResult<Value> {
        Ok(match v {
            Value::String(s) if s.starts_with('@') => {
                Value::String(self.key(&s[1..])?.account().to_string())
            }
            Value::Object(m) if m.len() == 1 && m.contains_key("document") => {
                let text = m["document"]
                    .as_str()
                    .ok_or_else(|| CliError::validation("document must be a string"))?;
                let hash = match self.store {
                    Some(store) => store
                        .put(text.as_bytes())
                        .map_err(|e| CliError::io(e.to_string()))?,
                    None => ContentHash::of(text.as_bytes()),
                };
                Value::String(hash.to_string())
            }
            Value::Object(m) => Value::Object(
                m.iter()
                    .map(|(k, v)| Ok((k.clone(), self.resolve(v)?)))
                    .collect::<CliResult<_>>()?,
            ),
            Value::Array(items) => Value::Array(
                items
                    .iter()
                    .map(|v| self.resolve(v))
                    .collect::<CliResult<_>>()?,
            ),
            other => other.clone(),
        })
    }

    fn call(&mut self, c: &StepCall) -> CliResult<Call> {
        let mut json = serde_json::json!({ "op": c.op });
        if let Some(args) = &c.args {
            json["args"] = self.resolve(args)?;
        }
        serde_json::from_value(json).map_err(|e| CliError::validation(format!("{}: {e}", c.op)))
    }
}

fn matches(outcome: &Outcome, expect: &Expect) -> bool {
    match (outcome, expect) {
        (Outcome::Ok(_), Expect::Ok) => true,
        (Outcome::Error { error, code }, Expect::Error { error: want }) => {
            want == error || want == code
        }
        _ => false,
    }
}

/// Runs `script`. Malformed scripts are errors; a step with an unexpected
/// outcome ends the run with [`Transcript::aborted`] set.
pub fn run(
    script: &ScenarioScript,
    options: Options,
    store: Option<&BlobStore>,
) -> CliResult<ScenarioRun> {
    let mut runner = Runner {
        options,
        store,
        keys: BTreeMap::new(),
    };
    let authority = Keypair::from_seed(&format!("scenario/{}/authority", options.seed));
    let mut administrators = Vec::new();
    for a in &script.administrators {
        administrators.push(runner.key(a)?.account());
    }
    let mut balances = BTreeMap::new();
    for (alias, amount) in &script.balances {
        balances.insert(runner.key(alias)?.account(), *amount);
    }
    let genesis = GenesisConfig {
        chain_id: script.chain_id.clone(),
        genesis_time: script.genesis_time,
        block_interval_secs: 2,
        authorities: vec![authority.public()],
        administrators,
        balances,
        permissive_guards: options.permissive_guards,
    };
    let mut chain = Chain::new(genesis).map_err(|e| CliError::validation(e.to_string()))?;
    let mut steps = Vec::new();
    let mut states = Vec::new();
    let mut aborted = None;

    for (i, step) in script.steps.iter().enumerate() {
        let index = i + 1;
        let mut results = Vec::new();
        let mut txs: Vec<(usize, Transaction)> = Vec::new();
        let mut nonces: BTreeMap<AccountId, u64> = BTreeMap::new();
        for c in step.calls()? {
            let call = runner.call(&c)?;
            let key = runner.key(&c.actor)?.clone();
            let mut result = CallResult {
                actor: c.actor.clone(),
                op: c.op.clone(),
                ok: true,
                code: "OK".into(),
                message: String::new(),
                output: None,
                tx_hash: None,
            };
            if call.is_read() {
                match chain.state().contract.query(&key.account(), &call) {
                    Ok(out) => result.output = Some(out),
                    Err(e) => {
                        result.ok = false;
                        result.code = e.code().into();
                        result.message = e.message();
                    }
                }
            } else {
                let nonce = nonces
                    .entry(key.account())
                    .or_insert_with(|| chain.state().nonce(&key.account()));
                let tx = Transaction::sign(&script.chain_id, &key, *nonce, c.value, call);
                match chain.state().check_admissible(&tx) {
                    Ok(()) => {
                        *nonce += 1;
                        result.tx_hash = Some(tx.hash());
                        txs.push((results.len(), tx));
                    }
                    Err(e @ TxError::UnknownSender(_)) => {
                        result.ok = false;
                        result.code = e.code().into();
                        result.message = "Not Registered".into();
                    }
                    Err(e) => return Err(CliError::validation(e.to_string())),
                }
            }
            results.push(result);
        }
        if !txs.is_empty() {
            let timestamp = chain.earliest_timestamp(0);
            let applied = chain
                .build_block(
                    txs.iter().map(|(_, tx)| tx),
                    0,
                    timestamp,
                    &authority,
                    usize::MAX,
                )
                .expect("single authority proposes every slot");
            assert_eq!(
                applied.receipts.len(),
                txs.len(),
                "admissible transactions all apply"
            );
            for ((slot, _), receipt) in txs.iter().zip(&applied.receipts) {
                let r = &mut results[*slot];
                r.ok = receipt.ok;
                r.code = receipt.code.clone();
                r.message = receipt.message.clone();
                r.output = receipt.output.clone();
            }
            chain.commit(applied);
        }
        let outcome = results
            .iter()
            .find(|r| !r.ok)
            .map_or(Outcome::Ok("ok"), |r| Outcome::Error {
                error: r.message.clone(),
                code: r.code.clone(),
            });
        if !matches(&outcome, &step.expect) {
            aborted = Some(Abort {
                step: index,
                rejected: !outcome.is_ok(),
                reason: match (&outcome, &step.expect) {
                    (Outcome::Error { error, .. }, _) => format!("{}: {error}", step.name),
                    (_, Expect::Error { error }) => {
                        format!("{}: expected {error:?}, call succeeded", step.name)
                    }
                    _ => unreachable!(),
                },
            });
        }
        steps.push(StepResult {
            index,
            name: step.name.clone(),
            height: chain.height(),
            state_root: chain.state().state_root(),
            outcome,
            calls: results,
        });
        states.push(chain.state().contract.clone());
        if aborted.is_some() {
            break;
        }
    }

    let tip = chain.tip();
    let transcript = Transcript {
        chain_id: script.chain_id.clone(),
        seed: options.seed,
        permissive_guards: options.permissive_guards,
        actors: runner
            .keys
            .iter()
            .map(|(a, k)| (a.clone(), k.account()))
            .collect(),
        steps,
        aborted,
        head: Head {
            height: tip.height(),
            hash: tip.hash(),
            state_root: tip.header.state_root,
        },
    };
    Ok(ScenarioRun {
        transcript,
        chain,
        keys: runner.keys,
        states,
    })
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes") + "\n"
    }

    /// One line per step.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let outcome = match &s.outcome {
                Outcome::Ok(_) => "ok".to_string(),
                Outcome::Error { error, code } => format!("{error} ({code})"),
            };
            out += &format!(
                "step {} {} height={} {}\n",
                s.index, s.name, s.height, outcome
            );
        }
        match &self.aborted {
            Some(a) => out += &format!("aborted at step {}: {}\n", a.step, a.reason),
            None => out += &format!("head {} {}\n", self.head.height, self.head.hash),
        }
        out
    }
}

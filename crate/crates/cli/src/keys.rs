//! Key files and genesis assembly.

use std::path::{Path, PathBuf};

use medledger_core::account::KeyFile;
use medledger_core::ledger::GenesisConfig;
use medledger_core::{AccountId, Keypair};
use rand::RngCore;

use crate::error::{CliError, CliResult};

/// Seeded keys are reproducible: the same seed and alias always yield the
/// same key. Without a seed the secret comes from the OS.
pub fn generate(alias: &str, seed: Option<u64>) -> Keypair {
    match seed {
        Some(seed) => Keypair::from_seed(&format!("{seed}/{alias}")),
        None => {
            let mut secret = [0u8; 32];
            rand::rngs::OsRng.fill_bytes(&mut secret);
            Keypair::from_secret(secret)
        }
    }
}

pub fn key_path(dir: &Path, alias: &str) -> PathBuf {
    dir.join(format!("{alias}.key.json"))
}

/// Writes `<dir>/<alias>.key.json`, refusing to replace an existing file.
pub fn write_key(dir: &Path, alias: &str, key: &Keypair) -> CliResult<PathBuf> {
    if alias.is_empty() || alias.contains(['/', '\\']) {
        return Err(CliError::validation(format!("invalid alias {alias:?}")));
    }
    let path = key_path(dir, alias);
    if path.exists() {
        return Err(CliError::validation(format!(
            "{} already exists",
            path.display()
        )));
    }
    std::fs::create_dir_all(dir)?;
    let json =
        serde_json::to_string_pretty(&KeyFile::new(alias, key)).expect("key file serializes");
    std::fs::write(&path, json + "\n")?;
    Ok(path)
}

pub fn read_key(path: &Path) -> CliResult<Keypair> {
    let bytes = read(path)?;
    let file: KeyFile = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    file.keypair()
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// An account given either literally (`0x…`) or as a key file path.
pub fn resolve_account(spec: &str) -> CliResult<AccountId> {
    if spec.starts_with("0x") {
        spec.parse()
            .map_err(|e| CliError::validation(format!("{spec}: {e}")))
    } else {
        Ok(read_key(Path::new(spec))?.account())
    }
}

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

pub fn read_genesis(path: &Path) -> CliResult<GenesisConfig> {
    let genesis: GenesisConfig = serde_json::from_slice(&read(path)?)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    genesis
        .validate()
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    Ok(genesis)
}

pub struct GenesisSpec {
    pub chain_id: String,
    pub genesis_time: u64,
    pub block_interval_secs: u64,
    /// Key file paths, in proposer order.
    pub authorities: Vec<PathBuf>,
    pub administrators: Vec<String>,
    /// `account-or-key-file=amount`.
    pub funds: Vec<String>,
    pub permissive_guards: bool,
}

pub fn build_genesis(spec: &GenesisSpec) -> CliResult<GenesisConfig> {
    let authorities = spec
        .authorities
        .iter()
        .map(|p| read_key(p).map(|k| k.public()))
        .collect::<CliResult<Vec<_>>>()?;
    let administrators = spec
        .administrators
        .iter()
        .map(|a| resolve_account(a))
        .collect::<CliResult<Vec<_>>>()?;
    let mut balances = std::collections::BTreeMap::new();
    for fund in &spec.funds {
        let (who, amount) = fund.rsplit_once('=').ok_or_else(|| {
            CliError::validation(format!("expected ACCOUNT=AMOUNT, got {fund:?}"))
        })?;
        let amount: u128 = amount
            .parse()
            .map_err(|_| CliError::validation(format!("bad amount in {fund:?}")))?;
        *balances.entry(resolve_account(who)?).or_insert(0) += amount;
    }
    let genesis = GenesisConfig {
        chain_id: spec.chain_id.clone(),
        genesis_time: spec.genesis_time,
        block_interval_secs: spec.block_interval_secs,
        authorities,
        administrators,
        balances,
        permissive_guards: spec.permissive_guards,
    };
    genesis
        .validate()
        .map_err(|e| CliError::validation(e.to_string()))?;
    Ok(genesis)
}

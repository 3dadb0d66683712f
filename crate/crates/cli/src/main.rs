use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use medledger_cli::commands::{self, Target, Verified};
use medledger_cli::keys::{self, GenesisSpec};
use medledger_cli::scenario;
use medledger_cli::{CliError, CliResult};
use medledger_gateway::Clock;

#[derive(Parser)]
#[command(
    name = "medledger",
    version,
    about = "Permissioned healthcare ledger tooling"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Genesis file (node, tx, chain) or simulation config (sim).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    chain_file: Option<PathBuf>,
    #[arg(long, global = true)]
    store_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the literal guard semantics instead of the strict ones.
    #[arg(long, global = true)]
    permissive_guards: bool,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Writes `<alias>.key.json`; deterministic when --seed is given.
    Keygen {
        alias: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Assembles a genesis file from key files.
    Genesis {
        #[arg(long)]
        chain_id: String,
        /// Authority key file, in proposer order. Repeatable.
        #[arg(long = "authority", required = true)]
        authorities: Vec<PathBuf>,
        /// Administrator account or key file. Repeatable.
        #[arg(long = "admin")]
        admins: Vec<String>,
        /// `ACCOUNT=AMOUNT` initial balance. Repeatable.
        #[arg(long = "fund")]
        funds: Vec<String>,
        #[arg(long, default_value_t = scenario::DEFAULT_GENESIS_TIME)]
        genesis_time: u64,
        #[arg(long, default_value_t = 2)]
        interval: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Node {
        #[command(subcommand)]
        command: NodeCommand,
    },
    Tx {
        #[command(subcommand)]
        command: TxCommand,
    },
    Chain {
        #[command(subcommand)]
        command: ChainCommand,
    },
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    System,
    Earliest,
}

#[derive(Subcommand)]
enum NodeCommand {
    /// Runs a live node with its HTTP gateway.
    Run {
        /// Authority key file. Repeatable.
        #[arg(long = "key", required = true)]
        keys: Vec<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8645")]
        listen: String,
        #[arg(long)]
        max_blob_bytes: Option<usize>,
        #[arg(long, value_enum, default_value = "system")]
        clock: ClockArg,
    },
}

#[derive(Subcommand)]
enum TxCommand {
    /// Signs and submits one call, then waits for its receipt.
    Send {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        op: String,
        /// Call arguments as a JSON object.
        #[arg(long)]
        args: Option<String>,
        #[arg(long, default_value_t = 0)]
        value: u128,
        #[arg(long)]
        nonce: Option<u64>,
        /// Gateway URL. Without it the block is sealed straight into
        /// --chain-file with the --authority keys.
        #[arg(long)]
        node: Option<String>,
        #[arg(long = "authority")]
        authorities: Vec<PathBuf>,
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
    },
}

#[derive(Subcommand)]
enum ChainCommand {
    /// Replays a chain file and reports the first bad height.
    Verify { file: Option<PathBuf> },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Runs a network simulation and prints its report.
    Run,
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Executes a scenario script and prints its transcript.
    Run { script: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn need<'a>(v: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    v.as_deref()
        .ok_or_else(|| CliError::validation(format!("{flag} is required")))
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cli: Cli) -> CliResult<()> {
    let g = cli.global;
    match cli.command {
        Command::Keygen { alias, out_dir } => {
            let key = keys::generate(&alias, g.seed);
            let path = keys::write_key(&out_dir, &alias, &key)?;
            if g.json {
                print_json(
                    &serde_json::json!({"alias": alias, "account": key.account(), "path": path}),
                );
            } else {
                println!("{} {}", key.account(), path.display());
            }
        }
        Command::Genesis {
            chain_id,
            authorities,
            admins,
            funds,
            genesis_time,
            interval,
            out,
        } => {
            let genesis = keys::build_genesis(&GenesisSpec {
                chain_id,
                genesis_time,
                block_interval_secs: interval,
                authorities,
                administrators: admins,
                funds,
                permissive_guards: g.permissive_guards,
            })?;
            let text = serde_json::to_string_pretty(&genesis).expect("genesis serializes") + "\n";
            match out {
                Some(path) => std::fs::write(&path, text)?,
                None => print!("{text}"),
            }
        }
        Command::Node {
            command:
                NodeCommand::Run {
                    keys: key_files,
                    listen,
                    max_blob_bytes,
                    clock,
                },
        } => {
            let genesis = keys::read_genesis(need(&g.config, "--config")?)?;
            let keys = key_files
                .iter()
                .map(|p| keys::read_key(p))
                .collect::<CliResult<Vec<_>>>()?;
            let store = g.store_dir.clone().unwrap_or_else(|| "store".into());
            let clock = match clock {
                ClockArg::System => Clock::System,
                ClockArg::Earliest => Clock::Earliest,
            };
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
                )
                .with_writer(std::io::stderr)
                .init();
            let node = commands::open_node(
                genesis,
                keys,
                g.chain_file.clone(),
                &store,
                clock,
                max_blob_bytes,
            )?;
            commands::node_run(node, &listen, |addr| {
                println!("listening on http://{addr}");
            })?;
        }
        Command::Tx {
            command:
                TxCommand::Send {
                    key,
                    op,
                    args,
                    value,
                    nonce,
                    node,
                    authorities,
                    timeout_secs,
                },
        } => {
            let key = keys::read_key(&key)?;
            let call = commands::parse_call(&op, args.as_deref())?;
            let target = match node {
                Some(url) => Target::Remote {
                    url,
                    timeout: Duration::from_secs(timeout_secs),
                },
                None => Target::Local {
                    genesis: keys::read_genesis(need(&g.config, "--config")?)?,
                    chain_file: need(&g.chain_file, "--chain-file")?.to_path_buf(),
                    store_dir: g.store_dir.clone().unwrap_or_else(|| "store".into()),
                    authorities: authorities
                        .iter()
                        .map(|p| keys::read_key(p))
                        .collect::<CliResult<Vec<_>>>()?,
                },
            };
            let (height, receipt) = commands::tx_send(&target, &key, value, call, nonce)?;
            if g.json {
                print_json(&serde_json::json!({"height": height, "receipt": receipt}));
            } else if receipt.ok {
                println!("committed at height {height}: {}", receipt.tx_hash);
            } else {
                println!("rejected at height {height}: {}", receipt.message);
            }
            commands::receipt_result(&receipt)?;
        }
        Command::Chain {
            command: ChainCommand::Verify { file },
        } => {
            let genesis = keys::read_genesis(need(&g.config, "--config")?)?;
            let file = match file {
                Some(f) => f,
                None => need(&g.chain_file, "--chain-file")?.to_path_buf(),
            };
            let verified = commands::chain_verify(&genesis, &file)?;
            if g.json {
                print_json(&verified.to_json());
            }
            match verified {
                Verified::Ok { height, head, .. } => {
                    if !g.json {
                        println!("ok height {height} head {head}");
                    }
                }
                Verified::Fault(fault) => {
                    if !g.json {
                        println!("first bad height: {}", fault.height);
                    }
                    return Err(CliError::validation(fault.to_string()));
                }
            }
        }
        Command::Sim {
            command: SimCommand::Run,
        } => {
            let mut config = commands::read_sim_config(g.config.as_deref())?;
            if let Some(seed) = g.seed {
                config.seed = seed;
            }
            config.permissive_guards |= g.permissive_guards;
            let report = commands::sim_run(config)?;
            if g.json {
                print!("{}", report.to_json());
            } else {
                println!(
                    "virtual time {} ms, honest heights {}..{}, divergence {}, skipped slots {}, sybil blocks accepted {}",
                    report.virtual_time_ms,
                    report.min_honest_height,
                    report.max_honest_height,
                    report.divergence,
                    report.skipped_slots.len(),
                    report.foreign_blocks_accepted,
                );
            }
            if report.divergence {
                return Err(CliError::validation(format!(
                    "honest nodes diverged at heights {:?}",
                    report.divergent_heights
                )));
            }
        }
        Command::Scenario {
            command: ScenarioCommand::Run { script },
        } => {
            let script = scenario::parse_script(&keys::read(&script)?)?;
            let store = match &g.store_dir {
                Some(dir) => Some(
                    medledger_core::store::BlobStore::open(dir)
                        .map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?,
                ),
                None => None,
            };
            let options = scenario::Options {
                seed: g.seed.unwrap_or(0),
                permissive_guards: g.permissive_guards,
            };
            let run = scenario::run(&script, options, store.as_ref())?;
            if g.json {
                print!("{}", run.transcript.to_json());
            } else {
                print!("{}", run.transcript.to_text());
            }
            if let Some(path) = &g.chain_file {
                run.chain.write_file(path)?;
            }
            run.exit()?;
        }
    }
    Ok(())
}

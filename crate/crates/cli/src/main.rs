//! `dab`: replays the scripted scenarios, reports transaction costs, exports
//! the chain and serves the HTTP API.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dab_core::config::{EngineConfig, GasConfig};
use dab_core::costs::{report_costs, reproduce_published_fees, CostError};
use dab_core::engine::Engine;
use dab_core::scenario::{builtin, builtin_ids, parse_script, run_all, run_script_with_engine, ScenarioScript};
use dab_core::types::NativeAmount;
use rust_decimal::Decimal;

#[derive(Debug, Parser)]
#[command(name = "dab", version, about = "Building DAO engine: scenarios, costs, chain export and API server")]
struct Cli {
    /// TOML engine configuration; defaults apply to omitted sections.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs a scripted scenario (1-6, `governance`, `all`, or a JSON script file).
    Run {
        target: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Print the report as JSON instead of the step log.
        #[arg(long)]
        json: bool,
    },
    /// Serves the HTTP/JSON API and event stream over a fresh genesis.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Prints gas and fee per operation at a uniform gas price.
    Costs {
        /// Gas price in gwei (default from the config, 1 gwei).
        #[arg(long, value_name = "GWEI")]
        gas_price: Option<Decimal>,
        /// USD per ETH-equivalent (default from the config).
        #[arg(long, value_name = "X")]
        eth_usd: Option<Decimal>,
        /// Reproduce the published fee table with per-row derived gas prices.
        #[arg(long)]
        published: bool,
    },
    /// Runs a scenario and writes its chain as JSON lines, one block per line.
    ExportChain {
        file: PathBuf,
        /// Scenario whose chain to export; a fresh genesis when omitted.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig> {
    match path {
        Some(p) => EngineConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(EngineConfig::default()),
    }
}

fn load_script(target: &str) -> Result<ScenarioScript> {
    if builtin_ids().contains(&target) {
        return Ok(builtin(target)?);
    }
    let path = Path::new(target);
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return parse_script(&text).with_context(|| format!("parsing {}", path.display()));
    }
    bail!("unknown scenario {target:?}; expected one of {}, `all`, or a .json script", builtin_ids().join(", "))
}

fn run(config: &EngineConfig, target: &str, seed: u64, json: bool) -> Result<bool> {
    if target == "all" {
        let suite = run_all(config, seed)?;
        if json {
            println!("{}", serde_json::to_string_pretty(&suite)?);
        } else {
            print!("{}", suite.render());
        }
        return Ok(suite.passed);
    }
    let (report, _) = run_script_with_engine(&load_script(target)?, config, seed)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.render());
    }
    Ok(report.passed)
}

fn gwei_price(gwei: Decimal) -> Result<NativeAmount> {
    if gwei <= Decimal::ZERO {
        return Err(CostError::ZeroGasPrice.into());
    }
    GasConfig { price_gwei: gwei, ..GasConfig::default() }
        .gas_price()
        .with_context(|| format!("gas price {gwei} gwei is not a whole number of wei"))
}

fn costs(config: &EngineConfig, gas_price: Option<Decimal>, eth_usd: Option<Decimal>, published: bool) -> Result<String> {
    if published {
        let mut out = format!(
            "{:<32} {:>10} {:>19} {:>15} {:>22} {:>22}\n",
            "operation", "gas", "derived price (wei)", "published (ETH)", "reproduced (ETH)", "abs error (ETH)"
        );
        for r in reproduce_published_fees() {
            let _ = writeln!(
                out,
                "{:<32} {:>10} {:>19} {:>15} {:>22} {:>22}",
                r.operation.name(),
                r.gas,
                r.derived_gas_price.0,
                r.published_fee_eth,
                r.reproduced_fee.eth_string(),
                r.abs_error().normalize()
            );
        }
        return Ok(out);
    }
    let price = gwei_price(gas_price.unwrap_or(config.gas.price_gwei))?;
    let eth_usd = eth_usd.unwrap_or(config.economics.eth_usd);
    let schedule = config.genesis_config().gas;
    Ok(report_costs(&schedule, price, eth_usd)?.render())
}

fn export_chain(config: &EngineConfig, file: &Path, scenario: Option<&str>, seed: u64) -> Result<usize> {
    let engine = match scenario {
        Some(target) => {
            let (report, engine) = run_script_with_engine(&load_script(target)?, config, seed)?;
            if !report.passed {
                bail!("scenario {target} failed; not exporting:\n{}", report.render());
            }
            engine
        }
        None => Engine::new(config.clone(), seed)?,
    };
    std::fs::write(file, engine.chain().export_jsonl()).with_context(|| format!("writing {}", file.display()))?;
    Ok(engine.chain().blocks().len())
}

async fn serve(config: EngineConfig, addr: SocketAddr, seed: u64) -> Result<()> {
    let engine = Engine::new(config, seed)?;
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    println!("dab API listening on http://{}", listener.local_addr()?);
    dab_server::serve(listener, dab_server::AppState::new(engine)).await?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load_config(cli.config.as_deref()).and_then(|config| match cli.command {
        Command::Run { target, seed, json } => run(&config, &target, seed, json),
        Command::Costs { gas_price, eth_usd, published } => {
            print!("{}", costs(&config, gas_price, eth_usd, published)?);
            Ok(true)
        }
        Command::ExportChain { file, scenario, seed } => {
            let blocks = export_chain(&config, &file, scenario.as_deref(), seed)?;
            println!("wrote {blocks} blocks to {}", file.display());
            Ok(true)
        }
        Command::Serve { port, bind, seed } => {
            let runtime = tokio::runtime::Runtime::new().context("starting the async runtime")?;
            runtime.block_on(serve(config, SocketAddr::new(bind, port), seed))?;
            Ok(true)
        }
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

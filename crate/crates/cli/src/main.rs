use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use swarm_core::config::{BROADCAST_LEVELS, SEPARATION_LEVELS, SPEED_LEVELS};
use swarm_core::{BehaviorParams, SwarmConfig};
use swarm_harness::sweep::{grid, full_grid, read_csv, run_sweep_to_csv, SweepSpec};
use swarm_harness::trial::run_trial_recorded;
use swarm_harness::{fit_performance_model, run_trial};
use swarm_session::{load_teams, ServerConfig};

#[derive(Parser)]
#[command(name = "swarmsim", version, about = "Swarm search simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKind {
    /// All 125 combinations of the standard levels.
    Paper,
    /// Combinations of the levels given with --speeds/--separations/--broadcasts.
    Custom,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configuration of a grid for N seeds and append to a CSV.
    Sweep {
        #[arg(long, value_enum, default_value = "paper")]
        grid: GridKind,
        /// Speed levels for a custom grid, cm/s.
        #[arg(long, value_delimiter = ',')]
        speeds: Option<Vec<f64>>,
        /// Separation levels for a custom grid, cm.
        #[arg(long, value_delimiter = ',')]
        separations: Option<Vec<f64>>,
        /// Broadcast levels for a custom grid, s.
        #[arg(long, value_delimiter = ',')]
        broadcasts: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10)]
        seeds: u32,
        #[arg(long, default_value_t = 1)]
        master_seed: u64,
        /// Trial time limit, s.
        #[arg(long, default_value_t = SwarmConfig::HEADLESS_LIMIT)]
        limit: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a single trial and print its result as JSON.
    Trial {
        #[arg(long)]
        speed: f64,
        #[arg(long)]
        separation: f64,
        #[arg(long)]
        broadcast: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = SwarmConfig::HEADLESS_LIMIT)]
        limit: f64,
        /// Write one JSON frame per tick here.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Summarize a results CSV and fit the performance regression.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        /// Value assigned to timed-out trials, s.
        #[arg(long, default_value_t = SwarmConfig::HEADLESS_LIMIT)]
        limit: f64,
        #[arg(long)]
        json: bool,
    },
    /// Host operator sessions over HTTP and WebSocket.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Team list used by study-mode sessions.
        #[arg(long)]
        teams: Option<PathBuf>,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        /// Wall-clock ms per simulation tick.
        #[arg(long, default_value_t = 100)]
        tick_ms: u64,
        #[arg(long)]
        hide_target_until_informed: bool,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Sweep {
            grid: kind,
            speeds,
            separations,
            broadcasts,
            seeds,
            master_seed,
            limit,
            out,
        } => {
            let points = match kind {
                GridKind::Paper => {
                    if speeds.is_some() || separations.is_some() || broadcasts.is_some() {
                        bail!("level lists only apply to --grid custom");
                    }
                    full_grid()
                }
                GridKind::Custom => grid(
                    speeds.as_deref().unwrap_or(&SPEED_LEVELS),
                    separations.as_deref().unwrap_or(&SEPARATION_LEVELS),
                    broadcasts.as_deref().unwrap_or(&BROADCAST_LEVELS),
                ),
            };
            for p in &points {
                SwarmConfig::new(p.params, 0)
                    .with_limit(limit)
                    .validate()
                    .with_context(|| format!("configuration {:?}", p.params))?;
            }
            let mut spec = SweepSpec::new(points, seeds, master_seed);
            spec.max_trial_duration = limit;
            let started = Instant::now();
            let run = run_sweep_to_csv(&spec, &out).with_context(|| format!("sweeping into {}", out.display()))?;
            eprintln!(
                "{} trials run, {} reused, {:.1} s; results in {}",
                run.ran,
                run.reused,
                started.elapsed().as_secs_f64(),
                out.display()
            );
            println!("{}", fit_performance_model(&run.results, limit)?);
        }
        Command::Trial {
            speed,
            separation,
            broadcast,
            seed,
            limit,
            record,
        } => {
            let config = SwarmConfig::new(BehaviorParams::new(speed, separation, broadcast), seed).with_limit(limit);
            config.validate()?;
            let result = match record {
                Some(path) => {
                    let mut out = BufWriter::new(
                        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
                    );
                    run_trial_recorded(&config, &mut out)?
                }
                None => run_trial(&config)?,
            };
            println!("{}", serde_json::to_string_pretty(&result)?);
        }
        Command::Analyze { input, limit, json } => {
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let results = read_csv(file)?;
            if results.is_empty() {
                bail!("{} holds no results", input.display());
            }
            let summary = fit_performance_model(&results, limit)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                println!("{summary}");
            }
        }
        Command::Serve {
            port,
            host,
            teams,
            data_dir,
            tick_ms,
            hide_target_until_informed,
        } => {
            let teams = match teams {
                Some(path) => load_teams(&path).map_err(anyhow::Error::msg)?,
                None => Vec::new(),
            };
            std::fs::create_dir_all(&data_dir)?;
            let mut config = ServerConfig::new(data_dir, teams);
            config.tick_interval = Duration::from_millis(tick_ms.max(1));
            config.hide_target_until_informed = hide_target_until_informed;
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad --host/--port")?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                swarm_session::serve(listener, config).await
            })?;
        }
    }
    Ok(())
}

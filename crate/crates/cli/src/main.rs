//! `nightpair` command line: run, batch, report and validate scenarios.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing::{error, info};
use tracing_subscriber::EnvFilter;

use nightpair::config::ScenarioConfig;
use nightpair::pipeline::{
    batch_run, collect_configs, run_scenario, write_atomic, Manifest, Overrides, PipelineError,
};
use nightpair::scenarios;

#[derive(Parser)]
#[command(name = "nightpair", version, about = "Day/night frame pairing by trajectory tracking")]
struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace). RUST_LOG wins if set.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios end to end and write their artifacts.
    Run {
        /// Scenario files, or ids of bundled scenarios (straight-road, curved-course).
        #[arg(required = true)]
        configs: Vec<String>,
        #[command(flatten)]
        opts: RunArgs,
    },
    /// Run every *.toml in a directory and print a cross-scenario table.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        opts: RunArgs,
    },
    /// Re-derive the alignment report from a pair manifest.
    Report {
        manifest: PathBuf,
        /// Print the structured report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Check scenario files without simulating.
    Validate {
        #[arg(required = true)]
        configs: Vec<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Output directory; each scenario writes into its own subdirectory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the matching threshold in meters (default 0.05).
    #[arg(long)]
    delta: Option<f64>,
    /// Let each night frame pair with at most one day frame.
    #[arg(long)]
    unique: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            delta: self.delta,
            unique: self.unique.then_some(true),
        }
    }
}

fn load(spec: &str) -> Result<ScenarioConfig, PipelineError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(bundled) = scenarios::bundled(spec) {
            return Ok(bundled?);
        }
    }
    Ok(ScenarioConfig::load(path)?)
}

fn run(configs: &[String], opts: &RunArgs) -> u8 {
    let mut worst = 0;
    for spec in configs {
        let result = load(spec).and_then(|cfg| run_scenario(cfg, &opts.out, &opts.overrides()));
        match result {
            Ok(a) => {
                println!("{} (seed {}, config {})", a.scenario_id, a.seed, &a.config_hash[..12]);
                println!("  manifest {}", a.manifest.display());
                print!("{}", indent(&a.summary.render_text()));
            }
            Err(e) => {
                error!(config = %spec, "{e}");
                eprintln!("error: {spec}: {e}");
                worst = worst.max(e.exit_code() as u8);
            }
        }
    }
    worst
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}

fn batch(dir: &Path, opts: &RunArgs) -> u8 {
    let configs = match collect_configs(dir) {
        Ok(c) if c.is_empty() => {
            eprintln!("error: no *.toml scenarios in {}", dir.display());
            return 1;
        }
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let summary = batch_run(&configs, &opts.out, &opts.overrides());
    print!("{}", summary.render_text());
    if let Err(e) = std::fs::create_dir_all(&opts.out).map_err(|source| PipelineError::Io {
        path: opts.out.display().to_string(),
        source,
    }).and_then(|_| {
        let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
        json.push(b'\n');
        write_atomic(&opts.out.join("batch_summary.json"), &json)
    }) {
        eprintln!("error: {e}");
        return 1;
    }
    info!(rows = summary.rows.len(), failures = summary.failures.len(), "batch finished");
    summary.exit_code() as u8
}

fn report(path: &Path, json: bool) -> u8 {
    let manifest = std::fs::read_to_string(path)
        .map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })
        .and_then(|text| {
            Manifest::parse(&text).map_err(|source| PipelineError::Manifest {
                path: path.display().to_string(),
                source,
            })
        });
    match manifest {
        Ok(m) if json => {
            let file = nightpair::pipeline::ReportFile {
                header: &m.header,
                report: &m.report(),
            };
            println!("{}", serde_json::to_string_pretty(&file).expect("report serializes"));
            0
        }
        Ok(m) => {
            print!("{}", m.report_text());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as u8
        }
    }
}

fn validate(configs: &[String]) -> u8 {
    let mut code = 0;
    for spec in configs {
        match load(spec) {
            Ok(cfg) => println!("ok {spec}: {} ({}/{}) {}", cfg.id, cfg.road_scene.as_str(), cfg.lighting.as_str(), cfg.hash()),
            Err(e) => {
                eprintln!("invalid {spec}: {e}");
                code = 1;
            }
        }
    }
    code
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging(cli.verbose);
    let code = match &cli.command {
        Command::Run { configs, opts } => run(configs, opts),
        Command::Batch { dir, opts } => batch(dir, opts),
        Command::Report { manifest, json } => report(manifest, *json),
        Command::Validate { configs } => validate(configs),
    };
    ExitCode::from(code)
}

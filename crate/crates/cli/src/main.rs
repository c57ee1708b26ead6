//! `braidflow` command-line front-end.
//!
//! Exit codes: 0 success, 1 other runtime failure, 2 tolerance-gate failure,
//! 3 configuration or usage error.

mod config;
mod experiments;

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use braidflow::braid::{handle_reduce, parse_braid_text, spherical_normalize, SphericalBraidWord};
use braidflow::flow::catalog::all_named;
use braidflow::flow::{Isotopy, SurfaceKind, SurfacePoint};
use braidflow::quasimorphisms::surface::Symmetrization;
use braidflow::tracing::{crossings_csv, default_pole, trace_braid, trace_loop_class, ConfigurationSample};
use clap::{Parser, Subcommand};

use config::Config;
use experiments::RunError;

#[derive(Parser)]
#[command(name = "braidflow", version, about = "Braid and loop-class experiments on Hamiltonian surface flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. --set seed=7 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Hamiltonian spec file or catalog name; replaces `hamiltonian`.
        #[arg(long)]
        hamiltonian: Option<String>,
        /// Output directory; replaces `output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List surfaces, catalog Hamiltonians, quasimorphisms and experiments.
    List,
    /// Read a braid word (`n=<strands> [sphere=1]` header, signed letters)
    /// from stdin and print its reduced form.
    ReduceWord,
    /// Trace one configuration under a flow and dump the word.
    Trace {
        /// Hamiltonian spec file or catalog name.
        #[arg(long)]
        hamiltonian: String,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        /// Points as `x,y;x,y;...` (sphere: `x,y,z;...`).
        #[arg(long)]
        points: String,
        /// Also print the crossing events as CSV.
        #[arg(long)]
        events: bool,
    },
}

fn threads_from_env() -> Result<(), RunError> {
    let Ok(value) = std::env::var("BRAIDFLOW_THREADS") else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| RunError::Config(config::ConfigError::Invalid { key: "BRAIDFLOW_THREADS".into(), message: format!("{value:?} is not a positive integer") }))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| RunError::Failure(e.to_string()))
}

fn run(config: PathBuf, overrides: Vec<String>, hamiltonian: Option<String>, output: Option<PathBuf>) -> Result<(), RunError> {
    let mut cfg = Config::load(&config)?;
    for item in overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| config::ConfigError::Invalid { key: "--set".into(), message: format!("expected KEY=VALUE, got {item:?}") })?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(h) = hamiltonian {
        cfg.set("hamiltonian", &h)?;
    }
    let dir = output.unwrap_or_else(|| PathBuf::from(cfg.get("output").unwrap_or("braidflow-out")));
    let artifacts = experiments::run(&cfg)?;
    experiments::write(&artifacts, &dir).map_err(|e| RunError::Failure(format!("{}: {e}", dir.display())))?;
    println!("{}", dir.join("report.json").display());
    Ok(())
}

fn list() {
    let mut out = String::from("surfaces:\n");
    for k in SurfaceKind::all() {
        out += &format!("  {}\n", k.name());
    }
    out += "hamiltonians:\n";
    for sys in all_named() {
        out += &format!("  {} ({})\n", sys.name, sys.kind().name());
    }
    out += "quasimorphisms:\n";
    for q in ["rademacher", "expsum", "brooks:<pattern>", "brooks-raw:<pattern>", "lk:<i>,<j>", "gensum:<i>", "combo:<file>", "corrected"] {
        out += &format!("  {q}\n");
    }
    out += "experiments:\n";
    for e in experiments::EXPERIMENTS {
        out += &format!("  {e}\n");
    }
    // a closed pipe (e.g. `| head`) is not an error worth reporting
    let _ = std::io::stdout().write_all(out.as_bytes());
}

fn reduce_word() -> Result<(), RunError> {
    let mut text = String::new();
    std::io::stdin().read_to_string(&mut text).map_err(|e| RunError::Failure(e.to_string()))?;
    let invalid = |e: String| RunError::Config(config::ConfigError::Invalid { key: "word".into(), message: e });
    let (braid, sphere) = parse_braid_text(&text).map_err(|e| invalid(e.to_string()))?;
    let reduced = handle_reduce(&braid).map_err(|e| RunError::Failure(e.to_string()))?;
    if sphere {
        print!("{}", spherical_normalize(&SphericalBraidWord::new(reduced)).to_text());
    } else {
        print!("{}", reduced.to_text());
    }
    Ok(())
}

fn trace(hamiltonian: &str, duration: f64, points: &str, events: bool) -> Result<(), RunError> {
    let mut cfg = Config::default();
    cfg.set("hamiltonian", hamiltonian)?;
    cfg.set("duration", &duration.to_string())?;
    cfg.set("point", points)?;
    let invalid = |m: String| RunError::Config(config::ConfigError::Invalid { key: "points".into(), message: m });
    let iso: Isotopy = experiments::composite(&cfg)?;
    let sys = iso.segments[0].system.clone();
    let pts: Vec<SurfacePoint> = experiments::points_from(&cfg, sys.kind())?;
    if sys.kind() == SurfaceKind::PolygonGenus2 {
        let sym = Symmetrization::new(2);
        for x in pts {
            let traced = trace_loop_class(&iso, x, SurfacePoint::plane(0.0, 0.0), &sym).map_err(|e| invalid(e.to_string()))?;
            print!("{}", traced.word.word().to_text());
        }
        return Ok(());
    }
    let sample = ConfigurationSample::based_at_self(&sys.surface, pts, sys.tolerances.separation_tol).map_err(|e| invalid(e.to_string()))?;
    let traced = trace_braid(&iso, &sample, default_pole(&sys)).map_err(|e| match e {
        braidflow::tracing::TraceError::Flow(f) => RunError::from(f),
        other => RunError::Failure(other.to_string()),
    })?;
    if traced.spherical {
        print!("{}", traced.spherical_word().to_text());
    } else {
        print!("{}", traced.braid.to_text());
    }
    if events {
        print!("{}", crossings_csv(&traced.events));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = threads_from_env().and_then(|()| match cli.command {
        Command::Run { config, overrides, hamiltonian, output } => run(config, overrides, hamiltonian, output),
        Command::List => {
            list();
            Ok(())
        }
        Command::ReduceWord => reduce_word(),
        Command::Trace { hamiltonian, duration, points, events } => trace(&hamiltonian, duration, &points, events),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

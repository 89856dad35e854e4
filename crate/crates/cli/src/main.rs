mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use geomopt_core::resources::CostModel;
use geomopt_core::ErrorClass;

use config::{ExperimentConfig, ResourcesSection};
use output::{sha256_hex, OutputDir, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] geomopt_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Capacity => 3,
                ErrorClass::Numerical => 4,
            },
            CliError::Io { .. } | CliError::Output(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "geomopt", version, about = "Quantum-grid geometry optimization experiments")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact per-geometry spectra.
    Diagonalize(Common),
    /// Probabilistic imaginary-time geometry optimization.
    Pite(Common),
    /// Variational imaginary-time evolution.
    Vite(Common),
    /// Classical-energy PITE on a tabulated surface.
    ClassicalPite(Common),
    /// Circuit depth estimates for the potential and kinetic terms.
    Resources(ResourceArgs),
    /// Check a configuration and list every problem found.
    Validate(Source),
}

#[derive(Args)]
struct Source {
    /// Built-in configuration name.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Path to a TOML configuration.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Common {
    #[command(flatten)]
    source: Source,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of imaginary-time steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Constant step for VITE and classical PITE.
    #[arg(long)]
    dtau: Option<f64>,
    #[arg(long)]
    dtau_min: Option<f64>,
    #[arg(long)]
    dtau_max: Option<f64>,
    #[arg(long)]
    dtau_kappa: Option<f64>,
}

#[derive(Args)]
struct ResourceArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    ne: Option<usize>,
    #[arg(long)]
    nnucl: Option<usize>,
    #[arg(long)]
    nqe: Option<u32>,
    #[arg(long)]
    nqn: Option<u32>,
    /// Use redundant electron copies for the electron-electron term.
    #[arg(long)]
    redundant: bool,
}

fn load(source: &Source) -> Result<ExperimentConfig, CliError> {
    let text = match (&source.preset, &source.config) {
        (Some(name), _) => config::preset(name)?.to_string(),
        (None, Some(path)) => std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        (None, None) => return Err(CliError::Config("one of --preset or --config is required".into())),
    };
    Ok(config::parse(&text)?)
}

fn apply_overrides(cfg: &mut ExperimentConfig, c: &Common) {
    if let Some(p) = cfg.pite.as_mut() {
        if let Some(s) = c.seed {
            p.seed = s;
        }
        if let Some(n) = c.steps {
            p.n_steps = n;
        }
        if let Some(v) = c.dtau_min {
            p.schedule.dtau_min_inv_au = v;
        }
        if let Some(v) = c.dtau_max {
            p.schedule.dtau_max_inv_au = v;
        }
        if let Some(v) = c.dtau_kappa {
            p.schedule.kappa_steps = v;
        }
    }
    if let Some(v) = cfg.vite.as_mut() {
        if let Some(s) = c.seed {
            v.seed = s;
        }
        if let Some(n) = c.steps {
            v.steps = n;
        }
        if let Some(d) = c.dtau {
            v.dtau_inv_au = d;
        }
    }
    if let Some(k) = cfg.classical.as_mut() {
        if let Some(s) = c.seed {
            k.seed = s;
        }
        if let Some(n) = c.steps {
            k.n_steps = n;
        }
        if let Some(d) = c.dtau {
            k.dtau_inv_mev = d;
        }
    }
}

fn config_hash<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(value).map_err(|e| CliError::Output(e.to_string()))?;
    Ok(sha256_hex(&bytes))
}

fn experiment(name: &str, c: &Common) -> Result<String, CliError> {
    let start = Instant::now();
    let mut cfg = load(&c.source)?;
    apply_overrides(&mut cfg, c);
    let problems = cfg.diagnostics();
    if !problems.is_empty() {
        return Err(CliError::Config(problems.join("; ")));
    }
    let mut out = OutputDir::create(&c.out)?;
    let (summary, seed) = match name {
        "diagonalize" => (run::diagonalize_cmd(&cfg, &mut out)?, None),
        "pite" => (run::pite_cmd(&cfg, &mut out)?, cfg.pite.as_ref().map(|p| p.seed)),
        "vite" => (run::vite_cmd(&cfg, &mut out)?, cfg.vite.as_ref().map(|v| v.seed)),
        "classical-pite" => (run::classical_cmd(&cfg, &mut out)?, cfg.classical.as_ref().map(|k| k.seed)),
        _ => unreachable!("unknown experiment {name}"),
    };
    let hash = config_hash(&cfg)?;
    RunManifest::finish(&mut out, name, &cfg.system, hash, seed, start.elapsed().as_secs_f64())?;
    Ok(summary)
}

fn resources(a: &ResourceArgs) -> Result<String, CliError> {
    let start = Instant::now();
    let from_config = if a.source.preset.is_some() || a.source.config.is_some() {
        Some(load(&a.source)?)
    } else {
        None
    };
    let base = from_config.as_ref().and_then(|c| c.resources.clone());
    let mut r = match base {
        Some(r) => r,
        None => {
            let (Some(n_e), Some(n_qe), Some(n_qn)) = (a.ne, a.nqe, a.nqn) else {
                return Err(CliError::Config(
                    "without a [resources] section, --ne, --nqe and --nqn are required".into(),
                ));
            };
            ResourcesSection {
                n_e,
                n_nucl: a.nnucl.unwrap_or(0),
                n_qe,
                n_qn,
                redundant: false,
                cost: CostModel::default(),
            }
        }
    };
    if let Some(v) = a.ne {
        r.n_e = v;
    }
    if let Some(v) = a.nnucl {
        r.n_nucl = v;
    }
    if let Some(v) = a.nqe {
        r.n_qe = v;
    }
    if let Some(v) = a.nqn {
        r.n_qn = v;
    }
    r.redundant |= a.redundant;
    r.validate()?;
    let mut out = OutputDir::create(&a.out)?;
    let table = run::resources_cmd(&r, &mut out)?;
    let system = from_config.map(|c| c.system).unwrap_or_else(|| "resources".into());
    RunManifest::finish(
        &mut out,
        "resources",
        &system,
        config_hash(&r)?,
        None,
        start.elapsed().as_secs_f64(),
    )?;
    Ok(table)
}

fn validate(source: &Source) -> Result<String, CliError> {
    let cfg = load(source)?;
    let problems = cfg.diagnostics();
    if problems.is_empty() {
        Ok(format!("{}: ok", cfg.system))
    } else {
        Err(CliError::Config(problems.join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Diagonalize(c) => experiment("diagonalize", c),
        Command::Pite(c) => experiment("pite", c),
        Command::Vite(c) => experiment("vite", c),
        Command::ClassicalPite(c) => experiment("classical-pite", c),
        Command::Resources(a) => resources(a),
        Command::Validate(s) => validate(s),
    };
    match result {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `lgprobe` command-line driver.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 configuration error,
//! 3 numerical non-convergence, 4 verification failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use config::{ConfigError, Layer, RunConfig};
use toml::Value;

#[derive(Parser, Debug)]
#[command(name = "lgprobe", version, about = "Two-time correlations and Leggett-Garg functions of spin chains")]
struct Cli {
    /// Log level: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground-state energy; MPS runs also write a checkpoint.
    Ground(Common),
    /// Correlation series C(t), optionally over a lambda grid.
    Correlate(Common),
    /// Leggett-Garg functions, violation masks and summaries.
    Lgi(Common),
    /// Parameter sweep with critical-point detection.
    Sweep(Common),
    /// Identity suite and engine cross-check.
    Verify(Common),
}

/// Options shared by every subcommand. Each flag overrides the config key
/// named in its help.
#[derive(Args, Debug, Default)]
struct Common {
    /// TOML config file with flat dotted keys.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Generic override `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// model.family: xxz or xy.
    #[arg(long)]
    model: Option<String>,
    /// model.j
    #[arg(long)]
    j: Option<f64>,
    /// model.delta
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// model.gamma
    #[arg(long)]
    gamma: Option<f64>,
    /// model.nu
    #[arg(long)]
    nu: Option<f64>,
    /// n
    #[arg(long)]
    n: Option<i64>,
    /// engine: auto, ed or mps.
    #[arg(long)]
    engine: Option<String>,
    /// dmrg.chi_max and evolution.chi_max
    #[arg(long)]
    chi: Option<i64>,
    /// evolution.dt
    #[arg(long)]
    dt: Option<f64>,
    /// evolution.t_max
    #[arg(long)]
    t_max: Option<f64>,
    /// probe.site
    #[arg(long)]
    site: Option<i64>,
    /// probe.directions, comma separated.
    #[arg(long)]
    directions: Option<String>,
    /// lambda.start:lambda.stop:lambda.step
    #[arg(long, value_name = "START:STOP:STEP", allow_hyphen_values = true)]
    lambda_range: Option<String>,
    /// dmrg.seed
    #[arg(long)]
    seed: Option<i64>,
    /// output.dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// workers
    #[arg(long)]
    workers: Option<i64>,
    /// verify.corrupt_fk
    #[arg(long)]
    corrupt_fk: bool,
}

impl Common {
    fn layers(&self) -> Result<Vec<Layer>, ConfigError> {
        let mut layers = Vec::new();
        if let Some(p) = &self.config {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", p.display())))?;
            layers.push(Layer::from_toml(&text, &p.display().to_string())?);
        }
        let mut sets = Layer::default();
        for s in &self.sets {
            sets.set_raw(s)?;
        }
        layers.push(sets);
        let mut f = Layer::default();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                f.set(k, v);
            }
        };
        put("model.family", self.model.clone().map(Value::from));
        put("model.j", self.j.map(Value::from));
        put("model.delta", self.delta.map(Value::from));
        put("model.gamma", self.gamma.map(Value::from));
        put("model.nu", self.nu.map(Value::from));
        put("n", self.n.map(Value::from));
        put("engine", self.engine.clone().map(Value::from));
        put("dmrg.chi_max", self.chi.map(Value::from));
        put("evolution.chi_max", self.chi.map(Value::from));
        put("evolution.dt", self.dt.map(Value::from));
        put("evolution.t_max", self.t_max.map(Value::from));
        put("probe.site", self.site.map(Value::from));
        put("probe.directions", self.directions.clone().map(Value::from));
        put("dmrg.seed", self.seed.map(Value::from));
        put("output.dir", self.out.as_ref().map(|p| Value::from(p.display().to_string())));
        put("workers", self.workers.map(Value::from));
        if self.corrupt_fk {
            put("verify.corrupt_fk", Some(Value::from(true)));
        }
        if let Some(r) = &self.lambda_range {
            let parts: Vec<&str> = r.split(':').collect();
            let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
            match nums.as_deref() {
                Some([a, b, c]) => {
                    put("lambda.start", Some(Value::from(*a)));
                    put("lambda.stop", Some(Value::from(*b)));
                    put("lambda.step", Some(Value::from(*c)));
                }
                _ => return Err(ConfigError(format!("--lambda-range expects START:STOP:STEP, got `{r}`"))),
            }
        }
        layers.push(f);
        Ok(layers)
    }
}

/// Failure with the exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(lgprobe::Error),
    NotConverged(String),
    VerifyFailed(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        use lgprobe::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(E::InvalidInput(_) | E::Validation(_) | E::ResourceGuard(_) | E::Unsupported(_)) => 2,
            CliError::Lib(E::NonConvergence { .. } | E::NumericalFailure { .. } | E::Breakdown { .. }) => 3,
            CliError::Lib(_) => 1,
            CliError::NotConverged(_) => 3,
            CliError::VerifyFailed(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::NotConverged(m) => write!(f, "not converged: {m}"),
            CliError::VerifyFailed(n) => write!(f, "verification failed: {n} check(s) out of bounds"),
        }
    }
}

impl From<lgprobe::Error> for CliError {
    fn from(e: lgprobe::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.cmd {
        Command::Ground(c)
        | Command::Correlate(c)
        | Command::Lgi(c)
        | Command::Sweep(c)
        | Command::Verify(c) => c,
    };
    let cfg = RunConfig::resolve(&common.layers()?)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(
        cfg.out_dir.join("run_config.toml"),
        format!("# config_hash={}\n{}", cfg.hash(), cfg.canonical()),
    )?;
    match cli.cmd {
        Command::Ground(_) => commands::ground(&cfg),
        Command::Correlate(_) => commands::correlate(&cfg),
        Command::Lgi(_) => commands::lgi(&cfg),
        Command::Sweep(_) => commands::sweep(&cfg),
        Command::Verify(_) => commands::verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lgprobe: {e}");
            ExitCode::from(e.code())
        }
    }
}

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rvfield_cli::config::load;
use rvfield_cli::error::{CliError, CliResult};
use rvfield_cli::runner::{configured_steps, Runner, Step};

#[derive(Parser)]
#[command(name = "rvfield", version, about = "Extremes of regularly varying fields on Z^k")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the config's `out`, else ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Shape census and the shape analysis of Λ.
    Census,
    /// Simulate field realizations.
    Simulate,
    /// Estimate the spectral tail field.
    Tailfield,
    /// Time-change identity checks against the exact tail sampler.
    Timechange,
    /// Empirical vs limit Laplace functionals.
    Laplace,
    /// Extremal index: block estimates and limit forms.
    Theta,
    /// Anti-clustering diagnostic.
    Ac,
    /// Fréchet fit of normalized maxima.
    Frechet,
    /// Every step with a config section.
    Run,
}

fn execute(cli: &Cli) -> CliResult<()> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let threads = cli.threads.or(cfg.threads);
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let steps: BTreeSet<Step> = match cli.cmd {
        Cmd::Run => configured_steps(&cfg),
        Cmd::Census => [Step::Census].into(),
        Cmd::Simulate => [Step::Simulate].into(),
        Cmd::Tailfield => [Step::Tailfield].into(),
        Cmd::Timechange => [Step::Timechange].into(),
        Cmd::Laplace => [Step::Laplace].into(),
        Cmd::Theta => [Step::Theta].into(),
        Cmd::Ac => [Step::Ac].into(),
        Cmd::Frechet => [Step::Frechet].into(),
    };
    let m = Runner::new(cfg, out.clone())?.run(&steps)?;
    println!("{} step(s) written to {} ({:.1}s)", m.steps.len(), out.display(), m.wall_clock_seconds);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use clap::{Parser, Subcommand};
use orthowalk_cli::config::{self, GenerateConfig, TilingSpec};
use orthowalk_cli::experiments::{self, CmdError, CmdResult};

#[derive(Parser)]
#[command(name = "orthowalk", version, about = "Experiments on orthogonal tilings and their random walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the JSON configuration (for `verify`: the tiling file).
    #[arg(long, global = true)]
    config: Option<String>,
    /// Override the seed(s) in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads (fallback: ORTHOWALK_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a tiling or counterexample graph and write its JSON file.
    Generate,
    /// Solve a Dirichlet problem for a registry harmonic and emit CSV.
    Solve,
    /// Run a single random walk and emit its trace as CSV.
    Walk,
    /// Exit-law experiment on a ball across refinement levels.
    HarmonicMeasure,
    /// Hitting-probability experiment on the sphere-packing graph.
    Counterexample,
    /// Multi-level convergence study with per-level bound checks.
    Convergence,
    /// Check the structural invariants of a tiling file.
    Verify,
}

fn thread_count(cli: &Cli) -> Option<usize> {
    cli.threads.or_else(|| {
        std::env::var("ORTHOWALK_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
}

fn require_config(cli: &Cli) -> CmdResult<&str> {
    cli.config
        .as_deref()
        .ok_or_else(|| CmdError::Config("--config is required".to_string()))
}

fn override_seed<T>(seed: Option<u64>, cfg: T, apply: impl FnOnce(T, u64) -> T) -> T {
    match seed {
        Some(s) => apply(cfg, s),
        None => cfg,
    }
}

fn run(cli: &Cli) -> CmdResult<(String, String)> {
    match cli.command {
        Command::Generate => {
            let cfg: GenerateConfig = config::load(require_config(cli)?)?;
            let cfg = override_seed(cli.seed, cfg, |mut c, s| {
                match &mut c {
                    GenerateConfig::Poisson { seed, .. } | GenerateConfig::Gmc { seed, .. } => {
                        *seed = s
                    }
                    _ => {}
                }
                c
            });
            experiments::cmd_generate(&cfg)
        }
        Command::Solve => {
            let cfg: config::SolveConfig = config::load(require_config(cli)?)?;
            let cfg = override_seed(cli.seed, cfg, |mut c, s| {
                c.tiling = c.tiling.with_seed(s);
                c
            });
            Ok((experiments::cmd_solve(&cfg)?, String::new()))
        }
        Command::Walk => {
            let cfg: config::WalkConfig = config::load(require_config(cli)?)?;
            let cfg = override_seed(cli.seed, cfg, |mut c, s| {
                match &mut c {
                    config::WalkConfig::Tiling { seed, .. }
                    | config::WalkConfig::Counterexample { seed, .. } => *seed = s,
                }
                c
            });
            Ok((experiments::cmd_walk(&cfg)?, String::new()))
        }
        Command::HarmonicMeasure => {
            let cfg: config::HarmonicMeasureConfig = config::load(require_config(cli)?)?;
            let cfg = override_seed(cli.seed, cfg, |mut c, s| {
                c.seed = s;
                c
            });
            Ok((experiments::cmd_harmonic_measure(&cfg)?, String::new()))
        }
        Command::Counterexample => {
            let cfg: config::CounterexampleConfig = config::load(require_config(cli)?)?;
            let cfg = override_seed(cli.seed, cfg, |mut c, s| {
                c.seed = s;
                c
            });
            Ok((experiments::cmd_counterexample(&cfg)?, String::new()))
        }
        Command::Convergence => {
            let cfg: config::ConvergenceConfig = config::load(require_config(cli)?)?;
            let cfg = override_seed(cli.seed, cfg, |mut c, s| {
                c.levels = c
                    .levels
                    .iter()
                    .map(|spec: &TilingSpec| spec.with_seed(s))
                    .collect();
                c
            });
            Ok((experiments::cmd_convergence(&cfg)?, String::new()))
        }
        Command::Verify => Ok((experiments::cmd_verify(require_config(cli)?)?, String::new())),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = thread_count(&cli) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("config error: thread pool: {e}");
            std::process::exit(2);
        }
    }
    match run(&cli) {
        Ok((file_output, stdout_note)) => {
            print!("{stdout_note}");
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, file_output) {
                        eprintln!("config error: writing {path}: {e}");
                        std::process::exit(2);
                    }
                }
                None => print!("{file_output}"),
            }
        }
        Err(e) => {
            if let CmdError::Invariant(failures) = &e {
                // Machine-readable failure list on stdout.
                println!(
                    "{}",
                    serde_json::json!({ "pass": false, "failures": failures })
                );
            }
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}

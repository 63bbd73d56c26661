use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use antibunch::config::RunConfig;
use antibunch::experiments::{run, Command, RunError};

/// Photon statistics of driven emitter pairs.
///
/// Settings come from the built-in defaults, then `--config`, then `--set`
/// overrides, then `--seed`. Data files, `resolved.conf` and `manifest.json`
/// are written to `--out`.
#[derive(Parser, Debug)]
#[command(name = "antibunch", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (overrides the `seed` key).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override one configuration key, e.g. `--set delta12=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Print every configuration key with its default and exit.
    #[arg(long, global = true)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Doubly-excited population of the undamped pair.
    Analytic,
    /// g²(τ) of a Poisson mixture of one- and two-atom emitters.
    G2,
    /// g²(0) and brightness over a grid of couplings.
    Sweep,
    /// Collective coupling map around the nanosphere.
    TipMap,
    /// Randomly placed emitters near the nanosphere.
    TipExperiment,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Analytic => Command::Analytic,
            Cmd::G2 => Command::G2,
            Cmd::Sweep => Command::Sweep,
            Cmd::TipMap => Command::TipMap,
            Cmd::TipExperiment => Command::TipExperiment,
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();

    if cli.print_defaults {
        print!("{}", RunConfig::default().render());
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("error: a command is required (analytic, g2, sweep, tip-map, tip-experiment)");
        return ExitCode::from(2);
    };

    let threads = cli.threads.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    if threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: cannot start worker pool: {e}");
        return ExitCode::from(1);
    }

    let outcome = resolve(&cli).and_then(|cfg| run(cmd.into(), &cfg, &cli.out, threads));
    match outcome {
        Ok(manifest) => {
            for o in &manifest.outputs {
                eprintln!("wrote {} ({} bytes)", cli.out.join(&o.file).display(), o.bytes);
            }
            eprintln!("done in {:.2} s", manifest.wall_time_seconds);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

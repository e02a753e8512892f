use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skinlab_cli::commands::{output_dir, run, run_all, Context};
use skinlab_cli::config::Command;
use skinlab_cli::{load_config, recipes, CliResult};

#[derive(Parser)]
#[command(
    name = "skinlab",
    version,
    about = "Magnetic control of the non-Hermitian skin effect"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    exec: Exec,
}

#[derive(Args)]
struct Exec {
    /// Output directory; overrides `[run] output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Reserved; nothing is stochastic at present.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues, mean distribution, IPR and OBC/PBC comparison.
    Spectrum(Common),
    /// Grid over the `[[sweep]]` axes.
    Sweep(Common),
    /// Bloch, flux-insertion and real-space winding numbers.
    Winding(Common),
    /// Transfer-matrix determinant, identity gap and Lyapunov exponents.
    Transfer(Common),
    /// Finite 2D lattice on a masked geometry.
    Geometry2d(Common),
    /// Print a figure configuration, or run it with `--run`.
    Recipe {
        /// Recipe name; omit to list them.
        name: Option<String>,
        #[arg(long)]
        run: bool,
        #[command(flatten)]
        exec: Exec,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    let (command, common) = match cli.command {
        Cmd::Spectrum(c) => (Command::Spectrum, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Winding(c) => (Command::Winding, c),
        Cmd::Transfer(c) => (Command::Transfer, c),
        Cmd::Geometry2d(c) => (Command::Geometry2d, c),
        Cmd::Recipe { name: None, .. } => {
            for name in recipes::names() {
                println!("{name}");
            }
            return Ok(());
        }
        Cmd::Recipe {
            name: Some(name),
            run: false,
            ..
        } => {
            print!("{}", recipes::recipe_text(&name)?);
            return Ok(());
        }
        Cmd::Recipe {
            name: Some(name),
            run: true,
            exec,
        } => {
            let config = recipes::figure_recipe(&name)?;
            let out = exec.out.unwrap_or_else(|| PathBuf::from("out").join(&name));
            let ctx = Context::new(out, exec.workers);
            for path in run_all(&config, &ctx)? {
                println!("{}", path.display());
            }
            return Ok(());
        }
    };
    let config = load_config(&common.config)?;
    let ctx = Context::new(
        output_dir(&config, common.exec.out.as_deref()),
        common.exec.workers,
    );
    for path in run(command, &config, &ctx)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("skinlab: {e}");
            ExitCode::FAILURE
        }
    }
}

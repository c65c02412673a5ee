use clap::{Args, Parser, Subcommand, ValueEnum};
use resonance_cli::config::{load_config, FlagDefaults, InputKind, Rect, Task};
use resonance_cli::validate::{has_errors, validate};
use resonance_cli::{exit, run, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Resonance structure of point interactions, quantum graphs and layered crystals.
#[derive(Parser)]
#[command(name = "resonance-atlas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Point interactions in R^3.
    AnalyzePoints(Common),
    /// Noncompact quantum graph.
    AnalyzeGraph(Common),
    /// Layered 1-D photonic crystal.
    AnalyzeCrystal(Common),
    /// Check a configuration and print diagnostics as JSON.
    Validate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Points,
    Graph,
    Crystal,
}

impl From<Kind> for InputKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Points => InputKind::Points,
            Kind::Graph => InputKind::Graph,
            Kind::Crystal => InputKind::Crystal,
        }
    }
}

/// Values in the config file take precedence over these flags.
#[derive(Args)]
struct Common {
    /// JSON file with `input` and optional `search`, `tolerances`, `tasks`, `lattice`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',')]
    tasks: Vec<Task>,
    /// Search rectangle `x0,x1,y0,y1` in the k-plane; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    rect: Vec<Rect>,
    #[arg(long)]
    tol_freq: Option<f64>,
    #[arg(long)]
    tol_coeff: Option<f64>,
    #[arg(long)]
    tol_root: Option<f64>,
    /// Fail unless the zeros form an exact commensurable lattice.
    #[arg(long)]
    lattice: bool,
    #[arg(long, default_value = "atlas-out")]
    out_dir: PathBuf,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("RESONANCE_ATLAS_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::input(
            "RESONANCE_ATLAS_THREADS",
            format!("expected a positive integer, got {v:?}"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::input("RESONANCE_ATLAS_THREADS", e))
}

fn analyze(kind: InputKind, c: Common) -> Result<(), CliError> {
    let flags = FlagDefaults {
        tasks: c.tasks,
        rects: c.rect,
        freq_tol: c.tol_freq,
        coeff_tol: c.tol_coeff,
        root_tol: c.tol_root,
        lattice: c.lattice,
    };
    let config = load_config(&c.config, kind, &flags)?;
    for d in validate(&config) {
        eprintln!("{d}");
    }
    run(&config, &c.out_dir)?;
    println!(
        "{}",
        c.out_dir
            .join(resonance_cli::pipeline::SUMMARY_FILE)
            .display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::AnalyzePoints(c) => analyze(InputKind::Points, c),
        Command::AnalyzeGraph(c) => analyze(InputKind::Graph, c),
        Command::AnalyzeCrystal(c) => analyze(InputKind::Crystal, c),
        Command::Validate { kind, config } => {
            let cfg = load_config(&config, kind.into(), &FlagDefaults::default())?;
            let diags = validate(&cfg);
            println!(
                "{}",
                serde_json::to_string_pretty(&diags).expect("diagnostics serialize")
            );
            if has_errors(&diags) {
                Err(CliError::Input("configuration has errors".into()))
            } else {
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("resonance-atlas: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

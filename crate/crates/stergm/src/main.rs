//! Thin command-line driver over the library pipeline. Field precedence:
//! command-line flags override values from `--config`, which override the
//! built-in defaults.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stergm::pipeline::{run, RunConfig, Stage};

#[derive(Parser)]
#[command(
    name = "stergm",
    about = "Separable temporal network models with time-varying coefficients",
    long_about = "Batch pipeline for dynamic network panels: ingestion, penalized \
                  estimation, coefficient curves, functional PCA of actor effects, \
                  rolling out-of-sample scoring and simulation-based goodness of fit.\n\
                  Precedence: flags > --config file > defaults.\n\
                  Exit codes: 0 success, 1 input error, 2 contract violation, 3 numerical failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Valued edge-list CSV: period,sender,receiver,value.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Monadic covariate CSV: period,actor,gdp,milex,polity.
    #[arg(long)]
    monadic: Option<PathBuf>,
    /// Dyadic covariate CSV: period,actor_i,actor_j,alliance,distance_km.
    #[arg(long)]
    dyadic: Option<PathBuf>,
    /// Actor registry CSV: actor,first,last,predecessor.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Binarization threshold (edge present when value is strictly above).
    #[arg(long)]
    threshold: Option<f64>,
    /// Aggregate this many consecutive years into one period.
    #[arg(long)]
    window: Option<usize>,
    /// Random seed for simulation stages.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Replicate count for simulation stages.
    #[arg(long)]
    n_sims: Option<usize>,
    /// Inherit lagged ties from registered predecessor states.
    #[arg(long)]
    use_predecessors: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load, window-aggregate and binarize the panel; write a summary.
    Ingest(CommonArgs),
    /// Fit the configured model and serialize the result.
    Fit(CommonArgs),
    /// Fit and write coefficient curves with error bands.
    Curves {
        #[command(flatten)]
        common: CommonArgs,
        /// Evaluate curves on this many equidistant grid points instead of
        /// the observed periods.
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Fit and decompose the actor random curves.
    Fpca {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of retained components.
        #[arg(long)]
        components: Option<usize>,
    },
    /// Rolling out-of-sample prediction with PR and ROC areas.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// First fitted step period.
        #[arg(long)]
        start: Option<i32>,
        /// Last horizon period.
        #[arg(long)]
        end: Option<i32>,
    },
    /// Simulate next-period replicate networks and write their statistics.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Step period whose horizon is simulated.
        #[arg(long)]
        step: Option<i32>,
    },
    /// Simulation-based goodness of fit across the panel.
    Gof(CommonArgs),
    /// Generate the bundled synthetic fixture and a ready-made config.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of actors.
        #[arg(long)]
        actors: Option<usize>,
        /// Number of periods.
        #[arg(long)]
        periods: Option<i32>,
        /// Stagger actor entry and exit.
        #[arg(long)]
        staggered: bool,
    },
}

fn apply_common(config: &mut RunConfig, args: &CommonArgs) {
    if let Some(v) = &args.out_dir {
        config.out_dir = v.clone();
    }
    if let Some(v) = &args.edges {
        config.edges = Some(v.clone());
    }
    if let Some(v) = &args.monadic {
        config.monadic = Some(v.clone());
    }
    if let Some(v) = &args.dyadic {
        config.dyadic = Some(v.clone());
    }
    if let Some(v) = &args.registry {
        config.registry = Some(v.clone());
    }
    if let Some(v) = args.threshold {
        config.threshold = v;
    }
    if let Some(v) = args.window {
        config.window = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.threads {
        config.threads = Some(v);
    }
    if let Some(v) = args.n_sims {
        config.n_sims = v;
    }
    if args.use_predecessors {
        config.use_predecessors = true;
    }
}

fn build(args: &CommonArgs) -> stergm::Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply_common(&mut config, args);
    Ok(config)
}

fn dispatch(command: &Command) -> stergm::Result<()> {
    let (config, stage) = match command {
        Command::Ingest(common) => (build(common)?, Stage::Ingest),
        Command::Fit(common) => (build(common)?, Stage::Fit),
        Command::Curves { common, grid_points } => {
            let mut config = build(common)?;
            if grid_points.is_some() {
                config.grid_points = *grid_points;
            }
            (config, Stage::Curves)
        }
        Command::Fpca { common, components } => {
            let mut config = build(common)?;
            if let Some(c) = components {
                config.fpca_components = *c;
            }
            (config, Stage::Fpca)
        }
        Command::Evaluate { common, start, end } => {
            let mut config = build(common)?;
            if start.is_some() {
                config.eval_start = *start;
            }
            if end.is_some() {
                config.eval_end = *end;
            }
            (config, Stage::Evaluate)
        }
        Command::Simulate { common, step } => {
            let mut config = build(common)?;
            if step.is_some() {
                config.sim_step = *step;
            }
            (config, Stage::Simulate)
        }
        Command::Gof(common) => (build(common)?, Stage::Gof),
        Command::Synth {
            common,
            actors,
            periods,
            staggered,
        } => {
            let mut config = build(common)?;
            if let Some(a) = actors {
                config.synth.n_actors = *a;
            }
            if let Some(p) = periods {
                config.synth.n_periods = *p;
            }
            if *staggered {
                config.synth.staggered_entry = true;
            }
            (config, Stage::Synth)
        }
    };
    let summary = run(&config, stage)?;
    for note in &summary.notes {
        eprintln!("note: {note}");
    }
    println!(
        "{} wrote {} files to {}",
        stage.name(),
        summary.outputs.len(),
        config.out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let class = match e.exit_code() {
                1 => "input",
                2 => "contract",
                _ => "numerical",
            };
            eprintln!(
                "{}",
                serde_json::json!({"error": {"class": class, "message": e.to_string()}})
            );
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

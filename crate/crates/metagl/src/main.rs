use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use metagl::commands;
use metagl::error::{Categorize, CmdResult, FailureKind};
use metagl::logging::log;
use metagl::RunConfig;

#[derive(Parser)]
#[command(name = "metagl", version, about = "Evaluation-free selection of graph learning models")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Directory of edge-list graph files.
    #[arg(long, global = true)]
    graphs: Option<PathBuf>,
    /// Feature CSV (default: <out-dir>/features.csv).
    #[arg(long, global = true)]
    features: Option<PathBuf>,
    /// Performance CSV.
    #[arg(long, global = true)]
    perf: Option<PathBuf>,
    /// Model bundle (default: <out-dir>/model.json).
    #[arg(long, global = true)]
    bundle: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract meta-graph features from every graph in a directory.
    Features,
    /// Train the meta-learner on features and observed performance.
    Train,
    /// Rank all models for one new graph.
    Select {
        graph: PathBuf,
        /// Also write the ranking CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate selectors and run the sparsity and perturbation sweeps.
    Evaluate {
        /// Use the planted synthetic corpus instead of files.
        #[arg(long)]
        synthetic: bool,
        #[arg(long)]
        folds: Option<usize>,
        /// Comma-separated selector names.
        #[arg(long, value_delimiter = ',')]
        selectors: Option<Vec<String>>,
    },
    /// Write the planted synthetic corpus as edge lists and a performance CSV.
    Synth {
        /// Destination directory.
        dir: PathBuf,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn resolve(common: &Common, command: &Command) -> CmdResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).kind(FailureKind::Config)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    let p = &mut cfg.paths;
    if let Some(d) = &common.out_dir {
        p.output_dir = d.clone();
    }
    for (src, dst) in [
        (&common.graphs, &mut p.graph_dir),
        (&common.features, &mut p.features),
        (&common.perf, &mut p.performance),
        (&common.bundle, &mut p.bundle),
    ] {
        if src.is_some() {
            *dst = src.clone();
        }
    }
    if let Command::Evaluate { synthetic, folds, selectors } = command {
        cfg.eval.synthetic |= *synthetic;
        if let Some(f) = folds {
            cfg.eval.folds = *f;
        }
        if let Some(s) = selectors {
            cfg.eval.selectors = s.clone();
        }
    }
    cfg.validate().kind(FailureKind::Config)?;
    Ok(cfg)
}

fn run(cli: Cli) -> CmdResult<()> {
    let cfg = resolve(&cli.common, &cli.command)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .kind(FailureKind::Runtime)?;
    log("start", &[("config_hash", &cfg.hash()), ("seed", &cfg.seed)]);
    match &cli.command {
        Command::Features => commands::cmd_features(&cfg).map(drop),
        Command::Train => commands::cmd_train(&cfg).map(drop),
        Command::Select { graph, out } => {
            let sel = commands::cmd_select(&cfg, graph, out.as_deref())?;
            std::io::stdout().write_all(sel.text.as_bytes()).kind(FailureKind::Runtime)
        }
        Command::Evaluate { .. } => commands::cmd_evaluate(&cfg).map(drop),
        Command::Synth { dir } => commands::cmd_synth(&cfg, dir).map(drop),
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            log("error", &[("kind", &f.kind.name()), ("message", &format!("{:#}", f.error))]);
            ExitCode::from(f.kind.exit_code() as u8)
        }
    }
}

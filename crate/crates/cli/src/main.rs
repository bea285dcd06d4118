use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hetnet::experiment::{emit_outputs, preset, run_experiment, ExperimentConfig, PRESET_IDS};
use hetnet::netgen::{build_network, sample_node_attributes};
use hetnet::rng::derive_seed;
use hetnet::{Error, Mode};

#[derive(Parser)]
#[command(name = "hetnet", version, about = "Heterogeneous epidemics on weighted configuration-model networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a JSON configuration and write <id>.csv and <id>.plot.
    Run(RunArgs),
    /// Print a built-in preset as JSON.
    DumpPreset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_IDS))]
        id: String,
    },
    /// Build one network at a grid point and write it as an edge list.
    Graph(GraphArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_IDS))]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Simulate,
    Both,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Population size for simulation.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's `output`, else the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    source: Source,
    /// Index into the sweep grid.
    #[arg(long, default_value_t = 0)]
    point: usize,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Edge-list file to write.
    #[arg(long)]
    out: PathBuf,
}

fn load(source: &Source) -> Result<ExperimentConfig, Error> {
    match (&source.preset, &source.config) {
        (Some(id), _) => Ok(preset(id).expect("restricted by clap")),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            ExperimentConfig::from_json(&text)
        }
        (None, None) => unreachable!("clap requires one source"),
    }
}

fn run(args: RunArgs) -> Result<(), Error> {
    let mut config = load(&args.source)?;
    if let Some(mode) = args.mode {
        config.mode = match mode {
            ModeArg::Analytic => Mode::Analytic,
            ModeArg::Simulate => Mode::Simulate,
            ModeArg::Both => Mode::Both,
        };
    }
    if let Some(n) = args.n {
        config.simulation.n = n;
    }
    if let Some(r) = args.replicates {
        config.simulation.replicates = r;
    }
    if let Some(s) = args.seed {
        config.simulation.seed = s;
    }
    let out = args
        .out
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let table = run_experiment(&config)?;
    let files = emit_outputs(&table, &out)?;
    println!("{}", files.csv.display());
    println!("{}", files.plot.display());
    Ok(())
}

fn graph(args: GraphArgs) -> Result<(), Error> {
    let config = load(&args.source)?;
    config.validate()?;
    let value = *config.sweep.values.get(args.point).ok_or_else(|| {
        Error::InvalidConfig(vec![format!(
            "point: {} out of range for {} grid values",
            args.point,
            config.sweep.values.len()
        )])
    })?;
    let s = config.scenario(value)?;
    let attrs = sample_node_attributes(args.n, &s.degrees, &s.kernel, &s.traits, derive_seed(args.seed, 0))?;
    let (g, diag) = build_network(&attrs, derive_seed(args.seed, 1));
    let file = fs::File::create(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    g.write_edge_list(std::io::BufWriter::new(file))
        .map_err(|source| Error::Io {
            path: args.out.clone(),
            source,
        })?;
    eprintln!(
        "{} edges, {} self-loops, {} multi-edges",
        g.edges().len(),
        diag.self_loops,
        diag.multi_edges
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::DumpPreset { id } => {
            println!("{}", preset(&id).expect("restricted by clap").to_json());
            Ok(())
        }
        Command::Graph(args) => graph(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

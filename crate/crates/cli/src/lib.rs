//! The `oversmooth` command line.
//!
//! [`run_cli`] parses arguments, dispatches to a subcommand and maps the
//! outcome to an exit code: 0 on success, 1 on a runtime failure and 2 on a
//! usage error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod sweep;
mod train;

use oversmooth::continuous::Integrator;
use oversmooth::harness::{GraphSource, ModelKind, WeightMode};
use oversmooth::io::{LoadedGraph, PlotScale};
use oversmooth::layers::Activation;
use oversmooth::{GraphKind, Normalization};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "oversmooth", version, about = "Measure over-smoothing in deep graph neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate random features through a deep untrained model and record measures per layer.
    Propagate(PropagateArgs),
    /// Run every configuration in a TOML file and fit each recorded series.
    Sweep(SweepArgs),
    /// Fit exponential and algebraic decay to the series in a CSV file.
    FitDecay(FitArgs),
    /// Sample the node-similarity axioms for a measure on a graph.
    Axioms(AxiomArgs),
    /// Train shared-weight GCNs at several depths and record accuracy and energy profiles.
    Train(TrainArgs),
    /// Integrate continuous-time graph dynamics and record a measure over time.
    Ct(CtArgs),
    /// Render series from CSV files as an SVG line plot.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
struct GraphArgs {
    /// Edge-list file.
    #[arg(long, value_name = "PATH")]
    graph: Option<PathBuf>,
    /// Generated graph: grid:HxW, ring:N, complete:N, star:N or barbell:K.
    #[arg(long, value_name = "KIND")]
    synthetic: Option<GraphKind>,
}

impl GraphArgs {
    fn source(&self) -> GraphSource {
        match (&self.graph, self.synthetic) {
            (Some(path), _) => GraphSource::File(path.clone()),
            (None, Some(kind)) => GraphSource::Synthetic(kind),
            (None, None) => unreachable!("clap requires one graph argument"),
        }
    }

    fn load(&self) -> anyhow::Result<LoadedGraph> {
        Ok(match self.source() {
            GraphSource::File(path) => oversmooth::io::load_graph(&path)?,
            GraphSource::Synthetic(kind) => {
                let graph = oversmooth::Graph::generate(kind)?;
                let ids = (0..graph.node_count()).map(|i| i.to_string()).collect();
                LoadedGraph { graph, ids }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ActivationArg {
    Identity,
    Relu,
    Tanh,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Identity => Activation::Identity,
            ActivationArg::Relu => Activation::Relu,
            ActivationArg::Tanh => Activation::Tanh,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormalizationArg {
    Plain,
    Degree,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::Plain => Normalization::Plain,
            NormalizationArg::Degree => Normalization::Degree,
        }
    }
}

#[derive(Debug, Args)]
struct PropagateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// gcn, gat, sage, resgcn, gcnii, pairnorm-gcn, graphcon-gcn, g2-gcn or dropedge-gcn.
    #[arg(long)]
    model: ModelKind,
    /// Number of layers N; layers 0..=N are recorded.
    #[arg(long, default_value_t = 128)]
    layers: usize,
    /// Feature width m.
    #[arg(long, default_value_t = 128)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    bias: Switch,
    /// per-layer or shared.
    #[arg(long, default_value = "per-layer")]
    weights: WeightMode,
    /// Comma-separated measure names: dirichlet, energy, mad.
    #[arg(long, value_delimiter = ',', default_value = "dirichlet")]
    measure: Vec<String>,
    /// Norm exponent of the Dirichlet measures.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Plain)]
    normalization: NormalizationArg,
    #[arg(long, value_enum, default_value_t = ActivationArg::Relu)]
    activation: ActivationArg,
    /// Output CSV; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// TOML file with [defaults], [fit] and [[run]] tables.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Series CSV of every successful run.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Decay fits as a JSON array.
    #[arg(long, value_name = "PATH")]
    fits: Option<PathBuf>,
    /// Worker threads; defaults to OVERSMOOTH_THREADS or all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
struct FitFlags {
    /// Leading samples dropped before fitting.
    #[arg(long, default_value_t = 0)]
    skip_leading: usize,
    /// Values below this count as numerically zero.
    #[arg(long, default_value_t = 1e-12)]
    floor: f64,
    /// Smallest rate accepted as exponential decay.
    #[arg(long, default_value_t = 0.05)]
    min_rate: f64,
    #[arg(long, default_value_t = 0.95)]
    min_r2: f64,
}

impl FitFlags {
    fn options(&self) -> oversmooth::FitOptions {
        oversmooth::FitOptions {
            floor: self.floor,
            min_rate: self.min_rate,
            min_r2: self.min_r2,
            skip_leading: self.skip_leading,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Series CSV.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// fit.json; printed to standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    fit: FitFlags,
}

#[derive(Debug, Args)]
struct AxiomArgs {
    /// dirichlet, energy or mad.
    #[arg(long, default_value = "dirichlet")]
    measure: oversmooth::Measure,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Feature width of the sampled matrices.
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Sample strictly positive features.
    #[arg(long)]
    positive: bool,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Plain)]
    normalization: NormalizationArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BiasChoice {
    On,
    Off,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Edge-list file.
    #[arg(long, value_name = "PATH")]
    graph: PathBuf,
    /// Lines `node class [split]`.
    #[arg(long, value_name = "PATH")]
    labels: PathBuf,
    /// Lines `node train|val|test`, overriding splits in the label file.
    #[arg(long, value_name = "PATH")]
    splits: Option<PathBuf>,
    /// Lines `node f1 f2 ...`; random N(0,1) features when omitted.
    #[arg(long, value_name = "PATH")]
    features: Option<PathBuf>,
    /// Width of the random features used without --features.
    #[arg(long, default_value_t = 32)]
    feature_dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,8,32,64")]
    depths: Vec<usize>,
    /// Train with bias, without, or both twins.
    #[arg(long, value_enum, default_value_t = BiasChoice::Both)]
    bias: BiasChoice,
    /// shared or per-layer.
    #[arg(long, default_value = "shared")]
    weights: WeightMode,
    /// Hidden width.
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    optimizer: OptimizerArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving accuracy.csv, energy.csv, epochs.csv and fit.json.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dynamics {
    Heat,
    Graphcon,
    Gcn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IntegratorArg {
    Euler,
    Rk4,
}

impl From<IntegratorArg> for Integrator {
    fn from(i: IntegratorArg) -> Self {
        match i {
            IntegratorArg::Euler => Integrator::Euler,
            IntegratorArg::Rk4 => Integrator::Rk4,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ForcingArg {
    Laplacian,
    Gcn,
}

#[derive(Debug, Args)]
struct CtArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_enum)]
    dynamics: Dynamics,
    #[arg(long, default_value_t = 20.0)]
    t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, value_enum, default_value_t = IntegratorArg::Rk4)]
    integrator: IntegratorArg,
    /// Steps between samples; about 100 samples when omitted.
    #[arg(long)]
    stride: Option<usize>,
    /// Feature width.
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// GraphCON restoring coefficient.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// GraphCON damping coefficient.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// GraphCON coupling.
    #[arg(long, value_enum, default_value_t = ForcingArg::Laplacian)]
    forcing: ForcingArg,
    /// Defaults to identity for graphcon and relu for gcn.
    #[arg(long, value_enum)]
    activation: Option<ActivationArg>,
    #[arg(long, default_value = "dirichlet")]
    measure: oversmooth::Measure,
    /// Output CSV; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    fit: FitFlags,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    LogLog,
    LogLinear,
}

impl From<ScaleArg> for PlotScale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::LogLog => PlotScale::LogLog,
            ScaleArg::LogLinear => PlotScale::LogLinear,
        }
    }
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Series CSV files.
    #[arg(long = "in", value_name = "PATH", required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// SVG output.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ScaleArg::LogLinear)]
    scale: ScaleArg,
    /// Keep only this measure.
    #[arg(long)]
    measure: Option<String>,
    #[arg(long)]
    title: Option<String>,
}

/// Runs the command line and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Propagate(a) => commands::propagate(a),
        Command::Sweep(a) => sweep::run(a),
        Command::FitDecay(a) => commands::fit(a),
        Command::Axioms(a) => commands::axioms(a),
        Command::Train(a) => train::run(a),
        Command::Ct(a) => commands::ct(a),
        Command::Plot(a) => commands::plot(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

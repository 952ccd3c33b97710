//! Untrained propagation experiments: random features, random weights,
//! `N` layers, every measure recorded per layer.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphKind};
use crate::layers::{
    self, Activation, Coupling, G2Params, GatParams, GcnParams, GcniiParams, GraphconParams,
    GraphconState, SageParams,
};
use crate::matrix::{FeatureMatrix, Matrix};
use crate::measures::{fit_decay, DecayFit, FitOptions, Measure, MeasureSeries, Normalization};

/// Environment variable bounding sweep parallelism.
pub const THREADS_ENV: &str = "OVERSMOOTH_THREADS";

const FEATURE_STREAM: u64 = 0;
const WEIGHT_STREAM: u64 = 1;
const DROPEDGE_STREAM: u64 = 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gcn,
    Gat,
    Sage,
    Resgcn,
    Gcnii,
    PairnormGcn,
    GraphconGcn,
    G2Gcn,
    DropedgeGcn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::Gcn,
        ModelKind::Gat,
        ModelKind::Sage,
        ModelKind::Resgcn,
        ModelKind::Gcnii,
        ModelKind::PairnormGcn,
        ModelKind::GraphconGcn,
        ModelKind::G2Gcn,
        ModelKind::DropedgeGcn,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Gcn => "gcn",
            ModelKind::Gat => "gat",
            ModelKind::Sage => "sage",
            ModelKind::Resgcn => "resgcn",
            ModelKind::Gcnii => "gcnii",
            ModelKind::PairnormGcn => "pairnorm-gcn",
            ModelKind::GraphconGcn => "graphcon-gcn",
            ModelKind::G2Gcn => "g2-gcn",
            ModelKind::DropedgeGcn => "dropedge-gcn",
        }
    }

    /// Initialization used when the config does not override it.
    pub fn default_init(&self) -> InitScheme {
        match self {
            ModelKind::Sage => InitScheme::TorchLinear,
            _ => InitScheme::GlorotUniform,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    #[default]
    PerLayer,
    Shared,
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-layer" => Ok(WeightMode::PerLayer),
            "shared" => Ok(WeightMode::Shared),
            _ => Err(Error::invalid(format!("unknown weight mode '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// `U(±√(6/(fan_in + fan_out)))`
    GlorotUniform,
    /// `U(±1/√fan_in)`, the default of a fully connected layer in common
    /// deep-learning libraries.
    TorchLinear,
}

impl InitScheme {
    pub fn bound(&self, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            InitScheme::GlorotUniform => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            InitScheme::TorchLinear => 1.0 / (fan_in as f64).sqrt(),
        }
    }
}

fn sample_uniform(rows: usize, cols: usize, bound: f64, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

/// i.i.d. standard normal `v × m` features.
pub fn init_features(v: usize, m: usize, seed: u64) -> Result<FeatureMatrix> {
    if v == 0 || m == 0 {
        return Err(Error::InvalidSize(format!("feature matrix {v}x{m}")));
    }
    let mut rng = stream_rng(seed, FEATURE_STREAM);
    Ok(Matrix::from_fn(v, m, |_, _| rng.sample(StandardNormal)))
}

/// A `rows × cols` weight matrix drawn from `scheme`.
pub fn init_weights(rows: usize, cols: usize, seed: u64, scheme: InitScheme) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidSize(format!("weight matrix {rows}x{cols}")));
    }
    let mut rng = stream_rng(seed, WEIGHT_STREAM);
    Ok(sample_uniform(rows, cols, scheme.bound(rows, cols), &mut rng))
}

/// Where a run's graph comes from: a generator such as `grid:10x10` or an edge-list path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GraphSource {
    Synthetic(GraphKind),
    File(PathBuf),
}

impl GraphSource {
    pub fn load(&self) -> Result<Graph> {
        match self {
            GraphSource::Synthetic(kind) => Graph::generate(*kind),
            GraphSource::File(path) => Ok(crate::io::load_graph(path)?.graph),
        }
    }

    /// Short label for run ids.
    pub fn label(&self) -> String {
        match self {
            GraphSource::Synthetic(kind) => kind.to_string(),
            GraphSource::File(path) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::Synthetic(kind) => write!(f, "{kind}"),
            GraphSource::File(path) => write!(f, "{}", path.display()),
        }
    }
}

impl FromStr for GraphSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<GraphKind>() {
            Ok(kind) => Ok(GraphSource::Synthetic(kind)),
            Err(_) if s.is_empty() => Err(Error::invalid("empty graph source")),
            Err(_) => Ok(GraphSource::File(PathBuf::from(s))),
        }
    }
}

impl TryFrom<String> for GraphSource {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GraphSource> for String {
    fn from(s: GraphSource) -> String {
        s.to_string()
    }
}

/// Architecture hyperparameters shared by every run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    pub activation: Activation,
    /// Overrides the model's default weight initialization.
    pub init: Option<InitScheme>,
    pub pairnorm_scale: f64,
    pub graphcon: GraphconParams,
    pub g2_p: f64,
    pub gcnii_alpha: f64,
    /// `βₙ = ln(1 + λ/n)`.
    pub gcnii_lambda: f64,
    pub drop_rate: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            activation: Activation::Relu,
            init: None,
            pairnorm_scale: 1.0,
            graphcon: GraphconParams::default(),
            g2_p: 2.0,
            gcnii_alpha: 0.1,
            gcnii_lambda: 0.5,
            drop_rate: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub graph: GraphSource,
    pub depth: usize,
    pub width: usize,
    pub seed: u64,
    pub weight_mode: WeightMode,
    pub bias: bool,
    /// Measure names: `dirichlet`, `energy`, `mad`.
    pub measures: Vec<String>,
    /// Norm exponent for the Dirichlet measures.
    pub p: f64,
    pub normalization: Normalization,
    pub options: ModelOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Gcn,
            graph: GraphSource::Synthetic(GraphKind::Grid2d {
                height: 10,
                width: 10,
            }),
            depth: 128,
            width: 128,
            seed: 0,
            weight_mode: WeightMode::PerLayer,
            bias: false,
            measures: vec!["dirichlet".into()],
            p: 2.0,
            normalization: Normalization::Plain,
            options: ModelOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn new(model: ModelKind, graph: GraphSource, depth: usize, seed: u64) -> Self {
        Self {
            model,
            graph,
            depth,
            seed,
            ..Default::default()
        }
    }

    pub fn with_measures(mut self, names: &[&str]) -> Self {
        self.measures = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn run_id(&self) -> String {
        format!("{}:{}:{}", self.model, self.graph.label(), self.seed)
    }

    pub fn parsed_measures(&self) -> Result<Vec<Measure>> {
        if self.measures.is_empty() {
            return Err(Error::invalid("no measures requested"));
        }
        let mut seen = std::collections::BTreeSet::new();
        self.measures
            .iter()
            .map(|name| {
                let m = name.parse::<Measure>()?.with_options(self.p, self.normalization);
                if !seen.insert(m.name()) {
                    return Err(Error::invalid(format!("measure '{name}' requested twice")));
                }
                Ok(m)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::invalid("depth must be at least 1"));
        }
        if self.width == 0 {
            return Err(Error::invalid("width must be at least 1"));
        }
        self.parsed_measures()?;
        let o = &self.options;
        if !(o.pairnorm_scale > 0.0) {
            return Err(Error::invalid("PairNorm scale must be positive"));
        }
        if !(o.g2_p >= 0.0) {
            return Err(Error::invalid("G2 exponent must be >= 0"));
        }
        if !(0.0..=1.0).contains(&o.gcnii_alpha) || !(o.gcnii_lambda >= 0.0) {
            return Err(Error::invalid("GCNII needs alpha in [0, 1] and lambda >= 0"));
        }
        if !(0.0..=1.0).contains(&o.drop_rate) {
            return Err(Error::invalid("drop rate must lie in [0, 1]"));
        }
        Ok(())
    }

    fn init_scheme(&self) -> InitScheme {
        self.options.init.unwrap_or_else(|| self.model.default_init())
    }
}

/// One layer's random parameters.
enum LayerWeights {
    Gcn(GcnParams),
    Gat(GatParams),
    Sage(SageParams),
    G2 { coupling: Coupling, gate: G2Params },
    Gcnii(Matrix),
}

impl LayerWeights {
    fn sample(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let m = cfg.width;
        let scheme = cfg.init_scheme();
        let bound = scheme.bound(m, m);
        let bias_bound = 1.0 / (m as f64).sqrt();
        let weight = |rng: &mut ChaCha8Rng| sample_uniform(m, m, bound, rng);
        let bias = |rng: &mut ChaCha8Rng| {
            cfg.bias
                .then(|| (0..m).map(|_| rng.random_range(-bias_bound..=bias_bound)).collect())
        };
        Ok(match cfg.model {
            ModelKind::Gat => {
                let w = weight(rng);
                let att_bound = InitScheme::GlorotUniform.bound(1, m);
                let a = (0..2 * m).map(|_| rng.random_range(-att_bound..=att_bound)).collect();
                LayerWeights::Gat(GatParams::new(w, a, bias(rng))?)
            }
            ModelKind::Sage => {
                let ws = weight(rng);
                let wn = weight(rng);
                LayerWeights::Sage(SageParams::new(ws, wn, bias(rng))?)
            }
            ModelKind::G2Gcn => {
                let w = weight(rng);
                let main = GcnParams::new(w, bias(rng))?;
                let wg = weight(rng);
                let gate = GcnParams::new(wg, bias(rng))?;
                LayerWeights::G2 {
                    coupling: Coupling::Gcn(main),
                    gate: G2Params {
                        gate,
                        p: cfg.options.g2_p,
                    },
                }
            }
            ModelKind::Gcnii => LayerWeights::Gcnii(weight(rng)),
            _ => {
                let w = weight(rng);
                LayerWeights::Gcn(GcnParams::new(w, bias(rng))?)
            }
        })
    }
}

/// Runs `cfg.depth` layers on `g`, calling `visit(n, Xⁿ)` for `n = 0..=N`.
pub fn propagate_visit(
    cfg: &RunConfig,
    g: &Graph,
    mut visit: impl FnMut(usize, &FeatureMatrix) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    let act = cfg.options.activation;
    let x0 = init_features(g.node_count(), cfg.width, cfg.seed)?;
    visit(0, &x0)?;

    let mut weight_rng = stream_rng(cfg.seed, WEIGHT_STREAM);
    let mut drop_rng = stream_rng(cfg.seed, DROPEDGE_STREAM);
    let shared = match cfg.weight_mode {
        WeightMode::Shared => Some(LayerWeights::sample(cfg, &mut weight_rng)?),
        WeightMode::PerLayer => None,
    };

    let mut x = x0.clone();
    let mut velocity = Matrix::zeros(x.rows(), x.cols());
    for n in 1..=cfg.depth {
        let fresh;
        let weights = match &shared {
            Some(w) => w,
            None => {
                fresh = LayerWeights::sample(cfg, &mut weight_rng)?;
                &fresh
            }
        };
        x = match (cfg.model, weights) {
            (ModelKind::Gcn, LayerWeights::Gcn(p)) => layers::gcn_step(&x, g, p, act)?,
            (ModelKind::Gat, LayerWeights::Gat(p)) => layers::gat_step(&x, g, p, act)?,
            (ModelKind::Sage, LayerWeights::Sage(p)) => layers::sage_step(&x, g, p, act)?,
            (ModelKind::Resgcn, LayerWeights::Gcn(p)) => layers::resgcn_step(&x, g, p, act)?,
            (ModelKind::PairnormGcn, LayerWeights::Gcn(p)) => {
                layers::pairnorm_apply(&layers::gcn_step(&x, g, p, act)?, cfg.options.pairnorm_scale)?
            }
            (ModelKind::DropedgeGcn, LayerWeights::Gcn(p)) => {
                let dropped = layers::dropedge_sample(g, cfg.options.drop_rate, drop_rng.random())?;
                layers::gcn_step(&x, &dropped, p, act)?
            }
            (ModelKind::GraphconGcn, LayerWeights::Gcn(p)) => {
                let state = GraphconState {
                    x,
                    y: std::mem::replace(&mut velocity, Matrix::zeros(0, 0)),
                };
                let coupling = Coupling::Gcn(p.clone());
                let next = layers::graphcon_step(&state, g, &coupling, &cfg.options.graphcon, act)?;
                velocity = next.y;
                next.x
            }
            (ModelKind::G2Gcn, LayerWeights::G2 { coupling, gate }) => {
                layers::g2_step(&x, g, coupling, gate, act)?
            }
            (ModelKind::Gcnii, LayerWeights::Gcnii(w)) => {
                let params = GcniiParams {
                    alpha: cfg.options.gcnii_alpha,
                    beta: GcniiParams::beta_schedule(cfg.options.gcnii_lambda, n).min(1.0),
                    weight: w.clone(),
                };
                layers::gcnii_step(&x, &x0, g, &params, act)?
            }
            _ => unreachable!("weights are sampled for the configured model"),
        };
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("features at layer {n}")));
        }
        visit(n, &x)?;
    }
    Ok(())
}

/// Records every configured measure at layers `0..=N`, keyed by measure name.
pub fn propagate_record(cfg: &RunConfig, g: &Graph) -> Result<BTreeMap<String, MeasureSeries>> {
    let measures = cfg.parsed_measures()?;
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.depth + 1); measures.len()];
    propagate_visit(cfg, g, |_, x| {
        for (m, vals) in measures.iter().zip(values.iter_mut()) {
            vals.push(m.evaluate(x, g)?);
        }
        Ok(())
    })?;
    let run_id = cfg.run_id();
    let hash = g.content_hash();
    measures
        .iter()
        .zip(values)
        .map(|(m, vals)| {
            let series = MeasureSeries::layered(m.name(), run_id.clone(), vals)?
                .with_metadata("model", cfg.model)
                .with_metadata("seed", cfg.seed)
                .with_metadata("graph", &cfg.graph)
                .with_metadata("graph_hash", &hash);
            Ok((m.name().to_string(), series))
        })
        .collect()
}

/// One `(config, measure)` outcome of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub run_id: String,
    pub measure: String,
    #[serde(skip)]
    pub series: Option<MeasureSeries>,
    pub fit: std::result::Result<DecayFit, String>,
}

fn run_one(cfg: &RunConfig, fit: &FitOptions) -> Vec<SweepRow> {
    let run_id = cfg.run_id();
    let failed = |measure: String, e: &Error| SweepRow {
        run_id: run_id.clone(),
        measure,
        series: None,
        fit: Err(e.to_string()),
    };
    let recorded = cfg.graph.load().and_then(|g| propagate_record(cfg, &g));
    match recorded {
        Ok(map) => map
            .into_values()
            .map(|s| SweepRow {
                run_id: run_id.clone(),
                measure: s.measure.clone(),
                fit: fit_decay(&s, fit).map_err(|e| e.to_string()),
                series: Some(s),
            })
            .collect(),
        Err(e) if cfg.measures.is_empty() => vec![failed("*".into(), &e)],
        Err(e) => cfg.measures.iter().map(|m| failed(m.clone(), &e)).collect(),
    }
}

/// Runs every config and fits every series. Rows follow config order, then
/// measure name; a failed run yields error rows instead of aborting.
pub fn sweep_with_threads(
    configs: &[RunConfig],
    fit: &FitOptions,
    threads: Option<usize>,
) -> Result<Vec<SweepRow>> {
    if configs.is_empty() {
        return Err(Error::invalid("sweep needs at least one config"));
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let work = || -> Vec<SweepRow> {
            configs
                .par_iter()
                .map(|c| run_one(c, fit))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect()
        };
        match threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
                Ok(pool.install(work))
            }
            None => Ok(work()),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(configs.iter().flat_map(|c| run_one(c, fit)).collect())
    }
}

/// [`sweep_with_threads`] bounded by `OVERSMOOTH_THREADS` when set.
pub fn sweep(configs: &[RunConfig], fit: &FitOptions) -> Result<Vec<SweepRow>> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(s) => Some(
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got '{s}'")))?,
        ),
        Err(_) => None,
    };
    sweep_with_threads(configs, fit, threads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(model: ModelKind, seed: u64) -> RunConfig {
        RunConfig {
            width: 8,
            depth: 6,
            ..RunConfig::new(model, GraphSource::Synthetic(GraphKind::Ring(12)), 6, seed)
        }
        .with_measures(&["dirichlet", "mad"])
    }

    #[test]
    fn features_are_deterministic_standard_normal() {
        let a = init_features(10_000, 128, 3).unwrap();
        assert_eq!(a, init_features(10_000, 128, 3).unwrap());
        assert_ne!(a, init_features(10_000, 128, 4).unwrap());
        let n = a.as_slice().len() as f64;
        let mean = a.sum() / n;
        let var = a.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01);
        assert!((var.sqrt() - 1.0).abs() < 0.01);
        assert!(init_features(0, 3, 1).is_err());
    }

    #[test]
    fn glorot_bounds_and_moments() {
        let w = init_weights(128, 128, 9, InitScheme::GlorotUniform).unwrap();
        let bound = (6.0f64 / 256.0).sqrt();
        assert!(w.as_slice().iter().all(|v| v.abs() <= bound));
        assert_eq!(w, init_weights(128, 128, 9, InitScheme::GlorotUniform).unwrap());

        let big = init_weights(1000, 1000, 2, InitScheme::GlorotUniform).unwrap();
        let b = (6.0f64 / 2000.0).sqrt();
        let sigma = b / 3f64.sqrt();
        assert!((big.sum() / 1e6).abs() < 3.0 * sigma / 1e3);
    }

    #[test]
    fn series_lengths_and_layer_zero() {
        let mut first = None;
        for model in ModelKind::ALL {
            let cfg = small(model, 5);
            let g = cfg.graph.load().unwrap();
            let rec = propagate_record(&cfg, &g).unwrap();
            assert_eq!(rec.len(), 2);
            for s in rec.values() {
                assert_eq!(s.len(), cfg.depth + 1);
            }
            let d0 = rec["dirichlet"].values[0];
            assert_eq!(*first.get_or_insert(d0), d0, "{model}");
        }
    }

    #[test]
    fn deterministic_per_config() {
        for model in ModelKind::ALL {
            let cfg = small(model, 11);
            let g = cfg.graph.load().unwrap();
            assert_eq!(propagate_record(&cfg, &g).unwrap(), propagate_record(&cfg, &g).unwrap());
        }
    }

    #[test]
    fn zero_residual_branch_is_identity() {
        let cfg = RunConfig {
            options: ModelOptions {
                init: Some(InitScheme::GlorotUniform),
                ..Default::default()
            },
            ..small(ModelKind::Resgcn, 1)
        };
        let g = cfg.graph.load().unwrap();
        // Direct check with a forced zero weight, the harness draws random ones.
        let x0 = init_features(12, 8, 1).unwrap();
        let zero = GcnParams::new(Matrix::zeros(8, 8), None).unwrap();
        let mut x = x0.clone();
        for _ in 0..cfg.depth {
            x = layers::resgcn_step(&x, &g, &zero, Activation::Relu).unwrap();
        }
        let d = Measure::DIRICHLET;
        assert_eq!(d.evaluate(&x, &g).unwrap(), d.evaluate(&x0, &g).unwrap());
    }

    #[test]
    fn shared_mode_reuses_weights() {
        // Without edges P = I, so with width 1 each layer multiplies by its scalar weight.
        let ratios = |mode| {
            let cfg = RunConfig {
                width: 1,
                weight_mode: mode,
                options: ModelOptions {
                    activation: Activation::Identity,
                    ..Default::default()
                },
                ..small(ModelKind::Gcn, 2)
            };
            let mut seen = Vec::new();
            propagate_visit(&cfg, &Graph::from_edges(12, &[]).unwrap(), |_, x| {
                seen.push(x[(0, 0)]);
                Ok(())
            })
            .unwrap();
            seen.windows(2).map(|w| w[1] / w[0]).collect::<Vec<_>>()
        };
        let shared = ratios(WeightMode::Shared);
        assert!(shared.iter().all(|r| (r - shared[0]).abs() < 1e-12));
        let per_layer = ratios(WeightMode::PerLayer);
        assert!(per_layer.iter().any(|r| (r - per_layer[0]).abs() > 1e-6));
    }

    #[test]
    fn sweep_rows_and_order() {
        let configs: Vec<RunConfig> = [ModelKind::Gcn, ModelKind::Gat, ModelKind::Sage]
            .into_iter()
            .flat_map(|m| {
                [GraphKind::Ring(12), GraphKind::Complete(6)].into_iter().flat_map(move |k| {
                    (0..2).map(move |s| RunConfig {
                        graph: GraphSource::Synthetic(k),
                        ..small(m, s)
                    })
                })
            })
            .collect();
        let opts = FitOptions::default();
        let rows = sweep_with_threads(&configs, &opts, Some(3)).unwrap();
        assert_eq!(rows.len(), 24);
        assert_eq!(rows, sweep_with_threads(&configs, &opts, Some(1)).unwrap());

        let mut reversed = configs.clone();
        reversed.reverse();
        let rev_rows = sweep_with_threads(&reversed, &opts, Some(2)).unwrap();
        let key = |r: &SweepRow| (r.run_id.clone(), r.measure.clone());
        let mut a: Vec<_> = rows.iter().map(key).collect();
        let mut b: Vec<_> = rev_rows.iter().map(key).collect();
        assert_ne!(a, b);
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_records_failures_per_row() {
        let bad = RunConfig {
            graph: GraphSource::File("/nonexistent/graph.edges".into()),
            ..small(ModelKind::Gcn, 0)
        };
        let rows = sweep_with_threads(&[bad, small(ModelKind::Gcn, 0)], &FitOptions::default(), Some(1)).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].fit.is_err() && rows[1].fit.is_err());
        assert!(rows[2].series.is_some());
        assert!(sweep_with_threads(&[], &FitOptions::default(), None).is_err());
    }

    #[test]
    fn parses_names() {
        for m in ModelKind::ALL {
            assert_eq!(m.as_str().parse::<ModelKind>().unwrap(), m);
        }
        assert!("nosuch".parse::<ModelKind>().is_err());
        assert_eq!(
            "ring:5".parse::<GraphSource>().unwrap(),
            GraphSource::Synthetic(GraphKind::Ring(5))
        );
        assert!(matches!("data/x.edges".parse::<GraphSource>().unwrap(), GraphSource::File(_)));
    }
}

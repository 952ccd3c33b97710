//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain scalars and strings and returns a JSON document,
//! so the page needs nothing beyond `JSON.parse`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use oversmooth::continuous::{self, Forcing, OdeConfig, VectorField};
use oversmooth::harness::{self, GraphSource, ModelKind, RunConfig};
use oversmooth::layers::Activation;
use oversmooth::measures::{verify_axioms, AxiomOptions, Verdict};
use oversmooth::{fit_decay, DecayFit, FitOptions, Graph, GraphKind, Measure, MeasureSeries};

/// Largest graph the page may request, to keep the tab responsive.
const MAX_NODES: usize = 2500;

#[derive(Serialize)]
struct Fit {
    classification: String,
    c2: f64,
    r2_exp: f64,
    r2_alg: f64,
}

impl From<&DecayFit> for Fit {
    fn from(f: &DecayFit) -> Self {
        Self {
            classification: f.classification.to_string(),
            c2: f.c2,
            r2_exp: f.r2_exp,
            r2_alg: f.r2_alg,
        }
    }
}

#[derive(Serialize)]
struct Curve {
    measure: String,
    index: Vec<f64>,
    values: Vec<f64>,
    fit: Result<Fit, String>,
}

impl Curve {
    fn new(s: &MeasureSeries, opts: &FitOptions) -> Self {
        Self {
            measure: s.measure.clone(),
            index: s.index.clone(),
            values: s.values.clone(),
            fit: fit_decay(s, opts).as_ref().map(Fit::from).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Profile {
    run_id: String,
    nodes: usize,
    edges: usize,
    curves: Vec<Curve>,
}

fn graph(kind_name: &str) -> Result<(GraphKind, Graph), String> {
    let kind: GraphKind = kind_name.parse().map_err(|e: oversmooth::Error| e.to_string())?;
    let g = Graph::generate(kind).map_err(|e| e.to_string())?;
    if g.node_count() > MAX_NODES {
        return Err(format!("{kind_name} has {} nodes; the demo allows at most {MAX_NODES}", g.node_count()));
    }
    Ok((kind, g))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Dirichlet measure and MAD after each of `depth` layers of `model` on a
/// synthetic graph such as `grid:12x12` or `ring:50`.
pub fn layer_profile_json(
    model: &str,
    graph_spec: &str,
    depth: usize,
    width: usize,
    seed: u64,
    bias: bool,
) -> Result<String, String> {
    let model: ModelKind = model.parse().map_err(|e: oversmooth::Error| e.to_string())?;
    let (kind, g) = graph(graph_spec)?;
    let cfg = RunConfig {
        width,
        bias,
        ..RunConfig::new(model, GraphSource::Synthetic(kind), depth, seed).with_measures(&["dirichlet", "mad"])
    };
    cfg.validate().map_err(|e| e.to_string())?;
    let series = harness::propagate_record(&cfg, &g).map_err(|e| e.to_string())?;
    let opts = FitOptions {
        skip_leading: 1,
        ..FitOptions::default()
    };
    let profile = Profile {
        run_id: cfg.run_id(),
        nodes: g.node_count(),
        edges: g.edge_count(),
        curves: series.values().map(|s| Curve::new(s, &opts)).collect(),
    };
    serde_json::to_string(&profile).map_err(|e| e.to_string())
}

/// Dirichlet measure along a continuous-time trajectory: `heat` diffusion or
/// the undamped `graphcon` oscillator.
pub fn ct_profile_json(dynamics: &str, graph_spec: &str, t_end: f64, dt: f64, seed: u64) -> Result<String, String> {
    let (kind, g) = graph(graph_spec)?;
    let field = match dynamics {
        "heat" => VectorField::Heat,
        "graphcon" => VectorField::Graphcon {
            gamma: 0.0,
            alpha: 0.0,
            forcing: Forcing::NegLaplacian,
            activation: Activation::Identity,
        },
        other => return Err(format!("unknown dynamics '{other}'")),
    };
    let cfg = OdeConfig {
        seed,
        ..OdeConfig::new(field, t_end, dt)
    };
    let x0 = harness::init_features(g.node_count(), 16, seed).map_err(|e| e.to_string())?;
    let run_id = format!("{dynamics}:{kind}:{seed}");
    let s = continuous::integrate_record(&cfg, &g, &x0, &run_id).map_err(|e| e.to_string())?;
    let profile = Profile {
        run_id,
        nodes: g.node_count(),
        edges: g.edge_count(),
        curves: vec![Curve::new(&s, &FitOptions::default())],
    };
    serde_json::to_string(&profile).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct AxiomSummary {
    measure: String,
    checks: Vec<(&'static str, Verdict)>,
    node_similarity: bool,
}

/// Samples the three node-similarity checks for `dirichlet` or `mad` on
/// feature matrices of width `dim`.
pub fn axioms_json(
    measure: &str,
    graph_spec: &str,
    trials: usize,
    dim: usize,
    positive: bool,
    seed: u64,
) -> Result<String, String> {
    let measure: Measure = measure.parse().map_err(|e: oversmooth::Error| e.to_string())?;
    let (_, g) = graph(graph_spec)?;
    let opts = AxiomOptions {
        trials,
        dim,
        positive,
        seed,
        ..AxiomOptions::default()
    };
    let report = verify_axioms(&measure, &g, &opts).map_err(|e| e.to_string())?;
    let node_similarity = report.all_passed();
    let summary = AxiomSummary {
        measure: measure.to_string(),
        checks: vec![
            ("zero on constant rows", report.zero_on_constant),
            ("positive on non-constant rows", report.positive_on_nonconstant),
            ("subadditive", report.subadditive),
        ],
        node_similarity,
    };
    serde_json::to_string(&summary).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = layerProfile)]
pub fn layer_profile(
    model: &str,
    graph_spec: &str,
    depth: usize,
    width: usize,
    seed: u32,
    bias: bool,
) -> Result<String, JsValue> {
    layer_profile_json(model, graph_spec, depth, width, seed.into(), bias).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = ctProfile)]
pub fn ct_profile(dynamics: &str, graph_spec: &str, t_end: f64, dt: f64, seed: u32) -> Result<String, JsValue> {
    ct_profile_json(dynamics, graph_spec, t_end, dt, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = checkAxioms)]
pub fn check_axioms(
    measure: &str,
    graph_spec: &str,
    trials: usize,
    dim: usize,
    positive: bool,
    seed: u32,
) -> Result<String, JsValue> {
    axioms_json(measure, graph_spec, trials, dim, positive, seed.into()).map_err(|e| JsValue::from_str(&e))
}

/// Names accepted by `layerProfile`, as a JSON array.
#[wasm_bindgen(js_name = modelNames)]
pub fn model_names() -> Result<String, JsValue> {
    to_json(&ModelKind::ALL.iter().map(|m| m.as_str()).collect::<Vec<_>>())
}

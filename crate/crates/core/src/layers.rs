//! Single forward steps of the message-passing architectures.
//!
//! Every step is a pure function of its inputs. Randomness (DropEdge) comes
//! in through an explicit seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{FeatureMatrix, Matrix};

const LEAKY_SLOPE: f64 = 0.2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    pub fn apply(self, x: &Matrix) -> Matrix {
        match self {
            Activation::Identity => x.clone(),
            _ => x.map(|v| self.eval(v)),
        }
    }
}

fn check_bias(bias: &Option<Vec<f64>>, width: usize) -> Result<()> {
    match bias {
        Some(b) if b.len() != width => Err(Error::shape(format!(
            "bias of length {} for output width {width}",
            b.len()
        ))),
        _ => Ok(()),
    }
}

fn add_bias(x: Matrix, bias: &Option<Vec<f64>>) -> Result<Matrix> {
    match bias {
        Some(b) => x.add_row_vector(b),
        None => Ok(x),
    }
}

/// Graph convolution `P X W + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcnParams {
    pub weight: Matrix,
    pub bias: Option<Vec<f64>>,
}

impl GcnParams {
    pub fn new(weight: Matrix, bias: Option<Vec<f64>>) -> Result<Self> {
        check_bias(&bias, weight.cols())?;
        Ok(Self { weight, bias })
    }

    pub fn pre_activation(&self, x: &FeatureMatrix, g: &Graph) -> Result<Matrix> {
        g.check_rows(x)?;
        let xw = x.matmul(&self.weight)?;
        add_bias(g.normalized_operator().apply(&xw)?, &self.bias)
    }
}

/// Single-head attention with a shared weight for source and target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatParams {
    pub weight: Matrix,
    /// `[a_target ‖ a_source]`, length `2·m′`.
    pub attention: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

impl GatParams {
    pub fn new(weight: Matrix, attention: Vec<f64>, bias: Option<Vec<f64>>) -> Result<Self> {
        if attention.len() != 2 * weight.cols() {
            return Err(Error::shape(format!(
                "attention vector of length {} for width {}",
                attention.len(),
                weight.cols()
            )));
        }
        check_bias(&bias, weight.cols())?;
        Ok(Self {
            weight,
            attention,
            bias,
        })
    }

    /// Attention-weighted aggregate `Σ_{j∈N(i)∪{i}} α_ij xⱼW + b`.
    pub fn pre_activation(&self, x: &FeatureMatrix, g: &Graph) -> Result<Matrix> {
        g.check_rows(x)?;
        let z = x.matmul(&self.weight)?;
        let width = z.cols();
        let (a_target, a_source) = self.attention.split_at(width);
        let dot = |row: &[f64], a: &[f64]| row.iter().zip(a).map(|(u, w)| u * w).sum::<f64>();
        let target: Vec<f64> = z.row_iter().map(|r| dot(r, a_target)).collect();
        let source: Vec<f64> = z.row_iter().map(|r| dot(r, a_source)).collect();

        let mut out = Matrix::zeros(z.rows(), width);
        let mut logits = Vec::new();
        for i in 0..z.rows() {
            logits.clear();
            logits.extend(
                std::iter::once(i)
                    .chain(g.neighbors(i).iter().copied())
                    .map(|j| {
                        let e = target[i] + source[j];
                        (j, if e > 0.0 { e } else { LEAKY_SLOPE * e })
                    }),
            );
            let max = logits.iter().map(|&(_, e)| e).fold(f64::NEG_INFINITY, f64::max);
            let norm: f64 = logits.iter().map(|&(_, e)| (e - max).exp()).sum();
            let out_row = out.row_mut(i);
            for &(j, e) in &logits {
                let alpha = (e - max).exp() / norm;
                for (o, &zj) in out_row.iter_mut().zip(z.row(j)) {
                    *o += alpha * zj;
                }
            }
        }
        add_bias(out, &self.bias)
    }
}

/// The message function used inside GraphCON and G².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Gcn(GcnParams),
    Gat(GatParams),
}

impl Coupling {
    pub fn pre_activation(&self, x: &FeatureMatrix, g: &Graph) -> Result<Matrix> {
        match self {
            Coupling::Gcn(p) => p.pre_activation(x, g),
            Coupling::Gat(p) => p.pre_activation(x, g),
        }
    }

    fn output_width(&self) -> usize {
        match self {
            Coupling::Gcn(p) => p.weight.cols(),
            Coupling::Gat(p) => p.weight.cols(),
        }
    }
}

/// `σ(P X W + b)`
pub fn gcn_step(x: &FeatureMatrix, g: &Graph, params: &GcnParams, act: Activation) -> Result<FeatureMatrix> {
    Ok(act.apply(&params.pre_activation(x, g)?))
}

pub fn gat_step(x: &FeatureMatrix, g: &Graph, params: &GatParams, act: Activation) -> Result<FeatureMatrix> {
    Ok(act.apply(&params.pre_activation(x, g)?))
}

/// GraphSAGE with a mean aggregator and separate self/neighbor weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SageParams {
    pub w_self: Matrix,
    pub w_neigh: Matrix,
    pub bias: Option<Vec<f64>>,
}

impl SageParams {
    pub fn new(w_self: Matrix, w_neigh: Matrix, bias: Option<Vec<f64>>) -> Result<Self> {
        if w_self.shape() != w_neigh.shape() {
            return Err(Error::shape("self and neighbor weights differ in shape"));
        }
        check_bias(&bias, w_self.cols())?;
        Ok(Self {
            w_self,
            w_neigh,
            bias,
        })
    }
}

/// `σ(xᵢ W_self + mean_{j∈N(i)} xⱼ W_neigh + b)`; isolated nodes aggregate zero.
pub fn sage_step(x: &FeatureMatrix, g: &Graph, params: &SageParams, act: Activation) -> Result<FeatureMatrix> {
    g.check_rows(x)?;
    let mut mean = Matrix::zeros(x.rows(), x.cols());
    for i in 0..g.node_count() {
        let nbrs = g.neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        let inv = 1.0 / nbrs.len() as f64;
        let row = mean.row_mut(i);
        for &j in nbrs {
            for (m, &xj) in row.iter_mut().zip(x.row(j)) {
                *m += inv * xj;
            }
        }
    }
    let out = x.matmul(&params.w_self)?.add(&mean.matmul(&params.w_neigh)?)?;
    Ok(act.apply(&add_bias(out, &params.bias)?))
}

/// Centers the rows and rescales so the mean squared row norm is `s²`.
pub fn pairnorm_apply(x: &FeatureMatrix, s: f64) -> Result<FeatureMatrix> {
    if !(s > 0.0) {
        return Err(Error::invalid(format!("PairNorm scale must be positive, got {s}")));
    }
    let means = x.column_means();
    let mut centered = x.clone();
    for i in 0..centered.rows() {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&means) {
            *v -= m;
        }
    }
    let mean_sq = centered.as_slice().iter().map(|v| v * v).sum::<f64>() / x.rows().max(1) as f64;
    if !(mean_sq > 0.0) {
        return Err(Error::DegeneratePairNorm);
    }
    Ok(centered.scale(s / mean_sq.sqrt()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphconState {
    pub x: FeatureMatrix,
    /// Auxiliary (velocity) features.
    pub y: FeatureMatrix,
}

impl GraphconState {
    pub fn new(x: FeatureMatrix, y: FeatureMatrix) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(Error::shape("GraphCON X and Y differ in shape"));
        }
        Ok(Self { x, y })
    }

    /// `Y⁰ = 0`.
    pub fn at_rest(x: FeatureMatrix) -> Self {
        let y = Matrix::zeros(x.rows(), x.cols());
        Self { x, y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphconParams {
    pub gamma: f64,
    pub alpha: f64,
    pub dt: f64,
}

impl Default for GraphconParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            alpha: 0.0,
            dt: 1.0,
        }
    }
}

impl GraphconParams {
    fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.alpha >= 0.0 && self.dt > 0.0) {
            return Err(Error::invalid(format!(
                "GraphCON needs gamma, alpha >= 0 and dt > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// One symplectic-Euler step of the graph-coupled oscillator:
/// `Yⁿ = Yⁿ⁻¹ + Δt[σ(F(Xⁿ⁻¹)) − γXⁿ⁻¹ − αYⁿ⁻¹]`, `Xⁿ = Xⁿ⁻¹ + Δt Yⁿ`.
pub fn graphcon_step(
    state: &GraphconState,
    g: &Graph,
    coupling: &Coupling,
    params: &GraphconParams,
    act: Activation,
) -> Result<GraphconState> {
    params.validate()?;
    let forcing = act.apply(&coupling.pre_activation(&state.x, g)?);
    if forcing.shape() != state.y.shape() {
        return Err(Error::shape("GraphCON coupling must preserve the feature width"));
    }
    let mut y = state.y.clone();
    for ((yv, &f), (&xv, &y_prev)) in y
        .as_mut_slice()
        .iter_mut()
        .zip(forcing.as_slice())
        .zip(state.x.as_slice().iter().zip(state.y.as_slice()))
    {
        *yv = y_prev + params.dt * (f - params.gamma * xv - params.alpha * y_prev);
    }
    let mut x = state.x.clone();
    x.axpy(params.dt, &y)?;
    Ok(GraphconState { x, y })
}

/// Gradient-gating parameters: the gate map `F̂` and exponent `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G2Params {
    pub gate: GcnParams,
    pub p: f64,
}

/// Per-node, per-channel rates `τ_ik = tanh(Σ_{j∈N(i)} |τ̂_jk − τ̂_ik|^p)`.
/// Uses the convention `|x|⁰ = 1`, including at `x = 0`.
pub fn g2_rates(tau_hat: &Matrix, g: &Graph, p: f64) -> Result<Matrix> {
    g.check_rows(tau_hat)?;
    let mut tau = Matrix::zeros(tau_hat.rows(), tau_hat.cols());
    for i in 0..g.node_count() {
        let ti = tau_hat.row(i);
        let row = tau.row_mut(i);
        for &j in g.neighbors(i) {
            for ((acc, &a), &b) in row.iter_mut().zip(tau_hat.row(j)).zip(ti) {
                *acc += if p == 0.0 {
                    1.0
                } else if p == 2.0 {
                    (a - b) * (a - b)
                } else {
                    (a - b).abs().powf(p)
                };
            }
        }
        row.iter_mut().for_each(|v| *v = v.tanh());
    }
    Ok(tau)
}

/// `X′ = (1 − τ) ⊙ X + τ ⊙ σ(F(X))` with `τ` from [`g2_rates`] on `σ(F̂(X))`.
pub fn g2_step(
    x: &FeatureMatrix,
    g: &Graph,
    coupling: &Coupling,
    params: &G2Params,
    act: Activation,
) -> Result<FeatureMatrix> {
    if !(params.p >= 0.0) {
        return Err(Error::invalid(format!("G2 exponent must be >= 0, got {}", params.p)));
    }
    if coupling.output_width() != x.cols() || params.gate.weight.cols() != x.cols() {
        return Err(Error::shape("G2 maps must preserve the feature width"));
    }
    let tau_hat = act.apply(&params.gate.pre_activation(x, g)?);
    let tau = g2_rates(&tau_hat, g, params.p)?;
    let update = act.apply(&coupling.pre_activation(x, g)?);
    let mut out = x.clone();
    for ((o, &t), &u) in out
        .as_mut_slice()
        .iter_mut()
        .zip(tau.as_slice())
        .zip(update.as_slice())
    {
        // τ = 0 leaves the entry bit-identical.
        if t != 0.0 {
            *o = (1.0 - t) * *o + t * u;
        }
    }
    Ok(out)
}

/// `X + σ(P X W + b)`; the activation stays inside the residual branch.
pub fn resgcn_step(x: &FeatureMatrix, g: &Graph, params: &GcnParams, act: Activation) -> Result<FeatureMatrix> {
    let (r, c) = params.weight.shape();
    if r != c {
        return Err(Error::shape(format!("residual GCN needs a square weight, got {r}x{c}")));
    }
    x.add(&gcn_step(x, g, params, act)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcniiParams {
    /// Initial-residual strength `αₙ`.
    pub alpha: f64,
    /// Identity-mapping strength `βₙ`.
    pub beta: f64,
    pub weight: Matrix,
}

impl GcniiParams {
    /// `βₙ = ln(1 + λ/n)` for layer `n ≥ 1`.
    pub fn beta_schedule(lambda: f64, layer: usize) -> f64 {
        (lambda / layer.max(1) as f64).ln_1p()
    }
}

/// `σ[((1 − α)P X + α X⁰)((1 − β)I + β W)]`
pub fn gcnii_step(
    x: &FeatureMatrix,
    x0: &FeatureMatrix,
    g: &Graph,
    params: &GcniiParams,
    act: Activation,
) -> Result<FeatureMatrix> {
    if x.shape() != x0.shape() {
        return Err(Error::shape("GCNII X and X⁰ differ in shape"));
    }
    let (r, c) = params.weight.shape();
    if r != c || r != x.cols() {
        return Err(Error::shape(format!(
            "GCNII weight {r}x{c} for width {}",
            x.cols()
        )));
    }
    for (name, v) in [("alpha", params.alpha), ("beta", params.beta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("GCNII {name} must lie in [0, 1], got {v}")));
        }
    }
    let mut h = g.normalized_operator().apply(x)?.scale(1.0 - params.alpha);
    h.axpy(params.alpha, x0)?;
    let mut mixed = params.weight.scale(params.beta);
    for k in 0..c {
        mixed[(k, k)] += 1.0 - params.beta;
    }
    Ok(act.apply(&h.matmul(&mixed)?))
}

/// Keeps each undirected edge independently with probability `1 − drop_rate`.
pub fn dropedge_sample(g: &Graph, drop_rate: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&drop_rate) {
        return Err(Error::invalid(format!("drop rate must lie in [0, 1], got {drop_rate}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(g.filter_edges(|_, _| rng.random::<f64>() >= drop_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    fn col(v: &[f64]) -> Matrix {
        Matrix::column(v).unwrap()
    }

    fn identity_gcn(m: usize) -> GcnParams {
        GcnParams::new(Matrix::identity(m), None).unwrap()
    }

    #[test]
    fn gcn_examples() {
        let path = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let out = gcn_step(&col(&[1.0, -1.0]), &path, &identity_gcn(1), Activation::Identity).unwrap();
        assert!(out.as_slice().iter().all(|v| v.abs() < 1e-15));

        let single = Graph::from_edges(1, &[]).unwrap();
        let x = Matrix::from_rows(&[vec![0.4, -2.0]]).unwrap();
        assert_eq!(gcn_step(&x, &single, &identity_gcn(2), Activation::Identity).unwrap(), x);

        let g = Graph::generate(GraphKind::Star(5)).unwrap();
        let x = Matrix::from_fn(5, 3, |i, k| (i * k) as f64 - 1.0);
        let c = vec![0.5, -1.0];
        let p = GcnParams::new(Matrix::zeros(3, 2), Some(c.clone())).unwrap();
        let out = gcn_step(&x, &g, &p, Activation::Identity).unwrap();
        assert!(out.row_iter().all(|r| r == c.as_slice()));

        assert!(gcn_step(&col(&[1.0, 2.0, 3.0]), &path, &identity_gcn(1), Activation::Relu).is_err());
    }

    #[test]
    fn gat_examples() {
        let g = Graph::generate(GraphKind::Star(4)).unwrap();
        let x = Matrix::broadcast_row(4, &[1.0, -2.0]);
        let p = GatParams::new(Matrix::identity(2), vec![0.3, -0.7, 1.1, 0.2], None).unwrap();
        let out = gat_step(&x, &g, &p, Activation::Identity).unwrap();
        assert!(out.max_abs_diff(&x) < 1e-15);

        // zero attention vector: plain mean over N(i) ∪ {i}
        let x = Matrix::from_fn(4, 2, |i, k| (i + k) as f64);
        let p = GatParams::new(Matrix::identity(2), vec![0.0; 4], None).unwrap();
        let out = gat_step(&x, &g, &p, Activation::Identity).unwrap();
        let hub_mean = (0..4).map(|i| x[(i, 0)]).sum::<f64>() / 4.0;
        assert!((out[(0, 0)] - hub_mean).abs() < 1e-14);
        assert!((out[(2, 1)] - (x[(2, 1)] + x[(0, 1)]) / 2.0).abs() < 1e-14);

        let single = Graph::from_edges(1, &[]).unwrap();
        let x = Matrix::from_rows(&[vec![-1.0, 2.0]]).unwrap();
        let w = Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let p = GatParams::new(w.clone(), vec![1.0, 2.0, 3.0, 4.0], None).unwrap();
        let out = gat_step(&x, &single, &p, Activation::Relu).unwrap();
        assert_eq!(out, Activation::Relu.apply(&x.matmul(&w).unwrap()));

        assert!(GatParams::new(Matrix::identity(2), vec![0.0; 3], None).is_err());
    }

    #[test]
    fn sage_examples() {
        let g = Graph::generate(GraphKind::Ring(5)).unwrap();
        let x = Matrix::from_fn(5, 2, |i, k| (i as f64).sin() + k as f64);
        let p = SageParams::new(Matrix::identity(2), Matrix::zeros(2, 2), None).unwrap();
        assert_eq!(sage_step(&x, &g, &p, Activation::Identity).unwrap(), x);

        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let p = SageParams::new(Matrix::zeros(1, 1), Matrix::identity(1), None).unwrap();
        let out = sage_step(&col(&[1.0, 2.0, 3.0]), &path, &p, Activation::Identity).unwrap();
        assert_eq!(out[(1, 0)], 2.0);

        let single = Graph::from_edges(1, &[]).unwrap();
        let out = sage_step(&col(&[7.0]), &single, &p, Activation::Identity).unwrap();
        assert_eq!(out[(0, 0)], 0.0);
    }

    #[test]
    fn pairnorm_examples() {
        let out = pairnorm_apply(&col(&[1.0, 3.0]), 1.0).unwrap();
        assert!((out[(0, 0)] + 1.0).abs() < 1e-15 && (out[(1, 0)] - 1.0).abs() < 1e-15);

        let x = Matrix::from_fn(6, 3, |i, k| ((i * 7 + k * 3) % 5) as f64 - 0.3 * k as f64);
        let s = 2.5;
        let out = pairnorm_apply(&x, s).unwrap();
        assert!(out.column_means().iter().all(|m| m.abs() < 1e-10));
        let msq = out.as_slice().iter().map(|v| v * v).sum::<f64>() / 6.0;
        assert!((msq - s * s).abs() < 1e-10);

        assert!(matches!(
            pairnorm_apply(&Matrix::filled(4, 2, 3.0), 1.0),
            Err(Error::DegeneratePairNorm)
        ));
    }

    #[test]
    fn graphcon_examples() {
        let g = Graph::from_edges(1, &[]).unwrap();
        let zero = Coupling::Gcn(GcnParams::new(Matrix::zeros(1, 1), None).unwrap());
        let state = GraphconState::at_rest(col(&[1.0]));
        let params = GraphconParams {
            gamma: 1.0,
            alpha: 0.0,
            dt: 1.0,
        };
        let next = graphcon_step(&state, &g, &zero, &params, Activation::Identity).unwrap();
        assert_eq!(next.y[(0, 0)], -1.0);
        assert_eq!(next.x[(0, 0)], 0.0);

        // free particle
        let free = GraphconParams {
            gamma: 0.0,
            alpha: 0.0,
            dt: 0.5,
        };
        let mut s = GraphconState::new(col(&[2.0]), col(&[3.0])).unwrap();
        for k in 1..=4 {
            s = graphcon_step(&s, &g, &zero, &free, Activation::Identity).unwrap();
            assert_eq!(s.x[(0, 0)], 2.0 + 1.5 * k as f64);
        }

        assert_eq!(GraphconParams::default().dt, 1.0);
    }

    #[test]
    fn g2_examples() {
        let g = Graph::generate(GraphKind::Ring(5)).unwrap();
        let x = Matrix::from_fn(5, 2, |i, k| (i * 3 + k) as f64 * 0.1);
        let coupling = Coupling::Gcn(identity_gcn(2));
        let frozen_gate = G2Params {
            gate: GcnParams::new(Matrix::zeros(2, 2), Some(vec![0.3, 0.3])).unwrap(),
            p: 2.0,
        };
        let out = g2_step(&x, &g, &coupling, &frozen_gate, Activation::Relu).unwrap();
        assert_eq!(out, x);

        let star = Graph::generate(GraphKind::Star(4)).unwrap();
        let tau_hat = col(&[0.0, 1.0, 1.0, 1.0]);
        let tau = g2_rates(&tau_hat, &star, 0.0).unwrap();
        assert_eq!(tau[(0, 0)], 3f64.tanh());
        assert_eq!(tau[(1, 0)], 1f64.tanh());

        let single = Graph::from_edges(1, &[]).unwrap();
        let gate = G2Params {
            gate: identity_gcn(1),
            p: 0.0,
        };
        let x = col(&[4.0]);
        let out = g2_step(&x, &single, &Coupling::Gcn(identity_gcn(1)), &gate, Activation::Relu).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn resgcn_examples() {
        let path = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let x = col(&[1.0, -1.0]);
        let out = resgcn_step(&x, &path, &identity_gcn(1), Activation::Identity).unwrap();
        assert!(out.max_abs_diff(&x) < 1e-15);

        let g = Graph::generate(GraphKind::Ring(6)).unwrap();
        let zero = GcnParams::new(Matrix::zeros(2, 2), Some(vec![0.0, 0.0])).unwrap();
        let x0 = Matrix::from_fn(6, 2, |i, k| (i as f64 - k as f64).cos());
        let mut x = x0.clone();
        for _ in 0..5 {
            x = resgcn_step(&x, &g, &zero, Activation::Relu).unwrap();
        }
        assert_eq!(x, x0);

        let rect = GcnParams::new(Matrix::zeros(2, 3), None).unwrap();
        assert!(resgcn_step(&x0, &g, &rect, Activation::Relu).is_err());
    }

    #[test]
    fn gcnii_examples() {
        let g = Graph::generate(GraphKind::Ring(5)).unwrap();
        let x = Matrix::from_fn(5, 2, |i, k| (i * 2 + k) as f64);
        let x0 = Matrix::from_fn(5, 2, |i, k| (i as f64) - (k as f64) * 0.5);
        let w = Matrix::from_rows(&[vec![0.2, -1.0], vec![0.7, 0.4]]).unwrap();

        let p = GcniiParams {
            alpha: 1.0,
            beta: 0.0,
            weight: w.clone(),
        };
        assert_eq!(gcnii_step(&x, &x0, &g, &p, Activation::Identity).unwrap(), x0);

        let p = GcniiParams {
            alpha: 0.0,
            beta: 1.0,
            weight: w.clone(),
        };
        let out = gcnii_step(&x, &x0, &g, &p, Activation::Relu).unwrap();
        let gcn = gcn_step(&x, &g, &GcnParams::new(w.clone(), None).unwrap(), Activation::Relu).unwrap();
        assert!(out.max_abs_diff(&gcn) < 1e-12);

        let p = GcniiParams {
            alpha: 0.3,
            beta: 0.0,
            weight: w,
        };
        let out = gcnii_step(&x0, &x0, &Graph::from_edges(5, &[]).unwrap(), &p, Activation::Identity).unwrap();
        assert!(out.max_abs_diff(&x0) < 1e-15);

        assert!((GcniiParams::beta_schedule(1.0, 1) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dropedge_examples() {
        let g = Graph::generate(GraphKind::Complete(20)).unwrap();
        assert_eq!(dropedge_sample(&g, 0.0, 3).unwrap(), g);
        assert_eq!(dropedge_sample(&g, 1.0, 3).unwrap().edge_count(), 0);
        assert!(dropedge_sample(&g, 1.5, 3).is_err());

        let total = g.edge_count() as f64;
        let kept: f64 = (0..1000)
            .map(|seed| dropedge_sample(&g, 0.5, seed).unwrap().edge_count() as f64 / total)
            .sum::<f64>()
            / 1000.0;
        assert!((kept - 0.5).abs() < 0.05, "kept fraction {kept}");
    }
}

//! Supervised node classification with a deep GCN.
//!
//! The model is a linear input encoder, `N` graph convolutions
//! `H ← relu(P H W + b)` and a linear readout. Weights are shared across the
//! `N` convolutions or drawn per layer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::harness::InitScheme;
use crate::matrix::{FeatureMatrix, Matrix};
use crate::measures::{Measure, MeasureSeries};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub const ADAM: Optimizer = Optimizer::Adam {
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
    };
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::ADAM
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub depth: usize,
    pub width: usize,
    pub shared: bool,
    pub bias: bool,
    pub lr: f64,
    pub epochs: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            width: 32,
            shared: true,
            bias: true,
            lr: 1e-2,
            epochs: 200,
            optimizer: Optimizer::ADAM,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.width == 0 {
            return Err(Error::invalid("depth and width must be at least 1"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be >= 0, got {}", self.lr)));
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
                return Err(Error::invalid("Adam needs betas in [0, 1) and eps > 0"));
            }
        }
        Ok(())
    }
}

/// Node index sets; must be pairwise disjoint.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Masks {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Masks {
    fn validate(&self, v: usize) -> Result<()> {
        if self.train.is_empty() {
            return Err(Error::EmptyMask);
        }
        let mut seen = vec![false; v];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= v {
                return Err(Error::NodeOutOfRange { id: i, node_count: v });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("node {i} appears in more than one mask")));
            }
        }
        Ok(())
    }
}

/// Parameters of the deep GCN classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcnModel {
    pub depth: usize,
    pub encoder: Matrix,
    /// One matrix when shared, otherwise one per convolution.
    pub weights: Vec<Matrix>,
    /// `1 × m` rows matching `weights`, when biased.
    pub biases: Option<Vec<Matrix>>,
    pub readout: Matrix,
    pub readout_bias: Matrix,
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let b = InitScheme::GlorotUniform.bound(rows, cols);
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-b..=b))
}

impl GcnModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(in_dim: usize, classes: usize, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if in_dim == 0 || classes == 0 {
            return Err(Error::invalid("input width and class count must be positive"));
        }
        let m = cfg.width;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let encoder = glorot(in_dim, m, &mut rng);
        let count = if cfg.shared { 1 } else { cfg.depth };
        let weights: Vec<Matrix> = (0..count).map(|_| glorot(m, m, &mut rng)).collect();
        let readout = glorot(m, classes, &mut rng);
        Ok(Self {
            depth: cfg.depth,
            encoder,
            biases: cfg.bias.then(|| vec![Matrix::zeros(1, m); count]),
            weights,
            readout,
            readout_bias: Matrix::zeros(1, classes),
        })
    }

    fn layer(&self, n: usize) -> usize {
        if self.weights.len() == 1 {
            0
        } else {
            n
        }
    }

    /// Parameters in a fixed order: encoder, weights, biases, readout, readout bias.
    pub fn params(&self) -> Vec<&Matrix> {
        let mut p = vec![&self.encoder];
        p.extend(&self.weights);
        if let Some(b) = &self.biases {
            p.extend(b);
        }
        p.push(&self.readout);
        p.push(&self.readout_bias);
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let mut p = vec![&mut self.encoder];
        p.extend(self.weights.iter_mut());
        if let Some(b) = &mut self.biases {
            p.extend(b.iter_mut());
        }
        p.push(&mut self.readout);
        p.push(&mut self.readout_bias);
        p
    }

    fn check_input(&self, g: &Graph, x: &FeatureMatrix) -> Result<()> {
        g.check_rows(x)?;
        if x.cols() != self.encoder.rows() {
            return Err(Error::shape(format!(
                "features have width {}, encoder expects {}",
                x.cols(),
                self.encoder.rows()
            )));
        }
        Ok(())
    }

    /// Records the forward pass; returns the parameter leaves in
    /// [`GcnModel::params`] order, the hidden states `H⁰..Hᴺ` and the logits.
    pub fn forward(&self, tape: &mut Tape<'_>, x: &FeatureMatrix) -> Result<Forward> {
        let params: Vec<Var> = self.params().into_iter().map(|p| tape.leaf(p.clone())).collect();
        let nw = self.weights.len();
        let weight_vars = &params[1..1 + nw];
        let bias_vars = self.biases.as_ref().map(|_| &params[1 + nw..1 + 2 * nw]);
        let (readout, readout_bias) = (params[params.len() - 2], params[params.len() - 1]);

        let input = tape.leaf(x.clone());
        let mut h = tape.matmul(input, params[0])?;
        let mut hidden = vec![h];
        for n in 0..self.depth {
            let l = self.layer(n);
            let hw = tape.matmul(h, weight_vars[l])?;
            let mut z = tape.spmm(hw)?;
            if let Some(b) = bias_vars {
                z = tape.add_bias(z, b[l])?;
            }
            h = tape.relu(z);
            hidden.push(h);
        }
        let logits = tape.matmul(h, readout)?;
        let logits = tape.add_bias(logits, readout_bias)?;
        Ok(Forward {
            params,
            hidden,
            logits,
        })
    }

    /// Class predictions for every node.
    pub fn predict(&self, g: &Graph, x: &FeatureMatrix) -> Result<Vec<usize>> {
        self.check_input(g, x)?;
        let mut tape = Tape::new(g.normalized_operator());
        let f = self.forward(&mut tape, x)?;
        Ok(argmax_rows(tape.value(f.logits)))
    }
}

/// Handles into a recorded forward pass.
pub struct Forward {
    pub params: Vec<Var>,
    pub hidden: Vec<Var>,
    pub logits: Var,
}

fn argmax_rows(z: &Matrix) -> Vec<usize> {
    z.row_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
                .0
        })
        .collect()
}

fn masked_accuracy(pred: &[usize], labels: &[usize], mask: &[usize]) -> f64 {
    if mask.is_empty() {
        return f64::NAN;
    }
    mask.iter().filter(|&&i| pred[i] == labels[i]).count() as f64 / mask.len() as f64
}

/// Mean cross-entropy over `mask` and its gradients in [`GcnModel::params`] order.
pub fn loss_and_grad(
    model: &GcnModel,
    g: &Graph,
    x: &FeatureMatrix,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, Vec<Matrix>)> {
    model.check_input(g, x)?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut tape = Tape::new(g.normalized_operator());
    let f = model.forward(&mut tape, x)?;
    let loss_var = tape.cross_entropy(f.logits, labels, mask)?;
    let loss = tape.value(loss_var)[(0, 0)];
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss {loss}")));
    }
    let grads = tape.backward(loss_var)?;
    let out = f
        .params
        .iter()
        .zip(model.params())
        .map(|(v, p)| grads.get(*v).cloned().unwrap_or_else(|| Matrix::zeros(p.rows(), p.cols())))
        .collect();
    Ok((loss, out))
}

pub fn accuracy(model: &GcnModel, g: &Graph, x: &FeatureMatrix, labels: &[usize], mask: &[usize]) -> Result<f64> {
    Ok(masked_accuracy(&model.predict(g, x)?, labels, mask))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best validation accuracy (earliest
    /// on ties), or the final ones when there is no validation mask.
    pub model: GcnModel,
    pub best_epoch: usize,
    pub history: Vec<EpochMetrics>,
}

impl TrainOutcome {
    pub fn best(&self) -> &EpochMetrics {
        &self.history[self.best_epoch]
    }
}

struct AdamState {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: i32,
}

/// Full-batch training for `cfg.epochs` updates. `history[e]` describes the
/// parameters after `e` updates, so `history[0]` is the initialization.
pub fn train(
    cfg: &TrainConfig,
    g: &Graph,
    x: &FeatureMatrix,
    labels: &[usize],
    masks: &Masks,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    g.check_rows(x)?;
    masks.validate(g.node_count())?;
    if labels.len() != g.node_count() {
        return Err(Error::shape(format!("{} labels for {} nodes", labels.len(), g.node_count())));
    }
    let classes = labels.iter().max().map_or(1, |c| c + 1);
    let mut model = GcnModel::init(x.cols(), classes, cfg)?;
    let mut adam = AdamState {
        m: model.params().iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect(),
        v: model.params().iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect(),
        t: 0,
    };
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, GcnModel)> = None;

    for epoch in 0..=cfg.epochs {
        let mut tape = Tape::new(g.normalized_operator());
        let f = model.forward(&mut tape, x)?;
        let loss_var = tape.cross_entropy(f.logits, labels, &masks.train)?;
        let loss = tape.value(loss_var)[(0, 0)];
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        let pred = argmax_rows(tape.value(f.logits));
        let metrics = EpochMetrics {
            epoch,
            loss,
            train_acc: masked_accuracy(&pred, labels, &masks.train),
            val_acc: masked_accuracy(&pred, labels, &masks.val),
            test_acc: masked_accuracy(&pred, labels, &masks.test),
        };
        history.push(metrics);
        if !masks.val.is_empty() && best.as_ref().is_none_or(|b| metrics.val_acc > b.1) {
            best = Some((epoch, metrics.val_acc, model.clone()));
        }
        if epoch == cfg.epochs {
            break;
        }

        let grads = tape.backward(loss_var)?;
        let grads: Vec<Matrix> = f
            .params
            .iter()
            .zip(model.params())
            .map(|(v, p)| grads.get(*v).cloned().unwrap_or_else(|| Matrix::zeros(p.rows(), p.cols())))
            .collect();
        match cfg.optimizer {
            Optimizer::Sgd => {
                for (p, g) in model.params_mut().into_iter().zip(&grads) {
                    p.axpy(-cfg.lr, g)?;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                adam.t += 1;
                let c1 = 1.0 - beta1.powi(adam.t);
                let c2 = 1.0 - beta2.powi(adam.t);
                for (((p, g), m), v) in model
                    .params_mut()
                    .into_iter()
                    .zip(&grads)
                    .zip(adam.m.iter_mut())
                    .zip(adam.v.iter_mut())
                {
                    for (((pv, &gv), mv), vv) in p
                        .as_mut_slice()
                        .iter_mut()
                        .zip(g.as_slice())
                        .zip(m.as_mut_slice())
                        .zip(v.as_mut_slice())
                    {
                        *mv = beta1 * *mv + (1.0 - beta1) * gv;
                        *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                        *pv -= cfg.lr * (*mv / c1) / ((*vv / c2).sqrt() + eps);
                    }
                }
            }
        }
    }
    let (best_epoch, model) = match best {
        Some((e, _, m)) => (e, m),
        None => (history.len() - 1, model),
    };
    Ok(TrainOutcome {
        model,
        best_epoch,
        history,
    })
}

/// Dirichlet measure of the hidden states `H⁰..Hᴺ` of a trained model.
pub fn trained_energy_profile(model: &GcnModel, g: &Graph, x: &FeatureMatrix, run_id: &str) -> Result<MeasureSeries> {
    model.check_input(g, x)?;
    let mut tape = Tape::new(g.normalized_operator());
    let f = model.forward(&mut tape, x)?;
    let values = f
        .hidden
        .iter()
        .map(|&h| Measure::DIRICHLET.evaluate(tape.value(h), g))
        .collect::<Result<Vec<f64>>>()?;
    MeasureSeries::layered("dirichlet", run_id, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;
    use rand_distr::StandardNormal;

    fn setup(v: usize, f: usize, seed: u64) -> (Graph, Matrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<(usize, usize)> = (0..v)
            .flat_map(|i| (i + 1..v).map(move |j| (i, j)))
            .filter(|_| rng.random_bool(0.3))
            .collect();
        let g = Graph::from_edges(v, &edges).unwrap();
        let x = Matrix::from_fn(v, f, |_, _| rng.sample(StandardNormal));
        let labels = (0..v).map(|i| i % 3).collect();
        (g, x, labels)
    }

    #[test]
    fn model_gradient_matches_finite_differences() {
        let (g, x, labels) = setup(12, 5, 3);
        let mask: Vec<usize> = (0..12).step_by(2).collect();
        for (shared, bias) in [(true, true), (false, true), (true, false)] {
            let cfg = TrainConfig {
                depth: 3,
                width: 4,
                shared,
                bias,
                ..Default::default()
            };
            let mut model = GcnModel::init(5, 3, &cfg).unwrap();
            if let Some(b) = &mut model.biases {
                b.iter_mut().for_each(|row| *row = row.map(|_| 0.1));
            }
            let (_, grads) = loss_and_grad(&model, &g, &x, &labels, &mask).unwrap();
            let h = 1e-5;
            for (k, grad) in grads.iter().enumerate() {
                let mut numeric = Matrix::zeros(grad.rows(), grad.cols());
                for e in 0..grad.as_slice().len() {
                    let mut probe = model.clone();
                    probe.params_mut()[k].as_mut_slice()[e] += h;
                    let plus = loss_and_grad(&probe, &g, &x, &labels, &mask).unwrap().0;
                    probe.params_mut()[k].as_mut_slice()[e] -= 2.0 * h;
                    let minus = loss_and_grad(&probe, &g, &x, &labels, &mask).unwrap().0;
                    numeric.as_mut_slice()[e] = (plus - minus) / (2.0 * h);
                }
                let scale = numeric.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
                let err = grad.max_abs_diff(&numeric) / scale;
                assert!(err < 1e-4, "param {k} (shared {shared}, bias {bias}): {err}");
            }
        }
    }

    #[test]
    fn shared_gradient_is_sum_of_unrolled() {
        let (g, x, labels) = setup(12, 5, 8);
        let mask: Vec<usize> = (0..12).collect();
        let cfg = TrainConfig {
            depth: 4,
            width: 4,
            ..Default::default()
        };
        let shared = GcnModel::init(5, 3, &cfg).unwrap();
        let mut unrolled = shared.clone();
        unrolled.weights = vec![shared.weights[0].clone(); 4];
        unrolled.biases = Some(vec![shared.biases.as_ref().unwrap()[0].clone(); 4]);
        let (ls, gs) = loss_and_grad(&shared, &g, &x, &labels, &mask).unwrap();
        let (lu, gu) = loss_and_grad(&unrolled, &g, &x, &labels, &mask).unwrap();
        assert_eq!(ls, lu);
        let sum = |from: usize| {
            let mut acc = gu[from].clone();
            for k in 1..4 {
                acc.axpy(1.0, &gu[from + k]).unwrap();
            }
            acc
        };
        // params: encoder, W, b, readout, readout_bias vs encoder, W×4, b×4, ...
        assert!(gs[1].max_abs_diff(&sum(1)) < 1e-8);
        assert!(gs[2].max_abs_diff(&sum(5)) < 1e-8);
        assert!(gs[0].max_abs_diff(&gu[0]) < 1e-8);
    }

    #[test]
    fn errors_and_lr_zero() {
        let (g, x, labels) = setup(12, 5, 1);
        let cfg = TrainConfig {
            width: 4,
            epochs: 5,
            lr: 0.0,
            ..Default::default()
        };
        let model = GcnModel::init(5, 3, &cfg).unwrap();
        assert!(matches!(loss_and_grad(&model, &g, &x, &labels, &[]), Err(Error::EmptyMask)));
        assert!(matches!(
            train(&cfg, &g, &x, &labels, &Masks::default()),
            Err(Error::EmptyMask)
        ));
        let overlapping = Masks {
            train: vec![0, 1],
            val: vec![1],
            test: vec![],
        };
        assert!(train(&cfg, &g, &x, &labels, &overlapping).is_err());

        let masks = Masks {
            train: (0..6).collect(),
            val: (6..9).collect(),
            test: (9..12).collect(),
        };
        let out = train(&cfg, &g, &x, &labels, &masks).unwrap();
        assert_eq!(out.model, model);
        assert_eq!(out.history.len(), 6);
        assert!(out.history.iter().all(|m| m.train_acc == out.history[0].train_acc));
        assert_eq!(out.history, train(&cfg, &g, &x, &labels, &masks).unwrap().history);
    }

    #[test]
    fn readout_bias_fits_single_class() {
        let (g, x, _) = setup(12, 5, 4);
        let labels = vec![0; 12];
        let mask: Vec<usize> = (0..12).collect();
        let cfg = TrainConfig {
            width: 4,
            ..Default::default()
        };
        let mut model = GcnModel::init(5, 2, &cfg).unwrap();
        let mut last = f64::INFINITY;
        for _ in 0..50 {
            let (loss, grads) = loss_and_grad(&model, &g, &x, &labels, &mask).unwrap();
            assert!(loss < last);
            last = loss;
            let k = grads.len() - 1;
            model.readout_bias.axpy(-0.1, &grads[k]).unwrap();
        }
    }

    #[test]
    fn barbell_is_learned() {
        let g = Graph::generate(GraphKind::Barbell(8)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Matrix::from_fn(16, 4, |_, _| rng.sample(StandardNormal));
        let labels: Vec<usize> = (0..16).map(|i| usize::from(i >= 8)).collect();
        let cfg = TrainConfig {
            depth: 2,
            width: 8,
            ..Default::default()
        };
        let masks = Masks {
            train: (0..16).collect(),
            ..Default::default()
        };
        let out = train(&cfg, &g, &x, &labels, &masks).unwrap();
        assert!(out.history.last().unwrap().train_acc >= 0.9);
        let profile = trained_energy_profile(&out.model, &g, &x, "barbell").unwrap();
        assert_eq!(profile.len(), 3);
    }
}

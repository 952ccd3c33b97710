//! Continuous-time message passing `X′(t) = σ(F(X(t)))` with fixed-step
//! explicit integrators, and the time-domain over-smoothing detector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::harness::{init_weights, InitScheme};
use crate::layers::Activation;
use crate::matrix::{FeatureMatrix, Matrix};
use crate::measures::{fit_decay, DecayFit, FitOptions, Measure, MeasureSeries};

/// Target number of sampling intervals when no stride is given.
pub const DEFAULT_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

/// Coupling inside the GraphCON dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Forcing {
    /// `F(X) = −LX` with the combinatorial Laplacian.
    NegLaplacian,
    /// `F(X) = PXW` with a fixed random `W`.
    Gcn,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorField {
    /// `X′ = −LX`.
    Heat,
    /// `X″ = σ(F(X)) − γX − αX′`, integrated as a first-order system in `(X, Y)`.
    Graphcon {
        gamma: f64,
        alpha: f64,
        forcing: Forcing,
        activation: Activation,
    },
    /// `X′ = σ(PXW)` with a fixed random `W`.
    Gcn { activation: Activation },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeConfig {
    pub field: VectorField,
    pub t_end: f64,
    pub dt: f64,
    /// Steps between samples; by default chosen for about 100 samples.
    pub sample_stride: Option<usize>,
    pub integrator: Integrator,
    /// Seeds the fixed weight of the GCN couplings.
    pub seed: u64,
    pub measure: Measure,
}

impl OdeConfig {
    pub fn new(field: VectorField, t_end: f64, dt: f64) -> Self {
        Self {
            field,
            t_end,
            dt,
            sample_stride: None,
            integrator: Integrator::Rk4,
            seed: 0,
            measure: Measure::DIRICHLET,
        }
    }

    /// Number of steps covering `[0, t_end]`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.t_end > 0.0 && self.dt > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end and dt must be positive"));
        }
        if self.dt >= self.t_end {
            return Err(Error::invalid(format!(
                "dt = {} must be smaller than t_end = {}",
                self.dt, self.t_end
            )));
        }
        let steps = (self.t_end / self.dt).round();
        if ((steps * self.dt - self.t_end) / self.t_end).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "dt = {} does not divide t_end = {}",
                self.dt, self.t_end
            )));
        }
        Ok(steps as usize)
    }

    /// Sampling stride in steps; an explicit stride must divide the step
    /// count, the default is the largest divisor leaving at least 100
    /// intervals.
    pub fn stride(&self) -> Result<usize> {
        let steps = self.steps()?;
        match self.sample_stride {
            Some(0) => Err(Error::invalid("sample stride must be at least 1")),
            Some(s) if steps % s != 0 => Err(Error::invalid(format!(
                "sample stride {s} does not divide {steps} steps"
            ))),
            Some(s) => Ok(s),
            None => Ok((1..=steps.div_ceil(DEFAULT_SAMPLES).max(1))
                .rev()
                .find(|d| steps % d == 0 && steps / d >= DEFAULT_SAMPLES.min(steps))
                .unwrap_or(1)),
        }
    }
}

/// `(X, Y)`; `Y` is empty for first-order fields.
#[derive(Clone, Debug, PartialEq)]
struct State {
    x: Matrix,
    y: Option<Matrix>,
}

impl State {
    fn axpy(&self, h: f64, d: &State) -> Result<State> {
        let mut x = self.x.clone();
        x.axpy(h, &d.x)?;
        let y = match (&self.y, &d.y) {
            (Some(y), Some(dy)) => {
                let mut y = y.clone();
                y.axpy(h, dy)?;
                Some(y)
            }
            _ => None,
        };
        Ok(State { x, y })
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.as_ref().is_none_or(|y| y.is_finite())
    }
}

struct Dynamics<'a> {
    g: &'a Graph,
    field: VectorField,
    weight: Option<Matrix>,
}

impl Dynamics<'_> {
    fn gcn_map(&self, x: &Matrix) -> Result<Matrix> {
        let w = self.weight.as_ref().expect("GCN couplings carry a weight");
        self.g.normalized_operator().apply(&x.matmul(w)?)
    }

    fn derivative(&self, s: &State) -> Result<State> {
        match self.field {
            VectorField::Heat => Ok(State {
                x: self.g.laplacian_apply(&s.x)?.scale(-1.0),
                y: None,
            }),
            VectorField::Gcn { activation } => Ok(State {
                x: activation.apply(&self.gcn_map(&s.x)?),
                y: None,
            }),
            VectorField::Graphcon {
                gamma,
                alpha,
                forcing,
                activation,
            } => {
                let y = s.y.as_ref().expect("second-order state");
                let f = match forcing {
                    Forcing::NegLaplacian => self.g.laplacian_apply(&s.x)?.scale(-1.0),
                    Forcing::Gcn => self.gcn_map(&s.x)?,
                };
                let mut dy = activation.apply(&f);
                dy.axpy(-gamma, &s.x)?;
                dy.axpy(-alpha, y)?;
                Ok(State {
                    x: y.clone(),
                    y: Some(dy),
                })
            }
        }
    }

    fn step(&self, s: &State, h: f64, integrator: Integrator) -> Result<State> {
        match integrator {
            Integrator::Euler => s.axpy(h, &self.derivative(s)?),
            Integrator::Rk4 => {
                let k1 = self.derivative(s)?;
                let k2 = self.derivative(&s.axpy(h / 2.0, &k1)?)?;
                let k3 = self.derivative(&s.axpy(h / 2.0, &k2)?)?;
                let k4 = self.derivative(&s.axpy(h, &k3)?)?;
                s.axpy(h / 6.0, &k1)?
                    .axpy(h / 3.0, &k2)?
                    .axpy(h / 3.0, &k3)?
                    .axpy(h / 6.0, &k4)
            }
        }
    }
}

/// Integrates from `X(0) = x0` (and `Y(0) = 0` for GraphCON), calling
/// `visit(t, X(t))` at every sample time including `t = 0`.
pub fn integrate_visit(
    cfg: &OdeConfig,
    g: &Graph,
    x0: &FeatureMatrix,
    mut visit: impl FnMut(f64, &FeatureMatrix) -> Result<()>,
) -> Result<()> {
    g.check_rows(x0)?;
    if !x0.is_finite() {
        return Err(Error::NonFinite("initial features".into()));
    }
    let steps = cfg.steps()?;
    let stride = cfg.stride()?;
    let m = x0.cols();
    let needs_weight = matches!(
        cfg.field,
        VectorField::Gcn { .. }
            | VectorField::Graphcon {
                forcing: Forcing::Gcn,
                ..
            }
    );
    let dynamics = Dynamics {
        g,
        field: cfg.field,
        weight: needs_weight
            .then(|| init_weights(m, m, cfg.seed, InitScheme::GlorotUniform))
            .transpose()?,
    };
    let mut state = State {
        x: x0.clone(),
        y: matches!(cfg.field, VectorField::Graphcon { .. }).then(|| Matrix::zeros(x0.rows(), m)),
    };
    visit(0.0, &state.x)?;
    for k in 1..=steps {
        state = dynamics.step(&state, cfg.dt, cfg.integrator)?;
        let t = k as f64 * cfg.dt;
        if !state.is_finite() {
            return Err(Error::BlowUp { time: t });
        }
        if k % stride == 0 {
            visit(t, &state.x)?;
        }
    }
    Ok(())
}

/// The configured measure sampled over time.
pub fn integrate_record(
    cfg: &OdeConfig,
    g: &Graph,
    x0: &FeatureMatrix,
    run_id: &str,
) -> Result<MeasureSeries> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    integrate_visit(cfg, g, x0, |t, x| {
        times.push(t);
        values.push(cfg.measure.evaluate(x, g)?);
        Ok(())
    })?;
    MeasureSeries::new(cfg.measure.name(), run_id, times, values)
}

/// Fits the time series; `exponential` means the dynamics over-smooth.
pub fn detect_ct_oversmoothing(series: &MeasureSeries, opts: &FitOptions) -> Result<DecayFit> {
    fit_decay(series, opts)
}

/// Largest Laplacian eigenvalue by power iteration.
pub fn laplacian_lambda_max(g: &Graph) -> f64 {
    let v = g.node_count();
    if g.edge_count() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = Matrix::from_fn(v, 1, |_, _| rng.random_range(-1.0..1.0));
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let norm = x.frobenius_norm();
        x = x.scale(1.0 / norm);
        let lx = g.laplacian_apply(&x).expect("shape matches");
        let next: f64 = x.as_slice().iter().zip(lx.as_slice()).map(|(a, b)| a * b).sum();
        x = lx;
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Step size below which explicit Euler on `X′ = −LX` decays monotonically
/// in every eigenmode: `1/λ_max`.
pub fn euler_heat_dt_bound(g: &Graph) -> f64 {
    let l = laplacian_lambda_max(g);
    if l > 0.0 {
        1.0 / l
    } else {
        f64::INFINITY
    }
}

//! Randomized compliance checks for the node-similarity axioms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::Measure;
use crate::error::Result;
use crate::graph::Graph;
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug)]
pub struct AxiomOptions {
    pub trials: usize,
    pub tol: f64,
    /// Feature width `m` of the sampled matrices.
    pub dim: usize,
    /// Sample strictly positive entries instead of standard normals.
    pub positive: bool,
    pub seed: u64,
}

impl Default for AxiomOptions {
    fn default() -> Self {
        Self {
            trials: 1000,
            tol: 1e-9,
            dim: 4,
            positive: false,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    /// Left-hand side of the violated relation.
    pub lhs: f64,
    /// Right-hand side (the tolerance for the zero checks).
    pub rhs: f64,
    pub x: Matrix,
    pub y: Option<Matrix>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub trials: usize,
    pub counterexample: Option<Counterexample>,
}

/// Outcome of the three sampled checks.
#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    /// `μ(1cᵀ) = 0` for constant-row matrices.
    pub zero_on_constant: Verdict,
    /// `μ(X) > 0` for non-constant `X`.
    pub positive_on_nonconstant: Verdict,
    /// `μ(X + Y) ≤ μ(X) + μ(Y)`.
    pub subadditive: Verdict,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.zero_on_constant.passed && self.positive_on_nonconstant.passed && self.subadditive.passed
    }
}

struct Sampler {
    rng: ChaCha8Rng,
    positive: bool,
}

impl Sampler {
    fn entry(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        if self.positive {
            z.abs() + 0.01
        } else {
            z
        }
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| self.entry())
    }

    fn constant(&mut self, rows: usize, cols: usize) -> Matrix {
        let c: Vec<f64> = (0..cols).map(|_| self.entry()).collect();
        Matrix::broadcast_row(rows, &c)
    }
}

/// Samples `trials` instances of each axiom and reports the first violation.
///
/// Failures are data: a measure that violates an axiom yields a report with
/// `passed = false` and the offending sample, not an error.
pub fn verify_axioms(measure: &Measure, g: &Graph, opts: &AxiomOptions) -> Result<AxiomReport> {
    let v = g.node_count();
    let m = opts.dim.max(1);
    let mut sampler = Sampler {
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        positive: opts.positive,
    };

    let mut zero = None;
    for trial in 0..opts.trials {
        let x = sampler.constant(v, m);
        let mu = measure.evaluate(&x, g)?;
        if mu > opts.tol {
            zero = Some(Counterexample {
                trial,
                lhs: mu,
                rhs: opts.tol,
                x,
                y: None,
            });
            break;
        }
    }

    let mut positive = None;
    for trial in 0..opts.trials {
        let x = sampler.matrix(v, m);
        if x.rows_identical() {
            continue;
        }
        let mu = measure.evaluate(&x, g)?;
        if mu <= opts.tol {
            positive = Some(Counterexample {
                trial,
                lhs: mu,
                rhs: opts.tol,
                x,
                y: None,
            });
            break;
        }
    }

    let mut subadditive = None;
    for trial in 0..opts.trials {
        let x = sampler.matrix(v, m);
        let y = sampler.matrix(v, m);
        let lhs = measure.evaluate(&x.add(&y)?, g)?;
        let rhs = measure.evaluate(&x, g)? + measure.evaluate(&y, g)?;
        if lhs > rhs + opts.tol {
            subadditive = Some(Counterexample {
                trial,
                lhs,
                rhs,
                x,
                y: Some(y),
            });
            break;
        }
    }

    let verdict = |c: Option<Counterexample>| Verdict {
        passed: c.is_none(),
        trials: opts.trials,
        counterexample: c,
    };
    Ok(AxiomReport {
        zero_on_constant: verdict(zero),
        positive_on_nonconstant: verdict(positive),
        subadditive: verdict(subadditive),
    })
}

//! Node-similarity measures on feature matrices.
//!
//! A node-similarity measure is a non-negative functional that vanishes
//! exactly on matrices whose rows are all equal and that is subadditive.
//! The square root of the graph Dirichlet energy (and its `p`-th root for
//! other `Lᵖ` norms) qualifies; the mean average distance (MAD) does not,
//! but is provided because it is widely used and still decays when a
//! network over-smooths with multi-dimensional features.

mod axioms;
mod decay;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use axioms::{verify_axioms, AxiomOptions, AxiomReport, Counterexample, Verdict};
pub use decay::{fit_decay, DecayClass, DecayFit, FitOptions, MeasureSeries};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::FeatureMatrix;

/// Rows with a Euclidean norm below this contribute nothing to MAD.
pub const MAD_NORM_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `(1/v) Σᵢ Σ_{j∈N(i)} ‖xᵢ − xⱼ‖ₚᵖ`
    #[default]
    Plain,
    /// `Σᵢ Σ_{j∈N(i)} ‖xᵢ/√(1+dᵢ) − xⱼ/√(1+dⱼ)‖ₚᵖ`, no `1/v` factor.
    ///
    /// Vanishes on rows proportional to `√(1+dᵢ)`, not on constant rows, so
    /// it is not a node-similarity measure on irregular graphs.
    Degree,
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("norm exponent p must be >= 1, got {p}")));
    }
    Ok(())
}

/// Graph Dirichlet energy. Each undirected edge is counted once per
/// direction, so an edge contributes twice.
pub fn dirichlet_energy(
    x: &FeatureMatrix,
    g: &Graph,
    p: f64,
    normalization: Normalization,
) -> Result<f64> {
    g.check_rows(x)?;
    check_p(p)?;
    let v = g.node_count();
    let pow = |d: f64| {
        if p == 2.0 {
            d * d
        } else {
            d.abs().powf(p)
        }
    };
    let mut total = 0.0;
    match normalization {
        Normalization::Plain => {
            for i in 0..v {
                let xi = x.row(i);
                for &j in g.neighbors(i) {
                    total += xi.iter().zip(x.row(j)).map(|(a, b)| pow(a - b)).sum::<f64>();
                }
            }
            total /= v as f64;
        }
        Normalization::Degree => {
            let scale: Vec<f64> = (0..v)
                .map(|i| 1.0 / ((1 + g.degree(i)) as f64).sqrt())
                .collect();
            for i in 0..v {
                let xi = x.row(i);
                for &j in g.neighbors(i) {
                    total += xi
                        .iter()
                        .zip(x.row(j))
                        .map(|(a, b)| pow(a * scale[i] - b * scale[j]))
                        .sum::<f64>();
                }
            }
        }
    }
    Ok(total)
}

/// `E^{1/p}`: for `p = 2` the square root of the Dirichlet energy.
pub fn dirichlet_measure(
    x: &FeatureMatrix,
    g: &Graph,
    p: f64,
    normalization: Normalization,
) -> Result<f64> {
    let e = dirichlet_energy(x, g, p, normalization)?;
    Ok(if p == 2.0 { e.sqrt() } else { e.powf(1.0 / p) })
}

/// Mean average (cosine) distance over 1-neighborhoods.
pub fn mad(x: &FeatureMatrix, g: &Graph) -> Result<f64> {
    g.check_rows(x)?;
    let norms: Vec<f64> = x
        .row_iter()
        .map(|r| r.iter().map(|a| a * a).sum::<f64>().sqrt())
        .collect();
    let mut total = 0.0;
    for i in 0..g.node_count() {
        if norms[i] < MAD_NORM_FLOOR {
            continue;
        }
        for &j in g.neighbors(i) {
            if norms[j] < MAD_NORM_FLOOR {
                continue;
            }
            let dot: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| a * b).sum();
            // Rounding can push the cosine a few ulps above 1.
            total += (1.0 - dot / (norms[i] * norms[j])).max(0.0);
        }
    }
    Ok(total / g.node_count() as f64)
}

/// A measure choice with its options, evaluable on any `(X, G)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measure {
    /// `p`-th root of the Dirichlet energy.
    Dirichlet { p: f64, normalization: Normalization },
    /// The raw energy without the root. Not subadditive.
    Energy { p: f64, normalization: Normalization },
    Mad,
}

impl Measure {
    pub const DIRICHLET: Measure = Measure::Dirichlet {
        p: 2.0,
        normalization: Normalization::Plain,
    };

    pub fn evaluate(&self, x: &FeatureMatrix, g: &Graph) -> Result<f64> {
        match *self {
            Measure::Dirichlet { p, normalization } => dirichlet_measure(x, g, p, normalization),
            Measure::Energy { p, normalization } => dirichlet_energy(x, g, p, normalization),
            Measure::Mad => mad(x, g),
        }
    }

    /// Short label used in series files.
    pub fn name(&self) -> &'static str {
        match self {
            Measure::Dirichlet { .. } => "dirichlet",
            Measure::Energy { .. } => "energy",
            Measure::Mad => "mad",
        }
    }

    /// Same measure with `p` and normalization replaced, where applicable.
    pub fn with_options(self, p: f64, normalization: Normalization) -> Measure {
        match self {
            Measure::Dirichlet { .. } => Measure::Dirichlet { p, normalization },
            Measure::Energy { .. } => Measure::Energy { p, normalization },
            Measure::Mad => Measure::Mad,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dirichlet" => Ok(Measure::DIRICHLET),
            "energy" => Ok(Measure::Energy {
                p: 2.0,
                normalization: Normalization::Plain,
            }),
            "mad" => Ok(Measure::Mad),
            other => Err(Error::invalid(format!("unknown measure '{other}'"))),
        }
    }
}

/// Sum of `base` over the connected components of `g`, each evaluated on the
/// induced subgraph with the matching feature rows.
pub fn component_sum_measure(x: &FeatureMatrix, g: &Graph, base: &Measure) -> Result<f64> {
    g.check_rows(x)?;
    let components = g.connected_components();
    if components.len() == 1 {
        return base.evaluate(x, g);
    }
    components.iter().try_fold(0.0, |acc, comp| {
        let sub = g.induced_subgraph(comp)?;
        Ok(acc + base.evaluate(&x.select_rows(comp), &sub)?)
    })
}

//! Measuring over-smoothing in graph neural networks.
//!
//! The crate provides node-similarity measures (Dirichlet energy, MAD) and a
//! decay fit that classifies layer-wise or time-wise measure series, single
//! steps of common message-passing architectures, an untrained propagation
//! harness, a small reverse-mode autodiff engine for training deep GCNs, and
//! continuous-time integrators.
//!
//! ```
//! use oversmooth::{Graph, GraphKind, Measure, harness};
//!
//! let g = Graph::generate(GraphKind::Ring(8)).unwrap();
//! let x = harness::init_features(8, 4, 0).unwrap();
//! assert!(Measure::DIRICHLET.evaluate(&x, &g).unwrap() > 0.0);
//! ```

pub mod autodiff;
pub mod continuous;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod layers;
pub mod matrix;
pub mod measures;

pub use error::{Error, Result};
pub use graph::{Graph, GraphKind, NormalizedOperator};
pub use matrix::{FeatureMatrix, Matrix};
pub use measures::{
    component_sum_measure, dirichlet_energy, dirichlet_measure, fit_decay, mad, verify_axioms,
    DecayClass, DecayFit, FitOptions, Measure, MeasureSeries, Normalization,
};

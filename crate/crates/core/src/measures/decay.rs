//! Decay-rate classification of measure series.
//!
//! Over-smoothing means `μ(Xⁿ) ≤ C₁ e^{−C₂ n}` with `C₁, C₂ > 0`. Given a
//! recorded series we fit `log μ` against `n` (exponential) and against
//! `log(1 + n)` (algebraic), and classify the series by which model
//! explains it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One measure recorded over layers or time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSeries {
    pub measure: String,
    pub run_id: String,
    /// Layer numbers or sample times, strictly increasing.
    pub index: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl MeasureSeries {
    pub fn new(
        measure: impl Into<String>,
        run_id: impl Into<String>,
        index: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if index.len() != values.len() {
            return Err(Error::shape(format!(
                "series index has {} entries, values {}",
                index.len(),
                values.len()
            )));
        }
        if index.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("series index must be strictly increasing"));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!(
                "series values must be finite and non-negative, got {v}"
            )));
        }
        Ok(Self {
            measure: measure.into(),
            run_id: run_id.into(),
            index,
            values,
            metadata: BTreeMap::new(),
        })
    }

    /// Series over layers `0..values.len()`.
    pub fn layered(
        measure: impl Into<String>,
        run_id: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let index = (0..values.len()).map(|n| n as f64).collect();
        Self::new(measure, run_id, index, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// Same series multiplied by a positive constant.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.values.iter_mut().for_each(|v| *v *= factor);
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayClass {
    Exponential,
    Algebraic,
    Constant,
    Undetermined,
}

impl DecayClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecayClass::Exponential => "exponential",
            DecayClass::Algebraic => "algebraic",
            DecayClass::Constant => "constant",
            DecayClass::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for DecayClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecayClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exponential" => DecayClass::Exponential,
            "algebraic" => DecayClass::Algebraic,
            "constant" => DecayClass::Constant,
            "undetermined" => DecayClass::Undetermined,
            _ => return Err(Error::invalid(format!("unknown decay class '{s}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Values below this are treated as numerically zero.
    pub floor: f64,
    /// Smallest `C₂` (per unit of index) accepted as exponential decay.
    pub min_rate: f64,
    pub min_r2: f64,
    /// A series whose max/min ratio is below this is constant.
    pub constant_ratio: f64,
    /// Leading samples to drop before fitting (warm-up trim).
    pub skip_leading: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            floor: 1e-12,
            min_rate: 0.05,
            min_r2: 0.95,
            constant_ratio: 0.5f64.exp(),
            skip_leading: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c1: f64,
    pub c2: f64,
    pub r2_exp: f64,
    pub r2_alg: f64,
    pub classification: DecayClass,
    /// Position of the first sample below the floor, counted from the start
    /// of the full series.
    pub floor_index: Option<usize>,
    /// max/min over the fitted window.
    pub ratio: f64,
    pub points_used: usize,
}

struct LineFit {
    slope: f64,
    r2: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    LineFit { slope, r2 }
}

/// Fits and classifies a decay series.
///
/// Only the samples before the first value below `opts.floor` enter the
/// regressions. `c1` is the tightest constant for which every fitted sample
/// satisfies `μ ≤ c1·e^{−c2·n}`.
pub fn fit_decay(series: &MeasureSeries, opts: &FitOptions) -> Result<DecayFit> {
    let start = opts.skip_leading.min(series.len());
    let index = &series.index[start..];
    let values = &series.values[start..];

    let floor_index = values.iter().position(|&v| v < opts.floor).map(|p| p + start);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);

    // An exactly flat series (including one identically at zero) is constant
    // regardless of the floor.
    if !values.is_empty() && max == min {
        return Ok(DecayFit {
            c1: max,
            c2: 0.0,
            r2_exp: 1.0,
            r2_alg: 1.0,
            classification: DecayClass::Constant,
            floor_index,
            ratio: 1.0,
            points_used: values.len(),
        });
    }

    let usable = floor_index.map_or(values.len(), |f| f - start);
    if usable < 4 {
        return Err(Error::InsufficientPoints { needed: 4, got: usable });
    }
    let x = &index[..usable];
    let log_y: Vec<f64> = values[..usable].iter().map(|v| v.ln()).collect();

    let exp_fit = least_squares(x, &log_y);
    let log_x: Vec<f64> = x.iter().map(|t| t.ln_1p()).collect();
    let alg_fit = least_squares(&log_x, &log_y);

    let c2 = -exp_fit.slope;
    let log_c1 = x
        .iter()
        .zip(&log_y)
        .map(|(t, ly)| ly + c2 * t)
        .fold(f64::NEG_INFINITY, f64::max);

    let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
    let classification = if ratio < opts.constant_ratio {
        DecayClass::Constant
    } else if c2 >= opts.min_rate && exp_fit.r2 >= opts.min_r2 && exp_fit.r2 >= alg_fit.r2 {
        DecayClass::Exponential
    } else if alg_fit.r2 >= opts.min_r2 {
        DecayClass::Algebraic
    } else {
        DecayClass::Undetermined
    };

    Ok(DecayFit {
        c1: log_c1.exp(),
        c2,
        r2_exp: exp_fit.r2,
        r2_alg: alg_fit.r2,
        classification,
        floor_index,
        ratio,
        points_used: usable,
    })
}

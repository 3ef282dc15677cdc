//! Anderson-Darling and Cramér-von Mises distances between a discrete
//! `P_N` and a continuous cdf `G`, in closed form over the order statistics.
//!
//! With `U_i = G(Y_(i))` and `W_i` the cumulative jumps,
//!
//! ```text
//! d_AD = Σ_{i<N} W_i² ln[U_{i+1}(1-U_i) / (U_i(1-U_{i+1}))]
//!      + Σ_{i<N} (2W_i - 1) ln[(1-U_{i+1}) / (1-U_i)] - 1 - ln[U_N (1-U_1)]
//! ```
//!
//! which is linear in `N`. Cdf values are clamped to `[ε, 1-ε]` before
//! taking logs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dirichlet::{CentreLaw, DPApproximation};
use crate::specialfn::ChiSquare;

pub const CDF_CLAMP: f64 = 1e-15;

/// Decreases in the evaluated cdf smaller than this are put down to
/// rounding rather than reported.
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistanceError {
    #[error("cdf is not nondecreasing over the atoms (index {index}: {prev} then {next})")]
    NonMonotoneCdf { index: usize, prev: f64, next: f64 },
    #[error("cdf returned a NaN at atom {0}")]
    NanCdf(f64),
    #[error("distance sample contains an invalid value at index {0}")]
    InvalidSample(usize),
}

/// A continuous cdf given as the pair `(G(x), 1 - G(x))`, so that the upper
/// tail does not have to be formed by subtraction.
pub trait ContinuousCdf {
    fn cdf_sf(&self, x: f64) -> (f64, f64);
}

impl ContinuousCdf for ChiSquare {
    fn cdf_sf(&self, x: f64) -> (f64, f64) {
        ChiSquare::cdf_sf(self, x)
    }
}

impl ContinuousCdf for CentreLaw {
    fn cdf_sf(&self, x: f64) -> (f64, f64) {
        CentreLaw::cdf_sf(self, x)
    }
}

/// Adapts a plain cdf closure.
pub struct FnCdf<F>(pub F);

impl<F: Fn(f64) -> f64> ContinuousCdf for FnCdf<F> {
    fn cdf_sf(&self, x: f64) -> (f64, f64) {
        let g = (self.0)(x);
        (g, 1.0 - g)
    }
}

fn clamped_logs<C: ContinuousCdf + ?Sized>(
    p: &DPApproximation,
    cdf: &C,
    ln_u: &mut Vec<f64>,
    ln_s: &mut Vec<f64>,
) -> Result<(), DistanceError> {
    ln_u.clear();
    ln_s.clear();
    let mut prev = f64::NEG_INFINITY;
    for (i, &y) in p.atoms().iter().enumerate() {
        let (g, s) = cdf.cdf_sf(y);
        if g.is_nan() || s.is_nan() {
            return Err(DistanceError::NanCdf(y));
        }
        if g < prev - MONOTONE_SLACK {
            return Err(DistanceError::NonMonotoneCdf {
                index: i,
                prev,
                next: g,
            });
        }
        prev = g;
        ln_u.push(g.clamp(CDF_CLAMP, 1.0 - CDF_CLAMP).ln());
        ln_s.push(s.clamp(CDF_CLAMP, 1.0 - CDF_CLAMP).ln());
    }
    Ok(())
}

/// Anderson-Darling distance `∫ (P_N - G)² / (G(1-G)) dG`.
pub fn ad_distance<C: ContinuousCdf + ?Sized>(p: &DPApproximation, cdf: &C) -> Result<f64, DistanceError> {
    let (mut ln_u, mut ln_s) = (Vec::new(), Vec::new());
    ad_distance_with_scratch(p, cdf, &mut ln_u, &mut ln_s)
}

/// [`ad_distance`] reusing caller-owned buffers.
pub fn ad_distance_with_scratch<C: ContinuousCdf + ?Sized>(
    p: &DPApproximation,
    cdf: &C,
    ln_u: &mut Vec<f64>,
    ln_s: &mut Vec<f64>,
) -> Result<f64, DistanceError> {
    clamped_logs(p, cdf, ln_u, ln_s)?;
    let n = ln_u.len();
    let jumps = p.jumps();
    let mut w = 0.0;
    let mut d = 0.0;
    for i in 0..n - 1 {
        w += jumps[i];
        let du = ln_u[i + 1] - ln_u[i];
        let ds = ln_s[i + 1] - ln_s[i];
        d += w * w * (du - ds) + (2.0 * w - 1.0) * ds;
    }
    d += -1.0 - ln_u[n - 1] - ln_s[0];
    Ok(d.max(0.0))
}

/// Cramér-von Mises distance `∫ (P_N - G)² dG`.
pub fn cvm_distance<C: ContinuousCdf + ?Sized>(p: &DPApproximation, cdf: &C) -> Result<f64, DistanceError> {
    let mut prev = f64::NEG_INFINITY;
    let mut u = Vec::with_capacity(p.len());
    for (i, &y) in p.atoms().iter().enumerate() {
        let (g, _) = cdf.cdf_sf(y);
        if g.is_nan() {
            return Err(DistanceError::NanCdf(y));
        }
        if g < prev - MONOTONE_SLACK {
            return Err(DistanceError::NonMonotoneCdf {
                index: i,
                prev,
                next: g,
            });
        }
        // absorb rounding-level decreases so the cubes stay ordered
        prev = prev.max(g);
        u.push(prev.clamp(0.0, 1.0));
    }
    let n = u.len();
    let jumps = p.jumps();
    let mut d = u[0].powi(3);
    let mut w = 0.0;
    for i in 0..n - 1 {
        w += jumps[i];
        d += (u[i + 1] - w).powi(3) - (u[i] - w).powi(3);
    }
    d += (1.0 - u[n - 1]).powi(3);
    Ok((d / 3.0).max(0.0))
}

/// Prior mean of the Anderson-Darling distance, `1 / (a + 1)`.
pub fn ad_prior_mean(a: f64) -> f64 {
    1.0 / (a + 1.0)
}

/// Prior variance of the Anderson-Darling distance.
pub fn ad_prior_variance(a: f64) -> f64 {
    let pi2 = std::f64::consts::PI.powi(2);
    let num = 2.0 * ((pi2 - 9.0) * a * a + (30.0 - 2.0 * pi2) * a - 3.0 * pi2 + 36.0);
    num / (3.0 * (a + 1.0).powi(2) * (a + 2.0) * (a + 3.0))
}

/// Prior mean of the Cramér-von Mises distance, `1 / (6 (a + 1))`.
pub fn cvm_prior_mean(a: f64) -> f64 {
    1.0 / (6.0 * (a + 1.0))
}

/// Limit of `(a + 1)² Var(d_AD)` as `a → ∞`.
pub fn ad_scaled_variance_limit() -> f64 {
    2.0 * (std::f64::consts::PI.powi(2) - 9.0) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleLabel {
    Prior,
    Posterior,
}

impl SampleLabel {
    pub fn name(self) -> &'static str {
        match self {
            Self::Prior => "prior",
            Self::Posterior => "posterior",
        }
    }
}

/// Monte Carlo distances, one per replicate, in replicate order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceSample {
    values: Vec<f64>,
    label: SampleLabel,
}

impl DistanceSample {
    pub fn new(values: Vec<f64>, label: SampleLabel) -> Result<Self, DistanceError> {
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(DistanceError::InvalidSample(i));
        }
        Ok(Self { values, label })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> SampleLabel {
        self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

//! Relative belief ratio for `H0: the data are multivariate normal`.
//!
//! The prior and posterior of the distance `D = d_AD(P, F_(m))` are sampled
//! by Monte Carlo; the prior sample fixes an `M`-bin quantile grid and the
//! relative belief ratio on each bin is `M` times its posterior content.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dirichlet::{sample_dp, BaseFamily, BaseMeasure, CentreLaw, DirichletError, RngStream};
use crate::distance::{ad_distance_with_scratch, ContinuousCdf, DistanceError, DistanceSample, SampleLabel};
use crate::mahalanobis::{mahalanobis_reduction, DataMatrix, MahalanobisError, SquaredDistances};
use crate::specialfn::{ChiSquare, DegreesOfFreedom};

/// Below this many observations (or residual degrees of freedom `n - m`)
/// the chi-square approximation to the squared distances is doubtful.
pub const SMALL_SAMPLE: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("a must be positive and finite, got {0}")]
    Concentration(f64),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("i0 = {i0} must be below M = {bins}")]
    SmallBin { i0: usize, bins: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RbError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mahalanobis(#[from] MahalanobisError),
    #[error(transparent)]
    Dirichlet(#[from] DirichletError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error("prior quantile grid is degenerate: {run} consecutive points equal {value} (M = {bins}); the prior has collapsed, check a and N")]
    DegenerateGrid { run: usize, value: f64, bins: usize },
    #[error("{0} distance sample is empty")]
    EmptySample(&'static str),
}

/// Tuning of the Monte Carlo test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Concentration of the Dirichlet process prior.
    pub a: f64,
    /// Atoms per Dirichlet process draw.
    #[serde(rename = "N")]
    pub n_atoms: usize,
    /// Prior replicates.
    pub r1: usize,
    /// Posterior replicates.
    pub r2: usize,
    /// Number of prior-quantile bins.
    #[serde(rename = "M")]
    pub bins: usize,
    /// Index of the bin whose upper edge stands in for distance zero.
    pub i0: usize,
    pub seed: u64,
    /// Centre of the prior; only the chi-square matches the null.
    #[serde(default)]
    pub base: BaseFamily,
}

impl TestConfig {
    pub const DEFAULT_N: usize = 500;
    pub const DEFAULT_R: usize = 1000;
    pub const DEFAULT_M: usize = 20;

    pub fn new(a: f64) -> Self {
        Self {
            a,
            n_atoms: Self::DEFAULT_N,
            r1: Self::DEFAULT_R,
            r2: Self::DEFAULT_R,
            bins: Self::DEFAULT_M,
            i0: default_i0(Self::DEFAULT_M),
            seed: 0,
            base: BaseFamily::ChiSquare,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(ConfigError::Concentration(self.a));
        }
        for (name, v) in [
            ("N", self.n_atoms),
            ("r1", self.r1),
            ("r2", self.r2),
            ("M", self.bins),
            ("i0", self.i0),
        ] {
            if v == 0 {
                return Err(ConfigError::Zero(name));
            }
        }
        if self.i0 >= self.bins {
            return Err(ConfigError::SmallBin {
                i0: self.i0,
                bins: self.bins,
            });
        }
        Ok(())
    }
}

/// `ceil(0.05 M)`, and at least 1.
pub fn default_i0(bins: usize) -> usize {
    bins.div_ceil(20).max(1)
}

/// Prior quantiles `d̂_0 = 0 ≤ d̂_{1/M} ≤ … ≤ d̂_1 = max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct QuantileGrid(Vec<f64>);

impl QuantileGrid {
    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn bins(&self) -> usize {
        self.0.len() - 1
    }
}

/// Type-1 empirical quantiles: the smallest sample value whose empirical cdf
/// reaches `i / M`. Fails if more than `M / 2` consecutive grid points are
/// equal, which happens only when the prior sample has collapsed.
pub fn prior_quantile_grid(prior: &DistanceSample, bins: usize) -> Result<QuantileGrid, RbError> {
    let grid = quantile_grid_unchecked(prior, bins)?;
    let pts = grid.points();
    let mut run = 1;
    for i in 1..pts.len() {
        run = if pts[i] == pts[i - 1] { run + 1 } else { 1 };
        if 2 * run > bins {
            return Err(RbError::DegenerateGrid {
                run,
                value: pts[i],
                bins,
            });
        }
    }
    Ok(grid)
}

/// The grid without the degeneracy check.
pub fn quantile_grid_unchecked(prior: &DistanceSample, bins: usize) -> Result<QuantileGrid, RbError> {
    if prior.is_empty() {
        return Err(RbError::EmptySample("prior"));
    }
    if bins == 0 {
        return Err(ConfigError::Zero("M").into());
    }
    let mut sorted = prior.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = sorted.len();
    let mut grid = Vec::with_capacity(bins + 1);
    grid.push(0.0);
    for i in 1..=bins {
        // smallest k with k / r >= i / M
        let k = (i * r).div_ceil(bins);
        grid.push(sorted[k - 1]);
    }
    Ok(QuantileGrid(grid))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub a: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbReport {
    /// Estimated relative belief ratio at distance zero, in `[0, M]`.
    pub rb_at_zero: f64,
    /// Posterior probability that the ratio does not exceed `rb_at_zero`.
    pub strength: f64,
    pub rb_per_bin: Vec<f64>,
    pub quantile_grid: QuantileGrid,
    pub prior_distances: DistanceSample,
    pub posterior_distances: DistanceSample,
    pub diagnostics: Diagnostics,
}

impl RbReport {
    pub fn verdict(&self) -> Verdict {
        Verdict::from_rb(self.rb_at_zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    FavorH0,
    AgainstH0,
    NoEvidence,
}

impl Verdict {
    pub fn from_rb(rb: f64) -> Self {
        if rb > 1.0 {
            Self::FavorH0
        } else if rb < 1.0 {
            Self::AgainstH0
        } else {
            Self::NoEvidence
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::FavorH0 => "favor_H0",
            Self::AgainstH0 => "against_H0",
            Self::NoEvidence => "no_evidence",
        }
    }
}

/// Number of sample values `<= t` in a sorted slice.
fn count_at_or_below(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&v| v <= t)
}

/// Relative belief at zero, per-bin ratios and strength from the two
/// distance samples.
///
/// Bins are `(d̂_{i/M}, d̂_{(i+1)/M}]`, the differences of the posterior
/// empirical cdf at consecutive grid points, except that the first bin also
/// takes the point zero and the last one everything above `d̂_1`. The
/// strength adds the posterior content `F̂(d̂_{i0/M})` of the region that
/// defines the ratio at zero to that of every bin `i >= i0` whose ratio does
/// not exceed it.
pub fn rb_estimate(
    prior: &DistanceSample,
    posterior: &DistanceSample,
    config: &TestConfig,
) -> Result<RbReport, RbError> {
    config.validate()?;
    if posterior.is_empty() {
        return Err(RbError::EmptySample("posterior"));
    }
    let bins = config.bins;
    let grid = prior_quantile_grid(prior, bins)?;
    let g = grid.points();

    let mut post = posterior.values().to_vec();
    post.sort_by(f64::total_cmp);
    let r2 = post.len();
    let cdf = |t: f64| count_at_or_below(&post, t) as f64 / r2 as f64;

    let mut mass = Vec::with_capacity(bins);
    for b in 0..bins {
        let below = if b == 0 { 0 } else { count_at_or_below(&post, g[b]) };
        let upto = if b + 1 == bins {
            r2
        } else {
            count_at_or_below(&post, g[b + 1])
        };
        mass.push((upto - below) as f64 / r2 as f64);
    }
    let rb_per_bin: Vec<f64> = mass.iter().map(|p| bins as f64 * p).collect();

    let zero_cell = cdf(g[config.i0]);
    let rb_at_zero = bins as f64 * zero_cell;
    let counted: f64 = (config.i0..bins)
        .filter(|&b| rb_per_bin[b] <= rb_at_zero)
        .map(|b| mass[b])
        .sum();
    let strength = (zero_cell + counted).clamp(0.0, 1.0);

    Ok(RbReport {
        rb_at_zero,
        strength,
        rb_per_bin,
        quantile_grid: grid,
        prior_distances: prior.clone(),
        posterior_distances: posterior.clone(),
        diagnostics: Diagnostics {
            n: None,
            m: None,
            a: config.a,
            warnings: Vec::new(),
        },
    })
}

/// `reps` Anderson-Darling distances of `DP(a, base)` draws from `target`;
/// replicate `k` uses stream `first_stream + k`, so the result does not
/// depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn distance_sample<C: ContinuousCdf + Sync + ?Sized>(
    a: f64,
    base: &BaseMeasure,
    target: &C,
    n_atoms: usize,
    reps: usize,
    seed: u64,
    first_stream: u64,
    label: SampleLabel,
) -> Result<DistanceSample, RbError> {
    let values = (0..reps as u64)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(ln_u, ln_s), k| -> Result<f64, RbError> {
                let mut rng = RngStream::new(seed, first_stream + k).rng();
                let p = sample_dp(a, base, n_atoms, &mut rng)?;
                Ok(ad_distance_with_scratch(&p, target, ln_u, ln_s)?)
            },
        )
        .collect::<Result<Vec<f64>, RbError>>()?;
    Ok(DistanceSample::new(values, label)?)
}

/// `reps` prior distances `d_AD(P, F_(m))` with `P ~ DP(a, F_(m))`.
///
/// The distance is invariant under the probability integral transform, so
/// the draws are made on the uniform scale, which skips a chi-square
/// quantile and cdf per atom. Replicate `k` uses stream `k`.
pub fn prior_distance_sample(a: f64, n_atoms: usize, reps: usize, seed: u64) -> Result<DistanceSample, RbError> {
    let uniform = CentreLaw::Uniform;
    distance_sample(
        a,
        &BaseMeasure::Prior(uniform),
        &uniform,
        n_atoms,
        reps,
        seed,
        0,
        SampleLabel::Prior,
    )
}

/// Runs the test on already-reduced squared distances of `m`-variate data.
pub fn run_test_on_distances(
    d: &SquaredDistances,
    m: DegreesOfFreedom,
    config: &TestConfig,
) -> Result<RbReport, RbError> {
    config.validate()?;
    let target = ChiSquare::new(m);
    let centre = config.base.centre(m);
    let prior = if config.base == BaseFamily::ChiSquare {
        prior_distance_sample(config.a, config.n_atoms, config.r1, config.seed)?
    } else {
        distance_sample(
            config.a,
            &BaseMeasure::Prior(centre),
            &target,
            config.n_atoms,
            config.r1,
            config.seed,
            0,
            SampleLabel::Prior,
        )?
    };
    let n = d.len();
    let post_base = BaseMeasure::posterior(config.a, d, centre)?;
    let posterior = distance_sample(
        config.a + n as f64,
        &post_base,
        &target,
        config.n_atoms,
        config.r2,
        config.seed,
        config.r1 as u64,
        SampleLabel::Posterior,
    )?;
    let mut report = rb_estimate(&prior, &posterior, config)?;
    let m = m.get() as usize;
    report.diagnostics.n = Some(n);
    report.diagnostics.m = Some(m);
    if config.a > 0.5 * n as f64 {
        report.diagnostics.warnings.push(format!(
            "a = {} exceeds n/2 = {}; a large concentration can favour H0 even when it is false",
            config.a,
            0.5 * n as f64
        ));
    }
    if n <= SMALL_SAMPLE || n.saturating_sub(m) <= SMALL_SAMPLE {
        report.diagnostics.warnings.push(format!(
            "n = {n}, n - m = {}: the chi-square approximation to squared Mahalanobis distances is only justified when both exceed {SMALL_SAMPLE}",
            n.saturating_sub(m)
        ));
    }
    if config.base != BaseFamily::ChiSquare {
        report.diagnostics.warnings.push(format!(
            "prior centred at {} instead of chi-square({m}); expect prior-data conflict",
            config.base.name()
        ));
    }
    Ok(report)
}

/// Full test: Mahalanobis reduction, prior and posterior Monte Carlo, and
/// the relative belief estimate.
pub fn run_test(data: &DataMatrix, config: &TestConfig) -> Result<RbReport, RbError> {
    config.validate()?;
    let reduction = mahalanobis_reduction(data)?;
    let m = DegreesOfFreedom::new(data.ncols() as u32).expect("DataMatrix has at least one column");
    let mut report = run_test_on_distances(&reduction.distances, m, config)?;
    if reduction.ill_conditioned() {
        report.diagnostics.warnings.push(format!(
            "sample covariance is ill-conditioned (pivot ratio {:.3e}); distances may be unstable",
            reduction.pivot_ratio
        ));
    }
    Ok(report)
}

//! Finite approximations `P_N = Σ J_i δ_{Y_i}` of Dirichlet processes.
//!
//! Weights are normalized gamma quantiles: with `Γ_i` the partial sums of
//! `N + 1` standard exponentials, `J_i ∝ G⁻¹(Γ_i / Γ_{N+1})` where `G⁻¹(p)` is
//! the upper `p`-quantile of gamma(a/N, 1). For small `a/N` those quantiles
//! underflow long before their ratios stop mattering, so they are solved and
//! normalized in log space.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mahalanobis::SquaredDistances;
use crate::specialfn::{gamma_quantile_ln, ln_gamma, std_normal_cdf_sf, ChiSquare, DegreesOfFreedom};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DirichletError {
    #[error("concentration must be positive and finite, got {0}")]
    InvalidConcentration(f64),
    #[error("the approximation needs at least one atom")]
    NoAtoms,
    #[error("every weight underflowed (a = {a}, N = {n_atoms}); N is too large for a")]
    DegenerateWeights { a: f64, n_atoms: usize },
    #[error("invalid DP approximation: {0}")]
    InvalidParts(&'static str),
}

/// A reproducible random stream: the same `(seed, stream)` always yields
/// the same draws, and distinct stream ids are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// The continuous law at the centre of the prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CentreLaw {
    ChiSquare(ChiSquare),
    /// Standard normal.
    Normal,
    /// Standard Cauchy.
    Cauchy,
    /// Uniform on (0, 1): any continuous centre seen through its own cdf.
    Uniform,
}

impl CentreLaw {
    pub fn chi_square(m: DegreesOfFreedom) -> Self {
        Self::ChiSquare(ChiSquare::new(m))
    }

    pub fn cdf_sf(&self, x: f64) -> (f64, f64) {
        match self {
            Self::ChiSquare(c) => c.cdf_sf(x),
            Self::Normal => std_normal_cdf_sf(x),
            Self::Cauchy => {
                let tail = 0.5 - x.abs().atan() / std::f64::consts::PI;
                if x < 0.0 {
                    (tail, 1.0 - tail)
                } else {
                    (1.0 - tail, tail)
                }
            }
            Self::Uniform => {
                let u = x.clamp(0.0, 1.0);
                (u, 1.0 - u)
            }
        }
    }

    /// Inverse cdf at `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Self::ChiSquare(c) => c.quantile_pq(u, 1.0 - u),
            Self::Normal => crate::specialfn::std_normal_quantile(u).unwrap_or(f64::NAN),
            Self::Cauchy => (std::f64::consts::PI * (u - 0.5)).tan(),
            Self::Uniform => u,
        }
    }
}

/// Which family sits at the centre of the prior, for configuration files.
/// The chi-square degrees of freedom always come from the data dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFamily {
    #[default]
    ChiSquare,
    Normal,
    Cauchy,
}

impl BaseFamily {
    pub fn centre(self, m: DegreesOfFreedom) -> CentreLaw {
        match self {
            Self::ChiSquare => CentreLaw::chi_square(m),
            Self::Normal => CentreLaw::Normal,
            Self::Cauchy => CentreLaw::Cauchy,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ChiSquare => "chi_square",
            Self::Normal => "normal",
            Self::Cauchy => "cauchy",
        }
    }
}

impl std::str::FromStr for BaseFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chi_square" | "chi2" | "chisq" => Ok(Self::ChiSquare),
            "normal" => Ok(Self::Normal),
            "cauchy" => Ok(Self::Cauchy),
            other => Err(format!("unknown base family `{other}`")),
        }
    }
}

/// Base measure of a Dirichlet process: the prior centre `H`, or the
/// posterior mixture `a/(a+n) H + n/(a+n) F_n` of `H` with the empirical
/// distribution of the observed distances.
#[derive(Debug, Clone)]
pub enum BaseMeasure {
    Prior(CentreLaw),
    Posterior {
        centre: CentreLaw,
        /// `a / (a + n)`.
        centre_weight: f64,
        data: Arc<[f64]>,
    },
}

impl BaseMeasure {
    pub fn prior_chi_square(m: DegreesOfFreedom) -> Self {
        Self::Prior(CentreLaw::chi_square(m))
    }

    pub fn posterior(a: f64, data: &SquaredDistances, centre: CentreLaw) -> Result<Self, DirichletError> {
        check_concentration(a)?;
        let n = data.len() as f64;
        Ok(Self::Posterior {
            centre,
            centre_weight: a / (a + n),
            data: Arc::from(data.as_slice()),
        })
    }

    /// One draw from the base measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Prior(centre) => centre.quantile(rng.sample(Open01)),
            Self::Posterior {
                centre,
                centre_weight,
                data,
            } => {
                let u: f64 = rng.random();
                if u < *centre_weight {
                    centre.quantile(rng.sample(Open01))
                } else {
                    data[rng.random_range(0..data.len())]
                }
            }
        }
    }
}

/// One draw `P_N`, atoms sorted ascending with their jumps carried along.
#[derive(Debug, Clone, PartialEq)]
pub struct DPApproximation {
    atoms: Vec<f64>,
    jumps: Vec<f64>,
}

impl DPApproximation {
    /// Builds from atoms and jumps in any order; sorts atoms stably and
    /// permutes the jumps with them.
    pub fn from_parts(atoms: Vec<f64>, jumps: Vec<f64>) -> Result<Self, DirichletError> {
        if atoms.is_empty() {
            return Err(DirichletError::NoAtoms);
        }
        if atoms.len() != jumps.len() {
            return Err(DirichletError::InvalidParts("atoms and jumps differ in length"));
        }
        if atoms.iter().any(|v| v.is_nan()) {
            return Err(DirichletError::InvalidParts("NaN atom"));
        }
        if jumps.iter().any(|&j| !(j >= 0.0 && j.is_finite())) {
            return Err(DirichletError::InvalidParts("jumps must be finite and nonnegative"));
        }
        let total: f64 = jumps.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DirichletError::InvalidParts("jumps must sum to one"));
        }
        Ok(Self::sorted(atoms, jumps))
    }

    fn sorted(atoms: Vec<f64>, jumps: Vec<f64>) -> Self {
        if atoms.windows(2).all(|w| w[0] <= w[1]) {
            return Self { atoms, jumps };
        }
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(jumps).collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let (atoms, jumps) = pairs.into_iter().unzip();
        Self { atoms, jumps }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `P_N((-∞, t])`.
    pub fn mass_at_or_below(&self, t: f64) -> f64 {
        let k = self.atoms.partition_point(|&y| y <= t);
        self.jumps[..k].iter().sum()
    }
}

fn check_concentration(a: f64) -> Result<(), DirichletError> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(DirichletError::InvalidConcentration(a))
    }
}

/// Normalized weights `J_1 ≥ … ≥ J_N` in generation order.
pub fn dp_weights<R: Rng + ?Sized>(a: f64, n_atoms: usize, rng: &mut R) -> Result<Vec<f64>, DirichletError> {
    check_concentration(a)?;
    if n_atoms == 0 {
        return Err(DirichletError::NoAtoms);
    }
    let e: Vec<f64> = (0..=n_atoms).map(|_| rng.sample(Exp1)).collect();
    // Γ_i / Γ_{N+1} and its complement from prefix and suffix sums, so that
    // neither side is formed by subtraction.
    let mut suffix = vec![0.0; n_atoms + 1];
    let mut acc = 0.0;
    for i in (0..=n_atoms).rev() {
        acc += e[i];
        suffix[i] = acc;
    }
    let total = suffix[0];
    let shape = a / n_atoms as f64;
    let lgs = ln_gamma(shape);

    let mut ln_w = Vec::with_capacity(n_atoms);
    let mut prefix = 0.0;
    let mut guess = None;
    let mut running = f64::INFINITY;
    for i in 0..n_atoms {
        prefix += e[i];
        let p = prefix / total;
        let q = suffix[i + 1] / total;
        let t = gamma_quantile_ln(shape, lgs, q, p, guess);
        // the exact quantiles decrease; keep solver noise from reordering them
        running = running.min(t);
        ln_w.push(running);
        if t.is_finite() {
            guess = Some(t);
        }
    }

    let top = ln_w[0];
    if !top.is_finite() {
        return Err(DirichletError::DegenerateWeights { a, n_atoms });
    }
    let mut w: Vec<f64> = ln_w.iter().map(|&l| (l - top).exp()).collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    Ok(w)
}

/// One draw from `DP(a, base)` truncated to `n_atoms` atoms.
pub fn sample_dp<R: Rng + ?Sized>(
    a: f64,
    base: &BaseMeasure,
    n_atoms: usize,
    rng: &mut R,
) -> Result<DPApproximation, DirichletError> {
    let jumps = dp_weights(a, n_atoms, rng)?;
    let atoms = (0..n_atoms).map(|_| base.sample(rng)).collect();
    Ok(DPApproximation::sorted(atoms, jumps))
}

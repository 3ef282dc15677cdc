//! Samplers for the null and alternative distributions of the simulation
//! study.

use rand::Rng;
use rand_distr::{Cauchy, ChiSquared, Distribution, Exp, Gamma, LogNormal, Normal, StandardNormal, StudentT, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Cholesky;
use crate::mahalanobis::{DataError, DataMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, SimError> {
    Err(SimError::InvalidSpec(msg.into()))
}

/// A univariate law, used for independent marginals and spherical radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum UnivariateLaw {
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Location-scale Student t; Pearson type VII in the simulation tables.
    StudentT {
        df: f64,
        loc: f64,
        scale: f64,
    },
    Cauchy {
        loc: f64,
        scale: f64,
    },
    Exponential {
        rate: f64,
    },
    ChiSquare {
        df: f64,
    },
    LogNormal {
        meanlog: f64,
        sdlog: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
}

impl UnivariateLaw {
    fn validate(&self) -> Result<(), SimError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be positive, got {v}"))
            }
        };
        match *self {
            Self::Normal { sd, .. } => positive("sd", sd),
            Self::StudentT { df, scale, .. } => positive("df", df).and(positive("scale", scale)),
            Self::Cauchy { scale, .. } => positive("scale", scale),
            Self::Exponential { rate } => positive("rate", rate),
            Self::ChiSquare { df } => positive("df", df),
            Self::LogNormal { sdlog, .. } => positive("sdlog", sdlog),
            Self::Gamma { shape, scale } => positive("shape", shape).and(positive("scale", scale)),
            Self::Uniform { low, high } => {
                if low < high {
                    Ok(())
                } else {
                    invalid("uniform needs low < high")
                }
            }
        }
    }

    /// Draws one value. Parameters must have been validated.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Normal { mean, sd } => Normal::new(mean, sd).unwrap().sample(rng),
            Self::StudentT { df, loc, scale } => loc + scale * StudentT::new(df).unwrap().sample(rng),
            Self::Cauchy { loc, scale } => Cauchy::new(loc, scale).unwrap().sample(rng),
            Self::Exponential { rate } => Exp::new(rate).unwrap().sample(rng),
            Self::ChiSquare { df } => ChiSquared::new(df).unwrap().sample(rng),
            Self::LogNormal { meanlog, sdlog } => LogNormal::new(meanlog, sdlog).unwrap().sample(rng),
            Self::Gamma { shape, scale } => Gamma::new(shape, scale).unwrap().sample(rng),
            Self::Uniform { low, high } => Uniform::new(low, high).unwrap().sample(rng),
        }
    }
}

/// Row-major square matrix in configuration files, as a list of rows.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    MvNormal {
        mean: Vec<f64>,
        cov: Rows,
    },
    MvT {
        df: f64,
        loc: Vec<f64>,
        scale: Rows,
    },
    /// `exp` of `N(mean, cov)`: the parameters are those of the underlying
    /// normal.
    MvLogNormal {
        mean: Vec<f64>,
        cov: Rows,
    },
    /// Uniform direction times a radius drawn from `radius`.
    Spherical {
        radius: UnivariateLaw,
    },
    /// Independent Pearson VII (location 1, scale 1) coordinates.
    PearsonViiIid {
        df: f64,
    },
    ProductMarginals {
        marginals: Vec<UnivariateLaw>,
    },
    NormalMixture {
        weight: f64,
        mean1: Vec<f64>,
        cov1: Rows,
        mean2: Vec<f64>,
        cov2: Rows,
    },
}

/// Named distributions of the simulation tables, parameterized by `m`.
pub const PRESETS: &[&str] = &[
    "normal_i",
    "normal_a",
    "t3",
    "exp_cauchy",
    "normal_t1",
    "pearson7_1",
    "pearson7_10",
    "spherical_lognormal",
    "spherical_chi2",
    "lognormal_b",
    "nmix",
];

/// `diag` on the diagonal and `off` elsewhere.
pub fn equicorrelated(m: usize, diag: f64, off: f64) -> Rows {
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { diag } else { off }).collect())
        .collect()
}

impl Family {
    pub fn preset(name: &str, m: usize) -> Result<Self, SimError> {
        if m == 0 {
            return invalid("dimension must be at least 1");
        }
        let a_m = || equicorrelated(m, 1.0, 0.1);
        let t1 = UnivariateLaw::StudentT {
            df: 1.0,
            loc: 0.0,
            scale: 1.0,
        };
        let fam = match name {
            "normal_i" => Self::MvNormal {
                mean: vec![0.0; m],
                cov: equicorrelated(m, 1.0, 0.0),
            },
            "normal_a" => Self::MvNormal {
                mean: vec![0.0; m],
                cov: a_m(),
            },
            "t3" => Self::MvT {
                df: 3.0,
                loc: vec![0.0; m],
                scale: equicorrelated(m, 1.0, 0.0),
            },
            "exp_cauchy" => Self::ProductMarginals {
                marginals: std::iter::once(UnivariateLaw::Exponential { rate: 0.5 })
                    .chain(std::iter::repeat_n(
                        UnivariateLaw::Cauchy { loc: 0.0, scale: 1.0 },
                        m - 1,
                    ))
                    .collect(),
            },
            "normal_t1" => Self::ProductMarginals {
                marginals: std::iter::once(UnivariateLaw::Normal { mean: 0.0, sd: 1.0 })
                    .chain(std::iter::repeat_n(t1, m - 1))
                    .collect(),
            },
            "pearson7_1" => Self::PearsonViiIid { df: 1.0 },
            "pearson7_10" => Self::PearsonViiIid { df: 10.0 },
            "spherical_lognormal" => Self::Spherical {
                radius: UnivariateLaw::LogNormal {
                    meanlog: 0.0,
                    sdlog: 0.25,
                },
            },
            "spherical_chi2" => Self::Spherical {
                radius: UnivariateLaw::ChiSquare { df: 5.0 },
            },
            "lognormal_b" => Self::MvLogNormal {
                mean: vec![0.0; m],
                cov: equicorrelated(m, 0.25, 0.2),
            },
            "nmix" => Self::NormalMixture {
                weight: 0.9,
                mean1: vec![5.0; m],
                cov1: a_m(),
                mean2: vec![-5.0; m],
                cov2: a_m(),
            },
            other => return invalid(format!("unknown preset `{other}`; known: {}", PRESETS.join(", "))),
        };
        Ok(fam)
    }
}

/// A distribution together with the sample shape to draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeSpec {
    pub family: Family,
    pub m: usize,
    pub n: usize,
}

impl AlternativeSpec {
    pub fn preset(name: &str, m: usize, n: usize) -> Result<Self, SimError> {
        Ok(Self {
            family: Family::preset(name, m)?,
            m,
            n,
        })
    }
}

/// Mean vector plus Cholesky factor of a covariance/scale matrix.
struct Gaussian {
    mean: Vec<f64>,
    chol: Cholesky,
}

impl Gaussian {
    fn new(mean: &[f64], cov: &Rows, m: usize, what: &str) -> Result<Self, SimError> {
        if mean.len() != m {
            return invalid(format!("{what}: mean has length {}, expected {m}", mean.len()));
        }
        if cov.len() != m || cov.iter().any(|r| r.len() != m) {
            return invalid(format!("{what}: matrix must be {m} x {m}"));
        }
        let flat: Vec<f64> = cov.iter().flatten().copied().collect();
        if flat.iter().any(|v| !v.is_finite()) {
            return invalid(format!("{what}: non-finite matrix entry"));
        }
        for i in 0..m {
            for j in 0..i {
                if (flat[i * m + j] - flat[j * m + i]).abs() > 1e-12 * (1.0 + flat[i * m + j].abs()) {
                    return invalid(format!("{what}: matrix is not symmetric"));
                }
            }
        }
        let chol = Cholesky::factor(&flat, m)
            .ok_or_else(|| SimError::InvalidSpec(format!("{what}: matrix is not positive definite")))?;
        if mean.iter().any(|v| !v.is_finite()) {
            return invalid(format!("{what}: non-finite mean"));
        }
        Ok(Self {
            mean: mean.to_vec(),
            chol,
        })
    }

    /// `mean + scale * L z` appended to `out`.
    fn push<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64, z: &mut [f64], lz: &mut [f64], out: &mut Vec<f64>) {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        self.chol.mul_lower(z, lz);
        out.extend(self.mean.iter().zip(lz.iter()).map(|(mu, v)| mu + scale * v));
    }
}

enum Prepared {
    Normal(Gaussian),
    T(f64, Gaussian),
    LogNormal(Gaussian),
    Spherical(UnivariateLaw),
    Product(Vec<UnivariateLaw>),
    Mixture(f64, Gaussian, Gaussian),
}

fn prepare(spec: &AlternativeSpec) -> Result<Prepared, SimError> {
    let m = spec.m;
    if m == 0 {
        return invalid("dimension must be at least 1");
    }
    if spec.n < 2 {
        return invalid("need at least 2 observations");
    }
    Ok(match &spec.family {
        Family::MvNormal { mean, cov } => Prepared::Normal(Gaussian::new(mean, cov, m, "mv_normal")?),
        Family::MvT { df, loc, scale } => {
            if !(*df > 0.0 && df.is_finite()) {
                return invalid("mv_t: df must be positive");
            }
            Prepared::T(*df, Gaussian::new(loc, scale, m, "mv_t")?)
        }
        Family::MvLogNormal { mean, cov } => Prepared::LogNormal(Gaussian::new(mean, cov, m, "mv_log_normal")?),
        Family::Spherical { radius } => {
            radius.validate()?;
            Prepared::Spherical(radius.clone())
        }
        Family::PearsonViiIid { df } => {
            let law = UnivariateLaw::StudentT {
                df: *df,
                loc: 1.0,
                scale: 1.0,
            };
            law.validate()?;
            Prepared::Product(vec![law; m])
        }
        Family::ProductMarginals { marginals } => {
            if marginals.len() != m {
                return invalid(format!(
                    "product_marginals: {} marginals for dimension {m}",
                    marginals.len()
                ));
            }
            for law in marginals {
                law.validate()?;
            }
            Prepared::Product(marginals.clone())
        }
        Family::NormalMixture {
            weight,
            mean1,
            cov1,
            mean2,
            cov2,
        } => {
            if !(*weight > 0.0 && *weight < 1.0) {
                return invalid(format!("mixture weight must lie in (0, 1), got {weight}"));
            }
            Prepared::Mixture(
                *weight,
                Gaussian::new(mean1, cov1, m, "normal_mixture component 1")?,
                Gaussian::new(mean2, cov2, m, "normal_mixture component 2")?,
            )
        }
    })
}

/// Draws `spec.n` i.i.d. rows.
pub fn generate<R: Rng + ?Sized>(spec: &AlternativeSpec, rng: &mut R) -> Result<DataMatrix, SimError> {
    let prepared = prepare(spec)?;
    let (n, m) = (spec.n, spec.m);
    let mut out = Vec::with_capacity(n * m);
    let mut z = vec![0.0; m];
    let mut lz = vec![0.0; m];
    for _ in 0..n {
        match &prepared {
            Prepared::Normal(g) => g.push(rng, 1.0, &mut z, &mut lz, &mut out),
            Prepared::T(df, g) => {
                let w: f64 = ChiSquared::new(*df).unwrap().sample(rng);
                g.push(rng, (df / w).sqrt(), &mut z, &mut lz, &mut out);
            }
            Prepared::LogNormal(g) => {
                let start = out.len();
                g.push(rng, 1.0, &mut z, &mut lz, &mut out);
                out[start..].iter_mut().for_each(|v| *v = v.exp());
            }
            Prepared::Spherical(radius) => {
                let norm = loop {
                    for v in z.iter_mut() {
                        *v = StandardNormal.sample(rng);
                    }
                    let s = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if s > 0.0 {
                        break s;
                    }
                };
                let r = radius.sample(rng);
                out.extend(z.iter().map(|v| r * v / norm));
            }
            Prepared::Product(laws) => out.extend(laws.iter().map(|law| law.sample(rng))),
            Prepared::Mixture(w, g1, g2) => {
                let first = rng.random::<f64>() < *w;
                let g = if first { g1 } else { g2 };
                g.push(rng, 1.0, &mut z, &mut lz, &mut out);
            }
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        // heavy-tailed laws can overflow; report rather than hand back infinities
        return invalid("generated a non-finite value");
    }
    Ok(DataMatrix::new(n, m, out)?)
}

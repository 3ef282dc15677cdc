//! Regularized incomplete gamma function, chi-square cdf/quantile and gamma
//! quantiles down to very small shapes.
//!
//! Everything here is self-contained: the log-gamma is a Lanczos
//! approximation, the incomplete gamma uses the power series below
//! `x = shape + 1` and a Lentz continued fraction above it. Both tails are
//! available in log form so that quantiles can be solved in `ln x` even when
//! `x` itself underflows.

use std::f64::consts::PI;
use std::num::NonZeroU32;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialFnError {
    #[error("argument `{arg}` outside its domain: {value}")]
    Domain { arg: &'static str, value: f64 },
}

fn domain(arg: &'static str, value: f64) -> SpecialFnError {
    SpecialFnError::Domain { arg, value }
}

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self, SpecialFnError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(domain("probability", value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Chi-square degrees of freedom, `m >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct DegreesOfFreedom(NonZeroU32);

impl DegreesOfFreedom {
    pub fn new(m: u32) -> Result<Self, SpecialFnError> {
        NonZeroU32::new(m)
            .map(Self)
            .ok_or_else(|| domain("degrees of freedom", m as f64))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0.get()
    }
}

impl TryFrom<u32> for DegreesOfFreedom {
    type Error = SpecialFnError;
    fn try_from(m: u32) -> Result<Self, Self::Error> {
        Self::new(m)
    }
}

impl From<DegreesOfFreedom> for u32 {
    fn from(m: DegreesOfFreedom) -> u32 {
        m.get()
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

const SERIES_EPS: f64 = 1e-17;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const MAX_TERMS: usize = 100_000;

/// `ln P(s, x)` from the power series; `ln_x` is passed separately so that
/// `x` may underflow to zero without losing the `s ln x` term.
fn ln_lower_series(s: f64, x: f64, ln_x: f64, ln_gamma_s: f64) -> f64 {
    let mut denom = s;
    let mut term = 1.0;
    let mut sum = 1.0;
    for _ in 0..MAX_TERMS {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term < sum * SERIES_EPS {
            break;
        }
    }
    s * ln_x - x - (ln_gamma_s + s.ln()) + sum.ln()
}

/// `ln Q(s, x)` from the continued fraction (modified Lentz).
fn ln_upper_cf(s: f64, x: f64, ln_x: f64, ln_gamma_s: f64) -> f64 {
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / CF_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let fi = i as f64;
        let an = -fi * (fi - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = b + an / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    s * ln_x - x - ln_gamma_s + h.ln()
}

/// `(ln P(s, x), ln Q(s, x))` given `ln x`.
fn ln_pq(s: f64, ln_x: f64, ln_gamma_s: f64) -> (f64, f64) {
    if ln_x == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, 0.0);
    }
    if ln_x == f64::INFINITY {
        return (0.0, f64::NEG_INFINITY);
    }
    let x = ln_x.exp();
    if x < s + 1.0 {
        let lp = ln_lower_series(s, x, ln_x, ln_gamma_s);
        (lp, (-lp.exp_m1()).ln())
    } else {
        let lq = ln_upper_cf(s, x, ln_x, ln_gamma_s);
        ((-lq.exp_m1()).ln(), lq)
    }
}

/// `(P(s, x), Q(s, x))` for `x >= 0`, one evaluation for both tails.
fn pq(s: f64, x: f64, ln_gamma_s: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x == f64::INFINITY {
        return (1.0, 0.0);
    }
    if x < s + 1.0 {
        let p = ln_lower_series(s, x, x.ln(), ln_gamma_s).exp();
        (p, 1.0 - p)
    } else {
        let q = ln_upper_cf(s, x, x.ln(), ln_gamma_s).exp();
        (1.0 - q, q)
    }
}

fn check_shape(shape: f64) -> Result<(), SpecialFnError> {
    if shape > 0.0 && shape.is_finite() {
        Ok(())
    } else {
        Err(domain("shape", shape))
    }
}

/// Regularized lower incomplete gamma `P(shape, x) = γ(shape, x) / Γ(shape)`.
pub fn reg_lower_incomplete_gamma(shape: f64, x: f64) -> Result<Probability, SpecialFnError> {
    check_shape(shape)?;
    if !(x >= 0.0) {
        return Err(domain("x", x));
    }
    let (p, _) = pq(shape, x, ln_gamma(shape));
    Ok(Probability(p.clamp(0.0, 1.0)))
}

/// Regularized upper incomplete gamma `Q(shape, x) = 1 - P(shape, x)`,
/// computed directly in the upper tail.
pub fn reg_upper_incomplete_gamma(shape: f64, x: f64) -> Result<Probability, SpecialFnError> {
    check_shape(shape)?;
    if !(x >= 0.0) {
        return Err(domain("x", x));
    }
    let (_, q) = pq(shape, x, ln_gamma(shape));
    Ok(Probability(q.clamp(0.0, 1.0)))
}

const MAX_NEWTON: usize = 200;

/// Solves `P(s, x) = lower`, `Q(s, x) = upper` for `ln x`. The caller
/// supplies both tail probabilities (they must sum to one) so that neither
/// is formed by cancellation.
///
/// The working equation is `ln P = ln lower` when `lower <= upper` and
/// `ln Q = ln upper` otherwise. As functions of `ln x` these are concave
/// (the log-gamma law is log-concave), so safeguarded Newton converges
/// monotonically after at most one overshoot.
pub(crate) fn gamma_quantile_ln(s: f64, ln_gamma_s: f64, lower: f64, upper: f64, guess: Option<f64>) -> f64 {
    if lower <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if upper <= 0.0 {
        return f64::INFINITY;
    }
    let use_lower = lower <= upper;
    let target = if use_lower { lower.ln() } else { upper.ln() };
    // h is increasing in t = ln x in both branches.
    let eval = |t: f64| -> (f64, f64) {
        let (lp, lq) = ln_pq(s, t, ln_gamma_s);
        let ln_xpdf = s * t - t.exp() - ln_gamma_s;
        if use_lower {
            (lp - target, (ln_xpdf - lp).exp())
        } else {
            (target - lq, (ln_xpdf - lq).exp())
        }
    };

    // P(s, x) <= x^s / Γ(s + 1), so the root lies at or above this point.
    let mut lo = (lower.ln() + ln_gamma_s + s.ln()) / s;
    // A likely upper bracket, evaluated only if the iteration reaches it:
    // from below the root Newton never overshoots on a concave h.
    let mut hi = (s + 40.0 * s.sqrt() + 40.0).ln().max(lo + std::f64::consts::LN_2);
    let mut hi_checked = false;
    let verify_hi = |lo: &mut f64, hi: &mut f64| {
        let mut expansions = 0;
        while eval(*hi).0 < 0.0 && expansions < 64 {
            *lo = lo.max(*hi);
            *hi += std::f64::consts::LN_2;
            expansions += 1;
        }
    };

    let mut t = guess
        .filter(|g| g.is_finite())
        .unwrap_or_else(|| initial_ln_guess(s, lower, upper))
        .clamp(lo, hi);
    // `lo` starts as an analytic bound rather than an evaluated point
    let mut lo_evaluated = false;
    for _ in 0..MAX_NEWTON {
        let (h, dh) = eval(t);
        // |h| at the rounding level of the target: further steps only chase noise
        if h.abs() <= 4.0 * f64::EPSILON * target.abs().max(1.0) {
            return t;
        }
        if h < 0.0 {
            lo = t;
            lo_evaluated = true;
        } else if h > 0.0 {
            hi = t;
            hi_checked = true;
        }
        let newton = t - h / dh;
        if (!newton.is_finite() || newton >= hi) && !hi_checked {
            verify_hi(&mut lo, &mut hi);
            hi_checked = true;
        }
        let next = if !newton.is_finite() || newton >= hi {
            0.5 * (lo + hi)
        } else if newton > lo {
            newton
        } else if !lo_evaluated {
            // for small shapes the root hugs the bound; try it before bisecting
            lo
        } else {
            0.5 * (lo + hi)
        };
        let scale = t.abs().max(1.0);
        // Newton converges quadratically, so once a step is this small the
        // next iterate is already exact to working precision.
        if (next == newton && (next - t).abs() <= 1e-9 * scale) || (hi - lo) <= 2e-16 * scale {
            return next;
        }
        t = next;
    }
    t
}

/// Starting point for the quantile iteration in `ln x` (the rational
/// approximations used by Numerical Recipes' `invgammp`).
fn initial_ln_guess(s: f64, lower: f64, upper: f64) -> f64 {
    if s < 1.0 {
        let t = 1.0 - s * (0.253 + 0.12 * s);
        if lower < t {
            (lower / t).ln() / s
        } else {
            (1.0 - (upper / (1.0 - t)).ln()).ln()
        }
    } else {
        let tail = lower.min(upper);
        let r = (-2.0 * tail.ln()).sqrt();
        let mut z = (2.307_53 + r * 0.270_61) / (1.0 + r * (0.992_29 + r * 0.044_81)) - r;
        if lower < 0.5 {
            z = -z;
        }
        let x = s * (1.0 - 1.0 / (9.0 * s) - z / (3.0 * s.sqrt())).powi(3);
        x.max(1e-3).ln()
    }
}

/// The `(1 - p)`-th quantile of gamma(shape, 1), i.e. `x` with
/// `Q(shape, x) = p`.
///
/// For very small shapes the answer may underflow; it is then returned as a
/// subnormal or zero, consistently with `exp` of the log-quantile.
pub fn gamma_upper_quantile(shape: f64, p: f64) -> Result<f64, SpecialFnError> {
    check_shape(shape)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("p", p));
    }
    Ok(gamma_quantile_ln(shape, ln_gamma(shape), 1.0 - p, p, None).exp())
}

/// Log of [`gamma_upper_quantile`], accepting both tails explicitly.
pub fn ln_gamma_upper_quantile(shape: f64, p: f64, one_minus_p: f64) -> Result<f64, SpecialFnError> {
    check_shape(shape)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("p", p));
    }
    Ok(gamma_quantile_ln(shape, ln_gamma(shape), one_minus_p, p, None))
}

/// Chi-square distribution with cached normalizing constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    df: DegreesOfFreedom,
    half: f64,
    ln_gamma_half: f64,
}

impl ChiSquare {
    pub fn new(df: DegreesOfFreedom) -> Self {
        let half = df.get() as f64 / 2.0;
        Self {
            df,
            half,
            ln_gamma_half: ln_gamma(half),
        }
    }

    pub fn df(&self) -> DegreesOfFreedom {
        self.df
    }

    /// `(F(x), 1 - F(x))`; zero mass below the origin.
    pub fn cdf_sf(&self, x: f64) -> (f64, f64) {
        if x.is_nan() {
            return (f64::NAN, f64::NAN);
        }
        pq(self.half, 0.5 * x.max(0.0), self.ln_gamma_half)
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let h = 0.5 * x;
        ((self.half - 1.0) * h.ln() - h - self.ln_gamma_half).exp() * 0.5
    }

    /// Inverse cdf for `0 < p < 1`, given `p` and `1 - p` separately.
    pub(crate) fn quantile_pq(&self, p: f64, one_minus_p: f64) -> f64 {
        let guess = wilson_hilferty(self.df.get() as f64, p).map(|x| (0.5 * x).ln());
        2.0 * gamma_quantile_ln(self.half, self.ln_gamma_half, p, one_minus_p, guess).exp()
    }

    pub fn quantile(&self, p: f64) -> Result<f64, SpecialFnError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain("p", p));
        }
        Ok(self.quantile_pq(p, 1.0 - p))
    }
}

/// Rough chi-square quantile, used only as a Newton starting point.
fn wilson_hilferty(m: f64, p: f64) -> Option<f64> {
    let z = rough_normal_quantile(p);
    let c = 2.0 / (9.0 * m);
    let x = m * (1.0 - c + z * c.sqrt()).powi(3);
    (x > 0.0 && x.is_finite()).then_some(x)
}

/// Abramowitz–Stegun 26.2.23 (|error| < 4.5e-4).
fn rough_normal_quantile(p: f64) -> f64 {
    let tail = p.min(1.0 - p);
    let t = (-2.0 * tail.ln()).sqrt();
    let z =
        t - (2.515_517 + t * (0.802_853 + t * 0.010_328)) / (1.0 + t * (1.432_788 + t * (0.189_269 + t * 0.001_308)));
    if p < 0.5 {
        -z
    } else {
        z
    }
}

/// Chi-square cdf with `m` degrees of freedom.
pub fn chi2_cdf(x: f64, m: DegreesOfFreedom) -> Result<Probability, SpecialFnError> {
    if !(x >= 0.0) {
        return Err(domain("x", x));
    }
    let (p, _) = ChiSquare::new(m).cdf_sf(x);
    Ok(Probability(p.clamp(0.0, 1.0)))
}

/// Chi-square quantile for `0 < p < 1`.
pub fn chi2_quantile(p: f64, m: DegreesOfFreedom) -> Result<f64, SpecialFnError> {
    ChiSquare::new(m).quantile(p)
}

/// Standard normal `(Φ(z), 1 - Φ(z))` via `Q(1/2, z²/2)`.
pub fn std_normal_cdf_sf(z: f64) -> (f64, f64) {
    if z.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    let (_, q) = pq(0.5, 0.5 * z * z, LN_SQRT_PI);
    let tail = 0.5 * q;
    if z < 0.0 {
        (tail, 1.0 - tail)
    } else {
        (1.0 - tail, tail)
    }
}

/// Standard normal quantile for `0 < p < 1`.
pub fn std_normal_quantile(p: f64) -> Result<f64, SpecialFnError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("p", p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let tail = p.min(1.0 - p);
    // Q(1/2, z²/2) = 2 * tail
    let half_sq = gamma_quantile_ln(0.5, LN_SQRT_PI, 1.0 - 2.0 * tail, 2.0 * tail, None).exp();
    let z = (2.0 * half_sq).sqrt();
    Ok(if p < 0.5 { -z } else { z })
}

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

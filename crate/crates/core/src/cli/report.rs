//! Machine-readable outputs: report.json and the plot-data CSV files.

use std::io::Write;

use serde::Serialize;

use crate::mahalanobis::SquaredDistances;
use crate::rbtest::{RbReport, TestConfig, Verdict};
use crate::specialfn::ChiSquare;

pub const SCHEMA_VERSION: u32 = 1;

/// Strength at or above which the evidence is called strong (in favour) or
/// weak (against), and below which the reverse.
pub const STRENGTH_CUTOFF: f64 = 0.5;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DataSource {
    Csv {
        path: String,
    },
    Generator {
        family: String,
        m: usize,
        n: usize,
        data_seed: u64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportJson {
    pub schema_version: u32,
    pub n: usize,
    pub m: usize,
    pub source: DataSource,
    pub config: TestConfig,
    pub rb_at_zero: f64,
    pub strength: f64,
    pub verdict: &'static str,
    pub interpretation: String,
    pub rb_per_bin: Vec<f64>,
    pub quantile_grid: Vec<f64>,
    pub prior_mean_distance: f64,
    pub posterior_mean_distance: f64,
    pub warnings: Vec<String>,
}

impl ReportJson {
    pub fn new(report: &RbReport, config: &TestConfig, source: DataSource, extra_warnings: &[String]) -> Self {
        let verdict = report.verdict();
        let mut warnings = report.diagnostics.warnings.clone();
        warnings.extend_from_slice(extra_warnings);
        Self {
            schema_version: SCHEMA_VERSION,
            n: report.diagnostics.n.unwrap_or(0),
            m: report.diagnostics.m.unwrap_or(0),
            source,
            config: config.clone(),
            rb_at_zero: report.rb_at_zero,
            strength: report.strength,
            verdict: verdict.name(),
            interpretation: interpretation(verdict, report.strength),
            rb_per_bin: report.rb_per_bin.clone(),
            quantile_grid: report.quantile_grid.points().to_vec(),
            prior_mean_distance: report.prior_distances.mean(),
            posterior_mean_distance: report.posterior_distances.mean(),
            warnings,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Reading of the ratio and its strength. A ratio above one is evidence for
/// normality, strong when the strength is large; a ratio below one is
/// evidence against, strong when the strength is small.
pub fn interpretation(verdict: Verdict, strength: f64) -> String {
    let high = strength >= STRENGTH_CUTOFF;
    let text = match (verdict, high) {
        (Verdict::FavorH0, true) => "strong evidence in favour of multivariate normality",
        (Verdict::FavorH0, false) => "weak evidence in favour of multivariate normality",
        (Verdict::AgainstH0, false) => "strong evidence against multivariate normality",
        (Verdict::AgainstH0, true) => "weak evidence against multivariate normality",
        (Verdict::NoEvidence, _) => "no evidence either way",
    };
    format!("{text} (strength {strength:.3})")
}

/// Sorted squared distances against chi-square quantiles at `(i - 0.5) / n`.
pub fn qq_points(d: &SquaredDistances, target: &ChiSquare) -> Vec<(f64, f64, f64)> {
    let mut sorted = d.as_slice().to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let p = (i as f64 + 0.5) / n;
            (p, target.quantile_pq(p, 1.0 - p), v)
        })
        .collect()
}

pub fn write_qq<W: Write>(w: W, d: &SquaredDistances, target: &ChiSquare) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["rank", "plotting_position", "chi2_quantile", "squared_distance"])?;
    for (i, (p, q, v)) in qq_points(d, target).into_iter().enumerate() {
        w.write_record([(i + 1).to_string(), p.to_string(), q.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Prior and posterior distance samples in long format.
pub fn write_densities<W: Write>(w: W, report: &RbReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["sample", "replicate", "distance"])?;
    for s in [&report.prior_distances, &report.posterior_distances] {
        for (k, v) in s.values().iter().enumerate() {
            w.write_record([s.label().name(), &k.to_string(), &v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Squared Mahalanobis distance of every observation, in input order.
pub fn write_distances<W: Write>(w: W, d: &SquaredDistances) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["row", "squared_distance"])?;
    for (i, v) in d.as_slice().iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specialfn::DegreesOfFreedom;

    #[test]
    fn qq_columns_are_ordered() {
        let d = SquaredDistances::new(vec![3.0, 0.5, 1.0, 0.5, 7.0]).unwrap();
        let pts = qq_points(&d, &ChiSquare::new(DegreesOfFreedom::new(2).unwrap()));
        assert!(pts.windows(2).all(|w| w[0].1 < w[1].1 && w[0].2 <= w[1].2));
        assert!((pts[0].0 - 0.1).abs() < 1e-15);
        // chi-square(2) quantile is -2 ln(1 - p)
        assert!((pts[0].1 + 2.0 * 0.9f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn interpretation_follows_strength() {
        assert!(interpretation(Verdict::FavorH0, 1.0).starts_with("strong evidence in favour"));
        assert!(interpretation(Verdict::AgainstH0, 0.01).starts_with("strong evidence against"));
        assert!(interpretation(Verdict::AgainstH0, 0.9).starts_with("weak evidence against"));
        assert!(interpretation(Verdict::NoEvidence, 0.3).starts_with("no evidence"));
    }
}

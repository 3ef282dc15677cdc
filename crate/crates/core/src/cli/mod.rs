//! Command-line front end: `test`, `simulate` and `generate`.

pub mod io;
pub mod report;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dirichlet::{BaseFamily, DirichletError, RngStream};
use crate::distance::DistanceError;
use crate::mahalanobis::{mahalanobis_reduction, DataError, DataMatrix, MahalanobisError};
use crate::rbtest::{default_i0, run_test_on_distances, RbError, RbReport, TestConfig, Verdict};
use crate::simgen::{generate, AlternativeSpec, Family, SimError};
use crate::specialfn::{ChiSquare, DegreesOfFreedom};

use self::io::IngestError;
use self::report::{DataSource, ReportJson};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ARGS: i32 = 4;

/// Every failure the CLI can report, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Args(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Rb(#[from] RbError),
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        Self::Ingest(IngestError::Data(e))
    }
}

impl CliError {
    /// `module::Variant` of the error that stopped the run.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Args(_) => "cli::BadArguments",
            Self::Ingest(e) => match e {
                IngestError::Io { .. } => "cli::IoError",
                IngestError::Parse { .. } | IngestError::Ragged { .. } | IngestError::Csv { .. } => "cli::ParseError",
                IngestError::Empty => "cli::EmptyInput",
                IngestError::Data(_) => "mahalanobis::DataError",
            },
            Self::Sim(SimError::InvalidSpec(_)) => "simgen::InvalidSpec",
            Self::Sim(SimError::Data(_)) => "mahalanobis::DataError",
            Self::Rb(e) => match e {
                RbError::Config(_) => "rbtest::ConfigError",
                RbError::Mahalanobis(MahalanobisError::SingularCovariance { .. }) => "mahalanobis::SingularCovariance",
                RbError::Dirichlet(DirichletError::DegenerateWeights { .. }) => "dirichlet::DegenerateWeights",
                RbError::Dirichlet(_) => "dirichlet::InvalidArgument",
                RbError::Distance(DistanceError::NonMonotoneCdf { .. }) => "distance::NonMonotoneCdf",
                RbError::Distance(_) => "distance::InvalidCdf",
                RbError::DegenerateGrid { .. } => "rbtest::DegenerateGrid",
                RbError::EmptySample(_) => "rbtest::EmptySample",
            },
            Self::Manifest { .. } => "cli::InvalidManifest",
            Self::Output { .. } => "cli::IoError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Args(_) => EXIT_ARGS,
            Self::Ingest(_) | Self::Sim(_) | Self::Manifest { .. } | Self::Output { .. } => EXIT_INPUT,
            Self::Rb(e) => match e {
                RbError::Config(_) | RbError::Dirichlet(DirichletError::InvalidConcentration(_)) => EXIT_ARGS,
                RbError::Dirichlet(DirichletError::InvalidParts(_) | DirichletError::NoAtoms) => EXIT_ARGS,
                _ => EXIT_NUMERICAL,
            },
        }
    }
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bnpnorm",
    version,
    about = "Bayesian nonparametric test of multivariate normality"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test one data set and write report.json plus the requested plot data.
    Test(TestArgs),
    /// Run the test over a grid of generated data sets and write table.csv.
    Simulate(SimulateArgs),
    /// Draw a sample from a named or custom distribution and write it as CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Qq,
    Densities,
    Distances,
}

/// Monte Carlo settings shared by `test` and `simulate`.
#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Atoms per Dirichlet process draw.
    #[arg(long = "N", default_value_t = TestConfig::DEFAULT_N)]
    pub n_atoms: usize,
    #[arg(long, default_value_t = TestConfig::DEFAULT_R)]
    pub r1: usize,
    #[arg(long, default_value_t = TestConfig::DEFAULT_R)]
    pub r2: usize,
    /// Number of prior-quantile bins.
    #[arg(long = "M", default_value_t = TestConfig::DEFAULT_M)]
    pub bins: usize,
    /// Bin standing in for distance zero; defaults to ceil(M/20).
    #[arg(long)]
    pub i0: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Centre of the Dirichlet process prior.
    #[arg(long, default_value = "chi_square")]
    pub base: BaseFamily,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl McArgs {
    fn config(&self, a: f64) -> TestConfig {
        TestConfig {
            a,
            n_atoms: self.n_atoms,
            r1: self.r1,
            r2: self.r2,
            bins: self.bins,
            i0: self.i0.unwrap_or_else(|| default_i0(self.bins)),
            seed: self.seed,
            base: self.base,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    /// JSON run manifest; replaces every other option.
    #[arg(long, conflicts_with_all = ["input", "family", "spec"])]
    pub manifest: Option<PathBuf>,
    /// CSV file with one observation per row.
    #[arg(long, conflicts_with_all = ["family", "spec"])]
    pub input: Option<PathBuf>,
    /// Generate the data from a named distribution instead.
    #[arg(long, conflicts_with = "spec")]
    pub family: Option<String>,
    /// Generate the data from a distribution given as JSON.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    /// Concentration of the Dirichlet process prior.
    #[arg(long, required_unless_present = "manifest")]
    pub a: Option<f64>,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub emit: Vec<Emit>,
}

/// A named preset or an explicit distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Preset(String),
    Custom { name: String, family: Family },
}

impl FamilySpec {
    pub fn name(&self) -> &str {
        match self {
            Self::Preset(s) => s,
            Self::Custom { name, .. } => name,
        }
    }

    pub fn resolve(&self, m: usize, n: usize) -> Result<AlternativeSpec, SimError> {
        match self {
            Self::Preset(name) => AlternativeSpec::preset(name, m, n),
            Self::Custom { family, .. } => Ok(AlternativeSpec {
                family: family.clone(),
                m,
                n,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: FamilySpec,
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub data_seed: u64,
}

/// Everything that determines the output of `test`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    pub config: TestConfig,
    pub out: PathBuf,
    #[serde(default)]
    pub emit: Vec<Emit>,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bad = |message: String| CliError::Manifest {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
    }

    fn from_args(args: &TestArgs) -> Result<Self, CliError> {
        let generator = match (&args.family, &args.spec) {
            (Some(name), _) => Some(FamilySpec::Preset(name.clone())),
            (None, Some(path)) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Manifest {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                let family: Family = serde_json::from_str(&text).map_err(|e| CliError::Manifest {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                Some(FamilySpec::Custom {
                    name: path.display().to_string(),
                    family,
                })
            }
            (None, None) => None,
        }
        .map(|family| GeneratorSpec {
            family,
            m: args.m,
            n: args.n,
            data_seed: args.data_seed,
        });
        let a = args.a.ok_or_else(|| CliError::Args("--a is required".into()))?;
        Ok(Self {
            input: args.input.clone(),
            generator,
            config: args.mc.config(a),
            out: args.out.clone(),
            emit: args.emit.clone(),
            threads: args.mc.threads,
        })
    }

    fn source(&self) -> Result<(DataMatrix, DataSource, Vec<String>), CliError> {
        match (&self.input, &self.generator) {
            (Some(path), None) => {
                let data = io::ingest_csv(path)?;
                let source = DataSource::Csv {
                    path: path.display().to_string(),
                };
                Ok((data, source, Vec::new()))
            }
            (None, Some(g)) => {
                let spec = g.family.resolve(g.m, g.n)?;
                let data = generate(&spec, &mut RngStream::new(g.data_seed, 0).rng())?;
                let source = DataSource::Generator {
                    family: g.family.name().to_owned(),
                    m: g.m,
                    n: g.n,
                    data_seed: g.data_seed,
                };
                Ok((data, source, family_notes(&spec.family)))
            }
            _ => Err(CliError::Args(
                "exactly one data source is needed: --input or a generator (--family / --spec)".into(),
            )),
        }
    }
}

fn family_notes(family: &Family) -> Vec<String> {
    match family {
        Family::MvLogNormal { .. } => {
            vec!["lognormal mean and covariance are those of the underlying normal".into()]
        }
        _ => Vec::new(),
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Args("--threads must be at least 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Args(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| output_error(path, e))
}

/// Result of a `test` run: the report and everything that was written.
#[derive(Debug)]
pub struct TestOutcome {
    pub report: RbReport,
    pub json: ReportJson,
    pub written: Vec<PathBuf>,
}

pub fn cmd_test(manifest: &RunManifest) -> Result<TestOutcome, CliError> {
    manifest.config.validate().map_err(RbError::from)?;
    let (data, source, notes) = manifest.source()?;
    let reduction = mahalanobis_reduction(&data).map_err(RbError::from)?;
    let m = DegreesOfFreedom::new(data.ncols() as u32).expect("at least one column");
    let report = with_threads(manifest.threads, || {
        run_test_on_distances(&reduction.distances, m, &manifest.config)
    })??;
    let mut extra = Vec::new();
    if reduction.ill_conditioned() {
        extra.push(format!(
            "sample covariance is ill-conditioned (pivot ratio {:.3e}); distances may be unstable",
            reduction.pivot_ratio
        ));
    }
    extra.extend(notes);
    let json = ReportJson::new(&report, &manifest.config, source, &extra);

    let out = &manifest.out;
    fs::create_dir_all(out).map_err(|e| output_error(out, e))?;
    let mut written = Vec::new();
    let path = out.join("report.json");
    fs::write(&path, json.to_json()).map_err(|e| output_error(&path, e))?;
    written.push(path);
    for emit in [Emit::Qq, Emit::Densities, Emit::Distances] {
        if !manifest.emit.contains(&emit) {
            continue;
        }
        let (name, result) = match emit {
            Emit::Qq => {
                let path = out.join("qq.csv");
                let r = report::write_qq(create_file(&path)?, &reduction.distances, &ChiSquare::new(m));
                (path, r)
            }
            Emit::Densities => {
                let path = out.join("densities.csv");
                let r = report::write_densities(create_file(&path)?, &report);
                (path, r)
            }
            Emit::Distances => {
                let path = out.join("distances.csv");
                let r = report::write_distances(create_file(&path)?, &reduction.distances);
                (path, r)
            }
        };
        result.map_err(|e| output_error(&name, e))?;
        written.push(name);
    }
    Ok(TestOutcome { report, json, written })
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// JSON grid file; replaces the grid options below.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Distributions, as preset names.
    #[arg(long, value_delimiter = ',')]
    pub family: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub a: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Monte Carlo settings of a simulation grid; `a` and `seed` vary per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "N", default = "default_n")]
    pub n_atoms: usize,
    #[serde(default = "default_r")]
    pub r1: usize,
    #[serde(default = "default_r")]
    pub r2: usize,
    #[serde(rename = "M", default = "default_m")]
    pub bins: usize,
    #[serde(default)]
    pub i0: Option<usize>,
    #[serde(default)]
    pub base: BaseFamily,
}

fn default_n() -> usize {
    TestConfig::DEFAULT_N
}

fn default_r() -> usize {
    TestConfig::DEFAULT_R
}

fn default_m() -> usize {
    TestConfig::DEFAULT_M
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_atoms: default_n(),
            r1: default_r(),
            r2: default_r(),
            bins: default_m(),
            i0: None,
            base: BaseFamily::ChiSquare,
        }
    }
}

/// Simulation study: every (family, m, a) cell gets `replicates` data sets
/// of size `n`. Replicate `j` draws its data from stream `j` of `data_seed`
/// and runs the test with seed `seed + j`, so cells that share a family and
/// dimension see the same data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationGrid {
    #[serde(default)]
    pub families: Vec<FamilySpec>,
    #[serde(default)]
    pub m: Vec<usize>,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default = "default_sample_size")]
    pub n: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data_seed: u64,
    #[serde(default)]
    pub config: GridConfig,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_sample_size() -> usize {
    50
}

fn default_replicates() -> usize {
    20
}

impl SimulationGrid {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bad = |message: String| CliError::Manifest {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
    }

    fn from_args(args: &SimulateArgs) -> Self {
        Self {
            families: args.family.iter().cloned().map(FamilySpec::Preset).collect(),
            m: args.m.clone(),
            a: args.a.clone(),
            n: args.n,
            replicates: args.replicates,
            seed: args.mc.seed,
            data_seed: args.data_seed,
            config: GridConfig {
                n_atoms: args.mc.n_atoms,
                r1: args.mc.r1,
                r2: args.mc.r2,
                bins: args.mc.bins,
                i0: args.mc.i0,
                base: args.mc.base,
            },
            threads: args.mc.threads,
        }
    }

    fn test_config(&self, a: f64, replicate: usize) -> TestConfig {
        TestConfig {
            a,
            n_atoms: self.config.n_atoms,
            r1: self.config.r1,
            r2: self.config.r2,
            bins: self.config.bins,
            i0: self.config.i0.unwrap_or_else(|| default_i0(self.config.bins)),
            seed: self.seed.wrapping_add(replicate as u64),
            base: self.config.base,
        }
    }
}

/// One row of table.csv.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub family: String,
    pub m: usize,
    pub a: f64,
    pub n: usize,
    pub replicates: usize,
    pub completed: usize,
    pub rb_mean: f64,
    pub rb_sd: f64,
    pub rb_median: f64,
    pub strength_mean: f64,
    pub favor_h0: usize,
    pub against_h0: usize,
    pub status: &'static str,
    pub error: String,
}

impl CellResult {
    fn from_runs(family: &str, m: usize, a: f64, grid: &SimulationGrid, runs: &[(f64, f64)], error: String) -> Self {
        let k = runs.len() as f64;
        let mean = |f: fn(&(f64, f64)) -> f64| runs.iter().map(f).sum::<f64>() / k;
        let rb_mean = mean(|r| r.0);
        let rb_sd = if runs.len() > 1 {
            (runs.iter().map(|r| (r.0 - rb_mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            f64::NAN
        };
        let mut rbs: Vec<f64> = runs.iter().map(|r| r.0).collect();
        rbs.sort_by(f64::total_cmp);
        let rb_median = match rbs.len() {
            0 => f64::NAN,
            l if l % 2 == 1 => rbs[l / 2],
            l => 0.5 * (rbs[l / 2 - 1] + rbs[l / 2]),
        };
        let count = |v: Verdict| runs.iter().filter(|r| Verdict::from_rb(r.0) == v).count();
        let status = if error.is_empty() {
            "ok"
        } else if runs.is_empty() {
            "failed"
        } else {
            "partial"
        };
        Self {
            family: family.to_owned(),
            m,
            a,
            n: grid.n,
            replicates: grid.replicates,
            completed: runs.len(),
            rb_mean,
            rb_sd,
            rb_median,
            strength_mean: mean(|r| r.1),
            favor_h0: count(Verdict::FavorH0),
            against_h0: count(Verdict::AgainstH0),
            status,
            error,
        }
    }
}

/// Runs every cell of the grid. Failures are recorded in the cell and the
/// run carries on.
pub fn run_grid(grid: &SimulationGrid) -> Result<Vec<CellResult>, CliError> {
    with_threads(grid.threads, || {
        let mut rows = Vec::new();
        for family in &grid.families {
            for &m in &grid.m {
                let mut datasets = Vec::with_capacity(grid.replicates);
                let spec = family.resolve(m, grid.n);
                for j in 0..grid.replicates {
                    let d = spec.as_ref().map_err(|e| CliError::from(e.clone())).and_then(|spec| {
                        let data = generate(spec, &mut RngStream::new(grid.data_seed, j as u64).rng())?;
                        Ok(mahalanobis_reduction(&data).map_err(RbError::from)?.distances)
                    });
                    datasets.push(d);
                }
                for &a in &grid.a {
                    let mut runs = Vec::new();
                    let mut error = String::new();
                    for (j, d) in datasets.iter().enumerate() {
                        let result = d.as_ref().map_err(|e| format!("{}: {e}", e.name())).and_then(|d| {
                            let dof = DegreesOfFreedom::new(m as u32).expect("m validated by the generator");
                            run_test_on_distances(d, dof, &grid.test_config(a, j)).map_err(|e| {
                                let e = CliError::from(e);
                                format!("{}: {e}", e.name())
                            })
                        });
                        match result {
                            Ok(r) => runs.push((r.rb_at_zero, r.strength)),
                            Err(e) if error.is_empty() => error = format!("replicate {j}: {e}"),
                            Err(_) => {}
                        }
                    }
                    rows.push(CellResult::from_runs(family.name(), m, a, grid, &runs, error));
                }
            }
        }
        rows
    })
}

pub fn write_table<W: Write>(w: W, rows: &[CellResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    if rows.is_empty() {
        w.write_record([
            "family",
            "m",
            "a",
            "n",
            "replicates",
            "completed",
            "rb_mean",
            "rb_sd",
            "rb_median",
            "strength_mean",
            "favor_h0",
            "against_h0",
            "status",
            "error",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_simulate(grid: &SimulationGrid, out: &Path) -> Result<Vec<CellResult>, CliError> {
    let rows = run_grid(grid)?;
    fs::create_dir_all(out).map_err(|e| output_error(out, e))?;
    let path = out.join("table.csv");
    write_table(create_file(&path)?, &rows).map_err(|e| output_error(&path, e))?;
    Ok(rows)
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Preset distribution name.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub family: Option<String>,
    /// Distribution given as JSON.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<DataMatrix, CliError> {
    let family = match (&args.family, &args.spec) {
        (Some(name), _) => FamilySpec::Preset(name.clone()),
        (None, Some(path)) => {
            let bad = |message: String| CliError::Manifest {
                path: path.clone(),
                message,
            };
            let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
            FamilySpec::Custom {
                name: String::new(),
                family: serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?,
            }
        }
        (None, None) => return Err(CliError::Args("--family or --spec is required".into())),
    };
    let spec = family.resolve(args.m, args.n)?;
    let data = generate(&spec, &mut RngStream::new(args.data_seed, 0).rng())?;
    let header: Vec<String> = (1..=args.m).map(|j| format!("x{j}")).collect();
    match &args.out {
        Some(path) => io::write_csv(create_file(path)?, &data, Some(&header)).map_err(|e| output_error(path, e))?,
        None => io::write_csv(std::io::stdout().lock(), &data, Some(&header))
            .map_err(|e| output_error(Path::new("<stdout>"), e))?,
    }
    Ok(data)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Test(args) => {
            let manifest = match &args.manifest {
                Some(path) => RunManifest::load(path)?,
                None => RunManifest::from_args(&args)?,
            };
            let outcome = cmd_test(&manifest)?;
            for w in &outcome.json.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "RB = {} strength = {} verdict = {}: {}",
                outcome.json.rb_at_zero, outcome.json.strength, outcome.json.verdict, outcome.json.interpretation
            );
            for path in &outcome.written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Simulate(args) => {
            let grid = match &args.grid {
                Some(path) => SimulationGrid::load(path)?,
                None => SimulationGrid::from_args(&args),
            };
            let rows = cmd_simulate(&grid, &args.out)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!("{} cells, {failed} with failures", rows.len());
            for r in rows.iter().filter(|r| r.status != "ok") {
                eprintln!("warning: {} m={} a={}: {}", r.family, r.m, r.a, r.error);
            }
            println!("wrote {}", args.out.join("table.csv").display());
            Ok(())
        }
        Command::Generate(args) => cmd_generate(&args).map(|_| ()),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ARGS } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            e.exit_code()
        }
    }
}

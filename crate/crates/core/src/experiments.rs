//! Table and figure generators plus their CSV/JSON serialization.
//!
//! Each runner is a pure function of an [`ExperimentConfig`] returning a
//! [`Table`]; the command-line front end only parses flags and writes files.
//! CSV output carries the configuration as `#` comment lines, a header row,
//! and floats printed with 17 significant digits so values survive a
//! round trip exactly.

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::{condition_compare, operator_distance, paired_bound_check, trim_operator, trim_width};
use crate::error::{Error, Result};
use crate::gaussian::{build_v, build_v_homogeneous, GaussianOperatorSpec};
use crate::operator::{Grid1D, Signal};
use crate::recfilter::{materialize_f, materialize_homogeneous, FilterCoefficients, FilterSpec};
use crate::var3d::{assemble_psi, assimilate, primal_solve, Backend, ObsOperator, VarProblem};

/// Seedable generator used for every random draw in the experiments.
pub type ExperimentRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ExperimentRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::invalid(format!("unknown format {other:?}; use csv or json"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Experiment settings. Every field is optional; each runner fills in its
/// own defaults.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: Option<usize>,
    pub sigma: Option<OneOrMany<f64>>,
    pub order: Option<u32>,
    #[serde(alias = "k_list")]
    pub k: Option<OneOrMany<usize>>,
    #[serde(alias = "use-q")]
    pub use_q: Option<bool>,
    pub seed: Option<u64>,
    #[serde(alias = "out_path")]
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    /// Observation count for the assimilation demo.
    pub obs: Option<usize>,
    /// Observation and background error standard deviation for the demo.
    pub noise: Option<f64>,
    /// CG iteration cap for the demo; defaults to `m`.
    pub max_iter: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let bad = |e: &dyn fmt::Display| Error::invalid(format!("config {}: {e}", path.display()));
        let text = std::fs::read_to_string(path).map_err(|e| bad(&e))?;
        serde_json::from_str(&text).map_err(|e| bad(&e))
    }

    /// Fields set in `overrides` win.
    pub fn merged_with(self, overrides: ExperimentConfig) -> Self {
        Self {
            m: overrides.m.or(self.m),
            sigma: overrides.sigma.or(self.sigma),
            order: overrides.order.or(self.order),
            k: overrides.k.or(self.k),
            use_q: overrides.use_q.or(self.use_q),
            seed: overrides.seed.or(self.seed),
            out: overrides.out.or(self.out),
            format: overrides.format.or(self.format),
            obs: overrides.obs.or(self.obs),
            noise: overrides.noise.or(self.noise),
            max_iter: overrides.max_iter.or(self.max_iter),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.m {
            if m < 2 {
                return Err(Error::invalid(format!("m must be at least 2, got {m}")));
            }
        }
        if let Some(s) = &self.sigma {
            let s = s.to_vec();
            if s.is_empty() || s.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::invalid("sigma values must be positive"));
            }
        }
        if let Some(k) = &self.k {
            let k = k.to_vec();
            if k.is_empty() || k.contains(&0) {
                return Err(Error::invalid("iteration counts must be positive"));
            }
        }
        if let Some(o) = self.order {
            crate::recfilter::FilterOrder::from_number(o)?;
        }
        if self.max_iter == Some(0) {
            return Err(Error::invalid("max_iter must be positive"));
        }
        if self.obs == Some(0) {
            return Err(Error::invalid("observation count must be positive"));
        }
        if let Some(n) = self.noise {
            if !(n.is_finite() && n >= 0.0) {
                return Err(Error::invalid("noise must be nonnegative"));
            }
        }
        Ok(())
    }

    fn m_or(&self, d: usize) -> usize {
        self.m.unwrap_or(d)
    }

    fn sigmas_or(&self, d: &[f64]) -> Vec<f64> {
        self.sigma.as_ref().map(|s| s.to_vec()).unwrap_or_else(|| d.to_vec())
    }

    fn ks_or(&self, d: &[usize]) -> Vec<usize> {
        self.k.as_ref().map(|k| k.to_vec()).unwrap_or_else(|| d.to_vec())
    }

    fn use_q(&self) -> bool {
        self.use_q.unwrap_or(false)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn parse(field: &str) -> Cell {
        if field.is_empty() {
            Cell::Missing
        } else if let Ok(i) = field.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(x) = field.parse::<f64>() {
            Cell::Float(x)
        } else {
            Cell::Text(field.to_string())
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Float(x) => serde_json::Number::from_f64(*x)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::Int(i) => serde_json::Value::from(*i),
            Cell::Text(s) => serde_json::Value::String(s.clone()),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Float(x) => write!(f, "{x:.16e}"),
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Missing => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A rectangular result table with a configuration echo.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Self {
            meta: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column_f64(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j].as_f64()).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(w, "# {k}: {v}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|c| c.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Table> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text)?;
        let meta = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| {
                let body = l.trim_start_matches('#').trim();
                body.split_once(": ")
                    .map(|(k, v)| (k.to_string(), v.to_string()))
            })
            .collect();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let columns = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            rows.push(rec?.iter().map(Cell::parse).collect());
        }
        Ok(Table { meta, columns, rows })
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(Cell::to_json))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::to_writer_pretty(&mut w, &rows)?;
        writeln!(w)?;
        Ok(())
    }

    pub fn write(&self, w: impl Write, format: Format) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }

    pub fn write_to_path(&self, path: &Path, format: Format) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write(&mut w, format)?;
        w.flush()?;
        Ok(())
    }
}

fn echo(table: &mut Table, cfg: &ExperimentConfig, m: usize, sigmas: &[f64], ks: &[usize]) {
    let list = |v: Vec<String>| v.join(" ");
    table
        .meta("m", m)
        .meta("sigma", list(sigmas.iter().map(|s| s.to_string()).collect()))
        .meta("k", list(ks.iter().map(|k| k.to_string()).collect()))
        .meta("use_q", cfg.use_q())
        .meta("seed", cfg.seed());
}

/// Rows `(sigma, ||F_1^(1)||, ||F_3^(1)||)`.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let m = cfg.m_or(601);
    let sigmas = cfg.sigmas_or(&[5.0, 20.0, 50.0]);
    let mut t = Table::new(&["sigma", "rf1_k1", "rf3"]);
    echo(&mut t, cfg, m, &sigmas, &[1]);
    for &s in &sigmas {
        let f1 = materialize_homogeneous(m, s, &FilterSpec::first(1))?;
        let f3 = materialize_homogeneous(m, s, &FilterSpec::third(cfg.use_q()))?;
        t.push(vec![s.into(), f1.inf_norm().into(), f3.inf_norm().into()]);
    }
    Ok(t)
}

/// Rows `(sigma, ||F_1^(K) - V|| for each K, ||F_3^(1) - V||)`.
pub fn run_table2(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let m = cfg.m_or(601);
    let sigmas = cfg.sigmas_or(&[5.0, 10.0, 25.0, 50.0]);
    let ks = cfg.ks_or(&[1, 50]);
    let mut columns = vec!["sigma".to_string()];
    columns.extend(ks.iter().map(|k| format!("rf1_k{k}")));
    columns.push("rf3".into());
    let mut t = Table::with_columns(columns);
    echo(&mut t, cfg, m, &sigmas, &ks);
    for &s in &sigmas {
        let v = build_v_homogeneous(m, s)?;
        let mut row: Vec<Cell> = vec![s.into()];
        for &k in &ks {
            let f = materialize_homogeneous(m, s, &FilterSpec::first(k))?;
            row.push(operator_distance(&f, &v)?.into());
        }
        let f3 = materialize_homogeneous(m, s, &FilterSpec::third(cfg.use_q()))?;
        row.push(operator_distance(&f3, &v)?.into());
        t.push(row);
    }
    Ok(t)
}

/// Grid spacing of the edge-effect study; `R = sigma * dx`.
pub const TABLE3_DX: f64 = 6.0;

/// Trimmed distances on the `m = 301`, `R = 120`, `dx = 6` grid.
pub fn run_table3(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let m = cfg.m_or(301);
    let sigma = cfg.sigmas_or(&[20.0])[0];
    let ks = cfg.ks_or(&[1, 2, 5, 50, 100, 500]);
    let grid = Grid1D::with_radius(m, sigma * TABLE3_DX, TABLE3_DX)?;
    let trim = trim_width(sigma);
    let mut t = Table::new(&["k", "rf1", "rf3"]);
    echo(&mut t, cfg, m, &[sigma], &ks);
    t.meta("radius", sigma * TABLE3_DX)
        .meta("dx", TABLE3_DX)
        .meta("trim", trim);

    let v = trim_operator(&build_v(&GaussianOperatorSpec::new(grid.clone()))?, trim)?;
    let spec3 = FilterSpec::third(cfg.use_q());
    let f3 = materialize_f(&FilterCoefficients::compute(&grid, &spec3)?, &spec3)?;
    let d3 = operator_distance(&trim_operator(&f3, trim)?, &v)?;
    for &k in &ks {
        let spec = FilterSpec::first(k);
        let f = materialize_f(&FilterCoefficients::compute(&grid, &spec)?, &spec)?;
        let d1 = operator_distance(&trim_operator(&f, trim)?, &v)?;
        t.push(vec![k.into(), d1.into(), (if k == 1 { Some(d3) } else { None }).into()]);
    }
    Ok(t)
}

/// Applies `V`, `F_1^(K)` for each `K`, and `F_3^(1)` to `s0` on a
/// homogeneous unit grid. Columns: `x, s0, v, rf1_k<K>..., rf3`.
pub fn response_table(
    xs: &[f64],
    s0: &Signal,
    sigma: f64,
    ks: &[usize],
    use_q: bool,
) -> Result<Table> {
    let m = s0.len();
    Error::check_dim(m, xs.len())?;
    let grid = Grid1D::uniform(m, sigma)?;
    let mut columns = vec!["x".to_string(), "s0".into(), "v".into()];
    columns.extend(ks.iter().map(|k| format!("rf1_k{k}")));
    columns.push("rf3".into());

    let mut outputs = vec![build_v_homogeneous(m, sigma)?.mat_vec(s0)?];
    for &k in ks {
        let spec = FilterSpec::first(k);
        let c = FilterCoefficients::compute(&grid, &spec)?;
        outputs.push(crate::recfilter::apply_filter(s0, &c, &spec)?);
    }
    let spec3 = FilterSpec::third(use_q);
    let c3 = FilterCoefficients::compute(&grid, &spec3)?;
    outputs.push(crate::recfilter::apply_filter(s0, &c3, &spec3)?);

    let mut t = Table::with_columns(columns);
    for i in 0..m {
        let mut row: Vec<Cell> = vec![xs[i].into(), s0[i].into()];
        row.extend(outputs.iter().map(|o| Cell::Float(o[i])));
        t.push(row);
    }
    Ok(t)
}

/// `m` samples of `cos` on `[-2 pi, 2 pi]`.
pub fn cos_samples(m: usize) -> (Vec<f64>, Signal) {
    let (a, b) = (-2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI);
    let xs: Vec<f64> = (0..m)
        .map(|i| a + (b - a) * i as f64 / (m - 1) as f64)
        .collect();
    let s0 = Signal::new(xs.iter().map(|x| x.cos()).collect());
    (xs, s0)
}

pub fn run_cos_figure(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let m = cfg.m_or(252);
    let sigma = cfg.sigmas_or(&[15.0])[0];
    let ks = cfg.ks_or(&[1, 5, 50]);
    let (xs, s0) = cos_samples(m);
    let mut t = response_table(&xs, &s0, sigma, &ks, cfg.use_q())?;
    echo(&mut t, cfg, m, &[sigma], &ks);
    Ok(t)
}

pub fn run_dirac_figure(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let m = cfg.m_or(301);
    let sigma = cfg.sigmas_or(&[20.0])[0];
    let ks = cfg.ks_or(&[1, 5, 10]);
    let xs: Vec<f64> = (0..m).map(|i| i as f64).collect();
    let mut t = response_table(&xs, &Signal::impulse(m, m / 2), sigma, &ks, cfg.use_q())?;
    echo(&mut t, cfg, m, &[sigma], &ks);
    t.meta("impulse_index", m / 2);
    Ok(t)
}

/// Synthetic twin experiment: a smooth truth, a background with correlated
/// error, and noisy point observations.
#[derive(Clone, Debug)]
pub struct SyntheticSetup {
    pub m: usize,
    pub sigma: f64,
    pub obs_count: usize,
    /// Standard deviation of both observation and background errors.
    pub noise: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    pub problem: VarProblem,
    pub truth: Signal,
    pub background: Signal,
}

/// Observation-error variance used when the configured noise is tiny.
pub const MIN_OBS_VARIANCE: f64 = 1e-2;

impl SyntheticSetup {
    pub fn generate(&self, backend: Backend) -> Result<SyntheticInstance> {
        let m = self.m;
        if self.obs_count == 0 || self.obs_count > m {
            return Err(Error::invalid(format!(
                "need between 1 and {m} observations, got {}",
                self.obs_count
            )));
        }
        let mut rng = rng_from_seed(self.seed);
        let modes: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.random_range(0.5..2.0),
                    rng.random_range(0.5..4.0),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let truth = Signal::from_fn(m, |i| {
            let x = i as f64 / m as f64;
            modes
                .iter()
                .map(|(a, f, p)| a * (std::f64::consts::TAU * f * x + p).sin())
                .sum()
        });

        let v = build_v_homogeneous(m, self.sigma)?;
        let white = Signal::from_fn(m, |_| rng.sample::<f64, _>(StandardNormal));
        // V white has variance ~ 1 / (2 sigma sqrt(pi)); rescale to `noise`
        let gain = self.noise * (2.0 * self.sigma * std::f64::consts::PI.sqrt()).sqrt();
        let background = truth.add(&v.mat_vec(&white)?.scale(gain));

        let mut idx = sample(&mut rng, m, self.obs_count).into_vec();
        idx.sort_unstable();
        let obs = ObsOperator::new(m, idx)?;
        let y: Vec<f64> = obs
            .gather(&truth)?
            .iter()
            .map(|t| t + self.noise * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let hb = obs.gather(&background)?;
        let misfit: Vec<f64> = y.iter().zip(hb.iter()).map(|(a, b)| a - b).collect();
        let r = (self.noise * self.noise).max(MIN_OBS_VARIANCE);
        let problem = VarProblem::new(
            Grid1D::uniform(m, self.sigma)?,
            obs,
            vec![r; self.obs_count],
            misfit,
            backend,
        )?
        .with_sigma_b(if gain > 0.0 { gain } else { 1.0 })?;
        Ok(SyntheticInstance {
            problem,
            truth,
            background,
        })
    }
}

/// Output of the assimilation demo. `failed` is set when any CG run did not
/// converge.
#[derive(Clone, Debug)]
pub struct VarDemo {
    pub table: Table,
    pub failed: bool,
}

/// End-to-end pipeline in long format: columns `series, index, value`.
pub fn run_var_demo(cfg: &ExperimentConfig) -> Result<VarDemo> {
    cfg.validate()?;
    let m = cfg.m_or(200);
    let sigma = cfg.sigmas_or(&[10.0])[0];
    let k = cfg.ks_or(&[5])[0];
    let setup = SyntheticSetup {
        m,
        sigma,
        obs_count: cfg.obs.unwrap_or((m / 10).max(1)),
        noise: cfg.noise.unwrap_or(0.1),
        seed: cfg.seed(),
    };
    let eps = 1e-10;
    let max_iter = cfg.max_iter.unwrap_or(m);
    let inst = setup.generate(Backend::Exact)?;
    let backends = [
        Backend::Exact,
        Backend::Rf1 { iterations: k },
        Backend::Rf3 { use_q: cfg.use_q() },
    ];

    let mut t = Table::new(&["series", "index", "value"]);
    echo(&mut t, cfg, m, &[sigma], &[k]);
    t.meta("obs", setup.obs_count)
        .meta("noise", setup.noise)
        .meta("eps", eps)
        .meta("max_iter", max_iter);
    let push_series = |t: &mut Table, name: &str, values: &[f64]| {
        for (i, v) in values.iter().enumerate() {
            t.push(vec![name.into(), i.into(), (*v).into()]);
        }
    };
    push_series(&mut t, "truth", &inst.truth);
    push_series(&mut t, "background", &inst.background);

    let mut failed = false;
    for backend in backends {
        let prob = inst.problem.with_backend(backend);
        let label = backend.label();
        match assimilate(&prob, eps, max_iter) {
            Ok(out) => {
                push_series(&mut t, &format!("increment_{label}"), &out.increment);
                push_series(&mut t, &format!("residual_{label}"), &out.report.residual_norms);
                push_series(
                    &mut t,
                    &format!("converged_{label}"),
                    &[if out.report.converged { 1.0 } else { 0.0 }],
                );
                failed |= !out.report.converged;
            }
            Err(Error::Divergence { iteration }) => {
                push_series(&mut t, &format!("diverged_{label}"), &[iteration as f64]);
                failed = true;
            }
            Err(e) => return Err(e),
        }
        if let Some(spec) = backend.filter_spec() {
            let check = paired_bound_check(&prob, spec, eps, max_iter)?;
            let col = |f: fn(&crate::analysis::BoundStep) -> f64| -> Vec<f64> {
                check.steps.iter().map(f).collect()
            };
            push_series(&mut t, &format!("bound_measured_{label}"), &col(|s| s.measured));
            push_series(&mut t, &format!("bound_theorem_{label}"), &col(|s| s.theorem));
            push_series(&mut t, &format!("bound_specialized_{label}"), &col(|s| s.specialized));
            push_series(&mut t, &format!("asymmetry_{label}"), &[check.filter_asymmetry]);
        }
    }

    let v = inst.problem.gaussian_operator()?;
    let cond = condition_compare(&v, &assemble_psi(&inst.problem))?;
    push_series(&mut t, "cond_primal", &[cond.primal]);
    push_series(&mut t, "cond_dual", &[cond.dual]);
    // diagnostic only; the primal matrix is not symmetric
    let primal = primal_solve(&inst.problem, eps, m)?;
    push_series(&mut t, "iterations_primal", &[primal.report.iterations as f64]);
    push_series(&mut t, "converged_primal", &[if primal.report.converged { 1.0 } else { 0.0 }]);
    Ok(VarDemo { table: t, failed })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Table1,
    Table2,
    Table3,
    FigCos,
    FigDirac,
    VarDemo,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Table2 => "table2",
            Experiment::Table3 => "table3",
            Experiment::FigCos => "fig-cos",
            Experiment::FigDirac => "fig-dirac",
            Experiment::VarDemo => "var-demo",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: Table,
    /// A numerical failure (e.g. CG non-convergence) was recorded in the table.
    pub numerical_failure: bool,
}

pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Outcome> {
    let ok = |table| Outcome {
        table,
        numerical_failure: false,
    };
    let mut out = match experiment {
        Experiment::Table1 => ok(run_table1(cfg)?),
        Experiment::Table2 => ok(run_table2(cfg)?),
        Experiment::Table3 => ok(run_table3(cfg)?),
        Experiment::FigCos => ok(run_cos_figure(cfg)?),
        Experiment::FigDirac => ok(run_dirac_figure(cfg)?),
        Experiment::VarDemo => {
            let demo = run_var_demo(cfg)?;
            Outcome {
                table: demo.table,
                numerical_failure: demo.failed,
            }
        }
    };
    retain_order(&mut out.table, cfg.order);
    out.table.meta.insert(0, ("experiment".into(), experiment.name().into()));
    if let Some(o) = cfg.order {
        out.table.meta.insert(1, ("order".into(), o.to_string()));
    }
    Ok(out)
}

/// Runs an experiment and writes it to `cfg.out` (or stdout).
pub fn run_and_write(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Outcome> {
    let out = run(experiment, cfg)?;
    let format = cfg.format.unwrap_or_default();
    match &cfg.out {
        Some(path) => out.table.write_to_path(path, format)?,
        None => {
            let stdout = std::io::stdout();
            out.table.write(stdout.lock(), format)?;
        }
    }
    Ok(out)
}

/// Drops the filter results of the order not selected by `--order`.
fn retain_order(table: &mut Table, order: Option<u32>) {
    let other = match order {
        Some(1) => "rf3",
        Some(3) => "rf1",
        _ => return,
    };
    if let Some(j) = table.column_index("series") {
        let tag = format!("_{other}");
        table.rows.retain(|r| !matches!(&r[j], Cell::Text(s) if s.contains(&tag)));
        return;
    }
    let keep: Vec<bool> = table.columns.iter().map(|c| !c.starts_with(other)).collect();
    let filter = |v: &mut Vec<_>| {
        let mut it = keep.iter();
        v.retain(|_| *it.next().unwrap());
    };
    filter(&mut table.columns);
    for row in &mut table.rows {
        let mut it = keep.iter();
        row.retain(|_| *it.next().unwrap());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = Table::new(&["a", "b", "label"]);
        t.meta("m", 5).meta("seed", 7);
        t.push(vec![0.1.into(), (1.0 / 3.0).into(), "x".into()]);
        t.push(vec![Cell::Missing, (-2.5e-300).into(), "y".into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# m: 5\n# seed: 7\na,b,label\n"));
        let back = Table::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.meta, t.meta);
        assert_eq!(back.column_f64("a").unwrap(), vec![Some(0.1), None]);
        assert_eq!(back.column_f64("b").unwrap(), vec![Some(1.0 / 3.0), Some(-2.5e-300)]);
    }

    #[test]
    fn json_is_array_of_rows() {
        let mut t = Table::new(&["k", "rf1", "rf3"]);
        t.push(vec![1usize.into(), 0.25.into(), Cell::Missing]);
        let mut buf = Vec::new();
        t.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["k"], 1);
        assert_eq!(v[0]["rf1"], 0.25);
        assert!(v[0]["rf3"].is_null());
    }

    #[test]
    fn config_merge_and_validation() {
        let file: ExperimentConfig =
            serde_json::from_str(r#"{"m": 100, "sigma": [5, 10], "use_q": true, "seed": 3}"#).unwrap();
        assert_eq!(file.sigma.as_ref().unwrap().to_vec(), vec![5.0, 10.0]);
        let scalar: ExperimentConfig = serde_json::from_str(r#"{"sigma": 7.5, "k": 4}"#).unwrap();
        assert_eq!(scalar.sigma.unwrap().to_vec(), vec![7.5]);
        assert_eq!(scalar.k.unwrap().to_vec(), vec![4]);

        let merged = file.merged_with(ExperimentConfig {
            m: Some(50),
            ..Default::default()
        });
        assert_eq!(merged.m, Some(50));
        assert_eq!(merged.seed, Some(3));
        assert_eq!(merged.use_q, Some(true));

        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
        for bad in [
            ExperimentConfig { m: Some(1), ..Default::default() },
            ExperimentConfig { sigma: Some(OneOrMany::One(-1.0)), ..Default::default() },
            ExperimentConfig { k: Some(OneOrMany::Many(vec![0])), ..Default::default() },
            ExperimentConfig { order: Some(2), ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Invalid(_))));
        }
        assert!("xml".parse::<Format>().is_err());
        assert_eq!("JSON".parse::<Format>().unwrap(), Format::Json);
    }

    #[test]
    fn zero_signal_gives_zero_responses() {
        let (xs, s0) = cos_samples(252);
        let zero = Signal::zeros(s0.len());
        let t = response_table(&xs, &zero, 15.0, &[1, 5, 50], true).unwrap();
        for col in ["v", "rf1_k1", "rf1_k5", "rf1_k50", "rf3"] {
            assert!(t.column_f64(col).unwrap().iter().all(|v| *v == Some(0.0)));
        }
    }

    #[test]
    fn synthetic_zero_noise_gives_zero_misfit() {
        let setup = SyntheticSetup {
            m: 80,
            sigma: 6.0,
            obs_count: 10,
            noise: 0.0,
            seed: 4,
        };
        let inst = setup.generate(Backend::Exact).unwrap();
        assert!(inst.problem.misfit.iter().all(|&d| d == 0.0));
        assert_eq!(inst.truth, inst.background);
    }
}

//! Experiment runner: spec parsing, configuration files and result documents.

use crate::asymptotics::{even_odd_limits, oscillation_report};
use crate::distributions::{
    bernoulli_noise, continuous_noise, make_fejer, make_gaussian, make_laplace, make_uniform, product,
    NoiseDistribution, SourceDistribution,
};
use crate::error::{invalid, Error, Result};
use crate::inversion::{Axis, GridSpec};
use crate::lattice::{check_pi_lattice_zeros, poisson_check, regularity_integral, wrapped_autocorrelation, RegularityKind};
use crate::oracle::monte_carlo_density;
use crate::smoothing::{convergence_study, density, kernel_smoothed_density, std_normal_density, Norm, SmoothedModel};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CheckCondition,
    Poisson,
    Autocorr,
    Density,
    Converge,
    Oscillate,
    Limits,
    Regularity,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::CheckCondition => "check-condition",
            Experiment::Poisson => "poisson",
            Experiment::Autocorr => "autocorr",
            Experiment::Density => "density",
            Experiment::Converge => "converge",
            Experiment::Oscillate => "oscillate",
            Experiment::Limits => "limits",
            Experiment::Regularity => "regularity",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { min: -5.0, max: 5.0, points: 1001 }
    }
}

fn default_noise() -> String {
    "bernoulli".into()
}
fn default_n() -> Vec<u64> {
    vec![16]
}
fn default_norm() -> Norm {
    Norm::Sup
}
fn default_tol() -> f64 {
    1e-12
}
fn default_k_max() -> usize {
    20
}
fn default_window() -> usize {
    16
}
fn default_kind() -> RegularityKind {
    RegularityKind::CfTimesGradient
}

/// Everything needed to reproduce one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub source: String,
    #[serde(default = "default_noise")]
    pub noise: String,
    /// A single `n` or a schedule.
    #[serde(default = "default_n")]
    pub n: Vec<u64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_norm")]
    pub norm: Norm,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Range `‖k‖_∞ <= k_max` for the `πZ^d` zero check.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Number of shells for the regularity integral.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_kind")]
    pub kind: RegularityKind,
    /// Monte Carlo samples for the density cross-check; 0 disables it.
    #[serde(default)]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, source: impl Into<String>) -> Self {
        Self {
            experiment,
            source: source.into(),
            noise: default_noise(),
            n: default_n(),
            grid: GridConfig::default(),
            norm: default_norm(),
            tol: default_tol(),
            k_max: default_k_max(),
            window: default_window(),
            kind: default_kind(),
            samples: 0,
            seed: 0,
            output: None,
            csv: None,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

fn parse_value(token: &str, pos: usize) -> Result<f64> {
    let v = match token {
        "pi" => Some(std::f64::consts::PI),
        t if t.starts_with("sqrt") => t[4..].parse::<f64>().ok().map(f64::sqrt),
        t => t.parse::<f64>().ok(),
    };
    v.filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse(format!("cannot parse number '{token}' at position {pos}")))
}

fn parse_family(text: &str, pos: usize) -> Result<SourceDistribution> {
    let (name, param) = match text.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (text, None),
    };
    let (key, ctor): (&str, fn(f64) -> Result<SourceDistribution>) = match name {
        "uniform" => ("h", make_uniform),
        "laplace" => ("b", make_laplace),
        "gaussian" => ("sigma", make_gaussian),
        "fejer" => ("T", make_fejer),
        other => {
            return Err(Error::Parse(if pos == 0 {
                format!("unknown distribution: {other}")
            } else {
                format!("unknown distribution: {other} at position {pos}")
            }))
        }
    };
    let value = match param {
        None => 1.0,
        Some(p) => {
            let ppos = pos + name.len() + 1;
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected {key}=value, found '{p}' at position {ppos}")))?;
            if k != key {
                return Err(Error::Parse(format!(
                    "unknown parameter '{k}' for {name} at position {ppos}; expected '{key}'"
                )));
            }
            parse_value(v, ppos + k.len() + 1)?
        }
    };
    ctor(value)
}

/// Parse a catalog source spec such as `laplace:b=2` or
/// `product:uniform:h=1,uniform:h=1`. Values accept `pi` and `sqrtX`.
pub fn parse_spec(text: &str) -> Result<SourceDistribution> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix("product:") {
        let mut parts = Vec::new();
        let mut pos = "product:".len();
        for piece in rest.split(',') {
            parts.push(parse_family(piece, pos)?);
            pos += piece.len() + 1;
        }
        return product(&parts);
    }
    parse_family(text, 0)
}

/// Parse a noise spec; `bernoulli` adapts to the source dimension.
pub fn parse_noise(text: &str, dim: usize) -> Result<NoiseDistribution> {
    match text.trim() {
        "bernoulli" => bernoulli_noise(dim),
        other => continuous_noise(parse_spec(other)?),
    }
}

/// Result of one run: the JSON document and, for grid experiments, CSV text.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub json: Value,
    pub csv: Option<String>,
}

fn grid_1d(g: &GridConfig) -> Result<GridSpec> {
    GridSpec::new(vec![Axis::new(g.min, g.max, g.points)?])
}

fn single_n(cfg: &ExperimentConfig) -> Result<u64> {
    match cfg.n.as_slice() {
        [n] => Ok(*n),
        _ => Err(invalid(format!("{} expects a single n", cfg.experiment.name()))),
    }
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Execute an experiment without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let source = parse_spec(&cfg.source)?;
    let d = source.dim();
    let noise = parse_noise(&cfg.noise, d)?;
    let model = SmoothedModel::new(source.clone(), noise)?;
    let mut csv = None;
    let result = match cfg.experiment {
        Experiment::CheckCondition => {
            let z = check_pi_lattice_zeros(&source, cfg.k_max);
            let auto = wrapped_autocorrelation(&source, cfg.tol)?;
            json!({
                "zero_check": z,
                "condition_holds": z.max_abs <= 1e-12,
                "wrapped_autocorrelation": auto,
                "autocorrelation_target": 0.5f64.powi(d as i32),
            })
        }
        Experiment::Poisson => serde_json::to_value(poisson_check(&source, cfg.tol)?).expect("serializable"),
        Experiment::Autocorr => {
            let auto = wrapped_autocorrelation(&source, cfg.tol)?;
            let target = 0.5f64.powi(d as i32);
            json!({ "value": auto, "target": target, "deviation": (auto - target).abs(), "tol": cfg.tol })
        }
        Experiment::Density => {
            let n = single_n(cfg)?;
            let grid = GridSpec::cube(d, cfg.grid.min, cfg.grid.max, cfg.grid.points)?;
            let gd = density(&model, n, &grid)?;
            let mut doc = json!({ "n": n, "density": gd });
            if d == 1 {
                let xs = grid.axes[0].points();
                csv = Some(csv_text(
                    &["x", "p_n", "phi"],
                    xs.iter().zip(&gd.values).map(|(&x, &p)| vec![x, p, std_normal_density(&[x])]),
                ));
                if cfg.samples > 0 {
                    let probes: Vec<Vec<f64>> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|&x| vec![x]).collect();
                    let mc = monte_carlo_density(&model, n, &probes, cfg.samples, None, cfg.seed)?;
                    let probe_grid = GridSpec::new(vec![Axis::new(-2.0, 2.0, 5)?])?;
                    let target = kernel_smoothed_density(&model, n, &probe_grid, mc.bandwidth)?;
                    doc["monte_carlo"] = json!({
                        "probes": [-2.0, -1.0, 0.0, 1.0, 2.0],
                        "estimate": mc,
                        "kernel_smoothed_target": target.values,
                    });
                }
            }
            doc
        }
        Experiment::Converge => {
            let grid = GridSpec::cube(d, cfg.grid.min, cfg.grid.max, cfg.grid.points)?;
            serde_json::to_value(convergence_study(&model, &cfg.n, cfg.norm, &grid)?).expect("serializable")
        }
        Experiment::Oscillate => {
            let n = single_n(cfg)?;
            let report = oscillation_report(&model, n, &grid_1d(&cfg.grid)?, None)?;
            let residuals = report.residuals();
            csv = Some(csv_text(
                &["x", "p_n", "phi", "A_n", "residual"],
                (0..report.xs.len()).map(|i| {
                    let x = report.xs[i];
                    vec![x, report.p_n[i], std_normal_density(&[x]), report.a_values[i], residuals[i]]
                }),
            ));
            serde_json::to_value(report).expect("serializable")
        }
        Experiment::Limits => {
            let l = even_odd_limits(&source)?;
            json!({ "even": l.even_limit, "odd": l.odd_limit, "method": l.method })
        }
        Experiment::Regularity => {
            serde_json::to_value(regularity_integral(&source, cfg.kind, cfg.window)?).expect("serializable")
        }
    };
    let json = json!({
        "library": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.name(),
        "config": cfg,
        "result": result,
    });
    Ok(RunOutput { json, csv })
}

/// Process exit code for an error: 2 for unmet hypotheses, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Unsupported(_) => 2,
        _ => 1,
    }
}

/// Run and write outputs: JSON to `cfg.output` (stdout when absent) and CSV to
/// `cfg.csv`, or next to the JSON file with a `.csv` extension.
pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    let out = execute(cfg)?;
    let body = serde_json::to_string_pretty(&out.json).expect("serializable") + "\n";
    let write = |p: &Path, text: &str| {
        std::fs::write(p, text).map_err(|e| invalid(format!("cannot write {}: {e}", p.display())))
    };
    match &cfg.output {
        Some(p) => write(p, &body)?,
        None => print!("{body}"),
    }
    if let Some(text) = out.csv {
        let path = cfg.csv.clone().or_else(|| cfg.output.as_ref().map(|p| p.with_extension("csv")));
        if let Some(p) = path {
            write(&p, &text)?;
        }
    }
    Ok(())
}

/// Command-line flags; any flag overrides the corresponding config entry.
#[derive(Debug, clap::Parser)]
#[command(name = "llt-lab", version, about = "Local limit theorem experiments for smoothed sums")]
pub struct Args {
    /// Experiment to run (may come from --config instead).
    pub experiment: Option<Experiment>,
    /// TOML configuration file with the same fields as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Source spec, e.g. laplace:b=1 or product:uniform:h=1,uniform:h=1.
    #[arg(long)]
    pub source: Option<String>,
    /// Noise spec: bernoulli or a unit-variance catalog law.
    #[arg(long)]
    pub noise: Option<String>,
    /// n or a comma-separated schedule.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    /// Regularity integrand: cf_times_gradient or gradient.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON output path (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV output path for grid-valued experiments.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl Args {
    /// Merge flags over the optional config file.
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, self.experiment) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(e)) => {
                let src = self.source.clone().ok_or_else(|| invalid("--source is required"))?;
                ExperimentConfig::new(e, src)
            }
            (None, None) => return Err(invalid("an experiment or --config is required")),
        };
        if let Some(e) = self.experiment {
            cfg.experiment = e;
        }
        if let Some(s) = self.source {
            cfg.source = s;
        }
        if let Some(s) = self.noise {
            cfg.noise = s;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(s) = self.norm {
            cfg.norm = s.parse()?;
        }
        if let Some(v) = self.grid_min {
            cfg.grid.min = v;
        }
        if let Some(v) = self.grid_max {
            cfg.grid.max = v;
        }
        if let Some(v) = self.grid_points {
            cfg.grid.points = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.k_max {
            cfg.k_max = v;
        }
        if let Some(v) = self.window {
            cfg.window = v;
        }
        if let Some(k) = self.kind {
            cfg.kind = match k.as_str() {
                "cf_times_gradient" => RegularityKind::CfTimesGradient,
                "gradient" => RegularityKind::Gradient,
                other => return Err(Error::Parse(format!("unknown regularity kind: {other}"))),
            };
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.output.is_some() {
            cfg.output = self.output;
        }
        if self.csv.is_some() {
            cfg.csv = self.csv;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        let l = parse_spec("laplace:b=2").unwrap();
        assert_eq!(l, make_laplace(2.0).unwrap());
        let p = parse_spec("product:uniform:h=1,uniform:h=1").unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(parse_spec("cauchy").unwrap_err(), Error::Parse("unknown distribution: cauchy".into()));
        assert_eq!(parse_spec("uniform:h=sqrt3").unwrap(), make_uniform(3f64.sqrt()).unwrap());
        assert_eq!(parse_spec("fejer:T=pi").unwrap(), make_fejer(std::f64::consts::PI).unwrap());
        let e = parse_spec("product:uniform:h=1,cauchy").unwrap_err().to_string();
        assert!(e.contains("cauchy") && e.contains("position 20"), "{e}");
        assert!(parse_spec("laplace:b=x").unwrap_err().to_string().contains("'x'"));
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = ExperimentConfig::new(Experiment::Converge, "uniform:h=1");
        cfg.n = vec![4, 16, 64];
        cfg.seed = 9;
        cfg.output = Some("out.json".into());
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn exit_codes() {
        let cfg = ExperimentConfig::new(Experiment::Poisson, "uniform:h=1");
        let err = execute(&cfg).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(err.to_string().contains("density discontinuous"));
        assert_eq!(exit_code(&parse_spec("cauchy").unwrap_err()), 1);
    }
}

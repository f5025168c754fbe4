//! Command-line front end.
//!
//! Exit codes: 0 ok, 2 config error, 3 degenerate model input,
//! 4 non-identifiable, 5 runtime failure.

pub mod config;
pub mod data;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::estimator::{fit, FitResult, FitStatus};
use crate::expfam::{CensoredDataset, ExpFamily, ObservationDesign};
use crate::fisher::{dpi_from, fim_censored, fim_uncensored};
use crate::montecarlo::{check_theorem1_conditions, run_mse_experiment, ConditionsReport, MseTable};
use crate::zoo::{GaussianCase3, Model, PositivityReport};

use config::{FimConfig, FitFileConfig, SimulationConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_NON_IDENTIFIABLE: i32 = 4;
pub const EXIT_RUNTIME: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "censored-glm",
    version,
    about = "ML estimation from 1-bit censored GLM observations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// TOML config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
    /// Directory for output files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Censored and uncensored Fisher information for a fixed design.
    Fim(Common),
    /// Maximum-likelihood fit of a data file.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Data file: header `d k`, then rows `b tau v11 ... vdk`.
        #[arg(long)]
        data: PathBuf,
    },
    /// Monte Carlo MSE experiments; writes `<name>.csv` and `manifest.json`.
    Simulate(Common),
    /// Regularity conditions for consistency and asymptotic normality.
    CheckConditions(Common),
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidInput(_) => EXIT_CONFIG,
            Error::Domain { .. }
            | Error::DegenerateLikelihood { .. }
            | Error::DegenerateThreshold { .. }
            | Error::InvalidThreshold { .. } => EXIT_DEGENERATE,
            Error::NonIdentifiable(_) => EXIT_NON_IDENTIFIABLE,
            Error::NaturalParameter(_) | Error::Numerical(_) | Error::Experiment(_) => EXIT_RUNTIME,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<(T, String)> {
    let text = read(path)?;
    let value = toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok((value, text))
}

/// SHA-256 of the config as canonical JSON (keys sorted), so the hash
/// ignores key order and formatting.
pub fn config_hash(text: &str) -> CliResult<String> {
    let value: toml::Value = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
    let json = serde_json::to_value(value).map_err(|e| CliError::config(e.to_string()))?;
    let canonical = serde_json::to_string(&json).expect("JSON values serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

fn json_out<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn format_matrix(m: &[f64], k: usize) -> String {
    (0..k)
        .map(|r| {
            let row: Vec<String> = (0..k).map(|c| format!("{:>14.7e}", m[r * k + c])).collect();
            format!("  [{}]", row.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn write_output(out: Option<&Path>, file: &str, body: &str) -> CliResult<Option<PathBuf>> {
    let Some(dir) = out else { return Ok(None) };
    fs::create_dir_all(dir).map_err(|e| CliError {
        code: EXIT_RUNTIME,
        message: format!("cannot create {}: {e}", dir.display()),
    })?;
    let path = dir.join(file);
    fs::write(&path, body).map_err(|e| CliError {
        code: EXIT_RUNTIME,
        message: format!("cannot write {}: {e}", path.display()),
    })?;
    Ok(Some(path))
}

// ---------------------------------------------------------------- fim

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau: f64,
    pub det_censored: f64,
    pub min_eigenvalue: f64,
    pub trace: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FimReport {
    pub model: String,
    pub n: usize,
    pub theta: Vec<f64>,
    pub moment: Vec<f64>,
    pub j_censored: Vec<f64>,
    pub i_uncensored: Vec<f64>,
    pub det_censored: f64,
    pub det_uncensored: f64,
    pub min_eigenvalue_censored: f64,
    pub min_eigenvalue_uncensored: f64,
    /// `det J_n / det I_n`; for `k = 1` the information ratio.
    pub ratio: f64,
    pub dpi_min_eigenvalue: f64,
    pub dpi_pass: bool,
    /// `J_n^{-1}`, absent when `J_n` is singular.
    pub crb: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepPoint>,
}

pub fn compute_fim(cfg: &FimConfig) -> CliResult<FimReport> {
    let model = cfg.model.model()?;
    let theta = cfg.model.truth()?;
    let (weights, taus) = cfg.design.expand(&model, Some(&theta))?;
    let designs = model.designs(&weights, &taus)?;
    let family = model.family();
    let j = fim_censored(&family, &theta, &designs)?;
    let i = fim_uncensored(&family, &theta, &designs)?;
    let crb = j.inverse().ok();
    let dpi = dpi_from(j, i);
    let (j, i) = (&dpi.censored, &dpi.uncensored);

    let mut sweep = Vec::new();
    if let Some(s) = &cfg.sweep {
        if s.steps < 2 || !(s.low < s.high) {
            return Err(CliError::config("[sweep] needs low < high and steps >= 2"));
        }
        for step in 0..s.steps {
            let tau = s.low + (s.high - s.low) * step as f64 / (s.steps - 1) as f64;
            let d = model.designs(&weights, &vec![tau; weights.len()])?;
            let f = fim_censored(&family, &theta, &d)?;
            sweep.push(SweepPoint {
                tau,
                det_censored: f.determinant,
                min_eigenvalue: f.min_eigenvalue,
                trace: (0..f.k).map(|r| f.entry(r, r)).sum(),
            });
        }
    }

    Ok(FimReport {
        model: model.name().into(),
        n: designs.len(),
        moment: model.moment_from_natural(&theta)?,
        theta,
        j_censored: j.matrix.clone(),
        i_uncensored: i.matrix.clone(),
        det_censored: j.determinant,
        det_uncensored: i.determinant,
        min_eigenvalue_censored: j.min_eigenvalue,
        min_eigenvalue_uncensored: i.min_eigenvalue,
        ratio: j.determinant / i.determinant,
        dpi_min_eigenvalue: dpi.min_eigenvalue,
        dpi_pass: dpi.pass,
        crb,
        sweep,
    })
}

fn fim_text(r: &FimReport) -> String {
    let k = r.theta.len();
    let mut s = String::new();
    let _ = writeln!(s, "model: {}  n = {}", r.model, r.n);
    let _ = writeln!(s, "theta (natural): {:?}", r.theta);
    let _ = writeln!(s, "moment coordinates: {:?}", r.moment);
    let _ = writeln!(s, "J_n (censored):\n{}", format_matrix(&r.j_censored, k));
    let _ = writeln!(s, "I_n (uncensored):\n{}", format_matrix(&r.i_uncensored, k));
    let _ = writeln!(
        s,
        "det J_n = {:.10e}   det I_n = {:.10e}   ratio = {:.12}",
        r.det_censored, r.det_uncensored, r.ratio
    );
    let _ = writeln!(
        s,
        "min eigenvalue J_n = {:.6e}   I_n = {:.6e}",
        r.min_eigenvalue_censored, r.min_eigenvalue_uncensored
    );
    let _ = writeln!(
        s,
        "I_n - J_n min eigenvalue = {:.6e} ({})",
        r.dpi_min_eigenvalue,
        if r.dpi_pass { "PSD" } else { "NOT PSD" }
    );
    match &r.crb {
        Some(c) => {
            let _ = writeln!(s, "J_n^-1:\n{}", format_matrix(c, k));
        }
        None => {
            let _ = writeln!(s, "J_n is singular");
        }
    }
    for p in &r.sweep {
        let _ = writeln!(
            s,
            "tau = {:>10.5}  det = {:.6e}  min eig = {:.6e}",
            p.tau, p.det_censored, p.min_eigenvalue
        );
    }
    s
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub n: usize,
    pub moment_labels: Vec<String>,
    /// `theta_hat` in moment coordinates, when it lies in the domain.
    pub moment: Option<Vec<f64>>,
    pub fit: FitResult,
}

/// Loads the data file, applying the model's design conventions.
pub fn load_fit_data(cfg: &FitFileConfig, model: &Model, text: &str) -> CliResult<CensoredDataset> {
    let raw = data::parse_data(text)?;
    let family = model.family();
    let observations = match model {
        Model::GaussianCase2 { alpha } => {
            let w = cfg
                .design
                .as_ref()
                .map(|d| d.weights.as_list())
                .unwrap_or_else(|| vec![1.0]);
            raw.observations()
                .iter()
                .enumerate()
                .map(|(i, o)| {
                    let d = &o.design;
                    let design = ObservationDesign::with_offset(
                        d.stat_dim(),
                        d.param_dim(),
                        d.matrix(),
                        d.tau(),
                        w[i % w.len()] * alpha,
                    )?;
                    Ok(crate::expfam::Observation { bit: o.bit, design })
                })
                .collect::<crate::Result<Vec<_>>>()?
        }
        _ => raw.observations().to_vec(),
    };
    let data = CensoredDataset::new(observations)?;
    if data.stat_dim() != family.stat_dim() || data.param_dim() != model.param_dim() {
        return Err(CliError::config(format!(
            "data file declares d = {}, k = {}; {} needs d = {}, k = {}",
            data.stat_dim(),
            data.param_dim(),
            model.name(),
            family.stat_dim(),
            model.param_dim()
        )));
    }
    Ok(data)
}

pub fn compute_fit(cfg: &FitFileConfig, data_text: &str, seed: Option<u64>) -> CliResult<FitReport> {
    let model = cfg.model.model()?;
    let data = load_fit_data(cfg, &model, data_text)?;
    let mut fc = cfg.fit.clone();
    if let Some(s) = seed {
        fc.seed = s;
    }
    let result = fit(&model.family(), &data, &fc)?;
    Ok(FitReport {
        model: model.name().into(),
        n: data.len(),
        moment_labels: model.moment_labels().iter().map(|s| s.to_string()).collect(),
        moment: model.moment_from_natural(result.theta_hat.values()).ok(),
        fit: result,
    })
}

fn fit_text(r: &FitReport) -> String {
    let k = r.fit.theta_hat.len();
    let mut s = String::new();
    let _ = writeln!(s, "model: {}  n = {}", r.model, r.n);
    let _ = writeln!(s, "status: {:?}  iterations = {}", r.fit.status, r.fit.iterations);
    let _ = writeln!(s, "theta_hat (natural): {:?}", r.fit.theta_hat.values());
    if let Some(m) = &r.moment {
        let pairs: Vec<String> = r
            .moment_labels
            .iter()
            .zip(m)
            .map(|(l, v)| format!("{l} = {v:.10}"))
            .collect();
        let _ = writeln!(s, "moment coordinates: {}", pairs.join(", "));
    }
    let _ = writeln!(s, "log-likelihood = {:.12}", r.fit.log_likelihood);
    let _ = writeln!(s, "||score||_inf = {:.3e}", r.fit.final_score_norm);
    let _ = writeln!(
        s,
        "observed information:\n{}",
        format_matrix(&r.fit.observed_information, k)
    );
    if let Some(m) = &r.fit.message {
        let _ = writeln!(s, "note: {m}");
    }
    s
}

// ---------------------------------------------------------------- check-conditions

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionsOutput {
    pub model: String,
    pub conditions: ConditionsReport,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity: Option<PositivityReport>,
}

pub fn compute_conditions(cfg: &FimConfig) -> CliResult<ConditionsOutput> {
    let model = cfg.model.model()?;
    let theta = cfg.model.truth()?;
    let (weights, taus) = cfg.design.expand(&model, Some(&theta))?;
    let designs = model.designs(&weights, &taus)?;
    let conditions = check_theorem1_conditions(&model.family(), &theta, &designs)?;
    let positivity = match model {
        Model::GaussianCase3 => {
            let (alpha, sigma) = GaussianCase3::moment(&theta)?;
            Some(GaussianCase3::new(weights)?.positivity_check(alpha, sigma, &taus)?)
        }
        _ => None,
    };
    Ok(ConditionsOutput {
        model: model.name().into(),
        pass: conditions.pass(),
        conditions,
        positivity,
    })
}

fn conditions_text(r: &ConditionsOutput) -> String {
    let c = &r.conditions;
    let verdict = |p: bool| if p { "pass" } else { "FAIL" };
    let mut s = String::new();
    let _ = writeln!(s, "model: {}  n = {}", r.model, c.n);
    let _ = writeln!(
        s,
        "(1) max E||T||^3       = {:.6e}  {}",
        c.third_moment.value,
        verdict(c.third_moment.pass)
    );
    let _ = writeln!(
        s,
        "(2) max ||V||_inf      = {:.6e}  {}",
        c.design_norm.value,
        verdict(c.design_norm.pass)
    );
    let _ = writeln!(
        s,
        "(3) min eig of J_n / n = {:.6e}  {}",
        c.information.value,
        verdict(c.information.pass)
    );
    let _ = writeln!(s, "    eigenvalues {:?}, det {:.6e}", c.eigenvalues, c.determinant);
    let _ = writeln!(s, "    drift vs n/2 prefix: {:.3e}", c.prefix_drift);
    let _ = writeln!(s, "max |third derivative| (sampled): {:.6e}", c.max_third_derivative);
    if let Some(p) = &r.positivity {
        for clause in [&p.sup_weight, &p.nonzero_fraction, &p.min_eigenvalue] {
            let _ = writeln!(
                s,
                "positivity: {} = {:.6e}  {}",
                clause.name,
                clause.value,
                verdict(clause.pass)
            );
        }
    }
    let _ = writeln!(s, "overall: {}", verdict(r.pass));
    s
}

// ---------------------------------------------------------------- simulate

pub fn compute_simulation(cfg: &SimulationConfig, seed: Option<u64>) -> CliResult<Vec<MseTable>> {
    let experiments = cfg.experiments(seed)?;
    experiments
        .iter()
        .map(|e| run_mse_experiment(e).map_err(CliError::from))
        .collect()
}

// ---------------------------------------------------------------- dispatch

fn emit(common: &Common, name: &str, json: String, text: String) -> CliResult<String> {
    write_output(common.out.as_deref(), &format!("{name}.json"), &json)?;
    Ok(if common.json { json } else { text })
}

/// Runs a parsed command and returns what to print on stdout.
pub fn execute(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Fim(common) => {
            let (cfg, _) = parse::<FimConfig>(&common.config)?;
            let r = compute_fim(&cfg)?;
            emit(common, "fim", json_out(&r), fim_text(&r))
        }
        Command::CheckConditions(common) => {
            let (cfg, _) = parse::<FimConfig>(&common.config)?;
            let r = compute_conditions(&cfg)?;
            emit(common, "conditions", json_out(&r), conditions_text(&r))
        }
        Command::Fit { common, data } => {
            let (cfg, _) = parse::<FitFileConfig>(&common.config)?;
            let text = read(data)?;
            let r = compute_fit(&cfg, &text, common.seed)?;
            let printed = emit(common, "fit", json_out(&r), fit_text(&r))?;
            match r.fit.status {
                FitStatus::NonIdentifiable | FitStatus::BoundaryDivergence => Err(CliError {
                    code: EXIT_NON_IDENTIFIABLE,
                    message: format!(
                        "{printed}\nnon-identifiable: {}",
                        r.fit
                            .message
                            .as_deref()
                            .unwrap_or("the likelihood has no finite maximizer")
                    ),
                }),
                _ => Ok(printed),
            }
        }
        Command::Simulate(common) => {
            let started_at = chrono::Utc::now().to_rfc3339();
            let (cfg, text) = parse::<SimulationConfig>(&common.config)?;
            let tables = compute_simulation(&cfg, common.seed)?;
            let Some(dir) = common.out.as_deref() else {
                if tables.len() == 1 {
                    return Ok(tables[0].to_csv());
                }
                return Ok(tables
                    .iter()
                    .map(|t| format!("# {}\n{}", t.name, t.to_csv()))
                    .collect::<Vec<_>>()
                    .join("\n"));
            };
            let mut outputs = Vec::new();
            for t in &tables {
                let path = write_output(Some(dir), &format!("{}.csv", t.name), &t.to_csv())?.expect("dir is set");
                outputs.push(path.display().to_string());
            }
            let manifest = RunManifest {
                command: "simulate".into(),
                config_path: common.config.display().to_string(),
                config_sha256: config_hash(&text)?,
                seed: common.seed.unwrap_or(cfg.seed),
                tool_version: env!("CARGO_PKG_VERSION").into(),
                started_at,
                finished_at: chrono::Utc::now().to_rfc3339(),
                outputs: outputs.clone(),
            };
            write_output(Some(dir), "manifest.json", &json_out(&manifest))?;
            Ok(if common.json {
                json_out(&tables)
            } else {
                tables
                    .iter()
                    .map(|t| format!("# {}\n{}", t.name, t.to_csv()))
                    .collect::<Vec<_>>()
                    .join("\n")
            })
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

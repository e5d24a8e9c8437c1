use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use reqcontract::agent::expected_agent_payoff;
use reqcontract::calibration::{fit_linear_mle, to_dimensionless};
use reqcontract::montecarlo::{
    agent_payoff_sd, phi_identity_sd, principal_payoff_sd, simulate_expected_agent_payoff,
    simulate_expected_principal_payoff, verify_phi_identity, McEstimate,
};
use reqcontract::principal::{expected_principal_payoff, linspace, optimize_contracts, sweep_requirement};
use reqcontract::{HistoricalRecord, ModelError};
use thiserror::Error;

use crate::config::{self, ConfigError, ScenarioConfig};
use crate::output::{sweep_csv, CalibrationDocument, CalibrationInput, ResultDocument};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_VERIFY_FAILED: u8 = 3;

/// Monte Carlo agreement threshold used by `verify`, in standard errors.
pub const VERIFY_Z_LIMIT: f64 = 4.0;
/// Rounding allowance, in units of epsilon times the payment magnitudes.
const ROUNDING_ULPS: f64 = 64.0;

#[derive(Debug, Parser)]
#[command(name = "reqcontract", version, about = "Optimal requirement-based contracts for subsystem engineers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize the contracts of a scenario and write a JSON result document.
    Solve {
        /// Config file, or the name of a bundled preset (e.g. hard_lowc_s005).
        #[arg(long)]
        config: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve, then sweep one agent's passed-down requirement and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// 1-based agent whose requirement is swept.
        #[arg(long, default_value_t = 1)]
        agent: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        min: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit quality-vs-investment history and convert to model parameters.
    Calibrate {
        /// CSV with header `investment,quality`.
        #[arg(long)]
        csv: PathBuf,
        /// State-of-the-art quality.
        #[arg(long, allow_negative_numbers = true)]
        q0: f64,
        /// Current cumulative investment (million USD).
        #[arg(long, allow_negative_numbers = true)]
        i0: f64,
        /// Required quality.
        #[arg(long, allow_negative_numbers = true)]
        qr: f64,
        /// Contract duration (years).
        #[arg(long, allow_negative_numbers = true)]
        horizon: f64,
        /// Engineer cost (million USD per year).
        #[arg(long = "cost-rate", allow_negative_numbers = true)]
        cost_rate: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare closed-form expectations with Monte Carlo at the optimal contracts.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read `{path}`: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("cannot write `{path}`: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    match out {
        Some(p) if p != Path::new("-") => fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        _ => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Write {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn load_scenario(path: &Path) -> Result<(ScenarioConfig, reqcontract::Scenario, reqcontract::OptimizerOptions), CliError> {
    let cfg = config::load(path)?;
    let scenario = cfg.scenario()?;
    let opts = cfg.optimizer_options()?;
    Ok((cfg, scenario, opts))
}

pub fn cmd_solve(config: &Path, out: Option<&Path>, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> Result<u8, CliError> {
    let (cfg, scenario, opts) = load_scenario(config)?;
    let result = optimize_contracts(&scenario, &opts)?;
    let converged = result.converged;
    let doc = ResultDocument::new(cfg, opts, result);
    emit(out, &doc.to_json(), stdout)?;
    if converged {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(stderr, "no restart satisfied every participation constraint; scenario is infeasible");
        Ok(EXIT_INFEASIBLE)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_sweep(
    config: &Path,
    agent: usize,
    min: f64,
    max: f64,
    points: usize,
    out: Option<&Path>,
    stdout: &mut dyn std::io::Write,
    stderr: &mut dyn std::io::Write,
) -> Result<u8, CliError> {
    if !(min >= 0.0 && max <= 2.0 && min <= max) || points == 0 || (points > 1 && min == max) {
        return Err(CliError::Usage(format!(
            "sweep range must satisfy 0 <= min < max <= 2 with points >= 1 (min == max only for one point); got min={min}, max={max}, points={points}"
        )));
    }
    let (_, scenario, opts) = load_scenario(config)?;
    if agent == 0 || agent > scenario.n_agents() {
        return Err(CliError::Usage(format!(
            "--agent must be in 1..={} (got {agent})",
            scenario.n_agents()
        )));
    }
    let base = optimize_contracts(&scenario, &opts)?;
    if !base.converged {
        let _ = writeln!(stderr, "warning: base solve is infeasible; sweeping around its best point");
    }
    let grid = linspace(min, max, points);
    let sweep = sweep_requirement(&scenario, &base, agent - 1, &grid)?;
    emit(out, &sweep_csv(&sweep), stdout)?;
    Ok(if base.converged { EXIT_OK } else { EXIT_INFEASIBLE })
}

pub fn read_records(path: &Path) -> Result<Vec<HistoricalRecord>, CliError> {
    let csv_err = |message: String| CliError::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["investment", "quality"] {
        return Err(csv_err(format!(
            "expected header `investment,quality`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    for row in reader.deserialize::<HistoricalRecord>() {
        let r = row.map_err(|e| csv_err(e.to_string()))?;
        if !(r.investment.is_finite() && r.quality.is_finite()) {
            return Err(csv_err(format!("non-finite value in row {}", records.len() + 2)));
        }
        records.push(r);
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_calibrate(
    csv_path: &Path,
    q0: f64,
    i0: f64,
    qr: f64,
    horizon: f64,
    cost_rate: f64,
    out: Option<&Path>,
    stdout: &mut dyn std::io::Write,
    stderr: &mut dyn std::io::Write,
) -> Result<u8, CliError> {
    let records = read_records(csv_path)?;
    let fit = fit_linear_mle(&records, q0, i0)?;
    let dimensionless = to_dimensionless(&fit, qr, horizon, cost_rate)?;
    let warnings = dimensionless.warnings();
    for w in &warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    let doc = CalibrationDocument {
        schema_version: crate::output::CALIBRATION_SCHEMA.to_string(),
        input: CalibrationInput {
            csv: csv_path.display().to_string(),
            q0,
            i0,
            q_required: qr,
            horizon,
            cost_rate,
        },
        fit,
        dimensionless,
        warnings,
    };
    emit(out, &doc.to_json(), stdout)?;
    Ok(EXIT_OK)
}

struct Check {
    label: String,
    analytic: f64,
    estimate: McEstimate,
    population_sd: f64,
    scale: f64,
}

impl Check {
    fn std_error(&self) -> f64 {
        self.population_sd / (self.estimate.n_samples as f64).sqrt()
    }

    fn z(&self) -> f64 {
        self.estimate
            .z_score_exact(self.analytic, self.population_sd, ROUNDING_ULPS * f64::EPSILON * self.scale)
    }
}

pub fn cmd_verify(config: &Path, n: usize, seed: u64, stdout: &mut dyn std::io::Write) -> Result<u8, CliError> {
    if n < 2 {
        return Err(ModelError::TooFewSamples(n).into());
    }
    let (_, scenario, opts) = load_scenario(config)?;
    let solved = optimize_contracts(&scenario, &opts)?;
    let mut checks = Vec::new();
    for (i, ((k, ag), &e)) in solved
        .contracts
        .iter()
        .zip(&scenario.agents)
        .zip(&solved.efforts)
        .enumerate()
    {
        let agent_seed = seed.wrapping_add(1 + 2 * i as u64);
        checks.push(Check {
            label: format!("agent[{}] payoff at e*={:.6}", i + 1, e),
            analytic: expected_agent_payoff(e, k, ag)?,
            estimate: simulate_expected_agent_payoff(e, k, ag, n, agent_seed)?,
            population_sd: agent_payoff_sd(e, k, ag)?,
            scale: k.psi1 + k.psi2 + ag.c,
        });
        let lambda = ag.a * e - k.psi3;
        checks.push(Check {
            label: format!("agent[{}] bonus probability", i + 1),
            analytic: reqcontract::model::std_normal_cdf(lambda / ag.sigma),
            estimate: verify_phi_identity(lambda, ag.sigma, n, agent_seed + 1)?,
            population_sd: phi_identity_sd(lambda, ag.sigma),
            scale: 1.0,
        });
    }
    checks.push(Check {
        label: "principal payoff".into(),
        analytic: expected_principal_payoff(&solved.contracts, &scenario)?,
        estimate: simulate_expected_principal_payoff(&solved.contracts, &scenario, n, seed)?,
        population_sd: principal_payoff_sd(&solved.contracts, &scenario)?,
        scale: scenario.v0 + solved.contracts.iter().map(|k| k.psi1 + k.psi2).sum::<f64>(),
    });

    let mut report = String::new();
    let _ = writeln!(report, "n = {n}, seed = {seed}, limit |z| <= {VERIFY_Z_LIMIT}");
    let _ = writeln!(
        report,
        "{:<34} {:>24} {:>24} {:>12} {:>9}",
        "quantity", "analytic", "monte_carlo", "std_error", "z"
    );
    let mut ok = true;
    for c in &checks {
        let z = c.z();
        let pass = z.abs() <= VERIFY_Z_LIMIT;
        ok &= pass;
        let _ = writeln!(
            report,
            "{:<34} {:>24.16e} {:>24.16e} {:>12.4e} {:>9.3} {}",
            c.label,
            c.analytic,
            c.estimate.mean,
            c.std_error(),
            z,
            if pass { "ok" } else { "FAIL" }
        );
    }
    let _ = writeln!(report, "{}", if ok { "all checks passed" } else { "verification FAILED" });
    stdout.write_all(report.as_bytes()).map_err(|source| CliError::Write {
        path: PathBuf::from("<stdout>"),
        source,
    })?;
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// Runs a parsed command, mapping errors to exit code 1 with a message on `stderr`.
pub fn run(cli: Cli, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> u8 {
    let res = match cli.command {
        Command::Solve { config, out } => cmd_solve(&config, out.as_deref(), stdout, stderr),
        Command::Sweep {
            config,
            agent,
            min,
            max,
            points,
            out,
        } => cmd_sweep(&config, agent, min, max, points, out.as_deref(), stdout, stderr),
        Command::Calibrate {
            csv,
            q0,
            i0,
            qr,
            horizon,
            cost_rate,
            out,
        } => cmd_calibrate(&csv, q0, i0, qr, horizon, cost_rate, out.as_deref(), stdout, stderr),
        Command::Verify { config, n, seed } => cmd_verify(&config, n, seed, stdout),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}

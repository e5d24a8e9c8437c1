//! Serialized output documents.

use std::fmt::Write as _;

use reqcontract::{CalibrationFit, DimensionlessParams, OptimizerOptions, SolveResult, SweepResult};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;

pub const RESULT_SCHEMA: &str = "reqcontract.result/1";
pub const CALIBRATION_SCHEMA: &str = "reqcontract.calibration/1";
pub const SWEEP_HEADER: &str = "psi13,principal_payoff,effort,slack";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    pub feasibility_tolerance: f64,
    pub min_participation_slack: f64,
}

/// Output of `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub schema_version: String,
    pub input: ScenarioConfig,
    pub optimizer: OptimizerOptions,
    pub result: SolveResult,
    pub diagnostics: Diagnostics,
}

impl ResultDocument {
    pub fn new(input: ScenarioConfig, optimizer: OptimizerOptions, result: SolveResult) -> Self {
        let min_participation_slack = result
            .participation_slacks
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Self {
            schema_version: RESULT_SCHEMA.to_string(),
            diagnostics: Diagnostics {
                feasibility_tolerance: optimizer.feasibility_tolerance,
                min_participation_slack,
            },
            input,
            optimizer,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document is serializable");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationInput {
    pub csv: String,
    pub q0: f64,
    pub i0: f64,
    pub q_required: f64,
    pub horizon: f64,
    pub cost_rate: f64,
}

/// Output of `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationDocument {
    pub schema_version: String,
    pub input: CalibrationInput,
    pub fit: CalibrationFit,
    pub dimensionless: DimensionlessParams,
    pub warnings: Vec<String>,
}

impl CalibrationDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document is serializable");
        s.push('\n');
        s
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::with_capacity(64 * (sweep.grid.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for i in 0..sweep.grid.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_sig17(sweep.grid[i]),
            fmt_sig17(sweep.payoffs[i]),
            fmt_sig17(sweep.efforts[i]),
            fmt_sig17(sweep.slacks[i]),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-89, 0.98795514873909134, 0.0] {
            let s = fmt_sig17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_sig17(0.5), "5.0000000000000000e-1");
    }
}

//! Report file schema shared by the subcommands.
//!
//! Reports echo the command and configuration and list one record per check
//! with the tolerance actually used, so a run can be reproduced exactly.
//! Timing is printed to the console only: report files must be byte-stable
//! under identical configuration and seed.

use serde::Serialize;
use std::collections::BTreeMap;

use ovf_core::verify::{CheckRecord, VerifyReport, Witness};

#[derive(Debug, Serialize)]
pub struct WitnessWire {
    pub identity: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atom: Option<usize>,
    pub detail: String,
    pub residual: f64,
}

impl From<&Witness> for WitnessWire {
    fn from(w: &Witness) -> Self {
        WitnessWire {
            identity: w.identity.clone(),
            atom: w.atom,
            detail: w.detail.clone(),
            residual: w.residual,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CheckWire {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witnesses: Vec<WitnessWire>,
}

impl From<&CheckRecord> for CheckWire {
    fn from(c: &CheckRecord) -> Self {
        CheckWire {
            name: c.name.clone(),
            max_residual: c.max_residual,
            tolerance: c.tolerance,
            pass: c.pass,
            witnesses: c.witnesses.iter().map(WitnessWire::from).collect(),
        }
    }
}

/// Per-atom record of a stationarization solve: case tag, the quadratic
/// root where applicable, and the four feasibility slacks
/// `(box lower, box upper, first determinant, second determinant)`.
#[derive(Debug, Serialize)]
pub struct AtomSolveWire {
    pub atom: usize,
    pub case: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_first: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slacks: Option<[f64; 4]>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomSolveWire>,
    pub checks: Vec<CheckWire>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        Report {
            command: command.to_string(),
            config,
            atoms: Vec::new(),
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn push_check(&mut self, c: CheckWire) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn extend_verify(&mut self, v: &VerifyReport) {
        for c in &v.checks {
            self.push_check(CheckWire::from(c));
        }
    }

    pub fn push_scalar(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.push_check(CheckWire {
            name: name.to_string(),
            max_residual: residual,
            tolerance,
            pass: residual <= tolerance,
            witnesses: Vec::new(),
        });
    }

    /// Print one console line per check plus the overall verdict.
    pub fn print_console(&self) {
        for c in &self.checks {
            println!(
                "{} {:<32} max_residual={:.3e} tol={:.1e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.max_residual,
                c.tolerance
            );
            for w in c.witnesses.iter().take(3) {
                println!(
                    "       witness: {} {} residual={:.3e}{}",
                    w.identity,
                    w.detail,
                    w.residual,
                    w.atom.map(|a| format!(" (atom {a})")).unwrap_or_default()
                );
            }
        }
        println!("overall: {}", if self.pass { "PASS" } else { "FAIL" });
    }
}

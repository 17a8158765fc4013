//! Numerical checks of the theory: gradient variance under random circuits,
//! loss-landscape slices, the two-family closed forms and the partial-trace
//! indistinguishability counterexample.

mod barren;
mod theory;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use barren::{
    bp_variance_scan, check_variance_scan, landscape_slice, product_window_rdm, ry_product_state, LandscapeSlice,
    VarianceRow, VarianceScanResult,
};
pub use theory::{theorem3_closed_forms, theorem3_head, verify_corollary1, verify_theorem3};

/// One measured quantity and whether it met its bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: String,
}

/// Machine-readable outcome of a verifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub verifier: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(verifier: &str) -> Self {
        Self {
            verifier: verifier.into(),
            passed: true,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, passed: bool, value: f64, bound: impl Into<String>) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.into(),
            passed,
            value,
            bound: bound.into(),
        });
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const VARIANCE_HEADER: &str = "n,n_qsc,trials,mean,variance";
pub const LANDSCAPE_HEADER: &str = "theta1,theta2,loss";

pub fn variance_csv(result: &VarianceScanResult) -> String {
    let mut out = format!("{VARIANCE_HEADER}\n");
    for r in &result.rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.n, r.n_qsc, r.trials, r.grad_mean, r.grad_variance);
    }
    out
}

pub fn landscape_csv(slice: &LandscapeSlice) -> String {
    let mut out = format!("{LANDSCAPE_HEADER}\n");
    for &(a, b, l) in &slice.points {
        let _ = writeln!(out, "{a},{b},{l}");
    }
    out
}

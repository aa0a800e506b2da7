//! Pass/fail records for numerical checks and their JSON and text forms.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One claim checked against a number. `tolerance` is the absolute slack
/// used in the comparison; one-sided checks say so in `claim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub claim: String,
    pub paper_location: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// |measured − expected| ≤ tolerance.
    pub fn within(claim: impl Into<String>, location: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            claim: claim.into(),
            paper_location: location.into(),
            measured,
            expected,
            tolerance,
            pass: (measured - expected).abs() <= tolerance,
        }
    }

    /// |measured − expected| ≤ rel·|expected|.
    pub fn relative(claim: impl Into<String>, location: impl Into<String>, measured: f64, expected: f64, rel: f64) -> Self {
        Self::within(claim, location, measured, expected, rel * expected.abs())
    }

    /// lo ≤ measured ≤ hi, recorded as midpoint ± half-width.
    pub fn in_range(claim: impl Into<String>, location: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        let mut c = Self::within(claim, location, measured, 0.5 * (lo + hi), 0.5 * (hi - lo));
        c.pass = measured >= lo && measured <= hi;
        c
    }

    /// measured ≥ bound − slack.
    pub fn at_least(claim: impl Into<String>, location: impl Into<String>, measured: f64, bound: f64, slack: f64) -> Self {
        let mut c = Self::within(claim, location, measured, bound, slack);
        c.pass = measured >= bound - slack;
        c
    }

    /// measured ≤ bound + slack.
    pub fn at_most(claim: impl Into<String>, location: impl Into<String>, measured: f64, bound: f64, slack: f64) -> Self {
        let mut c = Self::within(claim, location, measured, bound, slack);
        c.pass = measured <= bound + slack;
        c
    }

    /// A check whose outcome was decided elsewhere.
    pub fn flag(claim: impl Into<String>, location: impl Into<String>, measured: f64, expected: f64, tolerance: f64, pass: bool) -> Self {
        Self {
            claim: claim.into(),
            paper_location: location.into(),
            measured,
            expected,
            tolerance,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(suite: impl Into<String>) -> Self {
        Self {
            suite: suite.into(),
            checks: Vec::new(),
        }
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.checks.extend(checks);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Aligned table, one row per check.
    pub fn to_text(&self) -> String {
        let rows: Vec<[String; 6]> = self
            .checks
            .iter()
            .map(|c| {
                [
                    if c.pass { "PASS" } else { "FAIL" }.to_string(),
                    c.claim.clone(),
                    c.paper_location.clone(),
                    format!("{:.6e}", c.measured),
                    format!("{:.6e}", c.expected),
                    format!("{:.2e}", c.tolerance),
                ]
            })
            .collect();
        let head = ["", "claim", "location", "measured", "expected", "tolerance"];
        let mut width = head.map(|h| h.chars().count());
        for r in &rows {
            for (w, cell) in width.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let mut s = String::new();
            for (i, (cell, w)) in cells.iter().zip(width).enumerate() {
                let pad = w - cell.chars().count();
                if i >= 3 {
                    s += &" ".repeat(pad);
                    s += cell;
                } else {
                    s += cell;
                    s += &" ".repeat(pad);
                }
                s += "  ";
            }
            let _ = writeln!(out, "{}", s.trim_end());
        };
        line(&head.map(String::from));
        for r in &rows {
            line(r);
        }
        let n_fail = self.failures().count();
        let _ = writeln!(
            out,
            "{}: {} checks, {} failed",
            self.suite,
            self.checks.len(),
            n_fail
        );
        out
    }
}

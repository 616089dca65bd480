//! Pass/fail reporting for acceptance criteria.
//!
//! Each criterion is a function returning an [`Outcome`]; [`run_criteria`]
//! prints one `PASS`/`FAIL` line per criterion and a summary.

use std::process::ExitCode;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    /// Passes with `ok` as detail when `misses` is empty, fails listing them otherwise.
    pub fn new(misses: Vec<String>, ok: String) -> Self {
        if misses.is_empty() {
            Outcome { passed: true, detail: ok }
        } else {
            Outcome {
                passed: false,
                detail: misses.join("; "),
            }
        }
    }

    pub fn fail(reason: impl Into<String>) -> Self {
        Outcome {
            passed: false,
            detail: reason.into(),
        }
    }

    /// Appended whether or not the criterion passed.
    pub fn note(mut self, extra: String) -> Self {
        self.detail = format!("{}; {extra}", self.detail);
        self
    }
}

/// `|got - want| <= tol`, with slack for values printed at the tolerance edge.
pub fn near(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol + 1e-9
}

pub type Criterion = (&'static str, fn() -> Outcome);

/// Runs every criterion in order; fails when any criterion fails.
pub fn run_criteria(criteria: &[Criterion]) -> ExitCode {
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = check();
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{status} criterion {name}: {}", outcome.detail);
        failed += usize::from(!outcome.passed);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Acceptance criteria for the workspace, each with its tolerance and time
//! budget. `tests/acceptance.rs` runs them all and prints one line per
//! criterion; nothing here needs the browser UI.

mod front;
mod kinematics;
mod replay;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

/// Outcome of one criterion.
#[derive(Debug)]
pub struct Report {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let budget = match self.budget {
            Some(b) => format!(", budget {} s", b.as_secs()),
            None => String::new(),
        };
        write!(
            f,
            "{} {:<28} {} ({:.2} s{budget})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// A criterion body returns a summary on success and the first violation on
/// failure.
pub type Outcome = Result<String, String>;

pub struct Criterion {
    pub name: &'static str,
    pub budget: Option<Duration>,
    pub run: fn() -> Outcome,
}

pub fn criteria() -> Vec<Criterion> {
    let secs = |s| Some(Duration::from_secs(s));
    vec![
        Criterion {
            name: "transform_algebra",
            budget: secs(5),
            run: kinematics::transform_algebra,
        },
        Criterion {
            name: "fk_determinism_structure",
            budget: secs(10),
            run: kinematics::fk_determinism_structure,
        },
        Criterion {
            name: "ik_round_trip",
            budget: secs(60),
            run: kinematics::ik_round_trip,
        },
        Criterion {
            name: "branch_completeness",
            budget: secs(120),
            run: kinematics::branch_completeness,
        },
        Criterion {
            name: "reachability_agreement",
            budget: None,
            run: kinematics::reachability_agreement,
        },
        Criterion {
            name: "validation_mode",
            budget: None,
            run: kinematics::validation_mode,
        },
        Criterion {
            name: "session_replay",
            budget: None,
            run: replay::session_replay,
        },
        Criterion {
            name: "cli_goldens",
            budget: None,
            run: front::cli_goldens,
        },
        Criterion {
            name: "service_contract",
            budget: None,
            run: front::service_contract,
        },
    ]
}

pub fn evaluate(c: &Criterion) -> Report {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let (mut pass, mut detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if let Some(b) = c.budget {
        if elapsed > b {
            pass = false;
            detail = format!("{detail}; over time budget");
        }
    }
    Report {
        name: c.name,
        pass,
        detail,
        elapsed,
        budget: c.budget,
    }
}

/// Fails the criterion with a formatted message unless `cond` holds. The
/// condition is negated as written so a NaN comparison fails.
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}
pub(crate) use ensure;

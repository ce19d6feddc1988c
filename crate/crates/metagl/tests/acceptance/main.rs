//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p metagl --test acceptance`.

mod cli;
mod graphs;
mod learner;
mod protocol;
mod summaries;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

/// Outcome detail on success, reason on failure.
pub type Outcome = Result<String, String>;

/// Fails with a formatted reason unless `cond` holds.
#[macro_export]
macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("extractor oracles", graphs::extractor_oracles),
        ("fixed-size isomorphism-invariant features", graphs::fixed_size_features),
        ("statistical summaries", summaries::summary_oracles),
        ("gradient check", learner::gradient_check),
        ("top-1 probability and sparse loss", learner::loss_properties),
        ("masked factorization", learner::masked_factorization),
        ("planted-corpus benchmark", protocol::planted_benchmark),
        ("sparsity robustness", protocol::sparsity_robustness),
        ("perturbation identity", protocol::perturbation_identity),
        ("selection latency", cli::selection_latency),
        ("ranking metrics", protocol::metric_oracles),
        ("command determinism", cli::determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>().map(String::as_str).or(e.downcast_ref::<&str>().copied()))));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name} ({secs:.1}s): {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {id:>2} {name} ({secs:.1}s): {reason}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sample::{SamplePlan, Sampler};
use crate::error::Result;
use crate::expr::{Expr, MapEnv, Program, Signature};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// Outcome of one numeric check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check_id: String,
    pub status: Status,
    pub max_residual: f64,
    pub n_points: usize,
    pub seed: u64,
    /// Wall time; zero unless timing was requested, so reports stay
    /// reproducible byte for byte.
    pub runtime_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn new(check_id: &str, max_residual: f64, tol: f64, n_points: usize, seed: u64) -> Report {
        let ok = max_residual <= tol;
        Report {
            check_id: check_id.to_string(),
            status: if ok { Status::Pass } else { Status::Fail },
            max_residual,
            n_points,
            seed,
            runtime_ms: 0,
            note: None,
        }
    }

    pub fn failed(check_id: &str, seed: u64, note: String) -> Report {
        Report {
            check_id: check_id.to_string(),
            status: Status::Fail,
            max_residual: f64::INFINITY,
            n_points: 0,
            seed,
            runtime_ms: 0,
            note: Some(note),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Report {
        self.note = Some(note.into());
        self
    }

    /// Passes when the residual exceeds the threshold instead.
    pub fn expect_failure(mut self, threshold: f64) -> Report {
        self.status = if self.max_residual > threshold { Status::Pass } else { Status::Fail };
        self
    }
}

/// |a − b| / max(1, |a|, |b|): relative for large values, absolute below 1.
pub fn scaled_residual(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Runs `f` at `plan.n_points` admissible points of `exprs` and reports the
/// largest residual it returns. `f` may skip a point by returning `None`.
pub fn check_points(
    check_id: &str,
    sig: &Signature,
    plan: &SamplePlan,
    exprs: &[&Expr],
    mut f: impl FnMut(&MapEnv, &mut ChaCha8Rng) -> Result<Option<f64>>,
) -> Report {
    let start = Instant::now();
    let mut sampler = Sampler::new(plan, sig, exprs);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut skipped = 0;
    while done < plan.n_points {
        let env = match sampler.next_point() {
            Ok(env) => env,
            Err(e) => return Report::failed(check_id, plan.seed, e.to_string()),
        };
        match f(&env, sampler.rng()) {
            Ok(Some(r)) => {
                worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
                done += 1;
            }
            Ok(None) => {
                skipped += 1;
                if skipped > plan.max_rejections {
                    return Report::failed(check_id, plan.seed, "too many skipped points".into());
                }
            }
            Err(e) => return Report::failed(check_id, plan.seed, e.to_string()),
        }
    }
    let mut r = Report::new(check_id, worst, plan.tol, done, plan.seed);
    if plan.timing {
        r.runtime_ms = start.elapsed().as_millis() as u64;
    }
    r
}

/// Compares two expressions at random admissible points.
pub fn identity_check(check_id: &str, lhs: &Expr, rhs: &Expr, sig: &Signature, plan: &SamplePlan) -> Report {
    let l = Program::new(lhs);
    let r = Program::new(rhs);
    check_points(check_id, sig, plan, &[lhs, rhs], |env, _| {
        Ok(Some(scaled_residual(l.run(env)?, r.run(env)?)))
    })
}

//! Does a failed recovery ever get back on track?
//!
//! Once `d` consecutive parameters are wrong the state beliefs are out of step with
//! the encoder. Getting back requires `d` consecutive lucky guesses, which for
//! position-wise guessing is bounded by `1 / K^(d-1)` per iteration. The experiment
//! runs failing trials to the end without a monitor and looks for `d` consecutive
//! correct results after the failure.

use rayon::prelude::*;

use crate::trial::{run_trial, TrialRecord, TrialSpec};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnExperiment {
    pub k: usize,
    pub d: usize,
    /// Failed trials examined.
    pub failed_cases: usize,
    /// Failed trials in which a return was seen.
    pub returns: usize,
    /// Trials run to collect the failed cases.
    pub trials_run: usize,
    /// `1 / K^(d-1)`.
    pub bound: f64,
}

/// Analytic bound on the probability of returning to the correct state.
pub fn return_bound(k: usize, d: usize) -> f64 {
    (k as f64).powi(1 - d as i32)
}

/// Whether `record` shows `d` consecutive correct results after the run of `d` wrong
/// ones that marks its failure. With `d == 1` any correct result after the first
/// wrong one counts.
pub fn returned(record: &TrialRecord, d: usize) -> bool {
    let Some(onset) = record.failure_onset else {
        return false;
    };
    let mut run = 0;
    for &ok in &record.correct[onset + d..] {
        run = if ok { run + 1 } else { 0 };
        if run >= d {
            return true;
        }
    }
    false
}

/// Runs trials `0, 1, 2, ...` without a monitor until `failed_cases` of them have
/// failed (or `max_trials` have run) and counts returns among the failed ones.
pub fn return_probability_experiment(
    spec: &TrialSpec,
    d: usize,
    failed_cases: usize,
    max_trials: usize,
) -> Result<ReturnExperiment> {
    const BATCH: usize = 64;
    let mut failed: Vec<TrialRecord> = Vec::new();
    let mut next = 0usize;
    while failed.len() < failed_cases && next < max_trials {
        let end = (next + BATCH).min(max_trials);
        let batch = (next..end)
            .into_par_iter()
            .map(|t| run_trial(spec, t as u64, None))
            .collect::<Result<Vec<_>>>()?;
        for r in batch {
            let mut r = r;
            r.failure_onset = crate::trial::failure_onset(&r.correct, d);
            if r.failure_onset.is_some() && failed.len() < failed_cases {
                failed.push(r);
            }
        }
        next = end;
    }
    let trials_run = failed
        .last()
        .filter(|_| failed.len() == failed_cases)
        .map_or(next, |r| r.trial as usize + 1);
    Ok(ReturnExperiment {
        k: spec.k,
        d,
        failed_cases: failed.len(),
        returns: failed.iter().filter(|r| returned(r, d)).count(),
        trials_run,
        bound: return_bound(spec.k, d),
    })
}

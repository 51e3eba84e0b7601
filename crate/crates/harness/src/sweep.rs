//! Grid sweeps over SNR and block count.
//!
//! Every grid point reuses the trial indices `0..trials`, so points differ only in
//! the parameter being swept (common random numbers). Each trial runs once without a
//! monitor; the early-stopped result is derived from the same run, which makes the
//! reduction in correct probability a paired measurement.

use rayon::prelude::*;

use pirec_core::{ChannelModel, ThresholdPair, Trellis};

use crate::config::ExperimentConfig;
use crate::metrics::{correct_estimate, correct_probability_reduction, wasted_estimate, MeanEstimate};
use crate::trial::{run_paired_trial, PairedTrial, TrialSpec};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSpec {
    pub snr_db: f64,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub snr_db: f64,
    pub m: usize,
    pub thresholds: ThresholdPair,
    /// Whether `p_c` and `e_w` describe the early-stopped runs.
    pub early_stop: bool,
    pub trials: usize,
    pub p_c: MeanEstimate,
    pub e_w: MeanEstimate,
    pub delta_p_c: MeanEstimate,
    pub p_c_without_stop: MeanEstimate,
    pub e_w_without_stop: MeanEstimate,
}

impl PointResult {
    /// Aggregates paired trials whose first early-stopped run used `thresholds`.
    pub fn from_trials(
        point: PointSpec,
        thresholds: ThresholdPair,
        early_stop: bool,
        trials: &[PairedTrial],
    ) -> Self {
        let full: Vec<_> = trials.iter().map(|t| t.without_stop.clone()).collect();
        let cut: Vec<_> = trials.iter().map(|t| t.with_stop[0].clone()).collect();
        let reported = if early_stop { &cut } else { &full };
        Self {
            snr_db: point.snr_db,
            m: point.m,
            thresholds,
            early_stop,
            trials: trials.len(),
            p_c: correct_estimate(reported),
            e_w: wasted_estimate(reported),
            delta_p_c: correct_probability_reduction(&full, &cut),
            p_c_without_stop: correct_estimate(&full),
            e_w_without_stop: wasted_estimate(&full),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub k: usize,
    pub points: Vec<PointResult>,
}

/// Runs `trials` paired trials at one grid point, in parallel on the current pool.
pub fn run_point(
    trellis: &Trellis,
    config: &ExperimentConfig,
    point: PointSpec,
    thresholds: ThresholdPair,
) -> Result<PointResult> {
    let spec = trial_spec(trellis, config, point)?;
    let trials = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_paired_trial(&spec, t, &[thresholds]))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointResult::from_trials(point, thresholds, config.early_stop, &trials))
}

pub fn trial_spec(trellis: &Trellis, config: &ExperimentConfig, point: PointSpec) -> Result<TrialSpec> {
    Ok(TrialSpec {
        trellis: trellis.clone(),
        k: config.k,
        m: point.m,
        channel: ChannelModel::from_snr_db(point.snr_db)?,
        policy: config.policy,
        seed: config.seed,
    })
}

/// Grid points in output order: SNR-major, then block count.
pub fn grid(config: &ExperimentConfig) -> Vec<PointSpec> {
    config
        .snr_db
        .iter()
        .flat_map(|&snr_db| config.m.iter().map(move |&m| PointSpec { snr_db, m }))
        .collect()
}

/// Runs every grid point of `config`. Results do not depend on the number of worker
/// threads: trials are collected in index order before any aggregation.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let thresholds = config.resolved_thresholds()?;
    let trellis = Trellis::new(config.generator);
    let points = grid(config);
    let specs = points
        .iter()
        .map(|&p| trial_spec(&trellis, config, p))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| (0..config.trials as u64).map(move |t| (p, t)))
        .collect();
    let trials = jobs
        .into_par_iter()
        .map(|(p, t)| run_paired_trial(&specs[p], t, &[thresholds]))
        .collect::<Result<Vec<_>>>()?;
    let points = points
        .iter()
        .zip(trials.chunks(config.trials))
        .map(|(&p, chunk)| PointResult::from_trials(p, thresholds, config.early_stop, chunk))
        .collect();
    Ok(SweepResult { k: config.k, points })
}

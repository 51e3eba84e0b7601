//! One Monte Carlo trial: draw an interleaver and `M` blocks, recover, compare.

use pirec_core::channel::{simulate_blocks, substream};
use pirec_core::recovery::RecoveryOutcome;
use pirec_core::{
    run_recovery, CandidatePolicy, ChannelModel, Interleaver, Monitor, ThresholdPair, Trellis,
};

use crate::Result;

/// Everything a trial needs apart from its index.
#[derive(Clone, Debug)]
pub struct TrialSpec {
    pub trellis: Trellis,
    pub k: usize,
    pub m: usize,
    pub channel: ChannelModel,
    pub policy: CandidatePolicy,
    pub seed: u64,
}

/// How a run ended relative to the failure onset `i1` and the stop point `i2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopOutcome {
    /// Stopped `W = i2 - i1` iterations after failing.
    Wasted(usize),
    /// Stopped `L = i1 - i2` iterations before the failure (or before `K`).
    Lost(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    /// Ground truth, 0-based.
    pub pi: Vec<usize>,
    /// Committed positions, 0-based; shorter than `pi` when stopped early.
    pub pi_hat: Vec<usize>,
    /// `correct[i]` is `pi_hat[i] == pi[i]`, one entry per iteration run.
    pub correct: Vec<bool>,
    /// Iterations run (`i2`).
    pub stop_iteration: usize,
    pub stopped_early: bool,
    /// Iterations completed before the first run of `d` wrong results (`i1`).
    pub failure_onset: Option<usize>,
    /// Statistic per iteration; `None` where it was not computed.
    pub epsilons: Vec<Option<f64>>,
}

impl TrialRecord {
    fn from_outcome(trial: u64, pi: &Interleaver, outcome: &RecoveryOutcome, d: usize) -> Self {
        let correct: Vec<bool> = outcome
            .pi_hat
            .iter()
            .zip(pi.as_slice())
            .map(|(a, b)| a == b)
            .collect();
        Self {
            trial,
            pi: pi.as_slice().to_vec(),
            failure_onset: failure_onset(&correct, d),
            stop_iteration: outcome.stop_iteration(),
            stopped_early: outcome.stopped_early,
            pi_hat: outcome.pi_hat.clone(),
            correct,
            epsilons: outcome.trace.iter().map(|r| r.epsilon).collect(),
        }
    }

    /// The same run cut after `stop` iterations, as if a monitor had fired there.
    fn truncated(&self, stop: usize, d: usize) -> Self {
        let stop = stop.min(self.stop_iteration);
        let correct = self.correct[..stop].to_vec();
        Self {
            trial: self.trial,
            pi: self.pi.clone(),
            pi_hat: self.pi_hat[..stop].to_vec(),
            failure_onset: failure_onset(&correct, d),
            correct,
            stop_iteration: stop,
            stopped_early: stop < self.pi.len(),
            epsilons: self.epsilons[..stop].to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn num_correct(&self) -> usize {
        self.correct.iter().filter(|&&c| c).count()
    }

    /// Iterations that ran and committed a wrong parameter.
    pub fn num_wrong(&self) -> usize {
        self.stop_iteration - self.num_correct()
    }

    /// `W` or `L` for this run, with the failure onset taken from `reference` (the
    /// full-length run on the same data) since a stopped run may end before the
    /// failure becomes visible. A run that never fails has onset `K`.
    pub fn stop_outcome(&self, reference: &TrialRecord) -> StopOutcome {
        let i1 = reference.failure_onset.unwrap_or(reference.len());
        let i2 = self.stop_iteration;
        if i2 > i1 {
            StopOutcome::Wasted(i2 - i1)
        } else {
            StopOutcome::Lost(i1 - i2)
        }
    }
}

/// Number of results before the first run of `d` consecutive wrong ones, or `None`
/// if there is no such run. With `d == 0` every run counts as failed at once.
pub fn failure_onset(correct: &[bool], d: usize) -> Option<usize> {
    if d == 0 {
        return Some(0);
    }
    let mut run = 0;
    for (i, &ok) in correct.iter().enumerate() {
        run = if ok { 0 } else { run + 1 };
        if run == d {
            return Some(i + 1 - d);
        }
    }
    None
}

fn draw(spec: &TrialSpec, trial: u64) -> (Interleaver, Vec<pirec_core::ReceivedBlock>) {
    let pi = Interleaver::random(spec.k, &mut substream(spec.seed, trial, 0));
    let blocks = simulate_blocks(&spec.trellis, &pi, &spec.channel, spec.m, spec.seed, trial);
    (pi, blocks)
}

/// Runs trial `trial` with an optional monitor.
pub fn run_trial(spec: &TrialSpec, trial: u64, thresholds: Option<ThresholdPair>) -> Result<TrialRecord> {
    let (pi, blocks) = draw(spec, trial);
    let mut monitor = thresholds.map(Monitor::new);
    let outcome = run_recovery(&spec.trellis, spec.channel, blocks, spec.policy, monitor.as_mut())?;
    Ok(TrialRecord::from_outcome(
        trial,
        &pi,
        &outcome,
        spec.trellis.memory_depth() as usize,
    ))
}

/// A full-length run and the runs that monitors with various thresholds would have
/// produced on the same data.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedTrial {
    pub without_stop: TrialRecord,
    pub with_stop: Vec<TrialRecord>,
}

/// Runs trial `trial` once without a monitor and derives the early-stopped run for
/// each threshold pair by replaying its statistic trace. The monitor never changes
/// which parameters are chosen, so this equals running each monitor separately.
pub fn run_paired_trial(spec: &TrialSpec, trial: u64, thresholds: &[ThresholdPair]) -> Result<PairedTrial> {
    let full = run_trial(spec, trial, None)?;
    let d = spec.trellis.memory_depth() as usize;
    let with_stop = thresholds
        .iter()
        .map(|&t| full.truncated(replay(t, &full.epsilons), d))
        .collect();
    Ok(PairedTrial {
        without_stop: full,
        with_stop,
    })
}

/// Iterations a monitor would let run on `trace`; iterations without a statistic are
/// not shown to it.
fn replay(thresholds: ThresholdPair, trace: &[Option<f64>]) -> usize {
    let mut monitor = Monitor::new(thresholds);
    for (i, eps) in trace.iter().enumerate() {
        if let Some(eps) = eps {
            if monitor.observe(*eps) {
                return i + 1;
            }
        }
    }
    trace.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use pirec_core::GeneratorSpec;

    #[test]
    fn onset_examples() {
        let (t, f) = (true, false);
        assert_eq!(failure_onset(&[t, t, t, t], 3), None);
        assert_eq!(failure_onset(&[t, t, f, f, f, t], 3), Some(2));
        assert_eq!(failure_onset(&[f, t, f, f], 2), Some(2));
        assert_eq!(failure_onset(&[t, f, t], 1), Some(1));
        assert_eq!(failure_onset(&[], 2), None);
    }

    #[test]
    fn stop_outcomes() {
        let spec = TrialSpec {
            trellis: Trellis::new(GeneratorSpec::new(5, 7, 2).unwrap()),
            k: 6,
            m: 1,
            channel: ChannelModel::from_noise_std(1.0).unwrap(),
            policy: CandidatePolicy::AllPositions,
            seed: 0,
        };
        let (pi, _) = draw(&spec, 0);
        let mut pi_hat = pi.as_slice().to_vec();
        pi_hat[3] = (pi_hat[3] + 1) % 6;
        pi_hat[4] = (pi_hat[4] + 1) % 6;
        pi_hat[5] = (pi_hat[5] + 1) % 6;
        let outcome = RecoveryOutcome {
            pi_hat,
            stopped_early: false,
            trace: Vec::new(),
        };
        let mut full = TrialRecord::from_outcome(0, &pi, &outcome, 2);
        full.epsilons = vec![None; 6];
        assert_eq!(full.failure_onset, Some(3));
        assert_eq!(full.num_wrong(), 3);
        assert_eq!(full.stop_outcome(&full), StopOutcome::Wasted(3));
        let early = full.truncated(1, 2);
        assert_eq!(early.stop_outcome(&full), StopOutcome::Lost(2));
        assert!(early.stopped_early);
        assert_eq!(early.num_correct(), 1);
    }
}

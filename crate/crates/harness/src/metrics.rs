//! Aggregate metrics over trial records.

use crate::trial::TrialRecord;

/// Two-sided 95% normal quantile used for confidence half-widths.
const Z95: f64 = 1.959_963_984_540_054;

/// Sample mean with a 95% normal-approximation half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanEstimate {
    /// Summarises `values` (summed in the given order). Panics on an empty slice.
    pub fn from_values(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "no values to summarise");
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let half_width = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Z95 * (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, half_width, n }
    }
}

/// Fraction of correctly recovered parameters per trial. Parameters after a stop
/// count as incorrect.
pub fn correct_fractions(records: &[TrialRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|r| r.num_correct() as f64 / r.len() as f64)
        .collect()
}

pub fn correct_probability(records: &[TrialRecord]) -> f64 {
    MeanEstimate::from_values(&correct_fractions(records)).mean
}

/// Mean number of iterations that ran and produced a wrong parameter.
pub fn wasted_iterations(records: &[TrialRecord]) -> f64 {
    wasted_estimate(records).mean
}

pub fn correct_estimate(records: &[TrialRecord]) -> MeanEstimate {
    MeanEstimate::from_values(&correct_fractions(records))
}

pub fn wasted_estimate(records: &[TrialRecord]) -> MeanEstimate {
    let w: Vec<f64> = records.iter().map(|r| r.num_wrong() as f64).collect();
    MeanEstimate::from_values(&w)
}

/// `P_C` without minus `P_C` with early stopping, from runs paired on the same data.
pub fn correct_probability_reduction(without: &[TrialRecord], with: &[TrialRecord]) -> MeanEstimate {
    assert_eq!(without.len(), with.len(), "paired records differ in count");
    let diffs: Vec<f64> = without
        .iter()
        .zip(with)
        .map(|(a, b)| (a.num_correct() as f64 - b.num_correct() as f64) / a.len() as f64)
        .collect();
    MeanEstimate::from_values(&diffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(correct: Vec<bool>, k: usize) -> TrialRecord {
        TrialRecord {
            trial: 0,
            pi: (0..k).collect(),
            pi_hat: vec![0; correct.len()],
            stop_iteration: correct.len(),
            stopped_early: correct.len() < k,
            failure_onset: None,
            epsilons: vec![None; correct.len()],
            correct,
        }
    }

    #[test]
    fn all_correct() {
        let recs = vec![record(vec![true; 8], 8); 3];
        assert_eq!(correct_probability(&recs), 1.0);
        assert_eq!(wasted_iterations(&recs), 0.0);
    }

    #[test]
    fn half_correct() {
        let mut flags = vec![true; 256];
        flags.extend(vec![false; 256]);
        assert_eq!(correct_probability(&[record(flags, 512)]), 0.5);
    }

    #[test]
    fn mixed_records_match_hand_sums() {
        let recs = vec![
            record(vec![true, true, false, true], 4),
            record(vec![true, false], 4),
            record(vec![false, false, false, false], 4),
        ];
        assert!((correct_probability(&recs) - (3.0 + 1.0 + 0.0) / 12.0).abs() < 1e-15);
        // stopped iterations are not wasted
        assert!((wasted_iterations(&recs) - (1.0 + 1.0 + 4.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn paired_reduction() {
        let full = vec![record(vec![true; 4], 4), record(vec![true, true, false, false], 4)];
        let cut = vec![record(vec![true; 2], 4), record(vec![true, true, false], 4)];
        let d = correct_probability_reduction(&full, &cut);
        assert!((d.mean - 0.25).abs() < 1e-15);
    }
}

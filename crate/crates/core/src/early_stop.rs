//! Early-stopping monitor for the incremental recovery.
//!
//! Each iteration's score vector is reduced to one statistic: how many standard
//! deviations the best score lies above the mean of all the other scores. While the
//! recovery is on track the correct candidate stands out and the statistic is large;
//! once it has lost track all scores look alike. The monitor stops the recovery when
//! the statistic stays below `A` for `B` consecutive iterations.

use crate::{Error, Result};

/// Stopping thresholds: stop after `b` consecutive iterations with statistic `< a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdPair {
    a: f64,
    b: usize,
}

impl ThresholdPair {
    pub fn new(a: f64, b: usize) -> Result<Self> {
        if a.is_nan() || a <= 0.0 {
            return Err(Error::InvalidInput(format!("threshold A must be positive, got {a}")));
        }
        if b == 0 {
            return Err(Error::InvalidInput("threshold B must be at least 1".into()));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }
}

/// Arithmetic performed by one evaluation of the statistic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCount {
    pub multiplications: usize,
    pub additions: usize,
    pub comparisons: usize,
}

/// Normalised gap `(l_max - mean) / std` between the best finite score and the other
/// finite scores. Non-finite entries are excluded candidates.
pub fn epsilon_statistic(scores: &[f64]) -> Result<f64> {
    epsilon_statistic_counted(scores).map(|(eps, _)| eps)
}

/// [`epsilon_statistic`] plus an exact count of the arithmetic it performed.
pub fn epsilon_statistic_counted(scores: &[f64]) -> Result<(f64, OpCount)> {
    let mut ops = OpCount::default();
    let mut best: Option<(usize, f64)> = None;
    let mut finite = 0usize;
    for (j, &l) in scores.iter().enumerate() {
        if !l.is_finite() {
            continue;
        }
        finite += 1;
        ops.comparisons += 1;
        if best.is_none_or(|(_, m)| l > m) {
            best = Some((j, l));
        }
    }
    if finite < 3 {
        return Err(Error::MonitorUnusable { found: finite });
    }
    let (j_max, l_max) = best.expect("at least one finite score");

    // accumulate relative to l_max; the statistic is shift invariant
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (j, &l) in scores.iter().enumerate() {
        if j == j_max || !l.is_finite() {
            continue;
        }
        let d = l - l_max;
        sum += d;
        sum_sq += d * d;
        ops.additions += 3;
        ops.multiplications += 1;
    }
    let n = (finite - 1) as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let std = var.sqrt();
    ops.multiplications += 3;
    ops.additions += 1;

    let gap = -mean;
    let abs_mean = (l_max + mean).abs();
    let eps = if std < 1e-12 * abs_mean.max(1.0) {
        if gap > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        gap / std
    };
    Ok((eps, ops))
}

/// Consecutive-threshold stopping rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Monitor {
    thresholds: ThresholdPair,
    consecutive: usize,
    observed: usize,
    history: Option<Vec<f64>>,
}

impl Monitor {
    pub fn new(thresholds: ThresholdPair) -> Self {
        Self {
            thresholds,
            consecutive: 0,
            observed: 0,
            history: None,
        }
    }

    /// Also keeps every observed statistic.
    pub fn with_history(thresholds: ThresholdPair) -> Self {
        Self {
            history: Some(Vec::new()),
            ..Self::new(thresholds)
        }
    }

    pub fn thresholds(&self) -> ThresholdPair {
        self.thresholds
    }

    pub fn consecutive(&self) -> usize {
        self.consecutive
    }

    pub fn observed(&self) -> usize {
        self.observed
    }

    pub fn history(&self) -> Option<&[f64]> {
        self.history.as_deref()
    }

    pub fn should_stop(&self) -> bool {
        self.consecutive >= self.thresholds.b
    }

    /// Records one iteration's statistic and returns whether to stop now.
    pub fn observe(&mut self, epsilon: f64) -> bool {
        if epsilon < self.thresholds.a {
            self.consecutive = (self.consecutive + 1).min(self.thresholds.b);
        } else {
            self.consecutive = 0;
        }
        self.observed += 1;
        if let Some(h) = &mut self.history {
            h.push(epsilon);
        }
        self.should_stop()
    }

    pub fn reset(&mut self) {
        self.consecutive = 0;
        self.observed = 0;
        if let Some(h) = &mut self.history {
            h.clear();
        }
    }
}

/// 1-based iteration at which a monitor with `thresholds` would stop when fed `trace`,
/// or `None` if it never fires.
pub fn replay_stop(thresholds: ThresholdPair, trace: &[f64]) -> Option<usize> {
    let mut monitor = Monitor::new(thresholds);
    trace
        .iter()
        .position(|&eps| monitor.observe(eps))
        .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_example() {
        let eps = epsilon_statistic(&[3.0, 1.0, -1.0, 1.0, -1.0]).unwrap();
        assert!((eps - 3.0).abs() < 1e-12);
    }

    #[test]
    fn excluded_entries_are_skipped() {
        let l = [f64::NEG_INFINITY, 3.0, 1.0, f64::NEG_INFINITY, -1.0, 1.0, -1.0];
        assert!((epsilon_statistic(&l).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(
            epsilon_statistic(&[1.0, f64::NEG_INFINITY, 2.0]),
            Err(Error::MonitorUnusable { found: 2 })
        );
    }

    #[test]
    fn degenerate_spread() {
        assert_eq!(epsilon_statistic(&[2.0, 1.0, 1.0, 1.0]).unwrap(), f64::INFINITY);
        assert_eq!(epsilon_statistic(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn ties_pick_lowest_index() {
        // with two equal maxima the second one stays in the reference set
        let eps = epsilon_statistic(&[5.0, 5.0, 3.0, 3.0]).unwrap();
        let rest = [5.0f64, 3.0, 3.0];
        let m = rest.iter().sum::<f64>() / 3.0;
        let s = (rest.iter().map(|v| v * v).sum::<f64>() / 3.0 - m * m).sqrt();
        assert!((eps - (5.0 - m) / s).abs() < 1e-12);
    }

    #[test]
    fn thresholds_validated() {
        assert!(ThresholdPair::new(0.0, 5).is_err());
        assert!(ThresholdPair::new(-1.0, 5).is_err());
        assert!(ThresholdPair::new(f64::NAN, 5).is_err());
        assert!(ThresholdPair::new(3.48, 0).is_err());
        assert!(ThresholdPair::new(3.48, 5).is_ok());
    }

    #[test]
    fn single_iteration_rule() {
        let a = 3.48;
        let mut m = Monitor::new(ThresholdPair::new(a, 1).unwrap());
        assert!(m.observe(a - 0.1));
    }

    #[test]
    fn counter_resets_on_large_values() {
        let a = 2.0;
        let mut m = Monitor::with_history(ThresholdPair::new(a, 3).unwrap());
        let seq = [a - 1.0, a - 1.0, a + 1.0, a - 1.0, a - 1.0, a - 1.0];
        let stops: Vec<bool> = seq.iter().map(|&e| m.observe(e)).collect();
        assert_eq!(stops, vec![false, false, false, false, false, true]);
        assert_eq!(m.history().unwrap(), &seq);
        assert_eq!(replay_stop(m.thresholds(), &seq), Some(6));
    }

    #[test]
    fn boundary_value_resets() {
        let mut m = Monitor::new(ThresholdPair::new(2.0, 2).unwrap());
        m.observe(1.0);
        assert_eq!(m.consecutive(), 1);
        assert!(!m.observe(2.0));
        assert_eq!(m.consecutive(), 0);
    }

    #[test]
    fn operation_count_is_linear() {
        let counts: Vec<OpCount> = [256usize, 512, 1024, 2048]
            .iter()
            .map(|&k| {
                let l: Vec<f64> = (0..k).map(|j| ((j * 7919) % 113) as f64).collect();
                epsilon_statistic_counted(&l).unwrap().1
            })
            .collect();
        // one multiply and three additions per non-maximal entry, plus a constant
        for (c, k) in counts.iter().zip([256usize, 512, 1024, 2048]) {
            assert_eq!(c.multiplications, (k - 1) + 3);
            assert_eq!(c.additions, 3 * (k - 1) + 1);
            assert_eq!(c.comparisons, k);
        }
    }

    proptest! {
        #[test]
        fn affine_invariance(
            l in proptest::collection::vec(-50.0f64..50.0, 3..200),
            scale in 0.01f64..100.0,
            shift in -1e4f64..1e4,
        ) {
            let e1 = epsilon_statistic(&l).unwrap();
            let mapped: Vec<f64> = l.iter().map(|v| scale * v + shift).collect();
            let e2 = epsilon_statistic(&mapped).unwrap();
            if e1.is_finite() && e1 > 1e-6 {
                prop_assert!((e1 - e2).abs() <= 1e-6 * e1.abs().max(1.0), "{} vs {}", e1, e2);
            }
        }

        #[test]
        fn stop_depends_only_on_last_b_values(
            prefix in proptest::collection::vec(0.0f64..6.0, 0..30),
            suffix in proptest::collection::vec(0.0f64..6.0, 5..6),
        ) {
            let t = ThresholdPair::new(3.0, 5).unwrap();
            let mut a = Monitor::new(t);
            let mut b = Monitor::new(t);
            for &e in &prefix { a.observe(e); }
            let mut last_a = false;
            let mut last_b = false;
            for &e in &suffix { last_a = a.observe(e); last_b = b.observe(e); }
            prop_assert_eq!(last_a, last_b);
            prop_assert_eq!(last_a, suffix.iter().all(|&e| e < 3.0));
        }
    }
}

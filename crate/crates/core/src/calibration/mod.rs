//! Threshold calibration for the early-stopping monitor.
//!
//! Two closed-form models are evaluated in the standardised score domain:
//!
//! * **Failed state.** All `K` scores are i.i.d., so one iteration has statistic below
//!   `A` with probability `p0 = (1 - Q(A))^K`. The stop time is the first run of `B`
//!   such iterations, and `E(W)` is its mean truncated to `K` iterations.
//! * **Correct state.** The correct candidate's score is separated from the others by
//!   `T` standard deviations. A parameter is recovered correctly with probability
//!   `p1(T, K)`, and a correct iteration falls below `A` with probability
//!   `p2 = Q(T - A)`. `E(L)` is the expected number of correct parameters lost by
//!   stopping before the (geometric) failure onset; its worst case over `T` is
//!   `E_max(L)`.
//!
//! Thresholds are chosen so that both `E(W)` and `E_max(L)` are small. They depend
//! on `K` only.

mod quadrature;

pub use quadrature::integrate;

use statrs::function::erf::erfc;

use crate::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Search bracket for `T` and its grid step.
const T_GRID_MAX: f64 = 12.0;
const T_GRID_STEP: f64 = 0.05;
const T_REFINE_TOL: f64 = 1e-3;

/// Bracket for `A` when solving for thresholds.
const A_MIN: f64 = 1.0;
const A_MAX: f64 = 8.0;
const A_SCAN_STEP: f64 = 0.01;

/// Largest `B` considered by [`feasibility_region`].
pub const MAX_RUN_LENGTH: usize = 20;

/// Upper tail of the standard normal distribution.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `ln(1 - Q(x))`, accurate in both tails.
fn ln_one_minus_q(x: f64) -> f64 {
    if x > 0.0 {
        (-q_function(x)).ln_1p()
    } else {
        q_function(-x).ln()
    }
}

fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Probability that a failed-state iteration has statistic below `a`: `(1 - Q(a))^k`.
pub fn p0(a: f64, k: usize) -> f64 {
    (k as f64 * ln_one_minus_q(a)).exp()
}

/// Probability that the correct candidate beats `k - 1` impostors when separated by
/// `t` standard deviations.
pub fn p1(t: f64, k: usize) -> f64 {
    let others = (k - 1) as f64;
    let integrand = |x: f64| (others * ln_one_minus_q(x + t)).exp() * std_normal_pdf(x);
    integrate(integrand, -10.0, 10.0, 1e-10).clamp(0.0, 1.0)
}

/// Probability that a correctly recovered iteration still has statistic below `a`.
pub fn p2(a: f64, t: f64) -> f64 {
    q_function(t - a)
}

/// First-passage law of a run of `B` successes in i.i.d. Bernoulli trials, truncated
/// to `horizon` trials.
#[derive(Clone, Debug, PartialEq)]
pub struct StopTimeDistribution {
    /// `probs[k - 1]` is the probability of stopping at trial `k`.
    probs: Vec<f64>,
    p: f64,
    run_length: usize,
}

impl StopTimeDistribution {
    pub fn horizon(&self) -> usize {
        self.probs.len()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn run_length(&self) -> usize {
        self.run_length
    }

    /// Probability of stopping at trial `k` (1-based); zero outside `1..=horizon`.
    pub fn prob(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.probs.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of stopping within the horizon.
    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `sum_k k P(k)` over the horizon.
    pub fn truncated_mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (i + 1) as f64 * p)
            .sum()
    }
}

/// `P(k) = 0` for `k < B`, `P(B) = p^B` and
/// `P(k) = p^B (1 - p) (1 - sum_{i=1}^{k-B-1} P(i))` for `B < k <= horizon`.
pub fn stop_time_distribution(p: f64, run_length: usize, horizon: usize) -> Result<StopTimeDistribution> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if run_length == 0 {
        return Err(Error::InvalidInput("run length must be at least 1".into()));
    }
    let head = p.powi(run_length as i32);
    let tail = head * (1.0 - p);
    let mut probs = vec![0.0; horizon];
    // cumulative[n] = sum_{i=1}^{n} P(i)
    let mut cumulative = vec![0.0; horizon + 1];
    for k in 1..=horizon {
        let value = if k < run_length {
            0.0
        } else if k == run_length {
            head
        } else {
            tail * (1.0 - cumulative[k - run_length - 1])
        };
        probs[k - 1] = value;
        cumulative[k] = cumulative[k - 1] + value;
    }
    Ok(StopTimeDistribution {
        probs,
        p,
        run_length,
    })
}

/// Expected number of wasted iterations after failure, `sum_{k=1}^{K} k P0(k)`.
pub fn expected_wasted(a: f64, b: usize, k: usize) -> f64 {
    stop_time_distribution(p0(a, k), b, k)
        .expect("p0 is a probability")
        .truncated_mean()
}

/// `P1(k) = p1^k (1 - p1)` for `k < K` and `P1(K) = p1^K`; `result[k - 1]` holds `P1(k)`.
///
/// The event "first parameter already wrong" (`k = 0`, mass `1 - p1`) is not listed;
/// it contributes no loss.
pub fn failure_onset_distribution(p1: f64, k: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::InvalidProbability(p1));
    }
    let mut out = Vec::with_capacity(k);
    let mut power = 1.0;
    for i in 1..=k {
        power *= p1;
        out.push(if i < k { power * (1.0 - p1) } else { power });
    }
    Ok(out)
}

/// `E(L)` for given per-iteration probabilities `p1` (correct recovery) and `p2`
/// (statistic below `A` while correct).
pub fn expected_loss_from(p1: f64, p2: f64, b: usize, k: usize) -> f64 {
    let onset = failure_onset_distribution(p1, k).expect("p1 is a probability");
    let stops = stop_time_distribution(p2, b, k).expect("p2 is a probability");
    // inner(k) = sum_{i=1}^{k-1} (k - i) P2(i) obeys inner(k+1) = inner(k) + sum_{i<=k} P2(i)
    let mut inner = 0.0;
    let mut cumulative = 0.0;
    let mut total = 0.0;
    for (idx, &onset_prob) in onset.iter().enumerate() {
        total += onset_prob * inner;
        cumulative += stops.probs[idx];
        inner += cumulative;
    }
    total
}

/// `E(L)` at separation `t`.
pub fn expected_loss(a: f64, b: usize, k: usize, t: f64) -> f64 {
    expected_loss_from(p1(t, k), p2(a, t), b, k)
}

/// Worst-case loss over the separation `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorstCaseLoss {
    pub e_max: f64,
    pub t_star: f64,
}

/// `E_max(L)` evaluator for one interleaver length. Caches `p1` on the `T` grid, which
/// does not depend on the thresholds.
#[derive(Clone, Debug)]
pub struct LossModel {
    k: usize,
    grid: Vec<(f64, f64)>,
}

impl LossModel {
    pub fn new(k: usize) -> Self {
        let steps = (T_GRID_MAX / T_GRID_STEP).round() as usize;
        Self::with_grid(k, steps)
    }

    fn with_grid(k: usize, steps: usize) -> Self {
        let grid = (0..=steps)
            .map(|i| {
                let t = i as f64 * T_GRID_STEP;
                (t, p1(t, k))
            })
            .collect();
        Self { k, grid }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Grid search over `T` followed by golden-section refinement around the best
    /// grid point. The grid is extended if the maximum sits on its upper edge.
    pub fn max_expected_loss(&self, a: f64, b: usize) -> WorstCaseLoss {
        let values: Vec<f64> = self
            .grid
            .iter()
            .map(|&(t, p1)| expected_loss_from(p1, p2(a, t), b, self.k))
            .collect();
        let (best, _) = values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if best + 1 == self.grid.len() {
            let wider = Self::with_grid(self.k, 2 * (self.grid.len() - 1));
            return wider.max_expected_loss(a, b);
        }
        if values[best] <= 0.0 {
            return WorstCaseLoss {
                e_max: 0.0,
                t_star: self.grid[best].0,
            };
        }
        let lo = (self.grid[best].0 - T_GRID_STEP).max(0.0);
        let hi = self.grid[best].0 + T_GRID_STEP;
        let f = |t: f64| expected_loss(a, b, self.k, t);
        let (t_star, e_refined) = golden_section_max(f, lo, hi, T_REFINE_TOL);
        if e_refined >= values[best] {
            WorstCaseLoss {
                e_max: e_refined,
                t_star,
            }
        } else {
            WorstCaseLoss {
                e_max: values[best],
                t_star: self.grid[best].0,
            }
        }
    }
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `(E_max(L), T*)` for thresholds `(a, b)` at interleaver length `k`.
pub fn max_expected_loss(a: f64, b: usize, k: usize) -> WorstCaseLoss {
    LossModel::new(k).max_expected_loss(a, b)
}

/// Location and height of the maximum of `E(W)` over `A` on the search bracket.
///
/// Below the peak the truncated mean collapses towards zero because the modelled
/// stop almost never happens within `K` iterations; thresholds are only meaningful on
/// the decreasing branch to the right of the peak.
pub fn wasted_peak(b: usize, k: usize) -> (f64, f64) {
    let steps = ((A_MAX - A_MIN) / A_SCAN_STEP).round() as usize;
    let (mut best_a, mut best) = (A_MIN, f64::NEG_INFINITY);
    for i in 0..=steps {
        let a = A_MIN + i as f64 * A_SCAN_STEP;
        let w = expected_wasted(a, b, k);
        if w > best {
            best = w;
            best_a = a;
        }
    }
    (best_a, best)
}

/// Solves `E(W)(A) = target` for `A` on the decreasing branch of `E(W)`.
pub fn solve_threshold_a(k: usize, b: usize, target_ew: f64) -> Result<f64> {
    if target_ew.is_nan() || target_ew <= b as f64 {
        return Err(Error::InfeasibleTarget(format!(
            "E(W) is at least B = {b}; target {target_ew} cannot be met"
        )));
    }
    let (peak_a, peak) = wasted_peak(b, k);
    let floor = expected_wasted(A_MAX, b, k);
    if target_ew >= peak || target_ew <= floor {
        return Err(Error::InfeasibleTarget(format!(
            "target E(W) = {target_ew} outside the attainable range ({floor:.4}, {peak:.4}) for K = {k}, B = {b}"
        )));
    }
    Ok(bisect_decreasing(
        |a| expected_wasted(a, b, k) - target_ew,
        peak_a,
        A_MAX,
        1e-7,
    ))
}

/// Root of a function that is positive at `lo` and negative at `hi`.
fn bisect_decreasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Interval of `A` that satisfies both constraints for one `B`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibleBand {
    pub b: usize,
    pub a_min: f64,
    pub a_max: f64,
}

impl FeasibleBand {
    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.a_min <= hi && lo <= self.a_max
    }
}

/// For `B = 1..=20`, the range of `A` (on the decreasing branch of `E(W)`) with
/// `E(W) < max_ew` and `E_max(L) < max_emax_l`. Infeasible `B` are omitted; an empty
/// result means the constraints admit no thresholds.
pub fn feasibility_region(k: usize, max_ew: f64, max_emax_l: f64) -> Vec<FeasibleBand> {
    let model = LossModel::new(k);
    feasibility_region_with(&model, max_ew, max_emax_l)
}

pub fn feasibility_region_with(model: &LossModel, max_ew: f64, max_emax_l: f64) -> Vec<FeasibleBand> {
    let k = model.k();
    (1..=MAX_RUN_LENGTH)
        .filter_map(|b| {
            if max_ew <= b as f64 {
                return None;
            }
            let (peak_a, peak) = wasted_peak(b, k);
            if expected_wasted(A_MAX, b, k) >= max_ew {
                return None;
            }
            let a_min = if peak < max_ew {
                peak_a
            } else {
                bisect_decreasing(|a| expected_wasted(a, b, k) - max_ew, peak_a, A_MAX, 1e-5)
            };
            let loss = |a: f64| model.max_expected_loss(a, b).e_max;
            if loss(a_min) >= max_emax_l {
                return None;
            }
            let a_max = if loss(A_MAX) < max_emax_l {
                A_MAX
            } else {
                // E_max(L) grows with A
                bisect_decreasing(|a| max_emax_l - loss(a), a_min, A_MAX, 1e-4)
            };
            Some(FeasibleBand { b, a_min, a_max })
        })
        .collect()
}

/// One calibrated threshold set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationRow {
    pub k: usize,
    pub a: f64,
    pub b: usize,
    pub e_w: f64,
    pub e_max_l: f64,
    pub t_star: f64,
}

/// Evaluates both models at fixed thresholds.
pub fn evaluate(k: usize, a: f64, b: usize) -> CalibrationRow {
    let loss = max_expected_loss(a, b, k);
    CalibrationRow {
        k,
        a,
        b,
        e_w: expected_wasted(a, b, k),
        e_max_l: loss.e_max,
        t_star: loss.t_star,
    }
}

/// Solves `A` for the target `E(W)` and evaluates the resulting thresholds.
pub fn calibrate(k: usize, b: usize, target_ew: f64) -> Result<CalibrationRow> {
    let a = solve_threshold_a(k, b, target_ew)?;
    Ok(evaluate(k, a, b))
}

/// Rows of `E(W)` and `E_max(L)` over a grid of `A` for each `B`.
pub fn threshold_surface(k: usize, bs: &[usize], a_values: &[f64]) -> Vec<CalibrationRow> {
    let model = LossModel::new(k);
    bs.iter()
        .flat_map(|&b| {
            let model = &model;
            a_values.iter().map(move |&a| {
                let loss = model.max_expected_loss(a, b);
                CalibrationRow {
                    k,
                    a,
                    b,
                    e_w: expected_wasted(a, b, k),
                    e_max_l: loss.e_max,
                    t_star: loss.t_star,
                }
            })
        })
        .collect()
}

/// Interleaver lengths of the stored threshold table.
pub const TABLE_LENGTHS: [usize; 6] = [512, 1024, 2048, 4096, 8192, 16384];
/// `B` used by the stored table.
pub const TABLE_RUN_LENGTH: usize = 5;
/// `E(W)` target used by the stored table.
pub const TABLE_TARGET_EW: f64 = 7.5;

/// Thresholds for `B = 5`, `E(W) = 7.5`, as `(K, A, 100 E_max(L))`. Regenerate with
/// `pirec calibrate --table`.
pub const STORED_THRESHOLDS: [(usize, f64, f64); 6] = [
    (512, 3.48, 1.80),
    (1024, 3.66, 1.65),
    (2048, 3.83, 1.53),
    (4096, 4.00, 1.43),
    (8192, 4.16, 1.34),
    (16384, 4.32, 1.27),
];

/// Stored `A` for `k`, if tabulated.
pub fn stored_threshold(k: usize) -> Option<f64> {
    STORED_THRESHOLDS
        .iter()
        .find(|&&(len, _, _)| len == k)
        .map(|&(_, a, _)| a)
}

/// Computes the stored table from scratch.
pub fn threshold_table() -> Result<Vec<CalibrationRow>> {
    TABLE_LENGTHS
        .iter()
        .map(|&k| calibrate(k, TABLE_RUN_LENGTH, TABLE_TARGET_EW))
        .collect()
}

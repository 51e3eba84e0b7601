//! Incremental maximum-posterior interleaver recovery.
//!
//! Iteration `i` (0-based here) assumes `pi(0..i)` has been committed. For every
//! received block the forward belief over the second encoder's states after `i` steps
//! is known, so the log-probability that the next interleaved bit comes from
//! position `j` is
//!
//! ```text
//! log q[s][j] = logsumexp over (a, alpha) of
//!                   log Pr(x[s][j] | a) + log Pr(z[s][i] | b(a, alpha)) + log h[s](alpha)
//!               - log Pr(x[s][j])
//! l[j]        = sum over s of log q[s][j]
//! ```
//!
//! and the candidate with the largest `l[j]` is committed. Normalising constants of
//! `q` and `l` are dropped: they are the same for every `j`, and neither the argmax nor
//! the early-stopping statistic depends on them.
//!
//! The inner sum over `alpha` does not depend on `j`, so each iteration first reduces
//! every block to two numbers `g[s][a]` and then scores all candidates in `O(M K)`.

use crate::early_stop::{epsilon_statistic, Monitor};
use crate::logmath::{log_add, log_sum_exp};
use crate::{ChannelModel, Error, ReceivedBlock, Result, StateBelief, Trellis};

/// Which positions may be proposed at each iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CandidatePolicy {
    /// Every position `0..K`, including ones already committed.
    #[default]
    AllPositions,
    /// Only positions not yet committed.
    UnusedOnly,
}

impl std::str::FromStr for CandidatePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" | "all-positions" => Ok(Self::AllPositions),
            "unused" | "unused-only" => Ok(Self::UnusedOnly),
            other => Err(Error::InvalidInput(format!(
                "unknown candidate policy {other:?} (expected all-positions or unused-only)"
            ))),
        }
    }
}

impl std::fmt::Display for CandidatePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AllPositions => "all-positions",
            Self::UnusedOnly => "unused-only",
        })
    }
}

/// Log-scores of all candidate positions for one iteration. Excluded candidates hold
/// `-inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    /// 0-based iteration these scores belong to.
    pub iteration: usize,
}

impl ScoreVector {
    pub fn finite_count(&self) -> usize {
        self.scores.iter().filter(|v| v.is_finite()).count()
    }
}

/// Returns the lowest index attaining the maximum finite score, and that score.
pub fn select_parameter(scores: &ScoreVector) -> Result<(usize, f64)> {
    if scores.finite_count() < 2 {
        return Err(Error::SessionExhausted {
            iteration: scores.iteration,
        });
    }
    Ok(argmax_finite(&scores.scores).expect("finite entries present"))
}

fn argmax_finite(scores: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &l) in scores.iter().enumerate() {
        if l.is_finite() && best.is_none_or(|(_, m)| l > m) {
            best = Some((j, l));
        }
    }
    best
}

/// State of one recovery run over `M` received blocks.
#[derive(Clone, Debug)]
pub struct RecoverySession {
    trellis: Trellis,
    channel: ChannelModel,
    blocks: Vec<ReceivedBlock>,
    beliefs: Vec<StateBelief>,
    recovered: Vec<usize>,
    used: Vec<bool>,
    policy: CandidatePolicy,
    /// `log Pr(x[s][j] | a) - log Pr(x[s][j])`, stored at `[j * M + s]`.
    post0: Vec<f64>,
    post1: Vec<f64>,
    /// `exp(post0)` and `exp(post1)`, same layout.
    ratio0: Vec<f64>,
    ratio1: Vec<f64>,
}

impl RecoverySession {
    pub fn new(
        trellis: Trellis,
        channel: ChannelModel,
        blocks: Vec<ReceivedBlock>,
        policy: CandidatePolicy,
    ) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidInput("at least one received block is required".into()))?;
        let k = first.len();
        if k < 2 {
            return Err(Error::InvalidInput(format!(
                "interleaver length must be at least 2, got {k}"
            )));
        }
        for b in &blocks {
            if b.len() != k || b.y.len() != k || b.z.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    found: b.len().min(b.z.len()),
                });
            }
        }
        let m = blocks.len();
        let mut post0 = vec![0.0; k * m];
        let mut post1 = vec![0.0; k * m];
        for (s, block) in blocks.iter().enumerate() {
            for (j, &x) in block.x.iter().enumerate() {
                let (l0, l1) = channel.bit_log_likelihoods(x);
                let marginal = channel.marginal_log_likelihood(x);
                post0[j * m + s] = l0 - marginal;
                post1[j * m + s] = l1 - marginal;
            }
        }
        let ratio0 = post0.iter().map(|v| v.exp()).collect();
        let ratio1 = post1.iter().map(|v| v.exp()).collect();
        let beliefs = vec![StateBelief::initial(trellis.num_states()); m];
        Ok(Self {
            trellis,
            channel,
            blocks,
            beliefs,
            recovered: Vec::with_capacity(k),
            used: vec![false; k],
            policy,
            post0,
            post1,
            ratio0,
            ratio1,
        })
    }

    /// Interleaver length `K`.
    pub fn len(&self) -> usize {
        self.used.len()
    }

    pub fn is_empty(&self) -> bool {
        self.used.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// 0-based index of the next parameter to recover.
    pub fn iteration(&self) -> usize {
        self.recovered.len()
    }

    pub fn is_complete(&self) -> bool {
        self.recovered.len() == self.len()
    }

    pub fn recovered(&self) -> &[usize] {
        &self.recovered
    }

    pub fn beliefs(&self) -> &[StateBelief] {
        &self.beliefs
    }

    pub fn blocks(&self) -> &[ReceivedBlock] {
        &self.blocks
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn policy(&self) -> CandidatePolicy {
        self.policy
    }

    fn is_candidate(&self, j: usize) -> bool {
        j < self.len() && (self.policy == CandidatePolicy::AllPositions || !self.used[j])
    }

    /// Scores every candidate position for the current iteration.
    pub fn score_candidates(&self) -> Result<ScoreVector> {
        let i = self.iteration();
        if self.is_complete() {
            return Err(Error::SessionExhausted { iteration: i });
        }
        let parity: Vec<(f64, f64)> = self
            .blocks
            .iter()
            .map(|b| self.channel.bit_log_likelihoods(b.z[i]))
            .collect();
        Ok(self.score_with_parity_likelihoods(&parity))
    }

    /// Scores with caller-supplied `(log Pr(z | 0), log Pr(z | 1))` per block for the
    /// current iteration's parity sample.
    pub fn score_with_parity_likelihoods(&self, parity: &[(f64, f64)]) -> ScoreVector {
        assert_eq!(parity.len(), self.blocks.len(), "one likelihood pair per block");
        let i = self.iteration();
        let m = self.blocks.len();
        let n = self.trellis.num_states();
        let mut g0 = Vec::with_capacity(m);
        let mut g1 = Vec::with_capacity(m);
        let mut terms0 = vec![0.0; n];
        let mut terms1 = vec![0.0; n];
        for (&(z0, z1), belief) in parity.iter().zip(&self.beliefs) {
            let log_h = belief.log_probs();
            for alpha in 0..n {
                let zb = |a| if self.trellis.output(alpha, a) == 0 { z0 } else { z1 };
                terms0[alpha] = log_h[alpha] + zb(0);
                terms1[alpha] = log_h[alpha] + zb(1);
            }
            g0.push(log_sum_exp(&terms0));
            g1.push(log_sum_exp(&terms1));
        }
        // Per block, log_add(post0 + g0, post1 + g1) = c + ln(r0 e0 + r1 e1) with
        // c = max(g0, g1) and e_a = exp(g_a - c) <= 1. The linear factors are
        // multiplied and their product is taken to the log domain only when it
        // approaches the floating point range, which replaces one logarithm per
        // (block, candidate) pair by one multiply-add. Factors too small for the
        // linear form are evaluated in the log domain.
        const TINY: f64 = 1e-280;
        const LOW: f64 = 1e-250;
        const HIGH: f64 = 1e250;
        let c: Vec<f64> = g0.iter().zip(&g1).map(|(a, b)| a.max(*b)).collect();
        let e0: Vec<f64> = g0.iter().zip(&c).map(|(g, c)| (g - c).exp()).collect();
        let e1: Vec<f64> = g1.iter().zip(&c).map(|(g, c)| (g - c).exp()).collect();
        let offset: f64 = c.iter().sum();
        let scores = (0..self.len())
            .map(|j| {
                if !self.is_candidate(j) {
                    return f64::NEG_INFINITY;
                }
                let range = j * m..(j + 1) * m;
                let r0 = &self.ratio0[range.clone()];
                let r1 = &self.ratio1[range.clone()];
                let mut l = offset;
                let mut prod = 1.0;
                for s in 0..m {
                    let f = r0[s] * e0[s] + r1[s] * e1[s];
                    if f < TINY {
                        let (p0, p1) = (self.post0[j * m + s], self.post1[j * m + s]);
                        l += log_add(p0 + g0[s], p1 + g1[s]) - c[s];
                        continue;
                    }
                    prod *= f;
                    if !(LOW..=HIGH).contains(&prod) {
                        l += prod.ln();
                        prod = 1.0;
                    }
                }
                l + prod.ln()
            })
            .collect();
        ScoreVector { scores, iteration: i }
    }

    /// Commits `j_hat` for the current iteration and moves every block belief one
    /// trellis step forward.
    pub fn advance(&mut self, j_hat: usize) -> Result<()> {
        let i = self.iteration();
        if self.is_complete() {
            return Err(Error::SessionExhausted { iteration: i });
        }
        if !self.is_candidate(j_hat) {
            return Err(Error::InvalidInput(format!(
                "position {j_hat} is not a candidate at iteration {i}"
            )));
        }
        for (block, belief) in self.blocks.iter().zip(self.beliefs.iter_mut()) {
            *belief = belief.step_with_likelihoods(
                &self.trellis,
                self.channel.bit_log_likelihoods(block.x[j_hat]),
                self.channel.bit_log_likelihoods(block.z[i]),
            );
        }
        self.recovered.push(j_hat);
        self.used[j_hat] = true;
        Ok(())
    }
}

/// One iteration of a recovery run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub j_hat: usize,
    pub l_max: f64,
    /// Early-stopping statistic; `None` when fewer than three candidates were scored.
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryOutcome {
    /// Committed positions, 0-based; shorter than `K` when stopped early.
    pub pi_hat: Vec<usize>,
    pub stopped_early: bool,
    pub trace: Vec<IterationRecord>,
}

impl RecoveryOutcome {
    /// Number of iterations carried out.
    pub fn stop_iteration(&self) -> usize {
        self.pi_hat.len()
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.trace
            .iter()
            .map(|r| r.epsilon.unwrap_or(f64::NAN))
            .collect()
    }
}

/// Runs score, select, monitor and advance until all `K` parameters are committed or
/// the monitor fires. The iteration at which the monitor fires is still committed.
///
/// Iterations with fewer than three candidates (only possible with
/// [`CandidatePolicy::UnusedOnly`] near the end) are not shown to the monitor, and a
/// single remaining candidate is committed without a search.
pub fn run_session(
    mut session: RecoverySession,
    mut monitor: Option<&mut Monitor>,
) -> Result<RecoveryOutcome> {
    let mut trace = Vec::with_capacity(session.len());
    let mut stopped_early = false;
    while !session.is_complete() {
        let scores = session.score_candidates()?;
        let finite = scores.finite_count();
        let (j_hat, l_max) = if finite == 1 {
            argmax_finite(&scores.scores).expect("one finite score")
        } else {
            select_parameter(&scores)?
        };
        let epsilon = if finite >= 3 {
            Some(epsilon_statistic(&scores.scores)?)
        } else {
            None
        };
        session.advance(j_hat)?;
        trace.push(IterationRecord {
            j_hat,
            l_max,
            epsilon,
        });
        if let (Some(m), Some(eps)) = (monitor.as_deref_mut(), epsilon) {
            if m.observe(eps) && !session.is_complete() {
                stopped_early = true;
                break;
            }
        }
    }
    Ok(RecoveryOutcome {
        pi_hat: session.recovered,
        stopped_early,
        trace,
    })
}

/// Builds a session over `blocks` and runs it to completion or until `monitor` stops it.
pub fn run_recovery(
    trellis: &Trellis,
    channel: ChannelModel,
    blocks: Vec<ReceivedBlock>,
    policy: CandidatePolicy,
    monitor: Option<&mut Monitor>,
) -> Result<RecoveryOutcome> {
    run_session(
        RecoverySession::new(trellis.clone(), channel, blocks, policy)?,
        monitor,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{simulate_blocks, substream};
    use crate::{GeneratorSpec, Interleaver, ThresholdPair};

    fn sv(scores: Vec<f64>) -> ScoreVector {
        ScoreVector { scores, iteration: 0 }
    }

    #[test]
    fn select_examples() {
        assert_eq!(select_parameter(&sv(vec![0.0, 5.0, 3.0])).unwrap(), (1, 5.0));
        assert_eq!(select_parameter(&sv(vec![5.0, 5.0, 3.0])).unwrap(), (0, 5.0));
        assert_eq!(select_parameter(&sv(vec![10.0, 15.0, 13.0])).unwrap().0, 1);
        assert!(matches!(
            select_parameter(&sv(vec![f64::NEG_INFINITY, 2.0])),
            Err(Error::SessionExhausted { .. })
        ));
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("all-positions".parse::<CandidatePolicy>().unwrap(), CandidatePolicy::AllPositions);
        assert_eq!("unused-only".parse::<CandidatePolicy>().unwrap(), CandidatePolicy::UnusedOnly);
        assert!("bogus".parse::<CandidatePolicy>().is_err());
    }

    fn small_session(policy: CandidatePolicy, sigma: f64) -> (RecoverySession, Interleaver) {
        let t = Trellis::new(GeneratorSpec::new(5, 7, 2).unwrap());
        let pi = Interleaver::random(16, &mut substream(3, 0, 0));
        let ch = ChannelModel::from_noise_std(sigma).unwrap();
        let blocks = simulate_blocks(&t, &pi, &ch, 24, 3, 0);
        (RecoverySession::new(t, ch, blocks, policy).unwrap(), pi)
    }

    #[test]
    fn advance_is_deterministic_and_steps_beliefs() {
        let (mut s, _) = small_session(CandidatePolicy::AllPositions, 0.5);
        let mut twin = s.clone();
        s.advance(3).unwrap();
        twin.advance(3).unwrap();
        assert!(s.beliefs().iter().all(|b| b.step_index() == 1));
        assert_eq!(s.beliefs(), twin.beliefs());
        assert_eq!(s.recovered(), &[3]);
        assert!(s.advance(99).is_err());
    }

    #[test]
    fn unused_policy_excludes_committed_positions() {
        let (mut s, _) = small_session(CandidatePolicy::UnusedOnly, 0.5);
        s.advance(4).unwrap();
        let scores = s.score_candidates().unwrap();
        assert_eq!(scores.scores[4], f64::NEG_INFINITY);
        assert_eq!(scores.finite_count(), 15);
        assert!(s.advance(4).is_err());

        let (s, _) = small_session(CandidatePolicy::UnusedOnly, 0.5);
        let out = run_session(s, None).unwrap();
        let mut sorted = out.pi_hat.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..16).collect::<Vec<_>>());
        assert_eq!(out.trace.last().unwrap().epsilon, None);
    }

    #[test]
    fn zero_blocks_or_short_blocks_rejected() {
        let t = Trellis::new(GeneratorSpec::new(5, 7, 2).unwrap());
        let ch = ChannelModel::from_noise_std(0.5).unwrap();
        assert!(RecoverySession::new(t.clone(), ch, vec![], CandidatePolicy::AllPositions).is_err());
        let b1 = ReceivedBlock::new(0, vec![0.0; 4], vec![0.0; 4], vec![0.0; 4]).unwrap();
        let b2 = ReceivedBlock::new(1, vec![0.0; 5], vec![0.0; 5], vec![0.0; 5]).unwrap();
        assert!(RecoverySession::new(t, ch, vec![b1, b2], CandidatePolicy::AllPositions).is_err());
    }

    #[test]
    fn full_run_without_monitor_commits_everything() {
        let (s, pi) = small_session(CandidatePolicy::AllPositions, 0.05);
        let out = run_session(s, None).unwrap();
        assert!(!out.stopped_early);
        assert_eq!(out.pi_hat, pi.as_slice());
        assert_eq!(out.stop_iteration(), 16);
    }

    #[test]
    fn monitor_that_always_fires_stops_after_b() {
        let (s, _) = small_session(CandidatePolicy::AllPositions, 0.5);
        let mut m = Monitor::new(ThresholdPair::new(1e9, 3).unwrap());
        let out = run_session(s, Some(&mut m)).unwrap();
        assert!(out.stopped_early);
        assert_eq!(out.stop_iteration(), 3);
        assert_eq!(out.trace.len(), 3);
    }

    #[test]
    fn exhausted_session_errors() {
        let (mut s, pi) = small_session(CandidatePolicy::AllPositions, 0.5);
        for i in 0..16 {
            s.advance(pi.get(i)).unwrap();
        }
        assert!(s.is_complete());
        assert!(matches!(s.score_candidates(), Err(Error::SessionExhausted { .. })));
    }
}

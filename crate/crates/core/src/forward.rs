//! Log-domain forward recursion over the states of the second constituent encoder.

use crate::logmath::{log_sum_exp, LOG_ZERO};
use crate::{ChannelModel, Trellis};

/// Normalised log-probability distribution over encoder states after `step_index`
/// committed trellis steps.
#[derive(Clone, Debug, PartialEq)]
pub struct StateBelief {
    log_h: Vec<f64>,
    step_index: usize,
}

impl StateBelief {
    /// Point mass on state 0 at step 0. Impossible states hold [`LOG_ZERO`].
    pub fn initial(num_states: usize) -> Self {
        assert!(num_states >= 2, "a trellis has at least two states");
        let mut log_h = vec![LOG_ZERO; num_states];
        log_h[0] = 0.0;
        Self {
            log_h,
            step_index: 0,
        }
    }

    pub fn uniform(num_states: usize) -> Self {
        Self {
            log_h: vec![-(num_states as f64).ln(); num_states],
            step_index: 0,
        }
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_h
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn num_states(&self) -> usize {
        self.log_h.len()
    }

    /// `log(sum(h))`; 0 for a normalised belief.
    pub fn log_mass(&self) -> f64 {
        log_sum_exp(&self.log_h)
    }

    /// One trellis step using the likelihood pairs of the committed systematic sample
    /// and the current second-parity sample. Likelihoods are
    /// `(log Pr(. | bit 0), log Pr(. | bit 1))`.
    pub fn step_with_likelihoods(
        &self,
        trellis: &Trellis,
        x_ll: (f64, f64),
        z_ll: (f64, f64),
    ) -> Self {
        let pick = |ll: (f64, f64), bit: u8| if bit == 0 { ll.0 } else { ll.1 };
        let mut log_h: Vec<f64> = (0..self.log_h.len())
            .map(|to| {
                let [t0, t1] = trellis.incoming(to) else {
                    unreachable!("two incoming branches per state")
                };
                let a = self.log_h[t0.from] + pick(x_ll, t0.input) + pick(z_ll, t0.output);
                let b = self.log_h[t1.from] + pick(x_ll, t1.input) + pick(z_ll, t1.output);
                crate::logmath::log_add(a, b)
            })
            .collect();
        let total = log_sum_exp(&log_h);
        assert!(
            total > LOG_ZERO / 2.0 && total.is_finite(),
            "forward step lost all probability mass"
        );
        for v in &mut log_h {
            *v = (*v - total).max(LOG_ZERO);
        }
        Self {
            log_h,
            step_index: self.step_index + 1,
        }
    }
}

/// Point-mass belief on state 0.
pub fn init_belief(num_states: usize) -> StateBelief {
    StateBelief::initial(num_states)
}

/// Advances `belief` by one step with systematic observation `x_sample` (the sample at
/// the committed candidate position) and second-parity observation `z_sample`.
pub fn forward_step(
    belief: &StateBelief,
    x_sample: f64,
    z_sample: f64,
    trellis: &Trellis,
    channel: &ChannelModel,
) -> StateBelief {
    belief.step_with_likelihoods(
        trellis,
        channel.bit_log_likelihoods(x_sample),
        channel.bit_log_likelihoods(z_sample),
    )
}

//! Recursive systematic convolutional (RSC) encoder trellis and turbo encoding.
//!
//! Polynomials are integer bit masks: bit `i` holds the coefficient of `D^i`. The
//! encoder from the two-encoder experiments, `(1 + D + D^2 + D^4) / (1 + D^3 + D^4)`,
//! is `GeneratorSpec::new(0b10111, 0b11001, 4)`, i.e. feedforward 23 and feedback 25.
//!
//! The encoder is realised in controller-canonical form. A state `alpha` stores the
//! register contents `s_1..s_d` with `s_k` in bit `k - 1`. For input `a`:
//!
//! ```text
//! f     = parity(feedback_mask & (a | alpha << 1))
//! reg   = f | alpha << 1
//! b     = parity(feedforward_mask & reg)
//! next  = reg & (N - 1)
//! ```

use crate::{Bit, Error, Interleaver, Result};

/// Feedforward/feedback polynomial pair of an RSC encoder with memory depth `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorSpec {
    feedforward_mask: u32,
    feedback_mask: u32,
    memory_depth: u32,
}

impl GeneratorSpec {
    /// Largest supported memory depth.
    pub const MAX_MEMORY_DEPTH: u32 = 16;

    pub fn new(feedforward_mask: u32, feedback_mask: u32, memory_depth: u32) -> Result<Self> {
        if memory_depth == 0 || memory_depth > Self::MAX_MEMORY_DEPTH {
            return Err(Error::InvalidGenerator(format!(
                "memory depth must be in [1, {}], got {memory_depth}",
                Self::MAX_MEMORY_DEPTH
            )));
        }
        let limit = 1u32 << (memory_depth + 1);
        if feedforward_mask >= limit || feedback_mask >= limit {
            return Err(Error::InvalidGenerator(format!(
                "masks ff={feedforward_mask}, fb={feedback_mask} do not fit in {} bits",
                memory_depth + 1
            )));
        }
        if feedback_mask & 1 == 0 {
            return Err(Error::InvalidGenerator(format!(
                "feedback mask {feedback_mask} must have its D^0 coefficient set"
            )));
        }
        Ok(Self {
            feedforward_mask,
            feedback_mask,
            memory_depth,
        })
    }

    /// `(1 + D + D^2 + D^4) / (1 + D^3 + D^4)`, memory depth 4.
    pub fn memory4() -> Self {
        Self::new(23, 25, 4).expect("valid constant generator")
    }

    pub fn feedforward_mask(&self) -> u32 {
        self.feedforward_mask
    }

    pub fn feedback_mask(&self) -> u32 {
        self.feedback_mask
    }

    pub fn memory_depth(&self) -> u32 {
        self.memory_depth
    }

    pub fn num_states(&self) -> usize {
        1usize << self.memory_depth
    }
}

impl std::fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}/{}/{}",
            self.feedforward_mask, self.feedback_mask, self.memory_depth
        )
    }
}

impl std::str::FromStr for GeneratorSpec {
    type Err = Error;

    /// Parses `ff/fb/d`, e.g. `23/25/4`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('/').map(str::trim).collect();
        let parse = |p: &str| {
            p.parse::<u32>()
                .map_err(|_| Error::InvalidGenerator(format!("expected ff/fb/d, got {s:?}")))
        };
        match parts.as_slice() {
            [ff, fb, d] => Self::new(parse(ff)?, parse(fb)?, parse(d)?),
            _ => Err(Error::InvalidGenerator(format!("expected ff/fb/d, got {s:?}"))),
        }
    }
}

/// One trellis branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub input: Bit,
    pub output: Bit,
    pub to: usize,
}

/// State-transition table of an RSC encoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trellis {
    spec: GeneratorSpec,
    /// `next[2 * state + input]`
    next: Vec<usize>,
    /// `output[2 * state + input]`
    output: Vec<Bit>,
    /// Two incoming branches per destination state, `incoming[2 * to + k]`.
    incoming: Vec<Transition>,
}

#[inline]
fn parity(v: u32) -> Bit {
    (v.count_ones() & 1) as Bit
}

impl Trellis {
    pub fn new(spec: GeneratorSpec) -> Self {
        let n = spec.num_states();
        let mask = (n - 1) as u32;
        let mut next = Vec::with_capacity(2 * n);
        let mut output = Vec::with_capacity(2 * n);
        let mut incoming: Vec<Vec<Transition>> = vec![Vec::with_capacity(2); n];
        for state in 0..n {
            for input in 0..2u32 {
                let shifted = (state as u32) << 1;
                let feedback = parity(spec.feedback_mask & (input | shifted)) as u32;
                let reg = feedback | shifted;
                let out = parity(spec.feedforward_mask & reg);
                let to = (reg & mask) as usize;
                next.push(to);
                output.push(out);
                incoming[to].push(Transition {
                    from: state,
                    input: input as Bit,
                    output: out,
                    to,
                });
            }
        }
        let incoming = incoming
            .into_iter()
            .inspect(|branches| debug_assert_eq!(branches.len(), 2))
            .flatten()
            .collect();
        Self {
            spec,
            next,
            output,
            incoming,
        }
    }

    pub fn spec(&self) -> GeneratorSpec {
        self.spec
    }

    pub fn num_states(&self) -> usize {
        self.next.len() / 2
    }

    pub fn memory_depth(&self) -> u32 {
        self.spec.memory_depth
    }

    #[inline]
    pub fn next_state(&self, state: usize, input: Bit) -> usize {
        self.next[2 * state + input as usize]
    }

    #[inline]
    pub fn output(&self, state: usize, input: Bit) -> Bit {
        self.output[2 * state + input as usize]
    }

    /// The two branches entering `state`.
    #[inline]
    pub fn incoming(&self, state: usize) -> &[Transition] {
        &self.incoming[2 * state..2 * state + 2]
    }

    /// All `2N` branches, grouped by destination.
    pub fn transitions(&self) -> &[Transition] {
        &self.incoming
    }

    /// Walks the trellis from `start_state`; returns the parity bits and the final state.
    /// No termination tail is appended.
    pub fn encode(&self, input: &[Bit], start_state: usize) -> (Vec<Bit>, usize) {
        assert!(start_state < self.num_states(), "start state out of range");
        let mut state = start_state;
        let parity = input
            .iter()
            .map(|&a| {
                let b = self.output(state, a);
                state = self.next_state(state, a);
                b
            })
            .collect();
        (parity, state)
    }
}

/// Convenience wrapper around [`Trellis::new`].
pub fn build_trellis(spec: GeneratorSpec) -> Trellis {
    Trellis::new(spec)
}

/// Parity output of one RSC encoder, see [`Trellis::encode`].
pub fn encode_rsc(trellis: &Trellis, input: &[Bit], start_state: usize) -> (Vec<Bit>, usize) {
    trellis.encode(input, start_state)
}

/// Parity outputs `(v, w)` of a rate-1/3 turbo encoder. Both constituent encoders start
/// in state 0; `w` is computed on the interleaved input `u_pi[i] = u[pi[i]]`.
pub fn turbo_encode(
    first: &Trellis,
    second: &Trellis,
    pi: &Interleaver,
    u: &[Bit],
) -> Result<(Vec<Bit>, Vec<Bit>)> {
    if u.len() != pi.len() {
        return Err(Error::LengthMismatch {
            expected: pi.len(),
            found: u.len(),
        });
    }
    let (v, _) = first.encode(u, 0);
    let (w, _) = second.encode(&pi.interleave(u)?, 0);
    Ok((v, w))
}

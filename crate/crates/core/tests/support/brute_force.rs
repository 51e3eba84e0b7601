//! Exhaustive-enumeration posteriors for tiny instances. Written against a plain
//! shift-register encoder and textbook Gaussian densities, without the trellis tables
//! or the forward recursion.

#![allow(dead_code)]

pub struct RegisterCode {
    pub ff: u32,
    pub fb: u32,
    pub d: usize,
}

impl RegisterCode {
    /// Parity outputs for `input` from the all-zero register, plus the final register
    /// packed as `sum s_k 2^(k-1)`.
    pub fn run(&self, input: &[u8]) -> (Vec<u8>, usize) {
        let coeff = |mask: u32, k: usize| ((mask >> k) & 1) as u8;
        let mut reg = vec![0u8; self.d];
        let mut out = Vec::with_capacity(input.len());
        for &a in input {
            let mut f = a;
            for k in 1..=self.d {
                f ^= coeff(self.fb, k) & reg[k - 1];
            }
            let mut b = coeff(self.ff, 0) & f;
            for k in 1..=self.d {
                b ^= coeff(self.ff, k) & reg[k - 1];
            }
            out.push(b);
            reg.rotate_right(1);
            reg[0] = f;
        }
        let state = reg.iter().enumerate().map(|(k, &s)| (s as usize) << k).sum();
        (out, state)
    }
}

pub fn density(sample: f64, bit: u8, sigma: f64) -> f64 {
    let mean = if bit == 0 { 1.0 } else { -1.0 };
    (-(sample - mean).powi(2) / (2.0 * sigma * sigma)).exp()
        / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn bits(value: usize, len: usize) -> Vec<u8> {
    (0..len).map(|k| ((value >> k) & 1) as u8).collect()
}

/// `Pr(state after len(xs) steps | xs, zs)` where `xs[k]` is the systematic sample fed
/// at step `k` and `zs[k]` the parity sample.
pub fn state_posterior(code: &RegisterCode, sigma: f64, xs: &[f64], zs: &[f64]) -> Vec<f64> {
    let n = 1usize << code.d;
    let steps = xs.len();
    let mut post = vec![0.0; n];
    for value in 0..(1usize << steps) {
        let u = bits(value, steps);
        let (w, state) = code.run(&u);
        let mut p = 1.0;
        for k in 0..steps {
            p *= density(xs[k], u[k], sigma) * density(zs[k], w[k], sigma);
        }
        post[state] += p;
    }
    let total: f64 = post.iter().sum();
    post.iter().map(|p| p / total).collect()
}

/// Unnormalised log-posterior score of every candidate `j` for iteration
/// `committed.len()`, for a single block.
pub fn candidate_log_scores(
    code: &RegisterCode,
    sigma: f64,
    x: &[f64],
    z: &[f64],
    committed: &[usize],
) -> Vec<f64> {
    let i = committed.len();
    (0..x.len())
        .map(|j| {
            let mut total = 0.0;
            for value in 0..(1usize << (i + 1)) {
                let u = bits(value, i + 1);
                let (w, _) = code.run(&u);
                let mut p = 1.0;
                for k in 0..=i {
                    let xs = if k < i { x[committed[k]] } else { x[j] };
                    p *= density(xs, u[k], sigma) * density(z[k], w[k], sigma);
                }
                total += p;
            }
            let marginal = 0.5 * (density(x[j], 0, sigma) + density(x[j], 1, sigma));
            total.ln() - marginal.ln()
        })
        .collect()
}

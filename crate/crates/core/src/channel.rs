//! BPSK over AWGN, bit likelihoods and simulated received blocks.
//!
//! Bit `0` is sent as `+1` and bit `1` as `-1`. The SNR in dB is `10 log10(Es / N0)`
//! with unit symbol energy and noise variance `sigma^2` per real dimension, so
//! `snr_db = 10 log10(1 / (2 sigma^2))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::logmath::log_add;
use crate::trellis::turbo_encode;
use crate::{Bit, Error, Interleaver, Result, Trellis};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelModel {
    noise_std: f64,
}

impl ChannelModel {
    pub fn from_noise_std(noise_std: f64) -> Result<Self> {
        if !(noise_std.is_finite() && noise_std > 0.0) {
            return Err(Error::InvalidChannel(format!(
                "noise standard deviation must be positive and finite, got {noise_std}"
            )));
        }
        Ok(Self { noise_std })
    }

    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::InvalidChannel(format!("SNR must be finite, got {snr_db}")));
        }
        Self::from_noise_std(snr_db_to_noise_std(snr_db))
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn snr_db(&self) -> f64 {
        noise_std_to_snr_db(self.noise_std)
    }

    /// `(log Pr(x | bit = 0), log Pr(x | bit = 1))`, Gaussian densities around `+1`/`-1`.
    #[inline]
    pub fn bit_log_likelihoods(&self, sample: f64) -> (f64, f64) {
        let inv = 0.5 / (self.noise_std * self.noise_std);
        let norm = -(self.noise_std.ln() + LN_SQRT_2PI);
        let d0 = sample - 1.0;
        let d1 = sample + 1.0;
        (norm - d0 * d0 * inv, norm - d1 * d1 * inv)
    }

    /// `log Pr(x)` under equiprobable bits.
    #[inline]
    pub fn marginal_log_likelihood(&self, sample: f64) -> f64 {
        let (l0, l1) = self.bit_log_likelihoods(sample);
        log_add(l0, l1) - std::f64::consts::LN_2
    }

    /// BPSK-modulates `bits` and adds white Gaussian noise drawn from `rng`.
    pub fn transmit<R: Rng + ?Sized>(&self, bits: &[Bit], rng: &mut R) -> Vec<f64> {
        bits.iter()
            .map(|&b| {
                let n: f64 = rng.sample(StandardNormal);
                bpsk(b) + self.noise_std * n
            })
            .collect()
    }
}

pub fn snr_db_to_noise_std(snr_db: f64) -> f64 {
    (0.5 * 10f64.powf(-snr_db / 10.0)).sqrt()
}

pub fn noise_std_to_snr_db(noise_std: f64) -> f64 {
    -10.0 * (2.0 * noise_std * noise_std).log10()
}

#[inline]
pub fn bpsk(bit: Bit) -> f64 {
    1.0 - 2.0 * bit as f64
}

/// Free-function form of [`ChannelModel::bit_log_likelihoods`].
pub fn bit_log_likelihoods(sample: f64, channel: &ChannelModel) -> (f64, f64) {
    channel.bit_log_likelihoods(sample)
}

/// Free-function form of [`ChannelModel::transmit`].
pub fn transmit<R: Rng + ?Sized>(bits: &[Bit], channel: &ChannelModel, rng: &mut R) -> Vec<f64> {
    channel.transmit(bits, rng)
}

/// Independent deterministic random stream for `(seed, trial, lane)`.
///
/// `lane` 0 is reserved for trial-level draws (the interleaver); block `s` uses lane
/// `s + 1`. Streams for distinct keys never overlap.
pub fn substream(seed: u64, trial: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(trial)));
    rng.set_stream(lane);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Soft observations of one turbo codeword.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedBlock {
    pub block_id: usize,
    /// systematic
    pub x: Vec<f64>,
    /// first parity; carried but not used by recovery
    pub y: Vec<f64>,
    /// second (interleaved) parity
    pub z: Vec<f64>,
}

impl ReceivedBlock {
    pub fn new(block_id: usize, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        for len in [y.len(), z.len()] {
            if len != x.len() {
                return Err(Error::LengthMismatch {
                    expected: x.len(),
                    found: len,
                });
            }
        }
        Ok(Self { block_id, x, y, z })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Draws uniform information bits, turbo-encodes them and passes all three streams
    /// through the channel. Returns the block and its information bits.
    pub fn simulate<R: Rng + ?Sized>(
        block_id: usize,
        trellis: &Trellis,
        pi: &Interleaver,
        channel: &ChannelModel,
        rng: &mut R,
    ) -> (Self, Vec<Bit>) {
        let u: Vec<Bit> = (0..pi.len()).map(|_| rng.gen_range(0..2)).collect();
        let (v, w) = turbo_encode(trellis, trellis, pi, &u).expect("lengths agree");
        let x = channel.transmit(&u, rng);
        let y = channel.transmit(&v, rng);
        let z = channel.transmit(&w, rng);
        (Self { block_id, x, y, z }, u)
    }
}

/// `count` blocks for one trial, block `s` drawn from `substream(seed, trial, s + 1)`.
pub fn simulate_blocks(
    trellis: &Trellis,
    pi: &Interleaver,
    channel: &ChannelModel,
    count: usize,
    seed: u64,
    trial: u64,
) -> Vec<ReceivedBlock> {
    (0..count)
        .map(|s| {
            let mut rng = substream(seed, trial, s as u64 + 1);
            ReceivedBlock::simulate(s, trellis, pi, channel, &mut rng).0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GeneratorSpec;

    #[test]
    fn noiseless_limit_returns_symbols() {
        let ch = ChannelModel::from_noise_std(1e-300).unwrap();
        let mut rng = substream(1, 2, 3);
        assert_eq!(ch.transmit(&[0, 1, 1, 0], &mut rng), vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let ch = ChannelModel::from_snr_db(1.0).unwrap();
        let bits = [0, 1, 0, 1, 1, 1, 0];
        let a = ch.transmit(&bits, &mut substream(42, 0, 1));
        let b = ch.transmit(&bits, &mut substream(42, 0, 1));
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let c = ch.transmit(&bits, &mut substream(42, 0, 2));
        assert_ne!(a, c);
    }

    #[test]
    fn noise_moments() {
        let sigma = 0.7;
        let ch = ChannelModel::from_noise_std(sigma).unwrap();
        let n = 1_000_000;
        let out = ch.transmit(&vec![0; n], &mut substream(9, 9, 9));
        let mean = out.iter().map(|v| v - 1.0).sum::<f64>() / n as f64;
        let var = out.iter().map(|v| (v - 1.0 - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 * sigma / 1000.0, "mean {mean}");
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn likelihood_symmetry_and_llr() {
        let ch = ChannelModel::from_noise_std(1.0).unwrap();
        let (a, b) = ch.bit_log_likelihoods(0.0);
        assert_eq!(a, b);
        let (a, b) = ch.bit_log_likelihoods(1.0);
        assert!((a - b - 2.0).abs() < 1e-15);
        let ch = ChannelModel::from_noise_std(0.37).unwrap();
        for x in [0.1, 0.8, 1.7, -2.5] {
            let (p0, p1) = ch.bit_log_likelihoods(x);
            let (m0, m1) = ch.bit_log_likelihoods(-x);
            assert!(((p0 - p1) + (m0 - m1)).abs() < 1e-12);
            // density check against the textbook formula
            let direct = (-(x - 1.0f64).powi(2) / (2.0 * 0.37 * 0.37)).exp()
                / (0.37 * (2.0 * std::f64::consts::PI).sqrt());
            assert!((p0 - direct.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_is_mean_of_likelihoods() {
        let ch = ChannelModel::from_noise_std(0.8).unwrap();
        let (l0, l1) = ch.bit_log_likelihoods(0.3);
        let direct = (0.5 * (l0.exp() + l1.exp())).ln();
        assert!((ch.marginal_log_likelihood(0.3) - direct).abs() < 1e-14);
    }

    #[test]
    fn snr_conversion_round_trips() {
        for snr in [-5.0, -1.25, 0.0, 1.75, 3.0, 7.45, 20.0] {
            let ch = ChannelModel::from_snr_db(snr).unwrap();
            assert!((ch.snr_db() - snr).abs() <= 1e-12 * snr.abs().max(1.0));
        }
        for sigma in [0.1, 0.3, std::f64::consts::FRAC_1_SQRT_2, 1.2] {
            let back = snr_db_to_noise_std(noise_std_to_snr_db(sigma));
            assert!((back - sigma).abs() <= 4.0 * f64::EPSILON * sigma);
        }
        // 0 dB corresponds to sigma^2 = 1/2
        assert!((snr_db_to_noise_std(0.0) - 0.5f64.sqrt()).abs() < 1e-16);
        assert!(ChannelModel::from_noise_std(0.0).is_err());
        assert!(ChannelModel::from_noise_std(f64::NAN).is_err());
    }

    #[test]
    fn block_regeneration_is_byte_exact() {
        let t = Trellis::new(GeneratorSpec::memory4());
        let mut rng = substream(5, 1, 0);
        let pi = Interleaver::random(64, &mut rng);
        let ch = ChannelModel::from_snr_db(0.5).unwrap();
        let a = simulate_blocks(&t, &pi, &ch, 4, 5, 1);
        let b = simulate_blocks(&t, &pi, &ch, 4, 5, 1);
        assert_eq!(a, b);
        for (ba, bb) in a.iter().zip(&b) {
            for (p, q) in ba.x.iter().chain(&ba.z).zip(bb.x.iter().chain(&bb.z)) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
        assert_ne!(a[0].x, a[1].x);
    }

    #[test]
    fn received_block_lengths_checked() {
        assert!(ReceivedBlock::new(0, vec![0.0; 3], vec![0.0; 3], vec![0.0; 2]).is_err());
        assert!(ReceivedBlock::new(0, vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]).is_ok());
    }
}

//! Block interleaver permutations.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::{Error, Result};

/// Permutation `pi` of `0..K` with the convention `u_pi[i] = u[pi[i]]`.
///
/// Entries are 0-based: the mathematical `pi(i) = j` over `1..=K` is stored as
/// `pi[i - 1] = j - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interleaver {
    pi: Vec<usize>,
}

impl Interleaver {
    pub fn new(pi: Vec<usize>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::InvalidInterleaver("empty permutation".into()));
        }
        let mut seen = vec![false; pi.len()];
        for &p in &pi {
            if p >= pi.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidInterleaver(format!(
                    "not a permutation of 0..{}",
                    pi.len()
                )));
            }
        }
        Ok(Self { pi })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            pi: (0..len).collect(),
        }
    }

    /// Uniformly random permutation (Fisher-Yates).
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut pi: Vec<usize> = (0..len).collect();
        pi.shuffle(rng);
        Self { pi }
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.pi[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.pi
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.pi.len()];
        for (i, &p) in self.pi.iter().enumerate() {
            inv[p] = i;
        }
        Self { pi: inv }
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check_len(input.len())?;
        Ok(self.pi.iter().map(|&p| input[p]).collect())
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check_len(input.len())?;
        let mut out = vec![T::default(); input.len()];
        for (i, &p) in self.pi.iter().enumerate() {
            out[p] = input[i];
        }
        Ok(out)
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found != self.pi.len() {
            return Err(Error::LengthMismatch {
                expected: self.pi.len(),
                found,
            });
        }
        Ok(())
    }
}

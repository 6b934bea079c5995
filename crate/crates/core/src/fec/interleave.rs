use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Random bit interleaver over the coded bits of one frame.
///
/// `interleave` writes input position `i` to output position
/// `permutation[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    permutation: Vec<usize>,
    seed: u64,
}

impl Interleaver {
    /// Seeded Fisher-Yates permutation of `len` positions.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut permutation: Vec<usize> = (0..len).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        permutation.shuffle(&mut rng);
        Interleaver { permutation, seed }
    }

    pub fn identity(len: usize) -> Self {
        Interleaver {
            permutation: (0..len).collect(),
            seed: 0,
        }
    }

    /// Builds an interleaver from an explicit permutation, checking that it
    /// is a bijection.
    pub fn from_permutation(permutation: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; permutation.len()];
        for &p in &permutation {
            if p >= seen.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::dim("interleaver permutation is not a bijection"));
            }
        }
        Ok(Interleaver { permutation, seed: 0 })
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn interleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>> {
        Error::check_len(self.len(), input.len())?;
        let mut out = vec![T::default(); input.len()];
        for (&p, &v) in self.permutation.iter().zip(input) {
            out[p] = v;
        }
        Ok(out)
    }

    pub fn deinterleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        Error::check_len(self.len(), input.len())?;
        Ok(self.permutation.iter().map(|&p| input[p]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identity_leaves_input_unchanged() {
        let il = Interleaver::identity(5);
        assert_eq!(il.interleave(&[1u8, 2, 3, 4, 5]).unwrap(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn roundtrip_on_random_bits() {
        let il = Interleaver::random(10_000, 99);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bits: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
        let mixed = il.interleave(&bits).unwrap();
        assert_ne!(mixed, bits);
        assert_eq!(il.deinterleave(&mixed).unwrap(), bits);
    }

    #[test]
    fn permutation_is_bijection_and_seed_deterministic() {
        let a = Interleaver::random(1000, 5);
        let b = Interleaver::random(1000, 5);
        assert_eq!(a, b);
        assert_ne!(a.permutation(), Interleaver::random(1000, 6).permutation());
        let mut sorted = a.permutation().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn size_mismatch() {
        let il = Interleaver::random(8, 0);
        assert!(il.interleave(&[0u8; 7]).is_err());
        assert!(il.deinterleave(&[0.0f64; 9]).is_err());
        assert!(Interleaver::from_permutation(vec![0, 0, 1]).is_err());
        assert!(Interleaver::from_permutation(vec![2, 0, 1]).is_ok());
    }
}

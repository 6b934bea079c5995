//! Walsh-Hadamard spreading codes, fast-transform spreading and despreading,
//! and the regular chip-to-carrier frequency interleaver.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::C64;

/// Which Hadamard columns are handed to the active users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeAssignment {
    /// Columns `0..K` in Sylvester order.
    Natural,
    /// User 0 keeps the all-ones column, the others get a seeded random
    /// subset of the remaining columns.
    Random { seed: u64 },
}

/// In-place unnormalized fast Walsh-Hadamard transform (Sylvester order).
pub fn fwht(data: &mut [C64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Entry `(row, col)` of the unnormalized Sylvester-Hadamard matrix.
pub fn hadamard_entry(row: usize, col: usize) -> f64 {
    if (row & col).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// The `S_F x K` code matrix `C` whose columns are normalized Walsh-Hadamard
/// codes with entries `+-1/sqrt(S_F)`.
#[derive(Debug, Clone)]
pub struct CodeMatrix {
    spreading_factor: usize,
    columns: Vec<usize>,
    dense: DMatrix<C64>,
}

/// Builds the code matrix for `n_users` codes of length `spreading_factor`
/// using natural order.
pub fn hadamard_codes(spreading_factor: usize, n_users: usize) -> Result<CodeMatrix> {
    CodeMatrix::new(spreading_factor, n_users, CodeAssignment::Natural)
}

impl CodeMatrix {
    pub fn new(spreading_factor: usize, n_users: usize, assignment: CodeAssignment) -> Result<Self> {
        if !spreading_factor.is_power_of_two() {
            return Err(Error::dim(format!(
                "spreading factor {spreading_factor} is not a power of two"
            )));
        }
        if n_users == 0 || n_users > spreading_factor {
            return Err(Error::dim(format!(
                "need 1 <= K <= S_F, got K = {n_users}, S_F = {spreading_factor}"
            )));
        }
        let columns = match assignment {
            CodeAssignment::Natural => (0..n_users).collect(),
            CodeAssignment::Random { seed } => {
                let mut rest: Vec<usize> = (1..spreading_factor).collect();
                rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                std::iter::once(0).chain(rest.into_iter().take(n_users - 1)).collect()
            }
        };
        Ok(Self::from_columns(spreading_factor, columns))
    }

    /// Code matrix made of the given Hadamard column indices, in order.
    pub fn from_columns(spreading_factor: usize, columns: Vec<usize>) -> Self {
        let scale = 1.0 / (spreading_factor as f64).sqrt();
        let dense = DMatrix::from_fn(spreading_factor, columns.len(), |r, c| {
            C64::new(hadamard_entry(r, columns[c]) * scale, 0.0)
        });
        CodeMatrix {
            spreading_factor,
            columns,
            dense,
        }
    }

    pub fn spreading_factor(&self) -> usize {
        self.spreading_factor
    }

    pub fn n_users(&self) -> usize {
        self.columns.len()
    }

    /// Hadamard column index used by each user.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    /// Dense `S_F x K` matrix.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.dense
    }

    /// Chip `chip` of user `user`'s normalized code.
    pub fn chip(&self, user: usize, chip: usize) -> f64 {
        hadamard_entry(chip, self.columns[user]) / (self.spreading_factor as f64).sqrt()
    }

    /// Code of a single user as its own one-column matrix.
    pub fn single(&self, user: usize) -> CodeMatrix {
        Self::from_columns(self.spreading_factor, vec![self.columns[user]])
    }

    /// `C d` through a fast Hadamard transform of the zero-extended symbols.
    pub fn spread(&self, symbols: &[C64]) -> Result<Vec<C64>> {
        let mut chips = vec![C64::new(0.0, 0.0); self.spreading_factor];
        self.spread_into(symbols, &mut chips)?;
        Ok(chips)
    }

    pub fn spread_into(&self, symbols: &[C64], chips: &mut [C64]) -> Result<()> {
        Error::check_len(self.n_users(), symbols.len())?;
        Error::check_len(self.spreading_factor, chips.len())?;
        chips.fill(C64::new(0.0, 0.0));
        for (&col, &d) in self.columns.iter().zip(symbols) {
            chips[col] = d;
        }
        fwht(chips);
        let scale = 1.0 / (self.spreading_factor as f64).sqrt();
        chips.iter_mut().for_each(|c| *c *= scale);
        Ok(())
    }

    /// `C^H y` through a fast Hadamard transform.
    pub fn despread(&self, chips: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.spreading_factor, chips.len())?;
        let mut work = chips.to_vec();
        fwht(&mut work);
        let scale = 1.0 / (self.spreading_factor as f64).sqrt();
        Ok(self.columns.iter().map(|&c| work[c] * scale).collect())
    }
}

/// Regular frequency interleaver: chip `j` of sub-band `m` goes to carrier
/// `j * N_u + m`, so the chips of one symbol are spread as far apart as the
/// band allows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreqInterleaver {
    spreading_factor: usize,
    n_subbands: usize,
}

impl FreqInterleaver {
    pub fn new(spreading_factor: usize, n_subbands: usize) -> Self {
        FreqInterleaver {
            spreading_factor,
            n_subbands,
        }
    }

    pub fn n_carriers(&self) -> usize {
        self.spreading_factor * self.n_subbands
    }

    /// Carrier index of chip `chip` in sub-band `subband`.
    pub fn carrier(&self, subband: usize, chip: usize) -> usize {
        chip * self.n_subbands + subband
    }

    /// Input is sub-band major (`subband * S_F + chip`), output is in
    /// carrier order.
    pub fn interleave(&self, chips: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.n_carriers(), chips.len())?;
        let mut out = vec![C64::new(0.0, 0.0); chips.len()];
        for m in 0..self.n_subbands {
            for j in 0..self.spreading_factor {
                out[self.carrier(m, j)] = chips[m * self.spreading_factor + j];
            }
        }
        Ok(out)
    }

    pub fn deinterleave<T: Copy>(&self, carriers: &[T]) -> Result<Vec<T>> {
        Error::check_len(self.n_carriers(), carriers.len())?;
        Ok((0..self.n_subbands)
            .flat_map(|m| (0..self.spreading_factor).map(move |j| (m, j)))
            .map(|(m, j)| carriers[self.carrier(m, j)])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symbols(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn base_construction() {
        let c = hadamard_codes(2, 2).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let expect = [[r, r], [r, -r]];
        for (i, row) in expect.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert!((c.matrix()[(i, j)].re - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn orthogonality_full_and_partial() {
        let c = hadamard_codes(8, 8).unwrap();
        let g = c.matrix().adjoint() * c.matrix();
        assert!((g - DMatrix::identity(8, 8)).norm() < 1e-12);
        let p = hadamard_codes(4, 2).unwrap();
        let g = p.matrix().adjoint() * p.matrix();
        assert!((g - DMatrix::identity(2, 2)).norm() < 1e-12);
        let o = p.matrix() * p.matrix().adjoint();
        assert!((o - DMatrix::identity(4, 4)).norm() > 0.5);
    }

    #[test]
    fn single_user_spreads_to_its_code() {
        let c = hadamard_codes(8, 1).unwrap();
        let chips = c.spread(&[C64::new(1.0, 0.0)]).unwrap();
        for (j, x) in chips.iter().enumerate() {
            assert!((x.re - c.chip(0, j)).abs() < 1e-15 && x.im == 0.0);
        }
    }

    #[test]
    fn fast_paths_match_dense_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in [1, 5, 17, 32] {
            let c = hadamard_codes(32, k).unwrap();
            let d = random_symbols(&mut rng, k);
            let fast = c.spread(&d).unwrap();
            let dense = c.matrix() * nalgebra::DVector::from_vec(d.clone());
            for (a, b) in fast.iter().zip(dense.iter()) {
                assert!((a - b).norm() < 1e-12);
            }
            let y = random_symbols(&mut rng, 32);
            let fast = c.despread(&y).unwrap();
            let dense = c.matrix().adjoint() * nalgebra::DVector::from_vec(y);
            for (a, b) in fast.iter().zip(dense.iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn roundtrip_and_energy_at_full_load() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = hadamard_codes(16, 16).unwrap();
        let d = random_symbols(&mut rng, 16);
        let chips = c.spread(&d).unwrap();
        let e_d: f64 = d.iter().map(|x| x.norm_sqr()).sum();
        let e_c: f64 = chips.iter().map(|x| x.norm_sqr()).sum();
        assert!((e_d - e_c).abs() < 1e-12);
        for (a, b) in c.despread(&chips).unwrap().iter().zip(&d) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(c.despread(&[C64::new(0.0, 0.0); 16]).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn random_assignment_keeps_user_zero() {
        let c = CodeMatrix::new(32, 6, CodeAssignment::Random { seed: 3 }).unwrap();
        assert_eq!(c.columns()[0], 0);
        let mut cols = c.columns().to_vec();
        cols.sort_unstable();
        cols.dedup();
        assert_eq!(cols.len(), 6);
        let g = c.matrix().adjoint() * c.matrix();
        assert!((g - DMatrix::identity(6, 6)).norm() < 1e-12);
    }

    #[test]
    fn invalid_dimensions() {
        assert!(hadamard_codes(12, 2).is_err());
        assert!(hadamard_codes(8, 9).is_err());
        assert!(hadamard_codes(8, 0).is_err());
        let c = hadamard_codes(8, 3).unwrap();
        assert!(c.spread(&[C64::new(0.0, 0.0); 2]).is_err());
        assert!(c.despread(&[C64::new(0.0, 0.0); 4]).is_err());
    }

    #[test]
    fn frequency_interleaver_mapping() {
        let fi = FreqInterleaver::new(4, 3);
        assert_eq!(fi.carrier(1, 2), 7);
        let id = FreqInterleaver::new(8, 1);
        let x: Vec<C64> = (0..8).map(|i| C64::new(i as f64, 0.0)).collect();
        assert_eq!(id.interleave(&x).unwrap(), x);
        let big = FreqInterleaver::new(32, 23);
        let x: Vec<C64> = (0..736).map(|i| C64::new(i as f64, -(i as f64))).collect();
        let y = big.interleave(&x).unwrap();
        assert_ne!(x, y);
        assert_eq!(big.deinterleave(&y).unwrap(), x);
        assert!(big.interleave(&x[..735]).is_err());
    }
}

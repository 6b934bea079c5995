use crate::error::{Error, Result};

/// Puncturing pattern: `keep[t][s]` tells whether output stream `s` of
/// trellis step `t mod period` is transmitted.
///
/// A codeword that ends mid-period uses the leading columns of the pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturePattern {
    keep: Vec<Vec<bool>>,
    kept_per_period: usize,
}

impl PuncturePattern {
    pub fn new(keep: Vec<Vec<bool>>) -> Result<Self> {
        let streams = keep.first().map(Vec::len).unwrap_or(0);
        if streams == 0 {
            return Err(Error::dim("puncture pattern is empty"));
        }
        if keep.iter().any(|col| col.len() != streams) {
            return Err(Error::dim("puncture pattern rows differ in length"));
        }
        if keep.iter().any(|col| !col.iter().any(|&k| k)) {
            return Err(Error::dim("puncture pattern drops a whole trellis step"));
        }
        let kept_per_period = keep.iter().flatten().filter(|&&k| k).count();
        Ok(PuncturePattern {
            keep,
            kept_per_period,
        })
    }

    /// Identity pattern for `streams` outputs.
    pub fn keep_all(streams: usize) -> Self {
        Self::new(vec![vec![true; streams.max(1)]]).expect("non-empty")
    }

    pub fn period(&self) -> usize {
        self.keep.len()
    }

    pub fn streams(&self) -> usize {
        self.keep[0].len()
    }

    pub fn kept_per_period(&self) -> usize {
        self.kept_per_period
    }

    fn kept_at(&self, step: usize) -> usize {
        self.keep[step % self.period()].iter().filter(|&&k| k).count()
    }

    /// Bits transmitted for `steps` trellis steps.
    pub fn kept_in_steps(&self, steps: usize) -> usize {
        let full = steps / self.period();
        let rest: usize = (0..steps % self.period()).map(|t| self.kept_at(t)).sum();
        full * self.kept_per_period + rest
    }

    /// Mask over `steps * streams` mother positions.
    fn mask(&self, steps: usize) -> impl Iterator<Item = bool> + '_ {
        (0..steps).flat_map(move |t| self.keep[t % self.period()].iter().copied())
    }

    pub(crate) fn apply<T: Copy>(&self, mother: &[T]) -> Vec<T> {
        let steps = mother.len() / self.streams();
        mother
            .iter()
            .zip(self.mask(steps))
            .filter_map(|(&v, keep)| keep.then_some(v))
            .collect()
    }

    /// Number of trellis steps that produce exactly `punctured_len` bits.
    pub fn steps_for_len(&self, punctured_len: usize) -> Option<usize> {
        let mut steps = (punctured_len / self.kept_per_period) * self.period();
        let mut kept = self.kept_in_steps(steps);
        while kept < punctured_len {
            kept += self.kept_at(steps);
            steps += 1;
        }
        (kept == punctured_len).then_some(steps)
    }
}

/// Removes the positions the pattern does not keep.
pub fn puncture(coded: &[u8], pattern: &PuncturePattern) -> Result<Vec<u8>> {
    if !coded.len().is_multiple_of(pattern.streams()) {
        return Err(Error::dim(format!(
            "{} coded bits is not a whole number of {}-bit trellis steps",
            coded.len(),
            pattern.streams()
        )));
    }
    Ok(pattern.apply(coded))
}

/// Reinserts zero LLRs (erasures) at the punctured positions.
pub fn depuncture(llrs: &[f64], pattern: &PuncturePattern) -> Result<Vec<f64>> {
    let steps = pattern.steps_for_len(llrs.len()).ok_or_else(|| {
        Error::dim(format!(
            "{} soft values cannot come from a whole number of punctured steps",
            llrs.len()
        ))
    })?;
    let mut src = llrs.iter();
    Ok(pattern
        .mask(steps)
        .map(|keep| if keep { *src.next().expect("length checked") } else { 0.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::ConvCode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_pattern_is_passthrough() {
        let p = PuncturePattern::keep_all(3);
        let bits = vec![1, 0, 1, 1, 0, 0];
        assert_eq!(puncture(&bits, &p).unwrap(), bits);
        let llr = vec![1.0, -2.0, 3.0];
        assert_eq!(depuncture(&llr, &p).unwrap(), llr);
    }

    #[test]
    fn third_to_half_on_six_bits() {
        let p = ConvCode::umts_rate_half().pattern().clone();
        let bits = vec![1, 1, 1, 0, 1, 1];
        let kept = puncture(&bits, &p).unwrap();
        assert_eq!(kept, vec![1, 1, 0, 1]);
        let soft: Vec<f64> = kept.iter().map(|&b| 1.0 - 2.0 * b as f64).collect();
        let restored = depuncture(&soft, &p).unwrap();
        assert_eq!(restored, vec![-1.0, -1.0, 0.0, 1.0, -1.0, 0.0]);
    }

    #[test]
    fn nonzero_positions_after_depuncture_are_kept_positions() {
        let p = ConvCode::umts_rate_three_quarters().pattern().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bits: Vec<u8> = (0..300).map(|_| rng.random_range(0..2)).collect();
        let kept = puncture(&bits, &p).unwrap();
        let soft: Vec<f64> = kept.iter().map(|&b| 1.0 + b as f64).collect();
        let restored = depuncture(&soft, &p).unwrap();
        assert_eq!(restored.len(), 300);
        // Positional oracle built directly from the pattern matrix.
        for (i, v) in restored.iter().enumerate() {
            let step = i / 3;
            let stream = i % 3;
            let expected = [[true, true, false], [true, false, false], [false, true, false]]
                [step % 3][stream];
            assert_eq!(*v != 0.0, expected, "position {i}");
            if expected {
                assert_eq!(*v, 1.0 + bits[i] as f64);
            }
        }
    }

    #[test]
    fn partial_period_uses_leading_columns() {
        let p = ConvCode::umts_rate_three_quarters().pattern().clone();
        assert_eq!(p.kept_in_steps(4), 6);
        assert_eq!(p.steps_for_len(6), Some(4));
        assert_eq!(p.steps_for_len(5), None);
        assert!(depuncture(&[0.0; 5], &p).is_err());
        assert!(depuncture(&[0.0; 3], &p).is_ok());
    }

    #[test]
    fn rejects_invalid_patterns() {
        assert!(PuncturePattern::new(vec![]).is_err());
        assert!(PuncturePattern::new(vec![vec![false, false]]).is_err());
        assert!(PuncturePattern::new(vec![vec![true], vec![true, false]]).is_err());
        assert!(puncture(&[1, 0, 1, 1], &ConvCode::umts_rate_half().pattern().clone()).is_err());
    }
}

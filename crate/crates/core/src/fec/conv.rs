use crate::error::{Error, Result};

use super::puncture::PuncturePattern;

/// Feed-forward convolutional code with an optional puncturing pattern.
///
/// Generators are given in octal with the most significant bit tapping the
/// current input bit, e.g. `(0o7, 0o5)` for the classic constraint length 3
/// code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvCode {
    constraint_length: usize,
    generators: Vec<u32>,
    pattern: PuncturePattern,
}

impl ConvCode {
    pub fn new(constraint_length: usize, generators: Vec<u32>, pattern: PuncturePattern) -> Result<Self> {
        if !(2..=16).contains(&constraint_length) {
            return Err(Error::dim(format!(
                "constraint length {constraint_length} outside 2..=16"
            )));
        }
        if generators.is_empty() {
            return Err(Error::dim("at least one generator is required"));
        }
        let limit = 1u32 << constraint_length;
        if let Some(g) = generators.iter().find(|&&g| g == 0 || g >= limit) {
            return Err(Error::dim(format!(
                "generator {g:o} does not fit constraint length {constraint_length}"
            )));
        }
        if pattern.streams() != generators.len() {
            return Err(Error::dim(format!(
                "puncture pattern has {} streams, code has {}",
                pattern.streams(),
                generators.len()
            )));
        }
        Ok(ConvCode {
            constraint_length,
            generators,
            pattern,
        })
    }

    /// Unpunctured code.
    pub fn unpunctured(constraint_length: usize, generators: Vec<u32>) -> Result<Self> {
        let pattern = PuncturePattern::keep_all(generators.len());
        Self::new(constraint_length, generators, pattern)
    }

    /// Constraint length 9, rate 1/3 mother code with generators 557, 663, 711.
    pub fn umts_mother() -> Self {
        Self::unpunctured(9, vec![0o557, 0o663, 0o711]).expect("valid UMTS code")
    }

    /// UMTS mother code punctured to rate 1/2: streams G0 and G1 are kept.
    pub fn umts_rate_half() -> Self {
        let pattern = PuncturePattern::new(vec![vec![true, true, false]]).expect("valid pattern");
        Self::new(9, vec![0o557, 0o663, 0o711], pattern).expect("valid UMTS code")
    }

    /// UMTS mother code punctured to rate 3/4.
    ///
    /// Period 3, keeping G0 at steps 0 and 1 and G1 at steps 0 and 2 (4 of
    /// 9 mother bits). G2 is never sent.
    pub fn umts_rate_three_quarters() -> Self {
        let pattern = PuncturePattern::new(vec![
            vec![true, true, false],
            vec![true, false, false],
            vec![false, true, false],
        ])
        .expect("valid pattern");
        Self::new(9, vec![0o557, 0o663, 0o711], pattern).expect("valid UMTS code")
    }

    pub fn constraint_length(&self) -> usize {
        self.constraint_length
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    pub fn pattern(&self) -> &PuncturePattern {
        &self.pattern
    }

    /// Number of encoder states, `2^(constraint_length - 1)`.
    pub fn n_states(&self) -> usize {
        1 << (self.constraint_length - 1)
    }

    /// Termination bits appended to every message.
    pub fn tail_len(&self) -> usize {
        self.constraint_length - 1
    }

    /// Mother code rate `1 / n_generators`.
    pub fn mother_rate(&self) -> f64 {
        1.0 / self.generators.len() as f64
    }

    /// Rate after puncturing.
    pub fn rate(&self) -> f64 {
        self.pattern.period() as f64 / self.pattern.kept_per_period() as f64
    }

    /// Length of the punctured, terminated codeword for `n_info` bits.
    pub fn encoded_len(&self, n_info: usize) -> usize {
        self.pattern.kept_in_steps(n_info + self.tail_len())
    }

    /// Output bits for one step given the full register contents.
    pub(crate) fn outputs(&self, register: u32) -> impl Iterator<Item = u8> + '_ {
        self.generators
            .iter()
            .map(move |&g| ((register & g).count_ones() & 1) as u8)
    }
}

/// Encodes `bits`, terminates the trellis with `constraint_length - 1` zero
/// bits and applies the code's puncturing pattern.
///
/// The mother code output is laid out step-major: all generator outputs of
/// step 0, then step 1, and so on.
pub fn conv_encode(bits: &[u8], code: &ConvCode) -> Vec<u8> {
    let k = code.constraint_length;
    let mut state = 0u32;
    let mut mother = Vec::with_capacity((bits.len() + code.tail_len()) * code.generators.len());
    let tail = std::iter::repeat_n(0u8, code.tail_len());
    for b in bits.iter().copied().chain(tail) {
        let register = (u32::from(b & 1) << (k - 1)) | state;
        mother.extend(code.outputs(register));
        state = register >> 1;
    }
    code.pattern.apply(&mother)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_in_zero_out() {
        let code = ConvCode::umts_rate_half();
        let out = conv_encode(&[0; 40], &code);
        assert_eq!(out.len(), code.encoded_len(40));
        assert!(out.iter().all(|&b| b == 0));
    }

    #[test]
    fn impulse_response_is_generator_taps() {
        let code = ConvCode::unpunctured(3, vec![0o7, 0o5]).unwrap();
        let out = conv_encode(&[1, 0, 0], &code);
        // 7 = 111, 5 = 101, read MSB first and interleaved.
        assert_eq!(&out[..6], &[1, 1, 1, 0, 1, 1]);
        assert!(out[6..].iter().all(|&b| b == 0));
        assert_eq!(out.len(), 10);
    }

    #[test]
    fn rates() {
        assert!((ConvCode::umts_mother().rate() - 1.0 / 3.0).abs() < 1e-15);
        assert!((ConvCode::umts_rate_half().rate() - 0.5).abs() < 1e-15);
        assert!((ConvCode::umts_rate_three_quarters().rate() - 0.75).abs() < 1e-15);
        assert_eq!(ConvCode::umts_rate_half().encoded_len(24), 64);
    }

    #[test]
    fn rejects_bad_generators() {
        assert!(ConvCode::unpunctured(3, vec![0o17]).is_err());
        assert!(ConvCode::unpunctured(3, vec![]).is_err());
        assert!(ConvCode::unpunctured(1, vec![1]).is_err());
    }
}

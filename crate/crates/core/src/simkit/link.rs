//! One frame through the complete downlink chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{self, ChannelModel};
use crate::detectors::{DetectorSpec, SubbandProblem};
use crate::error::Result;
use crate::fec::{conv_encode, viterbi_decode, Interleaver};
use crate::mapping::Constellation;
use crate::ofdm::OfdmModem;
use crate::spreading::{CodeMatrix, FreqInterleaver};
use crate::sysmodel::CheckedParams;
use crate::C64;

use super::mix_seed;

/// Smallest error variance handed to the demapper.
pub const VAR_FLOOR: f64 = 1e-12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Error counts of one frame of user 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameOutcome {
    pub bits: u64,
    pub bit_errors: u64,
}

impl FrameOutcome {
    pub fn frame_error(&self) -> bool {
        self.bit_errors > 0
    }
}

/// Everything that stays fixed across the frames of one operating point.
#[derive(Debug, Clone)]
pub struct Link {
    params: CheckedParams,
    codes: CodeMatrix,
    freq: FreqInterleaver,
    modem: OfdmModem,
    channel: ChannelModel,
    constellation: Constellation,
    interleaver: Interleaver,
}

impl Link {
    pub fn new(params: &CheckedParams) -> Result<Self> {
        let p = params.params();
        Ok(Link {
            codes: CodeMatrix::new(p.spreading_factor, p.n_users, p.code_assignment)?,
            freq: FreqInterleaver::new(p.spreading_factor, params.n_subbands()),
            modem: OfdmModem::new(params.carrier_layout(), p.guard_len)?,
            channel: params.channel_model()?,
            constellation: Constellation::new(p.modulation),
            interleaver: Interleaver::random(params.frame().grid_bits, p.seed),
            params: params.clone(),
        })
    }

    pub fn params(&self) -> &CheckedParams {
        &self.params
    }

    /// Simulates one frame. User 0 carries coded data; the other codes
    /// carry uniformly drawn constellation points. All randomness comes from
    /// `seed`, so every detector sees the same frame for the same seed.
    pub fn run_frame(&self, detector: &DetectorSpec, noise_var: f64, seed: u64) -> Result<FrameOutcome> {
        let p = self.params.params();
        let frame = self.params.frame();
        let (sf, k, nu) = (p.spreading_factor, p.n_users, self.params.n_subbands());
        let n_ofdm = p.frame_ofdm_symbols;
        let n_sym = nu * n_ofdm;

        let mut data_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0));
        let info: Vec<u8> = (0..frame.info_bits).map(|_| data_rng.random_range(0..2u8)).collect();
        let mut coded = match self.params.code() {
            Some(code) => conv_encode(&info, code),
            None => info.clone(),
        };
        coded.resize(frame.grid_bits, 0);
        let user0 = self.constellation.map_bits(&self.interleaver.interleave(&coded)?)?;

        // symbols[s * K + k], s = t * N_u + m.
        let points = self.constellation.points();
        let mut symbols = vec![ZERO; n_sym * k];
        for (s, block) in symbols.chunks_mut(k).enumerate() {
            block[0] = user0[s];
            for d in &mut block[1..] {
                *d = points[data_rng.random_range(0..points.len())];
            }
        }

        let symbol_len = self.modem.symbol_len();
        let mut tx = Vec::with_capacity(n_ofdm * symbol_len);
        let mut chips = vec![ZERO; nu * sf];
        for t in 0..n_ofdm {
            for m in 0..nu {
                let s = t * nu + m;
                self.codes.spread_into(&symbols[s * k..(s + 1) * k], &mut chips[m * sf..(m + 1) * sf])?;
            }
            tx.extend(self.modem.modulate(&self.freq.interleave(&chips)?)?);
        }

        let realization = self.channel.realize(n_ofdm, mix_seed(seed, 1));
        let mut rx = channel::apply(&tx, symbol_len, &realization)?;
        channel::add_awgn(&mut rx, noise_var, &mut ChaCha8Rng::seed_from_u64(mix_seed(seed, 2)))?;

        let mut estimates = Vec::with_capacity(n_sym);
        let mut variances = Vec::with_capacity(n_sym);
        for t in 0..n_ofdm {
            let y = self.freq.deinterleave(&self.modem.demodulate(&rx[t * symbol_len..(t + 1) * symbol_len])?)?;
            let h = self.freq.deinterleave(realization.response(t))?;
            for m in 0..nu {
                let s = t * nu + m;
                let mut problem = SubbandProblem::new(&y[m * sf..(m + 1) * sf], &h[m * sf..(m + 1) * sf], &self.codes, noise_var);
                problem.reference = Some(&symbols[s * k..(s + 1) * k]);
                let (d, var) = detector.detect(&problem, &self.constellation)?.unbiased(0);
                if var.is_finite() {
                    estimates.push(d);
                    variances.push(var.max(VAR_FLOOR));
                } else {
                    estimates.push(ZERO);
                    variances.push(1.0 / VAR_FLOOR);
                }
            }
        }

        let llrs = self.interleaver.deinterleave(&self.constellation.soft_demap(&estimates, &variances)?)?;
        let decoded = match self.params.code() {
            Some(code) => viterbi_decode(&llrs[..frame.encoded_bits], code)?,
            None => llrs.iter().map(|&l| u8::from(l < 0.0)).collect(),
        };
        let bit_errors = info.iter().zip(&decoded).filter(|(a, b)| a != b).count() as u64;
        Ok(FrameOutcome {
            bits: info.len() as u64,
            bit_errors,
        })
    }
}

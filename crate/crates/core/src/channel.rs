//! Tapped-delay-line Rayleigh fading channel, AWGN and Eb/N0 bookkeeping.
//!
//! Each tap is a zero-mean complex Gaussian process built as a sum of
//! sinusoids with Jakes-distributed Doppler shifts and independent
//! complex Gaussian weights, so the marginal of every tap is exactly
//! circular Gaussian (Rayleigh envelope) while consecutive OFDM symbols are
//! correlated as `J0(2 pi f_d tau)` on average. Taps are held constant over
//! one OFDM symbol.
//!
//! Eb/N0 convention: with unitary transforms the noise variance per time
//! sample equals the noise variance per carrier, and the energy spent on
//! one information bit of a user is
//!
//! ```text
//! E_b = E_s * (N + guard) / N / (bits_per_symbol * code_rate)
//! ```
//!
//! so `sigma_n^2 = E_b / (Eb/N0)`. `E_s = 1` is the energy of one user
//! symbol; the transmit power of the whole downlink grows with `K` and does
//! not enter `E_b`. Null carriers carry neither signal nor detected noise and
//! drop out of the ratio.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ofdm::CarrierLayout;
use crate::sysmodel::CheckedParams;
use crate::C64;

/// Speed of light used for the Doppler shift.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Sinusoids per tap in the sum-of-sinusoids fading generator.
const SINUSOIDS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    /// Delay in samples.
    pub delay: usize,
    /// Average linear power, normalized so the profile sums to 1.
    pub power: f64,
}

/// Average power-delay profile with unit total power.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    taps: Vec<Tap>,
}

impl PowerDelayProfile {
    /// Builds a profile from `(delay, power)` pairs and normalizes it.
    pub fn new(taps: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut taps: Vec<Tap> = taps
            .into_iter()
            .map(|(delay, power)| Tap { delay, power })
            .collect();
        if taps.is_empty() {
            return Err(Error::dim("power-delay profile has no taps"));
        }
        if taps.iter().any(|t| !(t.power >= 0.0) || !t.power.is_finite()) {
            return Err(Error::dim("tap powers must be finite and non-negative"));
        }
        let total: f64 = taps.iter().map(|t| t.power).sum();
        if total <= 0.0 {
            return Err(Error::dim("power-delay profile has zero total power"));
        }
        taps.iter_mut().for_each(|t| t.power /= total);
        taps.sort_by_key(|t| t.delay);
        if taps.windows(2).any(|w| w[0].delay == w[1].delay) {
            return Err(Error::dim("duplicate tap delay"));
        }
        Ok(PowerDelayProfile { taps })
    }

    /// Single tap at delay 0.
    pub fn single_tap() -> Self {
        Self::new([(0, 1.0)]).expect("valid")
    }

    /// Four-tap urban-like profile for small desk-scale transforms: delays
    /// 0, 3, 6, 10 samples at 0, -2, -4, -6 dB.
    pub fn desk4() -> Self {
        Self::new([(0, 0.0), (3, -2.0), (6, -4.0), (10, -6.0)].map(|(d, db)| (d, db_to_lin(db))))
            .expect("valid")
    }

    /// Exponentially decaying profile of `n_taps` taps spaced `spacing`
    /// samples apart, with the decay chosen so the RMS delay spread equals
    /// `rms_samples`.
    pub fn exponential(n_taps: usize, spacing: usize, rms_samples: f64) -> Result<Self> {
        if n_taps < 2 || spacing == 0 {
            return Err(Error::dim("exponential profile needs at least two spaced taps"));
        }
        let build = |decay: f64| {
            Self::new((0..n_taps).map(|i| {
                let d = i * spacing;
                (d, (-(d as f64) / decay).exp())
            }))
            .expect("valid")
        };
        let max_rms = {
            // Uniform power is the widest spread this tap grid can reach.
            let uniform = Self::new((0..n_taps).map(|i| (i * spacing, 1.0))).expect("valid");
            uniform.rms_delay_spread()
        };
        if !(rms_samples > 0.0 && rms_samples < max_rms) {
            return Err(Error::dim(format!(
                "RMS delay spread {rms_samples} not reachable with this tap grid"
            )));
        }
        let (mut lo, mut hi): (f64, f64) = (1e-3, 1e6);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if build(mid).rms_delay_spread() < rms_samples {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(build(0.5 * (lo + hi)))
    }

    /// Urban stand-in at 57.6 MHz sampling: 17 exponentially decaying taps,
    /// 6 samples apart (max delay 96 samples), RMS delay spread 250 ns.
    pub fn bran_e_like() -> Self {
        Self::exponential(17, 6, 250e-9 * 57.6e6).expect("reachable")
    }

    /// Parses `delay_samples power_linear` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut taps = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let bad = || Error::config(format!("profile line {}: expected 'delay power'", lineno + 1));
            let delay = fields.next().ok_or_else(bad)?.parse::<usize>().map_err(|_| bad())?;
            let power = fields.next().ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?;
            if fields.next().is_some() {
                return Err(bad());
            }
            taps.push((delay, power));
        }
        Self::new(taps)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn max_delay(&self) -> usize {
        self.taps.last().map(|t| t.delay).unwrap_or(0)
    }

    pub fn mean_delay(&self) -> f64 {
        self.taps.iter().map(|t| t.power * t.delay as f64).sum()
    }

    /// RMS delay spread in samples.
    pub fn rms_delay_spread(&self) -> f64 {
        let mean = self.mean_delay();
        let second: f64 = self.taps.iter().map(|t| t.power * (t.delay as f64).powi(2)).sum();
        (second - mean * mean).max(0.0).sqrt()
    }

    /// Checks that every echo falls inside the cyclic prefix.
    pub fn check_guard(&self, guard_len: usize) -> Result<()> {
        if self.max_delay() > guard_len {
            return Err(Error::dim(format!(
                "maximum tap delay {} exceeds the guard interval of {guard_len} samples",
                self.max_delay()
            )));
        }
        Ok(())
    }
}

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Tap gains of the realization, one vector per OFDM symbol, and the
/// resulting per-carrier frequency response.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    delays: Vec<usize>,
    taps: Vec<Vec<C64>>,
    freq: Vec<Vec<C64>>,
    pub noise_var: f64,
}

impl ChannelRealization {
    pub fn n_symbols(&self) -> usize {
        self.taps.len()
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    /// Complex tap gains during OFDM symbol `symbol`.
    pub fn taps(&self, symbol: usize) -> &[C64] {
        &self.taps[symbol]
    }

    /// Frequency response on the active carriers during OFDM symbol `symbol`.
    pub fn response(&self, symbol: usize) -> &[C64] {
        &self.freq[symbol]
    }
}

/// Whether tap gains fade or stay at `sqrt(power)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    Static,
    Rayleigh,
}

/// A channel model bound to a carrier layout and OFDM symbol period.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pdp: PowerDelayProfile,
    fading: Fading,
    doppler_hz: f64,
    symbol_period: f64,
    // steering[c * n_taps + i] = exp(-j 2 pi bin_c delay_i / N)
    steering: Vec<C64>,
    n_carriers: usize,
    fft_size: usize,
    bins: Vec<usize>,
}

impl ChannelModel {
    pub fn new(
        pdp: PowerDelayProfile,
        fading: Fading,
        doppler_hz: f64,
        symbol_period: f64,
        layout: &CarrierLayout,
    ) -> Self {
        let n = layout.fft_size() as f64;
        let steering = layout
            .indices()
            .iter()
            .flat_map(|&bin| {
                pdp.taps()
                    .iter()
                    .map(move |t| C64::from_polar(1.0, -2.0 * PI * ((bin * t.delay) as f64 % n) / n))
            })
            .collect();
        ChannelModel {
            fading,
            doppler_hz,
            symbol_period,
            steering,
            n_carriers: layout.len(),
            fft_size: layout.fft_size(),
            bins: layout.indices().to_vec(),
            pdp,
        }
    }

    pub fn pdp(&self) -> &PowerDelayProfile {
        &self.pdp
    }

    pub fn fading(&self) -> Fading {
        self.fading
    }

    pub fn doppler_hz(&self) -> f64 {
        self.doppler_hz
    }

    /// Draws a realization covering `n_symbols` OFDM symbols.
    pub fn realize(&self, n_symbols: usize, seed: u64) -> ChannelRealization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_taps = self.pdp.taps().len();
        let mut taps = vec![vec![C64::new(0.0, 0.0); n_taps]; n_symbols];
        match self.fading {
            Fading::Static => {
                for sym in taps.iter_mut() {
                    for (g, t) in sym.iter_mut().zip(self.pdp.taps()) {
                        *g = C64::new(t.power.sqrt(), 0.0);
                    }
                }
            }
            Fading::Rayleigh => {
                for (i, tap) in self.pdp.taps().iter().enumerate() {
                    let theta: f64 = rng.random_range(-PI..PI);
                    let weights: Vec<C64> = (0..SINUSOIDS).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
                    let shifts: Vec<f64> = (0..SINUSOIDS)
                        .map(|m| {
                            let alpha = (2.0 * PI * m as f64 - PI + theta) / SINUSOIDS as f64;
                            2.0 * PI * self.doppler_hz * alpha.cos()
                        })
                        .collect();
                    let amp = (tap.power / SINUSOIDS as f64).sqrt();
                    for (s, sym) in taps.iter_mut().enumerate() {
                        let t = s as f64 * self.symbol_period;
                        let g: C64 = weights
                            .iter()
                            .zip(&shifts)
                            .map(|(w, f)| w * C64::from_polar(1.0, f * t))
                            .sum();
                        sym[i] = g * amp;
                    }
                }
            }
        }
        let freq = taps.iter().map(|g| self.response_of(g)).collect();
        let realization = ChannelRealization {
            delays: self.pdp.taps().iter().map(|t| t.delay).collect(),
            taps,
            freq,
            noise_var: 0.0,
        };
        #[cfg(debug_assertions)]
        self.debug_check_response(&realization);
        realization
    }

    fn response_of(&self, gains: &[C64]) -> Vec<C64> {
        let n_taps = gains.len();
        (0..self.n_carriers)
            .map(|c| {
                self.steering[c * n_taps..(c + 1) * n_taps]
                    .iter()
                    .zip(gains)
                    .map(|(s, g)| s * g)
                    .sum()
            })
            .collect()
    }

    #[cfg(debug_assertions)]
    fn debug_check_response(&self, realization: &ChannelRealization) {
        let mut planner = rustfft::FftPlanner::new();
        let fft = planner.plan_fft_forward(self.fft_size);
        for s in 0..realization.n_symbols() {
            let mut impulse = vec![C64::new(0.0, 0.0); self.fft_size];
            for (&d, &g) in realization.delays.iter().zip(realization.taps(s)) {
                impulse[d % self.fft_size] += g;
            }
            fft.process(&mut impulse);
            for (&bin, h) in self.bins.iter().zip(realization.response(s)) {
                debug_assert!((impulse[bin] - h).norm() < 1e-9, "frequency response export");
            }
        }
    }
}

/// Circular complex Gaussian sample with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Passes a frame of OFDM symbols (each `symbol_len` samples) through the
/// channel. Each input sample is filtered with the taps of the symbol it
/// belongs to; echoes spill into the next symbol's prefix. Noise is added
/// separately by [`add_awgn`].
pub fn apply(samples: &[C64], symbol_len: usize, realization: &ChannelRealization) -> Result<Vec<C64>> {
    Error::check_len(realization.n_symbols() * symbol_len, samples.len())?;
    let mut out = vec![C64::new(0.0, 0.0); samples.len()];
    for (n, &x) in samples.iter().enumerate() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        let gains = realization.taps(n / symbol_len);
        for (&d, &g) in realization.delays.iter().zip(gains) {
            if let Some(o) = out.get_mut(n + d) {
                *o += g * x;
            }
        }
    }
    Ok(out)
}

/// Adds i.i.d. circular complex Gaussian noise of variance `noise_var` per
/// complex sample.
pub fn add_awgn<R: Rng + ?Sized>(samples: &mut [C64], noise_var: f64, rng: &mut R) -> Result<()> {
    if !(noise_var >= 0.0) || !noise_var.is_finite() {
        return Err(Error::Argument(format!("noise variance {noise_var} must be >= 0")));
    }
    if noise_var == 0.0 {
        return Ok(());
    }
    for s in samples.iter_mut() {
        *s += complex_gaussian(rng, noise_var);
    }
    Ok(())
}

/// Seeded convenience wrapper around [`add_awgn`].
pub fn add_awgn_seeded(samples: &mut [C64], noise_var: f64, seed: u64) -> Result<()> {
    add_awgn(samples, noise_var, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Noise variance per complex sample for a given Eb/N0 (see module docs).
pub fn ebn0_to_noisevar(ebn0_db: f64, params: &CheckedParams) -> f64 {
    let p = params.params();
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    let guard_factor = (p.fft_size + p.guard_len) as f64 / p.fft_size as f64;
    let bits = p.modulation.bits_per_symbol() as f64 * p.code_rate.value();
    SYMBOL_ENERGY * guard_factor / (bits * ebn0)
}

/// Energy of one user symbol.
pub const SYMBOL_ENERGY: f64 = 1.0;

/// Per-carrier SNR `E_s (K / S_F) / sigma_n^2` seen by a single-user
/// equalizer. Infinite for a noiseless channel.
pub fn per_carrier_snr(noise_var: f64, n_users: usize, spreading_factor: usize) -> f64 {
    SYMBOL_ENERGY * n_users as f64 / spreading_factor as f64 / noise_var
}

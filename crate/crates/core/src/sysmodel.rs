//! System configuration, derived dimensions, frame layout and the flat
//! `key = value` configuration format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::channel::{ChannelModel, Fading, PowerDelayProfile, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::fec::ConvCode;
use crate::mapping::Modulation;
use crate::ofdm::CarrierLayout;
use crate::spreading::CodeAssignment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeRate {
    Uncoded,
    Half,
    ThreeQuarters,
}

impl CodeRate {
    pub fn value(self) -> f64 {
        match self {
            CodeRate::Uncoded => 1.0,
            CodeRate::Half => 0.5,
            CodeRate::ThreeQuarters => 0.75,
        }
    }

    /// The convolutional code used for this rate, `None` when uncoded.
    pub fn code(self) -> Option<ConvCode> {
        match self {
            CodeRate::Uncoded => None,
            CodeRate::Half => Some(ConvCode::umts_rate_half()),
            CodeRate::ThreeQuarters => Some(ConvCode::umts_rate_three_quarters()),
        }
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeRate::Uncoded => "uncoded",
            CodeRate::Half => "1/2",
            CodeRate::ThreeQuarters => "3/4",
        })
    }
}

impl FromStr for CodeRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uncoded" | "none" | "1" => Ok(CodeRate::Uncoded),
            "1/2" | "0.5" => Ok(CodeRate::Half),
            "3/4" | "0.75" => Ok(CodeRate::ThreeQuarters),
            _ => Err(Error::config(format!("unsupported code rate '{s}'"))),
        }
    }
}

/// Propagation model selection.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    /// Single static unit tap: pure AWGN.
    Awgn,
    /// Single Rayleigh-fading tap.
    FlatRayleigh,
    /// Four-tap fading profile for the desk preset.
    Desk4,
    /// 17-tap exponential urban profile.
    BranELike,
    /// Fading profile loaded from a `delay power` file.
    File(PathBuf),
}

impl ChannelSpec {
    pub fn profile(&self) -> Result<PowerDelayProfile> {
        Ok(match self {
            ChannelSpec::Awgn | ChannelSpec::FlatRayleigh => PowerDelayProfile::single_tap(),
            ChannelSpec::Desk4 => PowerDelayProfile::desk4(),
            ChannelSpec::BranELike => PowerDelayProfile::bran_e_like(),
            ChannelSpec::File(p) => PowerDelayProfile::load(p)?,
        })
    }

    pub fn fading(&self) -> Fading {
        match self {
            ChannelSpec::Awgn => Fading::Static,
            _ => Fading::Rayleigh,
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::Awgn => f.write_str("awgn"),
            ChannelSpec::FlatRayleigh => f.write_str("flat_rayleigh"),
            ChannelSpec::Desk4 => f.write_str("desk4"),
            ChannelSpec::BranELike => f.write_str("bran_e_like"),
            ChannelSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "awgn" => ChannelSpec::Awgn,
            "flat_rayleigh" | "flat" => ChannelSpec::FlatRayleigh,
            "desk4" => ChannelSpec::Desk4,
            "bran_e_like" | "bran_e" => ChannelSpec::BranELike,
            "" => return Err(Error::config("empty channel name")),
            path => ChannelSpec::File(PathBuf::from(path)),
        })
    }
}

/// Full static configuration of one simulated link.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// IFFT/FFT points `N`.
    pub fft_size: usize,
    /// Modulated carriers `N_c`.
    pub n_carriers: usize,
    /// Chips per symbol `S_F`.
    pub spreading_factor: usize,
    /// Active codes `K`.
    pub n_users: usize,
    /// Cyclic prefix length in samples.
    pub guard_len: usize,
    /// Sampling frequency in Hz.
    pub sampling_freq: f64,
    pub modulation: Modulation,
    pub code_rate: CodeRate,
    pub frame_ofdm_symbols: usize,
    /// Carrier frequency in Hz, only used for the Doppler shift.
    pub carrier_freq: f64,
    /// Terminal speed in m/s.
    pub velocity: f64,
    pub seed: u64,
    pub channel: ChannelSpec,
    pub code_assignment: CodeAssignment,
}

impl SystemParams {
    /// Full-scale setup: N = 1024, 736 carriers, S_F = 32, 216-sample guard,
    /// 57.6 MHz, 30 OFDM symbols per frame, 60 km/h.
    pub fn paper() -> Self {
        SystemParams {
            fft_size: 1024,
            n_carriers: 736,
            spreading_factor: 32,
            n_users: 32,
            guard_len: 216,
            sampling_freq: 57.6e6,
            modulation: Modulation::Qpsk,
            code_rate: CodeRate::Half,
            frame_ofdm_symbols: 30,
            carrier_freq: 5.0e9,
            velocity: 60.0 / 3.6,
            seed: 1,
            channel: ChannelSpec::BranELike,
            code_assignment: CodeAssignment::Natural,
        }
    }

    /// Small setup for fast runs: N = 64, 32 carriers, S_F = 8, 16-sample
    /// guard, 8 OFDM symbols per frame, four-tap fading profile.
    pub fn desk() -> Self {
        SystemParams {
            fft_size: 64,
            n_carriers: 32,
            spreading_factor: 8,
            n_users: 8,
            guard_len: 16,
            frame_ofdm_symbols: 8,
            channel: ChannelSpec::Desk4,
            ..Self::paper()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            _ => Err(Error::config(format!("unknown preset '{name}'"))),
        }
    }

    /// Checks the invariants and computes derived quantities.
    pub fn validate(self) -> Result<CheckedParams> {
        CheckedParams::new(self)
    }

    /// Doppler shift `v f_c / c` in Hz.
    pub fn doppler_hz(&self) -> f64 {
        self.velocity * self.carrier_freq / SPEED_OF_LIGHT
    }

    /// Overrides fields from a parsed configuration; consumed keys are
    /// removed from `config`.
    pub fn apply_config(&mut self, config: &mut ConfigMap) -> Result<()> {
        macro_rules! take {
            ($key:literal, $field:expr) => {
                if let Some(v) = config.take($key) {
                    $field = v.parse_as($key)?;
                }
            };
        }
        take!("fft_size", self.fft_size);
        take!("n_carriers", self.n_carriers);
        take!("spreading_factor", self.spreading_factor);
        take!("n_users", self.n_users);
        take!("guard_len", self.guard_len);
        take!("sampling_freq", self.sampling_freq);
        take!("modulation", self.modulation);
        take!("code_rate", self.code_rate);
        take!("frame_ofdm_symbols", self.frame_ofdm_symbols);
        take!("carrier_freq", self.carrier_freq);
        take!("velocity", self.velocity);
        take!("seed", self.seed);
        take!("channel", self.channel);
        if let Some(v) = config.take("code_assignment") {
            self.code_assignment = match v.value.as_str() {
                "natural" => CodeAssignment::Natural,
                "random" => CodeAssignment::Random { seed: self.seed },
                other => {
                    return Err(Error::config(format!(
                        "line {}: code_assignment must be 'natural' or 'random', got '{other}'",
                        v.line
                    )))
                }
            };
        }
        Ok(())
    }

    /// Serializes to the `key = value` format understood by [`ConfigMap`].
    pub fn to_config_string(&self) -> String {
        let assignment = match self.code_assignment {
            CodeAssignment::Natural => "natural",
            CodeAssignment::Random { .. } => "random",
        };
        format!(
            "fft_size = {}\nn_carriers = {}\nspreading_factor = {}\nn_users = {}\nguard_len = {}\n\
             sampling_freq = {}\nmodulation = {}\ncode_rate = {}\nframe_ofdm_symbols = {}\n\
             carrier_freq = {}\nvelocity = {}\nseed = {}\nchannel = {}\ncode_assignment = {}\n",
            self.fft_size,
            self.n_carriers,
            self.spreading_factor,
            self.n_users,
            self.guard_len,
            self.sampling_freq,
            self.modulation,
            self.code_rate,
            self.frame_ofdm_symbols,
            self.carrier_freq,
            self.velocity,
            self.seed,
            self.channel,
            assignment
        )
    }
}

/// Bit budget of one user in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    /// Information bits per user per frame.
    pub info_bits: usize,
    /// Punctured, terminated codeword length.
    pub encoded_bits: usize,
    /// Zero bits appended after the codeword to fill the grid.
    pub pad_bits: usize,
    /// Bits the symbol grid carries: `N_u * frame_ofdm_symbols * bits_per_symbol`.
    pub grid_bits: usize,
}

/// Parameters that passed validation, with derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedParams {
    params: SystemParams,
    n_subbands: usize,
    frame: FrameLayout,
    code: Option<ConvCode>,
}

impl CheckedParams {
    fn new(params: SystemParams) -> Result<Self> {
        let p = &params;
        if p.fft_size == 0 || p.n_carriers == 0 || p.spreading_factor == 0 || p.frame_ofdm_symbols == 0 {
            return Err(Error::dim("sizes must be positive"));
        }
        if p.n_carriers >= p.fft_size {
            return Err(Error::dim(format!(
                "N_c = {} must be below N = {} (DC stays empty)",
                p.n_carriers, p.fft_size
            )));
        }
        if !p.n_carriers.is_multiple_of(p.spreading_factor) {
            return Err(Error::dim(format!(
                "S_F = {} does not divide N_c = {}",
                p.spreading_factor, p.n_carriers
            )));
        }
        if !p.spreading_factor.is_power_of_two() {
            return Err(Error::dim(format!("S_F = {} is not a power of two", p.spreading_factor)));
        }
        if p.n_users == 0 || p.n_users > p.spreading_factor {
            return Err(Error::dim(format!(
                "need 1 <= K <= S_F, got K = {} with S_F = {}",
                p.n_users, p.spreading_factor
            )));
        }
        if p.guard_len >= p.fft_size {
            return Err(Error::dim(format!(
                "guard length {} must be below N = {}",
                p.guard_len, p.fft_size
            )));
        }
        if !(p.sampling_freq > 0.0) || !(p.carrier_freq >= 0.0) || !(p.velocity >= 0.0) {
            return Err(Error::dim("frequencies and velocity must be non-negative"));
        }
        let n_subbands = p.n_carriers / p.spreading_factor;
        let grid_bits = n_subbands * p.frame_ofdm_symbols * p.modulation.bits_per_symbol();
        let code = p.code_rate.code();
        let frame = match &code {
            None => FrameLayout {
                info_bits: grid_bits,
                encoded_bits: grid_bits,
                pad_bits: 0,
                grid_bits,
            },
            Some(code) => {
                // encoded_len is increasing in the message length.
                let mut info_bits = ((grid_bits as f64 * code.rate()) as usize).saturating_sub(code.tail_len());
                while info_bits > 0 && code.encoded_len(info_bits) > grid_bits {
                    info_bits -= 1;
                }
                while code.encoded_len(info_bits + 1) <= grid_bits {
                    info_bits += 1;
                }
                if info_bits == 0 {
                    return Err(Error::dim(format!(
                        "a frame of {grid_bits} coded bits cannot hold any information bit"
                    )));
                }
                let encoded_bits = code.encoded_len(info_bits);
                FrameLayout {
                    info_bits,
                    encoded_bits,
                    pad_bits: grid_bits - encoded_bits,
                    grid_bits,
                }
            }
        };
        Ok(CheckedParams {
            params,
            n_subbands,
            frame,
            code,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// `N_u = N_c / S_F`.
    pub fn n_subbands(&self) -> usize {
        self.n_subbands
    }

    pub fn frame(&self) -> &FrameLayout {
        &self.frame
    }

    pub fn code(&self) -> Option<&ConvCode> {
        self.code.as_ref()
    }

    /// User symbols per frame, `N_u * frame_ofdm_symbols`.
    pub fn symbols_per_frame(&self) -> usize {
        self.n_subbands * self.params.frame_ofdm_symbols
    }

    pub fn carrier_layout(&self) -> CarrierLayout {
        CarrierLayout::symmetric(self.params.fft_size, self.params.n_carriers).expect("validated")
    }

    /// OFDM symbol duration including the guard, in seconds.
    pub fn symbol_period(&self) -> f64 {
        (self.params.fft_size + self.params.guard_len) as f64 / self.params.sampling_freq
    }

    /// Channel model for this configuration. Fails if the profile cannot be
    /// loaded or an echo exceeds the guard interval.
    pub fn channel_model(&self) -> Result<ChannelModel> {
        let pdp = self.params.channel.profile()?;
        pdp.check_guard(self.params.guard_len)?;
        Ok(ChannelModel::new(
            pdp,
            self.params.channel.fading(),
            self.params.doppler_hz(),
            self.symbol_period(),
            &self.carrier_layout(),
        ))
    }

    /// Same configuration with a different number of active users.
    pub fn with_users(&self, n_users: usize) -> Result<Self> {
        let mut p = self.params.clone();
        p.n_users = n_users;
        p.validate()
    }
}

/// A value from the configuration file with its line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigValue {
    pub value: String,
    pub line: usize,
}

impl ConfigValue {
    pub fn parse_as<T: FromStr>(&self, key: &str) -> Result<T> {
        self.value.parse().map_err(|_| {
            Error::config(format!("line {}: cannot parse '{}' for {key}", self.line, self.value))
        })
    }
}

/// Parsed `key = value` file. `#` starts a comment; blank lines are skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    entries: BTreeMap<String, ConfigValue>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected 'key = value'", i + 1)))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::config(format!("line {}: empty key", i + 1)));
            }
            let entry = ConfigValue {
                value: value.trim().to_string(),
                line: i + 1,
            };
            if entries.insert(key.clone(), entry).is_some() {
                return Err(Error::config(format!("line {}: duplicate key '{key}'", i + 1)));
            }
        }
        Ok(ConfigMap { entries })
    }

    pub fn take(&mut self, key: &str) -> Option<ConfigValue> {
        self.entries.remove(key)
    }

    /// Errors if any key was not consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, v)) => Err(Error::config(format!("line {}: unknown key '{key}'", v.line))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_defaults_validate() {
        let c = SystemParams::paper().validate().unwrap();
        assert_eq!(c.n_subbands(), 23);
        assert_eq!(c.frame().grid_bits, 23 * 30 * 2);
        assert_eq!(c.frame().encoded_bits + c.frame().pad_bits, 1380);
        let code = c.code().unwrap();
        assert!(code.encoded_len(c.frame().info_bits + 1) > 1380);
        // 60 km/h at 5 GHz.
        assert!((c.params().doppler_hz() - 277.9).abs() < 0.1);
    }

    #[test]
    fn small_dimensions() {
        let mut p = SystemParams::desk();
        p.fft_size = 16;
        p.n_carriers = 8;
        p.spreading_factor = 8;
        p.n_users = 2;
        p.guard_len = 4;
        p.code_rate = CodeRate::Uncoded;
        assert_eq!(p.validate().unwrap().n_subbands(), 1);
        let d = SystemParams::desk().validate().unwrap();
        assert_eq!(d.n_subbands(), 4);
        assert_eq!(d.frame().info_bits, 24);
        assert_eq!(d.frame().pad_bits, 0);
    }

    #[test]
    fn invariant_violations() {
        let mut p = SystemParams::desk();
        p.n_carriers = 10;
        p.spreading_factor = 4;
        p.n_users = 2;
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("does not divide"), "{err}");
        let mut p = SystemParams::desk();
        p.n_users = 9;
        assert!(p.validate().is_err());
        let mut p = SystemParams::desk();
        p.n_users = 0;
        assert!(p.validate().is_err());
        let mut p = SystemParams::desk();
        p.guard_len = 64;
        assert!(p.validate().is_err());
    }

    #[test]
    fn derived_quantities_are_pure() {
        let a = SystemParams::paper().validate().unwrap();
        let b = SystemParams::paper().validate().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn three_quarter_rate_layout_pads() {
        let mut p = SystemParams::desk();
        p.code_rate = CodeRate::ThreeQuarters;
        p.modulation = Modulation::Qam16;
        let c = p.validate().unwrap();
        let f = c.frame();
        assert_eq!(f.grid_bits, 128);
        assert_eq!(f.encoded_bits + f.pad_bits, 128);
        assert!(c.code().unwrap().encoded_len(f.info_bits) <= 128);
        assert!(c.code().unwrap().encoded_len(f.info_bits + 1) > 128);
    }

    #[test]
    fn config_roundtrip_and_errors() {
        let mut p = SystemParams::paper();
        p.n_users = 16;
        p.modulation = Modulation::Qam16;
        p.code_rate = CodeRate::ThreeQuarters;
        p.channel = ChannelSpec::File(PathBuf::from("/tmp/x.pdp"));
        let text = p.to_config_string();
        let mut map = ConfigMap::parse(&text).unwrap();
        let mut q = SystemParams::desk();
        q.apply_config(&mut map).unwrap();
        map.finish().unwrap();
        assert_eq!(p, q);

        let mut map = ConfigMap::parse("# c\nn_users = 4 # trailing\n\nbogus = 1\n").unwrap();
        let mut q = SystemParams::desk();
        q.apply_config(&mut map).unwrap();
        assert_eq!(q.n_users, 4);
        assert!(map.finish().unwrap_err().to_string().contains("bogus"));
        assert!(ConfigMap::parse("n_users 4").is_err());
        assert!(ConfigMap::parse("a = 1\na = 2").is_err());
        let mut map = ConfigMap::parse("n_users = four").unwrap();
        assert!(SystemParams::desk().apply_config(&mut map).is_err());
    }
}

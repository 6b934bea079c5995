//! Per-sub-band single-user and multi-user detectors.
//!
//! Every detector works on one sub-band, `y = H C d + n`, where `H` holds
//! the `S_F` channel gains of the sub-band's carriers (after frequency
//! deinterleaving) and `C` is the `S_F x K` code matrix. It returns the `K`
//! symbol estimates together with the desired-symbol gain and the variance
//! of everything else (noise plus residual multiple-access interference)
//! so the demapper can compute LLRs from `d_hat / gain`.
//!
//! Single-user equalizers use the per-carrier SNR
//! `gamma_c = E_s (K / S_F) / sigma_n^2`, i.e. the chip energy of the
//! downlink sum signal over the noise variance.

mod cancel;
pub mod freeprob;
mod linear;
mod poly;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mapping::Constellation;
use crate::spreading::CodeMatrix;
use crate::C64;

pub use cancel::{pic, sic};
pub use linear::{
    egc, equalizer_gains, gmmse, mmsec, mrc, post_detection_noise_var, LinearFilter, LinearStats,
};
pub use poly::{poly_coefficients, poly_gmmse, PolyCoefficients};

/// One sub-band detection problem.
#[derive(Debug, Clone, Copy)]
pub struct SubbandProblem<'a> {
    /// `S_F` received chips.
    pub y: &'a [C64],
    /// `S_F` channel gains, the diagonal of `H_m`.
    pub h: &'a [C64],
    pub codes: &'a CodeMatrix,
    /// Noise variance per chip.
    pub noise_var: f64,
    /// Symbol energy.
    pub es: f64,
    /// Transmitted symbols, only read by genie interference cancellation.
    pub reference: Option<&'a [C64]>,
}

impl<'a> SubbandProblem<'a> {
    pub fn new(y: &'a [C64], h: &'a [C64], codes: &'a CodeMatrix, noise_var: f64) -> Self {
        SubbandProblem {
            y,
            h,
            codes,
            noise_var,
            es: 1.0,
            reference: None,
        }
    }

    pub fn spreading_factor(&self) -> usize {
        self.codes.spreading_factor()
    }

    pub fn n_users(&self) -> usize {
        self.codes.n_users()
    }

    /// `1 / gamma_c` for a signal made of `n_users` codes.
    pub fn inverse_snr(&self, n_users: usize) -> f64 {
        self.noise_var * self.spreading_factor() as f64 / (self.es * n_users as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let sf = self.spreading_factor();
        Error::check_len(sf, self.y.len())?;
        Error::check_len(sf, self.h.len())?;
        if let Some(r) = self.reference {
            Error::check_len(self.n_users(), r.len())?;
        }
        if !(self.noise_var >= 0.0) || !self.noise_var.is_finite() {
            return Err(Error::Argument(format!("noise variance {} must be >= 0", self.noise_var)));
        }
        if !(self.es > 0.0) {
            return Err(Error::Argument(format!("symbol energy {} must be > 0", self.es)));
        }
        Ok(())
    }

    /// Same channel and noise with a different received vector and codes.
    pub(crate) fn with(&self, y: &'a [C64], codes: &'a CodeMatrix) -> Self {
        SubbandProblem { y, codes, reference: None, ..*self }
    }
}

/// Symbol estimates of one sub-band.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Raw estimates `d_hat_k`.
    pub d_hat: Vec<C64>,
    /// Variance of noise plus residual interference in `d_hat_k`.
    pub noise_var: Vec<f64>,
    /// Desired-symbol gain: `d_hat_k = gain_k d_k + error`. 1 for the
    /// normalized detectors.
    pub gain: Vec<f64>,
}

impl DetectionResult {
    /// Unit-gain estimate and its error variance for user `k`. A user with
    /// no usable signal comes back as `(0, inf)`.
    pub fn unbiased(&self, k: usize) -> (C64, f64) {
        let g = self.gain[k];
        if g.abs() > 1e-12 {
            (self.d_hat[k] / g, self.noise_var[k] / (g * g))
        } else {
            (C64::new(0.0, 0.0), f64::INFINITY)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Egc,
    Mmsec,
    Gmmse,
    PolyGmmse,
    Pic,
    Sic,
}

/// How polynomial-GMMSE coefficients are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolyMode {
    /// Minimize the actual MSE for this channel and these codes.
    ExactMse,
    /// Use large-system moments that depend only on the channel gain
    /// moments and the load `K / S_F`.
    Asymptotic,
}

/// Symbol decisions inside the cancellation loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    /// Nearest constellation point.
    Hard,
    /// Component-wise clip to the constellation's bounding square.
    Soft,
}

impl Decision {
    pub fn apply(self, constellation: &Constellation, y: C64) -> C64 {
        match self {
            Decision::Hard => constellation.hard_decision(y),
            Decision::Soft => constellation.soft_clip(y),
        }
    }
}

/// Per-carrier single-user equalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Equalizer {
    /// Equal gain combining, `g = H* / |H|`.
    Egc,
    /// MMSE combining with per-sub-band normalization.
    Mmsec,
    /// Maximum ratio combining, normalized to unit desired gain.
    Mrc,
}

/// Detector selection and options.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DetectorSpec {
    pub kind: DetectorKind,
    /// Polynomial order `L` (number of terms).
    pub poly_order: usize,
    pub poly_mode: PolyMode,
    /// PIC: total stages including the initial one. SIC: maximum number of
    /// cancellations; values of `K - 1` or more cancel every user.
    pub stages: usize,
    pub decision: Decision,
    /// Equalizer per stage; the last entry is reused for later stages.
    pub stage_equalizer: Vec<Equalizer>,
    /// Replace the cancellation decisions with the transmitted symbols.
    pub genie: bool,
}

/// Default PIC stages: the initial stage plus one cancellation stage.
pub const DEFAULT_PIC_STAGES: usize = 2;
/// Default SIC depth: enough for a full pass at any spreading factor used here.
pub const DEFAULT_SIC_STAGES: usize = 1024;
pub const DEFAULT_POLY_ORDER: usize = 3;

impl DetectorSpec {
    pub fn new(kind: DetectorKind) -> Self {
        DetectorSpec {
            kind,
            poly_order: DEFAULT_POLY_ORDER,
            poly_mode: PolyMode::ExactMse,
            stages: match kind {
                DetectorKind::Sic => DEFAULT_SIC_STAGES,
                DetectorKind::Pic => DEFAULT_PIC_STAGES,
                _ => 1,
            },
            decision: Decision::Hard,
            stage_equalizer: vec![Equalizer::Mmsec],
            genie: false,
        }
    }

    pub fn egc() -> Self {
        Self::new(DetectorKind::Egc)
    }

    pub fn mmsec() -> Self {
        Self::new(DetectorKind::Mmsec)
    }

    pub fn gmmse() -> Self {
        Self::new(DetectorKind::Gmmse)
    }

    pub fn poly(order: usize, mode: PolyMode) -> Self {
        DetectorSpec {
            poly_order: order,
            poly_mode: mode,
            ..Self::new(DetectorKind::PolyGmmse)
        }
    }

    pub fn pic(stages: usize, decision: Decision) -> Self {
        DetectorSpec {
            stages,
            decision,
            ..Self::new(DetectorKind::Pic)
        }
    }

    pub fn sic(decision: Decision) -> Self {
        DetectorSpec {
            decision,
            ..Self::new(DetectorKind::Sic)
        }
    }

    pub fn with_genie(mut self) -> Self {
        self.genie = true;
        self
    }

    pub fn with_equalizers(mut self, eq: Vec<Equalizer>) -> Self {
        self.stage_equalizer = eq;
        self
    }

    /// Equalizer used at stage `stage`.
    pub fn equalizer(&self, stage: usize) -> Equalizer {
        let i = stage.min(self.stage_equalizer.len().saturating_sub(1));
        self.stage_equalizer.get(i).copied().unwrap_or(Equalizer::Mmsec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.poly_order == 0 {
            return Err(Error::config("polynomial order must be >= 1"));
        }
        if self.stages == 0 {
            return Err(Error::config("stage count must be >= 1"));
        }
        if self.stage_equalizer.is_empty() {
            return Err(Error::config("at least one stage equalizer is required"));
        }
        if self.genie && !matches!(self.kind, DetectorKind::Pic | DetectorKind::Sic) {
            return Err(Error::config("genie decisions only apply to PIC and SIC"));
        }
        Ok(())
    }

    /// Runs the configured detector on one sub-band.
    pub fn detect(&self, problem: &SubbandProblem<'_>, constellation: &Constellation) -> Result<DetectionResult> {
        problem.validate()?;
        match self.kind {
            DetectorKind::Egc => egc(problem),
            DetectorKind::Mmsec => mmsec(problem),
            DetectorKind::Gmmse => gmmse(problem),
            DetectorKind::PolyGmmse => poly_gmmse(problem, self.poly_order, self.poly_mode),
            DetectorKind::Pic => pic(problem, self, constellation),
            DetectorKind::Sic => sic(problem, self, constellation),
        }
    }
}

fn eq_name(e: Equalizer) -> &'static str {
    match e {
        Equalizer::Egc => "egc",
        Equalizer::Mmsec => "mmsec",
        Equalizer::Mrc => "mrc",
    }
}

impl fmt::Display for DetectorSpec {
    /// Canonical identifier, also used as the `detector` CSV column. Only
    /// `:` separates fields so the id never needs CSV quoting.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let decision = match self.decision {
            Decision::Hard => "hard",
            Decision::Soft => "soft",
        };
        let eqs: Vec<&str> = self.stage_equalizer.iter().map(|&e| eq_name(e)).collect();
        match self.kind {
            DetectorKind::Egc => f.write_str("egc"),
            DetectorKind::Mmsec => f.write_str("mmsec"),
            DetectorKind::Gmmse => f.write_str("gmmse"),
            DetectorKind::PolyGmmse => {
                let mode = match self.poly_mode {
                    PolyMode::ExactMse => "exact",
                    PolyMode::Asymptotic => "asym",
                };
                write!(f, "poly:L={}:mode={mode}", self.poly_order)
            }
            DetectorKind::Pic | DetectorKind::Sic => {
                let name = if self.kind == DetectorKind::Pic { "pic" } else { "sic" };
                write!(f, "{name}:stages={}:decision={decision}:eq={}", self.stages, eqs.join("+"))?;
                if self.genie {
                    f.write_str(":genie")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for DetectorSpec {
    type Err = Error;

    /// Parses `kind[:key=value]*`, e.g. `pic:stages=3:decision=soft`,
    /// `poly:L=4:mode=asym` or `sic:eq=mmsec`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let kind = match parts.next().unwrap_or("").to_ascii_lowercase().as_str() {
            "egc" => DetectorKind::Egc,
            "mmsec" => DetectorKind::Mmsec,
            "gmmse" => DetectorKind::Gmmse,
            "poly" | "poly_gmmse" | "pgmmse" => DetectorKind::PolyGmmse,
            "pic" => DetectorKind::Pic,
            "sic" => DetectorKind::Sic,
            other => return Err(Error::config(format!("unknown detector '{other}'"))),
        };
        let mut spec = DetectorSpec::new(kind);
        for opt in parts {
            let (key, value) = opt.split_once('=').unwrap_or((opt, ""));
            let bad = || Error::config(format!("detector '{s}': bad option '{opt}'"));
            match key.to_ascii_lowercase().as_str() {
                "l" | "order" => spec.poly_order = value.parse().map_err(|_| bad())?,
                "mode" => {
                    spec.poly_mode = match value {
                        "exact" | "exact_mse" => PolyMode::ExactMse,
                        "asym" | "asymptotic" => PolyMode::Asymptotic,
                        _ => return Err(bad()),
                    }
                }
                "stages" => {
                    spec.stages = if value == "full" {
                        DEFAULT_SIC_STAGES
                    } else {
                        value.parse().map_err(|_| bad())?
                    }
                }
                "decision" => {
                    spec.decision = match value {
                        "hard" => Decision::Hard,
                        "soft" => Decision::Soft,
                        _ => return Err(bad()),
                    }
                }
                "eq" => {
                    spec.stage_equalizer = value
                        .split('+')
                        .map(|e| match e {
                            "egc" => Ok(Equalizer::Egc),
                            "mmsec" => Ok(Equalizer::Mmsec),
                            "mrc" => Ok(Equalizer::Mrc),
                            _ => Err(bad()),
                        })
                        .collect::<Result<_>>()?
                }
                "genie" if value.is_empty() => spec.genie = true,
                _ => return Err(bad()),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

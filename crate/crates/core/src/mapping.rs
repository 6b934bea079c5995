//! Gray-mapped QPSK / 16-QAM constellations and max-log soft demapping.
//!
//! Mapping tables (unit average energy):
//!
//! * QPSK, bits `(b0, b1)`: `((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`, so `00`
//!   maps to `(1 + j) / sqrt(2)`.
//! * 16-QAM, bits `(b0, b1)` on the in-phase rail and `(b2, b3)` on the
//!   quadrature rail. Each rail uses level `(1 - 2 a) * (1 + 2 b)`, giving
//!   the Gray sequence `10 -> -1`, `11 -> -3`, `00 -> +1`, `01 -> +3`,
//!   scaled by `1 / sqrt(10)`.
//!
//! LLRs are positive when bit 0 is more likely.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "QAM16",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace(['-', '_'], "").as_str() {
            "QPSK" | "4QAM" => Ok(Modulation::Qpsk),
            "QAM16" | "16QAM" => Ok(Modulation::Qam16),
            _ => Err(Error::config(format!("unknown modulation '{s}'"))),
        }
    }
}

/// A labelled constellation. `points[label]` is the symbol for the bit
/// pattern whose first bit is the most significant bit of `label`.
#[derive(Debug, Clone)]
pub struct Constellation {
    modulation: Modulation,
    points: Vec<C64>,
    max_level: f64,
}

fn rail_level(a: u8, b: u8) -> f64 {
    (1.0 - 2.0 * a as f64) * (1.0 + 2.0 * b as f64)
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let bps = modulation.bits_per_symbol();
        let points: Vec<C64> = (0..1usize << bps)
            .map(|label| {
                let bit = |i: usize| ((label >> (bps - 1 - i)) & 1) as u8;
                match modulation {
                    Modulation::Qpsk => {
                        C64::new(1.0 - 2.0 * bit(0) as f64, 1.0 - 2.0 * bit(1) as f64)
                            / 2f64.sqrt()
                    }
                    Modulation::Qam16 => {
                        C64::new(rail_level(bit(0), bit(1)), rail_level(bit(2), bit(3)))
                            / 10f64.sqrt()
                    }
                }
            })
            .collect();
        let max_level = match modulation {
            Modulation::Qpsk => 1.0 / 2f64.sqrt(),
            Modulation::Qam16 => 3.0 / 10f64.sqrt(),
        };
        Constellation {
            modulation,
            points,
            max_level,
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Average symbol energy, 1 for both tables.
    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let bps = self.bits_per_symbol();
        if !bits.len().is_multiple_of(bps) {
            return Err(Error::dim(format!(
                "{} bits is not a multiple of {bps} bits per symbol",
                bits.len()
            )));
        }
        Ok(bits
            .chunks_exact(bps)
            .map(|chunk| {
                let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
                self.points[label]
            })
            .collect())
    }

    /// Nearest constellation point.
    pub fn hard_decision(&self, y: C64) -> C64 {
        *self
            .points
            .iter()
            .min_by(|a, b| (y - **a).norm_sqr().total_cmp(&(y - **b).norm_sqr()))
            .expect("non-empty constellation")
    }

    /// Component-wise clip onto the constellation's bounding square.
    pub fn soft_clip(&self, y: C64) -> C64 {
        let m = self.max_level;
        C64::new(y.re.clamp(-m, m), y.im.clamp(-m, m))
    }

    /// Max-log LLRs for each symbol given its noise variance.
    pub fn soft_demap(&self, symbols: &[C64], noise_var: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(symbols.len(), noise_var.len())?;
        let bps = self.bits_per_symbol();
        let mut out = Vec::with_capacity(symbols.len() * bps);
        let mut dist = vec![0.0; self.points.len()];
        for (&y, &var) in symbols.iter().zip(noise_var) {
            if !(var > 0.0) || !var.is_finite() {
                return Err(Error::Argument(format!("noise variance {var} is not positive")));
            }
            for (d, p) in dist.iter_mut().zip(&self.points) {
                *d = (y - p).norm_sqr();
            }
            for bit in 0..bps {
                let shift = bps - 1 - bit;
                let (mut min0, mut min1) = (f64::INFINITY, f64::INFINITY);
                for (label, &d) in dist.iter().enumerate() {
                    if (label >> shift) & 1 == 0 {
                        min0 = min0.min(d);
                    } else {
                        min1 = min1.min(d);
                    }
                }
                out.push((min1 - min0) / var);
            }
        }
        Ok(out)
    }
}

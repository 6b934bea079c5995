//! OFDM multiplexing: active-carrier layout, unitary N-point IFFT/FFT and
//! cyclic prefix handling.
//!
//! Both transform directions are scaled by `1/sqrt(N)`, so the time-domain
//! body of a symbol carries exactly the energy of its carrier grid.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::C64;

/// Indices of the `N_c` modulated carriers inside the `N`-point transform.
///
/// Carriers are split symmetrically around DC: bins `1..=ceil(N_c/2)` and the
/// top `floor(N_c/2)` bins. DC and the band edges stay empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarrierLayout {
    fft_size: usize,
    indices: Vec<usize>,
}

impl CarrierLayout {
    pub fn symmetric(fft_size: usize, n_carriers: usize) -> Result<Self> {
        if n_carriers == 0 || n_carriers >= fft_size {
            return Err(Error::dim(format!(
                "{n_carriers} active carriers do not fit an {fft_size}-point transform without DC"
            )));
        }
        let upper = n_carriers.div_ceil(2);
        let lower = n_carriers / 2;
        let indices = (1..=upper).chain(fft_size - lower..fft_size).collect();
        Self::from_indices(fft_size, indices)
    }

    /// Layout from explicit, strictly increasing, non-DC indices.
    pub fn from_indices(fft_size: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.first() == Some(&0) {
            return Err(Error::dim("the DC carrier cannot be active"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::dim("carrier indices must be strictly increasing"));
        }
        if indices.last().is_some_and(|&i| i >= fft_size) {
            return Err(Error::dim("carrier index out of range"));
        }
        Ok(CarrierLayout { fft_size, indices })
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Values on the active carriers of one OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierGrid {
    pub layout: CarrierLayout,
    pub values: Vec<C64>,
}

/// OFDM modulator/demodulator with cached FFT plans.
#[derive(Clone)]
pub struct OfdmModem {
    layout: CarrierLayout,
    guard_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for OfdmModem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OfdmModem")
            .field("fft_size", &self.layout.fft_size)
            .field("n_carriers", &self.layout.len())
            .field("guard_len", &self.guard_len)
            .finish()
    }
}

impl OfdmModem {
    pub fn new(layout: CarrierLayout, guard_len: usize) -> Result<Self> {
        let n = layout.fft_size;
        if guard_len >= n {
            return Err(Error::dim(format!("guard length {guard_len} must be below N = {n}")));
        }
        let mut planner = FftPlanner::new();
        Ok(OfdmModem {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
            layout,
            guard_len,
        })
    }

    pub fn layout(&self) -> &CarrierLayout {
        &self.layout
    }

    pub fn fft_size(&self) -> usize {
        self.layout.fft_size
    }

    pub fn guard_len(&self) -> usize {
        self.guard_len
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.layout.fft_size + self.guard_len
    }

    /// Active-carrier values to `N + guard` time samples.
    pub fn modulate(&self, values: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.layout.len(), values.len())?;
        let n = self.fft_size();
        let mut body = vec![C64::new(0.0, 0.0); n];
        for (&idx, &v) in self.layout.indices.iter().zip(values) {
            body[idx] = v;
        }
        self.inverse.process(&mut body);
        let mut out = Vec::with_capacity(self.symbol_len());
        out.extend_from_slice(&body[n - self.guard_len..]);
        out.extend_from_slice(&body);
        out.iter_mut().for_each(|s| *s *= self.scale);
        Ok(out)
    }

    /// `N + guard` time samples to active-carrier values.
    pub fn demodulate(&self, samples: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.symbol_len(), samples.len())?;
        let mut body = samples[self.guard_len..].to_vec();
        self.forward.process(&mut body);
        Ok(self
            .layout
            .indices
            .iter()
            .map(|&i| body[i] * self.scale)
            .collect())
    }
}

/// One-shot modulation of a grid.
pub fn ofdm_modulate(grid: &CarrierGrid, guard_len: usize) -> Result<Vec<C64>> {
    OfdmModem::new(grid.layout.clone(), guard_len)?.modulate(&grid.values)
}

/// One-shot demodulation into a grid with the given layout.
pub fn ofdm_demodulate(samples: &[C64], layout: &CarrierLayout, guard_len: usize) -> Result<CarrierGrid> {
    let values = OfdmModem::new(layout.clone(), guard_len)?.demodulate(samples)?;
    Ok(CarrierGrid {
        layout: layout.clone(),
        values,
    })
}

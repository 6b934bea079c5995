//! Reference implementations used as test oracles. They favour plain loops
//! and dense algebra over speed and share no code with the library.

#![allow(dead_code)]

use mccdma::spreading::CodeMatrix;
use mccdma::C64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub const UMTS_GENERATORS: [u32; 3] = [0o557, 0o663, 0o711];
pub const UMTS_K: usize = 9;
/// Kept mother-code outputs per trellis step, cycled with the step index.
pub const KEEP_HALF: &[[bool; 3]] = &[[true, true, false]];
pub const KEEP_THREE_QUARTERS: &[[bool; 3]] = &[[true, true, false], [true, false, false], [false, true, false]];

pub fn random_complex<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Shift-register encoder: `reg[0]` is the current input, `reg[i]` the
/// input `i` steps back; generator bit `k - 1 - i` taps `reg[i]`. The
/// message is followed by `k - 1` zeros.
pub fn shift_register_encode(bits: &[u8], generators: &[u32], k: usize) -> Vec<u8> {
    let mut reg = vec![0u8; k];
    let mut out = Vec::new();
    for &b in bits.iter().chain(std::iter::repeat_n(&0u8, k - 1)) {
        reg.rotate_right(1);
        reg[0] = b;
        for &g in generators {
            let mut acc = 0u8;
            for (i, &r) in reg.iter().enumerate() {
                acc ^= r & ((g >> (k - 1 - i)) & 1) as u8;
            }
            out.push(acc);
        }
    }
    out
}

pub fn puncture_reference(mother: &[u8], keep: &[[bool; 3]]) -> Vec<u8> {
    mother
        .chunks(3)
        .enumerate()
        .flat_map(|(step, outs)| {
            let row = keep[step % keep.len()];
            outs.iter().zip(row).filter(|(_, k)| *k).map(|(b, _)| *b).collect::<Vec<_>>()
        })
        .collect()
}

pub fn umts_encode(bits: &[u8], keep: &[[bool; 3]]) -> Vec<u8> {
    puncture_reference(&shift_register_encode(bits, &UMTS_GENERATORS, UMTS_K), keep)
}

/// Maximum-likelihood decision by enumerating all `2^n` messages and
/// maximizing the correlation `sum (1 - 2c) llr`.
pub fn exhaustive_ml(llrs: &[f64], n_info: usize, keep: &[[bool; 3]]) -> Vec<u8> {
    assert!(n_info <= 16);
    let mut best = (f64::NEG_INFINITY, 0u32);
    for m in 0..(1u32 << n_info) {
        let bits: Vec<u8> = (0..n_info).map(|i| ((m >> i) & 1) as u8).collect();
        let code = umts_encode(&bits, keep);
        let metric: f64 = code.iter().zip(llrs).map(|(&c, &l)| (1.0 - 2.0 * c as f64) * l).sum();
        if metric > best.0 {
            best = (metric, m);
        }
    }
    (0..n_info).map(|i| ((best.1 >> i) & 1) as u8).collect()
}

/// `y[n] = sum_i g_i x[n - d_i]`, truncated to the input length.
pub fn linear_convolution(x: &[C64], delays: &[usize], gains: &[C64]) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    for (n, out) in y.iter_mut().enumerate() {
        for (&d, &g) in delays.iter().zip(gains) {
            if n >= d {
                *out += g * x[n - d];
            }
        }
    }
    y
}

pub fn circular_convolution(x: &[C64], delays: &[usize], gains: &[C64]) -> Vec<C64> {
    let n = x.len();
    (0..n)
        .map(|i| delays.iter().zip(gains).map(|(&d, &g)| g * x[(i + n - d % n) % n]).sum())
        .collect()
}

/// DFT of a tap set at `bin` for an `n`-point transform.
pub fn tap_response(delays: &[usize], gains: &[C64], bin: usize, n: usize) -> C64 {
    delays
        .iter()
        .zip(gains)
        .map(|(&d, &g)| g * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (bin * d) as f64 / n as f64))
        .sum()
}

/// `H C` built entry by entry.
pub fn dense_phi(h: &[C64], codes: &CodeMatrix) -> DMatrix<C64> {
    let sf = codes.spreading_factor();
    DMatrix::from_fn(sf, codes.n_users(), |l, k| h[l] * codes.chip(k, l))
}

/// Chip-domain MMSE filter `E_s (HC)^H (E_s HCC^H H^H + sigma^2 I)^-1`,
/// rows scaled to unit desired gain. Returns the estimates and the filter.
pub fn chip_domain_gmmse(y: &[C64], h: &[C64], codes: &CodeMatrix, noise_var: f64) -> (Vec<C64>, DMatrix<C64>) {
    let phi = dense_phi(h, codes);
    let sf = phi.nrows();
    let r = &phi * phi.adjoint() + DMatrix::<C64>::identity(sf, sf) * C64::new(noise_var, 0.0);
    let mut w = phi.adjoint() * r.try_inverse().expect("regular");
    for k in 0..w.nrows() {
        let g = (w.row(k) * phi.column(k))[(0, 0)];
        let mut row = w.row_mut(k);
        row /= g;
    }
    let d = &w * DVector::from_column_slice(y);
    (d.iter().copied().collect(), w)
}

/// Uncoded BPSK/QPSK bit error probability `0.5 erfc(sqrt(Eb/N0))`.
pub fn q_bpsk(ebn0_lin: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(ebn0_lin.sqrt())
}

/// Bessel function of the first kind, order 0, from its power series.
pub fn bessel_j0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -(x * x / 4.0) / (k as f64 * k as f64);
        sum += term;
    }
    sum
}

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::C64;

use super::{DetectionResult, Equalizer, SubbandProblem};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A linear symbol-level detector `d_hat = W y`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearFilter {
    /// `W = C^H diag(g)`: per-carrier equalization followed by despreading.
    Diagonal(Vec<C64>),
    /// Explicit `K x S_F` matrix.
    Dense(DMatrix<C64>),
}

/// Desired-symbol gain and error variance of each estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStats {
    pub gain: Vec<f64>,
    pub noise_var: Vec<f64>,
}

impl LinearFilter {
    pub fn apply(&self, problem: &SubbandProblem<'_>) -> Result<DetectionResult> {
        let d_hat = match self {
            LinearFilter::Diagonal(g) => {
                let eq: Vec<C64> = g.iter().zip(problem.y).map(|(g, y)| g * y).collect();
                problem.codes.despread(&eq)?
            }
            LinearFilter::Dense(w) => (w * DVector::from_column_slice(problem.y)).as_slice().to_vec(),
        };
        let stats = post_detection_noise_var(problem, self);
        Ok(DetectionResult {
            d_hat,
            noise_var: stats.noise_var,
            gain: stats.gain,
        })
    }

    /// Symbol coupling matrix `A = W H C` (`K x K`).
    pub fn coupling(&self, problem: &SubbandProblem<'_>) -> DMatrix<C64> {
        let codes = problem.codes;
        let k = codes.n_users();
        match self {
            LinearFilter::Diagonal(g) => {
                let sf = codes.spreading_factor();
                let mut a = DMatrix::from_element(k, k, ZERO);
                let mut col = vec![ZERO; sf];
                for j in 0..k {
                    for (l, c) in col.iter_mut().enumerate() {
                        *c = g[l] * problem.h[l] * codes.chip(j, l);
                    }
                    let d = codes.despread(&col).expect("sized");
                    a.set_column(j, &DVector::from_vec(d));
                }
                a
            }
            LinearFilter::Dense(w) => w * channel_codes(problem),
        }
    }

    /// Squared norm of each row of `W`.
    fn row_energy(&self, problem: &SubbandProblem<'_>) -> Vec<f64> {
        match self {
            LinearFilter::Diagonal(g) => {
                // Every code chip has magnitude 1/sqrt(S_F).
                let e = g.iter().map(|x| x.norm_sqr()).sum::<f64>() / problem.spreading_factor() as f64;
                vec![e; problem.n_users()]
            }
            LinearFilter::Dense(w) => w.row_iter().map(|r| r.norm_squared()).collect(),
        }
    }
}

/// Error variance of each estimate of a linear detector: filtered noise
/// `sigma_n^2 ||w_k||^2` plus residual interference
/// `E_s sum_{j != k} |A_kj|^2` with `A = W H C`. Also returns the desired
/// gain `Re A_kk`.
pub fn post_detection_noise_var(problem: &SubbandProblem<'_>, filter: &LinearFilter) -> LinearStats {
    let a = filter.coupling(problem);
    let rows = filter.row_energy(problem);
    let k = a.nrows();
    let mut gain = Vec::with_capacity(k);
    let mut noise_var = Vec::with_capacity(k);
    for (i, row_e) in rows.iter().enumerate() {
        let mai: f64 = (0..k).filter(|&j| j != i).map(|j| a[(i, j)].norm_sqr()).sum();
        gain.push(a[(i, i)].re);
        noise_var.push(problem.noise_var * row_e + problem.es * mai);
    }
    LinearStats { gain, noise_var }
}

/// `H C` as a dense `S_F x K` matrix.
pub(crate) fn channel_codes(problem: &SubbandProblem<'_>) -> DMatrix<C64> {
    let mut phi = problem.codes.matrix().clone();
    for (l, mut row) in phi.row_iter_mut().enumerate() {
        row *= problem.h[l];
    }
    phi
}

/// Per-carrier coefficients of a single-user equalizer. `inverse_snr` is
/// `1 / gamma_c` and only used by MMSEC.
///
/// Carriers with `H_l = 0` get a zero coefficient (EGC and the zero-forcing
/// limit of MMSEC); a sub-band with no energy at all gets zeros everywhere.
pub fn equalizer_gains(eq: Equalizer, h: &[C64], inverse_snr: f64) -> Vec<C64> {
    let sf = h.len() as f64;
    match eq {
        Equalizer::Egc => h
            .iter()
            .map(|x| {
                let m = x.norm();
                if m > 0.0 { x.conj() / m } else { ZERO }
            })
            .collect(),
        Equalizer::Mmsec => {
            let mut beta_sum = 0.0;
            let raw: Vec<C64> = h
                .iter()
                .map(|x| {
                    let den = x.norm_sqr() + inverse_snr;
                    if den > 0.0 {
                        beta_sum += x.norm_sqr() / den;
                        x.conj() / den
                    } else {
                        ZERO
                    }
                })
                .collect();
            let rho = if beta_sum > 0.0 { sf / beta_sum } else { 0.0 };
            raw.into_iter().map(|g| g * rho).collect()
        }
        Equalizer::Mrc => {
            let energy: f64 = h.iter().map(|x| x.norm_sqr()).sum();
            let rho = if energy > 0.0 { sf / energy } else { 0.0 };
            h.iter().map(|x| x.conj() * rho).collect()
        }
    }
}

fn single_user(problem: &SubbandProblem<'_>, eq: Equalizer) -> Result<DetectionResult> {
    problem.validate()?;
    let g = equalizer_gains(eq, problem.h, problem.inverse_snr(problem.n_users()));
    LinearFilter::Diagonal(g).apply(problem)
}

/// Equal gain combining: phase correction per carrier, then despreading.
/// The estimate is not normalized; its gain is reported in the result.
pub fn egc(problem: &SubbandProblem<'_>) -> Result<DetectionResult> {
    single_user(problem, Equalizer::Egc)
}

/// MMSE combining, `g_l = rho H_l* / (|H_l|^2 + 1/gamma_c)` with
/// `rho = S_F / sum_n |H_n|^2 / (|H_n|^2 + 1/gamma_c)` over the sub-band.
pub fn mmsec(problem: &SubbandProblem<'_>) -> Result<DetectionResult> {
    single_user(problem, Equalizer::Mmsec)
}

/// Maximum ratio combining normalized to unit desired gain.
pub fn mrc(problem: &SubbandProblem<'_>) -> Result<DetectionResult> {
    single_user(problem, Equalizer::Mrc)
}

/// Scales each row of `w` so that the desired gain `(W H C)_kk` is 1. Rows
/// whose gain vanishes are zeroed.
pub(crate) fn normalize_rows(w: &mut DMatrix<C64>, phi: &DMatrix<C64>) {
    for k in 0..w.nrows() {
        let g: C64 = w.row(k).iter().zip(phi.column(k).iter()).map(|(a, b)| a * b).sum();
        let mut row = w.row_mut(k);
        if g.norm() > 1e-9 {
            row /= g;
        } else {
            row.fill(ZERO);
        }
    }
}

/// Global MMSE: solves the `K x K` system
/// `((HC)^H HC + sigma^2/E_s I) z = (HC)^H y` and normalizes each estimate
/// to unit desired gain. Without noise the least-squares pseudo-solution is
/// used.
pub fn gmmse(problem: &SubbandProblem<'_>) -> Result<DetectionResult> {
    problem.validate()?;
    let phi = channel_codes(problem);
    let k = phi.ncols();
    let lambda = problem.noise_var / problem.es;
    let phi_h = phi.adjoint();
    let mut w = if lambda > 0.0 {
        let gram = &phi_h * &phi + DMatrix::<C64>::identity(k, k) * C64::new(lambda, 0.0);
        match gram.clone().cholesky() {
            Some(ch) => ch.solve(&phi_h),
            None => gram.lu().solve(&phi_h).unwrap_or_else(|| DMatrix::from_element(k, phi.nrows(), ZERO)),
        }
    } else {
        pseudo_inverse(&phi)
    };
    normalize_rows(&mut w, &phi);
    LinearFilter::Dense(w).apply(problem)
}

pub(crate) fn pseudo_inverse(m: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-10 * m.nrows().max(m.ncols()) as f64;
    svd.pseudo_inverse(eps.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::from_element(m.ncols(), m.nrows(), ZERO))
}

//! Polynomial expansion of the GMMSE filter.
//!
//! The estimate is `d_hat_k = c_k^H H^H sum_{i<L} a(i) M^i y` with
//! `M = H C C^H H^H`, followed by the same unit-gain normalization as
//! GMMSE. The coefficients are shared by all users of a sub-band and
//! minimize the summed MSE, whose normal equations are
//!
//! ```text
//! A_ij = sum_k u_k^H M^i (E_s M + sigma^2 I) M^j u_k
//! v_i  = E_s sum_k u_k^H M^i u_k,        u_k = H c_k
//! ```
//!
//! Both sides only involve traces of powers of `M`, i.e. the eigenvalues
//! `lambda_e` of `(HC)^H HC`: the problem is a weighted polynomial fit of
//! `1 / (lambda + sigma^2 / E_s)` with weights `E_s lambda^2 + sigma^2 lambda`.
//! `ExactMse` solves that fit by SVD on the eigenvalues; `Asymptotic`
//! replaces the traces by large-system moments (see [`super::freeprob`]).
//! Powers are taken of `M / s` with `s` an upper bound of the spectrum so
//! the fit stays well conditioned.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

use super::freeprob::{power_moments, projected_moments};
use super::linear::{channel_codes, normalize_rows, LinearFilter};
use super::{DetectionResult, PolyMode, SubbandProblem};

/// Largest condition number accepted before the order is reduced.
const MAX_CONDITION: f64 = 1e12;
/// Singular values of the weighted fit below this fraction of the largest
/// are dropped.
const RANK_TOLERANCE: f64 = 1e-14;

/// Polynomial `p(lambda) = sum_i coeffs[i] (lambda / scale)^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoefficients {
    pub scale: f64,
    pub coeffs: Vec<f64>,
}

impl PolyCoefficients {
    /// Coefficients `a(i)` of the unscaled polynomial in `M`.
    pub fn unscaled(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, b)| b / self.scale.powi(i as i32))
            .collect()
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let x = lambda / self.scale;
        self.coeffs.iter().rev().fold(0.0, |acc, &b| acc * x + b)
    }

    /// Order actually used (trailing coefficients dropped by the fallback
    /// are zero).
    pub fn effective_order(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1)
    }
}

/// Computes the shared polynomial coefficients for a sub-band.
pub fn poly_coefficients(problem: &SubbandProblem<'_>, order: usize, mode: PolyMode) -> Result<PolyCoefficients> {
    if order == 0 {
        return Err(Error::Argument("polynomial order must be >= 1".into()));
    }
    problem.validate()?;
    match mode {
        PolyMode::ExactMse => exact_coefficients(problem, order),
        PolyMode::Asymptotic => asymptotic_coefficients(problem, order),
    }
}

fn zero_poly(order: usize) -> PolyCoefficients {
    PolyCoefficients {
        scale: 1.0,
        coeffs: vec![0.0; order],
    }
}

fn exact_coefficients(problem: &SubbandProblem<'_>, order: usize) -> Result<PolyCoefficients> {
    let phi = channel_codes(problem);
    let gram = phi.adjoint() * &phi;
    let eig: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|&l| l.max(0.0)).collect();
    let scale = eig.iter().copied().fold(0.0, f64::max);
    if scale <= 0.0 {
        return Ok(zero_poly(order));
    }
    let (es, var) = (problem.es, problem.noise_var);
    let rows: Vec<(f64, f64)> = eig
        .iter()
        .filter(|&&l| l > scale * 1e-14)
        .map(|&l| ((es * l * l + var * l).sqrt(), 1.0 / (l + var / es)))
        .collect();
    let eig_used: Vec<f64> = eig.iter().copied().filter(|&l| l > scale * 1e-14).collect();
    let a = DMatrix::from_fn(rows.len(), order, |e, i| rows[e].0 * (eig_used[e] / scale).powi(i as i32));
    let b = DVector::from_fn(rows.len(), |e, _| rows[e].0 * rows[e].1);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let sol = svd
        .solve(&b, smax * RANK_TOLERANCE)
        .map_err(|e| Error::Argument(format!("polynomial fit failed: {e}")))?;
    Ok(PolyCoefficients {
        scale,
        coeffs: sol.iter().copied().collect(),
    })
}

/// Solves the `L x L` moment normal equations, reducing the order until the
/// system is well conditioned.
fn solve_moment_system(moments: &[f64], es: f64, var: f64, scale: f64, order: usize) -> PolyCoefficients {
    // moments[n] = m_n (index 0 unused).
    for l in (1..=order).rev() {
        let a = DMatrix::from_fn(l, l, |i, j| {
            (es * moments[i + j + 2] + var * moments[i + j + 1]) / scale.powi((i + j) as i32)
        });
        let v = DVector::from_fn(l, |i, _| es * moments[i + 1] / scale.powi(i as i32));
        let ev = a.clone().symmetric_eigenvalues();
        let (lo, hi) = (ev.min(), ev.max());
        if !(lo > 0.0 && hi / lo < MAX_CONDITION) {
            continue;
        }
        if let Some(ch) = a.cholesky() {
            let sol = ch.solve(&v);
            let mut coeffs: Vec<f64> = sol.iter().copied().collect();
            coeffs.resize(order, 0.0);
            return PolyCoefficients { scale, coeffs };
        }
    }
    zero_poly(order)
}

fn asymptotic_coefficients(problem: &SubbandProblem<'_>, order: usize) -> Result<PolyCoefficients> {
    let n = 2 * order + 1;
    let d = power_moments(problem.h, n);
    let alpha = problem.n_users() as f64 / problem.spreading_factor() as f64;
    let scale = problem.h.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
    if scale <= 0.0 {
        return Ok(zero_poly(order));
    }
    let mut moments = vec![1.0];
    moments.extend(projected_moments(&d, alpha, n));
    Ok(solve_moment_system(&moments, problem.es, problem.noise_var, scale, order))
}

/// `W = (HC)^H p(M)` as a dense `K x S_F` matrix.
fn polynomial_filter(phi: &DMatrix<C64>, poly: &PolyCoefficients) -> DMatrix<C64> {
    let phi_h = phi.adjoint();
    let m_scaled = phi * &phi_h / C64::new(poly.scale, 0.0);
    let mut w = DMatrix::from_element(phi_h.nrows(), phi_h.ncols(), C64::new(0.0, 0.0));
    for &b in poly.coeffs.iter().rev() {
        w = &w * &m_scaled + &phi_h * C64::new(b, 0.0);
    }
    w
}

/// Polynomial GMMSE detector of order `order` (number of terms).
pub fn poly_gmmse(problem: &SubbandProblem<'_>, order: usize, mode: PolyMode) -> Result<DetectionResult> {
    let poly = poly_coefficients(problem, order, mode)?;
    let phi = channel_codes(problem);
    let mut w = polynomial_filter(&phi, &poly);
    normalize_rows(&mut w, &phi);
    LinearFilter::Dense(w).apply(problem)
}

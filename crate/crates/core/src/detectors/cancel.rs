//! Parallel and successive interference cancellation.
//!
//! Both detectors work in the chip domain: decided symbols of the other
//! users are re-spread, weighted by the channel and subtracted from `y`
//! before a single-user equalizer and despreading are applied again.

use crate::error::{Error, Result};
use crate::mapping::Constellation;
use crate::spreading::CodeMatrix;
use crate::C64;

use super::linear::{equalizer_gains, post_detection_noise_var, LinearFilter};
use super::{DetectionResult, DetectorSpec, SubbandProblem};

/// Relative SINR difference below which SIC treats two users as tied.
const TIE_TOLERANCE: f64 = 1e-9;

fn decisions(
    estimates: &[C64],
    spec: &DetectorSpec,
    problem: &SubbandProblem<'_>,
    constellation: &Constellation,
) -> Result<Vec<C64>> {
    if spec.genie {
        let r = problem
            .reference
            .ok_or_else(|| Error::Argument("genie cancellation needs the transmitted symbols".into()))?;
        return Ok(r.to_vec());
    }
    Ok(estimates.iter().map(|&z| spec.decision.apply(constellation, z)).collect())
}

/// Multistage PIC.
///
/// Stage 0 is the configured single-user detector, its equalizer sized for
/// the `K` superposed codes. Stage `i >= 1` computes, for every user `k`,
/// `c_k^H G^(i) (y - H sum_{j != k} c_j d~_j)` where `d~` are the decisions
/// of stage `i - 1`; since the interference has been removed, `G^(i)` is
/// sized for a single code. The last stage's soft estimates are returned.
pub fn pic(problem: &SubbandProblem<'_>, spec: &DetectorSpec, constellation: &Constellation) -> Result<DetectionResult> {
    problem.validate()?;
    let k = problem.n_users();
    let sf = problem.spreading_factor();
    let g0 = equalizer_gains(spec.equalizer(0), problem.h, problem.inverse_snr(k));
    let mut result = LinearFilter::Diagonal(g0).apply(problem)?;
    let mut chips = vec![C64::new(0.0, 0.0); sf];
    for stage in 1..spec.stages {
        let tentative = decisions(&result.d_hat, spec, problem, constellation)?;
        let g = equalizer_gains(spec.equalizer(stage), problem.h, problem.inverse_snr(1));
        // Cancel everything, then add back each user's own contribution:
        // c_k^H G (y - H C d~ + H c_k d~_k) = z_k + a d~_k.
        problem.codes.spread_into(&tentative, &mut chips)?;
        let residual: Vec<C64> = problem
            .y
            .iter()
            .zip(problem.h)
            .zip(&chips)
            .zip(&g)
            .map(|(((y, h), c), g)| g * (y - h * c))
            .collect();
        let z = problem.codes.despread(&residual)?;
        let a: C64 = g.iter().zip(problem.h).map(|(g, h)| g * h).sum::<C64>() / sf as f64;
        let row_energy = g.iter().map(|x| x.norm_sqr()).sum::<f64>() / sf as f64;
        result = DetectionResult {
            d_hat: z.iter().zip(&tentative).map(|(z, d)| z + a * d).collect(),
            noise_var: vec![problem.noise_var * row_energy; k],
            gain: vec![a.re; k],
        };
    }
    Ok(result)
}

/// SIC with re-equalization after every cancellation.
///
/// At each step the residual is equalized for the codes not yet cancelled,
/// the code with the largest post-detection SINR (ties to the lowest index)
/// is detected, and its decided contribution is removed from the residual.
/// After `spec.stages` cancellations, or once a single code is left, the
/// remaining codes are detected together from the final residual.
pub fn sic(problem: &SubbandProblem<'_>, spec: &DetectorSpec, constellation: &Constellation) -> Result<DetectionResult> {
    problem.validate()?;
    let k = problem.n_users();
    let sf = problem.spreading_factor();
    let columns = problem.codes.columns();
    let mut out = DetectionResult {
        d_hat: vec![C64::new(0.0, 0.0); k],
        noise_var: vec![0.0; k],
        gain: vec![0.0; k],
    };
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut residual = problem.y.to_vec();
    let mut cancelled = 0;
    loop {
        let subset = CodeMatrix::from_columns(sf, remaining.iter().map(|&u| columns[u]).collect());
        let sub = problem.with(&residual, &subset);
        let g = equalizer_gains(spec.equalizer(cancelled), problem.h, sub.inverse_snr(remaining.len()));
        let filter = LinearFilter::Diagonal(g);
        let est = filter.apply(&sub)?;
        if remaining.len() == 1 || cancelled >= spec.stages {
            for (i, &u) in remaining.iter().enumerate() {
                out.d_hat[u] = est.d_hat[i];
                out.noise_var[u] = est.noise_var[i];
                out.gain[u] = est.gain[i];
            }
            return Ok(out);
        }
        let stats = post_detection_noise_var(&sub, &filter);
        let sinr = |i: usize| {
            let v = stats.noise_var[i];
            let p = stats.gain[i] * stats.gain[i];
            if v > 0.0 { p / v } else if p > 0.0 { f64::INFINITY } else { 0.0 }
        };
        // `remaining` is sorted, so the first maximum is the lowest index.
        let mut best = 0;
        for i in 1..remaining.len() {
            let (s, b) = (sinr(i), sinr(best));
            let tied = (s - b).abs() <= TIE_TOLERANCE * b.abs() || s == b;
            if s > b && !tied {
                best = i;
            }
        }
        let user = remaining[best];
        out.d_hat[user] = est.d_hat[best];
        out.noise_var[user] = est.noise_var[best];
        out.gain[user] = est.gain[best];
        let decided = if spec.genie {
            problem
                .reference
                .ok_or_else(|| Error::Argument("genie cancellation needs the transmitted symbols".into()))?[user]
        } else {
            let gain = est.gain[best];
            let unbiased = if gain.abs() > 1e-12 { est.d_hat[best] / gain } else { est.d_hat[best] };
            spec.decision.apply(constellation, unbiased)
        };
        for (l, r) in residual.iter_mut().enumerate() {
            *r -= problem.h[l] * problem.codes.chip(user, l) * decided;
        }
        remaining.remove(best);
        cancelled += 1;
    }
}

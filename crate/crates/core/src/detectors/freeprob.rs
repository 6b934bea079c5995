//! Large-system moments of `M = H C C^H H^H` for orthogonal codes.
//!
//! With `P = C C^H` a projection of rank `K` and `D = |H|^2` asymptotically
//! free, the normalized moments `m_n = tr(M^n) / S_F = tr((P D)^n) / S_F`
//! follow from multiplicative free convolution. Writing
//! `psi(z) = sum_{n>=1} m_n z^n` and `chi` for its compositional inverse,
//! the S-transform of a projection of ratio `alpha` is
//! `(1 + w) / (alpha + w)`, so
//!
//! ```text
//! chi_PD(w) = chi_D(w) * (1 + w) / (alpha + w)
//! ```
//!
//! and the moments of `PD` are read off the inverse series of `chi_PD`.

/// Truncated product of two power series.
fn mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (i, &x) in a.iter().enumerate().take(n + 1) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `f(g(w))` truncated at order `n`, for `g(0) = 0`.
fn compose(f: &[f64], g: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for &c in f.iter().take(n + 1).rev() {
        out = mul(&out, g, n);
        out[0] += c;
    }
    out
}

/// Compositional inverse of `f` (with `f(0) = 0`, `f'(0) != 0`) up to order `n`.
fn invert(f: &[f64], n: usize) -> Vec<f64> {
    let f1 = f[1];
    let mut g = vec![0.0; n + 1];
    g[1] = 1.0 / f1;
    for k in 2..=n {
        let c = compose(f, &g, k)[k];
        g[k] = -c / f1;
    }
    g
}

/// Moments `m_1..=m_n` of `P D` for a projection of ratio `alpha` and
/// diagonal `D` with moments `d[0] = d_1, d[1] = d_2, ...`.
///
/// Returns zeros when `d_1 = 0`.
pub fn projected_moments(d: &[f64], alpha: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if d.is_empty() || d[0] <= 0.0 {
        return vec![0.0; n];
    }
    let mut psi_d = vec![0.0; n + 1];
    for (i, &v) in d.iter().take(n).enumerate() {
        psi_d[i + 1] = v;
    }
    let chi_d = invert(&psi_d, n);
    // (1 + w) / (alpha + w) = (1 + w) / alpha * sum_i (-w / alpha)^i
    let mut geo = vec![0.0; n + 1];
    let mut t = 1.0 / alpha;
    for c in geo.iter_mut() {
        *c = t;
        t *= -1.0 / alpha;
    }
    let s_p = mul(&geo, &[1.0, 1.0], n);
    let chi_pd = mul(&chi_d, &s_p, n);
    let psi_pd = invert(&chi_pd, n);
    psi_pd[1..].to_vec()
}

/// Moments `d_1..=d_n` of `|h|^2` over the given gains.
pub fn power_moments(h: &[num_complex::Complex64], n: usize) -> Vec<f64> {
    let len = h.len().max(1) as f64;
    (1..=n as i32)
        .map(|p| h.iter().map(|x| x.norm_sqr().powi(p)).sum::<f64>() / len)
        .collect()
}

mod common;

use common::*;
use mccdma::detectors::{
    egc, gmmse, mmsec, poly_gmmse, post_detection_noise_var, DetectorSpec, LinearFilter, PolyMode,
    SubbandProblem,
};
use mccdma::mapping::{Constellation, Modulation};
use mccdma::spreading::{hadamard_codes, CodeAssignment, CodeMatrix};
use mccdma::C64;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rayleigh(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| mccdma::channel::complex_gaussian(rng, 1.0)).collect()
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn full_load_gmmse_equals_mmsec() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let codes = hadamard_codes(32, 32).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let h = rayleigh(&mut rng, 32);
        let y = random_complex(&mut rng, 32);
        let var = rng.random_range(0.01..1.0);
        let p = SubbandProblem::new(&y, &h, &codes, var);
        worst = worst.max(max_diff(&gmmse(&p).unwrap().d_hat, &mmsec(&p).unwrap().d_hat));
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn gmmse_matches_chip_domain_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    for (sf, k) in [(4, 2), (4, 3), (8, 5), (16, 7), (32, 16)] {
        for assignment in [CodeAssignment::Natural, CodeAssignment::Random { seed: 9 }] {
            let codes = CodeMatrix::new(sf, k, assignment).unwrap();
            let h = rayleigh(&mut rng, sf);
            let y = random_complex(&mut rng, sf);
            let p = SubbandProblem::new(&y, &h, &codes, 0.1);
            let (oracle, _) = chip_domain_gmmse(&y, &h, &codes, 0.1);
            let d = max_diff(&gmmse(&p).unwrap().d_hat, &oracle);
            assert!(d < 1e-10, "S_F={sf} K={k}: {d}");
        }
    }
}

#[test]
fn full_order_polynomial_equals_gmmse() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for sf in [4, 8] {
        for k in 1..=sf {
            let codes = hadamard_codes(sf, k).unwrap();
            let h = rayleigh(&mut rng, sf);
            let y = random_complex(&mut rng, sf);
            let p = SubbandProblem::new(&y, &h, &codes, 0.05);
            let d = max_diff(&poly_gmmse(&p, sf, PolyMode::ExactMse).unwrap().d_hat, &gmmse(&p).unwrap().d_hat);
            assert!(d < 1e-8, "S_F={sf} K={k}: {d}");
        }
    }
}

#[test]
fn normalized_detectors_have_unit_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    for k in [1, 3, 8] {
        let codes = hadamard_codes(8, k).unwrap();
        let h = rayleigh(&mut rng, 8);
        let y = random_complex(&mut rng, 8);
        let p = SubbandProblem::new(&y, &h, &codes, 0.2);
        for r in [mmsec(&p).unwrap(), gmmse(&p).unwrap(), poly_gmmse(&p, 3, PolyMode::ExactMse).unwrap()] {
            assert!(r.gain.iter().all(|g| (g - 1.0).abs() < 1e-10), "{:?}", r.gain);
        }
        // Gain read from the explicit chip-domain transfer.
        let (_, w) = chip_domain_gmmse(&y, &h, &codes, 0.2);
        let a = &w * dense_phi(&h, &codes);
        for i in 0..k {
            assert!((a[(i, i)] - 1.0).norm() < 1e-10);
        }
    }
}

#[test]
fn egc_interference_matches_dense_coupling() {
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    let codes = hadamard_codes(16, 9).unwrap();
    let h = rayleigh(&mut rng, 16);
    let y = random_complex(&mut rng, 16);
    let p = SubbandProblem::new(&y, &h, &codes, 0.3);
    let r = egc(&p).unwrap();
    let g: Vec<C64> = h.iter().map(|x| x.conj() / x.norm()).collect();
    let c = codes.matrix();
    let a = c.adjoint() * nalgebra::DMatrix::from_diagonal(&DVector::from_iterator(16, g.iter().zip(&h).map(|(g, h)| g * h))) * c;
    for k in 0..9 {
        let mai: f64 = (0..9).filter(|&j| j != k).map(|j| a[(k, j)].norm_sqr()).sum();
        let noise = 0.3 * g.iter().map(|x| x.norm_sqr()).sum::<f64>() / 16.0;
        assert!((r.noise_var[k] - (mai + noise)).abs() < 1e-12);
        assert!((r.gain[k] - a[(k, k)].re).abs() < 1e-12);
    }
}

#[test]
fn mmsec_variance_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(205);
    let qpsk = Constellation::new(Modulation::Qpsk);
    let codes = hadamard_codes(8, 5).unwrap();
    let h = rayleigh(&mut rng, 8);
    let var = 0.1;
    let mut predicted = 0.0;
    let mut err = 0.0;
    let n = 100_000;
    for _ in 0..n {
        let d: Vec<C64> = (0..5).map(|_| qpsk.points()[rng.random_range(0..4)]).collect();
        let chips = codes.spread(&d).unwrap();
        let y: Vec<C64> = chips
            .iter()
            .zip(&h)
            .map(|(c, h)| c * h + mccdma::channel::complex_gaussian(&mut rng, var))
            .collect();
        let r = mmsec(&SubbandProblem::new(&y, &h, &codes, var)).unwrap();
        predicted = r.noise_var[0];
        err += (r.d_hat[0] / r.gain[0] - d[0]).norm_sqr() * r.gain[0] * r.gain[0];
    }
    let empirical = err / n as f64;
    assert!((empirical / predicted - 1.0).abs() < 0.05, "{empirical} vs {predicted}");
}

#[test]
fn flat_full_load_variance_is_noise_variance() {
    let codes = hadamard_codes(8, 8).unwrap();
    let h = vec![C64::from_polar(1.0, 0.7); 8];
    let y = vec![C64::new(0.0, 0.0); 8];
    let p = SubbandProblem::new(&y, &h, &codes, 0.37);
    for r in [mmsec(&p).unwrap(), gmmse(&p).unwrap()] {
        assert!(r.noise_var.iter().all(|v| (v - 0.37).abs() < 1e-12));
    }
    let s = post_detection_noise_var(&p, &LinearFilter::Diagonal(vec![h[0].conj(); 8]));
    assert!(s.noise_var.iter().all(|v| (v - 0.37).abs() < 1e-12));
}

#[test]
fn noiseless_gmmse_recovers_symbols_and_has_no_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(206);
    let codes = hadamard_codes(8, 6).unwrap();
    let h = rayleigh(&mut rng, 8);
    let d = random_complex(&mut rng, 6);
    let y: Vec<C64> = codes.spread(&d).unwrap().iter().zip(&h).map(|(c, h)| c * h).collect();
    let r = gmmse(&SubbandProblem::new(&y, &h, &codes, 0.0)).unwrap();
    assert!(max_diff(&r.d_hat, &d) < 1e-10);
    assert!(r.noise_var.iter().all(|v| v.abs() < 1e-18));
}

#[test]
fn single_user_detectors_coincide() {
    let mut rng = ChaCha8Rng::seed_from_u64(207);
    let qpsk = Constellation::new(Modulation::Qpsk);
    let codes = hadamard_codes(8, 1).unwrap();
    let h = rayleigh(&mut rng, 8);
    let y = random_complex(&mut rng, 8);
    let p = SubbandProblem::new(&y, &h, &codes, 0.25);
    let base = mmsec(&p).unwrap();
    for id in ["pic:stages=1", "pic:stages=3", "sic", "pic:stages=2:decision=soft"] {
        let spec: DetectorSpec = id.parse().unwrap();
        let r = spec.detect(&p, &qpsk).unwrap();
        assert!(max_diff(&r.d_hat, &base.d_hat) < 1e-12, "{id}");
    }
    // With one code, GMMSE and every polynomial order are the normalized
    // matched filter.
    let g = gmmse(&p).unwrap();
    for order in 1..4 {
        let r = poly_gmmse(&p, order, PolyMode::ExactMse).unwrap();
        assert!(max_diff(&r.d_hat, &g.d_hat) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn detectors_are_finite_and_linear_ones_scale(seed in any::<u64>(), k in 1usize..=16, var in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let codes = hadamard_codes(16, k).unwrap();
        let h = rayleigh(&mut rng, 16);
        let y = random_complex(&mut rng, 16);
        let p = SubbandProblem::new(&y, &h, &codes, var);
        let y2: Vec<C64> = y.iter().map(|v| v * 2.5).collect();
        let p2 = SubbandProblem::new(&y2, &h, &codes, var);
        for det in [mmsec, gmmse, egc] {
            let a = det(&p).unwrap();
            let b = det(&p2).unwrap();
            prop_assert!(a.d_hat.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
            let scaled: Vec<C64> = a.d_hat.iter().map(|v| v * 2.5).collect();
            prop_assert!(max_diff(&scaled, &b.d_hat) < 1e-9);
            prop_assert!(a.noise_var.iter().all(|v| *v >= -1e-15));
        }
    }
}

use std::f64::consts::TAU;

use proptest::prelude::*;

use lorentz_oam::estimate::{estimate_gamma_fit, estimate_gamma_msum, gamma_from_m};
use lorentz_oam::hologram::generate_hologram;
use lorentz_oam::relativity::{
    azimuth_jacobian, boosted_azimuth, frame_from_beta, frame_from_gamma, unboosted_azimuth, wrap_angle,
};
use lorentz_oam::simulate::{simulate_counts, subtract_background, NoiseModel, Subtraction};
use lorentz_oam::spectrum::{
    conditional_slice, joint_probability, joint_probability_quadrature, measurement_sum,
    measurement_sum_truncated, mode_count_empirical, ConditionalSlice, OamWindow,
};

proptest! {
    #[test]
    fn frame_round_trip(g in 1.0f64..100.0) {
        let back = frame_from_beta(frame_from_gamma(g).unwrap().beta).unwrap().gamma;
        prop_assert!(((back - g) / g).abs() < 1e-10);
    }

    #[test]
    fn boosted_azimuth_is_monotone(a in 0.0f64..TAU, b in 0.0f64..TAU, g in 1.0f64..50.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        prop_assert!(boosted_azimuth(lo, g) < boosted_azimuth(hi, g));
    }

    #[test]
    fn inverse_map_derivative_is_jacobian(p in 0.05f64..(TAU - 0.05), g in 1.0f64..20.0) {
        let h = 1e-6;
        let fd = (unboosted_azimuth(p + h, g) - unboosted_azimuth(p - h, g)) / (2.0 * h);
        prop_assert!((fd - azimuth_jacobian(p, g)).abs() < 1e-6 * azimuth_jacobian(p, g).max(1.0));
    }

    #[test]
    fn odd_sums_vanish_exactly(l_a in -500i32..500, k in -500i32..500, g in 1.0f64..1e3) {
        let l_b = 2 * k + 1 - l_a;
        prop_assert_eq!(joint_probability(l_a, l_b, g, 3).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_matches_closed_form(l_a in -10i32..=10, l_b in -10i32..=10, g in 1.0f64..20.0) {
        let quad = joint_probability_quadrature(l_a, l_b, g, 1, 4096).unwrap();
        let closed = joint_probability(l_a, l_b, g, 1).unwrap();
        prop_assert!((quad - closed).abs() < 1e-9);
    }

    #[test]
    fn slices_translate_with_l_a(l_a in -15i32..15, g in 1.0f64..30.0) {
        let w = OamWindow::symmetric(40);
        let base = conditional_slice(0, w, g).unwrap();
        let shifted = conditional_slice(l_a, w, g).unwrap();
        for l_b in w.iter() {
            if let Some(v) = base.value_at(l_b + l_a) {
                prop_assert_eq!(shifted.value_at(l_b).unwrap(), v);
            }
        }
    }

    #[test]
    fn mode_count_is_scale_invariant(values in prop::collection::vec(0.0f64..10.0, 1..40), c in 1e-3f64..1e3) {
        prop_assume!(values.iter().any(|v| *v > 0.0));
        let w = OamWindow::new(0, values.len() as i32 - 1).unwrap();
        let a = mode_count_empirical(&ConditionalSlice::new(0, w, values.clone()).unwrap()).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        let b = mode_count_empirical(&ConditionalSlice::new(0, w, scaled).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a);
        prop_assert!(a >= 1.0 - 1e-12);
    }

    #[test]
    fn truncated_sum_grows_toward_limit(g in 1.0f64..30.0, h in 0u32..60) {
        let small = measurement_sum_truncated(0, OamWindow::symmetric(h), g).unwrap();
        let large = measurement_sum_truncated(0, OamWindow::symmetric(h + 1), g).unwrap();
        let limit = measurement_sum(g).unwrap();
        prop_assert!(small <= large);
        prop_assert!(large <= limit * (1.0 + 1e-15));
    }

    #[test]
    fn m_inversion_round_trip(g in 1.0f64..100.0) {
        let back = gamma_from_m(measurement_sum(g).unwrap()).unwrap();
        prop_assert!(((back - g) / g).abs() < 1e-10);
    }

    #[test]
    fn msum_estimate_monotone_in_window(g in 1.0f64..30.0, h in 1u32..80) {
        let a = estimate_gamma_msum(&conditional_slice(0, OamWindow::symmetric(h), g).unwrap()).unwrap();
        let b = estimate_gamma_msum(&conditional_slice(0, OamWindow::symmetric(h + 1), g).unwrap()).unwrap();
        prop_assert!(a.gamma_meas <= b.gamma_meas);
    }

    #[test]
    fn hologram_mirror_symmetry(l in -6i32..6, g in 1.0f64..20.0, w in 2usize..24, h in 2usize..24) {
        let f = generate_hologram(l, g, w, h, 1.0).unwrap();
        for j in 0..h {
            for i in 0..w {
                let d = (f.get(i, h - 1 - j) - wrap_angle(-f.get(i, j))).rem_euclid(TAU);
                prop_assert!(d.min(TAU - d) < 1e-12);
            }
        }
    }

    #[test]
    fn subtraction_never_negative(seed in any::<u64>(), g in 1.0f64..20.0) {
        let w = OamWindow::symmetric(6);
        let cs = simulate_counts(g, (w, w), NoiseModel::default(), seed).unwrap();
        for mode in [Subtraction::Accidental, Subtraction::Minimum, Subtraction::Both] {
            prop_assert!(subtract_background(&cs, mode).values.iter().all(|v| *v >= 0.0));
        }
    }
}

#[test]
fn jacobian_integrates_to_full_turn() {
    let n = 4096;
    for g in [1.0, 2.0, 5.0, 10.0, 20.0] {
        let integral: f64 = (0..n).map(|k| azimuth_jacobian(k as f64 * TAU / n as f64, g)).sum::<f64>() * TAU / n as f64;
        assert!((integral - TAU).abs() < 1e-9, "gamma {g}: {integral}");
    }
}

#[test]
fn noiseless_round_trip_independent_of_l_a() {
    let w = OamWindow::symmetric(200);
    for g in [1.0, 1.5, 2.0, 5.0, 10.0] {
        for l_a in [-2, 0, 3] {
            let s = conditional_slice(l_a, w, g).unwrap();
            let m = estimate_gamma_msum(&s).unwrap();
            let f = estimate_gamma_fit(&s, (1.0, 50.0)).unwrap();
            assert!((m.gamma_meas - g).abs() < 1e-6, "msum {g} {l_a}");
            assert!((m.gamma_meas - f.gamma_meas).abs() < 1e-4, "agreement {g} {l_a}");
        }
    }
}

#[test]
fn cell_means_converge() {
    // 3 sigma on the mean of `runs` Poisson draws
    let model = NoiseModel { pair_rate: 500.0, accidental_rate: 2.0, integration: 1.0 };
    let w = OamWindow::new(-2, 2).unwrap();
    let row = OamWindow::new(0, 0).unwrap();
    let runs = 400u64;
    let mut sums = [0u64; 5];
    for seed in 0..runs {
        let cs = simulate_counts(3.0, (row, w), model, seed).unwrap();
        for (s, c) in sums.iter_mut().zip(&cs.counts) {
            *s += c;
        }
    }
    for (l_b, s) in w.iter().zip(sums) {
        let expect = model.cell_mean(lorentz_oam::spectrum::joint_probability(0, l_b, 3.0, 1).unwrap());
        let mean = s as f64 / runs as f64;
        assert!((mean - expect).abs() < 3.0 * (expect / runs as f64).sqrt(), "l_b {l_b}: {mean} vs {expect}");
    }
}

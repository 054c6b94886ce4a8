//! Properties of transfer functions, designs and moment analysis.

use num_complex::Complex64;
use proptest::prelude::*;

use vmfilt::analysis::{fir_moment_table, freq_grid, steer, Response, SteerSet};
use vmfilt::design::{
    blunt_exponential_blur, butterworth_blur, butterworth_cutoff, butterworth_tf, colored_sg_blur, fir_vm_bank,
    gaussian_fir, interp_diff, repeated_pole_blur, repeated_pole_tf, CascadeMode, FirKernel, Parity,
};
use vmfilt::engine::Stage;
use vmfilt::polyz::{split_denominator, LaurentPoly, Point, RationalTF, ThreePartIIR};
use vmfilt::scalar::cabs;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// `prod (1 - r z^-1)` as `[1, a_1, ...]`.
fn forward_from_roots(roots: &[f64]) -> Vec<f64> {
    roots.iter().fold(vec![1.0], |acc, &r| {
        let mut out = vec![0.0; acc.len() + 1];
        for (i, &c) in acc.iter().enumerate() {
            out[i] += c;
            out[i + 1] -= r * c;
        }
        out
    })
}

fn sym_poly(half: &[f64]) -> LaurentPoly {
    // half[0] is the center, half[k] the coefficient of z^k and z^-k
    let k = half.len() - 1;
    let coeffs: Vec<f64> = (0..=2 * k).map(|j| half[(j as i64 - k as i64).unsigned_abs() as usize]).collect();
    LaurentPoly::new(coeffs).unwrap()
}

fn antisym_poly(right: &[f64]) -> LaurentPoly {
    let k = right.len();
    let coeffs: Vec<f64> = (0..=2 * k)
        .map(|j| {
            let m = j as i64 - k as i64;
            match m.signum() {
                0 => 0.0,
                s => s as f64 * right[m.unsigned_abs() as usize - 1],
            }
        })
        .collect();
    LaurentPoly::new(coeffs).unwrap()
}

/// Well-separated real roots inside the unit circle.
fn inside_roots() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.85..0.85f64, 1..=4)
        .prop_filter("separated", |r| r.iter().enumerate().all(|(i, a)| r[..i].iter().all(|b| (a - b).abs() > 0.05)))
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn split_then_recombine_restores_the_denominator(roots in inside_roots(), a0 in 0.1..10.0f64) {
        let a_plus = forward_from_roots(&roots);
        let den = (&LaurentPoly::from_delay_poly(&a_plus) * &LaurentPoly::from_advance_poly(&a_plus)).scale(a0);
        let split = split_denominator(&den).unwrap();
        prop_assert!(split.recombine().relative_distance(&den) < 1e-9);
        for (got, want) in split.a_plus.iter().zip(&a_plus) {
            prop_assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn decomposition_reproduces_the_numerator(
        roots in inside_roots(),
        half in prop::collection::vec(-1.0..1.0f64, 1..=4),
    ) {
        let a_plus = forward_from_roots(&roots);
        let den = &LaurentPoly::from_delay_poly(&a_plus) * &LaurentPoly::from_advance_poly(&a_plus);
        let tf = RationalTF::new(sym_poly(&half), den);
        let iir = vmfilt::polyz::three_part_decompose(&tf, Parity::Symmetric).unwrap();
        prop_assert!(iir.reconstruction_error(&tf) < 1e-10);
    }

    #[test]
    fn fir_derivatives_match_the_moment_formula(
        coeffs in prop::collection::vec(-1.0..1.0f64, 1..=9),
        nyquist in any::<bool>(),
    ) {
        let k = ((coeffs.len() - 1) / 2) as i64;
        let coeffs = &coeffs[..2 * k as usize + 1];
        let tf = RationalTF::fir(LaurentPoly::new(coeffs.to_vec()).unwrap());
        let (at, omega) = if nyquist { (Point::Nyquist, std::f64::consts::PI) } else { (Point::Dc, 0.0) };
        let got = tf.dc_derivatives(at, 8).unwrap();
        for (l, g) in got.iter().enumerate() {
            // coefficient c_j of z^j is h(-j): H^(l) = sum_j c_j (i j)^l e^{i omega j}
            let (want, scale) = (-k..=k).fold((Complex64::new(0.0, 0.0), 0.0), |(w, s), j| {
                let c = coeffs[(j + k) as usize];
                let term = c * Complex64::new(0.0, j as f64).powu(l as u32) * Complex64::from_polar(1.0, omega * j as f64);
                (w + term, s + c.abs() * (j.abs() as f64).powi(l as i32))
            });
            prop_assert!((g - want).norm() < 1e-11 * scale.max(1.0), "l {}: {} vs {}", l, g, want);
        }
    }

    #[test]
    fn parity_kills_alternate_derivatives(
        roots in inside_roots(),
        half in prop::collection::vec(-1.0..1.0f64, 2..=5),
        antisymmetric in any::<bool>(),
    ) {
        let a_plus = forward_from_roots(&roots);
        let den = &LaurentPoly::from_delay_poly(&a_plus) * &LaurentPoly::from_advance_poly(&a_plus);
        let num = if antisymmetric { antisym_poly(&half[1..]) } else { sym_poly(&half) };
        let tf = RationalTF::new(num, den);
        for at in [Point::Dc, Point::Nyquist] {
            let d = tf.dc_derivatives(at, 8).unwrap();
            let scale = d.iter().map(|v| v.norm()).fold(1.0, f64::max);
            for (l, v) in d.iter().enumerate() {
                if (l % 2 == 1) != antisymmetric {
                    prop_assert!(v.norm() < 1e-11 * scale, "{:?} l {}: {}", at, l, v);
                }
            }
        }
    }
}

fn blurs(sigma: f64) -> Vec<(String, Stage)> {
    let mut out: Vec<(String, Stage)> = vec![
        ("gaussian".into(), gaussian_fir(sigma, 0, (5.0 * sigma).ceil() as usize).unwrap().into()),
        ("colored sg".into(), colored_sg_blur(sigma, 1).unwrap().into()),
        ("butterworth".into(), butterworth_blur(sigma, 1).unwrap().into()),
        ("blunt".into(), blunt_exponential_blur(sigma, 3).unwrap().into()),
    ];
    for (l_d, l_pi) in [(1, 0), (1, 1), (1, 2), (2, 1)] {
        out.push((format!("repeated pole {l_d}/{l_pi}"), repeated_pole_blur(sigma, l_d, l_pi).unwrap().into()));
    }
    out
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn designed_blurs_have_unit_dc_gain(sigma in 1.0..16.0f64) {
        for (name, stage) in blurs(sigma) {
            let h0 = stage.eval_freq(0.0).unwrap();
            prop_assert!((h0 - 1.0).norm() < 1e-10, "{} at sigma {}: {}", name, sigma, h0);
        }
    }

    #[test]
    fn designed_filters_pass_their_parity_check(sigma in 1.0..16.0f64) {
        for (name, stage) in blurs(sigma) {
            match stage {
                Stage::Fir(k) => prop_assert!(k.to_tf().num.is_symmetric(0.0), "{}", name),
                Stage::Iir(f) => {
                    prop_assert!(f.parity() == Parity::Symmetric, "{}", name);
                    prop_assert_eq!(f.b_minus(), f.b_plus().to_vec());
                }
            }
        }
        // the designed transfer functions, at design precision
        for l_pi in 0..=2 {
            prop_assert!(repeated_pole_tf(sigma, 1, l_pi).unwrap().0.num.is_symmetric(1e-25));
        }
        for n in 1..=4 {
            prop_assert!(butterworth_tf(butterworth_cutoff(sigma), n).unwrap().num.is_symmetric(1e-25));
        }
        for d in 0..=8 {
            let k = interp_diff(d).unwrap();
            let num = k.to_tf().num;
            let ok = if d % 2 == 0 { num.is_symmetric(1e-15) } else { num.is_antisymmetric(1e-15) };
            prop_assert!(ok && k.parity() == Parity::of_order(d));
        }
    }

    #[test]
    fn repeated_pole_blur_is_flat_at_dc(sigma in 1.0..16.0f64, l_d in 1usize..=3, l_pi in 0usize..=2) {
        let (tf, _) = repeated_pole_tf(sigma, l_d, l_pi).unwrap();
        let d = tf.dc_derivatives(Point::Dc, 2 * l_d).unwrap();
        for l in 1..=2 * l_d {
            let v = cabs(d[l]);
            prop_assert!(v < 1e-12 * sigma.powi(l as i32), "l {}: {:e}", l, v);
        }
    }

    #[test]
    fn differentiator_on_monomial_gives_factorial(d in 0usize..=4, n in -50i64..50) {
        let k = interp_diff(d).unwrap();
        let half = k.half_len() as i64;
        // (h * x)(n) = sum_m h(m) x(n - m) with x(n) = n^d
        let y: f64 = (-half..=half).map(|m| k.tap(m) * ((n - m) as f64).powi(d as i32)).sum();
        prop_assert_eq!(y, factorial(d));
    }

    #[test]
    fn moment_table_matches_frequency_derivatives(sigma in 0.7..3.0f64, d in 0usize..=4, extra in 0usize..3) {
        let k = (4.0 * sigma).ceil() as usize + extra;
        let kernel = gaussian_fir(sigma, d, k).unwrap();
        check_moments_against_derivatives(&kernel)?;
    }

    #[test]
    fn cascade_grid_is_the_product_of_stage_grids(sigma in 1.0..8.0f64, d in 0usize..=3) {
        let stages: Vec<Stage> = vec![
            repeated_pole_blur(sigma, 1, 2).unwrap().into(),
            interp_diff(d).unwrap().into(),
            butterworth_blur(sigma, 1).unwrap().into(),
        ];
        let whole = freq_grid(&stages, 65, 1).unwrap();
        let parts: Vec<_> = stages.iter().map(|s| freq_grid(s, 65, 1).unwrap()).collect();
        for (i, &(w, _, h)) in whole.points.iter().enumerate() {
            let product = parts.iter().fold(Complex64::new(1.0, 0.0), |acc, g| acc * g.points[i].2);
            prop_assert!((h - product).norm() < 1e-12, "omega {}: {} vs {}", w, h, product);
            prop_assert!((h - stages.response(w).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_composes_and_keeps_the_trace(
        raw in prop::collection::vec(-5.0..5.0f64, 15),
        phi1 in -3.2..3.2f64,
        phi2 in -3.2..3.2f64,
    ) {
        let mut beta = SteerSet::zeros(5);
        let mut it = raw.iter();
        for order in 0..5 {
            for p in 0..=order {
                beta.set(p, order - p, *it.next().unwrap());
            }
        }
        let twice = steer(&steer(&beta, phi1), phi2);
        let once = steer(&beta, phi1 + phi2);
        let turned = steer(&beta, phi1);
        for order in 0..5 {
            for p in 0..=order {
                prop_assert!((twice.get(p, order - p) - once.get(p, order - p)).abs() < 1e-12 * 100.0);
            }
        }
        let trace = |b: &SteerSet| b.get(2, 0) + b.get(0, 2);
        prop_assert!((trace(&turned) - trace(&beta)).abs() < 1e-12 * 10.0);
    }
}

fn check_moments_against_derivatives(kernel: &FirKernel) -> Result<(), TestCaseError> {
    let d = kernel.order();
    let table = fir_moment_table(std::slice::from_ref(kernel), 9).unwrap();
    let derivs = kernel.dc_derivatives(Point::Dc, 8).unwrap();
    let norm = Complex64::new(0.0, 1.0).powu(d as u32) * factorial(d);
    for (l, g) in derivs.iter().enumerate() {
        let via_freq = g / norm;
        let scale = table.literal[l][0].abs().max(1.0);
        prop_assert!(
            (via_freq.re - table.normalized[l][0]).abs() < 1e-10 * scale,
            "l {}: {} vs {}",
            l,
            via_freq,
            table.normalized[l][0]
        );
        prop_assert!(via_freq.im.abs() < 1e-10 * scale);
    }
    Ok(())
}

#[test]
fn vm_banks_have_identity_moments() {
    for d_model in [3, 5, 7] {
        for mode in [CascadeMode::Standalone, CascadeMode::BehindBlur] {
            let bank = fir_vm_bank(d_model, 2, mode).unwrap();
            let table = fir_moment_table(&bank, d_model).unwrap();
            assert!(table.max_deviation < 1e-9, "D {d_model} {mode:?}: {:e}", table.max_deviation);
            for k in &bank {
                check_moments_against_derivatives(k).unwrap();
            }
        }
    }
}

#[test]
fn differentiator_bank_moments_match_derivatives() {
    for d in 0..=8 {
        check_moments_against_derivatives(&interp_diff(d).unwrap()).unwrap();
    }
}

#[test]
fn repeated_pole_ir_has_unit_sum_and_no_spread() {
    for sigma in [2.0, 4.0, 8.0, 16.0] {
        let f: ThreePartIIR = repeated_pole_blur(sigma, 1, 2).unwrap();
        let t = vmfilt::analysis::iir_moment_table(&f, 3).unwrap();
        assert!((t.literal[0][0] - 1.0).abs() < 1e-6 && t.literal[2][0].abs() < 1e-6, "sigma {sigma}");
    }
}

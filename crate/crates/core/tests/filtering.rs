//! Properties of separable image filtering.

use proptest::prelude::*;

use vmfilt::design::{
    blunt_exponential_blur, butterworth_blur, colored_sg_blur, fir_vm_bank, gaussian_fir, interp_diff,
    repeated_pole_blur, CascadeMode, FirKernel, Parity,
};
use vmfilt::engine::{apply_separable, conv_rows, derivative_field, Image, SeparableFilter, Stage};

fn image(w: usize, h: usize, values: &[f64]) -> Image {
    Image::new(w, h, values.to_vec()).unwrap()
}

fn pixels(w: usize, h: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, w * h)
}

/// Candidate stages, FIR and recursive.
fn stage(choice: usize, sigma: f64) -> Stage {
    match choice {
        0 => gaussian_fir(sigma, 0, (4.0 * sigma).ceil() as usize).unwrap().into(),
        1 => repeated_pole_blur(sigma, 1, 2).unwrap().into(),
        2 => butterworth_blur(sigma, 1).unwrap().into(),
        3 => blunt_exponential_blur(sigma.max(1.0), 3).unwrap().into(),
        4 => colored_sg_blur(sigma, 1).unwrap().into(),
        _ => interp_diff(choice - 5).unwrap().into(),
    }
}

fn band_pass(choice: usize, sigma: f64, dx: usize, dy: usize) -> SeparableFilter {
    let blur = stage(choice, sigma);
    SeparableFilter {
        x: vec![blur.clone(), interp_diff(dx).unwrap().into()],
        y: vec![blur, interp_diff(dy).unwrap().into()],
        label: (dx, dy),
    }
}

fn max_abs(img: &Image) -> f64 {
    img.data().iter().fold(0.0, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn filtering_is_linear(
        a in pixels(56, 48),
        b in pixels(56, 48),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
        choice in 0usize..9,
        sigma in 1.0..4.0f64,
        dx in 0usize..3,
        dy in 0usize..3,
    ) {
        let f = band_pass(choice, sigma, dx, dy);
        let (ia, ib) = (image(56, 48, &a), image(56, 48, &b));
        let mix = ia.zip_with(&ib, |p, q| alpha * p + beta * q).unwrap();
        let lhs = apply_separable(&mix, &f).unwrap();
        let (fa, fb) = (apply_separable(&ia, &f).unwrap(), apply_separable(&ib, &f).unwrap());
        let rhs = fa.zip_with(&fb, |p, q| alpha * p + beta * q).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs, 0).unwrap() < 1e-10);
    }

    #[test]
    fn fir_filtering_commutes_with_interior_shifts(
        values in pixels(64, 56),
        choice in prop_oneof![Just(0usize), Just(4), 5usize..9],
        sigma in 1.0..2.0f64,
    ) {
        let f = SeparableFilter::isotropic(vec![stage(choice, sigma)]);
        let img = image(64, 56, &values);
        // shifted(x, y) = img(x - 1, y)
        let shifted = Image::from_fn(64, 56, |x, y| img.get(x.saturating_sub(1), y)).unwrap();
        let (out, out_shifted) = (apply_separable(&img, &f).unwrap(), apply_separable(&shifted, &f).unwrap());
        let k = match &f.x[0] {
            Stage::Fir(k) => k.half_len(),
            Stage::Iir(_) => unreachable!(),
        };
        for y in k..56 - k {
            for x in k + 1..64 - k {
                prop_assert_eq!(out_shifted.get(x, y), out.get(x - 1, y));
            }
        }
    }

    #[test]
    fn recursive_filtering_commutes_with_interior_shifts(
        values in pixels(600, 2),
        choice in 1usize..4,
        sigma in 1.0..3.0f64,
    ) {
        let s = stage(choice, sigma);
        let img = image(600, 2, &values);
        let shifted = Image::from_fn(600, 2, |x, y| img.get(x.saturating_sub(1), y)).unwrap();
        let (out, out_shifted) = (s.apply_rows(&img).unwrap(), s.apply_rows(&shifted).unwrap());
        // edge transients decay geometrically; far from both ends only rounding remains
        for y in 0..2 {
            for x in 250..350 {
                prop_assert!((out_shifted.get(x, y) - out.get(x - 1, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_images_pass_through_blurs(c in -10.0..10.0f64, choice in 0usize..5, sigma in 1.0..6.0f64) {
        let s = stage(choice, sigma);
        let img = Image::filled(97, 83, c).unwrap();
        let out = apply_separable(&img, &SeparableFilter::isotropic(vec![s])).unwrap();
        prop_assert!(out.data().iter().all(|v| (v - c).abs() < 1e-10 * c.abs().max(1.0)));
    }

    #[test]
    fn derivatives_of_constants_vanish(c in -10.0..10.0f64, choice in 0usize..5, sigma in 1.0..4.0f64) {
        let field = derivative_field(&Image::filled(64, 64, c).unwrap(), &stage(choice, sigma), 3).unwrap();
        for (dx, dy, img) in field.iter() {
            if dx + dy > 0 {
                prop_assert!(max_abs(img) < 1e-10 * c.abs().max(1.0), "({}, {})", dx, dy);
            }
        }
    }

    #[test]
    fn axis_order_does_not_matter(values in pixels(56, 48), choice in 0usize..5, sigma in 1.0..4.0f64, d in 0usize..3) {
        let f = band_pass(choice, sigma, d, 2 - d.min(2));
        let img = image(56, 48, &values);
        let rows_first = apply_separable(&img, &f).unwrap();
        let mut cols_first = img.clone();
        for s in &f.y {
            cols_first = s.apply_cols(&cols_first).unwrap();
        }
        for s in &f.x {
            cols_first = s.apply_rows(&cols_first).unwrap();
        }
        prop_assert!(rows_first.max_abs_diff(&cols_first, 0).unwrap() < 1e-12);
    }
}

/// The response cut to `|m| <= keep`, and the absolute mass it drops.
fn truncated(ir: &[f64], keep: usize) -> (FirKernel, f64) {
    let k = ir.len() / 2;
    let keep = keep.min(k);
    let dropped = ir[..k - keep].iter().chain(&ir[k + keep + 1..]).map(|v| v.abs()).sum();
    (FirKernel::new(ir[k - keep..=k + keep].to_vec(), Parity::Symmetric, 0).unwrap(), dropped)
}

fn interior_error(s: &Stage, fir: &FirKernel, img: &Image) -> f64 {
    let margin = fir.half_len();
    let (a, b) = (s.apply_rows(img).unwrap(), conv_rows(img, fir).unwrap());
    (0..img.height())
        .flat_map(|y| (margin..img.width() - margin).map(move |x| (x, y)))
        .map(|(x, y)| (a.get(x, y) - b.get(x, y)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn recursive_blurs_match_their_truncated_responses() {
    let img = Image::from_fn(600, 3, |x, y| ((x * 7919 + y * 104729) % 1009) as f64 / 1009.0 - 0.5).unwrap();
    for sigma in [1.5, 3.0, 6.0] {
        for choice in 1..4 {
            let s = stage(choice, sigma);
            // full response down to 1e-14 of its peak
            let ir = s.impulse_response().unwrap();
            let (full, _) = truncated(&ir, ir.len() / 2);
            let err = interior_error(&s, &full, &img);
            assert!(err < 1e-8, "choice {choice} sigma {sigma}: {err:e}");
            // a 10 sigma window misses by at most the dropped tail
            let (short, dropped) = truncated(&ir, (10.0 * sigma).ceil() as usize);
            let err = interior_error(&s, &short, &img);
            assert!(err <= 0.5 * dropped + 1e-12, "choice {choice} sigma {sigma}: {err:e} vs {dropped:e}");
        }
    }
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    let img = Image::from_fn(301, 257, |x, y| ((x * 31 + y * 17) % 23) as f64 - 11.0).unwrap();
    let bank = fir_vm_bank(3, 2, CascadeMode::BehindBlur).unwrap();
    let filters: Vec<SeparableFilter> = (0..5)
        .map(|choice| SeparableFilter {
            x: vec![stage(choice, 2.5), bank[1].clone().into()],
            y: vec![stage(choice, 2.5), bank[2].clone().into()],
            label: (1, 2),
        })
        .collect();
    let run = |threads: usize| -> Vec<Image> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| filters.iter().map(|f| apply_separable(&img, f).unwrap()).collect())
    };
    let one = run(1);
    for threads in [2, 3, 8] {
        for (a, b) in one.iter().zip(run(threads)) {
            assert!(a.data().iter().zip(b.data()).all(|(p, q)| p.to_bits() == q.to_bits()), "{threads} threads");
        }
    }
}

use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::constraint::{i_pow, ConstraintSystem};
use super::{FirKernel, Parity};
use crate::error::{invalid, Error, Result};
use crate::polyz::LaurentPoly;
use crate::scalar::{factorial, solve, Dd, Matrix, Real};

/// Highest derivative order offered by the closed-form families.
pub const MAX_ORDER: usize = 8;

/// Largest tail mass a truncated Gaussian may discard.
pub const GAUSSIAN_TAIL_LIMIT: f64 = 1e-3;

/// Whether a derivative bank runs on its own or behind a blur that already
/// removes high frequencies (in which case Nyquist constraints are dropped).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CascadeMode {
    Standalone,
    BehindBlur,
}

/// Central-difference differentiator with `d` zeros at `z = 1` and `d mod 2`
/// zeros at `z = -1`.
pub fn interp_diff(d: usize) -> Result<FirKernel> {
    if d > MAX_ORDER {
        return Err(invalid(format!("derivative order {d} exceeds {MAX_ORDER}")));
    }
    let delta = d % 2;
    let k = (d + delta) / 2;
    let zm1 = LaurentPoly::from_advance_poly(&[-1.0, 1.0]);
    let zp1 = LaurentPoly::from_advance_poly(&[1.0, 1.0]);
    let num = &(&zm1.pow(d as u32) * &zp1.pow(delta as u32)) * &LaurentPoly::monomial(-(k as i64), 1.0);
    let num = num.scale(1.0 / (delta as f64 + 1.0)).trimmed().padded(k);
    // h(m) is the coefficient of z^-m
    let taps: Vec<f64> = (-(k as i64)..=k as i64).map(|m| num.coeff(-m)).collect();
    FirKernel::new(taps, Parity::of_order(d), d)
}

/// Probabilists' Hermite polynomial `He_n(x)`.
fn hermite(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for j in 1..n {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Sampled `d`-th derivative of a Gaussian, normalized so the `d = 0` kernel
/// of the same support sums to one.
pub fn gaussian_fir(sigma: f64, d: usize, k: usize) -> Result<FirKernel> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma must be positive"));
    }
    if d > MAX_ORDER {
        return Err(invalid(format!("derivative order {d} exceeds {MAX_ORDER}")));
    }
    let g0 = |m: f64| (-m * m / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt());
    let far = k + (40.0 * sigma).ceil() as usize;
    let inside: f64 = g0(0.0) + 2.0 * (1..=k).map(|m| g0(m as f64)).sum::<f64>();
    let outside: f64 = 2.0 * (k + 1..=far).map(|m| g0(m as f64)).sum::<f64>();
    let tail_mass = outside / (inside + outside);
    if tail_mass > GAUSSIAN_TAIL_LIMIT {
        return Err(Error::Truncation { k, tail_mass });
    }
    let cg = 1.0 / inside;
    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
    let h = |m: f64| cg * sign * hermite(d, m / sigma) / sigma.powi(d as i32) * g0(m);
    let right: Vec<f64> = (1..=k).map(|m| h(m as f64)).collect();
    FirKernel::from_half(h(0.0), &right, Parity::of_order(d), d)
}

/// Bank of `D` short FIR differentiators whose moments satisfy
/// `(1/d!) sum_m m^l h_d(-m) = delta_{d,l}` for `l, d < D`.
pub fn fir_vm_bank(d_model: usize, l_pi_bar: usize, mode: CascadeMode) -> Result<Vec<FirKernel>> {
    fir_vm_bank_with_systems(d_model, l_pi_bar, mode).map(|v| v.into_iter().map(|(k, _)| k).collect())
}

/// As [`fir_vm_bank`], also returning each kernel's constraint system.
pub fn fir_vm_bank_with_systems(
    d_model: usize,
    l_pi_bar: usize,
    mode: CascadeMode,
) -> Result<Vec<(FirKernel, ConstraintSystem)>> {
    if d_model % 2 == 0 || !(3..=9).contains(&d_model) {
        return Err(invalid(format!("model order D must be odd in 3..=9, got {d_model}")));
    }
    let l_d = d_model / 2;
    let l_pi = match mode {
        CascadeMode::Standalone => l_pi_bar,
        CascadeMode::BehindBlur => 0,
    };
    (0..d_model).map(|d| vm_kernel(d, l_d, l_pi)).collect()
}

fn vm_kernel(d: usize, l_d: usize, l_pi: usize) -> Result<(FirKernel, ConstraintSystem)> {
    let delta = d % 2;
    let l_dc = l_d - delta + 1;
    let n_k = l_dc + l_pi;
    let dd = Dd::from_f64;
    let mu = |k: usize| if k == 0 && delta == 0 { 0.5 } else { 1.0 };
    let sign_delta = if delta == 0 { 1.0 } else { -1.0 };

    // d^l/dw^l mu {e^{-inw} + (-1)^D e^{inw}} = 2 mu (-1)^D n^l i^l s^n at w = 0 (s = 1) or pi (s = -1)
    let entry = |k: usize, l: usize, nyquist: bool| -> Complex<Dd> {
        let n = k + delta;
        let nl = if l == 0 { 1.0 } else { (n as f64).powi(l as i32) };
        let s = if nyquist && n % 2 == 1 { -1.0 } else { 1.0 };
        i_pow(l) * dd(2.0 * mu(k) * sign_delta * nl * s)
    };
    let mut f = Vec::with_capacity(n_k);
    let mut rho = Vec::with_capacity(n_k);
    let zero = Complex::new(dd(0.0), dd(0.0));
    for lb in 0..l_dc {
        let l = 2 * lb + delta;
        f.push((0..n_k).map(|k| entry(k, l, false)).collect());
        rho.push(if l == d { i_pow(d) * dd(factorial(d)) } else { zero });
    }
    for lb in 0..l_pi {
        let l = 2 * lb + delta;
        f.push((0..n_k).map(|k| entry(k, l, true)).collect());
        rho.push(zero);
    }
    let (c, system) = ConstraintSystem::solve(f, rho)?;

    let k_hpf = n_k + delta - 1;
    let mut right = vec![0.0; k_hpf];
    let mut center = 0.0;
    for (k, ck) in c.iter().enumerate() {
        let n = k + delta;
        if n == 0 {
            center = ck.as_f64();
        } else {
            right[n - 1] = (dd(mu(k)) * *ck).as_f64();
        }
    }
    Ok((FirKernel::from_half(center, &right, Parity::of_order(d), d)?, system))
}

/// Half-length and cutoff used by the colored Savitzky-Golay blur.
pub fn colored_sg_support(sigma: f64, l_d: usize) -> Result<(usize, f64)> {
    let reach = match l_d {
        1 => 5.0,
        2 => 7.0,
        _ => return Err(invalid(format!("colored SG blur supports L_D = 1 or 2, got {l_d}"))),
    };
    Ok(((reach * sigma).ceil() as usize, 3.0 / sigma))
}

/// Symmetric FIR blur minimizing stop-band energy above `3/sigma` subject to
/// unity dc gain and vanishing even moments up to order `2 L_D`.
pub fn colored_sg_blur(sigma: f64, l_d: usize) -> Result<FirKernel> {
    if !(sigma >= 1.0 && sigma.is_finite()) {
        return Err(invalid(format!("colored SG blur needs sigma >= 1, got {sigma}")));
    }
    let (k, omega_c) = colored_sg_support(sigma, l_d)?;
    let cosine_gram = |a: usize, b: usize| stopband_gram(a, b, omega_c);
    constrained_cosine_blur(k, l_d, cosine_gram)
}

/// Stop-band Gram entry between cosine basis elements `a` and `b`
/// (`f_0 = delta_0`, `f_k = delta_{|m|,k}`).
fn stopband_gram(a: usize, b: usize, omega_c: f64) -> f64 {
    let bar = |m1: i64, m2: i64| {
        let d = (m1 - m2) as f64;
        if m1 == m2 {
            (PI - omega_c) / PI
        } else {
            -(omega_c * d).sin() / (PI * d)
        }
    };
    let support = |k: usize| if k == 0 { vec![0i64] } else { vec![-(k as i64), k as i64] };
    let mut s = 0.0;
    for &m1 in &support(a) {
        for &m2 in &support(b) {
            s += bar(m1, m2);
        }
    }
    s
}

/// Uniform (white-noise) Savitzky-Golay smoother over the same basis.
pub fn uniform_sg_blur(k: usize, l_d: usize) -> Result<FirKernel> {
    constrained_cosine_blur(k, l_d, |a, b| {
        if a != b {
            0.0
        } else if a == 0 {
            1.0
        } else {
            2.0
        }
    })
}

/// Minimizes `c^T S c` subject to dc constraints `rho_{0,l} = delta_{0,l}`,
/// `l = 0, 2, ..., 2 L_D`, through the saddle-point system.
fn constrained_cosine_blur(k: usize, l_d: usize, gram: impl Fn(usize, usize) -> f64) -> Result<FirKernel> {
    let n_k = k + 1;
    let l_dc = l_d + 1;
    if n_k < l_dc {
        return Err(invalid(format!("support K = {k} too short for {l_dc} constraints")));
    }
    let n = n_k + l_dc;
    let dd = Dd::from_f64;
    let mut m = Matrix::<Dd>::zeros(n);
    for a in 0..n_k {
        for b in 0..n_k {
            m.set(a, b, dd(gram(a, b)));
        }
    }
    for lb in 0..l_dc {
        let l = 2 * lb;
        for kk in 0..n_k {
            // d^l/dw^l of F_0 = 1 and F_k = 2 cos(kw) at w = 0
            let v = if kk == 0 {
                if l == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                let sign = if lb % 2 == 0 { 1.0 } else { -1.0 };
                2.0 * sign * (kk as f64).powi(l as i32)
            };
            m.set(n_k + lb, kk, dd(v));
            m.set(kk, n_k + lb, dd(v));
        }
    }
    let mut rhs = vec![dd(0.0); n];
    rhs[n_k] = dd(1.0);
    let x = solve(m, &rhs)?.x;
    let right: Vec<f64> = x[1..n_k].iter().map(|c| c.as_f64()).collect();
    FirKernel::from_half(x[0].as_f64(), &right, Parity::Symmetric, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyz::Point;

    #[test]
    fn table_of_central_differences() {
        let rows: [&[f64]; 5] =
            [&[1.0], &[0.5, 0.0, -0.5], &[1.0, -2.0, 1.0], &[0.5, -1.0, 0.0, 1.0, -0.5], &[1.0, -4.0, 6.0, -4.0, 1.0]];
        for (d, expect) in rows.iter().enumerate() {
            assert_eq!(interp_diff(d).unwrap().taps(), *expect, "d = {d}");
        }
    }

    #[test]
    fn differentiator_on_monomials() {
        for d in 0..=4 {
            let k = interp_diff(d).unwrap();
            let kh = k.half_len() as i64;
            // y(0) = sum_m h(m) x(-m) with x(n) = n^d
            let y: f64 = (-kh..=kh).map(|m| k.tap(m) * ((-m) as f64).powi(d as i32)).sum();
            assert_eq!(y, factorial(d), "d = {d}");
        }
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 0.3), 1.0);
        assert_eq!(hermite(1, 0.3), 0.3);
        assert!((hermite(4, 2.0) - (16.0 - 24.0 + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_blur_sums_to_one() {
        for sigma in [0.8, 1.0, 3.0, 12.5] {
            let k = gaussian_fir(sigma, 0, (5.0 * sigma).ceil() as usize).unwrap();
            assert!((k.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_truncation_is_refused() {
        assert!(matches!(gaussian_fir(4.0, 0, 4), Err(Error::Truncation { k: 4, .. })));
    }

    #[test]
    fn vm_bank_d3_behind_blur() {
        let bank = fir_vm_bank(3, 0, CascadeMode::BehindBlur).unwrap();
        assert_eq!(bank[0].taps(), &[0.0, 1.0, 0.0]);
        assert_eq!(bank[1].taps(), &[0.5, 0.0, -0.5]);
        assert_eq!(bank[2].taps(), &[1.0, -2.0, 1.0]);
    }

    #[test]
    fn vm_bank_d5_kills_cubic_response() {
        let bank = fir_vm_bank(5, 0, CascadeMode::BehindBlur).unwrap();
        assert!(bank[1].moment(3).abs() < 1e-12);
        assert!((bank[1].moment(1) - 1.0).abs() < 1e-12);
        assert!(interp_diff(1).unwrap().moment(3) != 0.0);
    }

    #[test]
    fn standalone_bank_has_nyquist_zeros() {
        let bank = fir_vm_bank(3, 2, CascadeMode::Standalone).unwrap();
        for k in &bank[1..] {
            assert!(k.eval_freq(PI).norm() < 1e-12);
        }
        // K = L_dc + L_pi + delta - 1
        assert_eq!(bank[0].half_len(), 3);
        assert_eq!(bank[1].half_len(), 3);
    }

    #[test]
    fn colored_sg_constraints() {
        for sigma in [1.0, 2.5, 4.0] {
            let k = colored_sg_blur(sigma, 1).unwrap();
            assert!((k.sum() - 1.0).abs() < 1e-12);
            assert!(k.moment(2).abs() < 1e-9);
            let rho = k.dc_derivatives(Point::Dc, 2).unwrap();
            assert!(rho[2].norm() < 1e-9);
        }
        let k2 = colored_sg_blur(2.0, 2).unwrap();
        assert_eq!(k2.half_len(), 14);
        assert!(k2.moment(2).abs() < 1e-8 && k2.moment(4).abs() < 1e-6);
    }

    #[test]
    fn gram_diagonal() {
        let wc = 0.75;
        assert!((stopband_gram(0, 0, wc) - (PI - wc) / PI).abs() < 1e-15);
    }
}

use std::f64::consts::PI;

use num_complex::{Complex, Complex64};

use super::constraint::ConstraintSystem;
use super::Parity;
use crate::error::{invalid, Result};
use crate::polyz::{
    split_denominator_seeded, three_part_decompose_with_split, DenominatorSplit, LaurentPoly, Point, RationalTF,
    ThreePartIIR,
};
use crate::scalar::{Dd, Real};

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v >= 1.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be at least 1, got {v}")))
    }
}

/// `exp(-1/scale)`. The design is exact for the rounded pole.
fn pole(scale: f64) -> Dd {
    Dd::from_f64((-1.0 / scale).exp())
}

/// Ascending-power polynomial product.
fn pmul(a: &[Dd], b: &[Dd]) -> Vec<Dd> {
    let mut out = vec![Dd::from_f64(0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

fn ppow(a: &[Dd], n: usize) -> Vec<Dd> {
    (0..n).fold(vec![Dd::from_f64(1.0)], |acc, _| pmul(&acc, a))
}

/// `(1 - p z^-1)^K` as the forward denominator `[1, a_1, ..., a_K]`.
fn repeated_pole_split(p: Dd, k: usize) -> DenominatorSplit<Dd> {
    DenominatorSplit { a_plus: ppow(&[Dd::from_f64(1.0), -p], k), a_zero: Dd::from_f64(1.0) }
}

/// Numerators `N_k(w)` of `Z{m^k p^m} = N_k(w) / (1 - p w)^(k+1)`, `w = z^-1`,
/// for `k = 0..n`.
fn moment_numerators(p: Dd, n: usize) -> Vec<Vec<Dd>> {
    let one = Dd::from_f64(1.0);
    let mut out = vec![vec![one]];
    for k in 0..n.saturating_sub(1) {
        let nk = &out[k];
        // w [N_k' (1 - p w) + (k + 1) p N_k], from Z{m f} = -z dF/dz
        let deriv: Vec<Dd> = if nk.len() > 1 {
            nk.iter().enumerate().skip(1).map(|(i, &c)| c * Dd::from_usize(i)).collect()
        } else {
            vec![Dd::from_f64(0.0)]
        };
        let mut inner = pmul(&deriv, &[one, -p]);
        let scaled: Vec<Dd> = nk.iter().map(|&c| c * Dd::from_usize(k + 1) * p).collect();
        if inner.len() < scaled.len() {
            inner.resize(scaled.len(), Dd::from_f64(0.0));
        }
        for (i, c) in scaled.into_iter().enumerate() {
            inner[i] = inner[i] + c;
        }
        let mut next = vec![Dd::from_f64(0.0)];
        next.extend(inner);
        while next.len() > 1 && *next.last().unwrap() == 0.0 {
            next.pop();
        }
        out.push(next);
    }
    out.truncate(n);
    out
}

/// Repeated-pole blur transfer function at double-double precision, with
/// its constraint system. The common denominator is `((1 - p z^-1)(1 - p z))^K`
/// with `K = L_D + L_pi_bar`.
pub fn repeated_pole_tf(sigma: f64, l_d: usize, l_pi_bar: usize) -> Result<(RationalTF<Dd>, ConstraintSystem)> {
    check_scale("sigma", sigma)?;
    if l_d == 0 || l_d + l_pi_bar > 6 {
        return Err(invalid(format!(
            "repeated-pole blur needs L_D >= 1 and L_D + L_pi_bar <= 6, got {l_d} + {l_pi_bar}"
        )));
    }
    let p = pole(sigma);
    let n_k = l_d + 1 + l_pi_bar;
    let k = n_k - 1;
    let one = Dd::from_f64(1.0);
    let split = repeated_pole_split(p, k);
    let den = split.product();
    let nums = moment_numerators(p, k);

    let mut basis: Vec<LaurentPoly<Dd>> = Vec::with_capacity(n_k);
    for (j, nj) in nums.iter().enumerate() {
        // F_j+(z) over the common denominator, plus its mirror, minus f_j(0)
        let pad = ppow(&[one, -p], k - j - 1);
        let fwd = &LaurentPoly::from_delay_poly(&pmul(nj, &pad)) * &LaurentPoly::from_advance_poly(&split.a_plus);
        let bwd = &LaurentPoly::from_advance_poly(&pmul(nj, &pad)) * &LaurentPoly::from_delay_poly(&split.a_plus);
        let mut f = &fwd + &bwd;
        if j == 0 {
            f = &f - &den;
        }
        basis.push(f);
    }
    basis.push(den.clone());

    let l_max = 2 * l_d.max(l_pi_bar.saturating_sub(1));
    let derivs: Vec<(Vec<Complex<Dd>>, Vec<Complex<Dd>>)> = basis
        .iter()
        .map(|b| {
            let tf = RationalTF::new(b.clone(), den.clone());
            Ok((tf.dc_derivatives(Point::Dc, l_max)?, tf.dc_derivatives(Point::Nyquist, l_max)?))
        })
        .collect::<Result<_>>()?;
    let zero = Complex::new(Dd::from_f64(0.0), Dd::from_f64(0.0));
    let mut f = Vec::with_capacity(n_k);
    let mut rho = Vec::with_capacity(n_k);
    for lb in 0..=l_d {
        f.push(derivs.iter().map(|(dc, _)| dc[2 * lb]).collect());
        rho.push(if lb == 0 { Complex::new(one, Dd::from_f64(0.0)) } else { zero });
    }
    for lb in 0..l_pi_bar {
        f.push(derivs.iter().map(|(_, ny)| ny[2 * lb]).collect());
        rho.push(zero);
    }
    let (c, system) = ConstraintSystem::solve(f, rho)?;
    let num = basis.iter().zip(&c).fold(LaurentPoly::zero(), |acc, (b, &ck)| &acc + &b.scale(ck));
    Ok((RationalTF::new(num, den), system))
}

/// Symmetric IIR blur from exponentials with repeated poles at
/// `p = exp(-1/sigma)`, flat to order `2 L_D` at dc with `L_pi_bar` even
/// derivative zeros at Nyquist.
pub fn repeated_pole_blur(sigma: f64, l_d: usize, l_pi_bar: usize) -> Result<ThreePartIIR> {
    let (tf, _) = repeated_pole_tf(sigma, l_d, l_pi_bar)?;
    let p = pole(sigma);
    let split = repeated_pole_split(p, l_d + l_pi_bar);
    three_part_decompose_with_split(&tf, &split, Parity::Symmetric)
}

/// Cutoff placing the Butterworth half-gain point on that of a Gaussian
/// with frequency-domain standard deviation `1/sigma`.
pub fn butterworth_cutoff(sigma: f64) -> f64 {
    (2.0 * std::f64::consts::LN_2).sqrt() / sigma
}

/// Bilinear-transformed zero-phase Butterworth `1 / (1 + (-s^2/w_c^2)^n)`.
pub fn butterworth_tf(omega_c: f64, n: usize) -> Result<RationalTF<Dd>> {
    if !(omega_c > 0.0 && omega_c < PI) || n == 0 || n > 8 {
        return Err(invalid(format!("Butterworth needs 0 < w_c < pi and 1 <= n <= 8, got {omega_c}, {n}")));
    }
    let dd = Dd::from_f64;
    let w2n = dd(omega_c).powi(2 * n as i32);
    let sum = LaurentPoly::new(vec![dd(1.0), dd(2.0), dd(1.0)])?.pow(n as u32);
    let diff = LaurentPoly::new(vec![dd(1.0), dd(-2.0), dd(1.0)])?.pow(n as u32);
    let num = sum.scale(w2n);
    let den = &num + &diff.scale(dd(-4.0).powi(n as i32));
    Ok(RationalTF::new(num, den))
}

/// Forward poles of [`butterworth_tf`]: left-half-plane analog poles mapped
/// through `z = (2 + s) / (2 - s)`.
fn butterworth_poles(omega_c: f64, n: usize) -> Vec<Complex64> {
    (0..2 * n)
        .map(|j| {
            let theta = PI * (2 * j + 1) as f64 / (2 * n) as f64;
            Complex64::new(0.0, omega_c) * Complex64::from_polar(1.0, theta)
        })
        .filter(|s| s.re < 0.0)
        .map(|s| (2.0 + s) / (2.0 - s))
        .collect()
}

pub fn butterworth_from_cutoff(omega_c: f64, n: usize) -> Result<ThreePartIIR> {
    let tf = butterworth_tf(omega_c, n)?;
    let split = split_denominator_seeded(&tf.den, &butterworth_poles(omega_c, n))?;
    three_part_decompose_with_split(&tf, &split, Parity::Symmetric)
}

/// Butterworth blur of order `2 (L_D + 1)` tuned to `sigma`.
pub fn butterworth_blur(sigma: f64, l_d: usize) -> Result<ThreePartIIR> {
    check_scale("sigma", sigma)?;
    butterworth_from_cutoff(butterworth_cutoff(sigma), l_d + 1)
}

/// Third-order Butterworth with `w_c = 1/lambda`.
pub fn butterworth_appendix(lambda: f64) -> Result<ThreePartIIR> {
    check_scale("lambda", lambda)?;
    butterworth_from_cutoff(1.0 / lambda, 3)
}

/// `c_0 ((z^-1 + 2 + z) / (-p z^-1 + 1 + p^2 - p z))^K` with
/// `p = exp(-1/lambda)` and unit dc gain.
pub fn blunt_exponential_blur(lambda: f64, k: usize) -> Result<ThreePartIIR> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(1..=4).contains(&k) {
        return Err(invalid(format!("blunt exponential needs 1 <= K <= 4, got {k}")));
    }
    let dd = Dd::from_f64;
    let p = pole(lambda);
    let one_minus = dd(1.0) - p;
    let c0 = (one_minus * one_minus / dd(4.0)).powi(k as i32);
    let num = LaurentPoly::new(vec![dd(1.0), dd(2.0), dd(1.0)])?.pow(k as u32).scale(c0);
    let split = repeated_pole_split(p, k);
    let tf = RationalTF::new(num, split.product());
    three_part_decompose_with_split(&tf, &split, Parity::Symmetric)
}

//! Laurent polynomials in `z`, rational transfer functions, and the machinery
//! that turns a non-causal transfer function into a realizable three-part
//! difference equation.
//!
//! Indexing convention: the coefficient of `z^m` is `b_m = h(-m)`, the
//! frequency response is `H(w) = sum_m b_m e^{imw}`, and a filter maps a
//! scan line as `y(n) = sum_m h(m) x(n - m)`. Positive powers of `z`
//! therefore reach forward along the data index.

mod decompose;
mod json;
mod split;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::{Complex, Complex64};

use crate::error::{invalid, Error, Result};
use crate::scalar::{cabs, factorial, Real};

pub use decompose::{
    three_part_decompose, three_part_decompose_with_split, Parity, ThreePartIIR, MAX_DECOMPOSITION_ORDER,
    REALIZATION_TOL,
};
pub use json::{FilterJson, TfJson, ThreePartJson};
pub use split::{split_denominator, split_denominator_seeded, DenominatorSplit, UNIT_CIRCLE_TOL};

/// Largest derivative order accepted by [`RationalTF::dc_derivatives`].
pub const MAX_DERIVATIVE_ORDER: usize = 12;

/// Polynomial in `z` with powers `-K..=K`, stored centered on `z^0`.
#[derive(Clone, PartialEq)]
pub struct LaurentPoly<T = f64> {
    k: usize,
    coeffs: Vec<T>,
}

impl<T: Real> fmt::Debug for LaurentPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<f64> = self.coeffs.iter().map(|c| c.as_f64()).collect();
        write!(f, "LaurentPoly(k={}, {:?})", self.k, c)
    }
}

impl<T: Real> LaurentPoly<T> {
    /// Builds from `2K+1` coefficients ordered `m = -K..=K`.
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(invalid(format!("Laurent coefficient array must have odd length, got {}", coeffs.len())));
        }
        Ok(LaurentPoly { k: coeffs.len() / 2, coeffs })
    }

    /// Builds from coefficients of `z^lo, z^(lo+1), ...`, padding to a centered layout.
    pub fn from_range(lo: i64, coeffs: &[T]) -> Self {
        if coeffs.is_empty() {
            return Self::zero();
        }
        let hi = lo + coeffs.len() as i64 - 1;
        let k = lo.abs().max(hi.abs()) as usize;
        let mut out = vec![T::zero(); 2 * k + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            out[(lo + i as i64 + k as i64) as usize] = c;
        }
        LaurentPoly { k, coeffs: out }
    }

    /// `sum_i w[i] z^{-i}`: a polynomial in the delay operator.
    pub fn from_delay_poly(w: &[T]) -> Self {
        let rev: Vec<T> = w.iter().rev().copied().collect();
        Self::from_range(-(w.len() as i64) + 1, &rev)
    }

    /// `sum_i a[i] z^{i}`: a polynomial in the advance operator.
    pub fn from_advance_poly(a: &[T]) -> Self {
        Self::from_range(0, a)
    }

    pub fn zero() -> Self {
        LaurentPoly { k: 0, coeffs: vec![T::zero()] }
    }

    pub fn constant(c: T) -> Self {
        LaurentPoly { k: 0, coeffs: vec![c] }
    }

    pub fn monomial(m: i64, c: T) -> Self {
        Self::from_range(m, &[c])
    }

    /// Half-order `K`.
    pub fn half_order(&self) -> usize {
        self.k
    }

    /// Coefficients ordered `m = -K..=K`.
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `z^m`; zero outside the stored range.
    pub fn coeff(&self, m: i64) -> T {
        let idx = m + self.k as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            T::zero()
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// `(m, coefficient)` pairs, ascending in `m`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        let k = self.k as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - k, c))
    }

    pub fn padded(&self, k: usize) -> Self {
        if k <= self.k {
            return self.clone();
        }
        let mut out = vec![T::zero(); 2 * k + 1];
        let off = k - self.k;
        out[off..off + self.coeffs.len()].copy_from_slice(&self.coeffs);
        LaurentPoly { k, coeffs: out }
    }

    /// Drops symmetric pairs of exactly-zero outer coefficients.
    pub fn trimmed(&self) -> Self {
        let mut k = self.k;
        while k > 0 && self.coeff(k as i64) == T::zero() && self.coeff(-(k as i64)) == T::zero() {
            k -= 1;
        }
        let off = self.k - k;
        LaurentPoly { k, coeffs: self.coeffs[off..off + 2 * k + 1].to_vec() }
    }

    pub fn scale(&self, s: T) -> Self {
        LaurentPoly { k: self.k, coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    /// `z -> 1/z`.
    pub fn reflect(&self) -> Self {
        LaurentPoly { k: self.k, coeffs: self.coeffs.iter().rev().copied().collect() }
    }

    /// Derivative with respect to `z`.
    pub fn derivative(&self) -> Self {
        let terms: Vec<T> = self.terms().map(|(m, c)| c * T::from_i64(m)).collect();
        // the z^m term becomes z^(m-1)
        Self::from_range(-(self.k as i64) - 1, &terms).trimmed()
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(T::one()), |acc, _| &acc * self)
    }

    /// Value at `z = 1`.
    pub fn sum(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |a, &c| a + c)
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        // Horner on z^K * p(z), then divide by z^K.
        let mut acc = Complex::new(T::zero(), T::zero());
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + Complex::new(c, T::zero());
        }
        acc / z.powi(self.k as i32)
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |a, &c| a.max(c.abs()))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs().as_f64().max(f64::MIN_POSITIVE);
        (1..=self.k as i64).all(|m| (self.coeff(m) - self.coeff(-m)).abs().as_f64() <= rel_tol * scale)
    }

    pub fn is_antisymmetric(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs().as_f64().max(f64::MIN_POSITIVE);
        self.coeff(0).abs().as_f64() <= rel_tol * scale
            && (1..=self.k as i64).all(|m| (self.coeff(m) + self.coeff(-m)).abs().as_f64() <= rel_tol * scale)
    }

    pub fn convert<U: Real>(&self) -> LaurentPoly<U> {
        LaurentPoly { k: self.k, coeffs: self.coeffs.iter().map(|c| U::from_f64(c.as_f64())).collect() }
    }

    /// Rounds every coefficient to `f64`.
    pub fn to_f64(&self) -> LaurentPoly<f64> {
        LaurentPoly { k: self.k, coeffs: self.coeffs.iter().map(|c| c.as_f64()).collect() }
    }

    /// Largest coefficient difference relative to the larger operand's scale.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let k = self.k.max(other.k) as i64;
        let scale = self.max_abs().max(other.max_abs()).as_f64().max(f64::MIN_POSITIVE);
        (-k..=k).map(|m| (self.coeff(m) - other.coeff(m)).abs().as_f64()).fold(0.0, f64::max) / scale
    }

    /// Taylor coefficients of `p(e^{iw})` about `w0 = 0` (`sign = 1`) or
    /// `w0 = pi` (`sign = -1`), up to order `l_max`.
    fn taylor(&self, sign: i64, l_max: usize) -> Vec<Complex<T>> {
        (0..=l_max)
            .map(|l| {
                let mut s = T::zero();
                for (m, c) in self.terms() {
                    if c == T::zero() {
                        continue;
                    }
                    let phase = if sign < 0 && m.rem_euclid(2) == 1 { -c } else { c };
                    s = s + phase * T::from_i64(m).powi(l as i32);
                }
                let s = s / T::from_f64(factorial(l));
                // multiply by i^l
                match l % 4 {
                    0 => Complex::new(s, T::zero()),
                    1 => Complex::new(T::zero(), s),
                    2 => Complex::new(-s, T::zero()),
                    _ => Complex::new(T::zero(), -s),
                }
            })
            .collect()
    }
}

impl<'a, T: Real> Add<&'a LaurentPoly<T>> for &'a LaurentPoly<T> {
    type Output = LaurentPoly<T>;
    fn add(self, rhs: &LaurentPoly<T>) -> LaurentPoly<T> {
        let k = self.k.max(rhs.k);
        let coeffs = (-(k as i64)..=k as i64).map(|m| self.coeff(m) + rhs.coeff(m)).collect();
        LaurentPoly { k, coeffs }
    }
}

impl<'a, T: Real> Sub<&'a LaurentPoly<T>> for &'a LaurentPoly<T> {
    type Output = LaurentPoly<T>;
    fn sub(self, rhs: &LaurentPoly<T>) -> LaurentPoly<T> {
        let k = self.k.max(rhs.k);
        let coeffs = (-(k as i64)..=k as i64).map(|m| self.coeff(m) - rhs.coeff(m)).collect();
        LaurentPoly { k, coeffs }
    }
}

impl<'a, T: Real> Mul<&'a LaurentPoly<T>> for &'a LaurentPoly<T> {
    type Output = LaurentPoly<T>;
    fn mul(self, rhs: &LaurentPoly<T>) -> LaurentPoly<T> {
        let k = self.k + rhs.k;
        let mut coeffs = vec![T::zero(); 2 * k + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j] + a * b;
            }
        }
        LaurentPoly { k, coeffs }
    }
}

impl<T: Real> Neg for &LaurentPoly<T> {
    type Output = LaurentPoly<T>;
    fn neg(self) -> LaurentPoly<T> {
        self.scale(-T::one())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl<T: Real> $tr<LaurentPoly<T>> for LaurentPoly<T> {
            type Output = LaurentPoly<T>;
            fn $f(self, rhs: LaurentPoly<T>) -> LaurentPoly<T> {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Where frequency-domain derivatives are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Point {
    Dc,
    Nyquist,
}

impl Point {
    pub fn omega(self) -> f64 {
        match self {
            Point::Dc => 0.0,
            Point::Nyquist => std::f64::consts::PI,
        }
    }
}

/// `H(z) = num(z) / den(z)`.
#[derive(Clone, PartialEq)]
pub struct RationalTF<T = f64> {
    pub num: LaurentPoly<T>,
    pub den: LaurentPoly<T>,
}

impl<T: Real> fmt::Debug for RationalTF<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RationalTF").field("num", &self.num).field("den", &self.den).finish()
    }
}

impl<T: Real> RationalTF<T> {
    pub fn new(num: LaurentPoly<T>, den: LaurentPoly<T>) -> Self {
        RationalTF { num, den }
    }

    pub fn fir(num: LaurentPoly<T>) -> Self {
        RationalTF { num, den: LaurentPoly::constant(T::one()) }
    }

    pub fn identity() -> Self {
        Self::fir(LaurentPoly::constant(T::one()))
    }

    pub fn half_order(&self) -> usize {
        self.num.half_order().max(self.den.half_order())
    }

    pub fn cascade(&self, other: &Self) -> Self {
        RationalTF { num: &self.num * &other.num, den: &self.den * &other.den }
    }

    pub fn to_f64(&self) -> RationalTF<f64> {
        RationalTF { num: self.num.to_f64(), den: self.den.to_f64() }
    }

    /// Gain at dc, `H(z = 1)`.
    pub fn dc_gain(&self) -> T {
        self.num.sum() / self.den.sum()
    }

    /// Frequency response at `omega` radians per pixel.
    pub fn eval_freq(&self, omega: f64) -> Result<Complex64> {
        let z = Complex::new(T::from_f64(omega.cos()), T::from_f64(omega.sin()));
        let d = self.den.eval(z);
        let scale = self.den.max_abs().as_f64();
        if cabs(d) <= 100.0 * T::epsilon().as_f64() * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::PoleOnUnitCircle { omega });
        }
        let h = self.num.eval(z) / d;
        Ok(Complex64::new(h.re.as_f64(), h.im.as_f64()))
    }

    /// `d^l H / dw^l` at `w = 0` or `w = pi` for `l = 0..=l_max`, via
    /// truncated power-series division of the numerator and denominator
    /// Taylor expansions.
    pub fn dc_derivatives(&self, at: Point, l_max: usize) -> Result<Vec<Complex<T>>> {
        if l_max > MAX_DERIVATIVE_ORDER {
            return Err(invalid(format!(
                "derivative order {l_max} exceeds the conditioning limit {MAX_DERIVATIVE_ORDER}"
            )));
        }
        let sign = if at == Point::Dc { 1 } else { -1 };
        let n = self.num.taylor(sign, l_max);
        let d = self.den.taylor(sign, l_max);
        let d0 = d[0];
        let scale = self.den.max_abs().as_f64();
        if cabs(d0) <= 100.0 * T::epsilon().as_f64() * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::SeriesDivision);
        }
        let mut q: Vec<Complex<T>> = Vec::with_capacity(l_max + 1);
        for l in 0..=l_max {
            let mut s = n[l];
            for j in 0..l {
                s = s - q[j] * d[l - j];
            }
            q.push(s / d0);
        }
        Ok(q.into_iter().enumerate().map(|(l, c)| c * T::from_f64(factorial(l))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lp(c: &[f64]) -> LaurentPoly {
        LaurentPoly::new(c.to_vec()).unwrap()
    }

    #[test]
    fn square_of_z_plus_one() {
        let p = LaurentPoly::from_advance_poly(&[1.0, 1.0]);
        let sq = &p * &p;
        assert_eq!(sq.half_order(), 2);
        assert_eq!(sq.coeff(0), 1.0);
        assert_eq!(sq.coeff(1), 2.0);
        assert_eq!(sq.coeff(2), 1.0);
        assert_eq!(sq.coeff(-1), 0.0);
    }

    #[test]
    fn interp_diff_numerator_for_d2() {
        // (z - 1)^2 (z + 1)^0, centered by z^-1
        let zm1 = LaurentPoly::from_advance_poly(&[-1.0, 1.0]);
        let num = &zm1.pow(2) * &LaurentPoly::monomial(-1, 1.0);
        let num = num.trimmed();
        assert_eq!(num.coeffs(), &[1.0, -2.0, 1.0]);
    }

    #[test]
    fn derivative_in_z() {
        let p = LaurentPoly::from_advance_poly(&[1.0, 2.0, 1.0]);
        let d = p.derivative();
        assert_eq!(d.coeff(0), 2.0);
        assert_eq!(d.coeff(1), 2.0);
        assert_eq!(d.coeff(2), 0.0);
        // z^-1 -> -z^-2
        let q = LaurentPoly::monomial(-1, 1.0).derivative();
        assert_eq!(q.coeff(-2), -1.0);
    }

    #[test]
    fn multiply_adds_half_orders() {
        let a = lp(&[1.0, 2.0, 3.0]);
        let b = lp(&[1.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!((&a * &b).half_order(), 3);
    }

    #[test]
    fn eval_identity_and_second_difference() {
        let id = RationalTF::<f64>::identity();
        let h = id.eval_freq(1.0).unwrap();
        assert!((h - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let tf = RationalTF::fir(lp(&[1.0, -2.0, 1.0]));
        let h = tf.eval_freq(PI).unwrap();
        assert!((h.re + 4.0).abs() < 1e-14 && h.im.abs() < 1e-12);
    }

    #[test]
    fn pole_on_unit_circle_names_omega() {
        // den = 1 - z^-1 vanishes at w = 0
        let tf = RationalTF::new(lp(&[1.0]), LaurentPoly::from_delay_poly(&[1.0, -1.0]));
        match tf.eval_freq(0.0) {
            Err(Error::PoleOnUnitCircle { omega }) => assert_eq!(omega, 0.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(tf.dc_derivatives(Point::Dc, 2), Err(Error::SeriesDivision)));
    }

    #[test]
    fn dc_derivatives_of_second_difference() {
        let tf = RationalTF::fir(lp(&[1.0, -2.0, 1.0]));
        let rho = tf.dc_derivatives(Point::Dc, 4).unwrap();
        let expect = [0.0, 0.0, -2.0, 0.0, 2.0];
        for (r, e) in rho.iter().zip(expect) {
            assert!((r.re - e).abs() < 1e-12 && r.im.abs() < 1e-12, "{r} vs {e}");
        }
    }

    #[test]
    fn identity_derivatives() {
        let rho = RationalTF::<f64>::identity().dc_derivatives(Point::Dc, 6).unwrap();
        assert_eq!(rho[0], Complex64::new(1.0, 0.0));
        assert!(rho[1..].iter().all(|r| r.norm() == 0.0));
    }

    #[test]
    fn derivative_order_limit() {
        let tf = RationalTF::<f64>::identity();
        assert!(tf.dc_derivatives(Point::Dc, 13).is_err());
    }

    #[test]
    fn rational_derivatives_match_finite_differences() {
        // H(z) = (1-p)^2 / ((1 - p z^-1)(1 - p z)): two-sided exponential
        let p = 0.6;
        let den = &LaurentPoly::from_delay_poly(&[1.0, -p]) * &LaurentPoly::from_advance_poly(&[1.0, -p]);
        let tf = RationalTF::new(LaurentPoly::constant((1.0 - p) * (1.0 - p)), den);
        let rho = tf.dc_derivatives(Point::Dc, 2).unwrap();
        let h = |w: f64| tf.eval_freq(w).unwrap().re;
        let step = 1e-3;
        let fd2 =
            (-h(2.0 * step) + 16.0 * h(step) - 30.0 * h(0.0) + 16.0 * h(-step) - h(-2.0 * step)) / (12.0 * step * step);
        assert!((rho[0].re - 1.0).abs() < 1e-14);
        assert!(rho[1].norm() < 1e-14);
        assert!((rho[2].re - fd2).abs() < 1e-6, "{} vs {}", rho[2].re, fd2);
    }
}

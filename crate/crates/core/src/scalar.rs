//! Scalar plumbing shared by the design code: a real-number trait covering
//! `f64` and double-double, and a small dense solver with a condition estimate.

use std::cmp::Ordering;
use std::fmt::{self, Debug};
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_complex::Complex;
use num_traits::{Num, One, Zero};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Real scalar used by the design code: `f64` or [`Dd`].
pub trait Real: Copy + Num + Neg<Output = Self> + PartialOrd + Debug + Send + Sync + 'static {
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
    /// Unit roundoff of the representation.
    fn epsilon() -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    fn from_i64(n: i64) -> Self {
        Self::from_f64(n as f64)
    }

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn max(self, other: Self) -> Self {
        f64::max(self, other)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Magnitude of a complex value, in `f64`.
pub fn cabs<T: Real>(c: Complex<T>) -> f64 {
    c.re.as_f64().hypot(c.im.as_f64())
}

/// Double-double real (about 106 significant bits).
///
/// Addition, subtraction and multiplication come from `twofloat`; its
/// double-double quotient drops the low word, so division is done here by
/// long division with exact residuals.
#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct Dd(TwoFloat);

impl Dd {
    pub fn hi(self) -> f64 {
        self.0.hi()
    }

    pub fn lo(self) -> f64 {
        self.0.lo()
    }
}

impl Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.0.hi(), self.0.lo())
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        Dd(self.0 + rhs.0)
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        Dd(self.0 - rhs.0)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        Dd(self.0 * rhs.0)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let d = rhs.0.hi();
        let q1 = self.0.hi() / d;
        let r = self.0 - rhs.0 * q1;
        let q2 = r.hi() / d;
        let r = r - rhs.0 * q2;
        let q3 = r.hi() / d;
        Dd(TwoFloat::new_add(q1, q2) + q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, rhs: Dd) -> Dd {
        let q = (self / rhs).0.trunc();
        self - Dd(q) * rhs
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd(-self.0)
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd(TwoFloat::from(0.0))
    }
    fn is_zero(&self) -> bool {
        self.0.hi() == 0.0
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd(TwoFloat::from(1.0))
    }
}

impl Num for Dd {
    type FromStrRadixErr = num_traits::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> std::result::Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Dd::from_f64)
    }
}

impl Real for Dd {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Dd(TwoFloat::from(x))
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self.0.hi() + self.0.lo()
    }
    fn epsilon() -> Self {
        Dd::from_f64(f64::EPSILON * f64::EPSILON / 2.0)
    }
    fn abs(self) -> Self {
        if self.0.hi() < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl PartialEq<f64> for Dd {
    fn eq(&self, other: &f64) -> bool {
        self.0 == TwoFloat::from(*other)
    }
}

impl PartialOrd<f64> for Dd {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.0.partial_cmp(&TwoFloat::from(*other))
    }
}

/// Element type accepted by [`solve`].
pub trait Field: Copy + Num + Neg<Output = Self> + Debug {
    fn magnitude(&self) -> f64;
}

impl<T: Real> Field for T {
    fn magnitude(&self) -> f64 {
        self.abs().as_f64()
    }
}

impl<T: Real> Field for Complex<T> {
    fn magnitude(&self) -> f64 {
        cabs(*self)
    }
}

/// Dense row-major square matrix.
#[derive(Debug, Clone)]
pub struct Matrix<E> {
    pub n: usize,
    pub data: Vec<E>,
}

impl<E: Field> Matrix<E> {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![E::zero(); n * n] }
    }

    pub fn from_rows(rows: Vec<Vec<E>>) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(&row);
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> E {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: E) {
        self.data[r * self.n + c] = v;
    }

    pub fn mul_vec(&self, x: &[E]) -> Vec<E> {
        (0..self.n).map(|r| (0..self.n).fold(E::zero(), |acc, c| acc + self.get(r, c) * x[c])).collect()
    }

    fn norm1(&self) -> f64 {
        (0..self.n).map(|c| (0..self.n).map(|r| self.get(r, c).magnitude()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// LU factorization with partial pivoting.
struct Lu<E> {
    lu: Matrix<E>,
    perm: Vec<usize>,
}

impl<E: Field> Lu<E> {
    fn factor(mut a: Matrix<E>) -> Option<Self> {
        let n = a.n;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) =
                (k..n)
                    .map(|r| (r, a.get(r, k).magnitude()))
                    .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            if p != k {
                for c in 0..n {
                    a.data.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let pivot = a.get(k, k);
            for r in k + 1..n {
                let f = a.get(r, k) / pivot;
                a.set(r, k, f);
                for c in k + 1..n {
                    let v = a.get(r, c) - f * a.get(k, c);
                    a.set(r, c, v);
                }
            }
        }
        Some(Lu { lu: a, perm })
    }

    fn solve(&self, b: &[E]) -> Vec<E> {
        let n = self.lu.n;
        let mut y: Vec<E> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for c in 0..r {
                y[r] = y[r] - self.lu.get(r, c) * y[c];
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                y[r] = y[r] - self.lu.get(r, c) * y[c];
            }
            y[r] = y[r] / self.lu.get(r, r);
        }
        y
    }
}

/// Solution of a square system together with its 1-norm condition number.
#[derive(Debug, Clone)]
pub struct Solved<E> {
    pub x: Vec<E>,
    pub cond: f64,
}

/// Systems whose condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e28;

/// Solves `a x = b`, reporting the exact 1-norm condition number (the
/// systems built here are small enough to invert outright).
pub fn solve<E: Field>(a: Matrix<E>, b: &[E]) -> Result<Solved<E>> {
    let n = a.n;
    assert_eq!(b.len(), n);
    let anorm = a.norm1();
    let lu = Lu::factor(a).ok_or(Error::Singular { cond: f64::INFINITY })?;
    let mut inv_norm = 0.0f64;
    let mut unit = vec![E::zero(); n];
    for c in 0..n {
        unit[c] = E::one();
        let col = lu.solve(&unit);
        unit[c] = E::zero();
        inv_norm = inv_norm.max(col.iter().map(Field::magnitude).sum());
    }
    let cond = anorm * inv_norm;
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::Singular { cond });
    }
    Ok(Solved { x: lu.solve(b), cond })
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

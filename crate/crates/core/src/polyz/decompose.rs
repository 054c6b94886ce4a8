use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::json::ThreePartJson;
use super::split::{companion_roots, split_denominator, DenominatorSplit};
use super::{LaurentPoly, Point, RationalTF};
use crate::error::{invalid, Error, Result};
use crate::scalar::{solve, Matrix, Real};

/// Largest forward order accepted by the decomposition.
pub const MAX_DECOMPOSITION_ORDER: usize = 8;

/// Symmetry of an impulse response about `m = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "sym")]
    Symmetric,
    #[serde(rename = "anti")]
    Antisymmetric,
}

impl Parity {
    /// Parity of a `d`-th derivative filter.
    pub fn of_order(d: usize) -> Self {
        if d % 2 == 0 {
            Parity::Symmetric
        } else {
            Parity::Antisymmetric
        }
    }

    /// `+1` or `-1`: the factor relating `h(-m)` to `h(m)`.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Symmetric => 1.0,
            Parity::Antisymmetric => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Symmetric => "sym",
            Parity::Antisymmetric => "anti",
        }
    }
}

/// Forward + backward + central difference equation
///
/// ```text
/// y+(n) = sum_{m=1..K} b+_m x(n-m) - sum_{m=1..K} a+_m y+(n-m)
/// y-(n) = sum_{m=1..K} b-_m x(n+m) - sum_{m=1..K} a-_m y-(n+m)
/// y (n) = y+(n) + y-(n) + b0 x(n)
/// ```
///
/// with `a- = a+` and `b- = ±b+` according to the parity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThreePartJson", into = "ThreePartJson")]
pub struct ThreePartIIR {
    b_plus: Vec<f64>,
    a_plus: Vec<f64>,
    b_zero: f64,
    parity: Parity,
}

impl ThreePartIIR {
    /// `b_plus` and `a_plus` hold `m = 1..=K`.
    pub fn new(b_plus: Vec<f64>, a_plus: Vec<f64>, b_zero: f64, parity: Parity) -> Result<Self> {
        if b_plus.len() != a_plus.len() {
            return Err(invalid(format!("b_plus has {} coefficients but a_plus has {}", b_plus.len(), a_plus.len())));
        }
        if b_plus.iter().chain(&a_plus).chain([&b_zero]).any(|c| !c.is_finite()) {
            return Err(invalid("non-finite difference-equation coefficient"));
        }
        if parity == Parity::Antisymmetric && b_zero != 0.0 {
            return Err(invalid("antisymmetric filter must have b_zero = 0"));
        }
        Ok(ThreePartIIR { b_plus, a_plus, b_zero, parity })
    }

    pub fn order(&self) -> usize {
        self.a_plus.len()
    }

    pub fn b_plus(&self) -> &[f64] {
        &self.b_plus
    }

    pub fn a_plus(&self) -> &[f64] {
        &self.a_plus
    }

    pub fn b_minus(&self) -> Vec<f64> {
        let s = self.parity.sign();
        self.b_plus.iter().map(|b| s * b).collect()
    }

    pub fn a_minus(&self) -> &[f64] {
        &self.a_plus
    }

    pub fn b_zero(&self) -> f64 {
        self.b_zero
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Roots of `A+(z)`, i.e. the forward poles.
    pub fn poles(&self) -> Vec<Complex64> {
        // z^K A+(z) = z^K + a_1 z^{K-1} + ... + a_K
        let mut c: Vec<f64> = self.a_plus.iter().rev().copied().collect();
        c.push(1.0);
        companion_roots(&c)
    }

    /// Errors unless every forward pole is strictly inside the unit circle.
    pub fn check_stable(&self) -> Result<()> {
        match self.poles().into_iter().map(|p| p.norm()).fold(0.0, f64::max) {
            m if m < 1.0 => Ok(()),
            modulus => Err(Error::Unstable { modulus }),
        }
    }

    /// The equivalent non-causal transfer function, with denominator `A+ A-`.
    pub fn to_tf(&self) -> RationalTF {
        self.to_tf_in()
    }

    /// As [`to_tf`](Self::to_tf), multiplied out in `T`.
    fn to_tf_in<T: Real>(&self) -> RationalTF<T> {
        let mut a = vec![T::one()];
        a.extend(self.a_plus.iter().map(|&v| T::from_f64(v)));
        let a_fwd = LaurentPoly::from_delay_poly(&a);
        let a_bwd = a_fwd.reflect();
        let mut bp = vec![T::zero()];
        bp.extend(self.b_plus.iter().map(|&v| T::from_f64(v)));
        let b_fwd = LaurentPoly::from_delay_poly(&bp);
        let b_bwd = b_fwd.reflect().scale(T::from_f64(self.parity.sign()));
        let den = &a_fwd * &a_bwd;
        let num = &(&(&b_fwd * &a_bwd) + &(&b_bwd * &a_fwd)) + &den.scale(T::from_f64(self.b_zero));
        RationalTF::new(num.trimmed(), den)
    }

    /// `b0 + F(e^{-i omega}) + s F(e^{i omega})` with `F(w) = B+(w) / A+(w)`,
    /// evaluated part by part; multiplying the parts out first cancels badly
    /// near dc for slow poles.
    pub fn eval_freq(&self, omega: f64) -> Result<Complex64> {
        let part = |w: Complex64| -> Result<Complex64> {
            let (mut num, mut den, mut wm) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), w);
            for (b, a) in self.b_plus.iter().zip(&self.a_plus) {
                num += b * wm;
                den += a * wm;
                wm *= w;
            }
            if den.norm() < 1e-300 {
                return Err(Error::PoleOnUnitCircle { omega });
            }
            Ok(num / den)
        };
        let w = Complex64::from_polar(1.0, -omega);
        Ok(self.b_zero + part(w)? + self.parity.sign() * part(w.conj())?)
    }

    pub fn dc_derivatives(&self, at: Point, l_max: usize) -> Result<Vec<Complex64>> {
        self.to_tf().dc_derivatives(at, l_max)
    }

    /// `H(1) = b0 + (sum b+ + sum b-) / (1 + sum a+)`.
    pub fn dc_gain(&self) -> f64 {
        let a: f64 = 1.0 + self.a_plus.iter().sum::<f64>();
        let b: f64 = self.b_plus.iter().sum::<f64>();
        match self.parity {
            Parity::Symmetric => self.b_zero + 2.0 * b / a,
            Parity::Antisymmetric => 0.0,
        }
    }

    /// Rebuilds numerator and denominator from the stored parts (in the
    /// precision of `tf`), rescales by `a0` fitted on the denominators, and
    /// returns the larger of the two coefficient errors, each relative to the
    /// largest coefficient of the original.
    pub fn reconstruction_error<T: Real>(&self, tf: &RationalTF<T>) -> f64 {
        let own = self.to_tf_in::<T>();
        let dot = |p: &LaurentPoly<T>, q: &LaurentPoly<T>| {
            let k = p.half_order().max(q.half_order()) as i64;
            (-k..=k).fold(T::zero(), |s, m| s + p.coeff(m) * q.coeff(m))
        };
        let a_zero = dot(&tf.den, &own.den) / dot(&own.den, &own.den);
        let err = |mine: &LaurentPoly<T>, orig: &LaurentPoly<T>| {
            let k = mine.half_order().max(orig.half_order()) as i64;
            let scale = orig.max_abs().as_f64().max(f64::MIN_POSITIVE);
            (-k..=k).map(|m| (mine.coeff(m) * a_zero - orig.coeff(m)).abs().as_f64()).fold(0.0, f64::max) / scale
        };
        err(&own.num, &tf.num).max(err(&own.den, &tf.den))
    }

    /// Impulse response `h(m)` for `m = -n..=n`, by running the recursion.
    pub fn impulse_response(&self, n: usize) -> Vec<f64> {
        let fwd = self.forward_ir(n);
        let s = self.parity.sign();
        let mut h = Vec::with_capacity(2 * n + 1);
        h.extend(fwd[1..].iter().rev().map(|v| s * v));
        h.push(self.b_zero);
        h.extend_from_slice(&fwd[1..]);
        h
    }

    /// Impulse response truncated where it falls below `rel_tol` of its peak.
    /// Returns `h(m)` for `m = -n..=n`.
    pub fn truncated_impulse_response(&self, rel_tol: f64, max_half: usize) -> Result<Vec<f64>> {
        let fwd = self.forward_ir(max_half);
        let peak = fwd.iter().map(|v| v.abs()).fold(self.b_zero.abs(), f64::max);
        let k = self.order().max(1);
        let floor = rel_tol * peak;
        let mut n = max_half;
        // find the last index still above the floor, then require a quiet tail of K samples
        while n > 0 && fwd[n].abs() < floor {
            n -= 1;
        }
        if n + k > max_half {
            return Err(invalid(format!(
                "impulse response has not decayed below {rel_tol:e} of its peak within {max_half} samples"
            )));
        }
        let h = self.impulse_response(max_half);
        Ok(h[max_half - n..=max_half + n].to_vec())
    }

    /// Forward part `y+` for a unit impulse at `n = 0`, indices `0..=n`.
    fn forward_ir(&self, n: usize) -> Vec<f64> {
        let k = self.order();
        let mut y = vec![0.0; n + 1];
        for i in 1..=n {
            let mut v = if i <= k { self.b_plus[i - 1] } else { 0.0 };
            for m in 1..=k.min(i) {
                v -= self.a_plus[m - 1] * y[i - m];
            }
            y[i] = v;
        }
        y
    }
}

/// Splits `tf` into a realizable three-part difference equation.
/// Largest relative coefficient error, parts multiplied back out against the
/// design, beyond which a decomposition is refused. Slow high-order designs
/// have numerators far smaller than the terms that cancel to form them, so
/// double-precision parts lose relative accuracy there; past this point the
/// realized response no longer tracks the design.
pub const REALIZATION_TOL: f64 = 1e-6;

pub fn three_part_decompose<T: Real>(tf: &RationalTF<T>, parity: Parity) -> Result<ThreePartIIR> {
    let split = split_denominator(&tf.den)?;
    three_part_decompose_with_split(tf, &split, parity)
}

/// As [`three_part_decompose`] with a precomputed denominator split.
pub fn three_part_decompose_with_split<T: Real>(
    tf: &RationalTF<T>,
    split: &DenominatorSplit<T>,
    parity: Parity,
) -> Result<ThreePartIIR> {
    let num = tf.num.trimmed();
    let kd = split.order();
    let k = num.half_order().max(kd);
    if k > MAX_DECOMPOSITION_ORDER {
        return Err(invalid(format!("decomposition order {k} exceeds {MAX_DECOMPOSITION_ORDER}")));
    }
    let a = &split.a_plus;
    let both = split.product();
    let n = 2 * k + 1;
    let ki = k as i64;
    let row = |p: i64| (p + ki) as usize;

    let mut m = Matrix::<T>::zeros(n);
    for j in 1..=k {
        // b+_j multiplies z^-j A-(z) = sum_m a_m z^(m-j)
        for (mm, &am) in a.iter().enumerate() {
            let p = mm as i64 - j as i64;
            if p.abs() <= ki {
                m.set(row(p), k - j, am);
            }
        }
        // b-_j multiplies z^j A+(z) = sum_m a_m z^(j-m)
        for (mm, &am) in a.iter().enumerate() {
            let p = j as i64 - mm as i64;
            if p.abs() <= ki {
                m.set(row(p), k + j, am);
            }
        }
    }
    for (p, c) in both.terms().filter(|&(p, _)| p.abs() <= ki) {
        m.set(row(p), k, c);
    }
    let rhs: Vec<T> = (-ki..=ki).map(|p| num.coeff(p)).collect();
    let x = solve(m, &rhs)?.x;

    let a0 = split.a_zero;
    let b_plus: Vec<T> = (1..=k).map(|j| x[k - j] / a0).collect();
    let b_minus: Vec<T> = (1..=k).map(|j| x[k + j] / a0).collect();
    let b_zero = x[k] / a0;

    let scale = b_plus
        .iter()
        .chain(&b_minus)
        .chain([&b_zero])
        .fold(0.0f64, |s, v| s.max(v.abs().as_f64()))
        .max(f64::MIN_POSITIVE);
    let s = T::from_f64(parity.sign());
    let mismatch = b_plus.iter().zip(&b_minus).map(|(&p, &q)| (q - s * p).abs().as_f64()).fold(0.0, f64::max);
    let center_violation = if parity == Parity::Antisymmetric { b_zero.abs().as_f64() } else { 0.0 };
    if mismatch.max(center_violation) > 1e-9 * scale {
        return Err(invalid(format!(
            "transfer function does not have the declared {} parity (mismatch {:e})",
            parity.as_str(),
            mismatch.max(center_violation) / scale
        )));
    }

    let mut a_plus: Vec<f64> = a[1..].iter().map(|c| c.as_f64()).collect();
    a_plus.resize(k, 0.0);
    let b_zero = if parity == Parity::Antisymmetric { 0.0 } else { b_zero.as_f64() };
    let iir = ThreePartIIR::new(b_plus.iter().map(|c| c.as_f64()).collect(), a_plus, b_zero, parity)?;
    iir.check_stable()?;
    let error = iir.reconstruction_error(tf);
    if !(error <= REALIZATION_TOL) {
        return Err(Error::Reconstruction { error });
    }
    Ok(iir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fir_case_is_identity_system() {
        let num = LaurentPoly::new(vec![0.25, 0.5, 0.25]).unwrap();
        let iir = three_part_decompose(&RationalTF::fir(num.clone()), Parity::Symmetric).unwrap();
        assert_eq!(iir.b_plus(), &[0.25]);
        assert_eq!(iir.a_plus(), &[0.0]);
        assert_eq!(iir.b_zero(), 0.5);
        assert_eq!(iir.impulse_response(2), vec![0.0, 0.25, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn antisymmetric_fir() {
        let num = LaurentPoly::new(vec![-0.5, 0.0, 0.5]).unwrap();
        let iir = three_part_decompose(&RationalTF::fir(num), Parity::Antisymmetric).unwrap();
        assert_eq!(iir.b_plus(), &[-0.5]);
        assert_eq!(iir.b_minus(), vec![0.5]);
        // h(m) is the z^-m coefficient: h(1) = -0.5, h(-1) = 0.5
        assert_eq!(iir.impulse_response(1), vec![0.5, 0.0, -0.5]);
    }

    #[test]
    fn parity_mismatch_is_reported() {
        let num = LaurentPoly::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert!(three_part_decompose(&RationalTF::fir(num), Parity::Antisymmetric).is_err());
    }

    #[test]
    fn two_sided_exponential_round_trip() {
        let p: f64 = 0.7;
        let den = LaurentPoly::new(vec![-p, 1.0 + p * p, -p]).unwrap();
        let num = LaurentPoly::constant((1.0 - p) * (1.0 - p));
        let tf = RationalTF::new(num, den);
        let iir = three_part_decompose(&tf, Parity::Symmetric).unwrap();
        assert!(iir.reconstruction_error(&tf) < 1e-14);
        assert!((iir.dc_gain() - 1.0).abs() < 1e-14);
        // h(m) = (1-p)/(1+p) p^|m|
        let h = iir.impulse_response(5);
        for (i, v) in h.iter().enumerate() {
            let m = i as i32 - 5;
            let e = (1.0 - p) / (1.0 + p) * p.powi(m.abs());
            assert!((v - e).abs() < 1e-14, "h({m}) = {v}, expected {e}");
        }
    }

    #[test]
    fn truncated_ir_sums_to_dc_gain() {
        let p: f64 = 0.9;
        let den = LaurentPoly::new(vec![-p, 1.0 + p * p, -p]).unwrap();
        let tf = RationalTF::new(LaurentPoly::constant((1.0 - p) * (1.0 - p)), den);
        let iir = three_part_decompose(&tf, Parity::Symmetric).unwrap();
        let h = iir.truncated_impulse_response(1e-14, 2000).unwrap();
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(iir.truncated_impulse_response(1e-14, 20).is_err());
    }

    #[test]
    fn unstable_coefficients_are_flagged() {
        let iir = ThreePartIIR::new(vec![0.1], vec![-1.5], 0.0, Parity::Symmetric).unwrap();
        assert!(matches!(iir.check_stable(), Err(Error::Unstable { .. })));
    }
}

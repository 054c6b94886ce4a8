use nalgebra::DMatrix;
use num_complex::Complex64;

use super::LaurentPoly;
use crate::error::{Error, Result};
use crate::scalar::{solve, Matrix, Real};

/// Roots closer than this to the unit circle are refused.
pub const UNIT_CIRCLE_TOL: f64 = 1e-9;

/// `A(z) = a_zero * A+(z) * A-(z)` with `A+(z) = 1 + sum a_m z^-m` holding the
/// poles inside the unit circle and `A-(z) = A+(1/z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenominatorSplit<T = f64> {
    /// `[1, a_1, ..., a_K]`.
    pub a_plus: Vec<T>,
    pub a_zero: T,
}

impl<T: Real> DenominatorSplit<T> {
    pub fn trivial(a_zero: T) -> Self {
        DenominatorSplit { a_plus: vec![T::one()], a_zero }
    }

    pub fn order(&self) -> usize {
        self.a_plus.len() - 1
    }

    /// `A+(z)`, a polynomial in `z^-1`.
    pub fn forward(&self) -> LaurentPoly<T> {
        LaurentPoly::from_delay_poly(&self.a_plus)
    }

    /// `A-(z)`, a polynomial in `z`.
    pub fn backward(&self) -> LaurentPoly<T> {
        LaurentPoly::from_advance_poly(&self.a_plus)
    }

    /// `A±(z) = A+(z) A-(z)`.
    pub fn product(&self) -> LaurentPoly<T> {
        &self.forward() * &self.backward()
    }

    pub fn recombine(&self) -> LaurentPoly<T> {
        self.product().scale(self.a_zero)
    }
}

/// Factors a reciprocal-symmetric denominator into forward, backward and
/// constant parts, seeding from companion-matrix eigenvalues.
pub fn split_denominator<T: Real>(den: &LaurentPoly<T>) -> Result<DenominatorSplit<T>> {
    let den = den.trimmed();
    let k = den.half_order();
    if k == 0 {
        return Ok(DenominatorSplit::trivial(den.coeff(0)));
    }
    let roots = polynomial_roots(&den.to_f64())?;
    let mut inside = Vec::with_capacity(k);
    for r in roots {
        let modulus = r.norm();
        if (modulus - 1.0).abs() < UNIT_CIRCLE_TOL {
            return Err(Error::MarginalStability { modulus });
        }
        if modulus < 1.0 {
            inside.push(r);
        }
    }
    if inside.len() != k {
        return Err(Error::Asymmetry { inside: inside.len(), expected: k });
    }
    refine(&den, &inside)
}

/// As [`split_denominator`] but starting from known forward poles (closed
/// forms, e.g. repeated poles or mapped analog prototype poles).
pub fn split_denominator_seeded<T: Real>(
    den: &LaurentPoly<T>,
    inside_roots: &[Complex64],
) -> Result<DenominatorSplit<T>> {
    let den = den.trimmed();
    if inside_roots.len() != den.half_order() {
        return Err(Error::Asymmetry { inside: inside_roots.len(), expected: den.half_order() });
    }
    if let Some(r) = inside_roots.iter().find(|r| r.norm() > 1.0 - UNIT_CIRCLE_TOL) {
        return Err(Error::MarginalStability { modulus: r.norm() });
    }
    if den.half_order() == 0 {
        return Ok(DenominatorSplit::trivial(den.coeff(0)));
    }
    refine(&den, inside_roots)
}

/// Roots of `z^K A(z)` as eigenvalues of its companion matrix.
pub(crate) fn polynomial_roots(p: &LaurentPoly<f64>) -> Result<Vec<Complex64>> {
    // ascending coefficients of an ordinary polynomial
    let c = p.coeffs();
    let n = c.len() - 1;
    let lead = c[n];
    if lead == 0.0 || c[0] == 0.0 {
        let inside = usize::from(c[0] == 0.0);
        return Err(Error::Asymmetry { inside, expected: p.half_order() });
    }
    Ok(companion_roots(c))
}

/// Eigenvalues of the companion matrix of `sum c[i] x^i` (`c` ascending, nonzero lead).
pub(crate) fn companion_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

fn seed_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        poly = next;
    }
    poly.iter().map(|c| c.re).collect()
}

/// Newton iteration on `a0 * sum_m a_m a_{m+j} = den_j`, `j = 0..=K`.
fn refine<T: Real>(den: &LaurentPoly<T>, inside: &[Complex64]) -> Result<DenominatorSplit<T>> {
    let k = den.half_order();
    let target: Vec<T> = (0..=k as i64).map(|j| (den.coeff(j) + den.coeff(-j)) / T::from_f64(2.0)).collect();
    let mut a: Vec<T> = seed_from_roots(inside).into_iter().map(T::from_f64).collect();
    let autocorr = |a: &[T], j: usize| (0..=k - j).fold(T::zero(), |s, m| s + a[m] * a[m + j]);
    let mut a0 = target[0] / autocorr(&a, 0);

    let tiny = T::epsilon() * T::from_f64(64.0);
    for _ in 0..60 {
        let mut jac = Matrix::<T>::zeros(k + 1);
        let mut rhs = vec![T::zero(); k + 1];
        for j in 0..=k {
            let pj = autocorr(&a, j);
            rhs[j] = target[j] - a0 * pj;
            for i in 1..=k {
                let mut d = T::zero();
                if i + j <= k {
                    d = d + a[i + j];
                }
                if i >= j {
                    d = d + a[i - j];
                }
                jac.set(j, i - 1, a0 * d);
            }
            jac.set(j, k, pj);
        }
        let step = solve(jac, &rhs)?.x;
        let mut biggest = T::zero();
        for i in 1..=k {
            a[i] = a[i] + step[i - 1];
            biggest = biggest.max(step[i - 1].abs());
        }
        a0 = a0 + step[k];
        biggest = biggest.max((step[k] / a0).abs());
        if biggest <= tiny {
            break;
        }
    }

    let split = DenominatorSplit { a_plus: a, a_zero: a0 };
    let err = split.recombine().relative_distance(den);
    if !(err <= 1e-9) {
        return Err(Error::Asymmetry { inside: inside.len(), expected: k });
    }
    let poles = companion_roots(&split.a_plus.iter().rev().map(|c| c.as_f64()).collect::<Vec<_>>());
    if let Some(r) = poles.iter().find(|r| r.norm() > 1.0 - UNIT_CIRCLE_TOL) {
        return Err(Error::MarginalStability { modulus: r.norm() });
    }
    Ok(split)
}

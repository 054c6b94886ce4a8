use crate::engine::{DerivativeField, Image};
use crate::error::{invalid, Result};
use crate::scalar::{binomial, factorial};

/// Local polynomial coefficients `beta_{p,q}` of `x^p y^q`, `p + q < D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteerSet {
    d_model: usize,
    beta: Vec<f64>,
}

impl SteerSet {
    pub fn zeros(d_model: usize) -> Self {
        SteerSet { d_model, beta: vec![0.0; d_model * d_model] }
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        if p + q >= self.d_model {
            return 0.0;
        }
        self.beta[q * self.d_model + p]
    }

    pub fn set(&mut self, p: usize, q: usize, v: f64) {
        assert!(p + q < self.d_model, "order {} exceeds model order {}", p + q, self.d_model);
        self.beta[q * self.d_model + p] = v;
    }

    /// `beta_{p,q} = D_{p,q} / (p! q!)` at pixel `(x, y)`.
    pub fn from_field(field: &DerivativeField, x: usize, y: usize) -> Result<Self> {
        let d = field.d_model();
        let mut s = SteerSet::zeros(d);
        for (p, q, img) in field.iter() {
            if p + q < d {
                s.set(p, q, img.get(x, y) / (factorial(p) * factorial(q)));
            }
        }
        Ok(s)
    }

    /// `D_{p,q} = p! q! beta_{p,q}`.
    pub fn derivative(&self, p: usize, q: usize) -> f64 {
        self.get(p, q) * factorial(p) * factorial(q)
    }
}

/// Weights `w[(i, j)]` such that `x~^p y~^q = sum w x^i y^j` under
/// `x~ = x cos(phi) - y sin(phi)`, `y~ = x sin(phi) + y cos(phi)`.
fn expansion(p: usize, q: usize, c: f64, s: f64) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity((p + 1) * (q + 1));
    for i in 0..=p {
        // (c x - s y)^p contributes x^(p-i) y^i
        let wi = binomial(p, i) * c.powi((p - i) as i32) * (-s).powi(i as i32);
        for j in 0..=q {
            // (s x + c y)^q contributes x^(q-j) y^j
            let wj = binomial(q, j) * s.powi((q - j) as i32) * c.powi(j as i32);
            out.push((p - i + q - j, i + j, wi * wj));
        }
    }
    out
}

/// Coefficients of `f(x~, y~)` in the frame `(x, y)` rotated by `phi`. Each
/// steered element mixes only raw elements of the same total order.
pub fn steer(beta: &SteerSet, phi: f64) -> SteerSet {
    let (s, c) = phi.sin_cos();
    let d = beta.d_model;
    let mut out = SteerSet::zeros(d);
    for p in 0..d {
        for q in 0..d - p {
            let b = beta.get(p, q);
            if b == 0.0 {
                continue;
            }
            for (i, j, w) in expansion(p, q, c, s) {
                out.beta[j * d + i] += w * b;
            }
        }
    }
    out
}

/// Steers every pixel of a derivative field. Returns derivatives `D_{p,q}`
/// of the rotated local polynomial.
pub fn steer_field(field: &DerivativeField, phi: f64) -> Result<Vec<(usize, usize, Image)>> {
    let d = field.d_model();
    let first = field.component(0, 0)?;
    let (w, h) = (first.width(), first.height());
    let (s, c) = phi.sin_cos();
    let mut acc: Vec<Vec<f64>> = vec![vec![0.0; w * h]; d * d];
    for (p, q, img) in field.iter() {
        if p + q >= d {
            continue;
        }
        let to_beta = 1.0 / (factorial(p) * factorial(q));
        for (i, j, wgt) in expansion(p, q, c, s) {
            let scale = wgt * to_beta * factorial(i) * factorial(j);
            for (a, &v) in acc[j * d + i].iter_mut().zip(img.data()) {
                *a += scale * v;
            }
        }
    }
    let mut out = Vec::new();
    for q in 0..d {
        for p in 0..d - q {
            let data = std::mem::take(&mut acc[q * d + p]);
            out.push((p, q, Image::new(w, h, data).map_err(|e| invalid(e.to_string()))?));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn set(d: usize, vals: &[(usize, usize, f64)]) -> SteerSet {
        let mut s = SteerSet::zeros(d);
        for &(p, q, v) in vals {
            s.set(p, q, v);
        }
        s
    }

    #[test]
    fn zero_angle_is_identity() {
        let b = set(3, &[(0, 0, 1.0), (1, 0, 2.0), (0, 1, -3.0), (2, 0, 0.5), (1, 1, 0.25), (0, 2, 4.0)]);
        let s = steer(&b, 0.0);
        for p in 0..3 {
            for q in 0..3 - p {
                assert!((s.get(p, q) - b.get(p, q)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quarter_turn_of_gradient() {
        let s = steer(&set(3, &[(1, 0, 2.0), (0, 1, 5.0)]), PI / 2.0);
        assert!((s.get(1, 0) - 5.0).abs() < 1e-15);
        assert!((s.get(0, 1) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn saddle_at_eighth_turn() {
        let s = steer(&set(3, &[(2, 0, 1.0), (0, 2, -1.0)]), PI / 4.0);
        assert!(s.get(2, 0).abs() < 1e-15);
        assert!((s.get(1, 1) + 2.0).abs() < 1e-15);
        assert!(s.get(0, 2).abs() < 1e-15);
    }

    #[test]
    fn composition_and_trace() {
        let b = set(5, &[(1, 0, 0.3), (2, 0, 1.1), (1, 1, -0.7), (0, 2, 0.2), (3, 1, 0.9), (0, 4, -0.4)]);
        let ab = steer(&steer(&b, 0.4), 1.1);
        let direct = steer(&b, 1.5);
        for p in 0..5 {
            for q in 0..5 - p {
                assert!((ab.get(p, q) - direct.get(p, q)).abs() < 1e-12);
            }
        }
        assert!((direct.get(2, 0) + direct.get(0, 2) - 1.3).abs() < 1e-12);
    }
}

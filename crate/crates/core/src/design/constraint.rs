use num_complex::{Complex, Complex64};

use crate::error::{invalid, Result};
use crate::scalar::{cabs, solve, Dd, Matrix, Real};

/// The square system `rho = F c` tying basis coefficients to frequency-domain
/// derivative constraints, kept (rounded to `f64`) for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    /// Rows are constraints (dc first, then Nyquist), columns basis elements.
    pub f: Vec<Vec<Complex64>>,
    pub rho: Vec<Complex64>,
    pub c: Vec<f64>,
    /// 1-norm condition number of `F`.
    pub cond: f64,
}

impl ConstraintSystem {
    /// Solves in double-double and returns the real coefficient vector at
    /// full precision alongside the rounded record.
    pub(crate) fn solve(f: Vec<Vec<Complex<Dd>>>, rho: Vec<Complex<Dd>>) -> Result<(Vec<Dd>, Self)> {
        let n = rho.len();
        if f.len() != n || f.iter().any(|r| r.len() != n) {
            return Err(invalid(format!("constraint matrix must be {n} x {n}")));
        }
        let solved = solve(Matrix::from_rows(f.clone()), &rho)?;
        let scale = solved.x.iter().map(|c| cabs(*c)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        if let Some(c) = solved.x.iter().find(|c| c.im.abs().as_f64() > 1e-9 * scale) {
            return Err(invalid(format!("basis coefficients are not real (imaginary part {:e})", c.im.as_f64())));
        }
        let c: Vec<Dd> = solved.x.iter().map(|c| c.re).collect();
        let round = |z: &Complex<Dd>| Complex64::new(z.re.as_f64(), z.im.as_f64());
        let record = ConstraintSystem {
            f: f.iter().map(|r| r.iter().map(round).collect()).collect(),
            rho: rho.iter().map(round).collect(),
            c: c.iter().map(|v| v.as_f64()).collect(),
            cond: solved.cond,
        };
        Ok((c, record))
    }

    /// `max |F c - rho|` in `f64`.
    pub fn residual(&self) -> f64 {
        self.f
            .iter()
            .zip(&self.rho)
            .map(|(row, r)| {
                let fc: Complex64 = row.iter().zip(&self.c).map(|(a, c)| a * c).sum();
                (fc - r).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// `i^l` as a complex double-double.
pub(crate) fn i_pow(l: usize) -> Complex<Dd> {
    let (one, zero) = (Dd::from_f64(1.0), Dd::from_f64(0.0));
    match l % 4 {
        0 => Complex::new(one, zero),
        1 => Complex::new(zero, one),
        2 => Complex::new(-one, zero),
        _ => Complex::new(zero, -one),
    }
}

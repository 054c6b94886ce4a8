use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::design::FirKernel;
use crate::engine::Stage;
use crate::error::{invalid, Result};
use crate::polyz::{RationalTF, ThreePartIIR};

/// Angular samples per circle in [`isotropy_score`].
pub const ISOTROPY_ANGLES: usize = 256;

/// Anything with a frequency response `H(omega)`.
pub trait Response {
    fn response(&self, omega: f64) -> Result<Complex64>;
}

impl Response for RationalTF {
    fn response(&self, omega: f64) -> Result<Complex64> {
        self.eval_freq(omega)
    }
}

impl Response for FirKernel {
    fn response(&self, omega: f64) -> Result<Complex64> {
        Ok(self.eval_freq(omega))
    }
}

impl Response for ThreePartIIR {
    fn response(&self, omega: f64) -> Result<Complex64> {
        self.eval_freq(omega)
    }
}

impl Response for Stage {
    fn response(&self, omega: f64) -> Result<Complex64> {
        self.eval_freq(omega)
    }
}

/// Cascade of responses.
impl<R: Response> Response for [R] {
    fn response(&self, omega: f64) -> Result<Complex64> {
        self.iter().try_fold(Complex64::new(1.0, 0.0), |acc, r| Ok(acc * r.response(omega)?))
    }
}

impl<R: Response> Response for Vec<R> {
    fn response(&self, omega: f64) -> Result<Complex64> {
        self.as_slice().response(omega)
    }
}

/// Sampled response on a uniform grid over `[-pi, pi]` (or its square).
#[derive(Debug, Clone, PartialEq)]
pub struct FreqGrid {
    pub dims: usize,
    /// `(omega_x, omega_y, H)`; `omega_y` is zero for 1-D grids.
    pub points: Vec<(f64, f64, Complex64)>,
}

impl FreqGrid {
    /// CSV with a header row and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if self.dims == 1 {
            s.push_str("omega,mag,re,im\n");
        } else {
            s.push_str("omega_x,omega_y,mag,re,im\n");
        }
        for &(wx, wy, h) in &self.points {
            if self.dims == 1 {
                let _ = writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e}", wx, h.norm(), h.re, h.im);
            } else {
                let _ = writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", wx, wy, h.norm(), h.re, h.im);
            }
        }
        s
    }
}

fn grid(n: usize) -> Result<Vec<f64>> {
    if n < 16 {
        return Err(invalid(format!("frequency grid needs at least 16 points, got {n}")));
    }
    Ok((0..n).map(|i| -PI + 2.0 * PI * i as f64 / (n - 1) as f64).collect())
}

/// 1-D grid of `n_points`, or the separable 2-D grid `H(wx) H(wy)` when `dims == 2`.
pub fn freq_grid<R: Response + ?Sized>(tf: &R, n_points: usize, dims: usize) -> Result<FreqGrid> {
    match dims {
        1 => {
            let points = grid(n_points)?.into_iter().map(|w| Ok((w, 0.0, tf.response(w)?))).collect::<Result<_>>()?;
            Ok(FreqGrid { dims: 1, points })
        }
        2 => freq_grid_2d(tf, tf, n_points),
        _ => Err(invalid(format!("dims must be 1 or 2, got {dims}"))),
    }
}

pub fn freq_grid_2d<R: Response + ?Sized, S: Response + ?Sized>(
    tf_x: &R,
    tf_y: &S,
    n_points: usize,
) -> Result<FreqGrid> {
    let w = grid(n_points)?;
    let hx: Vec<Complex64> = w.iter().map(|&v| tf_x.response(v)).collect::<Result<_>>()?;
    let hy: Vec<Complex64> = w.iter().map(|&v| tf_y.response(v)).collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(n_points * n_points);
    for (j, &wy) in w.iter().enumerate() {
        for (i, &wx) in w.iter().enumerate() {
            points.push((wx, wy, hx[i] * hy[j]));
        }
    }
    Ok(FreqGrid { dims: 2, points })
}

/// For each radius, `(max - min) / mean` of `|H(wx) H(wy)|` around the circle
/// `wx^2 + wy^2 = r^2`. Lower is more isotropic.
pub fn isotropy_score<R: Response + ?Sized, S: Response + ?Sized>(
    tf_x: &R,
    tf_y: &S,
    radii: &[f64],
) -> Result<Vec<f64>> {
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0 && r < PI) {
                return Err(invalid(format!("radius {r} outside (0, pi)")));
            }
            let mags: Vec<f64> = (0..ISOTROPY_ANGLES)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / ISOTROPY_ANGLES as f64;
                    Ok((tf_x.response(r * t.cos())? * tf_y.response(r * t.sin())?).norm())
                })
                .collect::<Result<_>>()?;
            let (lo, hi) = mags.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &m| (lo.min(m), hi.max(m)));
            let mean = mags.iter().sum::<f64>() / mags.len() as f64;
            Ok(if mean > 0.0 { (hi - lo) / mean } else { 0.0 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{colored_sg_blur, interp_diff, repeated_pole_blur};

    struct Gauss(f64);
    impl Response for Gauss {
        fn response(&self, w: f64) -> Result<Complex64> {
            Ok(Complex64::new((-0.5 * (w * self.0).powi(2)).exp(), 0.0))
        }
    }

    #[test]
    fn identity_grid() {
        let g = freq_grid(&RationalTF::<f64>::identity(), 33, 1).unwrap();
        assert!(g.points.iter().all(|p| (p.2.norm() - 1.0).abs() < 1e-15));
        assert!(g.to_csv().starts_with("omega,mag,re,im\n"));
        assert!(freq_grid(&RationalTF::<f64>::identity(), 8, 1).is_err());
    }

    #[test]
    fn first_difference_is_i_sin() {
        let k = interp_diff(1).unwrap();
        let h = k.response(PI / 2.0).unwrap();
        assert!((h - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn cascade_grid_is_product() {
        let a = interp_diff(2).unwrap();
        let b = colored_sg_blur(2.0, 1).unwrap();
        let ga = freq_grid(&a, 65, 1).unwrap();
        let gb = freq_grid(&b, 65, 1).unwrap();
        let gc = freq_grid(&vec![a, b], 65, 1).unwrap();
        for i in 0..65 {
            assert!((gc.points[i].2 - ga.points[i].2 * gb.points[i].2).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_is_isotropic() {
        let s = isotropy_score(&Gauss(3.0), &Gauss(3.0), &[0.5, 1e-3]).unwrap();
        assert!(s[0] < 0.01 && s[1] < 1e-9);
    }

    #[test]
    fn sg_beats_repeated_pole_on_isotropy() {
        let sg = colored_sg_blur(8.0, 1).unwrap();
        let rp = repeated_pole_blur(8.0, 1, 2).unwrap();
        // in the pass band; deep in the stop band both scores measure ripple
        for r in [0.05, 0.1] {
            let s_sg = isotropy_score(&sg, &sg, &[r]).unwrap()[0];
            let s_rp = isotropy_score(&rp, &rp, &[r]).unwrap()[0];
            assert!(s_sg <= s_rp, "r {r}: {s_sg} vs {s_rp}");
        }
    }
}

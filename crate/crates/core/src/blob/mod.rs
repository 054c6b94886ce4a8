//! Scale-selective blob detection from the normalized Hessian determinant.

mod scene;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{
    blunt_exponential_blur, butterworth_blur, colored_sg_blur, gaussian_fir, repeated_pole_blur, Family,
};
use crate::engine::{derivative_field, DerivativeField, Image, Stage};
use crate::error::{invalid, Result};

pub use scene::{overlay, render_scene, Ellipse, EllipseScene, Fill};

/// Hessian determinants below this magnitude give no displacement.
pub const SINGULAR_HESSIAN: f64 = 1e-12;

/// Blur stage for a family at scale `sigma`: Gaussian with `K = ceil(5 sigma)`,
/// colored SG with `L_D = 1`, repeated pole with `L_D = 1, L_pi_bar = 2`
/// (`K = 3`), Butterworth with `L_D = 1`, or the third-order blunt exponential
/// with its pole chosen to give variance `sigma^2`.
pub fn blur_stage(family: Family, sigma: f64) -> Result<Stage> {
    Ok(match family {
        Family::GaussianFir => gaussian_fir(sigma, 0, (5.0 * sigma).ceil() as usize)?.into(),
        Family::ColoredSg => colored_sg_blur(sigma, 1)?.into(),
        Family::RepeatedPole => repeated_pole_blur(sigma, 1, 2)?.into(),
        Family::Butterworth => butterworth_blur(sigma, 1)?.into(),
        Family::BluntExponential => blunt_exponential_blur(blunt_lambda(sigma, 3)?, 3)?.into(),
        Family::InterpDiff | Family::FirVmBank => {
            return Err(invalid(format!("{family} is not a blur family")));
        }
    })
}

/// Pole constant of a `k`-fold blunt exponential with standard deviation
/// `sigma`. Each fold has variance `1/2 + 2p / (1 - p)^2`.
pub fn blunt_lambda(sigma: f64, k: usize) -> Result<f64> {
    let c = (sigma * sigma / k as f64 - 0.5) / 2.0;
    let p = if c > 0.0 { ((2.0 * c + 1.0) - (4.0 * c + 1.0).sqrt()) / (2.0 * c) } else { 0.0 };
    if !(p >= (-1.0f64).exp()) {
        return Err(invalid(format!("sigma {sigma} too small for a {k}-fold blunt exponential")));
    }
    Ok(-1.0 / p.ln())
}

/// `sigma^4 (D20 D02 - D11^2)`.
pub fn hessian_det(field: &DerivativeField, sigma: f64) -> Result<Image> {
    let (d20, d02, d11) = (field.component(2, 0)?, field.component(0, 2)?, field.component(1, 1)?);
    let s4 = sigma.powi(4);
    let data =
        d20.data().par_iter().zip(d02.data()).zip(d11.data()).map(|((&a, &b), &c)| s4 * (a * b - c * c)).collect();
    Image::new(d20.width(), d20.height(), data)
}

/// `P = (-H)^-1` at one pixel, the covariance of the Gaussian blob whose
/// Fisher information is `-H`. `None` unless `-H` is positive definite.
pub fn covariance(field: &DerivativeField, x: usize, y: usize) -> Result<Option<[[f64; 2]; 2]>> {
    let (a, b, c) =
        (-field.component(2, 0)?.get(x, y), -field.component(1, 1)?.get(x, y), -field.component(0, 2)?.get(x, y));
    let det = a * c - b * b;
    if !(a > 0.0 && det > SINGULAR_HESSIAN) {
        return Ok(None);
    }
    Ok(Some([[c / det, -b / det], [-b / det, a / det]]))
}

/// Offset from each pixel to the stationary point of its fitted quadratic.
/// Pixels with a near-singular Hessian hold NaN.
#[derive(Debug, Clone)]
pub struct Displacement {
    pub dx: Image,
    pub dy: Image,
}

pub fn displacement(field: &DerivativeField) -> Result<Displacement> {
    let d10 = field.component(1, 0)?.data();
    let d01 = field.component(0, 1)?.data();
    let d20 = field.component(2, 0)?.data();
    let d02 = field.component(0, 2)?.data();
    let d11 = field.component(1, 1)?.data();
    let (w, h) = (field.component(0, 0)?.width(), field.component(0, 0)?.height());
    let (dx, dy): (Vec<f64>, Vec<f64>) = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let det = d20[i] * d02[i] - d11[i] * d11[i];
            if det.abs() < SINGULAR_HESSIAN {
                return (f64::NAN, f64::NAN);
            }
            ((d01[i] * d11[i] - d02[i] * d10[i]) / det, (d10[i] * d11[i] - d20[i] * d01[i]) / det)
        })
        .unzip();
    Ok(Displacement { dx: Image::new(w, h, dx)?, dy: Image::new(w, h, dy)? })
}

/// Which blobs to report: bright blobs are local maxima (negative trace).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Dark,
    Bright,
}

impl Polarity {
    fn accepts(self, trace: f64) -> bool {
        match self {
            Polarity::Bright => trace < 0.0,
            Polarity::Dark => trace > 0.0,
        }
    }
}

impl std::str::FromStr for Polarity {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dark" => Ok(Polarity::Dark),
            "bright" => Ok(Polarity::Bright),
            _ => Err(invalid(format!("polarity must be dark or bright, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectParams {
    pub lambda: f64,
    pub family: Family,
    /// Floor on the normalized determinant.
    pub t1: f64,
    /// Ceiling on the displacement norm, in pixels; `None` disables it.
    pub t2: Option<f64>,
    pub polarity: Polarity,
    /// Keep only local maxima within `lambda / 2`.
    pub nms: bool,
}

impl DetectParams {
    /// Both thresholds, `t2 = lambda / 4`, dark blobs, suppression on.
    pub fn new(lambda: f64, family: Family, t1: f64) -> Self {
        DetectParams { lambda, family, t1, t2: Some(lambda / 4.0), polarity: Polarity::Dark, nms: true }
    }

    pub fn sigma(&self) -> f64 {
        self.lambda / 2.0
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda must be positive"));
        }
        if !(self.t1 > 0.0) {
            return Err(invalid("t1 must be positive"));
        }
        if let Some(t2) = self.t2 {
            if !(t2 > 0.0) {
                return Err(invalid("t2 must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub x: usize,
    pub y: usize,
    pub dx: f64,
    pub dy: f64,
    pub ndet: f64,
    pub lambda: f64,
}

/// Everything computed on the way to a detection list.
#[derive(Debug, Clone)]
pub struct BlobMaps {
    pub field: DerivativeField,
    pub ndet: Image,
    pub displacement: Displacement,
}

pub fn blob_maps(img: &Image, lambda: f64, family: Family) -> Result<BlobMaps> {
    let sigma = lambda / 2.0;
    let field = derivative_field(img, &blur_stage(family, sigma)?, 3)?;
    let ndet = hessian_det(&field, sigma)?;
    let displacement = displacement(&field)?;
    Ok(BlobMaps { field, ndet, displacement })
}

pub fn detect(img: &Image, p: &DetectParams) -> Result<Vec<Detection>> {
    p.validate()?;
    let maps = blob_maps(img, p.lambda, p.family)?;
    select(&maps, p)
}

/// Thresholds and suppression on precomputed maps. Suppression runs on the
/// threshold #1 candidates before threshold #2 is applied, so tightening
/// `t2` can only remove detections.
pub fn select(maps: &BlobMaps, p: &DetectParams) -> Result<Vec<Detection>> {
    p.validate()?;
    let ndet = &maps.ndet;
    let (w, h) = (ndet.width(), ndet.height());
    let d20 = maps.field.component(2, 0)?;
    let d02 = maps.field.component(0, 2)?;
    let cands: Vec<Detection> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let row: Vec<Detection> = (0..w)
                .filter_map(|x| {
                    let v = ndet.get(x, y);
                    if !(v > p.t1) || !p.polarity.accepts(d20.get(x, y) + d02.get(x, y)) {
                        return None;
                    }
                    let (dx, dy) = (maps.displacement.dx.get(x, y), maps.displacement.dy.get(x, y));
                    Some(Detection { x, y, dx, dy, ndet: v, lambda: p.lambda })
                })
                .collect();
            row
        })
        .collect();
    let kept = if p.nms { suppress(cands, p.lambda / 2.0) } else { cands };
    Ok(match p.t2 {
        Some(t2) => kept.into_iter().filter(|d| d.dx.hypot(d.dy) <= t2).collect(),
        None => kept,
    })
}

/// Relative gap below which two scores count as tied. Mirror-symmetric blobs
/// give twin maxima that differ only by rounding.
const TIE_TOL: f64 = 1e-9;

/// Keeps candidates that beat every other candidate within `radius`;
/// tied scores go to the smaller `(y, x)`.
fn suppress(cands: Vec<Detection>, radius: f64) -> Vec<Detection> {
    let cell = radius.max(1.0);
    let key = |d: &Detection| ((d.x as f64 / cell) as i64, (d.y as f64 / cell) as i64);
    let mut grid: std::collections::HashMap<(i64, i64), Vec<usize>> = std::collections::HashMap::new();
    for (i, d) in cands.iter().enumerate() {
        grid.entry(key(d)).or_default().push(i);
    }
    let beats = |a: &Detection, b: &Detection| {
        let tol = TIE_TOL * a.ndet.abs().max(b.ndet.abs());
        a.ndet > b.ndet + tol || ((a.ndet - b.ndet).abs() <= tol && (a.y, a.x) < (b.y, b.x))
    };
    let r2 = radius * radius;
    let mut out: Vec<Detection> = cands
        .iter()
        .filter(|d| {
            let (cx, cy) = key(d);
            for gy in cy - 1..=cy + 1 {
                for gx in cx - 1..=cx + 1 {
                    for &j in grid.get(&(gx, gy)).map(Vec::as_slice).unwrap_or(&[]) {
                        let o = &cands[j];
                        let (ex, ey) = (o.x as f64 - d.x as f64, o.y as f64 - d.y as f64);
                        if ex * ex + ey * ey <= r2 && beats(o, d) {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .cloned()
        .collect();
    out.sort_by_key(|d| (d.y, d.x));
    out
}

/// Threshold #1 as half the peak normalized determinant of a single
/// `a = lambda` ellipse with the given eccentricity, rendered at 0 degrees.
pub fn calibrate_t1(lambda: f64, family: Family, eccentricity: f64, polarity: Polarity) -> Result<f64> {
    let side = (8.0 * lambda).ceil().max(64.0) as usize;
    let fill = match polarity {
        Polarity::Dark => Fill::Dark,
        Polarity::Bright => Fill::Bright,
    };
    let background = match polarity {
        Polarity::Dark => 1.0,
        Polarity::Bright => 0.0,
    };
    let c = side as f64 / 2.0;
    let scene = EllipseScene {
        width: side,
        height: side,
        background,
        ellipses: vec![Ellipse { cx: c, cy: c, a: lambda, eccentricity, theta_deg: 0.0, fill }],
    };
    let img = render_scene(&scene)?;
    let maps = blob_maps(&img, lambda, family)?;
    let d20 = maps.field.component(2, 0)?;
    let d02 = maps.field.component(0, 2)?;
    let mut peak: f64 = 0.0;
    for (i, &v) in maps.ndet.data().iter().enumerate() {
        if polarity.accepts(d20.data()[i] + d02.data()[i]) {
            peak = peak.max(v);
        }
    }
    if peak <= 0.0 {
        return Err(invalid("calibration blob produced no response"));
    }
    Ok(0.5 * peak)
}

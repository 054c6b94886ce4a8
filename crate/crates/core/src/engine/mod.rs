//! Separable application of 1-D stages to images.
//!
//! FIR passes use replicate-edge padding. IIR passes run the forward and
//! backward recursions in direct form II with states initialized to the
//! steady state of the first pixel seen, so constant inputs pass unchanged
//! right up to the border.

mod field;
mod fir;
mod iir;
pub mod io;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::design::{FirKernel, Parity};
use crate::error::{invalid, Result};
use crate::polyz::{three_part_decompose, FilterJson, RationalTF, TfJson, ThreePartIIR};

pub use field::{derivative_field, derivative_field_with_bank, DerivativeField};

/// Row-major grid of `f64` pixels; `x` indexes columns, `y` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid(format!("image dimensions must be positive, got {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(invalid(format!("{width}x{height} image needs {} pixels, got {}", width * height, data.len())));
        }
        Ok(Image { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let data = (0..width * height).map(|i| f(i % width, i / width)).collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Image {
        Image { width: self.width, height: self.height, data: self.data.par_iter().map(|&v| f(v)).collect() }
    }

    /// Pixelwise combination of two same-sized images.
    pub fn zip_with(&self, other: &Image, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Image> {
        self.check_same_dims(other)?;
        let data = self.data.par_iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Image { width: self.width, height: self.height, data })
    }

    fn check_same_dims(&self, other: &Image) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(invalid(format!(
                "image sizes differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Blocked transpose.
    pub fn transpose(&self) -> Image {
        const B: usize = 32;
        let (w, h) = (self.width, self.height);
        let mut out = vec![0.0; w * h];
        // output rows are input columns; hand each worker a band of B output rows
        out.par_chunks_mut(B * h).enumerate().for_each(|(band, chunk)| {
            let x0 = band * B;
            let x1 = (x0 + B).min(w);
            for y0 in (0..h).step_by(B) {
                let y1 = (y0 + B).min(h);
                for x in x0..x1 {
                    let dst = &mut chunk[(x - x0) * h..(x - x0 + 1) * h];
                    for y in y0..y1 {
                        dst[y] = self.data[y * w + x];
                    }
                }
            }
        });
        Image { width: h, height: w, data: out }
    }

    /// Drops `border` pixels from every side.
    pub fn crop(&self, border: usize) -> Result<Image> {
        if 2 * border >= self.width || 2 * border >= self.height {
            return Err(invalid(format!("cannot crop {border} pixels from a {}x{} image", self.width, self.height)));
        }
        let (w, h) = (self.width - 2 * border, self.height - 2 * border);
        let mut data = Vec::with_capacity(w * h);
        for y in border..border + h {
            data.extend_from_slice(&self.row(y)[border..border + w]);
        }
        Image::new(w, h, data)
    }

    /// Largest absolute pixel difference over pixels at least `margin` from every edge.
    pub fn max_abs_diff(&self, other: &Image, margin: usize) -> Result<f64> {
        self.check_same_dims(other)?;
        let mut m: f64 = 0.0;
        for y in margin..self.height.saturating_sub(margin) {
            for x in margin..self.width.saturating_sub(margin) {
                m = m.max((self.get(x, y) - other.get(x, y)).abs());
            }
        }
        Ok(m)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// One 1-D filter stage.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    Fir(FirKernel),
    Iir(ThreePartIIR),
}

impl Stage {
    pub fn identity() -> Self {
        Stage::Fir(FirKernel::identity())
    }

    /// Samples needed along a scan line.
    pub fn min_line(&self) -> usize {
        match self {
            Stage::Fir(k) => k.taps().len(),
            Stage::Iir(f) => 2 * f.order() + 1,
        }
    }

    pub fn to_tf(&self) -> RationalTF {
        match self {
            Stage::Fir(k) => k.to_tf(),
            Stage::Iir(f) => f.to_tf(),
        }
    }

    pub fn eval_freq(&self, omega: f64) -> Result<Complex64> {
        match self {
            Stage::Fir(k) => Ok(k.eval_freq(omega)),
            Stage::Iir(f) => f.eval_freq(omega),
        }
    }

    /// Impulse response `h(m)`, `m = -K..=K`; IIR responses are truncated
    /// below `1e-14` of their peak.
    pub fn impulse_response(&self) -> Result<Vec<f64>> {
        match self {
            Stage::Fir(k) => Ok(k.taps().to_vec()),
            Stage::Iir(f) => f.truncated_impulse_response(1e-14, 1 << 16),
        }
    }

    /// Derivative order: the kernel's own for FIR stages; 0 or 1 by parity
    /// for recursive ones.
    pub fn order(&self) -> usize {
        match self {
            Stage::Fir(k) => k.order(),
            Stage::Iir(f) => (f.parity() == Parity::Antisymmetric) as usize,
        }
    }

    /// Filters every row.
    pub fn apply_rows(&self, img: &Image) -> Result<Image> {
        match self {
            Stage::Fir(k) => conv_rows(img, k),
            Stage::Iir(f) => iir_rows(img, f),
        }
    }

    /// Filters every column.
    pub fn apply_cols(&self, img: &Image) -> Result<Image> {
        match self {
            Stage::Fir(k) => conv_cols(img, k),
            Stage::Iir(f) => iir_cols(img, f),
        }
    }
}

impl Stage {
    /// Coefficient-file form: three-part equations for IIR stages, a transfer
    /// function with unit denominator for FIR kernels.
    pub fn to_json(&self) -> FilterJson {
        match self {
            Stage::Fir(k) => FilterJson::Tf(TfJson::from(&k.to_tf())),
            Stage::Iir(f) => FilterJson::ThreePart(f.clone()),
        }
    }

    /// A transfer function whose denominator is a constant loads as an FIR
    /// kernel; any other is split into a three-part recursion. Parity and
    /// derivative order are read from the numerator.
    pub fn from_json(j: &FilterJson) -> Result<Stage> {
        let tf = match j {
            FilterJson::ThreePart(f) => return Ok(Stage::Iir(f.clone())),
            FilterJson::Tf(t) => RationalTF::try_from(t.clone())?,
        };
        let num = tf.num.trimmed();
        let den = tf.den.trimmed();
        let sym = num.is_symmetric(1e-9);
        let parity = if sym {
            Parity::Symmetric
        } else if num.is_antisymmetric(1e-9) {
            Parity::Antisymmetric
        } else {
            return Err(invalid("filter numerator is neither symmetric nor antisymmetric"));
        };
        if den.coeffs().len() == 1 {
            let c = den.coeffs()[0];
            if c == 0.0 {
                return Err(invalid("zero denominator"));
            }
            // the coefficient of z^m is h(-m)
            let k = num.half_order();
            let taps: Vec<f64> = (-(k as i64)..=k as i64).map(|m| num.coeff(-m) / c).collect();
            // lowest nonvanishing moment gives the derivative order
            let kern = FirKernel::new(taps.clone(), parity, 0)?;
            let order = (0..=2 * k as u32 + 1).find(|&l| kern.moment(l).abs() > 1e-12).unwrap_or(0) as usize;
            return Ok(Stage::Fir(FirKernel::new(taps, parity, order)?));
        }
        Ok(Stage::Iir(three_part_decompose(&tf, parity)?))
    }
}

impl From<FirKernel> for Stage {
    fn from(k: FirKernel) -> Self {
        Stage::Fir(k)
    }
}

impl From<ThreePartIIR> for Stage {
    fn from(f: ThreePartIIR) -> Self {
        Stage::Iir(f)
    }
}

/// Stages applied along rows (`x`) and then along columns (`y`). A band-pass
/// axis is a blur followed by a differentiator.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableFilter {
    pub x: Vec<Stage>,
    pub y: Vec<Stage>,
    /// Derivative orders `(d_x, d_y)`.
    pub label: (usize, usize),
}

impl SeparableFilter {
    pub fn identity() -> Self {
        SeparableFilter { x: Vec::new(), y: Vec::new(), label: (0, 0) }
    }

    /// Same stages on both axes.
    pub fn isotropic(stages: Vec<Stage>) -> Self {
        SeparableFilter { x: stages.clone(), y: stages, label: (0, 0) }
    }
}

/// Row pass of an FIR kernel with replicate-edge padding.
pub fn conv_rows(img: &Image, k: &FirKernel) -> Result<Image> {
    check_line(k.taps().len(), img.width)?;
    Ok(fir::rows(img, k))
}

pub fn conv_cols(img: &Image, k: &FirKernel) -> Result<Image> {
    check_line(k.taps().len(), img.height)?;
    Ok(fir::cols(img, k))
}

/// Row pass of a three-part recursive filter.
pub fn iir_rows(img: &Image, f: &ThreePartIIR) -> Result<Image> {
    f.check_stable()?;
    check_line(2 * f.order() + 1, img.width)?;
    Ok(iir::rows(img, f))
}

pub fn iir_cols(img: &Image, f: &ThreePartIIR) -> Result<Image> {
    f.check_stable()?;
    check_line(2 * f.order() + 1, img.height)?;
    Ok(iir::cols(img, f))
}

fn check_line(kernel: usize, line: usize) -> Result<()> {
    if kernel > line {
        return Err(crate::Error::KernelTooLong { kernel, line });
    }
    Ok(())
}

/// All `x` stages along rows, then all `y` stages along columns.
pub fn apply_separable(img: &Image, f: &SeparableFilter) -> Result<Image> {
    let mut out = img.clone();
    for s in &f.x {
        out = s.apply_rows(&out)?;
    }
    for s in &f.y {
        out = s.apply_cols(&out)?;
    }
    Ok(out)
}

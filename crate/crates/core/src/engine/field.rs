use super::{Image, Stage};
use crate::design::{fir_vm_bank, CascadeMode, FirKernel};
use crate::error::{invalid, Result};

/// `D x D` derivative images `D_{dx,dy}` for `dx + dy < D`.
#[derive(Debug, Clone)]
pub struct DerivativeField {
    d_model: usize,
    images: Vec<Option<Image>>,
}

impl DerivativeField {
    pub fn d_model(&self) -> usize {
        self.d_model
    }

    /// `D_{dx,dy}`, if computed.
    pub fn get(&self, dx: usize, dy: usize) -> Option<&Image> {
        if dx >= self.d_model || dy >= self.d_model {
            return None;
        }
        self.images[dy * self.d_model + dx].as_ref()
    }

    /// As [`get`](Self::get) but errors on a missing component.
    pub fn component(&self, dx: usize, dy: usize) -> Result<&Image> {
        self.get(dx, dy)
            .ok_or_else(|| invalid(format!("derivative field lacks D({dx},{dy}) (model order {})", self.d_model)))
    }

    /// `(dx, dy, image)` triples in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Image)> {
        let d = self.d_model;
        self.images.iter().enumerate().filter_map(move |(i, im)| im.as_ref().map(|im| (i % d, i / d, im)))
    }
}

/// Blurs both axes once with `lpf`, then applies the vanishing-moment
/// differentiator bank of order `D` (three taps for `D = 3`).
pub fn derivative_field(img: &Image, lpf: &Stage, d_model: usize) -> Result<DerivativeField> {
    let bank = fir_vm_bank(d_model, 0, CascadeMode::BehindBlur)?;
    derivative_field_with_bank(img, lpf, &bank)
}

/// As [`derivative_field`] with an explicit bank, `bank[d]` differentiating to order `d`.
pub fn derivative_field_with_bank(img: &Image, lpf: &Stage, bank: &[FirKernel]) -> Result<DerivativeField> {
    let d = bank.len();
    if d % 2 == 0 {
        return Err(invalid(format!("model order must be odd, got {d}")));
    }
    let blurred = lpf.apply_cols(&lpf.apply_rows(img)?)?;
    let mut images = vec![None; d * d];
    for (dx, kx) in bank.iter().enumerate() {
        let rows = super::conv_rows(&blurred, kx)?;
        for (dy, ky) in bank.iter().enumerate().take(d - dx) {
            images[dy * d + dx] = Some(super::conv_cols(&rows, ky)?);
        }
    }
    Ok(DerivativeField { d_model: d, images })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::colored_sg_blur;

    #[test]
    fn quadratic_surface() {
        let (a, b, c, d, e, f) = (0.3, -1.2, 0.7, 0.05, -0.02, 0.03);
        let img = Image::from_fn(64, 64, |x, y| {
            let (x, y) = (x as f64, y as f64);
            a + b * x + c * y + d * x * x + e * x * y + f * y * y
        })
        .unwrap();
        let lpf = Stage::Fir(colored_sg_blur(2.0, 1).unwrap());
        let field = derivative_field(&img, &lpf, 3).unwrap();
        let (x, y) = (32, 30);
        assert!((field.component(2, 0).unwrap().get(x, y) - 2.0 * d).abs() < 1e-9);
        assert!((field.component(1, 1).unwrap().get(x, y) - e).abs() < 1e-9);
        assert!((field.component(0, 2).unwrap().get(x, y) - 2.0 * f).abs() < 1e-9);
        let dx = b + 2.0 * d * x as f64 + e * y as f64;
        assert!((field.component(1, 0).unwrap().get(x, y) - dx).abs() < 1e-9);
        assert!(field.get(2, 1).is_none());
        assert_eq!(field.iter().count(), 6);
    }
}

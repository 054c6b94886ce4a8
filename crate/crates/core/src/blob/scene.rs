use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::Image;
use crate::error::{invalid, Result};

/// Subsamples per pixel along each axis.
const SUPERSAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fill {
    /// 0 inside the ellipse.
    #[default]
    Dark,
    /// 1 inside the ellipse.
    Bright,
}

impl Fill {
    fn value(self) -> f64 {
        match self {
            Fill::Dark => 0.0,
            Fill::Bright => 1.0,
        }
    }
}

/// `eccentricity` is the axis ratio `a / b`, the sense the blob figures use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub eccentricity: f64,
    /// Angle of the major axis from the x axis, counter-clockwise in image
    /// coordinates (y down).
    #[serde(default)]
    pub theta_deg: f64,
    #[serde(default)]
    pub fill: Fill,
}

impl Ellipse {
    pub fn b(&self) -> f64 {
        self.a / self.eccentricity
    }

    /// Half-widths of the axis-aligned bounding box.
    pub fn half_extent(&self) -> (f64, f64) {
        let (s, c) = self.theta_deg.to_radians().sin_cos();
        let (a, b) = (self.a, self.b());
        ((a * a * c * c + b * b * s * s).sqrt(), (a * a * s * s + b * b * c * c).sqrt())
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.theta_deg.to_radians().sin_cos();
        let (u, v) = (x - self.cx, y - self.cy);
        let along = u * c + v * s;
        let across = -u * s + v * c;
        (along / self.a).powi(2) + (across / self.b()).powi(2) <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseScene {
    pub width: usize,
    pub height: usize,
    #[serde(default = "white")]
    pub background: f64,
    #[serde(default)]
    pub ellipses: Vec<Ellipse>,
}

fn white() -> f64 {
    1.0
}

impl EllipseScene {
    /// Grid of dark ellipses on white: one column per semi-major axis, one row
    /// per orientation from 0 to 45 degrees in equal steps. Column gaps are
    /// equal edge to edge; rows are evenly pitched.
    pub fn grid(
        width: usize,
        height: usize,
        semi_majors: &[f64],
        eccentricity: f64,
        orientations: usize,
    ) -> Result<Self> {
        if semi_majors.is_empty() || orientations == 0 {
            return Err(invalid("grid needs at least one column and one row"));
        }
        let widths: Vec<f64> = semi_majors.iter().map(|&a| 2.0 * a).collect();
        let gap = (width as f64 - widths.iter().sum::<f64>()) / (widths.len() + 1) as f64;
        if gap <= 0.0 {
            return Err(invalid(format!("columns do not fit in width {width}")));
        }
        let pitch = height as f64 / orientations as f64;
        let mut ellipses = Vec::with_capacity(semi_majors.len() * orientations);
        for r in 0..orientations {
            let theta_deg = if orientations == 1 { 0.0 } else { 45.0 * r as f64 / (orientations - 1) as f64 };
            let cy = (r as f64 + 0.5) * pitch;
            let mut left = gap;
            for (&a, &w) in semi_majors.iter().zip(&widths) {
                ellipses.push(Ellipse { cx: left + w / 2.0, cy, a, eccentricity, theta_deg, fill: Fill::Dark });
                left += w + gap;
            }
        }
        let scene = EllipseScene { width, height, background: 1.0, ellipses };
        scene.validate()?;
        Ok(scene)
    }

    /// The 1024 x 768 blob-figure layout: semi-majors 4 to 64, five orientations.
    pub fn figure(eccentricity: f64) -> Result<Self> {
        Self::grid(1024, 768, &[4.0, 8.0, 16.0, 32.0, 64.0], eccentricity, 5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(invalid("scene canvas must be non-empty"));
        }
        for (i, e) in self.ellipses.iter().enumerate() {
            if !(e.a > 0.0 && e.eccentricity >= 1.0 && e.a.is_finite() && e.eccentricity.is_finite()) {
                return Err(invalid(format!("ellipse {i}: need a > 0 and eccentricity >= 1")));
            }
            let (ex, ey) = e.half_extent();
            if e.cx - ex < 0.0 || e.cy - ey < 0.0 || e.cx + ex > self.width as f64 || e.cy + ey > self.height as f64 {
                return Err(invalid(format!("ellipse {i} extends outside the {}x{} canvas", self.width, self.height)));
            }
        }
        Ok(())
    }
}

/// Rasterizes with 4 x 4 supersampling. Pixel `(x, y)` covers
/// `[x, x + 1) x [y, y + 1)`; overlapping ellipses paint in list order.
pub fn render_scene(scene: &EllipseScene) -> Result<Image> {
    scene.validate()?;
    let (w, h) = (scene.width, scene.height);
    let n = SUPERSAMPLE as f64;
    let rows: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![scene.background; w];
            for e in &scene.ellipses {
                let (ex, ey) = e.half_extent();
                if (y as f64) > e.cy + ey || (y as f64 + 1.0) < e.cy - ey {
                    continue;
                }
                let x0 = (e.cx - ex).floor().max(0.0) as usize;
                let x1 = ((e.cx + ex).ceil() as usize).min(w);
                for (x, px) in row.iter_mut().enumerate().take(x1).skip(x0) {
                    let mut hits = 0usize;
                    for sy in 0..SUPERSAMPLE {
                        for sx in 0..SUPERSAMPLE {
                            let fx = x as f64 + (sx as f64 + 0.5) / n;
                            let fy = y as f64 + (sy as f64 + 0.5) / n;
                            hits += e.contains(fx, fy) as usize;
                        }
                    }
                    let cover = hits as f64 / (n * n);
                    *px += cover * (e.fill.value() - *px);
                }
            }
            row
        })
        .collect();
    Image::new(w, h, rows.concat())
}

/// Copy of `img` with the listed pixels set to 1.
pub fn overlay(img: &Image, pixels: impl IntoIterator<Item = (usize, usize)>) -> Image {
    let mut out = img.clone();
    for (x, y) in pixels {
        if x < out.width() && y < out.height() {
            out.set(x, y, 1.0);
        }
    }
    out
}

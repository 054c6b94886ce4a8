//! Filter families: interpolating differentiators, sampled Gaussians,
//! vanishing-moment FIR banks, colored Savitzky-Golay blurs, and the
//! recursive repeated-pole, Butterworth and blunt-exponential blurs.
//!
//! Blur design runs in double-double; emitted coefficients are rounded to `f64`.

mod constraint;
mod fir;
mod iir;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::polyz::{LaurentPoly, Point, RationalTF, ThreePartIIR};

pub use crate::polyz::Parity;
pub use constraint::ConstraintSystem;
pub use fir::{
    colored_sg_blur, colored_sg_support, fir_vm_bank, fir_vm_bank_with_systems, gaussian_fir, interp_diff,
    uniform_sg_blur, CascadeMode, GAUSSIAN_TAIL_LIMIT, MAX_ORDER,
};
pub use iir::{
    blunt_exponential_blur, butterworth_appendix, butterworth_blur, butterworth_cutoff, butterworth_from_cutoff,
    butterworth_tf, repeated_pole_blur, repeated_pole_tf,
};

/// Center-indexed taps `h(m)`, `m = -K..=K`, applied as `y(n) = sum h(m) x(n - m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirKernel {
    taps: Vec<f64>,
    parity: Parity,
    order: usize,
}

impl FirKernel {
    /// Validates length, finiteness and parity (to 1e-9 relative).
    pub fn new(taps: Vec<f64>, parity: Parity, order: usize) -> Result<Self> {
        if taps.len() % 2 == 0 {
            return Err(invalid(format!("kernel length must be odd, got {}", taps.len())));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(invalid("non-finite kernel tap"));
        }
        let poly = LaurentPoly::new(taps.clone())?;
        let ok = match parity {
            Parity::Symmetric => poly.is_symmetric(1e-9),
            Parity::Antisymmetric => poly.is_antisymmetric(1e-9),
        };
        if !ok {
            return Err(invalid(format!("kernel taps are not {}", parity.as_str())));
        }
        Ok(FirKernel { taps, parity, order })
    }

    /// Builds from `h(0)` and `h(1..=K)`, mirroring per parity.
    pub fn from_half(center: f64, right: &[f64], parity: Parity, order: usize) -> Result<Self> {
        let s = parity.sign();
        let mut taps: Vec<f64> = right.iter().rev().map(|v| s * v).collect();
        taps.push(if parity == Parity::Antisymmetric { 0.0 } else { center });
        taps.extend_from_slice(right);
        Self::new(taps, parity, order)
    }

    pub fn identity() -> Self {
        FirKernel { taps: vec![1.0], parity: Parity::Symmetric, order: 0 }
    }

    pub fn half_len(&self) -> usize {
        self.taps.len() / 2
    }

    /// Taps ordered `m = -K..=K`.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn tap(&self, m: i64) -> f64 {
        let i = m + self.half_len() as i64;
        if i < 0 || i as usize >= self.taps.len() {
            0.0
        } else {
            self.taps[i as usize]
        }
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Derivative order `d`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// `sum_m m^l h(-m)`.
    pub fn moment(&self, l: u32) -> f64 {
        let k = self.half_len() as i64;
        (-k..=k).map(|m| (m as f64).powi(l as i32) * self.tap(-m)).sum()
    }

    /// Transfer function with numerator coefficient `h(-m)` on `z^m`.
    pub fn to_tf(&self) -> RationalTF {
        let num = LaurentPoly::new(self.taps.iter().rev().copied().collect()).expect("odd tap count");
        RationalTF::fir(num)
    }

    pub fn eval_freq(&self, omega: f64) -> Complex64 {
        let k = self.half_len() as i64;
        (-k..=k).map(|m| self.tap(m) * Complex64::new(0.0, -(m as f64) * omega).exp()).sum()
    }

    pub fn dc_derivatives(&self, at: Point, l_max: usize) -> Result<Vec<Complex64>> {
        self.to_tf().dc_derivatives(at, l_max)
    }

    /// Convolution of two kernels (cascade of the two filters).
    pub fn cascade(&self, other: &FirKernel) -> FirKernel {
        let n = self.taps.len() + other.taps.len() - 1;
        let mut taps = vec![0.0; n];
        for (i, a) in self.taps.iter().enumerate() {
            for (j, b) in other.taps.iter().enumerate() {
                taps[i + j] += a * b;
            }
        }
        let parity = if self.parity == other.parity { Parity::Symmetric } else { Parity::Antisymmetric };
        FirKernel { taps, parity, order: self.order + other.order }
    }
}

/// Filter families known to [`DesignSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    InterpDiff,
    GaussianFir,
    FirVmBank,
    ColoredSg,
    RepeatedPole,
    Butterworth,
    BluntExponential,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::InterpDiff,
        Family::GaussianFir,
        Family::FirVmBank,
        Family::ColoredSg,
        Family::RepeatedPole,
        Family::Butterworth,
        Family::BluntExponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::InterpDiff => "interp_diff",
            Family::GaussianFir => "gaussian_fir",
            Family::FirVmBank => "fir_vm_bank",
            Family::ColoredSg => "colored_sg",
            Family::RepeatedPole => "repeated_pole",
            Family::Butterworth => "butterworth",
            Family::BluntExponential => "blunt_exponential",
        }
    }

    /// True for the low-pass families usable as a blur stage.
    pub fn is_blur(self) -> bool {
        !matches!(self, Family::InterpDiff | Family::FirVmBank)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
            invalid(format!("unknown family {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// A designed filter.
#[derive(Debug, Clone, PartialEq)]
pub enum Designed {
    Fir(FirKernel),
    Bank(Vec<FirKernel>),
    Iir(ThreePartIIR),
}

/// Parameters for one filter design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub family: Family,
    /// Scale in pixels (`lambda` for the blunt exponential).
    pub sigma: f64,
    /// Model order, odd.
    pub d_model: usize,
    /// Number of Nyquist constraints.
    pub l_pi_bar: usize,
    /// Derivative order for single-kernel families.
    pub d: usize,
    /// Explicit half-length, where the family takes one.
    pub k: Option<usize>,
    pub cascade_mode: CascadeMode,
}

impl DesignSpec {
    pub fn new(family: Family, sigma: f64) -> Self {
        DesignSpec { family, sigma, d_model: 3, l_pi_bar: 2, d: 0, k: None, cascade_mode: CascadeMode::BehindBlur }
    }

    /// Parity-pair count `L_D` with `D = 2 L_D + 1`.
    pub fn l_d(&self) -> usize {
        self.d_model / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model % 2 == 0 || self.d_model == 0 {
            return Err(invalid(format!("model order D must be odd and >= 1, got {}", self.d_model)));
        }
        let needs_sigma = !matches!(self.family, Family::InterpDiff | Family::FirVmBank);
        if needs_sigma && !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma must be positive"));
        }
        Ok(())
    }

    pub fn design(&self) -> Result<Designed> {
        self.validate()?;
        Ok(match self.family {
            Family::InterpDiff => Designed::Fir(interp_diff(self.d)?),
            Family::GaussianFir => {
                let k = self.k.unwrap_or((5.0 * self.sigma).ceil() as usize);
                Designed::Fir(gaussian_fir(self.sigma, self.d, k)?)
            }
            Family::FirVmBank => Designed::Bank(fir_vm_bank(self.d_model, self.l_pi_bar, self.cascade_mode)?),
            Family::ColoredSg => Designed::Fir(colored_sg_blur(self.sigma, self.l_d())?),
            Family::RepeatedPole => Designed::Iir(repeated_pole_blur(self.sigma, self.l_d(), self.l_pi_bar)?),
            Family::Butterworth => Designed::Iir(butterworth_blur(self.sigma, self.l_d())?),
            Family::BluntExponential => Designed::Iir(blunt_exponential_blur(self.sigma, self.k.unwrap_or(3))?),
        })
    }
}

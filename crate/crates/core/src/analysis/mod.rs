//! Moment tables, frequency-response grids, isotropy scores and steering.

mod response;
mod steer;

use crate::design::{FirKernel, Parity};
use crate::engine::Stage;
use crate::error::{invalid, Result};
use crate::polyz::ThreePartIIR;
use crate::scalar::factorial;

pub use response::{freq_grid, freq_grid_2d, isotropy_score, FreqGrid, Response, ISOTROPY_ANGLES};
pub use steer::{steer, steer_field, SteerSet};

/// Moment sums of a bank; column `i` belongs to `bank[i]`, whose derivative
/// order is `orders[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    /// `literal[l][i] = (1/d!) sum_m m^l h_i(-m)` with `d = orders[i]`.
    pub literal: Vec<Vec<f64>>,
    /// `rho_{d,l} / (i^d d!)`, the frequency-domain view: equals
    /// `i^(l-d)` times the literal entry (zero when `l - d` is odd).
    pub normalized: Vec<Vec<f64>>,
    pub orders: Vec<usize>,
    /// Half-length `K` of each impulse response summed over.
    pub extent: Vec<usize>,
    /// `max |literal[l][i] - delta_{d,l}|`.
    pub max_deviation: f64,
}

impl MomentReport {
    pub fn rows(&self) -> usize {
        self.literal.len()
    }
}

/// Moments for `l = 0..l_count` of every filter in `bank`; IIR impulse
/// responses are truncated below `1e-14` of their peak.
pub fn moment_table(bank: &[Stage], l_count: usize) -> Result<MomentReport> {
    if bank.is_empty() || l_count == 0 {
        return Err(invalid("moment table needs at least one filter and one row"));
    }
    let irs: Vec<Vec<f64>> = bank.iter().map(Stage::impulse_response).collect::<Result<_>>()?;
    let extent: Vec<usize> = irs.iter().map(|h| h.len() / 2).collect();
    let orders: Vec<usize> = bank.iter().map(Stage::order).collect();
    let mut literal = vec![vec![0.0; bank.len()]; l_count];
    let mut normalized = vec![vec![0.0; bank.len()]; l_count];
    let mut max_deviation: f64 = 0.0;
    for (i, h) in irs.iter().enumerate() {
        let d = orders[i];
        let k = (h.len() / 2) as i64;
        for l in 0..l_count {
            // sum over m of m^l h(-m), with h stored from m = -K
            let sum: f64 = (-k..=k).map(|m| (m as f64).powi(l as i32) * h[(k - m) as usize]).sum();
            let v = sum / factorial(d);
            literal[l][i] = v;
            normalized[l][i] = match (l as i64 - d as i64).rem_euclid(4) {
                0 => v,
                2 => -v,
                _ => 0.0,
            };
            let target = if l == d { 1.0 } else { 0.0 };
            max_deviation = max_deviation.max((v - target).abs());
        }
    }
    if !max_deviation.is_finite() {
        return Err(invalid("moment sums are not finite"));
    }
    Ok(MomentReport { literal, normalized, orders, extent, max_deviation })
}

/// Convenience wrapper for a bank of FIR kernels.
pub fn fir_moment_table(bank: &[FirKernel], l_count: usize) -> Result<MomentReport> {
    let stages: Vec<Stage> = bank.iter().cloned().map(Stage::Fir).collect();
    moment_table(&stages, l_count)
}

/// Moments of a single recursive blur.
pub fn iir_moment_table(f: &ThreePartIIR, l_count: usize) -> Result<MomentReport> {
    if f.parity() != Parity::Symmetric {
        return Err(invalid("expected a symmetric blur"));
    }
    moment_table(&[Stage::Iir(f.clone())], l_count)
}

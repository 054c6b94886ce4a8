//! On-disk coefficient formats.
//!
//! `{"k": K, "num": [...], "den": [...]}` for transfer functions (Laurent
//! arrays ascending from `m = -K`) and
//! `{"b_plus": [...], "a_plus": [...], "b_zero": x, "parity": "sym"|"anti"}`
//! for three-part difference equations (plus arrays hold `m = 1..=K`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LaurentPoly, Parity, RationalTF, ThreePartIIR};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreePartJson {
    pub b_plus: Vec<f64>,
    pub a_plus: Vec<f64>,
    pub b_zero: f64,
    pub parity: Parity,
}

impl TryFrom<ThreePartJson> for ThreePartIIR {
    type Error = Error;
    fn try_from(j: ThreePartJson) -> Result<Self> {
        ThreePartIIR::new(j.b_plus, j.a_plus, j.b_zero, j.parity)
    }
}

impl From<ThreePartIIR> for ThreePartJson {
    fn from(f: ThreePartIIR) -> Self {
        ThreePartJson {
            b_plus: f.b_plus().to_vec(),
            a_plus: f.a_plus().to_vec(),
            b_zero: f.b_zero(),
            parity: f.parity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfJson {
    pub k: usize,
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl From<&RationalTF> for TfJson {
    fn from(tf: &RationalTF) -> Self {
        let k = tf.half_order();
        TfJson { k, num: tf.num.padded(k).coeffs().to_vec(), den: tf.den.padded(k).coeffs().to_vec() }
    }
}

impl TryFrom<TfJson> for RationalTF {
    type Error = Error;
    fn try_from(j: TfJson) -> Result<Self> {
        if j.num.len() != 2 * j.k + 1 || j.den.len() != 2 * j.k + 1 {
            return Err(invalid(format!("num and den must both have 2k+1 = {} coefficients", 2 * j.k + 1)));
        }
        if j.num.iter().chain(&j.den).any(|c| !c.is_finite()) {
            return Err(invalid("non-finite transfer-function coefficient"));
        }
        Ok(RationalTF::new(LaurentPoly::new(j.num)?, LaurentPoly::new(j.den)?))
    }
}

/// Either coefficient format, as found in a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterJson {
    ThreePart(ThreePartIIR),
    Tf(TfJson),
}

impl FilterJson {
    pub fn to_tf(&self) -> Result<RationalTF> {
        match self {
            FilterJson::ThreePart(f) => Ok(f.to_tf()),
            FilterJson::Tf(j) => RationalTF::try_from(j.clone()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

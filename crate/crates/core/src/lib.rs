//! # causapair
//!
//! Cause-effect inference for bivariate observational data under the
//! additive noise model (ANM) assumption `y = f(x) + n` with `n ⟂ x`.
//!
//! Both regression directions are fitted with a Gaussian process, and the
//! dependence between each regressor and its residuals is measured with the
//! Hilbert-Schmidt independence criterion (HSIC). Two decision rules are
//! provided:
//!
//! | Criterion | Definition | Forward when |
//! |-----------|------------|--------------|
//! | `C`   | `HSIC(x, r_f) − HSIC(y, r_b)` | `C < 0` |
//! | `C_s` | `(s_b^y + s_b^r) − (s_f^x + s_f^r)` | `C_s > 0` |
//!
//! where the `s` terms are aggregate HSIC sensitivities: the mean squared
//! derivative of HSIC with respect to each sample coordinate.
//!
//! The crate also ships the evaluation machinery (weighted ROC/PR curves,
//! sample-size and SNR sweeps), loaders for the cause-effect-pairs text
//! layout and deterministic synthetic generators.

pub mod anm;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod gp;
pub mod hsic;
pub mod kernels;
pub mod seed;
pub mod synth;

use serde::{Deserialize, Serialize};

pub use anm::{criterion_c, criterion_cs, infer_direction, CausalVerdict, InferenceConfig};
pub use error::{Error, Result};
pub use hsic::{hsic_value, sensitivity, DependenceReport, RffConfig};
pub use kernels::{BandwidthRule, GramMatrix, KernelSpec};

/// One observed variable: an ordered list of finite reals.
pub type Series = Vec<f64>;

/// Causal orientation of a pair `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `x → y`
    Forward,
    /// `y → x`
    Backward,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Forward => f.write_str("forward"),
            Direction::Backward => f.write_str("backward"),
        }
    }
}

/// Two equal-length series observed jointly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub x: Series,
    pub y: Series,
}

impl PairedSample {
    pub fn new(x: Series, y: Series) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The same observations with the roles of `x` and `y` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

pub(crate) fn ensure_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Mean and n-denominator variance.
pub(crate) fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

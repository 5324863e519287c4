//! Additive-noise-model direction inference.

use serde::{Deserialize, Serialize};

use crate::data::{standardize, subsample};
use crate::gp::{GpRegression, HyperGrid, RegressionModel};
use crate::hsic::sensitivity;
use crate::kernels::KernelSpec;
use crate::seed::Context;
use crate::{mean_var, Direction, Error, PairedSample, Result};

pub const MIN_SAMPLES: usize = 10;

/// How `c` and `c_s` are reported. Directions never depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    /// `c = HSIC_f − HSIC_b`, `c_s = (s_b^y + s_b^r) − (s_f^x + s_f^r)`.
    #[default]
    Equation,
    /// Both criteria negated, as some published tables print them.
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub data_kernel: KernelSpec,
    pub residual_kernel: KernelSpec,
    pub grid: HyperGrid,
    pub n_max: Option<usize>,
    pub seed: u64,
    pub sign_convention: SignConvention,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            data_kernel: KernelSpec::median(),
            residual_kernel: KernelSpec::median(),
            grid: HyperGrid::default(),
            n_max: None,
            seed: 0,
            sign_convention: SignConvention::Equation,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        match self.n_max {
            Some(m) if m < MIN_SAMPLES => Err(Error::InvalidParameter(format!(
                "n_max must be at least {MIN_SAMPLES}, got {m}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalVerdict {
    /// `HSIC(x, r_f)`
    pub hsic_f: f64,
    /// `HSIC(y, r_b)`
    pub hsic_b: f64,
    pub c: f64,
    pub s_f_x: f64,
    pub s_f_r: f64,
    pub s_b_y: f64,
    pub s_b_r: f64,
    pub c_s: f64,
    pub dir_c: Direction,
    pub dir_cs: Direction,
    /// `−C` under the equation convention; positive means forward.
    pub score_c: f64,
    /// `C_s` under the equation convention; positive means forward.
    pub score_cs: f64,
    pub convention: SignConvention,
    /// Samples used after subsampling.
    pub n: usize,
}

pub fn criterion_c(hsic_f: f64, hsic_b: f64) -> f64 {
    hsic_f - hsic_b
}

pub fn criterion_cs(s_f_x: f64, s_f_r: f64, s_b_y: f64, s_b_r: f64) -> f64 {
    (s_b_y + s_b_r) - (s_f_x + s_f_r)
}

/// Forward iff the score is positive; an exact zero resolves to forward.
pub fn direction_from_score(score: f64) -> Direction {
    if score >= 0.0 {
        Direction::Forward
    } else {
        Direction::Backward
    }
}

impl CausalVerdict {
    /// Assemble a verdict from the four residual-dependence terms.
    pub fn from_terms(
        hsic_f: f64,
        hsic_b: f64,
        sens: [f64; 4],
        convention: SignConvention,
        n: usize,
    ) -> Self {
        let [s_f_x, s_f_r, s_b_y, s_b_r] = sens;
        let c_eq = criterion_c(hsic_f, hsic_b);
        let cs_eq = criterion_cs(s_f_x, s_f_r, s_b_y, s_b_r);
        let score_c = -c_eq;
        let score_cs = cs_eq;
        let (c, c_s) = match convention {
            SignConvention::Equation => (c_eq, cs_eq),
            SignConvention::Table => (-c_eq, -cs_eq),
        };
        Self {
            hsic_f,
            hsic_b,
            c,
            s_f_x,
            s_f_r,
            s_b_y,
            s_b_r,
            c_s,
            dir_c: direction_from_score(score_c),
            dir_cs: direction_from_score(score_cs),
            score_c,
            score_cs,
            convention,
            n,
        }
    }
}

pub fn infer_direction(pair: &PairedSample, cfg: &InferenceConfig) -> Result<CausalVerdict> {
    let model = GpRegression {
        grid: cfg.grid.clone(),
    };
    infer_direction_with(pair, cfg, &model)
}

/// [`infer_direction`] with a caller-supplied regression model for both
/// directions.
pub fn infer_direction_with(
    pair: &PairedSample,
    cfg: &InferenceConfig,
    model: &dyn RegressionModel,
) -> Result<CausalVerdict> {
    cfg.validate()?;
    if pair.x.len() != pair.y.len() {
        return Err(Error::LengthMismatch {
            left: pair.x.len(),
            right: pair.y.len(),
        });
    }
    let sample = match cfg.n_max {
        Some(n_max) => subsample(pair, n_max, Context::new("subsample").derive(cfg.seed))?,
        None => pair.clone(),
    };
    let n = sample.len();
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: n,
        });
    }
    let (x, _, _) = standardize(&sample.x)?;
    let (y, _, _) = standardize(&sample.y)?;
    if is_deterministic_copy(&x, &y) {
        return Err(Error::DegenerateResiduals);
    }

    let forward = model.fit(&x, &y)?;
    let backward = model.fit(&y, &x)?;
    let r_f: Vec<f64> = y
        .iter()
        .zip(forward.predict(&x)?)
        .map(|(t, p)| t - p)
        .collect();
    let r_b: Vec<f64> = x
        .iter()
        .zip(backward.predict(&y)?)
        .map(|(t, p)| t - p)
        .collect();
    // targets have unit variance
    if mean_var(&r_f).1 < 1e-12 || mean_var(&r_b).1 < 1e-12 {
        return Err(Error::DegenerateResiduals);
    }

    let rep_f = sensitivity(&x, &r_f, &cfg.data_kernel, &cfg.residual_kernel)?;
    let rep_b = sensitivity(&y, &r_b, &cfg.data_kernel, &cfg.residual_kernel)?;
    Ok(CausalVerdict::from_terms(
        rep_f.hsic,
        rep_b.hsic,
        [rep_f.agg_a, rep_f.agg_b, rep_b.agg_a, rep_b.agg_b],
        cfg.sign_convention,
        n,
    ))
}

/// Standardized series equal up to sign: every regression is exact.
fn is_deterministic_copy(x: &[f64], y: &[f64]) -> bool {
    let same = x.iter().zip(y).all(|(a, b)| (a - b).abs() < 1e-9);
    let mirrored = x.iter().zip(y).all(|(a, b)| (a + b).abs() < 1e-9);
    same || mirrored
}

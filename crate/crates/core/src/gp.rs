//! Homoscedastic Gaussian process regression.
//!
//! Inputs are standardized and targets centered before fitting; the
//! posterior is
//!
//! ```text
//! μ*  = k_f*ᵀ (K_ff + λ²I)⁻¹ y
//! σ*² = λ² + k** − k_f*ᵀ (K_ff + λ²I)⁻¹ k_f*
//! ```
//!
//! Hyperparameters are picked from a finite grid by log marginal likelihood.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::kernels::median_pairwise_distance;
use crate::{ensure_finite, mean_var, Error, Result, Series};

/// Smallest admissible noise variance.
pub const JITTER_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    /// Lengthscale, in units of the standardized input.
    pub lengthscale: f64,
    pub signal_variance: f64,
    /// λ², floored at [`JITTER_FLOOR`].
    pub noise_variance: f64,
}

impl GpHyper {
    pub fn new(lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(lengthscale)
            || !ok(signal_variance)
            || !(noise_variance >= 0.0 && noise_variance.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "GP hyperparameters must be positive: ({lengthscale}, {signal_variance}, {noise_variance})"
            )));
        }
        Ok(Self {
            lengthscale,
            signal_variance,
            noise_variance: noise_variance.max(JITTER_FLOOR),
        })
    }

    #[inline]
    fn cov(&self, d: f64) -> f64 {
        self.signal_variance * (-(d * d) / (2.0 * self.lengthscale * self.lengthscale)).exp()
    }
}

/// Candidate hyperparameters for [`fit_gp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperGrid {
    /// Multipliers of data-derived scales: lengthscales of the median
    /// pairwise distance of the standardized input, signal and noise
    /// variances of the target variance. Candidates are enumerated
    /// lengthscale-major, then signal, then noise.
    Relative {
        lengthscale: Vec<f64>,
        signal: Vec<f64>,
        noise: Vec<f64>,
    },
    Explicit(Vec<GpHyper>),
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid::Relative {
            lengthscale: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            signal: vec![0.5, 1.0, 2.0],
            noise: vec![1e-4, 1e-2, 0.1, 0.5],
        }
    }
}

impl HyperGrid {
    pub fn single(hyper: GpHyper) -> Self {
        HyperGrid::Explicit(vec![hyper])
    }

    fn candidates(&self, x_std: &[f64], y_var: f64) -> Result<Vec<GpHyper>> {
        match self {
            HyperGrid::Explicit(list) => Ok(list.clone()),
            HyperGrid::Relative {
                lengthscale,
                signal,
                noise,
            } => {
                let base_len = median_pairwise_distance(x_std);
                // a standardized input has unit spread; only ties can zero the median
                let base_len = if base_len > 0.0 { base_len } else { 1.0 };
                let scale = if y_var > 0.0 { y_var } else { 1.0 };
                let mut out = Vec::with_capacity(lengthscale.len() * signal.len() * noise.len());
                for &l in lengthscale {
                    for &s in signal {
                        for &nz in noise {
                            out.push(GpHyper::new(l * base_len, s * scale, nz * scale)?);
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

/// A fitted GP. Immutable after construction.
#[derive(Debug, Clone)]
pub struct GpFit {
    /// Standardized training inputs.
    pub train_x: Series,
    pub x_shift: f64,
    pub x_scale: f64,
    pub hyper: GpHyper,
    /// `(K_ff + λ²I)⁻¹ (y − ȳ)`
    pub alpha: Series,
    pub train_mean_y: f64,
    pub log_evidence: f64,
    chol: Cholesky<f64, Dyn>,
}

impl GpFit {
    fn standardize(&self, x_star: &[f64]) -> Result<Vec<f64>> {
        ensure_finite(x_star)?;
        Ok(x_star
            .iter()
            .map(|v| (v - self.x_shift) / self.x_scale)
            .collect())
    }

    fn cross_cov(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.train_x.len(),
            self.train_x.iter().map(|&xi| self.hyper.cov(t - xi)),
        )
    }

    /// Lower Cholesky factor of `K_ff + λ²I`.
    pub fn factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

/// Log marginal likelihood `−½yᵀα − Σ log L_ii − (n/2) log 2π`.
fn log_evidence(y: &DVector<f64>, alpha: &DVector<f64>, chol: &Cholesky<f64, Dyn>) -> f64 {
    let n = y.len() as f64;
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * y.dot(alpha) - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

type Chol = Cholesky<f64, Dyn>;

pub fn fit_gp(x: &[f64], y: &[f64], grid: &HyperGrid) -> Result<GpFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    ensure_finite(x)?;
    ensure_finite(y)?;
    let (x_shift, x_var) = mean_var(x);
    if x_var <= 0.0 {
        return Err(Error::ConstantSeries);
    }
    let x_scale = x_var.sqrt();
    let train_x: Vec<f64> = x.iter().map(|v| (v - x_shift) / x_scale).collect();
    let (train_mean_y, y_var) = mean_var(y);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - train_mean_y));

    let sq_dist = DMatrix::from_fn(n, n, |i, j| {
        let d = train_x[i] - train_x[j];
        d * d
    });

    // (hyperparameters, factor, alpha, log evidence)
    let mut best: Option<(GpHyper, Chol, DVector<f64>, f64)> = None;
    for hyper in grid.candidates(&train_x, y_var)? {
        let inv_two_l2 = 1.0 / (2.0 * hyper.lengthscale * hyper.lengthscale);
        let mut k = sq_dist.map(|d2| hyper.signal_variance * (-d2 * inv_two_l2).exp());
        for i in 0..n {
            k[(i, i)] += hyper.noise_variance;
        }
        let Some(chol) = Cholesky::new(k) else {
            continue;
        };
        let alpha = chol.solve(&yc);
        let ev = log_evidence(&yc, &alpha, &chol);
        if !ev.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| ev > b.3) {
            best = Some((hyper, chol, alpha, ev));
        }
    }
    let (hyper, chol, alpha, log_evidence) = best.ok_or(Error::Factorization)?;
    Ok(GpFit {
        train_x,
        x_shift,
        x_scale,
        hyper,
        alpha: alpha.iter().copied().collect(),
        train_mean_y,
        log_evidence,
        chol,
    })
}

pub fn predict_mean(fit: &GpFit, x_star: &[f64]) -> Result<Series> {
    let t = fit.standardize(x_star)?;
    Ok(t.iter()
        .map(|&ti| {
            fit.train_x
                .iter()
                .zip(&fit.alpha)
                .map(|(&xi, &ai)| fit.hyper.cov(ti - xi) * ai)
                .sum::<f64>()
                + fit.train_mean_y
        })
        .collect())
}

pub fn predict_var(fit: &GpFit, x_star: &[f64]) -> Result<Series> {
    let t = fit.standardize(x_star)?;
    let l = fit.chol.l_dirty();
    Ok(t.iter()
        .map(|&ti| {
            let mut v = fit.cross_cov(ti);
            // v = L⁻¹ k_f*, so k_f*ᵀ(K+λ²I)⁻¹k_f* = ‖v‖²
            l.solve_lower_triangular_mut(&mut v);
            let reduction = (fit.hyper.signal_variance - v.norm_squared()).max(0.0);
            fit.hyper.noise_variance + reduction
        })
        .collect())
}

/// `y − f(x)` under the posterior mean.
pub fn residuals(fit: &GpFit, x: &[f64], y: &[f64]) -> Result<Series> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let mean = predict_mean(fit, x)?;
    Ok(y.iter().zip(&mean).map(|(a, b)| a - b).collect())
}

/// A regression procedure usable on either side of the causal pipeline.
pub trait RegressionModel: Send + Sync {
    fn fit(&self, x: &[f64], y: &[f64]) -> Result<Box<dyn FittedRegression>>;
}

pub trait FittedRegression: Send + Sync {
    fn predict(&self, x: &[f64]) -> Result<Series>;
}

/// The homoscedastic GP as a [`RegressionModel`].
#[derive(Debug, Clone, Default)]
pub struct GpRegression {
    pub grid: HyperGrid,
}

impl RegressionModel for GpRegression {
    fn fit(&self, x: &[f64], y: &[f64]) -> Result<Box<dyn FittedRegression>> {
        Ok(Box::new(fit_gp(x, y, &self.grid)?))
    }
}

impl FittedRegression for GpFit {
    fn predict(&self, x: &[f64]) -> Result<Series> {
        predict_mean(self, x)
    }
}

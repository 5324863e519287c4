//! Empirical HSIC, its analytic sensitivity maps and a random Fourier
//! feature approximation.
//!
//! With `K_a`, `K_b` RBF Gram matrices and `H = I − (1/n)11ᵀ`,
//!
//! ```text
//! HSIC = Tr(H·K_a·H·K_b) / n²
//! ```
//!
//! Expanding the centering gives
//! `n²·HSIC = Σ K_a∘K_b − (2/n)·Σ_i r^a_i r^b_i + (1/n²)·S_a·S_b`, with `r`
//! the Gram row sums and `S` the grand sums, so neither value nor gradient
//! ever needs an `n × n` buffer.
//!
//! The derivative with respect to `a_i`, holding both bandwidths fixed, is
//!
//! ```text
//! ∂HSIC/∂a_i = −2/(σ_a²·n²) · Σ_j A_ij·K_a[j,i]·(a_i − a_j),   A = H·K_b·H
//! ```
//!
//! which is the trace form `Tr(A·(K_a ∘ M_i))` restricted to the single
//! non-zero column of `M_i`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::kernels::{rbf, resolve_bandwidth, KernelSpec};
use crate::seed::{self, Context};
use crate::{ensure_finite, Error, Result, Series};

/// Round-off allowance below zero before a negative HSIC is an error.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

const RFF_BLOCK: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub hsic: f64,
    /// `∂HSIC/∂a_i`
    pub s_a: Series,
    /// `∂HSIC/∂b_i`
    pub s_b: Series,
    /// Mean of `s_a²`.
    pub agg_a: f64,
    /// Mean of `s_b²`.
    pub agg_b: f64,
    /// Point-wise relevance `sqrt(s_a[i]² + s_b[i]²)`.
    pub pointwise: Series,
    pub sigma_a: f64,
    pub sigma_b: f64,
}

impl DependenceReport {
    /// Norm of the joint aggregate sensitivity, `sqrt(agg_a + agg_b)`.
    pub fn sensitivity_norm(&self) -> f64 {
        (self.agg_a + self.agg_b).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RffConfig {
    pub num_features: usize,
    pub seed: u64,
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: a.len(),
        });
    }
    ensure_finite(a)?;
    ensure_finite(b)
}

/// Bandwidth for one argument. A constant argument has a zero centered Gram
/// matrix whatever its bandwidth, so the median heuristic's degeneracy is
/// only an error when the value actually depends on it.
fn bandwidth_or_unit(x: &[f64], spec: &KernelSpec) -> Result<(f64, bool)> {
    let constant = x.iter().all(|&v| v == x[0]);
    match resolve_bandwidth(x, spec) {
        Ok(s) => Ok((s, constant)),
        Err(Error::DegenerateBandwidth) if constant => Ok((1.0, true)),
        Err(e) => Err(e),
    }
}

fn clamp(value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -NEGATIVE_TOLERANCE {
        Ok(0.0)
    } else {
        Err(Error::NegativeHsic(value))
    }
}

/// Row sums of both Gram matrices and `Σ K_a∘K_b`, in one sweep over `i < j`.
struct GramSums {
    row_a: Vec<f64>,
    row_b: Vec<f64>,
    cross: f64,
}

fn gram_sums(a: &[f64], b: &[f64], sigma_a: f64, sigma_b: f64) -> GramSums {
    let n = a.len();
    let mut row_a = vec![1.0; n];
    let mut row_b = vec![1.0; n];
    let mut off = 0.0;
    for j in 0..n {
        for i in 0..j {
            let ka = rbf(a[i] - a[j], sigma_a);
            let kb = rbf(b[i] - b[j], sigma_b);
            off += ka * kb;
            row_a[i] += ka;
            row_a[j] += ka;
            row_b[i] += kb;
            row_b[j] += kb;
        }
    }
    GramSums {
        row_a,
        row_b,
        cross: n as f64 + 2.0 * off,
    }
}

fn hsic_from_sums(sums: &GramSums) -> f64 {
    let n = sums.row_a.len() as f64;
    let rows: f64 = sums.row_a.iter().zip(&sums.row_b).map(|(x, y)| x * y).sum();
    let total_a: f64 = sums.row_a.iter().sum();
    let total_b: f64 = sums.row_b.iter().sum();
    (sums.cross - 2.0 * rows / n + total_a * total_b / (n * n)) / (n * n)
}

/// HSIC with explicit bandwidths.
pub fn hsic_with_bandwidths(a: &[f64], b: &[f64], sigma_a: f64, sigma_b: f64) -> Result<f64> {
    check_pair(a, b)?;
    clamp(hsic_from_sums(&gram_sums(a, b, sigma_a, sigma_b)))
}

pub fn hsic_value(a: &[f64], b: &[f64], spec_a: &KernelSpec, spec_b: &KernelSpec) -> Result<f64> {
    check_pair(a, b)?;
    let (sigma_a, const_a) = bandwidth_or_unit(a, spec_a)?;
    let (sigma_b, const_b) = bandwidth_or_unit(b, spec_b)?;
    if const_a || const_b {
        return Ok(0.0);
    }
    clamp(hsic_from_sums(&gram_sums(a, b, sigma_a, sigma_b)))
}

pub fn sensitivity(
    a: &[f64],
    b: &[f64],
    spec_a: &KernelSpec,
    spec_b: &KernelSpec,
) -> Result<DependenceReport> {
    check_pair(a, b)?;
    let (sigma_a, const_a) = bandwidth_or_unit(a, spec_a)?;
    let (sigma_b, const_b) = bandwidth_or_unit(b, spec_b)?;
    let n = a.len();
    if const_a || const_b {
        return Ok(report(0.0, vec![0.0; n], vec![0.0; n], sigma_a, sigma_b));
    }
    sensitivity_with_bandwidths(a, b, sigma_a, sigma_b)
}

/// Sensitivity report with explicit bandwidths, held fixed in the derivative.
pub fn sensitivity_with_bandwidths(
    a: &[f64],
    b: &[f64],
    sigma_a: f64,
    sigma_b: f64,
) -> Result<DependenceReport> {
    check_pair(a, b)?;
    let n = a.len();
    let nf = n as f64;
    let sums = gram_sums(a, b, sigma_a, sigma_b);
    let hsic = clamp(hsic_from_sums(&sums))?;
    let grand_a = sums.row_a.iter().sum::<f64>() / (nf * nf);
    let grand_b = sums.row_b.iter().sum::<f64>() / (nf * nf);
    let mean_a: Vec<f64> = sums.row_a.iter().map(|r| r / nf).collect();
    let mean_b: Vec<f64> = sums.row_b.iter().map(|r| r / nf).collect();

    // Diagonal terms vanish: (a_i − a_i) = 0.
    let mut s_a = vec![0.0; n];
    let mut s_b = vec![0.0; n];
    for j in 0..n {
        for i in 0..j {
            let ka = rbf(a[i] - a[j], sigma_a);
            let kb = rbf(b[i] - b[j], sigma_b);
            // entries of H·K_b·H and H·K_a·H
            let cb = kb - mean_b[i] - mean_b[j] + grand_b;
            let ca = ka - mean_a[i] - mean_a[j] + grand_a;
            let ta = cb * ka * (a[i] - a[j]);
            let tb = ca * kb * (b[i] - b[j]);
            s_a[i] += ta;
            s_a[j] -= ta;
            s_b[i] += tb;
            s_b[j] -= tb;
        }
    }
    let pref_a = -2.0 / (sigma_a * sigma_a * nf * nf);
    let pref_b = -2.0 / (sigma_b * sigma_b * nf * nf);
    s_a.iter_mut().for_each(|v| *v *= pref_a);
    s_b.iter_mut().for_each(|v| *v *= pref_b);
    Ok(report(hsic, s_a, s_b, sigma_a, sigma_b))
}

fn report(hsic: f64, s_a: Series, s_b: Series, sigma_a: f64, sigma_b: f64) -> DependenceReport {
    let n = s_a.len() as f64;
    let agg_a = s_a.iter().map(|v| v * v).sum::<f64>() / n;
    let agg_b = s_b.iter().map(|v| v * v).sum::<f64>() / n;
    let pointwise = s_a.iter().zip(&s_b).map(|(x, y)| x.hypot(*y)).collect();
    DependenceReport {
        hsic,
        s_a,
        s_b,
        agg_a,
        agg_b,
        pointwise,
        sigma_a,
        sigma_b,
    }
}

/// Random Fourier features for the RBF kernel of bandwidth `sigma`:
/// row `i` is `sqrt(2/D)·cos(w_k·a_i + u_k)`, `w_k ~ N(0, 1/σ²)`,
/// `u_k ~ U[0, 2π)`.
pub fn rff_features(a: &[f64], sigma: f64, cfg: &RffConfig) -> Result<DMatrix<f64>> {
    let freqs = frequencies(a, sigma, cfg)?;
    let scale = (2.0 / freqs.len() as f64).sqrt();
    Ok(DMatrix::from_fn(a.len(), freqs.len(), |i, k| {
        let (w, u) = freqs[k];
        scale * (w * a[i] + u).cos()
    }))
}

fn frequencies(a: &[f64], sigma: f64, cfg: &RffConfig) -> Result<Vec<(f64, f64)>> {
    if cfg.num_features == 0 {
        return Err(Error::InvalidParameter(
            "number of Fourier features must be >= 1".into(),
        ));
    }
    if a.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive and finite, got {sigma}"
        )));
    }
    ensure_finite(a)?;
    let mut rng = seed::rng(cfg.seed);
    let normal = Normal::new(0.0, 1.0 / sigma).expect("positive std");
    let phase = Uniform::new(0.0, std::f64::consts::TAU).expect("valid range");
    Ok((0..cfg.num_features)
        .map(|_| (normal.sample(&mut rng), phase.sample(&mut rng)))
        .collect())
}

/// `‖Z_aᵀ·H·Z_b‖²_F / n²`. Costs `O(n·D²)` and never forms an `n × n` matrix.
pub fn rff_hsic(
    a: &[f64],
    b: &[f64],
    spec_a: &KernelSpec,
    spec_b: &KernelSpec,
    cfg: &RffConfig,
) -> Result<f64> {
    check_pair(a, b)?;
    if cfg.num_features == 0 {
        return Err(Error::InvalidParameter(
            "number of Fourier features must be >= 1".into(),
        ));
    }
    let (sigma_a, const_a) = bandwidth_or_unit(a, spec_a)?;
    let (sigma_b, const_b) = bandwidth_or_unit(b, spec_b)?;
    if const_a || const_b {
        return Ok(0.0);
    }
    let cfg_a = RffConfig {
        seed: Context::new("rff-a").derive(cfg.seed),
        ..*cfg
    };
    let cfg_b = RffConfig {
        seed: Context::new("rff-b").derive(cfg.seed),
        ..*cfg
    };
    let n = a.len();
    let d = cfg.num_features;
    let scale = (2.0 / d as f64).sqrt();
    let fa = frequencies(a, sigma_a, &cfg_a)?;
    let fb = frequencies(b, sigma_b, &cfg_b)?;
    // Samples are streamed in blocks: Z_aᵀ·H·Z_b = Z_aᵀ·Z_b − (Z_aᵀ1)(1ᵀZ_b)/n,
    // so only D×D and D×block storage is live at any time.
    let block = RFF_BLOCK.min(n);
    let mut za_t = DMatrix::zeros(d, block);
    let mut zb = DMatrix::zeros(block, d);
    let mut cross = DMatrix::zeros(d, d);
    let mut sum_a = DVector::zeros(d);
    let mut sum_b = DVector::zeros(d);
    for first in (0..n).step_by(block) {
        let m = block.min(n - first);
        for (mut col, &v) in za_t.column_iter_mut().zip(&a[first..first + m]) {
            for (z, &(w, u)) in col.iter_mut().zip(&fa) {
                *z = scale * (w * v + u).cos();
            }
            sum_a += col;
        }
        for (k, (mut col, &(w, u))) in zb.column_iter_mut().zip(&fb).enumerate() {
            let mut total = 0.0;
            for (z, &v) in col.iter_mut().zip(&b[first..first + m]) {
                *z = scale * (w * v + u).cos();
                total += *z;
            }
            sum_b[k] += total;
        }
        cross.gemm(1.0, &za_t.columns(0, m), &zb.rows(0, m), 1.0);
    }
    cross.ger(-1.0 / n as f64, &sum_a, &sum_b, 1.0);
    Ok(cross.norm_squared() / (n * n) as f64)
}

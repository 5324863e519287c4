//! RBF Gram matrices, centering and bandwidth selection.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{ensure_finite, Error, Result};

/// Kernel family. Only the Gaussian RBF is supported: the HSIC sensitivity
/// derivatives are specific to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// Use the given `sigma` verbatim.
    Fixed(f64),
    /// Median of all pairwise absolute differences.
    #[default]
    MedianHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: BandwidthRule,
}

impl KernelSpec {
    pub fn fixed(sigma: f64) -> Self {
        Self {
            family: KernelFamily::Rbf,
            bandwidth: BandwidthRule::Fixed(sigma),
        }
    }

    pub fn median() -> Self {
        Self::default()
    }
}

/// Dense RBF Gram matrix. Symmetric with a unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub entries: DMatrix<f64>,
    pub sigma: f64,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

#[inline]
pub fn rbf(diff: f64, sigma: f64) -> f64 {
    (-(diff * diff) / (2.0 * sigma * sigma)).exp()
}

pub fn resolve_bandwidth(x: &[f64], spec: &KernelSpec) -> Result<f64> {
    match spec.bandwidth {
        BandwidthRule::Fixed(sigma) => {
            if sigma > 0.0 && sigma.is_finite() {
                Ok(sigma)
            } else {
                Err(Error::InvalidParameter(format!(
                    "bandwidth must be positive and finite, got {sigma}"
                )))
            }
        }
        BandwidthRule::MedianHeuristic => {
            if x.len() < 2 {
                return Err(Error::TooFewSamples {
                    needed: 2,
                    got: x.len(),
                });
            }
            ensure_finite(x)?;
            let sigma = median_pairwise_distance(x);
            if sigma > 0.0 {
                Ok(sigma)
            } else if x.iter().all(|&v| v == x[0]) {
                Err(Error::DegenerateBandwidth)
            } else {
                // More than half the pairs coincide; fall back to the
                // smallest positive distance so the kernel stays usable.
                let mut sorted = x.to_vec();
                sorted.sort_by(f64::total_cmp);
                Ok(sorted
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .filter(|&d| d > 0.0)
                    .fold(f64::INFINITY, f64::min))
            }
        }
    }
}

/// Median of the `n(n−1)/2` values `|x_i − x_j|`, `i < j`, with midpoint
/// averaging for an even count.
///
/// Runs in `O(n log n)` memory-light time: the sorted sample lets us count
/// pairs below a threshold with two pointers, so the order statistic is
/// located by bisection and only the pairs in the final bracket are
/// materialized.
pub fn median_pairwise_distance(x: &[f64]) -> f64 {
    let n = x.len();
    assert!(n >= 2, "need at least two values");
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = n * (n - 1) / 2;
    if m % 2 == 1 {
        kth_pairwise_distance(&sorted, m / 2)
    } else {
        let lo = kth_pairwise_distance(&sorted, m / 2 - 1);
        let hi = kth_pairwise_distance(&sorted, m / 2);
        0.5 * (lo + hi)
    }
}

fn count_pairs_within(sorted: &[f64], d: f64) -> usize {
    let mut count = 0;
    let mut i = 0;
    for j in 0..sorted.len() {
        while sorted[j] - sorted[i] > d {
            i += 1;
        }
        count += j - i;
    }
    count
}

/// k-th smallest (0-based) pairwise difference of an ascending slice.
fn kth_pairwise_distance(sorted: &[f64], k: usize) -> f64 {
    let n = sorted.len();
    let bracket_limit = 4 * n + 64;
    let zeros = count_pairs_within(sorted, 0.0);
    if zeros > k {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = sorted[n - 1] - sorted[0];
    let mut count_lo = zeros;
    let mut count_hi = n * (n - 1) / 2;
    // invariant: count_lo <= k < count_hi
    while count_hi - count_lo > bracket_limit {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // lo and hi are adjacent floats: every pair in the bracket equals hi
            return hi;
        }
        let c = count_pairs_within(sorted, mid);
        if c > k {
            hi = mid;
            count_hi = c;
        } else {
            lo = mid;
            count_lo = c;
        }
    }
    let mut bracket = Vec::with_capacity(count_hi - count_lo);
    let (mut a, mut b) = (0, 0);
    for j in 0..n {
        // pairs (i, j) with lo < sorted[j] - sorted[i] <= hi form i in [a, b)
        while sorted[j] - sorted[a] > hi {
            a += 1;
        }
        while b < j && sorted[j] - sorted[b] > lo {
            b += 1;
        }
        bracket.extend((a..b).map(|i| sorted[j] - sorted[i]));
    }
    let idx = k - count_lo;
    *bracket.select_nth_unstable_by(idx, f64::total_cmp).1
}

pub fn rbf_gram(x: &[f64], sigma: f64) -> Result<GramMatrix> {
    if x.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive and finite, got {sigma}"
        )));
    }
    ensure_finite(x)?;
    let n = x.len();
    let mut entries = DMatrix::from_element(n, n, 1.0);
    for j in 0..n {
        for i in 0..j {
            let k = rbf(x[i] - x[j], sigma);
            entries[(i, j)] = k;
            entries[(j, i)] = k;
        }
    }
    Ok(GramMatrix { entries, sigma })
}

/// `H·K·H` with `H = I − (1/n)11ᵀ`, evaluated through row and column means.
pub fn center_gram(k: &GramMatrix) -> DMatrix<f64> {
    center(&k.entries)
}

pub(crate) fn center(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| k.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - col_means[j] + grand)
}

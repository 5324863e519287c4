//! Seeded synthetic generators: independent uniforms, the rotated X-OR
//! gate and ground-truth additive noise models.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::anm::MIN_SAMPLES;
use crate::data::Problem;
use crate::seed;
use crate::{Direction, Error, PairedSample, Result};

pub const DEFAULT_XOR_JITTER: f64 = 0.3;

/// Standard deviation of each Gaussian-mixture component.
const COMPONENT_STD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CauseDist {
    Uniform01,
    /// `k` equally weighted components with standard deviation 0.5 and
    /// means `spread·(j − (k−1)/2)`.
    GaussianMixture {
        k: usize,
        spread: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// `tanh(a·x)`
    Tanh(f64),
    /// `a·x³`
    Cubic(f64),
    /// `Σ_{m=1..k} sin(m·x)/m`
    SineSum(usize),
}

impl Mechanism {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Mechanism::Tanh(a) => (a * x).tanh(),
            Mechanism::Cubic(a) => a * x * x * x,
            Mechanism::SineSum(k) => (1..=k).map(|m| (m as f64 * x).sin() / m as f64).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDist {
    /// Uniform on `[−scale, scale]`.
    Uniform(f64),
    /// Laplace with scale parameter `scale`.
    Laplace(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnmSpec {
    pub n: usize,
    pub cause: CauseDist,
    pub mechanism: Mechanism,
    pub noise: NoiseDist,
    pub seed: u64,
}

impl Default for AnmSpec {
    fn default() -> Self {
        Self {
            n: 300,
            cause: CauseDist::GaussianMixture { k: 3, spread: 1.0 },
            mechanism: Mechanism::Tanh(2.0),
            noise: NoiseDist::Uniform(0.2),
            seed: 0,
        }
    }
}

impl AnmSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n < MIN_SAMPLES {
            return bad(format!("n must be at least {MIN_SAMPLES}, got {}", self.n));
        }
        match self.cause {
            CauseDist::GaussianMixture { k, spread }
                if k == 0 || !(spread >= 0.0 && spread.is_finite()) =>
            {
                return bad(format!("invalid mixture (k = {k}, spread = {spread})"));
            }
            _ => {}
        }
        match self.mechanism {
            Mechanism::Tanh(a) | Mechanism::Cubic(a) if a == 0.0 || !a.is_finite() => {
                return bad(format!("mechanism coefficient must be non-zero, got {a}"));
            }
            Mechanism::SineSum(0) => return bad("sine_sum needs at least one term".into()),
            _ => {}
        }
        let (NoiseDist::Uniform(s) | NoiseDist::Laplace(s)) = self.noise;
        if !(s > 0.0 && s.is_finite()) {
            return bad(format!("noise scale must be positive, got {s}"));
        }
        Ok(())
    }
}

fn sample_cause(dist: &CauseDist, rng: &mut ChaCha8Rng) -> f64 {
    match *dist {
        CauseDist::Uniform01 => rng.random::<f64>(),
        CauseDist::GaussianMixture { k, spread } => {
            let j = rng.random_range(0..k);
            let center = spread * (j as f64 - (k as f64 - 1.0) / 2.0);
            let z: f64 = StandardNormal.sample(rng);
            center + COMPONENT_STD * z
        }
    }
}

fn sample_noise(dist: &NoiseDist, rng: &mut ChaCha8Rng) -> f64 {
    match *dist {
        NoiseDist::Uniform(s) => rng.random_range(-s..=s),
        NoiseDist::Laplace(b) => {
            // inverse CDF on u ∈ (−½, ½)
            let u: f64 = rng.random::<f64>() - 0.5;
            -b * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
        }
    }
}

/// `x, y ~ U(0, 1)` independently.
pub fn gen_independent_uniform(n: usize, seed: u64) -> Result<PairedSample> {
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut rng = seed::rng(seed);
    let x = (0..n).map(|_| rng.random::<f64>()).collect();
    let y = (0..n).map(|_| rng.random::<f64>()).collect();
    PairedSample::new(x, y)
}

pub fn gen_rotated_xor(n: usize, theta: f64, seed: u64) -> Result<PairedSample> {
    gen_rotated_xor_with_jitter(n, theta, DEFAULT_XOR_JITTER, seed)
}

/// Four-blob X-OR gate: `u, w` uniform on `{−1, +1}`, `v = u·w`, Gaussian
/// jitter on both coordinates, then rotation by `theta ∈ [0, π/4]`.
pub fn gen_rotated_xor_with_jitter(
    n: usize,
    theta: f64,
    jitter: f64,
    seed: u64,
) -> Result<PairedSample> {
    if n < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: n });
    }
    if !(0.0..=FRAC_PI_4 + 1e-12).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in [0, π/4], got {theta}"
        )));
    }
    let jitter_dist = Normal::new(0.0, jitter).map_err(|_| {
        Error::InvalidParameter(format!("jitter must be non-negative, got {jitter}"))
    })?;
    let mut rng = seed::rng(seed);
    let sign = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
    let (sin, cos) = theta.sin_cos();
    let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let u0 = sign(&mut rng);
        let w = sign(&mut rng);
        let u = u0 + jitter_dist.sample(&mut rng);
        let v = u0 * w + jitter_dist.sample(&mut rng);
        x.push(u * cos - v * sin);
        y.push(u * sin + v * cos);
    }
    PairedSample::new(x, y)
}

/// `y = f(x) + noise`, presented swapped (truth backward) for half the seeds.
pub fn gen_anm(spec: &AnmSpec) -> Result<Problem> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let swap = rng.random::<bool>();
    let x: Vec<f64> = (0..spec.n)
        .map(|_| sample_cause(&spec.cause, &mut rng))
        .collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&xi| spec.mechanism.apply(xi) + sample_noise(&spec.noise, &mut rng))
        .collect();
    let pair = PairedSample::new(x, y)?;
    let (pair, truth) = if swap {
        (pair.swapped(), Direction::Backward)
    } else {
        (pair, Direction::Forward)
    };
    Problem::new(format!("anm-{:016x}", spec.seed), pair, truth, 1.0)
}

/// `count` problems with seeds derived from `base_seed`.
pub fn gen_anm_corpus(template: &AnmSpec, count: usize, base_seed: u64) -> Result<Vec<Problem>> {
    (0..count as u64)
        .map(|k| {
            gen_anm(&AnmSpec {
                seed: seed::Context::new("anm-corpus")
                    .with_u64(k)
                    .derive(base_seed),
                ..*template
            })
        })
        .collect()
}

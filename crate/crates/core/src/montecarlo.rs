//! Deterministic chunked Monte Carlo over the process samplers.
//!
//! Replications are split into fixed-size chunks; chunk c draws from the
//! substream `seed.child(c)` and folds into its own accumulator, and chunk
//! accumulators merge in index order. Together with exact accumulation this
//! makes every estimate a pure function of (seed, N, chunk_size), whatever
//! the worker count. Sweeps give each grid point its own substream keyed by
//! the bit pattern of rho, so permuting or pruning the grid never changes
//! the row computed for a given rho.

mod exact_sum;

pub use exact_sum::ExactSum;

use crate::limit_processes::{
    sample_zeta_xi_brownian, sample_zeta_xi_infinity, BrownianGridConfig, LimitError,
};
use crate::poisson_llr::{sample_zeta_xi, RhoParam, SimError, TruncationPolicy};
use crate::rng_streams::{derive_stream, SeedSpec, Stream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error("need at least 100 replications, got {0}")]
    TooFewReplications(u64),
    #[error("chunk size must be at least 1")]
    InvalidChunkSize,
    #[error("rho grid entries must be finite and positive")]
    InvalidGrid,
    #[error("every replication was truncated")]
    AllTruncated,
    #[error("{truncated} of {n} replications truncated, over the 1-in-10^4 budget")]
    RowRejected { truncated: u64, n: u64 },
    #[error("samples must be non-empty and sorted ascending")]
    InvalidSamples,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Limit(#[from] LimitError),
}

/// Power sums of one batch of (zeta, xi) draws, kept exactly.
///
/// Merging preserves bit-for-bit equality with the unsplit accumulation, so
/// any chunking of the same draws reads out identical statistics.
#[derive(Clone, Default)]
pub struct MomentAccumulator {
    n: u64,
    z2: ExactSum,
    z4: ExactSum,
    x2: ExactSum,
    x4: ExactSum,
    z2x2: ExactSum,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn push(&mut self, zeta: f64, xi: f64) {
        let z2 = zeta * zeta;
        let x2 = xi * xi;
        self.z2.add(z2);
        self.z4.add(z2 * z2);
        self.x2.add(x2);
        self.x4.add(x2 * x2);
        self.z2x2.add(z2 * x2);
        self.n += 1;
    }

    pub fn merge(&mut self, other: MomentAccumulator) {
        self.n += other.n;
        self.z2.merge(other.z2);
        self.z4.merge(other.z4);
        self.x2.merge(other.x2);
        self.x4.merge(other.x4);
        self.z2x2.merge(other.z2x2);
    }

    pub fn mean_zeta_sq(&self) -> f64 {
        self.z2.value() / self.n as f64
    }

    pub fn mean_xi_sq(&self) -> f64 {
        self.x2.value() / self.n as f64
    }

    /// Sample variance of the zeta^2 draws.
    pub fn var_zeta_sq(&self) -> f64 {
        central_second(self.z4.value(), self.z2.value(), self.n)
    }

    /// Sample variance of the xi^2 draws.
    pub fn var_xi_sq(&self) -> f64 {
        central_second(self.x4.value(), self.x2.value(), self.n)
    }

    /// Sample covariance of (zeta^2, xi^2).
    pub fn cov_sq(&self) -> f64 {
        let n = self.n as f64;
        (self.z2x2.value() - self.z2.value() * self.x2.value() / n) / (n - 1.0)
    }

    /// Assembles an estimate row. The scaled columns are filled only for
    /// finite positive rho; the efficiency ratio is the quotient of the two
    /// moment estimates with a delta-method standard error.
    pub fn to_row(&self, rho: f64, n_requested: u64, truncated: u64, seed: u64) -> EstimateRow {
        let n = self.n as f64;
        let b = self.mean_zeta_sq();
        let m = self.mean_xi_sq();
        let e = b / m;
        let var_b = self.var_zeta_sq();
        let var_m = self.var_xi_sq();
        let cov = self.cov_sq();
        let se_b = (var_b / n).max(0.0).sqrt();
        let se_m = (var_m / n).max(0.0).sqrt();
        let var_e = (var_b / (m * m) + b * b * var_m / (m * m * m * m)
            - 2.0 * b * cov / (m * m * m))
            / n;
        let scaled = rho.is_finite() && rho > 0.0;
        EstimateRow {
            rho,
            n: n_requested,
            b_hat: b,
            se_b,
            m_hat: m,
            se_m,
            e_hat: e,
            se_e: var_e.max(0.0).sqrt(),
            rho2_b: scaled.then(|| rho * rho * b),
            rho2_m: scaled.then(|| rho * rho * m),
            truncated,
            seed,
        }
    }
}

fn central_second(sum_sq: f64, sum: f64, n: u64) -> f64 {
    let nf = n as f64;
    ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0)
}

/// One row of moment estimates at a grid point. `rho` is 0 for the Brownian
/// limit row and infinity for the degenerate limit row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub rho: f64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "B")]
    pub b_hat: f64,
    #[serde(rename = "se_B")]
    pub se_b: f64,
    #[serde(rename = "M")]
    pub m_hat: f64,
    #[serde(rename = "se_M")]
    pub se_m: f64,
    #[serde(rename = "E")]
    pub e_hat: f64,
    #[serde(rename = "se_E")]
    pub se_e: f64,
    #[serde(rename = "rho2B")]
    pub rho2_b: Option<f64>,
    #[serde(rename = "rho2M")]
    pub rho2_m: Option<f64>,
    pub truncated: u64,
    pub seed: u64,
}

/// Which process family a run draws from.
#[derive(Debug, Clone)]
pub enum Model {
    Poisson {
        rho: RhoParam,
        policy: TruncationPolicy,
    },
    Brownian(BrownianGridConfig),
    Infinity,
}

impl Model {
    /// The rho column value identifying this model in output rows.
    pub fn rho_code(&self) -> f64 {
        match self {
            Model::Poisson { rho, .. } => rho.rho(),
            Model::Brownian(_) => 0.0,
            Model::Infinity => f64::INFINITY,
        }
    }

    fn validate(&self) -> Result<(), McError> {
        match self {
            Model::Poisson { policy, .. } => policy.validate()?,
            Model::Brownian(cfg) => cfg.validate()?,
            Model::Infinity => {}
        }
        Ok(())
    }
}

fn run_chunk(
    model: &Model,
    count: u64,
    stream: &mut Stream,
) -> Result<(MomentAccumulator, u64), McError> {
    let mut acc = MomentAccumulator::new();
    let mut truncated = 0u64;
    for _ in 0..count {
        match model {
            Model::Poisson { rho, policy } => {
                let s = sample_zeta_xi(rho, stream, policy)?;
                if s.within_margin(policy.log_margin) {
                    acc.push(s.zeta, s.xi);
                } else {
                    truncated += 1;
                }
            }
            Model::Brownian(cfg) => match sample_zeta_xi_brownian(cfg, stream) {
                Ok(s) => acc.push(s.zeta, s.xi),
                Err(LimitError::WindowCap { .. }) => truncated += 1,
                Err(e) => return Err(e.into()),
            },
            Model::Infinity => {
                let s = sample_zeta_xi_infinity(stream);
                acc.push(s.zeta, s.xi);
            }
        }
    }
    Ok((acc, truncated))
}

/// Runs `n` replications of the model in chunks of `chunk_size`, one
/// substream per chunk, merging chunk accumulators in index order.
///
/// Truncated replications are excluded from the moments and counted; a row
/// with more than one truncation per 10^4 replications is an error, as is a
/// row with no usable replications at all.
pub fn run_replications(
    model: &Model,
    n: u64,
    seed: &SeedSpec,
    chunk_size: u64,
) -> Result<EstimateRow, McError> {
    if n < 100 {
        return Err(McError::TooFewReplications(n));
    }
    if chunk_size == 0 {
        return Err(McError::InvalidChunkSize);
    }
    model.validate()?;
    let chunks = n.div_ceil(chunk_size);
    let results: Vec<Result<(MomentAccumulator, u64), McError>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk_size;
            let hi = n.min(lo + chunk_size);
            let mut stream = derive_stream(seed, c);
            run_chunk(model, hi - lo, &mut stream)
        })
        .collect();

    let mut acc = MomentAccumulator::new();
    let mut truncated = 0u64;
    for r in results {
        let (a, t) = r?;
        acc.merge(a);
        truncated += t;
    }
    if acc.n() == 0 {
        return Err(McError::AllTruncated);
    }
    if truncated * 10_000 > n {
        return Err(McError::RowRejected { truncated, n });
    }
    Ok(acc.to_row(model.rho_code(), n, truncated, seed.root_seed))
}

/// Runs one row per grid value, each from the substream keyed by the bit
/// pattern of its rho, then optionally appends the two limit rows (keyed by
/// the bit patterns of 0 and infinity).
pub fn sweep(
    grid: &[f64],
    n: u64,
    seed: &SeedSpec,
    chunk_size: u64,
    policy: &TruncationPolicy,
    limits: Option<&BrownianGridConfig>,
) -> Result<Vec<EstimateRow>, McError> {
    if grid.is_empty() || grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(McError::InvalidGrid);
    }
    let mut rows = Vec::with_capacity(grid.len() + 2);
    for &r in grid {
        let model = Model::Poisson {
            rho: RhoParam::new(r)?,
            policy: *policy,
        };
        rows.push(run_replications(&model, n, &seed.child(r.to_bits()), chunk_size)?);
    }
    if let Some(cfg) = limits {
        rows.push(run_replications(
            &Model::Brownian(*cfg),
            n,
            &seed.child(0.0f64.to_bits()),
            chunk_size,
        )?);
        rows.push(run_replications(
            &Model::Infinity,
            n,
            &seed.child(f64::INFINITY.to_bits()),
            chunk_size,
        )?);
    }
    Ok(rows)
}

/// Kolmogorov-Smirnov statistic of sorted samples against a reference CDF:
/// max over points of the larger one-sided gap between the empirical step
/// function and F.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<f64, McError> {
    if sorted.is_empty() || sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(McError::InvalidSamples);
    }
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Overall supremum of the subcritical ladder walk: running maximum of
/// i - t_i over a unit-jump process with event rate rho/(e^rho - 1) < 1,
/// stopped once the walk is 40/rho below its maximum. Has an atom at 0.
pub fn sample_eta(rho: &RhoParam, stream: &mut Stream) -> f64 {
    let lambda = rho.rho() * rho.lambda_plus();
    let horizon = 40.0 / rho.rho();
    let mut t = 0.0f64;
    let mut sup = 0.0f64;
    let mut i = 0u64;
    loop {
        t += stream
            .exponential(lambda)
            .expect("positive finite rate by construction");
        i += 1;
        let v = i as f64 - t;
        if v > sup {
            sup = v;
        }
        if v <= sup - horizon {
            return sup;
        }
    }
}

/// Overall supremum of the supercritical ladder walk: running maximum of the
/// pre-jump values t_i - (i - 1) at rate rho/(1 - e^-rho) > 1, stopped once
/// the post-jump value is 40/rho below the maximum. Exponentially
/// distributed with rate rho.
pub fn sample_eta_prime(rho: &RhoParam, stream: &mut Stream) -> f64 {
    let lambda = rho.rho() * rho.lambda_minus();
    let horizon = 40.0 / rho.rho();
    let mut t = 0.0f64;
    let mut sup = 0.0f64;
    let mut i = 0u64;
    loop {
        t += stream
            .exponential(lambda)
            .expect("positive finite rate by construction");
        i += 1;
        let pre = t - (i - 1) as f64;
        if pre > sup {
            sup = pre;
        }
        if t - i as f64 <= sup - horizon {
            return sup;
        }
    }
}

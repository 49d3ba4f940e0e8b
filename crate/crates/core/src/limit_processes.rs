//! Samplers for the two boundary regimes of the process family.
//!
//! Small jumps: the log process converges to a two-sided Brownian motion
//! with drift, ln Z(x) = W(x) - |x|/2, sampled on a uniform grid over a
//! window grown until both edges sit log_margin below the running maximum.
//!
//! Large jumps: the process degenerates to Z(u) = e^-u 1{u > eta} with a
//! single exponential-tailed corner at eta <= 0, for which the functionals
//! are closed-form: zeta = eta + 1 and xi = eta.

use crate::rng_streams::Stream;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LimitError {
    #[error("invalid grid config: {0}")]
    InvalidConfig(String),
    #[error("window grew past {points} grid points without dropping below the margin")]
    WindowCap { points: usize },
}

/// Grid discretization for the Brownian-regime sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianGridConfig {
    /// Grid step; bias in the second moments is O(h).
    pub h: f64,
    /// Initial window half-width.
    pub a0: f64,
    /// Multiplier applied to the half-width on each extension.
    pub growth_factor: f64,
    /// Required drop of both boundary values below the running maximum.
    pub log_margin: f64,
}

impl Default for BrownianGridConfig {
    fn default() -> Self {
        BrownianGridConfig {
            h: 0.005,
            a0: 50.0,
            growth_factor: 2.0,
            log_margin: 40.0,
        }
    }
}

impl BrownianGridConfig {
    pub fn validate(&self) -> Result<(), LimitError> {
        if !(self.h.is_finite() && self.h > 0.0 && self.h <= 0.1) {
            return Err(LimitError::InvalidConfig(format!(
                "h must be in (0, 0.1], got {}",
                self.h
            )));
        }
        if !(self.a0.is_finite() && self.a0 >= 10.0) {
            return Err(LimitError::InvalidConfig(format!(
                "a0 must be finite and >= 10, got {}",
                self.a0
            )));
        }
        if !(self.growth_factor.is_finite() && self.growth_factor > 1.0) {
            return Err(LimitError::InvalidConfig(format!(
                "growth_factor must be > 1, got {}",
                self.growth_factor
            )));
        }
        if !(self.log_margin.is_finite() && self.log_margin >= 10.0) {
            return Err(LimitError::InvalidConfig(format!(
                "log_margin must be finite and >= 10, got {}",
                self.log_margin
            )));
        }
        Ok(())
    }
}

/// One draw of the limit-regime functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSample {
    pub zeta: f64,
    pub xi: f64,
    /// Half-width of the window that was actually integrated.
    pub window_used: f64,
}

/// Hard cap on total grid points per draw.
pub const MAX_GRID_POINTS: usize = 1_000_000;

/// Samples zeta and xi for ln Z(x) = W(x) - |x|/2 on a grid of step `h`.
///
/// Each side's path is its own cumulative sum of sqrt(h)-scaled normals; on
/// extension the positive side is drawn first, then the negative side, so a
/// draw is a pure function of the stream position. The mean location uses
/// the rectangle rule (the common factor h cancels in the ratio); the argmax
/// scans 0, +h, -h, +2h, ... keeping strict improvements, so ties resolve to
/// the smaller |x| and to the positive side.
pub fn sample_zeta_xi_brownian(
    cfg: &BrownianGridConfig,
    stream: &mut Stream,
) -> Result<LimitSample, LimitError> {
    cfg.validate()?;
    let sqh = cfg.h.sqrt();
    let half_h = 0.5 * cfg.h;
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    let (mut wp, mut wn) = (0.0f64, 0.0f64);
    // ln Z(0) = 0 participates in the maximum from the start.
    let mut gmax = 0.0f64;
    let mut target = ((cfg.a0 / cfg.h).round() as usize).max(1);
    loop {
        if 2 * target + 1 > MAX_GRID_POINTS {
            return Err(LimitError::WindowCap {
                points: 2 * target + 1,
            });
        }
        while pos.len() < target {
            wp += sqh * stream.standard_normal();
            let lz = wp - half_h * (pos.len() + 1) as f64;
            pos.push(lz);
            if lz > gmax {
                gmax = lz;
            }
        }
        while neg.len() < target {
            wn += sqh * stream.standard_normal();
            let lz = wn - half_h * (neg.len() + 1) as f64;
            neg.push(lz);
            if lz > gmax {
                gmax = lz;
            }
        }
        if pos[target - 1] <= gmax - cfg.log_margin && neg[target - 1] <= gmax - cfg.log_margin {
            break;
        }
        target = ((target as f64 * cfg.growth_factor).ceil() as usize).max(target + 1);
    }

    let mut den = (-gmax).exp();
    let mut num = 0.0f64;
    for (k, &lz) in pos.iter().enumerate() {
        let x = (k + 1) as f64 * cfg.h;
        let e = (lz - gmax).exp();
        den += e;
        num += x * e;
    }
    for (k, &lz) in neg.iter().enumerate() {
        let x = (k + 1) as f64 * cfg.h;
        let e = (lz - gmax).exp();
        den += e;
        num -= x * e;
    }

    let mut best_val = 0.0f64;
    let mut best_x = 0.0f64;
    for k in 0..target {
        if pos[k] > best_val {
            best_val = pos[k];
            best_x = (k + 1) as f64 * cfg.h;
        }
        if neg[k] > best_val {
            best_val = neg[k];
            best_x = -((k + 1) as f64 * cfg.h);
        }
    }

    Ok(LimitSample {
        zeta: num / den,
        xi: best_x,
        window_used: target as f64 * cfg.h,
    })
}

/// Functionals of Z(u) = e^-u 1{u > eta} for a given corner eta = ln u with
/// u in (0, 1]. Both are exact: zeta = eta + 1, xi = eta.
pub fn infinity_sample_from_uniform(u: f64) -> LimitSample {
    debug_assert!(u > 0.0 && u <= 1.0, "corner variate must be in (0, 1]");
    let eta = u.ln();
    LimitSample {
        zeta: eta + 1.0,
        xi: eta,
        window_used: -eta,
    }
}

/// Draws the degenerate-regime functionals. Consumes one uniform, remapped
/// onto (0, 1] so the corner ln u is always finite.
pub fn sample_zeta_xi_infinity(stream: &mut Stream) -> LimitSample {
    infinity_sample_from_uniform(1.0 - stream.uniform())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_streams::SeedSpec;

    fn stream(tag: u64) -> Stream {
        Stream::from_spec(&SeedSpec::new(9100).child(tag))
    }

    #[test]
    fn config_validation() {
        assert!(BrownianGridConfig::default().validate().is_ok());
        for bad in [
            BrownianGridConfig {
                h: 0.0,
                ..Default::default()
            },
            BrownianGridConfig {
                h: 0.2,
                ..Default::default()
            },
            BrownianGridConfig {
                a0: 5.0,
                ..Default::default()
            },
            BrownianGridConfig {
                growth_factor: 1.0,
                ..Default::default()
            },
            BrownianGridConfig {
                log_margin: 2.0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn infinity_kernel_is_exact() {
        let forced = infinity_sample_from_uniform((-2.0f64).exp());
        assert!((forced.xi + 2.0).abs() < 1e-15);
        assert!((forced.zeta + 1.0).abs() < 1e-15);
        let unit = infinity_sample_from_uniform(1.0);
        assert_eq!(unit.xi, 0.0);
        assert_eq!(unit.zeta, 1.0);
    }

    #[test]
    fn infinity_gap_is_always_one() {
        let mut s = stream(1);
        for _ in 0..10_000 {
            let sample = sample_zeta_xi_infinity(&mut s);
            assert_eq!(sample.zeta - sample.xi, 1.0);
            assert!(sample.xi <= 0.0);
        }
    }

    #[test]
    fn infinity_corner_matches_exponential_law() {
        // -eta is Exp(1): compare the sample mean and P{-eta > 1} = 1/e.
        let mut s = stream(2);
        let n = 100_000;
        let mut sum = 0.0;
        let mut beyond = 0u64;
        for _ in 0..n {
            let eta = sample_zeta_xi_infinity(&mut s).xi;
            sum += -eta;
            if -eta > 1.0 {
                beyond += 1;
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt());
        let p = beyond as f64 / n as f64;
        let expect = (-1.0f64).exp();
        assert!((p - expect).abs() < 4.0 * (expect * (1.0 - expect) / n as f64).sqrt());
    }

    #[test]
    fn brownian_draw_is_deterministic_and_windowed() {
        let cfg = BrownianGridConfig {
            h: 0.02,
            a0: 10.0,
            ..Default::default()
        };
        let a = sample_zeta_xi_brownian(&cfg, &mut stream(3)).unwrap();
        let b = sample_zeta_xi_brownian(&cfg, &mut stream(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.window_used >= cfg.a0);
        assert!(a.xi.abs() <= a.window_used);
        assert!(a.zeta.abs() <= a.window_used);
    }

    #[test]
    fn brownian_moments_are_in_range() {
        // Coarse grid, modest N: second moments must land near 19.2 and 26.
        let cfg = BrownianGridConfig {
            h: 0.02,
            a0: 20.0,
            ..Default::default()
        };
        let mut s = stream(4);
        let n = 2000;
        let (mut sz2, mut sx2) = (0.0f64, 0.0f64);
        for _ in 0..n {
            let sample = sample_zeta_xi_brownian(&cfg, &mut s).unwrap();
            sz2 += sample.zeta * sample.zeta;
            sx2 += sample.xi * sample.xi;
        }
        let b = sz2 / n as f64;
        let m = sx2 / n as f64;
        assert!((b - 19.23).abs() < 3.5, "B estimate {b}");
        assert!((m - 26.0).abs() < 4.5, "M estimate {m}");
    }

    #[test]
    fn window_cap_is_enforced() {
        let cfg = BrownianGridConfig {
            h: 0.0001,
            a0: 50.0,
            ..Default::default()
        };
        let err = sample_zeta_xi_brownian(&cfg, &mut stream(5));
        assert!(matches!(err, Err(LimitError::WindowCap { .. })));
    }
}

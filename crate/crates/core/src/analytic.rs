//! Closed forms, series, and constants used as exact cross-checks.
//!
//! Everything here is deterministic arithmetic: fractional moments of the
//! marginal process, moments of log increments, the supremum tail of a
//! centered Poisson random walk, the ladder-rate equation, and the limit
//! constants. Small-`rho` evaluation is done through `expm1`/`ln_1p` forms
//! so the formulas stay accurate where the naive expressions cancel.

use crate::poisson_llr::Side;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("rho must be positive and finite, got {0}")]
    InvalidRho(f64),
    #[error("argument must be finite: {0}")]
    InvalidArgument(String),
    #[error("lambda_prime must be finite and > 1, got {0}")]
    InvalidLambdaPrime(f64),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

fn check_rho(rho: f64) -> Result<(), AnalyticError> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(AnalyticError::InvalidRho(rho))
    }
}

fn check_finite(v: f64, name: &str) -> Result<(), AnalyticError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(AnalyticError::InvalidArgument(format!("{name} = {v}")))
    }
}

/// Exact limit moments of the mean-location and argmax functionals.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LimitConstants {
    /// Apery's constant, from the direct series with an integral tail.
    pub zeta3: f64,
    /// Small-rho limit of the scaled second moment of the mean location.
    pub b0: f64,
    /// Small-rho limit of the scaled second moment of the argmax.
    pub m0: f64,
    /// Small-rho limit efficiency b0 / m0.
    pub e0: f64,
    /// Large-rho limit of the second moment of the mean location.
    pub b_inf: f64,
    /// Large-rho limit of the second moment of the argmax.
    pub m_inf: f64,
    /// Large-rho limit efficiency.
    pub e_inf: f64,
}

fn zeta3() -> f64 {
    // Backward direct sum to N, then the Euler-Maclaurin tail for x^-3:
    // sum_{k>=N} k^-3 = 1/(2N^2) + 1/(2N^3) + 1/(4N^4) - 1/(12N^6) + O(N^-8).
    let n = 1000u64;
    let mut s = 0.0;
    for k in (1..n).rev() {
        let kf = k as f64;
        s += 1.0 / (kf * kf * kf);
    }
    let nf = n as f64;
    s + 0.5 / (nf * nf) + 0.5 / (nf * nf * nf) + 0.25 / nf.powi(4) - 1.0 / (12.0 * nf.powi(6))
}

/// The six limit constants (plus the zeta value they derive from).
pub fn limit_constants() -> &'static LimitConstants {
    static CONSTANTS: OnceLock<LimitConstants> = OnceLock::new();
    CONSTANTS.get_or_init(|| {
        let z3 = zeta3();
        let b0 = 16.0 * z3;
        let m0 = 26.0;
        LimitConstants {
            zeta3: z3,
            b0,
            m0,
            e0: b0 / m0,
            b_inf: 1.0,
            m_inf: 2.0,
            e_inf: 0.5,
        }
    })
}

/// Mean of the square-root marginal: exp(-|y| tanh(rho/4) / (2 rho)).
pub fn half_moment(rho: f64, y: f64) -> Result<f64, AnalyticError> {
    check_rho(rho)?;
    check_finite(y, "y")?;
    Ok((-y.abs() * (rho / 4.0).tanh() / (2.0 * rho)).exp())
}

/// Mean of the quarter-power marginal, from the Poisson transform of each
/// branch. Both branches decay like exp(-(3/32)|y|) as rho -> 0.
pub fn quarter_moment(rho: f64, y: f64) -> Result<f64, AnalyticError> {
    check_rho(rho)?;
    check_finite(y, "y")?;
    let c = if y >= 0.0 {
        // (e^{rho/4}-1)/(rho(e^rho-1)) - 1/(4 rho), combined over one
        // denominator so the small-rho cancellation is explicit.
        (4.0 * (rho / 4.0).exp_m1() - rho.exp_m1()) / (4.0 * rho * rho.exp_m1())
    } else {
        // 1/(4 rho) + (e^{-rho/4}-1)/(rho(1-e^{-rho})), same treatment.
        (4.0 * (-rho / 4.0).exp_m1() - (-rho).exp_m1()) / (4.0 * rho * (-(-rho).exp_m1()))
    };
    Ok((y.abs() * c).exp())
}

/// Second moment of the increment of the square-root marginal between two
/// points on the same side of the origin.
pub fn sqrt_increment_second_moment(rho: f64, y1: f64, y2: f64) -> Result<f64, AnalyticError> {
    check_rho(rho)?;
    check_finite(y1, "y1")?;
    check_finite(y2, "y2")?;
    let d = (y1 - y2).abs();
    Ok(-2.0 * (-d * (rho / 4.0).tanh() / (2.0 * rho)).exp_m1())
}

/// Mean and second moment (about zero) of the log marginal increment over
/// a window of width `delta` on the given side of the origin.
pub fn log_increment_moments(rho: f64, delta: f64, side: Side) -> Result<(f64, f64), AnalyticError> {
    check_rho(rho)?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(AnalyticError::InvalidArgument(format!("delta = {delta}")));
    }
    let (beta, gamma, mean) = match side {
        Side::Positive => {
            let em = rho.exp_m1();
            let beta = rho / em;
            let gamma = ((em - rho) / (rho * em)).powi(2);
            let mean = delta * (rho - em) / (rho * em);
            (beta, gamma, mean)
        }
        Side::Negative => {
            let em = -(-rho).exp_m1(); // 1 - e^{-rho}
            let beta = rho / em;
            let gamma = (((-rho).exp_m1() + rho) / (rho * em)).powi(2);
            let mean = delta * (em - rho) / (rho * em);
            (beta, gamma, mean)
        }
    };
    Ok((mean, beta * delta + gamma * delta * delta))
}

/// P{sup of (unit-drift-centered Poisson walk) >= x} for the subcritical
/// side, intensity lambda = rho/(e^rho - 1).
///
/// Evaluated term by term in log space; returns 1 for x <= 0.
pub fn eta_tail(rho: f64, x: f64) -> Result<f64, AnalyticError> {
    check_rho(rho)?;
    check_finite(x, "x")?;
    let mut eval = EtaTailSeries::new(rho);
    eval.tail(x)
}

/// Series evaluator with a shared log-factorial cache, so quadrature can
/// reuse it across many abscissae.
pub(crate) struct EtaTailSeries {
    rho: f64,
    lambda: f64,
    ln1m_lambda: f64,
    lnlam_minus_lam: f64,
    /// lfact[k] = ln k! for k up to the largest n reached so far.
    lfact: Vec<f64>,
}

impl EtaTailSeries {
    pub(crate) fn new(rho: f64) -> Self {
        let lambda = rho / rho.exp_m1();
        EtaTailSeries {
            rho,
            lambda,
            ln1m_lambda: (-lambda).ln_1p(),
            lnlam_minus_lam: lambda.ln() - lambda,
            lfact: vec![0.0],
        }
    }

    fn ln_factorial(&mut self, n: usize) -> f64 {
        while self.lfact.len() <= n {
            let k = self.lfact.len();
            let prev = self.lfact[k - 1];
            self.lfact.push(prev + (k as f64).ln());
        }
        self.lfact[n]
    }

    pub(crate) fn tail(&mut self, x: f64) -> Result<f64, AnalyticError> {
        if x <= 0.0 {
            return Ok(1.0);
        }
        let n0 = x.floor() as usize + 1;
        let safety = x + 50.0 / self.rho;
        // Streaming log-sum-exp over the terms n ln(n-x) - ln n! + n (ln l - l).
        let mut shift = f64::NEG_INFINITY;
        let mut acc = 0.0;
        let mut lfact = self.ln_factorial(n0);
        let mut n = n0;
        loop {
            let nf = n as f64;
            let lt = nf * (nf - x).ln() - lfact + nf * self.lnlam_minus_lam;
            if lt > shift {
                acc = acc * (shift - lt).exp() + 1.0;
                shift = lt;
            } else {
                let t = (lt - shift).exp();
                acc += t;
                if t <= 1e-16 * acc && nf >= safety {
                    break;
                }
            }
            n += 1;
            if n - n0 > 100_000_000 {
                return Err(AnalyticError::Numeric(format!(
                    "supremum tail series did not converge at rho={}, x={x}",
                    self.rho
                )));
            }
            lfact += nf.ln_1p(); // ln(n+1)
        }
        let log_total = self.ln1m_lambda + self.lambda * x + shift + acc.ln();
        Ok(log_total.exp())
    }
}

/// E exp((rho/4) * eta) where eta is the subcritical supremum: evaluated as
/// 1 + (rho/4) * integral of e^{rho x/4} P{eta >= x} dx by adaptive Simpson.
pub fn eta_exp_quarter_moment(rho: f64) -> Result<f64, AnalyticError> {
    check_rho(rho)?;
    let s = rho / 4.0;
    // The integrand is bounded by e^{-rho x/4}; beyond 160/rho it is < e^-40.
    let upper = 160.0 / rho;
    let mut series = EtaTailSeries::new(rho);
    // At x = 0 take the right limit (the distribution has an atom at zero).
    let mut f = |x: f64| -> Result<f64, AnalyticError> {
        let xx = if x <= 0.0 { 1e-12 } else { x };
        Ok((s * xx).exp() * series.tail(xx)?)
    };
    let integral = adaptive_simpson(&mut f, 0.0, upper, 1e-10, 45)?;
    let value = 1.0 + s * integral;
    if !(0.999_999..=2.000_001).contains(&value) {
        return Err(AnalyticError::Numeric(format!(
            "exp-quarter moment {value} outside [1, 2] at rho={rho}"
        )));
    }
    Ok(value)
}

/// Unique positive root of lambda' (e^-r - 1) + r = 0 for lambda' > 1:
/// safeguarded Newton from r0 = 2 (lambda' - 1), residual below 1e-12.
pub fn solve_ladder_rate(lambda_prime: f64) -> Result<f64, AnalyticError> {
    if !(lambda_prime.is_finite() && lambda_prime > 1.0) {
        return Err(AnalyticError::InvalidLambdaPrime(lambda_prime));
    }
    let g = |r: f64| r + lambda_prime * (-r).exp_m1();
    let dg = |r: f64| 1.0 - lambda_prime * (-r).exp();

    // Bracket the root: g < 0 on (0, r*), g > 0 beyond.
    let mut lo = 2.0 * (lambda_prime - 1.0);
    while g(lo) >= 0.0 {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(AnalyticError::Numeric(
                "failed to bracket ladder rate from below".into(),
            ));
        }
    }
    let mut hi = 2.0 * lo.max(2.0 * (lambda_prime - 1.0));
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(AnalyticError::Numeric(
                "failed to bracket ladder rate from above".into(),
            ));
        }
    }

    let mut r = 2.0 * (lambda_prime - 1.0);
    if !(lo..=hi).contains(&r) {
        r = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let gr = g(r);
        if gr.abs() < 1e-12 {
            return Ok(r);
        }
        if gr < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let d = dg(r);
        let newton = r - gr / d;
        r = if d.abs() > 1e-300 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let gr = g(r);
    if gr.abs() < 1e-12 {
        Ok(r)
    } else {
        Err(AnalyticError::Numeric(format!(
            "ladder rate iteration stalled at residual {gr}"
        )))
    }
}

/// Standard normal CDF. Accurate to about 1e-7 absolute, which is far below
/// every distribution-test tolerance in this crate.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc_approx(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function, Chebyshev-fitted rational approximation
/// (|fractional error| < 1.2e-7 everywhere).
fn erfc_approx(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Adaptive Simpson with an absolute tolerance; fails rather than returning
/// an unconverged value.
fn adaptive_simpson<F>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64, AnalyticError>
where
    F: FnMut(f64) -> Result<f64, AnalyticError>,
{
    let m = 0.5 * (a + b);
    let fa = f(a)?;
    let fm = f(m)?;
    let fb = f(b)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, fa, m, fm, b, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &mut F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, AnalyticError>
where
    F: FnMut(f64) -> Result<f64, AnalyticError>,
{
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(AnalyticError::Numeric(
            "adaptive quadrature failed to converge".into(),
        ));
    }
    let lv = simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)?;
    let rv = simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1)?;
    Ok(lv + rv)
}

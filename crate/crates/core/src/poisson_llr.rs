//! The two-sided Poisson-type limiting likelihood-ratio process.
//!
//! For jump size `rho > 0` the log process is
//!
//! ```text
//!   ln Z(x) =  rho N+(x) - x            x >= 0,  N+ Poisson, rate 1/(e^rho - 1)
//!   ln Z(x) = -rho N-(-x) - x           x <= 0,  N- Poisson, rate 1/(1 - e^-rho)
//! ```
//!
//! Both sides drift to -infinity, so the mean location `zeta = int x Z / int Z`
//! and the argmax `xi` are well defined. Between events `Z` is exponential in
//! `x`, so each segment integrates in closed form; summing segments
//! telescopes into plain sums over the per-event log weights
//!
//! ```text
//!   w_i = rho i - x_i            (positive side, value at the i-th event)
//!   v_i = x'_i - rho (i - 1)     (negative side, left limit at the i-th event)
//! ```
//!
//! as follows:
//!
//! ```text
//!   int_0^X  Z dx    =  1 + (1 - e^-rho) sum_i e^{w_i}  - e^{w_n}
//!   int_-X^0 Z dx    = -1 + (1 - e^-rho) sum_i e^{v_i}  + e^{v_m - rho}
//!   int_0^X  x Z dx  =  1 + (1 - e^-rho) sum_i (x_i + 1) e^{w_i}   - (boundary)
//!   int_-X^0 x Z dx  = -1 - (1 - e^-rho) sum_i (x'_i - 1) e^{v_i}  + (boundary)
//! ```
//!
//! The constant +-1 terms cancel between the two sides in both the numerator
//! and the denominator of `zeta`, the common factor (1 - e^-rho) cancels in
//! the ratio, and the final-event boundary terms are of size e^{last log
//! weight}, which the generation stopping rule keeps a factor e^-log_margin
//! below the retained mass. What remains is the ratio of event sums computed
//! by [`zeta_xi_telescoped`]. [`zeta_xi_windowed`] instead keeps every
//! per-segment integral over the finite event window (no dropped boundary
//! terms) and serves as the exact cross-check of the same functionals.
//!
//! The supremum over the positive side is attained at an event point with
//! value `w_i`; over the negative side it is a left limit with value `v_i`,
//! reported at the event position. Since `v_1 = x'_1 > 0`, the origin
//! candidate `ln Z(0) = 0` never wins, which is asserted on every sample.

use crate::montecarlo::EstimateRow;
use crate::rng_streams::{Stream, StreamError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("rho must be positive and finite, got {0}")]
    InvalidRho(f64),
    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),
    #[error("event cap {cap} exceeded on the {side:?} side")]
    EventCapExceeded { side: Side, cap: u64 },
    #[error("event list must be non-empty")]
    EmptyEvents,
    #[error("event lists out of order or not strictly positive")]
    MalformedEvents,
    #[error("side mismatch: expected {expected:?} events")]
    SideMismatch { expected: Side },
    #[error("point {x} is beyond the generated horizon {horizon}")]
    OutOfHorizon { x: f64, horizon: f64 },
    #[error("marginal log process is only defined away from y = 0, got {0}")]
    InvalidMarginalPoint(f64),
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),
    #[error("row has rho {row_rho} but the model implies {model_rho}")]
    RhoMismatch { row_rho: f64, model_rho: f64 },
    #[error(transparent)]
    Stream(#[from] StreamError),
}

/// Which half-axis of the process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

/// Validated jump size with the two event intensities.
///
/// `lambda_minus - lambda_plus = 1` holds exactly: the negative-side rate is
/// e^rho/(e^rho - 1) = 1 + lambda_plus by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoParam {
    rho: f64,
    lambda_plus: f64,
    lambda_minus: f64,
}

impl RhoParam {
    pub fn new(rho: f64) -> Result<Self, SimError> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(SimError::InvalidRho(rho));
        }
        let lambda_plus = 1.0 / rho.exp_m1();
        Ok(RhoParam {
            rho,
            lambda_plus,
            lambda_minus: 1.0 + lambda_plus,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Intensity of the positive-side event process, 1/(e^rho - 1).
    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }

    /// Intensity of the negative-side event process, 1/(1 - e^-rho).
    pub fn lambda_minus(&self) -> f64 {
        self.lambda_minus
    }
}

/// When to stop generating events and what to do at the hard cap.
///
/// Generation stops at the first event whose log weight sits `log_margin`
/// below both the running maximum and the origin level 0; the dropped tail
/// is then a factor e^-log_margin below everything the functionals keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub log_margin: f64,
    pub max_events: u64,
    pub fail_on_cap: bool,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            log_margin: 40.0,
            max_events: 100_000_000,
            fail_on_cap: false,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.log_margin.is_finite() && self.log_margin >= 10.0) {
            return Err(SimError::InvalidPolicy(format!(
                "log_margin must be finite and >= 10, got {}",
                self.log_margin
            )));
        }
        if self.max_events < 2 {
            return Err(SimError::InvalidPolicy(format!(
                "max_events must be at least 2, got {}",
                self.max_events
            )));
        }
        Ok(())
    }
}

/// Strictly increasing positive event times on one side of the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct EventList {
    side: Side,
    times: Vec<f64>,
}

impl EventList {
    pub fn from_times(side: Side, times: Vec<f64>) -> Result<Self, SimError> {
        let mut prev = 0.0;
        for &t in &times {
            if !(t.is_finite() && t > prev) {
                return Err(SimError::MalformedEvents);
            }
            prev = t;
        }
        Ok(EventList { side, times })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest generated time, or 0 when empty.
    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// One draw of the process functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalSample {
    pub zeta: f64,
    pub xi: f64,
    pub pos_events: u64,
    pub neg_events: u64,
    /// Largest of (last log weight) and (last log weight - running max) over
    /// both sides; at most -log_margin whenever generation stopped cleanly.
    pub residual_log_bound: f64,
}

impl FunctionalSample {
    /// True when the dropped tail is provably e^-log_margin below the mass kept.
    pub fn within_margin(&self, log_margin: f64) -> bool {
        self.residual_log_bound <= -log_margin
    }
}

/// Log weight of the i-th event (1-based) on a side.
#[inline]
fn log_weight(rho: f64, side: Side, i: usize, t: f64) -> f64 {
    match side {
        Side::Positive => rho * i as f64 - t,
        Side::Negative => t - rho * (i - 1) as f64,
    }
}

/// Generates side events until the log weight drops `log_margin` below both
/// the running maximum and zero, or the cap is hit.
pub fn generate_events_until_drop(
    rho: &RhoParam,
    side: Side,
    stream: &mut Stream,
    policy: &TruncationPolicy,
) -> Result<EventList, SimError> {
    policy.validate()?;
    let rate = match side {
        Side::Positive => rho.lambda_plus,
        Side::Negative => rho.lambda_minus,
    };
    let mut times: Vec<f64> = Vec::new();
    let mut t = 0.0f64;
    let mut max_w = f64::NEG_INFINITY;
    loop {
        if times.len() as u64 >= policy.max_events {
            if policy.fail_on_cap {
                return Err(SimError::EventCapExceeded {
                    side,
                    cap: policy.max_events,
                });
            }
            break;
        }
        let dt = stream.exponential(rate)?;
        let mut next = t + dt;
        if next <= t {
            // Zero or sub-ulp interarrival; event times must stay strictly increasing.
            next = t.next_up();
        }
        t = next;
        times.push(t);
        let w = log_weight(rho.rho, side, times.len(), t);
        if w > max_w {
            max_w = w;
        }
        if w <= max_w - policy.log_margin && w <= -policy.log_margin {
            break;
        }
    }
    Ok(EventList { side, times })
}

/// Per-side pass over the event log weights: shifted sums, maximum, first
/// argmax, and the final value.
struct SideScan {
    /// sum_i exp(w_i - max_w)
    sum0: f64,
    /// sum_i t_i exp(w_i - max_w)
    sum1: f64,
    max_w: f64,
    argmax: usize,
    last_w: f64,
}

fn scan_side(rho: f64, side: Side, times: &[f64]) -> SideScan {
    let mut max_w = f64::NEG_INFINITY;
    let mut argmax = 0usize;
    let mut last_w = f64::NEG_INFINITY;
    for (idx, &t) in times.iter().enumerate() {
        let w = log_weight(rho, side, idx + 1, t);
        if w > max_w {
            max_w = w;
            argmax = idx;
        }
        last_w = w;
    }
    let (mut sum0, mut sum1) = (0.0, 0.0);
    for (idx, &t) in times.iter().enumerate() {
        let e = (log_weight(rho, side, idx + 1, t) - max_w).exp();
        sum0 += e;
        sum1 += t * e;
    }
    SideScan {
        sum0,
        sum1,
        max_w,
        argmax,
        last_w,
    }
}

fn check_sides(pos: &EventList, neg: &EventList) -> Result<(), SimError> {
    if pos.side != Side::Positive {
        return Err(SimError::SideMismatch {
            expected: Side::Positive,
        });
    }
    if neg.side != Side::Negative {
        return Err(SimError::SideMismatch {
            expected: Side::Negative,
        });
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(SimError::EmptyEvents);
    }
    Ok(())
}

/// Mean location and argmax from the telescoped event sums:
///
/// ```text
///   zeta = [sum (x_i + 1) e^{w_i} + sum (1 - x'_i) e^{v_i}]
///          / [sum e^{w_i} + sum e^{v_i}]
///   xi   = x_k  if w_k > v_l  else  -x'_l      (k, l the per-side argmaxes)
/// ```
pub fn zeta_xi_telescoped(
    rho: &RhoParam,
    pos: &EventList,
    neg: &EventList,
) -> Result<(f64, f64), SimError> {
    check_sides(pos, neg)?;
    let p = scan_side(rho.rho, Side::Positive, &pos.times);
    let n = scan_side(rho.rho, Side::Negative, &neg.times);
    // The negative-side supremum is at least v_1 = x'_1 > 0, so the origin
    // candidate ln Z(0) = 0 can never be the argmax.
    assert!(
        n.max_w > 0.0,
        "negative-side supremum must exceed the origin level"
    );
    let m = p.max_w.max(n.max_w);
    let sp = (p.max_w - m).exp();
    let sn = (n.max_w - m).exp();
    let den = p.sum0 * sp + n.sum0 * sn;
    let num = (p.sum1 + p.sum0) * sp + (n.sum0 - n.sum1) * sn;
    let xi = if p.max_w > n.max_w {
        pos.times[p.argmax]
    } else {
        -neg.times[n.argmax]
    };
    Ok((num / den, xi))
}

/// Same functionals over the finite window [-x'_m, x_n], by exact
/// per-segment antiderivatives with no dropped boundary terms.
pub fn zeta_xi_windowed(
    rho: &RhoParam,
    pos: &EventList,
    neg: &EventList,
) -> Result<(f64, f64), SimError> {
    check_sides(pos, neg)?;
    let r = rho.rho;
    let p = scan_side(r, Side::Positive, &pos.times);
    let n = scan_side(r, Side::Negative, &neg.times);
    assert!(n.max_w > 0.0);
    // Segment-start log weights never exceed the event log weights or 0.
    let m = p.max_w.max(n.max_w).max(0.0);

    let (mut den, mut num) = (0.0f64, 0.0f64);
    // Positive side: segment j covers [x_j, x_{j+1}) with j events behind it;
    // ln Z = rho j - x there.
    for j in 0..pos.times.len() {
        let a = if j == 0 { 0.0 } else { pos.times[j - 1] };
        let b = pos.times[j];
        let d = b - a;
        let scale = (r * j as f64 - a - m).exp();
        den += scale * -(-d).exp_m1();
        num += scale * ((a + 1.0) - (b + 1.0) * (-d).exp());
    }
    // Negative side: in t = -x, segment j covers [t_j, t_{j+1}) with j events
    // behind it; ln Z = t - rho j there, referenced to its right end.
    for j in 0..neg.times.len() {
        let a = if j == 0 { 0.0 } else { neg.times[j - 1] };
        let b = neg.times[j];
        let d = b - a;
        let scale = (b - r * j as f64 - m).exp();
        den += scale * -(-d).exp_m1();
        num -= scale * ((b - 1.0) - (a - 1.0) * (-d).exp());
    }

    let xi = if p.max_w > n.max_w {
        pos.times[p.argmax]
    } else {
        -neg.times[n.argmax]
    };
    Ok((num / den, xi))
}

/// Draws one functional sample: positive events, then negative events, then
/// the telescoped functionals.
pub fn sample_zeta_xi(
    rho: &RhoParam,
    stream: &mut Stream,
    policy: &TruncationPolicy,
) -> Result<FunctionalSample, SimError> {
    let pos = generate_events_until_drop(rho, Side::Positive, stream, policy)?;
    let neg = generate_events_until_drop(rho, Side::Negative, stream, policy)?;
    let (zeta, xi) = zeta_xi_telescoped(rho, &pos, &neg)?;
    let p = scan_side(rho.rho, Side::Positive, &pos.times);
    let n = scan_side(rho.rho, Side::Negative, &neg.times);
    let residual = (p.last_w - p.max_w)
        .max(p.last_w)
        .max(n.last_w - n.max_w)
        .max(n.last_w);
    Ok(FunctionalSample {
        zeta,
        xi,
        pos_events: pos.len() as u64,
        neg_events: neg.len() as u64,
        residual_log_bound: residual,
    })
}

/// ln Z at a point within the generated horizon.
pub fn log_zrho_at(
    rho: &RhoParam,
    pos: &EventList,
    neg: &EventList,
    x: f64,
) -> Result<f64, SimError> {
    if pos.side != Side::Positive {
        return Err(SimError::SideMismatch {
            expected: Side::Positive,
        });
    }
    if neg.side != Side::Negative {
        return Err(SimError::SideMismatch {
            expected: Side::Negative,
        });
    }
    if !x.is_finite() {
        return Err(SimError::OutOfHorizon {
            x,
            horizon: f64::NAN,
        });
    }
    if x >= 0.0 {
        let horizon = pos.horizon();
        if x > horizon {
            return Err(SimError::OutOfHorizon { x, horizon });
        }
        let count = pos.times.partition_point(|&t| t <= x);
        Ok(rho.rho * count as f64 - x)
    } else {
        let t = -x;
        let horizon = neg.horizon();
        if t > horizon {
            return Err(SimError::OutOfHorizon { x, horizon });
        }
        let count = neg.times.partition_point(|&u| u <= t);
        Ok(-(rho.rho * count as f64) - x)
    }
}

/// One draw of the log marginal at `y != 0`: a scaled Poisson count minus
/// the drift y/rho.
pub fn sample_marginal_log_x(
    rho: &RhoParam,
    y: f64,
    stream: &mut Stream,
) -> Result<f64, SimError> {
    if !y.is_finite() || y == 0.0 {
        return Err(SimError::InvalidMarginalPoint(y));
    }
    let r = rho.rho;
    let (lambda, sign) = if y > 0.0 {
        (y / r * rho.lambda_plus, 1.0)
    } else {
        (-y / r * rho.lambda_minus, -1.0)
    };
    let poisson = rand_distr::Poisson::new(lambda)
        .map_err(|e| SimError::InvalidModel(format!("poisson rate {lambda}: {e}")))?;
    let count: f64 = rand_distr::Distribution::sample(&poisson, stream);
    Ok(sign * r * count - y / r)
}

/// Observation models that reduce to the canonical process after rescaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// Poisson observations whose intensity jumps from `a` to `b`.
    IntensityChange { a: f64, b: f64 },
    /// Compound-Poisson observations with intensity `tau` whose jump size
    /// changes from `s_minus` to `s_plus`.
    JumpSizeChange { tau: f64, s_minus: f64, s_plus: f64 },
}

impl ModelKind {
    /// The canonical jump size and the moment scale factor for this model.
    pub fn rho_and_factor(&self) -> Result<(f64, f64), SimError> {
        match *self {
            ModelKind::IntensityChange { a, b } => {
                if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 && a != b) {
                    return Err(SimError::InvalidModel(format!(
                        "intensities must be positive, finite, and distinct, got a={a}, b={b}"
                    )));
                }
                Ok(((a / b).ln().abs(), 1.0 / ((a - b) * (a - b))))
            }
            ModelKind::JumpSizeChange { tau, s_minus, s_plus } => {
                if !(tau.is_finite() && tau > 0.0) {
                    return Err(SimError::InvalidModel(format!(
                        "intensity tau must be positive and finite, got {tau}"
                    )));
                }
                if !(s_minus.is_finite()
                    && s_plus.is_finite()
                    && s_minus > 0.0
                    && s_plus > 0.0
                    && s_minus != s_plus)
                {
                    return Err(SimError::InvalidModel(format!(
                        "jump sizes must be positive, finite, and distinct, got {s_minus}, {s_plus}"
                    )));
                }
                Ok((
                    (s_plus / s_minus).ln().abs(),
                    tau * tau / ((s_plus - s_minus) * (s_plus - s_minus)),
                ))
            }
        }
    }
}

/// Rescales a canonical-process estimate row into model units. The second
/// moments (and their standard errors) scale by the model factor; the
/// efficiency ratio is invariant.
pub fn rescale_to_model(row: &EstimateRow, kind: &ModelKind) -> Result<EstimateRow, SimError> {
    let (model_rho, factor) = kind.rho_and_factor()?;
    if (row.rho - model_rho).abs() > 1e-12 {
        return Err(SimError::RhoMismatch {
            row_rho: row.rho,
            model_rho,
        });
    }
    let mut out = row.clone();
    out.b_hat *= factor;
    out.se_b *= factor;
    out.m_hat *= factor;
    out.se_m *= factor;
    out.rho2_b = row.rho2_b.map(|_| row.rho * row.rho * out.b_hat);
    out.rho2_m = row.rho2_m.map(|_| row.rho * row.rho * out.m_hat);
    Ok(out)
}

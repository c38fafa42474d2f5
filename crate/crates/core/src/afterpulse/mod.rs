//! After-pulse corrections for gated single-photon avalanche detectors.
//!
//! A detection leaves trapped carriers that trigger a spurious avalanche
//! with probability `p0 exp(-t / tau)` at time `t` after it. In gated mode
//! those carriers can only fire while a gate is open, so the total
//! after-pulse probability following one detection is the geometric sum
//! over the gates that reopen after the dead time.

mod fit;
mod histogram;

pub use fit::{fit_afterpulse, AfterpulseFit};
pub use histogram::IntervalHistogram;

use serde::Serialize;

use crate::error::{HomError, Result};
use crate::model::{self, BeamSplitter, DetectorPair, SourcePair, VisibilityReport};

/// Single-exponential after-pulse decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AfterpulseParams {
    p0: f64,
    /// seconds
    tau: f64,
}

impl AfterpulseParams {
    pub fn new(p0: f64, tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p0) {
            return Err(HomError::InvalidAfterpulse(format!(
                "p0 must lie in [0, 1), got {p0}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(HomError::InvalidAfterpulse(format!(
                "tau must be positive, got {tau}"
            )));
        }
        Ok(Self { p0, tau })
    }

    /// No after-pulsing at all.
    pub fn none() -> Self {
        Self { p0: 0.0, tau: 1e-6 }
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// After-pulse probability `dt` seconds after an avalanche.
    #[inline]
    pub fn probability_at(&self, dt: f64) -> f64 {
        self.p0 * (-dt / self.tau).exp()
    }
}

/// Gate timing of one detector. All durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GatingConfig {
    dead_time: f64,
    gate_period: f64,
    gate_width: f64,
}

impl GatingConfig {
    pub fn new(dead_time: f64, gate_period: f64, gate_width: f64) -> Result<Self> {
        if !(dead_time >= 0.0 && dead_time.is_finite()) {
            return Err(HomError::InvalidGating(format!(
                "dead time must be >= 0, got {dead_time}"
            )));
        }
        if !(gate_period > 0.0 && gate_period.is_finite()) {
            return Err(HomError::InvalidGating(format!(
                "gate period must be positive, got {gate_period}"
            )));
        }
        if !(gate_width > 0.0 && gate_width < gate_period) {
            return Err(HomError::InvalidGating(format!(
                "gate width must lie in (0, gate period), got {gate_width}"
            )));
        }
        Ok(Self {
            dead_time,
            gate_period,
            gate_width,
        })
    }

    pub fn dead_time(&self) -> f64 {
        self.dead_time
    }

    pub fn gate_period(&self) -> f64 {
        self.gate_period
    }

    pub fn gate_width(&self) -> f64 {
        self.gate_width
    }

    pub fn with_dead_time(&self, dead_time: f64) -> Result<Self> {
        Self::new(dead_time, self.gate_period, self.gate_width)
    }

    /// Gates skipped after a detection: the detector rearms at the first
    /// gate opening at least `dead_time` after the detecting gate, and
    /// never earlier than the next gate.
    pub fn gates_per_dead_time(&self) -> u64 {
        let ratio = self.dead_time / self.gate_period;
        // absorb rounding in nominally integral ratios, e.g. 7us / 1us
        let n = (ratio - 1e-9).ceil();
        (n as u64).max(1)
    }
}

/// `p0 exp(-T_dt / tau) / (1 - exp(-T_gat / tau))`: the after-pulse
/// probability summed over every gate after the dead time.
pub fn total_afterpulse_probability(ap: &AfterpulseParams, g: &GatingConfig) -> f64 {
    if ap.p0 == 0.0 {
        return 0.0;
    }
    ap.p0 * (-g.dead_time / ap.tau).exp() / -(-g.gate_period / ap.tau).exp_m1()
}

/// Coincidence probability including after-pulse coincidences, where
/// `ap_total_c`, `ap_total_d` come from [`total_afterpulse_probability`].
pub fn corrected_coincidence(
    p_coin: f64,
    p_c: f64,
    p_d: f64,
    ap_total_c: f64,
    ap_total_d: f64,
) -> Result<f64> {
    for (name, p) in [
        ("p_coin", p_coin),
        ("p_c", p_c),
        ("p_d", p_d),
        ("ap_total_c", ap_total_c),
        ("ap_total_d", ap_total_d),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(HomError::InconsistentProbabilities(format!(
                "{name} = {p} is not a probability"
            )));
        }
    }
    if p_coin > p_c || p_coin > p_d {
        return Err(HomError::InconsistentProbabilities(format!(
            "p_coin = {p_coin} exceeds a singles probability ({p_c}, {p_d})"
        )));
    }
    Ok(p_coin + (p_c - p_coin) * p_d * ap_total_d + (p_d - p_coin) * p_c * ap_total_c)
}

/// Singles probability including after-pulses: `p (1 + (1 - p) ap_total)`.
pub fn corrected_singles(p: f64, ap_total: f64) -> f64 {
    p * (1.0 + (1.0 - p) * ap_total)
}

/// Visibility with both detectors' after-pulsing folded into the
/// coincidence and singles probabilities.
pub fn visibility_with_afterpulse(
    src: &SourcePair,
    bs: &BeamSplitter,
    det: &DetectorPair,
    ap_c: &AfterpulseParams,
    ap_d: &AfterpulseParams,
    g: &GatingConfig,
) -> Result<VisibilityReport> {
    visibility_with_afterpulse_gated(src, bs, det, [ap_c, ap_d], [g, g])
}

/// [`visibility_with_afterpulse`] with separate gate timing per detector,
/// index 0 for detector c.
pub fn visibility_with_afterpulse_gated(
    src: &SourcePair,
    bs: &BeamSplitter,
    det: &DetectorPair,
    ap: [&AfterpulseParams; 2],
    g: [&GatingConfig; 2],
) -> Result<VisibilityReport> {
    let base = model::visibility(src, bs, det)?;
    let tot_c = total_afterpulse_probability(ap[0], g[0]);
    let tot_d = total_afterpulse_probability(ap[1], g[1]);
    if tot_c == 0.0 && tot_d == 0.0 {
        return Ok(base);
    }
    let p_coin = corrected_coincidence(base.p_coin, base.p_c, base.p_d, tot_c, tot_d)?;
    let p_c = corrected_singles(base.p_c, tot_c);
    let p_d = corrected_singles(base.p_d, tot_d);
    VisibilityReport::from_probabilities(p_coin, p_c, p_d)
}

/// Mean photon number of one input arm from the detection rate it produces
/// on one detector behind a 50:50 splitter, the other arm blocked:
/// `(2 / eta) ln((1 - R T_dt + R T_gat) / (1 - R T_dt))`.
///
/// Exact for the gated dead-time model whenever the dead time is a whole
/// number of gate periods: the bracket is then `1 / (1 - p)` with `p` the
/// click probability of an armed gate.
pub fn mu_from_rate(r_det: f64, eta: f64, g: &GatingConfig) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(HomError::InvalidDetector(format!(
            "efficiency must lie in (0, 1], got {eta}"
        )));
    }
    if !(r_det >= 0.0 && r_det.is_finite()) {
        return Err(HomError::InconsistentProbabilities(format!(
            "detection rate must be >= 0, got {r_det}"
        )));
    }
    let busy = r_det * g.dead_time;
    if busy >= 1.0 {
        return Err(HomError::RateTooHigh(busy));
    }
    Ok(2.0 / eta * (r_det * g.gate_period / (1.0 - busy)).ln_1p())
}

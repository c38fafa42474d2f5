//! Closed-form model of two-photon interference between independent,
//! phase-randomized weak coherent pulses at a beam splitter.
//!
//! Inputs `a`, `b` carry Poissonian light with mean photon numbers `mu_a`,
//! `mu_b`. The beam splitter maps `a -> t c + r d` and `b -> r c - t d`, so
//! for fixed input phases each output port carries a coherent state with
//! mean photon number
//!
//! ```text
//! mu_c = mu_a t^2 + mu_b r^2 + 2 sqrt(mu_a mu_b) t r cos(Phi) cos(theta_a - theta_b)
//! mu_d = mu_a r^2 + mu_b t^2 - 2 sqrt(mu_a mu_b) t r cos(Phi) cos(theta_a - theta_b)
//! ```
//!
//! Averaging the threshold-detector click probabilities over the uniform
//! phase difference turns every `exp(-k cos)` into `I0(k)`, which gives the
//! closed forms used here.
//!
//! The phase-independent factors are
//! `C = exp(-eta_c (mu_a t^2 + mu_b r^2)) (1 - d_c)` and
//! `D = exp(-eta_d (mu_a r^2 + mu_b t^2)) (1 - d_d)`. Some printed versions of
//! this model pair `t^2` with `mu_b` inside `C`; that variant is not the
//! phase-independent part of `exp(-eta_c mu_c)` and is not used.

use std::f64::consts::PI;

use serde::Serialize;

use crate::bessel::bessel_i0m1;
use crate::error::{HomError, Result};

/// Tolerance on `t^2 + r^2 = 1`.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Mean photon numbers of the two inputs and their polarization overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourcePair {
    mu_a: f64,
    mu_b: f64,
    cos_phi: f64,
}

impl SourcePair {
    pub fn new(mu_a: f64, mu_b: f64, cos_phi: f64) -> Result<Self> {
        if !(mu_a.is_finite() && mu_a >= 0.0) {
            return Err(HomError::InvalidSource(format!(
                "mu_a must be >= 0, got {mu_a}"
            )));
        }
        if !(mu_b.is_finite() && mu_b >= 0.0) {
            return Err(HomError::InvalidSource(format!(
                "mu_b must be >= 0, got {mu_b}"
            )));
        }
        if !(0.0..=1.0).contains(&cos_phi) {
            return Err(HomError::InvalidSource(format!(
                "cos_phi must lie in [0, 1], got {cos_phi}"
            )));
        }
        Ok(Self {
            mu_a,
            mu_b,
            cos_phi,
        })
    }

    /// Equal intensities and aligned polarizations.
    pub fn balanced(mu: f64) -> Result<Self> {
        Self::new(mu, mu, 1.0)
    }

    pub fn mu_a(&self) -> f64 {
        self.mu_a
    }

    pub fn mu_b(&self) -> f64 {
        self.mu_b
    }

    pub fn cos_phi(&self) -> f64 {
        self.cos_phi
    }

    /// Same source with the input ports exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            mu_a: self.mu_b,
            mu_b: self.mu_a,
            cos_phi: self.cos_phi,
        }
    }
}

/// Optical phases of the two inputs for one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    theta_a: f64,
    theta_b: f64,
}

impl PhaseSample {
    /// Phases are wrapped into `[0, 2pi)`.
    pub fn new(theta_a: f64, theta_b: f64) -> Result<Self> {
        if !(theta_a.is_finite() && theta_b.is_finite()) {
            return Err(HomError::InvalidSource("phases must be finite".into()));
        }
        Ok(Self {
            theta_a: wrap_phase(theta_a),
            theta_b: wrap_phase(theta_b),
        })
    }

    pub fn theta_a(&self) -> f64 {
        self.theta_a
    }

    pub fn theta_b(&self) -> f64 {
        self.theta_b
    }

    pub fn difference(&self) -> f64 {
        self.theta_a - self.theta_b
    }
}

fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2pi for tiny negative inputs
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Lossless beam splitter with amplitude transmissivity `t` and
/// reflectivity `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamSplitter {
    t: f64,
    r: f64,
}

impl BeamSplitter {
    /// Builds the splitter from its power transmittance `T = t^2`,
    /// which must lie strictly inside (0, 1).
    pub fn from_transmittance(transmittance: f64) -> Result<Self> {
        if !(transmittance > 0.0 && transmittance < 1.0) {
            return Err(HomError::InvalidBeamSplitter(format!(
                "transmittance must lie in (0, 1), got {transmittance}"
            )));
        }
        let t = transmittance.sqrt();
        let r = (1.0 - transmittance).sqrt();
        debug_assert!((t * t + r * r - 1.0).abs() <= UNITARITY_TOL);
        Ok(Self { t, r })
    }

    pub fn balanced() -> Self {
        Self {
            t: std::f64::consts::FRAC_1_SQRT_2,
            r: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn transmittance(&self) -> f64 {
        self.t * self.t
    }

    pub fn reflectance(&self) -> f64 {
        self.r * self.r
    }

    /// Exchanges the roles of `t` and `r`.
    pub fn swapped(&self) -> Self {
        Self {
            t: self.r,
            r: self.t,
        }
    }
}

/// Efficiencies and per-gate dark-count probabilities of the detectors at
/// output ports `c` and `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorPair {
    eta_c: f64,
    eta_d: f64,
    dark_c: f64,
    dark_d: f64,
}

impl DetectorPair {
    pub fn new(eta_c: f64, eta_d: f64, dark_c: f64, dark_d: f64) -> Result<Self> {
        for (name, eta) in [("eta_c", eta_c), ("eta_d", eta_d)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(HomError::InvalidDetector(format!(
                    "{name} must lie in [0, 1], got {eta}"
                )));
            }
        }
        for (name, dark) in [("dark_c", dark_c), ("dark_d", dark_d)] {
            if !(0.0..1.0).contains(&dark) {
                return Err(HomError::InvalidDetector(format!(
                    "{name} must lie in [0, 1), got {dark}"
                )));
            }
        }
        Ok(Self {
            eta_c,
            eta_d,
            dark_c,
            dark_d,
        })
    }

    /// Identical, noiseless detectors.
    pub fn ideal(eta: f64) -> Result<Self> {
        Self::new(eta, eta, 0.0, 0.0)
    }

    pub fn eta_c(&self) -> f64 {
        self.eta_c
    }

    pub fn eta_d(&self) -> f64 {
        self.eta_d
    }

    pub fn dark_c(&self) -> f64 {
        self.dark_c
    }

    pub fn dark_d(&self) -> f64 {
        self.dark_d
    }

    /// Exchanges the two detectors.
    pub fn swapped(&self) -> Self {
        Self {
            eta_c: self.eta_d,
            eta_d: self.eta_c,
            dark_c: self.dark_d,
            dark_d: self.dark_c,
        }
    }
}

/// Per-gate click statistics and the resulting visibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityReport {
    pub p_coin: f64,
    pub p_c: f64,
    pub p_d: f64,
    pub v_hom: f64,
}

impl VisibilityReport {
    /// `V = 1 - p_coin / (p_c p_d)`.
    pub fn from_probabilities(p_coin: f64, p_c: f64, p_d: f64) -> Result<Self> {
        let denom = p_c * p_d;
        if !(denom > 0.0) {
            return Err(HomError::DegenerateDenominator(
                "singles probability product is zero",
            ));
        }
        Ok(Self {
            p_coin,
            p_c,
            p_d,
            v_hom: 1.0 - p_coin / denom,
        })
    }
}

/// Output-port mean photon numbers `(mu_c, mu_d)` for fixed input phases.
///
/// Both are clamped at zero against rounding; their sum equals
/// `mu_a + mu_b` up to rounding.
pub fn output_means(src: &SourcePair, ph: &PhaseSample, bs: &BeamSplitter) -> (f64, f64) {
    output_means_at(src, bs, ph.difference())
}

/// [`output_means`] for a bare phase difference.
#[inline]
pub fn output_means_at(src: &SourcePair, bs: &BeamSplitter, phase_diff: f64) -> (f64, f64) {
    let (t, r) = (bs.t, bs.r);
    let (t2, r2) = (t * t, r * r);
    let cross = 2.0 * (src.mu_a * src.mu_b).sqrt() * t * r * src.cos_phi * phase_diff.cos();
    let mu_c = src.mu_a * t2 + src.mu_b * r2 + cross;
    let mu_d = src.mu_a * r2 + src.mu_b * t2 - cross;
    (mu_c.max(0.0), mu_d.max(0.0))
}

/// `P(m photons at c, n photons at d)` for Poissonian output ports,
/// evaluated in log space.
pub fn photon_pair_probability(m: u32, n: u32, mu_c: f64, mu_d: f64) -> f64 {
    poisson_pmf(m, mu_c) * poisson_pmf(n, mu_d)
}

fn poisson_pmf(k: u32, mu: f64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (kf * mu.ln() - mu - ln_factorial(k)).exp()
}

/// `ln(k!)`; exact summation for small `k`, Stirling series beyond.
fn ln_factorial(k: u32) -> f64 {
    if k < 32 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64 + 1.0;
    // ln Gamma(x) for x >= 33: error far below f64 resolution with 4 terms
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Phase-independent no-click factors `C = exp(-x_c) (1 - d_c)` and
/// `D = exp(-x_d) (1 - d_d)`, with the Bessel terms kept as `I0 - 1` for
/// detector c, detector d and the cross term.
#[derive(Debug, Clone, Copy)]
struct ClickFactors {
    x_c: f64,
    x_d: f64,
    dark_c: f64,
    dark_d: f64,
    i_c: f64,
    i_d: f64,
    i_cross: f64,
}

fn click_factors(src: &SourcePair, bs: &BeamSplitter, det: &DetectorPair) -> ClickFactors {
    let (t2, r2) = (bs.t * bs.t, bs.r * bs.r);
    let amp = 2.0 * (src.mu_a * src.mu_b).sqrt() * bs.t * bs.r * src.cos_phi;
    ClickFactors {
        x_c: det.eta_c * (src.mu_a * t2 + src.mu_b * r2),
        x_d: det.eta_d * (src.mu_a * r2 + src.mu_b * t2),
        dark_c: det.dark_c,
        dark_d: det.dark_d,
        i_c: bessel_i0m1(det.eta_c * amp),
        i_d: bessel_i0m1(det.eta_d * amp),
        i_cross: bessel_i0m1((det.eta_c - det.eta_d) * amp),
    }
}

/// `1 - exp(-x) (1 - dark) I0`, given `i0m1 = I0 - 1`.
fn singles(x: f64, dark: f64, i0m1: f64) -> f64 {
    let e = (-x).exp();
    (-(-x).exp_m1() + dark * e - (1.0 - dark) * e * i0m1).clamp(0.0, 1.0)
}

impl ClickFactors {
    fn p_c(&self) -> f64 {
        singles(self.x_c, self.dark_c, self.i_c)
    }

    fn p_d(&self) -> f64 {
        singles(self.x_d, self.dark_d, self.i_d)
    }

    /// `1 - C I_c - D I_d + C D I_x`, rearranged as
    /// `p_c p_d - C D (I_c I_d - I_x)` so the interference term is explicit
    /// and vanishes exactly when the inputs cannot interfere.
    fn interference(&self) -> f64 {
        let cd = (-(self.x_c + self.x_d)).exp() * (1.0 - self.dark_c) * (1.0 - self.dark_d);
        cd * (self.i_c + self.i_d + self.i_c * self.i_d - self.i_cross)
    }

    fn p_coin(&self) -> f64 {
        (self.p_c() * self.p_d() - self.interference()).clamp(0.0, 1.0)
    }
}

/// Phase-averaged probability that both detectors click in the same gate.
pub fn coincidence_probability(src: &SourcePair, bs: &BeamSplitter, det: &DetectorPair) -> f64 {
    click_factors(src, bs, det).p_coin()
}

/// Phase-averaged probabilities that detector c, respectively d, clicks.
pub fn singles_probabilities(
    src: &SourcePair,
    bs: &BeamSplitter,
    det: &DetectorPair,
) -> (f64, f64) {
    let f = click_factors(src, bs, det);
    (f.p_c(), f.p_d())
}

/// Visibility `1 - P_coin / (P_c P_d)` with all constituent probabilities.
pub fn visibility(
    src: &SourcePair,
    bs: &BeamSplitter,
    det: &DetectorPair,
) -> Result<VisibilityReport> {
    let f = click_factors(src, bs, det);
    let (p_c, p_d) = (f.p_c(), f.p_d());
    let denom = p_c * p_d;
    if !(denom > 0.0) {
        return Err(HomError::DegenerateDenominator(
            "a detector never clicks (no light and no dark counts)",
        ));
    }
    Ok(VisibilityReport {
        p_coin: f.p_coin(),
        p_c,
        p_d,
        // equal to 1 - p_coin/denom, without the cancellation
        v_hom: f.interference() / denom,
    })
}

/// Weak-light, dark-count-free approximation of the visibility:
/// `2 t r mu_a mu_b cos^2(Phi) / ((t mu_a + r mu_b)(r mu_a + t mu_b))`.
///
/// Only the 50:50 case, `2 mu_a mu_b cos^2(Phi) / (mu_a + mu_b)^2`, is the
/// exact small-`mu` limit of [`visibility`]; for unbalanced splitters that
/// limit carries `t^2` and `r^2` instead.
pub fn visibility_small_mu(src: &SourcePair, bs: &BeamSplitter) -> Result<f64> {
    if src.mu_a == 0.0 && src.mu_b == 0.0 {
        return Err(HomError::DegenerateDenominator("both inputs are dark"));
    }
    let (t, r) = (bs.t, bs.r);
    let num = 2.0 * t * r * src.mu_a * src.mu_b * src.cos_phi * src.cos_phi;
    let den = (t * src.mu_a + r * src.mu_b) * (r * src.mu_a + t * src.mu_b);
    Ok(num / den)
}

/// Smallest node count accepted by [`coincidence_probability_quadrature`].
pub const MIN_QUADRATURE_NODES: usize = 64;

/// Coincidence probability by explicit numerical averaging over the phase
/// difference (periodic trapezoid rule, spectrally accurate).
///
/// The integrand only depends on `theta_a - theta_b`, so the double phase
/// average collapses to one integral. Independent of the Bessel closed form;
/// used to check it.
pub fn coincidence_probability_quadrature(
    src: &SourcePair,
    bs: &BeamSplitter,
    det: &DetectorPair,
    n_nodes: usize,
) -> Result<f64> {
    if n_nodes < MIN_QUADRATURE_NODES {
        return Err(HomError::InsufficientData(format!(
            "quadrature needs at least {MIN_QUADRATURE_NODES} nodes, got {n_nodes}"
        )));
    }
    let step = 2.0 * PI / n_nodes as f64;
    let sum: f64 = (0..n_nodes)
        .map(|k| {
            let (mu_c, mu_d) = output_means_at(src, bs, k as f64 * step);
            click_probability(det.eta_c, det.dark_c, mu_c)
                * click_probability(det.eta_d, det.dark_d, mu_d)
        })
        .sum();
    Ok(sum / n_nodes as f64)
}

/// `1 - exp(-eta mu) (1 - dark)` for a coherent state of mean `mu`.
#[inline]
pub fn click_probability(eta: f64, dark: f64, mu: f64) -> f64 {
    let x = eta * mu;
    -(-x).exp_m1() + dark * (-x).exp()
}

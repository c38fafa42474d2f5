//! Polarization states prepared by a phase modulator acting on the TE/TM
//! waveguide modes, and the overlap `cos(Phi)` between two such states.

use std::f64::consts::PI;

use crate::error::{HomError, Result};

/// `cos(phi) |TE> + sin(phi) e^{i phase_m} |TM>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    phi: f64,
    phase_m: f64,
}

impl PolarizationState {
    pub fn new(phi: f64, phase_m: f64) -> Result<Self> {
        if !(phi.is_finite() && phase_m.is_finite()) {
            return Err(HomError::InvalidPolarization(format!(
                "angles must be finite, got phi={phi}, phase_m={phase_m}"
            )));
        }
        Ok(Self { phi, phase_m })
    }

    /// State launched at 45 degrees to the waveguide axis with modulator
    /// drive `v_g`; the TE/TM phase is `pi v_g / v_pi`.
    pub fn from_drive(v_g: f64, v_pi: f64) -> Result<Self> {
        if !(v_pi > 0.0) {
            return Err(HomError::InvalidVpi(v_pi));
        }
        Self::new(PI / 4.0, PI * v_g / v_pi)
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn phase_m(&self) -> f64 {
        self.phase_m
    }
}

/// `|<a|b>|` for two modulator states, in `[0, 1]`.
pub fn polarization_overlap(a: &PolarizationState, b: &PolarizationState) -> f64 {
    let dphase = a.phase_m - b.phase_m;
    let cc = a.phi.cos() * b.phi.cos();
    let ss = a.phi.sin() * b.phi.sin();
    let re = cc + ss * dphase.cos();
    let im = ss * dphase.sin();
    re.hypot(im).min(1.0)
}

/// Overlap between an undriven state and one driven at `v_g`, both at 45
/// degrees: `|cos(pi v_g / (2 v_pi))|`.
pub fn cos_phi_from_voltage(v_g: f64, v_pi: f64) -> Result<f64> {
    if !(v_pi > 0.0) {
        return Err(HomError::InvalidVpi(v_pi));
    }
    Ok((PI * v_g / (2.0 * v_pi)).cos().abs().min(1.0))
}

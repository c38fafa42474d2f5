//! Experiment configuration files.
//!
//! JSON with the unit in every dimensioned field name. Missing fields take
//! the defaults of a 1 MHz polarization run: 10% efficient detectors, 7 us
//! dead time, 7 ns gates, 5 ns coincidence window.

use std::path::PathBuf;

use homvis_core::afterpulse::{AfterpulseParams, GatingConfig};
use homvis_core::model::{BeamSplitter, DetectorPair, SourcePair};
use homvis_core::montecarlo::{AfterpulseMode, SimConfig};
use homvis_core::polarization::cos_phi_from_voltage;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const US: f64 = 1e-6;
const NS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub eta: f64,
    /// per gate
    pub dark_count: f64,
    pub dead_time_us: f64,
    pub afterpulse_p0: f64,
    pub afterpulse_tau_us: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            dark_count: 5.5e-5,
            dead_time_us: 7.0,
            afterpulse_p0: 0.0,
            afterpulse_tau_us: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// microseconds, applied to both detectors
    DeadTime,
    /// `mu_a = mu_b`
    PhotonNumber,
    /// `mu_b / mu_a` with `mu_a` fixed
    IntensityRatio,
    /// modulator drive in volts
    PolarizationVoltage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    #[serde(rename = "analytic")]
    Analytic,
    #[serde(rename = "analytic+afterpulse")]
    AnalyticAfterpulse,
    #[serde(rename = "montecarlo")]
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApMode {
    #[default]
    MostRecent,
    Superposed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            axis: Axis::DeadTime,
            start: 0.1,
            stop: 10.0,
            steps: 50,
        }
    }
}

impl SweepSpec {
    /// `steps` evenly spaced values from `start` to `stop` inclusive.
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mu_a: f64,
    pub mu_b: f64,
    pub cos_phi: f64,
    /// overrides `cos_phi` when set
    pub polarization_voltage_volts: Option<f64>,
    pub vpi_volts: f64,
    pub transmittance: f64,
    pub detector_c: DetectorConfig,
    pub detector_d: DetectorConfig,
    pub gate_period_us: f64,
    pub gate_width_ns: f64,
    /// defaults to the gate width
    pub pair_window_ns: Option<f64>,
    pub coincidence_window_ns: f64,
    pub n_gates: u64,
    pub seed: u64,
    pub replicas: u64,
    pub ap_mode: ApMode,
    pub mode: Mode,
    pub sweep: SweepSpec,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mu_a: 0.45,
            mu_b: 0.45,
            cos_phi: 1.0,
            polarization_voltage_volts: None,
            vpi_volts: 5.25,
            transmittance: 0.5,
            detector_c: DetectorConfig::default(),
            detector_d: DetectorConfig {
                dark_count: 2.0e-5,
                ..DetectorConfig::default()
            },
            gate_period_us: 1.0,
            gate_width_ns: 7.0,
            pair_window_ns: None,
            coincidence_window_ns: 5.0,
            n_gates: 1_000_000,
            seed: 1,
            replicas: 1,
            ap_mode: ApMode::MostRecent,
            mode: Mode::Analytic,
            sweep: SweepSpec::default(),
            output: None,
        }
    }
}

/// Core types built from a configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub source: SourcePair,
    pub bs: BeamSplitter,
    pub det: DetectorPair,
    pub gating: [GatingConfig; 2],
    pub ap: [AfterpulseParams; 2],
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::InvalidConfig(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn effective_cos_phi(&self) -> Result<f64, CliError> {
        match self.polarization_voltage_volts {
            Some(v) => Ok(cos_phi_from_voltage(v, self.vpi_volts)?),
            None => Ok(self.cos_phi),
        }
    }

    pub fn setup(&self) -> Result<Setup, CliError> {
        let source = SourcePair::new(self.mu_a, self.mu_b, self.effective_cos_phi()?)?;
        let bs = BeamSplitter::from_transmittance(self.transmittance)?;
        let (c, d) = (&self.detector_c, &self.detector_d);
        let det = DetectorPair::new(c.eta, d.eta, c.dark_count, d.dark_count)?;
        let gate = |dc: &DetectorConfig| {
            GatingConfig::new(
                dc.dead_time_us * US,
                self.gate_period_us * US,
                self.gate_width_ns * NS,
            )
        };
        let ap = |dc: &DetectorConfig| {
            AfterpulseParams::new(dc.afterpulse_p0, dc.afterpulse_tau_us * US)
        };
        Ok(Setup {
            source,
            bs,
            det,
            gating: [gate(c)?, gate(d)?],
            ap: [ap(c)?, ap(d)?],
        })
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let s = self.setup()?;
        let mode = match self.ap_mode {
            ApMode::MostRecent => AfterpulseMode::MostRecent,
            ApMode::Superposed => AfterpulseMode::Superposed,
        };
        Ok(SimConfig {
            source: s.source,
            bs: s.bs,
            det: s.det,
            gating: s.gating,
            ap: s.ap,
            n_gates: self.n_gates,
            seed: self.seed,
            ap_mode: mode,
        })
    }

    /// Pairing, gate and coincidence windows in seconds.
    pub fn windows(&self) -> Result<(f64, f64, f64), CliError> {
        let w = [
            ("gate_width_ns", self.gate_width_ns),
            (
                "pair_window_ns",
                self.pair_window_ns.unwrap_or(self.gate_width_ns),
            ),
            ("coincidence_window_ns", self.coincidence_window_ns),
        ];
        for (name, v) in w {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok((w[0].1 * NS, w[1].1 * NS, w[2].1 * NS))
    }

    pub fn validate_sweep(&self) -> Result<(), CliError> {
        let s = &self.sweep;
        if s.steps < 2 {
            return Err(CliError::InvalidSweep(format!(
                "steps must be >= 2, got {}",
                s.steps
            )));
        }
        if !(s.start.is_finite() && s.stop.is_finite() && s.start < s.stop) {
            return Err(CliError::InvalidSweep(format!(
                "need start < stop, got {} and {}",
                s.start, s.stop
            )));
        }
        let non_negative = match s.axis {
            Axis::DeadTime | Axis::PhotonNumber | Axis::IntensityRatio => true,
            Axis::PolarizationVoltage => false,
        };
        if non_negative && s.start < 0.0 {
            return Err(CliError::InvalidSweep(format!(
                "{:?} axis cannot start below zero, got {}",
                s.axis, s.start
            )));
        }
        Ok(())
    }

    /// Copy of this configuration at one point of the sweep axis.
    pub fn at(&self, axis: Axis, x: f64) -> Self {
        let mut c = self.clone();
        match axis {
            Axis::DeadTime => {
                c.detector_c.dead_time_us = x;
                c.detector_d.dead_time_us = x;
            }
            Axis::PhotonNumber => {
                c.mu_a = x;
                c.mu_b = x;
            }
            Axis::IntensityRatio => c.mu_b = x * c.mu_a,
            Axis::PolarizationVoltage => c.polarization_voltage_volts = Some(x),
        }
        c
    }
}

//! Hong-Ou-Mandel interference of two phase-randomized weak coherent
//! pulses measured with gated single-photon detectors.
//!
//! - [`model`]: closed-form coincidence and singles probabilities and the
//!   visibility, plus a quadrature cross-check.
//! - [`polarization`]: polarization overlap from a modulator drive voltage.
//! - [`afterpulse`]: after-pulse and dead-time corrections, intensity
//!   calibration from detection rates, and after-pulse parameter fitting.
//! - [`montecarlo`]: a gate-by-gate simulator of the whole setup.
//! - [`timestamps`]: time-tag files and coincidence extraction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod afterpulse;
pub mod bessel;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod numfmt;
pub mod polarization;
pub mod stats;
pub mod timestamps;

pub use afterpulse::{
    fit_afterpulse, mu_from_rate, total_afterpulse_probability, visibility_with_afterpulse,
    visibility_with_afterpulse_gated, AfterpulseFit, AfterpulseParams, GatingConfig,
    IntervalHistogram,
};
pub use error::{HomError, Result};
pub use model::{
    coincidence_probability, coincidence_probability_quadrature, output_means,
    singles_probabilities, visibility, BeamSplitter, DetectorPair, PhaseSample, SourcePair,
    VisibilityReport,
};
pub use montecarlo::{
    generate_interval_histogram, generate_timetags, simulate, simulate_replicas, AfterpulseMode,
    Port, SimConfig, SimEstimate, SimTallies,
};
pub use polarization::{cos_phi_from_voltage, PolarizationState};
pub use timestamps::{
    extract_coincidences, parse_timetags, write_timetags, Channel, CoincidenceReport, TimeTagRecord,
};

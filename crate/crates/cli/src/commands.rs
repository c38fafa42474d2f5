//! The subcommands, each returning its report as text.

use std::io::BufRead;
use std::path::Path;

use homvis_core::afterpulse::{
    fit_afterpulse, visibility_with_afterpulse_gated, IntervalHistogram,
};
use homvis_core::model::{self, VisibilityReport};
use homvis_core::montecarlo::{
    derive_seed, generate_interval_histogram, simulate, simulate_replicas, write_timetags_for,
    Port, SimEstimate,
};
use homvis_core::numfmt::sig10;
use homvis_core::timestamps::{extract_coincidences, parse_timetags, CoincidenceReport};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Axis, ExperimentConfig, Mode};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
    /// `key = value` lines
    Text,
}

/// An ordered, flat report.
#[derive(Debug, Clone, Default)]
pub struct Record(Vec<(&'static str, Value)>);

impl Record {
    fn push(&mut self, key: &'static str, v: impl Into<Value>) -> &mut Self {
        self.0.push((key, v.into()));
        self
    }

    fn float(&mut self, key: &'static str, v: f64) -> &mut Self {
        self.push(key, float_value(v))
    }

    fn opt(&mut self, key: &'static str, v: Option<f64>) -> &mut Self {
        self.push(key, v.map_or(Value::Null, float_value))
    }

    fn header(&self) -> String {
        self.0.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(",")
    }

    fn cells(&self) -> Vec<String> {
        self.0.iter().map(|(_, v)| cell(v)).collect()
    }

    fn json(&self) -> Value {
        Value::Object(
            self.0
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect::<Map<_, _>>(),
        )
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => format!("{}\n{}\n", self.header(), self.cells().join(",")),
            Format::Json => pretty(&self.json()),
            Format::Text => self
                .0
                .iter()
                .zip(self.cells())
                .map(|((k, _), c)| format!("{k} = {c}\n"))
                .collect(),
        }
    }
}

fn float_value(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => sig10(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::Null => "nan".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

/// Multi-row output with a shared header.
fn render_table(rows: &[Record], format: Format) -> String {
    match format {
        Format::Json => pretty(&Value::Array(rows.iter().map(Record::json).collect())),
        Format::Text => rows
            .iter()
            .map(|r| r.render(Format::Text))
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Csv => {
            let mut out = rows.first().map(|r| r.header()).unwrap_or_default();
            out.push('\n');
            for r in rows {
                out.push_str(&r.cells().join(","));
                out.push('\n');
            }
            out
        }
    }
}

fn visibility_record(r: &VisibilityReport) -> Record {
    let mut rec = Record::default();
    rec.float("p_coin", r.p_coin)
        .float("p_c", r.p_c)
        .float("p_d", r.p_d)
        .float("v_hom", r.v_hom);
    rec
}

/// Closed-form visibility; after-pulse corrections apply in every mode
/// except `analytic`.
pub fn analytic_visibility(cfg: &ExperimentConfig) -> Result<VisibilityReport, CliError> {
    let s = cfg.setup()?;
    Ok(match cfg.mode {
        Mode::Analytic => model::visibility(&s.source, &s.bs, &s.det)?,
        Mode::AnalyticAfterpulse | Mode::MonteCarlo => visibility_with_afterpulse_gated(
            &s.source,
            &s.bs,
            &s.det,
            [&s.ap[0], &s.ap[1]],
            [&s.gating[0], &s.gating[1]],
        )?,
    })
}

pub fn run_visibility(cfg: &ExperimentConfig, format: Format) -> Result<String, CliError> {
    Ok(visibility_record(&analytic_visibility(cfg)?).render(format))
}

fn run_montecarlo(cfg: &ExperimentConfig) -> Result<SimEstimate, CliError> {
    let sim = cfg.sim_config()?;
    Ok(if cfg.replicas <= 1 {
        simulate(&sim)?
    } else {
        simulate_replicas(&sim, cfg.replicas)?
    })
}

fn sweep_point(cfg: &ExperimentConfig, index: usize, x: f64) -> Result<Record, CliError> {
    let axis = cfg.sweep.axis;
    let mut point = cfg.at(axis, x);
    let mut rec = Record::default();
    rec.float("axis_value", x);
    match cfg.mode {
        Mode::Analytic | Mode::AnalyticAfterpulse => {
            let r = analytic_visibility(&point)?;
            rec.float("p_coin", r.p_coin)
                .float("p_c", r.p_c)
                .float("p_d", r.p_d)
                .float("v_hom", r.v_hom);
        }
        Mode::MonteCarlo => {
            point.seed = derive_seed(cfg.seed, index as u64);
            let e = run_montecarlo(&point)?;
            rec.float("p_coin", e.p_coin_hat)
                .float("p_c", e.p_c_hat)
                .float("p_d", e.p_d_hat)
                .opt("v_hom", e.v_hom_hat)
                .opt("se_v", e.se_v);
        }
    }
    if axis == Axis::PhotonNumber {
        rec.float("eta_mu", point.detector_c.eta * x);
    }
    Ok(rec)
}

/// One row per sweep step, evaluated in parallel and emitted in axis order.
pub fn run_sweep(cfg: &ExperimentConfig, format: Format) -> Result<String, CliError> {
    cfg.validate_sweep()?;
    cfg.setup()?;
    let rows = cfg
        .sweep
        .values()
        .into_par_iter()
        .enumerate()
        .map(|(i, x)| sweep_point(cfg, i, x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(render_table(&rows, format))
}

/// Monte Carlo estimate, optionally writing the run's time-tag stream and
/// the detector-C interval histogram (one bin per gate period).
pub fn run_simulate(
    cfg: &ExperimentConfig,
    format: Format,
    timetags: Option<&Path>,
    histogram: Option<&Path>,
) -> Result<String, CliError> {
    let sim = cfg.sim_config()?;
    let e = run_montecarlo(cfg)?;
    if let Some(path) = timetags {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        write_timetags_for(&sim, std::io::BufWriter::new(file))?;
    }
    if let Some(path) = histogram {
        let h = generate_interval_histogram(&sim, sim.gate_period())?;
        write_file(path, &h.to_csv())?;
    }
    let t = &e.tallies;
    let period = sim.gate_period();
    let mut rec = Record::default();
    rec.float("p_coin_hat", e.p_coin_hat)
        .float("p_c_hat", e.p_c_hat)
        .float("p_d_hat", e.p_d_hat)
        .float("se_coin", e.se_coin)
        .float("se_c", e.se_c)
        .float("se_d", e.se_d)
        .opt("v_hom_hat", e.v_hom_hat)
        .opt("se_v", e.se_v)
        .push("n_open_pairs", e.n_open_pairs)
        .push("coincidences", t.coincidences)
        .push("singles_c", t.singles_c)
        .push("singles_d", t.singles_d)
        .push("n_gates", t.n_gates)
        .push("clicks_c", t.clicks[0])
        .push("clicks_d", t.clicks[1])
        .float("rate_c_hz", t.detection_rate(Port::C, period))
        .float("rate_d_hz", t.detection_rate(Port::D, period))
        .push("seed", cfg.seed);
    Ok(rec.render(format))
}

pub fn run_fit(histogram_csv: &str, format: Format) -> Result<String, CliError> {
    let h = IntervalHistogram::from_csv(histogram_csv)?;
    let fit = fit_afterpulse(&h)?;
    let mut rec = Record::default();
    rec.float("p0", fit.params.p0())
        .float("tau_us", fit.params.tau() * 1e6)
        .float("background", fit.background)
        .float("residual", fit.residual)
        .float("weighted_residual", fit.weighted_residual)
        .push("detections", h.total());
    Ok(rec.render(format))
}

pub fn coincidence_report<R: BufRead>(
    reader: R,
    cfg: &ExperimentConfig,
) -> Result<CoincidenceReport, CliError> {
    let (gate, pair, coinc) = cfg.windows()?;
    let records = parse_timetags(reader)?;
    Ok(extract_coincidences(&records, gate, pair, coinc)?)
}

pub fn run_analyze<R: BufRead>(
    reader: R,
    cfg: &ExperimentConfig,
    format: Format,
) -> Result<String, CliError> {
    let r = coincidence_report(reader, cfg)?;
    Ok(match format {
        Format::Csv => r.to_csv(),
        Format::Text => r.to_key_value(),
        Format::Json => pretty(&json!(r)),
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
#[allow(clippy::field_reassign_with_default)]
mod tests {
    use super::*;

    #[test]
    fn visibility_formats() {
        let mut cfg = ExperimentConfig::default();
        cfg.detector_c.dark_count = 0.0;
        cfg.detector_d.dark_count = 0.0;
        let csv = run_visibility(&cfg, Format::Csv).unwrap();
        assert_eq!(
            csv,
            "p_coin,p_c,p_d,v_hom\n0.0009681516419,0.04351848319,0.04351848319,0.4887940657\n"
        );
        let text = run_visibility(&cfg, Format::Text).unwrap();
        assert!(text.ends_with("v_hom = 0.4887940657\n"));
        let json: Value =
            serde_json::from_str(&run_visibility(&cfg, Format::Json).unwrap()).unwrap();
        assert!((json["v_hom"].as_f64().unwrap() - 0.488_794_065_705_648).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_inputs_show_no_interference() {
        let mut cfg = ExperimentConfig::default();
        cfg.cos_phi = 0.0;
        let csv = run_visibility(&cfg, Format::Csv).unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(",0"), "{csv}");
    }

    #[test]
    fn sweep_rows_in_axis_order() {
        let mut cfg = ExperimentConfig::default();
        cfg.sweep.steps = 7;
        let out = run_sweep(&cfg, Format::Csv).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "axis_value,p_coin,p_c,p_d,v_hom");
        assert_eq!(lines.len(), 8);
        let xs: Vec<f64> = lines[1..]
            .iter()
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(xs[0], 0.1);
        assert_eq!(xs[6], 10.0);
    }

    #[test]
    fn montecarlo_sweep_has_error_column() {
        let mut cfg = ExperimentConfig::default();
        cfg.mode = Mode::MonteCarlo;
        cfg.n_gates = 20_000;
        cfg.sweep = crate::config::SweepSpec {
            axis: Axis::PhotonNumber,
            start: 0.2,
            stop: 0.6,
            steps: 3,
        };
        let out = run_sweep(&cfg, Format::Csv).unwrap();
        assert!(out.starts_with("axis_value,p_coin,p_c,p_d,v_hom,se_v,eta_mu\n"));
        assert_eq!(out, run_sweep(&cfg, Format::Csv).unwrap());
        let json: Value = serde_json::from_str(&run_sweep(&cfg, Format::Json).unwrap()).unwrap();
        assert_eq!(json.as_array().unwrap().len(), 3);
    }
}

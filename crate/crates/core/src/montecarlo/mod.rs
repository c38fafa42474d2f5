//! Gate-by-gate Monte Carlo of the two gated detectors behind the beam
//! splitter.
//!
//! Each gate draws fresh input phases, splits the light, and lets every
//! armed detector click with probability `1 - (1-eta)^m (1-d) (1-p_ap)`
//! for `m` Poisson photons and after-pulse probability `p_ap`. A click
//! disarms the detector for [`GatingConfig::gates_per_dead_time`] gates.
//! Estimates count only gates in which both detectors were armed.
//!
//! [`simulate`], [`generate_interval_histogram`] and [`generate_timetags`]
//! all run the same timeline, so for one seed they see the same clicks.

mod rng;

pub use rng::{derive_seed, SimRng};

use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::afterpulse::{AfterpulseParams, GatingConfig, IntervalHistogram};
use crate::error::{HomError, Result};
use crate::model::{output_means_at, BeamSplitter, DetectorPair, SourcePair};
use crate::stats;
use crate::timestamps::{self, Channel, TimeTagRecord, TICK_SECONDS};

/// How earlier avalanches combine into the after-pulse probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AfterpulseMode {
    /// Only the latest avalanche of the detector contributes.
    #[default]
    MostRecent,
    /// Every earlier avalanche contributes independently.
    Superposed,
}

/// Output port, and the detector behind it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Port {
    C,
    D,
}

impl Port {
    fn index(self) -> usize {
        match self {
            Port::C => 0,
            Port::D => 1,
        }
    }
}

/// Everything one simulation run needs. Index 0 of the per-detector arrays
/// is detector C, index 1 detector D.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub source: SourcePair,
    pub bs: BeamSplitter,
    pub det: DetectorPair,
    pub gating: [GatingConfig; 2],
    pub ap: [AfterpulseParams; 2],
    pub n_gates: u64,
    pub seed: u64,
    pub ap_mode: AfterpulseMode,
}

impl SimConfig {
    /// Both detectors share `gating`, no after-pulsing, most-recent mode.
    pub fn new(
        source: SourcePair,
        bs: BeamSplitter,
        det: DetectorPair,
        gating: GatingConfig,
        n_gates: u64,
        seed: u64,
    ) -> Self {
        Self {
            source,
            bs,
            det,
            gating: [gating; 2],
            ap: [AfterpulseParams::none(); 2],
            n_gates,
            seed,
            ap_mode: AfterpulseMode::MostRecent,
        }
    }

    pub fn with_afterpulse(mut self, ap_c: AfterpulseParams, ap_d: AfterpulseParams) -> Self {
        self.ap = [ap_c, ap_d];
        self
    }

    pub fn with_mode(mut self, mode: AfterpulseMode) -> Self {
        self.ap_mode = mode;
        self
    }

    /// The two detectors are triggered by the same clock.
    pub fn validate(&self) -> Result<()> {
        let [gc, gd] = &self.gating;
        if gc.gate_period() != gd.gate_period() {
            return Err(HomError::InvalidSimConfig(format!(
                "detectors must share one gate period, got {:e} s and {:e} s",
                gc.gate_period(),
                gd.gate_period()
            )));
        }
        Ok(())
    }

    pub fn gate_period(&self) -> f64 {
        self.gating[0].gate_period()
    }
}

/// Raw counts of one run; pooling replicas adds them up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SimTallies {
    pub n_gates: u64,
    /// gates with both detectors armed
    pub open_pairs: u64,
    pub singles_c: u64,
    pub singles_d: u64,
    pub coincidences: u64,
    /// all clicks per detector, armed partner or not
    pub clicks: [u64; 2],
    /// gates in which each detector was armed
    pub armed: [u64; 2],
}

impl SimTallies {
    fn record(&mut self, ev: &GateEvent) {
        self.n_gates += 1;
        for i in 0..2 {
            self.armed[i] += ev.armed[i] as u64;
            self.clicks[i] += ev.click[i] as u64;
        }
        if ev.armed[0] && ev.armed[1] {
            self.open_pairs += 1;
            self.singles_c += ev.click[0] as u64;
            self.singles_d += ev.click[1] as u64;
            self.coincidences += (ev.click[0] && ev.click[1]) as u64;
        }
    }

    pub fn merge(mut self, o: &SimTallies) -> Self {
        self.n_gates += o.n_gates;
        self.open_pairs += o.open_pairs;
        self.singles_c += o.singles_c;
        self.singles_d += o.singles_d;
        self.coincidences += o.coincidences;
        for i in 0..2 {
            self.clicks[i] += o.clicks[i];
            self.armed[i] += o.armed[i];
        }
        self
    }

    /// Detection rate of one detector in clicks per second of run time.
    pub fn detection_rate(&self, port: Port, gate_period: f64) -> f64 {
        if self.n_gates == 0 {
            return 0.0;
        }
        self.clicks[port.index()] as f64 / (self.n_gates as f64 * gate_period)
    }
}

/// Per-gate estimates over the gates where both detectors were armed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEstimate {
    pub p_coin_hat: f64,
    pub p_c_hat: f64,
    pub p_d_hat: f64,
    pub se_coin: f64,
    pub se_c: f64,
    pub se_d: f64,
    /// `None` if a singles count is zero.
    pub v_hom_hat: Option<f64>,
    pub se_v: Option<f64>,
    pub n_open_pairs: u64,
    pub tallies: SimTallies,
}

impl SimEstimate {
    pub fn from_tallies(t: SimTallies) -> Self {
        let n = t.open_pairs;
        let frac = |k: u64| if n == 0 { 0.0 } else { k as f64 / n as f64 };
        let vis = stats::visibility_estimate(n, t.singles_c, t.singles_d, t.coincidences);
        Self {
            p_coin_hat: frac(t.coincidences),
            p_c_hat: frac(t.singles_c),
            p_d_hat: frac(t.singles_d),
            se_coin: stats::binomial_se(t.coincidences, n),
            se_c: stats::binomial_se(t.singles_c, n),
            se_d: stats::binomial_se(t.singles_d, n),
            v_hom_hat: vis.map(|v| v.0),
            se_v: vis.map(|v| v.1),
            n_open_pairs: n,
            tallies: t,
        }
    }
}

/// What happened in one gate.
#[derive(Debug, Clone, Copy)]
struct GateEvent {
    k: u64,
    armed: [bool; 2],
    click: [bool; 2],
}

/// After-pulse contributions below this are dropped from the superposed
/// history.
const NEGLIGIBLE_AFTERPULSE: f64 = 1e-17;

struct Detector {
    eta: f64,
    dark: f64,
    ap: AfterpulseParams,
    dead_gates: u64,
    gate_period: f64,
    rearm_at: u64,
    last: Option<u64>,
    history: std::collections::VecDeque<u64>,
}

impl Detector {
    fn new(eta: f64, dark: f64, ap: AfterpulseParams, g: &GatingConfig) -> Self {
        Self {
            eta,
            dark,
            ap,
            dead_gates: g.gates_per_dead_time(),
            gate_period: g.gate_period(),
            rearm_at: 0,
            last: None,
            history: Default::default(),
        }
    }

    fn afterpulse(&mut self, k: u64, mode: AfterpulseMode) -> f64 {
        if self.ap.p0() == 0.0 {
            return 0.0;
        }
        let at = |j: u64| self.ap.probability_at((k - j) as f64 * self.gate_period);
        match mode {
            AfterpulseMode::MostRecent => self.last.map_or(0.0, at),
            AfterpulseMode::Superposed => {
                while let Some(&j) = self.history.front() {
                    if at(j) >= NEGLIGIBLE_AFTERPULSE {
                        break;
                    }
                    self.history.pop_front();
                }
                1.0 - self.history.iter().map(|&j| 1.0 - at(j)).product::<f64>()
            }
        }
    }

    fn gate(&mut self, k: u64, mu: f64, mode: AfterpulseMode, rng: &mut SimRng) -> bool {
        let m = rng.poisson(mu);
        let p_ap = self.afterpulse(k, mode);
        let no_click = (1.0 - self.eta).powi(m as i32) * (1.0 - self.dark) * (1.0 - p_ap);
        let click = rng.uniform() >= no_click;
        if click {
            self.rearm_at = k + self.dead_gates;
            self.last = Some(k);
            if mode == AfterpulseMode::Superposed && self.ap.p0() > 0.0 {
                self.history.push_back(k);
            }
        }
        click
    }
}

/// Runs `n_gates` gates of `cfg` with `seed`, handing every gate to `f`.
fn run(cfg: &SimConfig, n_gates: u64, seed: u64, mut f: impl FnMut(&GateEvent)) {
    let mut rng = SimRng::new(seed);
    let d = &cfg.det;
    let mut dets = [
        Detector::new(d.eta_c(), d.dark_c(), cfg.ap[0], &cfg.gating[0]),
        Detector::new(d.eta_d(), d.dark_d(), cfg.ap[1], &cfg.gating[1]),
    ];
    for k in 0..n_gates {
        let theta_a = TAU * rng.uniform();
        let theta_b = TAU * rng.uniform();
        let mu = output_means_at(&cfg.source, &cfg.bs, theta_a - theta_b);
        let mu = [mu.0, mu.1];
        let mut ev = GateEvent {
            k,
            armed: [false; 2],
            click: [false; 2],
        };
        for (i, det) in dets.iter_mut().enumerate() {
            if k >= det.rearm_at {
                ev.armed[i] = true;
                ev.click[i] = det.gate(k, mu[i], cfg.ap_mode, &mut rng);
            }
        }
        f(&ev);
    }
}

/// Tallies of one run without the derived estimates.
pub fn simulate_tallies(cfg: &SimConfig) -> Result<SimTallies> {
    cfg.validate()?;
    let mut t = SimTallies::default();
    run(cfg, cfg.n_gates, cfg.seed, |ev| t.record(ev));
    Ok(t)
}

/// Single-timeline estimate, bit-identical for identical configs.
pub fn simulate(cfg: &SimConfig) -> Result<SimEstimate> {
    simulate_tallies(cfg).map(SimEstimate::from_tallies)
}

/// Splits `cfg.n_gates` over `replicas` independent timelines seeded with
/// [`derive_seed`]`(cfg.seed, i)`, runs them in parallel and pools the
/// tallies. The result does not depend on the thread count.
pub fn simulate_replicas(cfg: &SimConfig, replicas: u64) -> Result<SimEstimate> {
    cfg.validate()?;
    if replicas == 0 {
        return Err(HomError::InvalidSimConfig(
            "at least one replica is needed".into(),
        ));
    }
    let base = cfg.n_gates / replicas;
    let extra = cfg.n_gates % replicas;
    let parts: Vec<SimTallies> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut t = SimTallies::default();
            let n = base + u64::from(i < extra);
            run(cfg, n, derive_seed(cfg.seed, i), |ev| t.record(ev));
            t
        })
        .collect();
    let pooled = parts
        .iter()
        .fold(SimTallies::default(), |acc, t| acc.merge(t));
    Ok(SimEstimate::from_tallies(pooled))
}

/// Histogram of intervals between successive detections of detector C.
pub fn generate_interval_histogram(cfg: &SimConfig, bin_width: f64) -> Result<IntervalHistogram> {
    generate_interval_histogram_for(cfg, Port::C, bin_width)
}

/// [`generate_interval_histogram`] for either detector. Intervals are whole
/// gate periods; bins are `[k w, (k+1) w)` from zero.
pub fn generate_interval_histogram_for(
    cfg: &SimConfig,
    port: Port,
    bin_width: f64,
) -> Result<IntervalHistogram> {
    cfg.validate()?;
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(HomError::InvalidHistogram(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let period = cfg.gate_period();
    let idx = port.index();
    let mut counts: Vec<u64> = Vec::new();
    let mut last: Option<u64> = None;
    run(cfg, cfg.n_gates, cfg.seed, |ev| {
        if !ev.click[idx] {
            return;
        }
        if let Some(prev) = last {
            let dt = (ev.k - prev) as f64 * period;
            // guard exact multiples of the bin width against rounding down
            let bin = (dt / bin_width * (1.0 + 1e-12)).floor() as usize;
            if bin >= counts.len() {
                counts.resize(bin + 1, 0);
            }
            counts[bin] += 1;
        }
        last = Some(ev.k);
    });
    IntervalHistogram::uniform(bin_width, counts)
}

/// Detections land at most this long after their gate opens.
const MAX_DETECTION_DELAY: f64 = 2e-9;

/// Writes the time-tag stream of `cfg`: one gate record per armed gate and
/// one detection record per click, ordered in time. Gate `k` opens at
/// `k T_gat`; detections are spread uniformly over the first
/// `min(gate width, 2 ns)` of their gate by a generator independent of the
/// simulation, so the clicks match [`simulate`] exactly.
pub fn write_timetags_for<W: Write>(cfg: &SimConfig, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| HomError::InvalidSimConfig(format!("write failed: {e}"));
    writeln!(out, "{}", timestamps::HEADER).map_err(io)?;
    let mut failed = None;
    for_each_timetag(cfg, |r| {
        if failed.is_none() {
            if let Err(e) = timestamps::write_record(&mut out, r) {
                failed = Some(e);
            }
        }
    })?;
    match failed {
        Some(e) => Err(io(e)),
        None => out.flush().map_err(io),
    }
}

/// The time-tag stream of `cfg` in memory.
pub fn generate_timetags(cfg: &SimConfig) -> Result<Vec<TimeTagRecord>> {
    let mut v = Vec::new();
    for_each_timetag(cfg, |r| v.push(*r))?;
    Ok(v)
}

fn for_each_timetag(cfg: &SimConfig, mut emit: impl FnMut(&TimeTagRecord)) -> Result<()> {
    cfg.validate()?;
    let period = cfg.gate_period();
    let max_delay = [0, 1].map(|i| {
        let w = cfg.gating[i].gate_width().min(MAX_DETECTION_DELAY);
        timestamps::seconds_to_ticks_floor(w)
    });
    let mut jitter = SimRng::new(derive_seed(cfg.seed, u64::MAX));
    const GATES: [Channel; 2] = [Channel::GateC, Channel::GateD];
    const DETS: [Channel; 2] = [Channel::DetC, Channel::DetD];
    run(cfg, cfg.n_gates, cfg.seed, |ev| {
        let open = (ev.k as f64 * period / TICK_SECONDS).round() as u64;
        let mut dets: [Option<TimeTagRecord>; 2] = [None; 2];
        for i in 0..2 {
            if ev.armed[i] {
                emit(&TimeTagRecord {
                    channel: GATES[i],
                    ticks: open,
                });
            }
            if ev.click[i] {
                let delay = (jitter.uniform() * (max_delay[i] + 1) as f64) as u64;
                dets[i] = Some(TimeTagRecord {
                    channel: DETS[i],
                    ticks: open + delay.min(max_delay[i]),
                });
            }
        }
        if let [Some(a), Some(b)] = dets {
            if b.ticks < a.ticks {
                dets = [Some(b), Some(a)];
            }
        }
        dets.iter().flatten().for_each(&mut emit);
    });
    Ok(())
}

//! Time-tag streams of gate openings and detections, and the empirical
//! coincidence statistics extracted from them.
//!
//! Gates of the two detectors whose openings lie within `pair_window` of
//! each other form a coinciding gate pair. A detection belongs to the most
//! recent gate on its own channel if it falls inside `[open, open + width]`;
//! detections outside every gate are only counted as a diagnostic. A pair
//! with detections on both sides, less than `coincidence_window` apart, is a
//! coincidence. All empirical probabilities are per coinciding gate pair.

mod format;

pub(crate) use format::write_record;
pub use format::{parse_timetags, timetags_to_string, write_timetags, HEADER};

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{HomError, Result};
use crate::numfmt::sig10;
use crate::stats;

/// Time-interval analyzer resolution in picoseconds.
pub const TICK_PS: u64 = 81;
/// Tick duration in seconds.
pub const TICK_SECONDS: f64 = TICK_PS as f64 * 1e-12;

/// Converts seconds to whole ticks, rounding to nearest.
pub fn seconds_to_ticks(t: f64) -> u64 {
    (t / TICK_SECONDS).round() as u64
}

/// Longest whole number of ticks not exceeding `t` seconds.
pub fn seconds_to_ticks_floor(t: f64) -> u64 {
    (t / TICK_SECONDS + 1e-9).floor() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Channel {
    GateC,
    GateD,
    DetC,
    DetD,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::GateC, Channel::GateD, Channel::DetC, Channel::DetD];

    pub fn code(self) -> &'static str {
        match self {
            Channel::GateC => "GC",
            Channel::GateD => "GD",
            Channel::DetC => "DC",
            Channel::DetD => "DD",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Some(match code {
            "GC" => Channel::GateC,
            "GD" => Channel::GateD,
            "DC" => Channel::DetC,
            "DD" => Channel::DetD,
            _ => return None,
        })
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

/// One timestamped event, in units of [`TICK_PS`] picoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimeTagRecord {
    pub channel: Channel,
    pub ticks: u64,
}

/// Counts and empirical probabilities over coinciding gate pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoincidenceReport {
    pub coinciding_gates: u64,
    pub coincidences: u64,
    pub singles_c: u64,
    pub singles_d: u64,
    pub p_coin_emp: f64,
    pub p_c_emp: f64,
    pub p_d_emp: f64,
    /// `None` if either singles count is zero.
    pub v_hom_emp: Option<f64>,
    pub se_v_emp: Option<f64>,
    pub detections_outside_gates: u64,
    pub unpaired_gates_c: u64,
    pub unpaired_gates_d: u64,
}

const REPORT_FIELDS: [&str; 12] = [
    "coinciding_gates",
    "coincidences",
    "singles_c",
    "singles_d",
    "p_coin_emp",
    "p_c_emp",
    "p_d_emp",
    "v_hom_emp",
    "se_v_emp",
    "detections_outside_gates",
    "unpaired_gates_c",
    "unpaired_gates_d",
];

impl CoincidenceReport {
    fn values(&self) -> [String; 12] {
        let opt = |v: Option<f64>| v.map(sig10).unwrap_or_else(|| "nan".into());
        [
            self.coinciding_gates.to_string(),
            self.coincidences.to_string(),
            self.singles_c.to_string(),
            self.singles_d.to_string(),
            sig10(self.p_coin_emp),
            sig10(self.p_c_emp),
            sig10(self.p_d_emp),
            opt(self.v_hom_emp),
            opt(self.se_v_emp),
            self.detections_outside_gates.to_string(),
            self.unpaired_gates_c.to_string(),
            self.unpaired_gates_d.to_string(),
        ]
    }

    /// `key = value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in REPORT_FIELDS.iter().zip(self.values()) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Header line plus one data row.
    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", REPORT_FIELDS.join(","), self.values().join(","))
    }
}

/// Empirical coincidence statistics of a time-tag stream.
///
/// Only the order within each channel matters; any interleaving of the
/// channels gives the same report.
pub fn extract_coincidences(
    records: &[TimeTagRecord],
    gate_width: f64,
    pair_window: f64,
    coincidence_window: f64,
) -> Result<CoincidenceReport> {
    for (name, w) in [
        ("gate_width", gate_width),
        ("pair_window", pair_window),
        ("coincidence_window", coincidence_window),
    ] {
        if !(w > 0.0 && w.is_finite()) {
            return Err(HomError::InvalidGating(format!(
                "{name} must be positive, got {w}"
            )));
        }
    }
    let width = seconds_to_ticks_floor(gate_width);
    let pair = seconds_to_ticks_floor(pair_window);
    let coinc = seconds_to_ticks_floor(coincidence_window);

    let mut by_channel: [Vec<u64>; 4] = Default::default();
    for r in records {
        by_channel[r.channel.index()].push(r.ticks);
    }
    for ch in by_channel.iter_mut() {
        ch.sort_unstable();
    }
    let [gates_c, gates_d, dets_c, dets_d] = by_channel;

    let (first_c, outside_c) = attribute(&gates_c, &dets_c, width);
    let (first_d, outside_d) = attribute(&gates_d, &dets_d, width);

    let (mut i, mut j) = (0usize, 0usize);
    let (mut n, mut k_c, mut k_d, mut k_coin) = (0u64, 0u64, 0u64, 0u64);
    while i < gates_c.len() && j < gates_d.len() {
        let (gc, gd) = (gates_c[i], gates_d[j]);
        if gc.abs_diff(gd) <= pair {
            n += 1;
            let (tc, td) = (first_c[i], first_d[j]);
            k_c += tc.is_some() as u64;
            k_d += td.is_some() as u64;
            if let (Some(tc), Some(td)) = (tc, td) {
                if tc.abs_diff(td) <= coinc {
                    k_coin += 1;
                }
            }
            i += 1;
            j += 1;
        } else if gc < gd {
            i += 1;
        } else {
            j += 1;
        }
    }
    if n == 0 {
        return Err(HomError::NoGates);
    }
    let nf = n as f64;
    let vis = stats::visibility_estimate(n, k_c, k_d, k_coin);
    Ok(CoincidenceReport {
        coinciding_gates: n,
        coincidences: k_coin,
        singles_c: k_c,
        singles_d: k_d,
        p_coin_emp: k_coin as f64 / nf,
        p_c_emp: k_c as f64 / nf,
        p_d_emp: k_d as f64 / nf,
        v_hom_emp: vis.map(|v| v.0),
        se_v_emp: vis.map(|v| v.1),
        detections_outside_gates: outside_c + outside_d,
        unpaired_gates_c: gates_c.len() as u64 - n,
        unpaired_gates_d: gates_d.len() as u64 - n,
    })
}

/// First detection inside each gate, and the number of detections that
/// fall in no gate. Both inputs sorted.
fn attribute(gates: &[u64], dets: &[u64], width: u64) -> (Vec<Option<u64>>, u64) {
    let mut first = vec![None; gates.len()];
    let mut outside = 0u64;
    let mut g = 0usize;
    for &t in dets {
        while g + 1 < gates.len() && gates[g + 1] <= t {
            g += 1;
        }
        match gates.get(g) {
            Some(&open) if open <= t && t - open <= width => {
                first[g].get_or_insert(t);
            }
            _ => outside += 1,
        }
    }
    (first, outside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(channel: Channel, ticks: u64) -> TimeTagRecord {
        TimeTagRecord { channel, ticks }
    }

    const NS: f64 = 1e-9;

    #[test]
    fn aligned_gates_single_coincidence() {
        let recs = vec![
            rec(Channel::GateC, 1000),
            rec(Channel::GateD, 1000),
            rec(Channel::DetC, 1010),
            rec(Channel::DetD, 1020),
        ];
        let r = extract_coincidences(&recs, 7.0 * NS, 7.0 * NS, 5.0 * NS).unwrap();
        assert_eq!(
            (r.coinciding_gates, r.coincidences, r.singles_c, r.singles_d),
            (1, 1, 1, 1)
        );
        assert_eq!(r.p_coin_emp, 1.0);
    }

    #[test]
    fn detections_too_far_apart() {
        // 6 ns apart: 6e-9 / 81e-12 = 74 ticks; window 5 ns = 61 ticks
        let recs = vec![
            rec(Channel::GateC, 0),
            rec(Channel::GateD, 0),
            rec(Channel::DetC, 5),
            rec(Channel::DetD, 5 + 74),
        ];
        let r = extract_coincidences(&recs, 7.0 * NS, 7.0 * NS, 5.0 * NS).unwrap();
        assert_eq!(r.coincidences, 0);
        assert_eq!((r.singles_c, r.singles_d), (1, 1));
    }

    #[test]
    fn no_coinciding_gates() {
        let recs = vec![rec(Channel::GateC, 0), rec(Channel::GateD, 100_000)];
        assert_eq!(
            extract_coincidences(&recs, 7.0 * NS, 7.0 * NS, 5.0 * NS),
            Err(HomError::NoGates)
        );
        assert_eq!(
            extract_coincidences(&[], 7.0 * NS, 7.0 * NS, 5.0 * NS),
            Err(HomError::NoGates)
        );
    }

    #[test]
    fn outside_detections_and_unpaired_gates() {
        let recs = vec![
            rec(Channel::DetC, 3), // before any gate
            rec(Channel::GateC, 100),
            rec(Channel::GateD, 100),
            rec(Channel::DetC, 100 + 500), // after the gate closed
            rec(Channel::GateC, 10_000),   // no partner
            rec(Channel::DetC, 10_001),
            rec(Channel::GateC, 20_000),
            rec(Channel::GateD, 20_002),
            rec(Channel::DetD, 20_010),
            rec(Channel::DetD, 20_011), // second click in the same gate
        ];
        let r = extract_coincidences(&recs, 7.0 * NS, 7.0 * NS, 5.0 * NS).unwrap();
        assert_eq!(r.coinciding_gates, 2);
        assert_eq!(r.singles_c, 0);
        assert_eq!(r.singles_d, 1);
        assert_eq!(r.detections_outside_gates, 2);
        assert_eq!((r.unpaired_gates_c, r.unpaired_gates_d), (1, 0));
        assert_eq!(r.v_hom_emp, None);
    }

    #[test]
    fn windows_must_be_positive() {
        assert!(extract_coincidences(&[], 0.0, 1.0, 1.0).is_err());
        assert!(extract_coincidences(&[], 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn report_serializations() {
        let recs = vec![
            rec(Channel::GateC, 0),
            rec(Channel::GateD, 0),
            rec(Channel::DetC, 1),
            rec(Channel::GateC, 10_000),
            rec(Channel::GateD, 10_000),
            rec(Channel::DetD, 10_001),
        ];
        let r = extract_coincidences(&recs, 7.0 * NS, 7.0 * NS, 5.0 * NS).unwrap();
        assert_eq!(r.v_hom_emp, Some(1.0));
        let kv = r.to_key_value();
        assert!(kv.contains("coinciding_gates = 2\n"));
        assert!(kv.contains("p_c_emp = 0.5\n"));
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("coinciding_gates,coincidences,"));
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    }

    /// A few gates per channel pair with detections scattered around them.
    fn arb_stream() -> impl Strategy<Value = Vec<TimeTagRecord>> {
        proptest::collection::vec(
            (0u64..3, any::<bool>(), any::<bool>(), 0u64..150, 0u64..150),
            1..40,
        )
        .prop_map(|gates| {
            let mut recs = Vec::new();
            for (i, (skew, c, d, dc, dd)) in gates.into_iter().enumerate() {
                let open = i as u64 * 1000;
                recs.push(rec(Channel::GateC, open));
                recs.push(rec(Channel::GateD, open + skew * 40));
                if c {
                    recs.push(rec(Channel::DetC, open + dc));
                }
                if d {
                    recs.push(rec(Channel::DetD, open + dd));
                }
            }
            recs
        })
    }

    proptest! {
        #[test]
        fn wider_window_never_loses_coincidences(recs in arb_stream(), w in 0.1f64..10.0, extra in 0.0f64..10.0) {
            let narrow = extract_coincidences(&recs, 10.0 * NS, 7.0 * NS, w * NS);
            let wide = extract_coincidences(&recs, 10.0 * NS, 7.0 * NS, (w + extra) * NS);
            match (narrow, wide) {
                (Ok(a), Ok(b)) => prop_assert!(b.coincidences >= a.coincidences),
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }

        #[test]
        fn interleaving_does_not_matter(recs in arb_stream(), keys in proptest::collection::vec(any::<u32>(), 200)) {
            // reorder across channels, keeping each channel's own order
            let mut by_channel: [Vec<TimeTagRecord>; 4] = Default::default();
            for r in &recs {
                by_channel[r.channel.index()].push(*r);
            }
            let mut cursors = [0usize; 4];
            let mut shuffled = Vec::with_capacity(recs.len());
            let mut step = 0;
            while shuffled.len() < recs.len() {
                let ch = keys[step % keys.len()] as usize % 4;
                step += 1;
                if cursors[ch] < by_channel[ch].len() {
                    shuffled.push(by_channel[ch][cursors[ch]]);
                    cursors[ch] += 1;
                }
            }
            let a = extract_coincidences(&recs, 7.0 * NS, 7.0 * NS, 5.0 * NS);
            let b = extract_coincidences(&shuffled, 7.0 * NS, 7.0 * NS, 5.0 * NS);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn report_invariants(recs in arb_stream()) {
            if let Ok(r) = extract_coincidences(&recs, 7.0 * NS, 7.0 * NS, 5.0 * NS) {
                prop_assert!(r.coincidences <= r.singles_c.min(r.singles_d));
                for p in [r.p_coin_emp, r.p_c_emp, r.p_d_emp] {
                    prop_assert!((0.0..=1.0).contains(&p));
                }
            }
        }
    }
}

use std::fmt::Write as _;

use crate::error::{HomError, Result};

const CSV_HEADER: &str = "bin_start_seconds,count";

/// Histogram of time intervals between successive detections.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalHistogram {
    bin_edges: Vec<f64>,
    counts: Vec<u64>,
}

impl IntervalHistogram {
    pub fn new(bin_edges: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if bin_edges.is_empty() && counts.is_empty() {
            return Ok(Self::empty());
        }
        if bin_edges.len() != counts.len() + 1 {
            return Err(HomError::InvalidHistogram(format!(
                "{} edges for {} bins",
                bin_edges.len(),
                counts.len()
            )));
        }
        if bin_edges.iter().any(|e| !e.is_finite()) {
            return Err(HomError::InvalidHistogram("non-finite bin edge".into()));
        }
        if bin_edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HomError::InvalidHistogram(
                "bin edges must increase strictly".into(),
            ));
        }
        Ok(Self { bin_edges, counts })
    }

    pub fn empty() -> Self {
        Self {
            bin_edges: Vec::new(),
            counts: Vec::new(),
        }
    }

    /// Uniform bins `[k w, (k + 1) w)` for `k = 0..counts.len()`.
    pub fn uniform(bin_width: f64, counts: Vec<u64>) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(HomError::InvalidHistogram(format!(
                "bin width must be positive, got {bin_width}"
            )));
        }
        if counts.is_empty() {
            return Ok(Self::empty());
        }
        let edges = (0..=counts.len()).map(|k| k as f64 * bin_width).collect();
        Self::new(edges, counts)
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_start(&self, i: usize) -> f64 {
        self.bin_edges[i]
    }

    pub fn bin_width(&self, i: usize) -> f64 {
        self.bin_edges[i + 1] - self.bin_edges[i]
    }

    /// Count-weighted mean of the bin start times.
    pub fn mean_interval(&self) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let s: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| c as f64 * self.bin_edges[i])
            .sum();
        Some(s / total as f64)
    }

    /// Two-column CSV with a one-line header.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(24 * (self.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{:e},{}", self.bin_edges[i], c);
        }
        out
    }

    /// Reads [`IntervalHistogram::to_csv`] output. The last bin's upper edge
    /// is not stored; it is taken to be as wide as the bin before it.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut offset = 0usize;
        let mut starts = Vec::new();
        let mut counts = Vec::new();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => offset += h.len() + 1,
            Some((_, h)) => {
                return Err(HomError::ParseError {
                    line: 1,
                    offset: 0,
                    reason: format!("expected header `{CSV_HEADER}`, found `{h}`"),
                })
            }
            None => return Ok(Self::empty()),
        }
        for (idx, line) in lines {
            let here = offset;
            offset += line.len() + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let err = |reason: String| HomError::ParseError {
                line: idx + 1,
                offset: here,
                reason,
            };
            let (start, count) = trimmed
                .split_once(',')
                .ok_or_else(|| err("expected two comma-separated fields".into()))?;
            let start: f64 = start
                .trim()
                .parse()
                .map_err(|e| err(format!("bad bin start `{start}`: {e}")))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|e| err(format!("bad count `{count}`: {e}")))?;
            starts.push(start);
            counts.push(count);
        }
        match starts.len() {
            0 => Ok(Self::empty()),
            1 => Err(HomError::InvalidHistogram(
                "a single-bin CSV does not determine the bin width".into(),
            )),
            n => {
                let last_width = starts[n - 1] - starts[n - 2];
                let mut edges = starts;
                edges.push(edges[n - 1] + last_width);
                Self::new(edges, counts)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(IntervalHistogram::new(vec![0.0, 1.0], vec![1, 2]).is_err());
        assert!(IntervalHistogram::new(vec![0.0, 1.0, 1.0], vec![1, 2]).is_err());
        assert!(IntervalHistogram::uniform(0.0, vec![1]).is_err());
        assert!(IntervalHistogram::uniform(1.0, vec![]).unwrap().is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let h = IntervalHistogram::uniform(5e-7, vec![0, 10, 7, 3, 0, 1]).unwrap();
        let text = h.to_csv();
        assert!(text.starts_with("bin_start_seconds,count\n"));
        let back = IntervalHistogram::from_csv(&text).unwrap();
        assert_eq!(back.counts(), h.counts());
        for (a, b) in back.bin_edges().iter().zip(h.bin_edges()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1e-12));
        }
    }

    #[test]
    fn csv_errors_carry_location() {
        let err =
            IntervalHistogram::from_csv("bin_start_seconds,count\n0,1\n1e-6,x\n").unwrap_err();
        match err {
            HomError::ParseError { line, offset, .. } => {
                assert_eq!(line, 3);
                assert_eq!(offset, 28);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(IntervalHistogram::from_csv("t,n\n").is_err());
    }

    #[test]
    fn mean_interval() {
        let h = IntervalHistogram::uniform(1.0, vec![0, 2, 2]).unwrap();
        assert_eq!(h.mean_interval(), Some(1.5));
        assert_eq!(IntervalHistogram::empty().mean_interval(), None);
    }
}

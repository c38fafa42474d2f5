//! Extraction of `(p0, tau)` from a histogram of intervals between
//! successive detections.
//!
//! Bins are taken to be one gate period wide, so bin `j` (starting at
//! `t_j`) is one armed gate. A detection at interval `t_j` needs a click in
//! that gate and no click in the gates before it:
//!
//! ```text
//! count_j = A (p_b + p0 e^{-t_j/tau}) prod_{i<j} (1 - p_b - p0 e^{-t_i/tau})
//! ```
//!
//! where `p_b` is the per-gate click probability from light and dark counts.
//! Bins before the first non-empty one are the dead time and are skipped.
//! The log of this model is fitted to the log counts by weighted least
//! squares (weights = counts, the inverse variance of a log count), with
//! `ln A` profiled out in closed form.

use serde::Serialize;

use super::{AfterpulseParams, IntervalHistogram};
use crate::error::{HomError, Result};

const MIN_NONEMPTY_BINS: usize = 10;
const SPAN_IN_TAU_GUESSES: f64 = 3.0;
const INITIAL_P0: f64 = 0.01;
const MAX_P0: f64 = 0.5;
const MIN_BACKGROUND: f64 = 1e-9;
const MAX_BACKGROUND: f64 = 0.5;

/// Result of [`fit_afterpulse`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AfterpulseFit {
    pub params: AfterpulseParams,
    /// Per-gate click probability not caused by after-pulsing.
    pub background: f64,
    /// Sum of squared residuals of the log counts (unweighted).
    pub residual: f64,
    /// The minimized, count-weighted objective.
    pub weighted_residual: f64,
}

struct LogCounts {
    /// bin start times, from the first non-empty bin on
    t: Vec<f64>,
    /// ln(count), meaningful where `w > 0`
    y: Vec<f64>,
    /// counts as weights; empty bins carry zero weight but still enter the
    /// survival product
    w: Vec<f64>,
    w_sum: f64,
}

impl LogCounts {
    fn new(h: &IntervalHistogram) -> Result<Self> {
        let counts = h.counts();
        let nonempty = counts.iter().filter(|&&c| c > 0).count();
        if nonempty < MIN_NONEMPTY_BINS {
            return Err(HomError::InsufficientData(format!(
                "{nonempty} non-empty bins, need at least {MIN_NONEMPTY_BINS}"
            )));
        }
        let first = counts.iter().position(|&c| c > 0).unwrap_or(0);
        let last = counts.iter().rposition(|&c| c > 0).unwrap_or(0);
        let span = h.bin_edges()[last + 1] - h.bin_start(first);
        let tau_guess = h.mean_interval().unwrap_or(0.0);
        if span < SPAN_IN_TAU_GUESSES * tau_guess {
            return Err(HomError::InsufficientData(format!(
                "histogram spans {span:e} s, less than {SPAN_IN_TAU_GUESSES} x mean interval {tau_guess:e} s"
            )));
        }
        let range = first..=last;
        let t: Vec<f64> = range.clone().map(|i| h.bin_start(i)).collect();
        let w: Vec<f64> = range.clone().map(|i| counts[i] as f64).collect();
        let y = w
            .iter()
            .map(|&c| if c > 0.0 { c.ln() } else { 0.0 })
            .collect();
        let w_sum = w.iter().sum();
        Ok(Self { t, y, w, w_sum })
    }

    /// Model log counts without the normalization; `None` if a hazard
    /// leaves (0, 1).
    fn model_into(&self, background: f64, p0: f64, tau: f64, out: &mut Vec<f64>) -> bool {
        out.clear();
        let mut log_survival = 0.0;
        for &t in &self.t {
            let hazard = background + p0 * (-t / tau).exp();
            if !(hazard > 0.0 && hazard < 1.0) {
                return false;
            }
            out.push(hazard.ln() + log_survival);
            log_survival += (-hazard).ln_1p();
        }
        true
    }

    /// (weighted objective, unweighted residual) with `ln A` profiled out.
    fn evaluate(&self, background: f64, p0: f64, tau: f64, scratch: &mut Vec<f64>) -> (f64, f64) {
        if !self.model_into(background, p0, tau, scratch) {
            return (f64::INFINITY, f64::INFINITY);
        }
        let offset = self
            .w
            .iter()
            .zip(&self.y)
            .zip(scratch.iter())
            .map(|((w, y), m)| w * (y - m))
            .sum::<f64>()
            / self.w_sum;
        let mut weighted = 0.0;
        let mut plain = 0.0;
        for ((w, y), m) in self.w.iter().zip(&self.y).zip(scratch.iter()) {
            if *w > 0.0 {
                let r = y - offset - m;
                weighted += w * r * r;
                plain += r * r;
            }
        }
        (weighted, plain)
    }

    /// Best background for fixed `(p0, tau)` by golden-section search on
    /// `ln p_b`.
    fn profile_background(&self, p0: f64, tau: f64, scratch: &mut Vec<f64>) -> (f64, f64) {
        let upper = (MAX_BACKGROUND).min(1.0 - p0 - 1e-12);
        if upper <= MIN_BACKGROUND {
            return (MIN_BACKGROUND, f64::INFINITY);
        }
        let mut f = |lb: f64| self.evaluate(lb.exp(), p0, tau, scratch).0;
        let (lb, val) = golden_section(&mut f, MIN_BACKGROUND.ln(), upper.ln(), 60);
        (lb.exp(), val)
    }
}

/// Least-squares fit of the survival-weighted after-pulse model.
///
/// Starts from a grid over `(tau, p0)` that contains the histogram mean
/// interval and `p0 = 0.01`, profiles the background at each grid point,
/// then polishes the best point with a Nelder-Mead simplex. Deterministic.
pub fn fit_afterpulse(h: &IntervalHistogram) -> Result<AfterpulseFit> {
    let data = LogCounts::new(h)?;
    let mut scratch = Vec::with_capacity(data.t.len());

    let (bg_only, bg_only_obj) = data.profile_background(0.0, 1.0, &mut scratch);

    let first_width = h.bin_width(h.counts().iter().position(|&c| c > 0).unwrap_or(0));
    let tau_lo = 0.25 * first_width;
    let tau_hi = data
        .t
        .last()
        .copied()
        .unwrap_or(first_width)
        .max(2.0 * tau_lo);
    let tau_guess = h
        .mean_interval()
        .unwrap_or(first_width)
        .clamp(tau_lo, tau_hi);

    let mut taus: Vec<f64> = (0..32)
        .map(|i| tau_lo * (tau_hi / tau_lo).powf(i as f64 / 31.0))
        .collect();
    taus.push(tau_guess);
    let mut p0s: Vec<f64> = (0..=25)
        .map(|i| MAX_P0 * (i as f64 / 25.0).powi(2))
        .collect();
    p0s.push(INITIAL_P0);

    let mut best = (f64::INFINITY, bg_only, 0.0, tau_guess);
    for &tau in &taus {
        for &p0 in &p0s {
            let (bg, obj) = data.profile_background(p0, tau, &mut scratch);
            if obj < best.0 {
                best = (obj, bg, p0, tau);
            }
        }
    }

    let (_, bg0, p00, tau0) = best;
    let objective = |x: &[f64; 3], scratch: &mut Vec<f64>| {
        let (bg, p0, tau) = unpack(x);
        if !(MIN_BACKGROUND..=MAX_BACKGROUND).contains(&bg) || p0 > MAX_P0 {
            return f64::INFINITY;
        }
        data.evaluate(bg, p0, tau, scratch).0
    };
    let start = [bg0.ln(), p00, tau0.ln()];
    let steps = [0.05, 0.2 * p00.max(0.005), 0.2];
    let (mut x, mut fx) = nelder_mead(|x| objective(x, &mut scratch), start, steps, 4000, 1e-13);
    // one restart around the optimum to get off a collapsed simplex
    let steps = [0.01, 0.05 * unpack(&x).1.max(0.001), 0.05];
    let (x2, fx2) = nelder_mead(|x| objective(x, &mut scratch), x, steps, 4000, 1e-14);
    if fx2 <= fx {
        x = x2;
        fx = fx2;
    }

    let (background, p0, tau) = unpack(&x);
    if !fx.is_finite() || !(tau > 0.0) || !tau.is_finite() {
        return Err(HomError::FitDiverged(format!(
            "objective {fx} at tau={tau:e}"
        )));
    }
    if fx > bg_only_obj * (1.0 + 1e-12) + 1e-12 {
        return Err(HomError::FitDiverged(format!(
            "fit objective {fx} is worse than the background-only model {bg_only_obj}"
        )));
    }
    let (_, residual) = data.evaluate(background, p0, tau, &mut scratch);
    Ok(AfterpulseFit {
        params: AfterpulseParams::new(p0, tau)?,
        background,
        residual,
        weighted_residual: fx,
    })
}

fn unpack(x: &[f64; 3]) -> (f64, f64, f64) {
    (x[0].exp(), x[1].abs(), x[2].exp())
}

fn golden_section(
    f: &mut impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    iters: usize,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2) on a 3-vector.
fn nelder_mead(
    mut f: impl FnMut(&[f64; 3]) -> f64,
    start: [f64; 3],
    steps: [f64; 3],
    max_iter: usize,
    ftol: f64,
) -> ([f64; 3], f64) {
    const N: usize = 3;
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((start, f(&start)));
    for i in 0..N {
        let mut p = start;
        p[i] += steps[i];
        simplex.push((p, f(&p)));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[N].1);
        if (worst - best).abs() <= ftol * (best.abs() + worst.abs()) + 1e-300 {
            break;
        }
        let mut centroid = [0.0; N];
        for (p, _) in &simplex[..N] {
            for k in 0..N {
                centroid[k] += p[k] / N as f64;
            }
        }
        let along = |coef: f64| {
            let mut q = [0.0; N];
            for k in 0..N {
                q[k] = centroid[k] + coef * (simplex[N].0[k] - centroid[k]);
            }
            q
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[N].1 {
                let xc = along(-0.5);
                (xc, f(&xc))
            } else {
                let xc = along(0.5);
                (xc, f(&xc))
            };
            if fc < simplex[N].1.min(fr) {
                simplex[N] = (xc, fc);
            } else {
                let anchor = simplex[0].0;
                for (p, fp) in simplex.iter_mut().skip(1) {
                    for k in 0..N {
                        p[k] = anchor[k] + 0.5 * (p[k] - anchor[k]);
                    }
                    *fp = f(p);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

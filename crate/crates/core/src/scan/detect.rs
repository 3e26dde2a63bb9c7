//! Candidate critical points from sampled curves `λ ↦ value`.
//!
//! All three detectors compare a local feature with a length-weighted
//! median of the same feature over the whole curve, so refined stretches of
//! the grid do not skew the reference scale.

use std::fmt;

use super::diff::finite_diff;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CandidateKind {
    Jump,
    DerivativePeak,
    Kink,
}

impl fmt::Display for CandidateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateKind::Jump => "jump",
            CandidateKind::DerivativePeak => "derivative-peak",
            CandidateKind::Kink => "kink",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub kind: CandidateKind,
    /// Name of the curve the candidate was found on.
    pub series: String,
    pub lambda: f64,
    pub window: (f64, f64),
    /// Jump size, peak `|dv/dλ|`, or slope change, depending on `kind`.
    pub magnitude: f64,
    /// Feature divided by the reference scale.
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorConfig {
    /// Interval slope over the median slope.
    pub jump_threshold: f64,
    /// Smallest absolute step that can count as a jump.
    pub min_jump: f64,
    /// Peak `|dv/dλ|` over its median.
    pub peak_threshold: f64,
    /// Slope change at an extremum over the median slope change.
    pub kink_threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            jump_threshold: 10.0,
            min_jump: 1e-4,
            peak_threshold: 5.0,
            kink_threshold: 3.0,
        }
    }
}

/// Median of `v` where entry `i` carries weight `w[i]`.
pub fn weighted_median(v: &[f64], w: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    for &i in &idx {
        acc += w[i];
        if acc >= 0.5 * total {
            return v[i];
        }
    }
    idx.last().map(|&i| v[i]).unwrap_or(0.0)
}

/// Half the distance between each node's neighbours.
fn node_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { x[0] } else { x[i - 1] };
            let hi = if i + 1 == n { x[n - 1] } else { x[i + 1] };
            0.5 * (hi - lo)
        })
        .collect()
}

fn ratio(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else if x > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

pub fn detect_jumps(series: &str, x: &[f64], v: &[f64], cfg: &DetectorConfig) -> Vec<Candidate> {
    let m = x.len().saturating_sub(1);
    if m < 2 {
        return Vec::new();
    }
    let h: Vec<f64> = (0..m).map(|i| x[i + 1] - x[i]).collect();
    let s: Vec<f64> = (0..m).map(|i| (v[i + 1] - v[i]).abs() / h[i]).collect();
    let scale = weighted_median(&s, &h);
    let mut out = Vec::new();
    for i in 0..m {
        let left_ok = i == 0 || s[i] >= s[i - 1];
        let right_ok = i + 1 == m || s[i] > s[i + 1];
        let d = (v[i + 1] - v[i]).abs();
        let r = ratio(s[i], scale);
        if left_ok && right_ok && d >= cfg.min_jump && r > cfg.jump_threshold {
            out.push(Candidate {
                kind: CandidateKind::Jump,
                series: series.to_string(),
                lambda: 0.5 * (x[i] + x[i + 1]),
                window: (x[i], x[i + 1]),
                magnitude: d,
                ratio: r,
            });
        }
    }
    out
}

pub fn detect_derivative_peaks(
    series: &str,
    x: &[f64],
    v: &[f64],
    cfg: &DetectorConfig,
) -> Result<Vec<Candidate>> {
    let a: Vec<f64> = finite_diff(x, v, 1)?.into_iter().map(f64::abs).collect();
    let scale = weighted_median(&a, &node_weights(x));
    let mut out = Vec::new();
    for i in 1..x.len() - 1 {
        let r = ratio(a[i], scale);
        if a[i] >= a[i - 1] && a[i] > a[i + 1] && r > cfg.peak_threshold {
            out.push(Candidate {
                kind: CandidateKind::DerivativePeak,
                series: series.to_string(),
                lambda: x[i],
                window: (x[i - 1], x[i + 1]),
                magnitude: a[i],
                ratio: r,
            });
        }
    }
    Ok(out)
}

pub fn detect_kinks(series: &str, x: &[f64], v: &[f64], cfg: &DetectorConfig) -> Vec<Candidate> {
    let n = x.len();
    if n < 3 {
        return Vec::new();
    }
    let s: Vec<f64> = (0..n - 1).map(|i| (v[i + 1] - v[i]) / (x[i + 1] - x[i])).collect();
    let c: Vec<f64> = (1..n - 1).map(|i| (s[i] - s[i - 1]).abs()).collect();
    let w: Vec<f64> = (1..n - 1).map(|i| 0.5 * (x[i + 1] - x[i - 1])).collect();
    let scale = weighted_median(&c, &w);
    let mut out = Vec::new();
    for i in 1..n - 1 {
        let ci = c[i - 1];
        let extremum = (s[i - 1] > 0.0 && s[i] < 0.0) || (s[i - 1] < 0.0 && s[i] > 0.0);
        let r = ratio(ci, scale);
        if extremum && r > cfg.kink_threshold {
            out.push(Candidate {
                kind: CandidateKind::Kink,
                series: series.to_string(),
                lambda: x[i],
                window: (x[i - 1], x[i + 1]),
                magnitude: ci,
                ratio: r,
            });
        }
    }
    out
}

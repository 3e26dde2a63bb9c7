//! Two-time correlation series, Leggett-Garg functions and their
//! violation summaries.
//!
//! `K(τ) = C(2τ) − 2C(τ)`. Macrorealism requires `K ≥ −1`; the summary of a
//! series is its minimum `L_max = min_τ K(τ)`.

mod stc;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

pub use stc::{stc, stc_ed, stc_mps, GroundState};

use crate::error::{Error, Result};
use crate::model::{Direction, SpinHamiltonian};
use crate::output::{fmt_f64, fmt_opt, Provenance};

/// Margin below −1 required before a value counts as a violation, so that
/// rounding noise around an exact `K = −1` is not reported.
pub const VIOLATION_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Ed,
    Mps,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Ed => "ed",
            Engine::Mps => "mps",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMeta {
    pub model: String,
    pub lambda_name: String,
    pub lambda: f64,
    pub n: usize,
    pub k: usize,
    pub alpha: Direction,
    pub engine: Engine,
    pub chi: Option<usize>,
    pub dt: Option<f64>,
}

impl SeriesMeta {
    pub fn for_hamiltonian(
        h: &SpinHamiltonian,
        k: usize,
        alpha: Direction,
        engine: Engine,
        chi: Option<usize>,
        dt: Option<f64>,
    ) -> Self {
        let (model, lambda_name, lambda) = match h.tag() {
            Some(t) => (t.family.clone(), t.lambda_name.clone(), t.lambda),
            None => ("general".to_string(), String::new(), f64::NAN),
        };
        Self {
            model,
            lambda_name,
            lambda,
            n: h.n_sites(),
            k,
            alpha,
            engine,
            chi,
            dt,
        }
    }
}

/// `C(t)` sampled on a time grid starting at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: SeriesMeta,
    /// Largest imaginary part seen in the symmetrized correlator.
    pub imag_residue: f64,
}

impl CorrelationSeries {
    /// Validates `C(0) = 1` and `|C| ≤ 1` within the documented slack.
    pub fn new(times: Vec<f64>, values: Vec<f64>, meta: SeriesMeta, imag_residue: f64) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::Validation(format!(
                "series needs matching nonempty grids, got {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::Validation(format!("time grid must start at 0, got {}", times[0])));
        }
        if (values[0] - 1.0).abs() > 1e-8 {
            return Err(Error::Validation(format!("C(0) = {} differs from 1", values[0])));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0 + 1e-6)) {
            return Err(Error::Validation(format!("|C(t={})| = {} exceeds 1", times[i], v.abs())));
        }
        Ok(Self {
            times,
            values,
            meta,
            imag_residue,
        })
    }

    /// Value at the grid point closest to `t`, if within half a step.
    pub fn at(&self, t: f64) -> Option<f64> {
        let (i, d) = self
            .times
            .iter()
            .enumerate()
            .map(|(i, &s)| (i, (s - t).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        let step = if self.times.len() > 1 { self.times[1] - self.times[0] } else { f64::INFINITY };
        (d <= 0.5 * step.max(1e-12) || d < 1e-12).then(|| self.values[i])
    }
}

/// `K(τ)` on the half grid of a correlation series.
#[derive(Clone, Debug, PartialEq)]
pub struct LgSeries {
    pub taus: Vec<f64>,
    pub k_values: Vec<f64>,
    pub violation_mask: Vec<bool>,
    pub meta: SeriesMeta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LgViolationSummary {
    /// Minimum of `K` over the stored grid.
    pub l_max: f64,
    pub argmin_tau: f64,
    pub violated: bool,
    /// Vertex of the parabola through the minimum and its neighbours.
    pub refined_l_max: f64,
    pub refined_tau: f64,
    /// The grid minimum sits at the first or last point.
    pub boundary_min: bool,
}

/// Checks that `times` is uniform and starts at 0; returns the step.
pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.first() != Some(&0.0) {
        return Err(Error::Validation("grid must start at 0".into()));
    }
    if times.len() < 2 {
        return Ok(0.0);
    }
    let h = times[1] - times[0];
    if !(h > 0.0) {
        return Err(Error::Validation("grid must be increasing".into()));
    }
    for (i, &t) in times.iter().enumerate() {
        if (t - i as f64 * h).abs() > 1e-9 * h.max(t.abs()) {
            return Err(Error::Validation(format!(
                "grid is not uniform: point {i} is {t}, expected {}",
                i as f64 * h
            )));
        }
    }
    Ok(h)
}

/// `K(τ_i) = C(t_{2i}) − 2C(t_i)` for every `i` with `2i` on the grid.
pub fn lg_function(c: &CorrelationSeries) -> Result<LgSeries> {
    uniform_step(&c.times)?;
    let m = (c.times.len() - 1) / 2 + 1;
    let taus = c.times[..m].to_vec();
    let k_values: Vec<f64> = (0..m).map(|i| c.values[2 * i] - 2.0 * c.values[i]).collect();
    let violation_mask = k_values.iter().map(|&k| k < -1.0 - VIOLATION_EPS).collect();
    Ok(LgSeries {
        taus,
        k_values,
        violation_mask,
        meta: c.meta.clone(),
    })
}

/// Grid minimum of `K` with a parabolic refinement.
pub fn lg_max_violation(k: &LgSeries) -> Result<LgViolationSummary> {
    if k.k_values.is_empty() {
        return Err(Error::Validation("empty Leggett-Garg series".into()));
    }
    let v = &k.k_values;
    let mut i = 0;
    for (j, &x) in v.iter().enumerate() {
        if x < v[i] {
            i = j;
        }
    }
    let l_max = v[i];
    let boundary_min = i == 0 || i + 1 == v.len();
    let (refined_l_max, refined_tau) = if boundary_min {
        (l_max, k.taus[i])
    } else {
        let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
        let h = k.taus[i + 1] - k.taus[i];
        let curv = a - 2.0 * b + c;
        if curv > 0.0 {
            let off = 0.5 * (a - c) / curv;
            (b - 0.25 * (a - c) * off, k.taus[i] + off * h)
        } else {
            (l_max, k.taus[i])
        }
    };
    Ok(LgViolationSummary {
        l_max,
        argmin_tau: k.taus[i],
        violated: l_max < -1.0 - VIOLATION_EPS,
        refined_l_max,
        refined_tau,
        boundary_min,
    })
}

/// How per-direction minima are combined into one number.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TotalMode {
    /// The most negative `L_max^α`, i.e. the strongest violation.
    #[default]
    Strongest,
    /// The arithmetic maximum over directions.
    LiteralMax,
}

/// Combines per-direction summaries. Requires at least `z` and `x`.
/// Ties go to the earlier direction in x, y, z order.
pub fn lg_total_max(
    per_alpha: &BTreeMap<Direction, LgViolationSummary>,
    mode: TotalMode,
) -> Result<(f64, Direction)> {
    for need in [Direction::Z, Direction::X] {
        if !per_alpha.contains_key(&need) {
            return Err(Error::Validation(format!(
                "total violation needs direction {need}"
            )));
        }
    }
    let mut best: Option<(f64, Direction)> = None;
    for (&a, s) in per_alpha {
        let better = match (best, mode) {
            (None, _) => true,
            (Some((b, _)), TotalMode::Strongest) => s.l_max < b,
            (Some((b, _)), TotalMode::LiteralMax) => s.l_max > b,
        };
        if better {
            best = Some((s.l_max, a));
        }
    }
    Ok(best.expect("nonempty map"))
}

const SERIES_COLUMNS: [&str; 10] = [
    "model", "N", "chi", "lambda_name", "lambda", "alpha", "t_or_tau", "value", "kind", "engine",
];

fn meta_row(m: &SeriesMeta, t: f64, v: f64, kind: &str) -> [String; 10] {
    [
        m.model.clone(),
        m.n.to_string(),
        fmt_opt(m.chi),
        m.lambda_name.clone(),
        fmt_f64(m.lambda),
        m.alpha.to_string(),
        fmt_f64(t),
        fmt_f64(v),
        kind.to_string(),
        m.engine.to_string(),
    ]
}

/// Writes correlation rows (kind `C`) followed by Leggett-Garg rows
/// (kind `K`), each in the order given.
pub fn write_series_csv(
    w: &mut impl Write,
    prov: &Provenance,
    series: &[CorrelationSeries],
    lg: &[LgSeries],
) -> Result<()> {
    prov.write_header(w)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(SERIES_COLUMNS)?;
    for s in series {
        for (&t, &v) in s.times.iter().zip(&s.values) {
            csv.write_record(meta_row(&s.meta, t, v, "C"))?;
        }
    }
    for s in lg {
        for (&t, &v) in s.taus.iter().zip(&s.k_values) {
            csv.write_record(meta_row(&s.meta, t, v, "K"))?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// One row per (series, τ): the violation mask, plus one summary row per
/// series with `tau` empty.
pub fn write_violation_csv(w: &mut impl Write, prov: &Provenance, lg: &[LgSeries]) -> Result<()> {
    prov.write_header(w)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "model", "N", "lambda_name", "lambda", "alpha", "engine", "tau", "violated", "l_max",
        "argmin_tau", "refined_l_max", "boundary_min",
    ])?;
    for s in lg {
        let m = &s.meta;
        let head = [
            m.model.clone(),
            m.n.to_string(),
            m.lambda_name.clone(),
            fmt_f64(m.lambda),
            m.alpha.to_string(),
            m.engine.to_string(),
        ];
        for (&t, &v) in s.taus.iter().zip(&s.violation_mask) {
            let mut row = head.to_vec();
            row.extend([fmt_f64(t), v.to_string(), String::new(), String::new(), String::new(), String::new()]);
            csv.write_record(row)?;
        }
        let sum = lg_max_violation(s)?;
        let mut row = head.to_vec();
        row.extend([
            String::new(),
            sum.violated.to_string(),
            fmt_f64(sum.l_max),
            fmt_f64(sum.argmin_tau),
            fmt_f64(sum.refined_l_max),
            sum.boundary_min.to_string(),
        ]);
        csv.write_record(row)?;
    }
    csv.flush()?;
    Ok(())
}

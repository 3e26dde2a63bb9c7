//! Parameter sweeps over a model family, critical-point detection on the
//! swept curves, and finite-size scaling of derivative peaks.

mod detect;
mod diff;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};

pub use detect::{
    detect_derivative_peaks, detect_jumps, detect_kinks, weighted_median, Candidate, CandidateKind,
    DetectorConfig,
};
pub use diff::finite_diff;
use rayon::prelude::*;

use crate::correlator::{
    lg_function, lg_max_violation, lg_total_max, stc, Engine, GroundState, LgViolationSummary, TotalMode,
};
use crate::error::{Error, Result};
use crate::model::{Direction, ModelFamily};
use crate::mps::{DmrgConfig, EvolutionConfig};
use crate::output::{fmt_f64, fmt_opt, sha256_hex, Provenance};

/// Bias used on points where the family has a degenerate ground manifold.
pub const BIAS_FIELD: f64 = 1e-8;

/// Caveat attached to every critical-point report.
pub const FINITE_SIZE_CAVEAT: &str = "finite N: discontinuities appear as steep crossovers and \
peaks stay finite; candidates give the window on the swept grid, not an exact critical value";

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub family: ModelFamily,
    pub n: usize,
    /// Strictly increasing λ values.
    pub grid: Vec<f64>,
    /// Times at which C is recorded; multiples of `evolution.dt` within
    /// `[0, evolution.t_max]`.
    pub probe_times: Vec<f64>,
    pub directions: Vec<Direction>,
    /// Probe site, `n/2` when unset.
    pub site: Option<usize>,
    /// Forced engine; by default ED up to 14 sites.
    pub engine: Option<Engine>,
    pub dmrg: DmrgConfig,
    /// Its `dt` and `t_max` also define the time grid of the ED path.
    pub evolution: EvolutionConfig,
    pub total_mode: TotalMode,
    pub workers: usize,
}

impl SweepConfig {
    pub fn new(family: ModelFamily, n: usize, grid: Vec<f64>) -> Self {
        Self {
            family,
            n,
            grid,
            probe_times: Vec::new(),
            directions: vec![Direction::Z, Direction::X],
            site: None,
            engine: None,
            dmrg: DmrgConfig::default(),
            evolution: EvolutionConfig::default(),
            total_mode: TotalMode::Strongest,
            workers: 1,
        }
    }

    pub fn site(&self) -> usize {
        self.site.unwrap_or(self.n / 2)
    }

    fn time_grid(&self) -> Vec<f64> {
        let steps = self.evolution.n_steps();
        (0..=steps).map(|i| i as f64 * self.evolution.dt).collect()
    }

    fn probe_indices(&self) -> Result<Vec<usize>> {
        let dt = self.evolution.dt;
        self.probe_times
            .iter()
            .map(|&t| {
                let i = (t / dt).round();
                if t < 0.0 || (t - i * dt).abs() > 1e-9 * dt.max(t) || i as usize > self.evolution.n_steps() {
                    Err(Error::Validation(format!(
                        "probe time {t} is not a multiple of dt = {dt} within [0, {}]",
                        self.evolution.t_max
                    )))
                } else {
                    Ok(i as usize)
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.directions.is_empty() {
            return Err(Error::Validation("direction list is empty".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::Validation("lambda grid is empty".into()));
        }
        if let Some(w) = self.grid.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(format!(
                "lambda grid must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if self.n == 0 {
            return Err(Error::Validation("n must be positive".into()));
        }
        if self.site() >= self.n {
            return Err(Error::Validation(format!("site {} outside [0, {})", self.site(), self.n)));
        }
        if self.workers == 0 {
            return Err(Error::Validation("workers must be at least 1".into()));
        }
        self.evolution.validate()?;
        self.dmrg.validate()?;
        self.probe_indices()?;
        Ok(())
    }

    /// Canonical `key=value` listing of every field that affects results.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "family={}", self.family);
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "grid={}", list(&self.grid));
        let _ = writeln!(s, "probe_times={}", list(&self.probe_times));
        let dirs: Vec<&str> = self.directions.iter().map(|d| d.as_str()).collect();
        let _ = writeln!(s, "directions={}", dirs.join(","));
        let _ = writeln!(s, "site={}", self.site());
        let _ = writeln!(s, "engine={}", fmt_opt(self.engine));
        let d = &self.dmrg;
        let _ = writeln!(
            s,
            "dmrg=chi_max:{},chi_start:{},energy_tol:{},max_sweeps:{},svd_cutoff:{},bias_warmup:{},bias_warmup_sweeps:{},seed:{}",
            d.chi_max,
            d.chi_start,
            fmt_f64(d.energy_tol),
            d.max_sweeps,
            fmt_f64(d.svd_cutoff),
            fmt_f64(d.bias_warmup),
            d.bias_warmup_sweeps,
            d.seed
        );
        let e = &self.evolution;
        let _ = writeln!(
            s,
            "evolution=dt:{},t_max:{},trotter_order:{},chi_max:{},svd_cutoff:{}",
            fmt_f64(e.dt),
            fmt_f64(e.t_max),
            e.trotter_order,
            e.chi_max,
            fmt_f64(e.svd_cutoff)
        );
        let _ = writeln!(s, "total_mode={:?}", self.total_mode);
        s
    }

    pub fn config_hash(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }
}

/// Outcome of one λ point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointRecord {
    pub lambda: f64,
    pub engine: Engine,
    pub e0: Option<f64>,
    /// False for a failed point or a DMRG run that hit its sweep limit.
    pub converged: bool,
    /// C at each probe time, per direction.
    pub probes: BTreeMap<Direction, Vec<f64>>,
    pub summaries: BTreeMap<Direction, LgViolationSummary>,
    /// Combined minimum and the direction it came from.
    pub total: Option<(f64, Direction)>,
    /// Hex SHA-256 over the full correlation series of all directions.
    pub trajectory_hash: String,
    pub error: Option<String>,
}

impl PointRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    fn failed(lambda: f64, engine: Engine, err: String) -> Self {
        Self {
            lambda,
            engine,
            e0: None,
            converged: false,
            probes: BTreeMap::new(),
            summaries: BTreeMap::new(),
            total: None,
            trajectory_hash: String::new(),
            error: Some(err),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// Sorted by λ.
    pub records: Vec<PointRecord>,
    pub config_hash: String,
}

fn default_engine(cfg: &SweepConfig) -> Engine {
    cfg.engine.unwrap_or(if cfg.n <= crate::model::MAX_DENSE_SITES {
        Engine::Ed
    } else {
        Engine::Mps
    })
}

fn run_point(cfg: &SweepConfig, lambda: f64) -> Result<PointRecord> {
    let h = cfg.family.build(cfg.n, lambda)?;
    let dmrg = DmrgConfig {
        bias_field: cfg.family.needs_bias(lambda).then_some(BIAS_FIELD),
        ..cfg.dmrg.clone()
    };
    let ground = GroundState::compute(&h, cfg.engine, &dmrg)?;
    let times = cfg.time_grid();
    let idx = cfg.probe_indices()?;
    let mut probes = BTreeMap::new();
    let mut summaries = BTreeMap::new();
    let mut bytes = Vec::new();
    for &mu in &cfg.directions {
        let series = stc(&ground, &h, cfg.site(), mu, &times, &cfg.evolution)?;
        for v in &series.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        probes.insert(mu, idx.iter().map(|&i| series.values[i]).collect());
        summaries.insert(mu, lg_max_violation(&lg_function(&series)?)?);
    }
    let total = if summaries.contains_key(&Direction::Z) && summaries.contains_key(&Direction::X) {
        Some(lg_total_max(&summaries, cfg.total_mode)?)
    } else {
        None
    };
    Ok(PointRecord {
        lambda,
        engine: ground.engine(),
        e0: Some(ground.e0()),
        converged: ground.converged(),
        probes,
        summaries,
        total,
        trajectory_hash: sha256_hex(&bytes),
        error: None,
    })
}

fn run_points(cfg: &SweepConfig, lambdas: &[f64], cancel: &AtomicBool) -> Result<Vec<PointRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;
    let engine = default_engine(cfg);
    Ok(pool.install(|| {
        lambdas
            .par_iter()
            .map(|&l| {
                if cancel.load(Ordering::Relaxed) {
                    return PointRecord::failed(l, engine, "cancelled".into());
                }
                run_point(cfg, l).unwrap_or_else(|e| {
                    log::warn!("point {l}: {e}");
                    PointRecord::failed(l, engine, e.to_string())
                })
            })
            .collect()
    }))
}

/// Runs the full pipeline at every grid point. Point failures are recorded
/// in the point, not propagated.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    sweep_with_cancel(cfg, &AtomicBool::new(false))
}

/// [`sweep`] that skips remaining points once `cancel` is set; skipped
/// points carry the error `cancelled`.
pub fn sweep_with_cancel(cfg: &SweepConfig, cancel: &AtomicBool) -> Result<SweepResult> {
    cfg.validate()?;
    let records = run_points(cfg, &cfg.grid, cancel)?;
    Ok(SweepResult {
        config: cfg.clone(),
        records,
        config_hash: cfg.config_hash(),
    })
}

impl SweepResult {
    pub fn lambdas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.lambda).collect()
    }

    /// `(λ, C_μ(probe_times[i]))` over successful points.
    pub fn probe_curve(&self, mu: Direction, i: usize) -> (Vec<f64>, Vec<f64>) {
        self.records
            .iter()
            .filter_map(|r| r.probes.get(&mu).map(|p| (r.lambda, p[i])))
            .unzip()
    }

    /// `(λ, L_max^μ)` over successful points.
    pub fn lmax_curve(&self, mu: Direction) -> (Vec<f64>, Vec<f64>) {
        self.records
            .iter()
            .filter_map(|r| r.summaries.get(&mu).map(|s| (r.lambda, s.l_max)))
            .unzip()
    }

    /// `(λ, L_max^T)` over successful points.
    pub fn total_curve(&self) -> (Vec<f64>, Vec<f64>) {
        self.records
            .iter()
            .filter_map(|r| r.total.map(|t| (r.lambda, t.0)))
            .unzip()
    }

    pub fn failed_points(&self) -> usize {
        self.records.iter().filter(|r| !r.ok()).count()
    }

    /// Adds points on `step` multiples within `half_width` of each center,
    /// clipped to the original range, and merges them in λ order.
    pub fn refine(&mut self, centers: &[f64], half_width: f64, step: f64) -> Result<()> {
        if !(step > 0.0 && half_width >= 0.0) {
            return Err(Error::Validation("refinement needs step > 0 and half_width >= 0".into()));
        }
        let (lo, hi) = (self.config.grid[0], *self.config.grid.last().expect("nonempty"));
        let mut extra: Vec<f64> = Vec::new();
        for &c in centers {
            // Slack keeps window edges that land on a multiple of `step`.
            let a = ((c - half_width) / step - 1e-9).ceil() as i64;
            let b = ((c + half_width) / step + 1e-9).floor() as i64;
            for k in a..=b {
                let l = k as f64 * step;
                let l = (l * 1e9).round() / 1e9;
                let known = self.records.iter().any(|r| (r.lambda - l).abs() < 1e-9)
                    || extra.iter().any(|&x| (x - l).abs() < 1e-9);
                if l >= lo - 1e-12 && l <= hi + 1e-12 && !known {
                    extra.push(l);
                }
            }
        }
        extra.sort_by(f64::total_cmp);
        let new = run_points(&self.config, &extra, &AtomicBool::new(false))?;
        self.records.extend(new);
        self.records.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        let mut c = self.config.clone();
        c.grid = self.lambdas();
        self.config_hash = c.config_hash();
        self.config = c;
        Ok(())
    }

    pub fn write_csv(&self, w: &mut impl Write, prov: &Provenance) -> Result<()> {
        prov.write_header(w)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record([
            "model", "N", "chi", "dt", "lambda_name", "lambda", "engine", "converged", "e0", "alpha", "probe_t",
            "c_value", "l_max", "argmin_tau", "violated", "l_max_total", "total_alpha", "trajectory_hash", "error",
        ])?;
        let c = &self.config;
        let (chi, dt) = match default_engine(c) {
            Engine::Ed => (String::new(), String::new()),
            Engine::Mps => (c.evolution.chi_max.to_string(), fmt_f64(c.evolution.dt)),
        };
        for r in &self.records {
            for &mu in &c.directions {
                let s = r.summaries.get(&mu);
                let p = r.probes.get(&mu);
                let times: Vec<Option<(f64, f64)>> = if c.probe_times.is_empty() || p.is_none() {
                    vec![None]
                } else {
                    c.probe_times.iter().zip(p.expect("present")).map(|(&t, &v)| Some((t, v))).collect()
                };
                for tv in times {
                    csv.write_record([
                        c.family.to_string(),
                        c.n.to_string(),
                        chi.clone(),
                        dt.clone(),
                        c.family.lambda_name().to_string(),
                        fmt_f64(r.lambda),
                        r.engine.to_string(),
                        r.converged.to_string(),
                        fmt_opt(r.e0.map(fmt_f64)),
                        mu.to_string(),
                        fmt_opt(tv.map(|x| fmt_f64(x.0))),
                        fmt_opt(tv.map(|x| fmt_f64(x.1))),
                        fmt_opt(s.map(|s| fmt_f64(s.l_max))),
                        fmt_opt(s.map(|s| fmt_f64(s.argmin_tau))),
                        fmt_opt(s.map(|s| s.violated)),
                        fmt_opt(r.total.map(|t| fmt_f64(t.0))),
                        fmt_opt(r.total.map(|t| t.1)),
                        r.trajectory_hash.clone(),
                        r.error.clone().unwrap_or_default(),
                    ])?;
                }
            }
        }
        csv.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPointReport {
    pub lambda_name: String,
    pub candidates: Vec<Candidate>,
    /// Swept interval.
    pub range: (f64, f64),
    pub caveat: String,
}

impl CriticalPointReport {
    /// Largest-ratio candidate of `kind` on a series whose name starts with
    /// `series_prefix`.
    pub fn strongest(&self, kind: CandidateKind, series_prefix: &str) -> Option<&Candidate> {
        self.candidates
            .iter()
            .filter(|c| c.kind == kind && c.series.starts_with(series_prefix))
            .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
    }

    pub fn write(&self, w: &mut impl Write, prov: &Provenance) -> Result<()> {
        prov.write_header(w)?;
        writeln!(w, "# caveat: {}", self.caveat)?;
        writeln!(
            w,
            "# swept {} in [{}, {}]",
            self.lambda_name,
            fmt_f64(self.range.0),
            fmt_f64(self.range.1)
        )?;
        for c in &self.candidates {
            writeln!(
                w,
                "kind={} {}={} window=[{},{}] magnitude={} ratio={} series={}",
                c.kind,
                self.lambda_name,
                fmt_f64(c.lambda),
                fmt_f64(c.window.0),
                fmt_f64(c.window.1),
                fmt_f64(c.magnitude),
                fmt_f64(c.ratio),
                c.series
            )?;
        }
        Ok(())
    }
}

/// Runs the jump and derivative-peak detectors on every probe curve and the
/// kink detector on `L_max^T`. Failed points are left out.
pub fn detect_critical_points(sweep: &SweepResult, cfg: &DetectorConfig) -> Result<CriticalPointReport> {
    let ok = sweep.records.iter().filter(|r| r.ok()).count();
    if ok < 5 {
        return Err(Error::Validation(format!(
            "critical-point detection needs at least 5 successful points, got {ok}"
        )));
    }
    let c = &sweep.config;
    let mut candidates = Vec::new();
    for &mu in &c.directions {
        for (i, &t) in c.probe_times.iter().enumerate() {
            let (x, v) = sweep.probe_curve(mu, i);
            let name = format!("C_{mu}(t={})", fmt_f64(t));
            candidates.extend(detect_jumps(&name, &x, &v, cfg));
            candidates.extend(detect_derivative_peaks(&name, &x, &v, cfg)?);
        }
    }
    let (x, v) = sweep.total_curve();
    if x.len() >= 3 {
        candidates.extend(detect_kinks("L_total", &x, &v, cfg));
    }
    let lam = sweep.lambdas();
    Ok(CriticalPointReport {
        lambda_name: c.family.lambda_name().to_string(),
        candidates,
        range: (lam[0], lam[lam.len() - 1]),
        caveat: FINITE_SIZE_CAVEAT.to_string(),
    })
}

/// Centers for the second pass: every candidate, plus the steepest point
/// of each probe curve so that features just under threshold on the
/// coarse grid still get resolved.
pub fn refinement_centers(sweep: &SweepResult, report: &CriticalPointReport) -> Result<Vec<f64>> {
    let mut centers: Vec<f64> = report.candidates.iter().map(|c| c.lambda).collect();
    let c = &sweep.config;
    for &mu in &c.directions {
        for i in 0..c.probe_times.len() {
            let (x, v) = sweep.probe_curve(mu, i);
            if x.len() >= 3 {
                centers.push(x[argmax_abs(&finite_diff(&x, &v, 1)?)]);
            }
        }
    }
    centers.sort_by(f64::total_cmp);
    centers.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(centers)
}

/// Coarse sweep, refinement around [`refinement_centers`], then detection
/// on the merged grid.
pub fn sweep_and_detect(
    cfg: &SweepConfig,
    det: &DetectorConfig,
    half_width: f64,
    step: f64,
    cancel: &AtomicBool,
) -> Result<(SweepResult, CriticalPointReport)> {
    let mut res = sweep_with_cancel(cfg, cancel)?;
    let coarse = detect_critical_points(&res, det)?;
    if !cancel.load(Ordering::Relaxed) {
        let centers = refinement_centers(&res, &coarse)?;
        res.refine(&centers, half_width, step)?;
    }
    let report = detect_critical_points(&res, det)?;
    Ok((res, report))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakEntry {
    pub n: usize,
    /// `max_λ |dL_max^z/dλ|` on the refined grid.
    pub peak: f64,
    pub lambda_at_peak: f64,
    /// Set when any point of this size failed or did not converge.
    pub tainted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakScaling {
    pub entries: Vec<PeakEntry>,
    /// Peak heights strictly increase with N and no size is tainted.
    pub increasing: bool,
}

/// Peak of `|dL_max^z/dλ|` for each size in `n_list`, each refined by
/// `refine_step` within `refine_half_width` of its coarse peak.
pub fn peak_scaling(
    base: &SweepConfig,
    n_list: &[usize],
    refine_half_width: f64,
    refine_step: f64,
) -> Result<PeakScaling> {
    if n_list.len() < 3 {
        return Err(Error::Validation(format!(
            "peak scaling needs at least 3 sizes, got {}",
            n_list.len()
        )));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("sizes must be strictly ascending".into()));
    }
    let mut entries = Vec::new();
    for &n in n_list {
        let cfg = SweepConfig {
            n,
            site: None,
            directions: vec![Direction::Z],
            ..base.clone()
        };
        let mut res = sweep(&cfg)?;
        let (x, v) = res.lmax_curve(Direction::Z);
        let d = finite_diff(&x, &v, 1)?;
        let i = argmax_abs(&d);
        res.refine(&[x[i]], refine_half_width, refine_step)?;
        let (x, v) = res.lmax_curve(Direction::Z);
        let d = finite_diff(&x, &v, 1)?;
        let i = argmax_abs(&d);
        let tainted = res.records.iter().any(|r| !r.ok() || !r.converged);
        entries.push(PeakEntry {
            n,
            peak: d[i].abs(),
            lambda_at_peak: x[i],
            tainted,
        });
    }
    let increasing =
        entries.windows(2).all(|w| w[1].peak > w[0].peak) && entries.iter().all(|e| !e.tainted);
    Ok(PeakScaling { entries, increasing })
}

fn argmax_abs(d: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in d.iter().enumerate() {
        if x.abs() > d[best].abs() {
            best = i;
        }
    }
    best
}

//! Pass/fail suite over the exact identities plus an ED/MPS cross-check.

use std::io::Write;

use crate::correlator::{stc, stc_ed, Engine, GroundState};
use crate::ed::{
    conjugation_identity_deviation, first_order_approx, first_order_approx_hf, hellmann_feynman_check,
    second_order_correction, stationarity_check,
};
use crate::ed::EdSystem;
use crate::error::{Error, Result};
use crate::model::{build_fk, Direction, ModelFamily};
use crate::mps::{DmrgConfig, EvolutionConfig};
use crate::output::{fmt_f64, Provenance};

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub family: ModelFamily,
    /// At most 10 sites.
    pub n: usize,
    pub lambda: f64,
    /// Probe site, `n/2` when unset.
    pub site: Option<usize>,
    pub directions: Vec<Direction>,
    /// Hellmann-Feynman finite-difference step.
    pub hf_step: f64,
    /// Larger of the two times in the remainder-scaling checks.
    pub t_small: f64,
    /// Runs the ED/MPS comparison when set.
    pub dual_engine: Option<EvolutionConfig>,
    pub dmrg: DmrgConfig,
    /// Flips the sign of `f` in the conjugation check (negative control).
    pub corrupt_fk: bool,
}

impl VerifyConfig {
    pub fn new(family: ModelFamily, n: usize, lambda: f64) -> Self {
        Self {
            family,
            n,
            lambda,
            site: None,
            directions: Direction::ALL.to_vec(),
            hf_step: 1e-5,
            t_small: 0.02,
            dual_engine: Some(EvolutionConfig::default()),
            dmrg: DmrgConfig::default(),
            corrupt_fk: false,
        }
    }

    pub fn site(&self) -> usize {
        self.site.unwrap_or(self.n / 2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub check: &'static str,
    pub detail: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

fn at_most(check: &'static str, detail: String, value: f64, tol: f64) -> CheckRow {
    CheckRow {
        check,
        detail,
        value,
        bound: format!("<= {tol:e}"),
        pass: value <= tol,
    }
}

fn within(check: &'static str, detail: String, value: f64, lo: f64, hi: f64) -> CheckRow {
    CheckRow {
        check,
        detail,
        value,
        bound: format!("in [{lo}, {hi}]"),
        pass: (lo..=hi).contains(&value),
    }
}

/// Runs the suite; each row is one check.
pub fn run_suite(cfg: &VerifyConfig) -> Result<Vec<CheckRow>> {
    if cfg.n == 0 || cfg.n > 10 {
        return Err(Error::Validation(format!("verify needs 1 <= n <= 10, got {}", cfg.n)));
    }
    let k = cfg.site();
    if k >= cfg.n {
        return Err(Error::Validation(format!("site {k} outside [0, {})", cfg.n)));
    }
    if cfg.directions.is_empty() {
        return Err(Error::Validation("direction list is empty".into()));
    }
    let h = cfg.family.build(cfg.n, cfg.lambda)?;
    let sys = EdSystem::new(&h)?;
    let mut rows = Vec::new();

    for &mu in &cfg.directions {
        let mut f = build_fk(&h, k, mu)?;
        if cfg.corrupt_fk {
            f = f.scaled(-1.0);
        }
        let d = conjugation_identity_deviation(&h, &f, k, mu)?;
        rows.push(at_most("conjugation", format!("mu={mu} k={k}"), d, 1e-12));
    }

    let hf = hellmann_feynman_check(&cfg.family, cfg.n, cfg.lambda, cfg.hf_step)?;
    let mut row = at_most(
        "hellmann-feynman",
        format!(
            "expectation={} richardson={}{}",
            fmt_f64(hf.expectation),
            fmt_f64(hf.richardson),
            if hf.degenerate { " degenerate" } else { "" }
        ),
        hf.residual,
        1e-6,
    );
    row.pass &= !hf.degenerate;
    rows.push(row);

    let (t1, t2) = (0.3, 0.7);
    for &mu in &cfg.directions {
        let r = stationarity_check(&sys, k, mu, t1, t2)?;
        rows.push(at_most("stationarity", format!("mu={mu} t1={t1} t2={t2}"), r, 1e-10));
    }

    let t = cfg.t_small;
    for &mu in &cfg.directions {
        let direct = first_order_approx(&sys, k, mu, t)?;
        let via_hf = first_order_approx_hf(&sys, k, mu, t, cfg.hf_step)?;
        rows.push(at_most(
            "first-order-routes",
            format!("mu={mu} t={t}"),
            (direct - via_hf).abs(),
            1e-6,
        ));

        let exact = stc_ed(&sys, k, mu, &[0.0, t / 2.0, t])?;
        let err1 = |s: f64, c: f64| -> Result<f64> { Ok((c - first_order_approx(&sys, k, mu, s)?).abs()) };
        let err2 = |s: f64, c: f64| -> Result<f64> {
            Ok((c - first_order_approx(&sys, k, mu, s)? - second_order_correction(&sys, k, mu, s)?).abs())
        };
        let (c_half, c_full) = (exact.values[1], exact.values[2]);
        let r1 = err1(t, c_full)? / err1(t / 2.0, c_half)?;
        rows.push(within("first-order-ratio", format!("mu={mu} t={t}"), r1, 3.5, 4.5));
        // The first+second-order remainder is O(t^4) since C is even in t.
        let r2 = err2(t, c_full)? / err2(t / 2.0, c_half)?;
        rows.push(within("second-order-ratio", format!("mu={mu} t={t}"), r2, 14.0, 18.0));
    }

    if let Some(evo) = &cfg.dual_engine {
        evo.validate()?;
        let times: Vec<f64> = (0..=evo.n_steps()).map(|i| i as f64 * evo.dt).collect();
        let dmrg = DmrgConfig {
            bias_field: cfg.family.needs_bias(cfg.lambda).then_some(crate::scan::BIAS_FIELD),
            ..cfg.dmrg.clone()
        };
        let mps = GroundState::compute(&h, Some(Engine::Mps), &dmrg)?;
        for &mu in &cfg.directions {
            let a = stc_ed(&sys, k, mu, &times)?;
            let b = stc(&mps, &h, k, mu, &times, evo)?;
            let dev = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            rows.push(at_most(
                "dual-engine",
                format!("mu={mu} t_max={} chi={}", fmt_f64(evo.t_max), evo.chi_max),
                dev,
                1e-5,
            ));
        }
    }
    Ok(rows)
}

pub fn write_table(w: &mut impl Write, prov: &Provenance, rows: &[CheckRow]) -> Result<()> {
    prov.write_header(w)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["check", "detail", "value", "bound", "pass"])?;
    for r in rows {
        csv.write_record([
            r.check.to_string(),
            r.detail.clone(),
            fmt_f64(r.value),
            r.bound.clone(),
            r.pass.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

//! Subcommand bodies. Each writes its CSV files under the output directory
//! and prints a short human-readable summary to stdout.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use lgprobe::correlator::{
    lg_function, lg_max_violation, lg_total_max, stc, write_series_csv, write_violation_csv, CorrelationSeries,
    Engine, GroundState, LgSeries,
};
use lgprobe::model::{SpinHamiltonian, MAX_DENSE_SITES};
use lgprobe::mps::checkpoint::{self, StoredMps};
use lgprobe::mps::DmrgConfig;
use lgprobe::output::{fmt_f64, Provenance};
use lgprobe::scan::{self, SweepConfig, BIAS_FIELD};
use lgprobe::tensor::C64;
use lgprobe::verify::{run_suite, write_table, VerifyConfig};

use crate::config::RunConfig;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn lambdas(cfg: &RunConfig) -> Vec<f64> {
    cfg.lambda_grid.clone().unwrap_or_else(|| vec![cfg.lambda])
}

fn time_grid(cfg: &RunConfig) -> Vec<f64> {
    (0..=cfg.evolution.n_steps()).map(|i| i as f64 * cfg.evolution.dt).collect()
}

fn resolved_engine(cfg: &RunConfig) -> Engine {
    cfg.engine.unwrap_or(if cfg.n <= MAX_DENSE_SITES { Engine::Ed } else { Engine::Mps })
}

fn dmrg_for(cfg: &RunConfig, lambda: f64) -> DmrgConfig {
    DmrgConfig {
        bias_field: cfg.family.needs_bias(lambda).then_some(BIAS_FIELD),
        ..cfg.dmrg.clone()
    }
}

struct GroundFiles {
    checkpoint: PathBuf,
    meta: PathBuf,
}

fn ground_files(cfg: &RunConfig, lambda: f64) -> GroundFiles {
    let h = &cfg.ground_hash(lambda)[..16];
    GroundFiles {
        checkpoint: cfg.out_dir.join(format!("ground-{h}.mps")),
        meta: cfg.out_dir.join(format!("ground-{h}.csv")),
    }
}

fn write_ground_meta(path: &Path, cfg: &RunConfig, lambda: f64, g: &GroundState, ckpt: Option<String>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    Provenance::new(cfg.hash()).write_header(&mut w)?;
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(["key", "value"]).map_err(lgprobe::Error::from)?;
    let chi = match g {
        GroundState::Mps { chi, .. } | GroundState::MpsComplex { chi, .. } => chi.to_string(),
        GroundState::Ed(_) => String::new(),
    };
    for (k, v) in [
        ("model", cfg.family.to_string()),
        ("N", cfg.n.to_string()),
        ("lambda_name", cfg.family.lambda_name().to_string()),
        ("lambda", fmt_f64(lambda)),
        ("engine", g.engine().to_string()),
        ("chi", chi),
        ("e0", fmt_f64(g.e0())),
        ("converged", g.converged().to_string()),
        ("checkpoint_hash", ckpt.unwrap_or_default()),
    ] {
        csv.write_record([k, v.as_str()]).map_err(lgprobe::Error::from)?;
    }
    csv.flush()?;
    drop(csv);
    w.flush()?;
    Ok(())
}

fn read_meta_converged(path: &Path) -> Option<bool> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).ok()?;
    for rec in r.records().flatten() {
        if rec.get(0) == Some("converged") {
            return rec.get(1).and_then(|v| v.parse().ok());
        }
    }
    None
}

fn load_checkpoint(cfg: &RunConfig, h: &SpinHamiltonian, files: &GroundFiles) -> Result<Option<GroundState>> {
    if !files.checkpoint.exists() {
        return Ok(None);
    }
    let stored = checkpoint::load(&mut File::open(&files.checkpoint)?)?;
    let converged = read_meta_converged(&files.meta).unwrap_or(false);
    let g = match stored {
        StoredMps::Real(state) => {
            let e0 = state.expectation(&h.to_mpo::<f64>()?)?;
            GroundState::Mps { state, e0, chi: cfg.dmrg.chi_max, converged }
        }
        StoredMps::Complex(state) => {
            let e0 = state.expectation(&h.to_mpo::<C64>()?)?.re;
            GroundState::MpsComplex { state, e0, chi: cfg.dmrg.chi_max, converged }
        }
    };
    if g.n_sites() != cfg.n {
        log::warn!("checkpoint {} has the wrong size; recomputing", files.checkpoint.display());
        return Ok(None);
    }
    log::info!("loaded checkpoint {}", files.checkpoint.display());
    Ok(Some(g))
}

/// Ground state at `lambda`: ED directly, MPS from the checkpoint when one
/// exists, otherwise recomputed and checkpointed.
fn obtain_ground(cfg: &RunConfig, lambda: f64, h: &SpinHamiltonian, announce: bool) -> Result<GroundState> {
    if resolved_engine(cfg) == Engine::Ed {
        return Ok(GroundState::compute(h, Some(Engine::Ed), &cfg.dmrg)?);
    }
    let files = ground_files(cfg, lambda);
    if let Some(g) = load_checkpoint(cfg, h, &files)? {
        return Ok(g);
    }
    if announce {
        log::warn!("no checkpoint at {}; computing the ground state", files.checkpoint.display());
    }
    let g = GroundState::compute(h, Some(Engine::Mps), &dmrg_for(cfg, lambda))?;
    let hash = match &g {
        GroundState::Mps { state, .. } => {
            checkpoint::save(state, &mut BufWriter::new(File::create(&files.checkpoint)?))?;
            Some(checkpoint::content_hash(state))
        }
        GroundState::MpsComplex { state, .. } => {
            checkpoint::save(state, &mut BufWriter::new(File::create(&files.checkpoint)?))?;
            Some(checkpoint::content_hash(state))
        }
        GroundState::Ed(_) => None,
    };
    write_ground_meta(&files.meta, cfg, lambda, &g, hash)?;
    Ok(g)
}

pub fn ground(cfg: &RunConfig) -> Result<()> {
    let mut unconverged = Vec::new();
    for l in lambdas(cfg) {
        let h = cfg.family.build(cfg.n, l)?;
        let files = ground_files(cfg, l);
        // An explicit ground run always recomputes.
        let _ = std::fs::remove_file(&files.checkpoint);
        let g = obtain_ground(cfg, l, &h, false)?;
        if g.engine() == Engine::Ed {
            write_ground_meta(&files.meta, cfg, l, &g, None)?;
        }
        println!(
            "{} N={} {}={} engine={} E0={} converged={}",
            cfg.family,
            cfg.n,
            cfg.family.lambda_name(),
            fmt_f64(l),
            g.engine(),
            fmt_f64(g.e0()),
            g.converged()
        );
        if !g.converged() {
            unconverged.push(fmt_f64(l));
        }
    }
    if unconverged.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!("DMRG hit its sweep limit at lambda = {}", unconverged.join(", "))))
    }
}

fn series_for(cfg: &RunConfig) -> Result<(Vec<CorrelationSeries>, bool)> {
    let times = time_grid(cfg);
    let mut out = Vec::new();
    let mut all_converged = true;
    for l in lambdas(cfg) {
        let h = cfg.family.build(cfg.n, l)?;
        let g = obtain_ground(cfg, l, &h, true)?;
        all_converged &= g.converged();
        for &mu in &cfg.directions {
            out.push(stc(&g, &h, cfg.site, mu, &times, &cfg.evolution)?);
        }
    }
    Ok((out, all_converged))
}

fn converged_or(all: bool) -> Result<()> {
    if all {
        Ok(())
    } else {
        Err(CliError::NotConverged("DMRG hit its sweep limit; outputs were written".into()))
    }
}

pub fn correlate(cfg: &RunConfig) -> Result<()> {
    let (series, conv) = series_for(cfg)?;
    let prov = Provenance::new(cfg.hash());
    let mut w = create(&cfg.out_dir, "correlation.csv")?;
    write_series_csv(&mut w, &prov, &series, &[])?;
    w.flush()?;
    for s in &series {
        let m = &s.meta;
        println!(
            "{}={} alpha={} points={} C(t_max)={}",
            m.lambda_name,
            fmt_f64(m.lambda),
            m.alpha,
            s.values.len(),
            fmt_f64(*s.values.last().expect("nonempty"))
        );
    }
    converged_or(conv)
}

pub fn lgi(cfg: &RunConfig) -> Result<()> {
    let (series, conv) = series_for(cfg)?;
    let lg: Vec<LgSeries> = series.iter().map(lg_function).collect::<lgprobe::Result<_>>()?;
    let prov = Provenance::new(cfg.hash());
    let mut w = create(&cfg.out_dir, "lgi_series.csv")?;
    write_series_csv(&mut w, &prov, &series, &lg)?;
    w.flush()?;
    let mut w = create(&cfg.out_dir, "lgi_violation.csv")?;
    write_violation_csv(&mut w, &prov, &lg)?;
    w.flush()?;

    let mut w = create(&cfg.out_dir, "lgi_summary.csv")?;
    prov.write_header(&mut w)?;
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(["lambda_name", "lambda", "l_max_z", "l_max_x", "l_max_y", "l_max_total", "total_alpha"])
        .map_err(lgprobe::Error::from)?;
    for chunk in lg.chunks(cfg.directions.len()) {
        let mut per = std::collections::BTreeMap::new();
        for s in chunk {
            per.insert(s.meta.alpha, lg_max_violation(s)?);
        }
        let get = |a| per.get(&a).map(|s: &lgprobe::correlator::LgViolationSummary| fmt_f64(s.l_max)).unwrap_or_default();
        use lgprobe::model::Direction::{X, Y, Z};
        let total = lg_total_max(&per, cfg.total_mode).ok();
        let m = &chunk[0].meta;
        println!(
            "{}={} L_max: z={} x={} y={} total={}",
            m.lambda_name,
            fmt_f64(m.lambda),
            get(Z),
            get(X),
            get(Y),
            total.map(|t| format!("{} ({})", fmt_f64(t.0), t.1)).unwrap_or_else(|| "n/a".into())
        );
        csv.write_record([
            m.lambda_name.clone(),
            fmt_f64(m.lambda),
            get(Z),
            get(X),
            get(Y),
            total.map(|t| fmt_f64(t.0)).unwrap_or_default(),
            total.map(|t| t.1.to_string()).unwrap_or_default(),
        ])
        .map_err(lgprobe::Error::from)?;
    }
    csv.flush()?;
    drop(csv);
    w.flush()?;
    converged_or(conv)
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    let grid = cfg
        .lambda_grid
        .clone()
        .ok_or_else(|| CliError::Config("sweep needs lambda.start, lambda.stop and lambda.step".into()))?;
    let sc = SweepConfig {
        family: cfg.family,
        n: cfg.n,
        grid,
        probe_times: cfg.probe_times.clone(),
        directions: cfg.directions.clone(),
        site: Some(cfg.site),
        engine: cfg.engine,
        dmrg: cfg.dmrg.clone(),
        evolution: cfg.evolution.clone(),
        total_mode: cfg.total_mode,
        workers: cfg.workers,
    };
    let cancel = Arc::new(AtomicBool::new(false));
    {
        let c = cancel.clone();
        let _ = ctrlc::set_handler(move || {
            eprintln!("lgprobe: interrupt received; finishing running points and writing results");
            c.store(true, Ordering::Relaxed);
        });
    }
    let (res, report) = match cfg.refine {
        Some((hw, step)) => scan::sweep_and_detect(&sc, &cfg.detector, hw, step, &cancel)?,
        None => {
            let r = scan::sweep_with_cancel(&sc, &cancel)?;
            let rep = scan::detect_critical_points(&r, &cfg.detector)?;
            (r, rep)
        }
    };
    let prov = Provenance::new(cfg.hash());
    let mut w = create(&cfg.out_dir, "sweep.csv")?;
    res.write_csv(&mut w, &prov)?;
    w.flush()?;
    let mut w = create(&cfg.out_dir, "critical_points.txt")?;
    report.write(&mut w, &prov)?;
    w.flush()?;
    report.write(&mut std::io::stdout().lock(), &prov)?;

    if !cfg.sizes.is_empty() && !cancel.load(Ordering::Relaxed) {
        let (hw, step) = cfg.refine.unwrap_or((0.0, 1.0));
        let ps = scan::peak_scaling(&sc, &cfg.sizes, hw, step)?;
        let mut w = create(&cfg.out_dir, "peak_scaling.csv")?;
        prov.write_header(&mut w)?;
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(["N", "peak", "lambda_at_peak", "tainted"]).map_err(lgprobe::Error::from)?;
        for e in &ps.entries {
            csv.write_record([e.n.to_string(), fmt_f64(e.peak), fmt_f64(e.lambda_at_peak), e.tainted.to_string()])
                .map_err(lgprobe::Error::from)?;
            println!("peak N={} max|dL_max^z/d{}|={} at {}", e.n, res.config.family.lambda_name(), fmt_f64(e.peak), fmt_f64(e.lambda_at_peak));
        }
        csv.flush()?;
        println!("peak heights strictly increasing: {}", ps.increasing);
    }

    let failed = res.failed_points();
    let unconverged = res.records.iter().filter(|r| !r.converged).count();
    if cancel.load(Ordering::Relaxed) {
        return Err(CliError::Lib(lgprobe::Error::InvalidInput(format!(
            "sweep interrupted; {failed} point(s) not computed"
        ))));
    }
    if unconverged > 0 {
        return Err(CliError::NotConverged(format!(
            "{unconverged} sweep point(s) failed or did not converge; see sweep.csv"
        )));
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig) -> Result<()> {
    let vc = VerifyConfig {
        family: cfg.family,
        n: cfg.n,
        lambda: cfg.lambda,
        site: Some(cfg.site),
        directions: cfg.directions.clone(),
        hf_step: 1e-5,
        t_small: cfg.t_small,
        dual_engine: cfg.dual_engine.then(|| cfg.evolution.clone()),
        dmrg: cfg.dmrg.clone(),
        corrupt_fk: cfg.corrupt_fk,
    };
    let rows = run_suite(&vc)?;
    let prov = Provenance::new(cfg.hash());
    let mut w = create(&cfg.out_dir, "verify.csv")?;
    write_table(&mut w, &prov, &rows)?;
    w.flush()?;
    for r in &rows {
        println!(
            "{:<5} {:<20} {:<32} {:>12.3e} {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.check,
            r.detail,
            r.value,
            r.bound
        );
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(failed))
    }
}

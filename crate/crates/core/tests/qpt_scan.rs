//! Sweeps on small exactly solvable chains.

use std::sync::atomic::AtomicBool;

use lgprobe::correlator::Engine;
use lgprobe::model::{Direction, ModelFamily};
use lgprobe::output::Provenance;
use lgprobe::scan::{
    detect_critical_points, peak_scaling, sweep, sweep_and_detect, CandidateKind, DetectorConfig, SweepConfig,
};

fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    let m = ((b - a) / step).round() as usize;
    (0..=m).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect()
}

fn ed_config(family: ModelFamily, n: usize, lambdas: Vec<f64>) -> SweepConfig {
    let mut cfg = SweepConfig::new(family, n, lambdas);
    cfg.engine = Some(Engine::Ed);
    cfg.probe_times = vec![1.0];
    cfg.evolution.dt = 0.05;
    cfg.evolution.t_max = 1.0;
    cfg
}

#[test]
fn xxz_ferromagnetic_boundary_is_a_jump() {
    let cfg = ed_config(ModelFamily::Xxz { j: 1.0 }, 8, grid(-1.5, 0.5, 0.1));
    let (res, report) =
        sweep_and_detect(&cfg, &DetectorConfig::default(), 0.1, 0.05, &AtomicBool::new(false)).unwrap();
    for rec in res.records.iter().filter(|r| r.lambda < -1.0 - 1e-9) {
        assert!((rec.probes[&Direction::Z][0] - 1.0).abs() < 1e-10, "{}", rec.lambda);
    }
    for prefix in ["C_z", "C_x"] {
        let c = report.strongest(CandidateKind::Jump, prefix).expect("jump found");
        assert!((-1.05..=-0.95).contains(&c.lambda), "{prefix}: {c:?}");
        assert!(c.window.0 <= c.lambda && c.lambda <= c.window.1);
    }
    assert!(!report.caveat.is_empty());
}

#[test]
fn ising_chain_has_no_jump() {
    let cfg = ed_config(ModelFamily::Xy { j: 1.0, gamma: 1.0 }, 8, grid(0.0, 2.0, 0.1));
    let res = sweep(&cfg).unwrap();
    let report = detect_critical_points(&res, &DetectorConfig::default()).unwrap();
    assert!(report.candidates.iter().all(|c| c.kind != CandidateKind::Jump), "{:?}", report.candidates);
    for c in &report.candidates {
        assert!(c.window.0 >= 0.0 && c.window.1 <= 2.0);
    }
}

#[test]
fn failing_point_is_flagged_without_aborting() {
    let mut cfg = ed_config(ModelFamily::Xy { j: 1.0, gamma: 1.0 }, 6, vec![-0.2, 0.0, 0.5, 1.0, 1.5, 2.0]);
    cfg.workers = 2;
    let res = sweep(&cfg).unwrap();
    assert_eq!(res.failed_points(), 1);
    assert!(res.records[0].error.as_deref().unwrap().contains("nu"));
    assert!(res.records[1..].iter().all(|r| r.ok()));
    let (x, _) = res.probe_curve(Direction::Z, 0);
    assert_eq!(x.len(), 5);
    detect_critical_points(&res, &DetectorConfig::default()).unwrap();
}

#[test]
fn invalid_configurations_are_rejected() {
    let fam = ModelFamily::Xxz { j: 1.0 };
    let mut cfg = ed_config(fam, 6, grid(-1.0, 0.0, 0.25));
    cfg.directions.clear();
    assert!(sweep(&cfg).is_err());
    let mut cfg = ed_config(fam, 6, vec![0.0, 0.5, 0.25]);
    assert!(sweep(&cfg).is_err());
    cfg.grid = grid(-1.0, 0.0, 0.25);
    cfg.probe_times = vec![0.33];
    assert!(sweep(&cfg).is_err());
    cfg.probe_times = vec![1.0];
    cfg.site = Some(6);
    assert!(sweep(&cfg).is_err());
    let base = ed_config(fam, 6, grid(-1.0, 0.0, 0.25));
    assert!(peak_scaling(&base, &[6], 0.1, 0.05).is_err());
    assert!(peak_scaling(&base, &[6, 8, 8], 0.1, 0.05).is_err());
    assert!(peak_scaling(&base, &[8, 6, 10], 0.1, 0.05).is_err());
}

#[test]
fn refinement_merges_in_order_and_rehashes() {
    let cfg = ed_config(ModelFamily::Xxz { j: 1.0 }, 6, grid(-1.0, 0.0, 0.25));
    let mut res = sweep(&cfg).unwrap();
    let before = res.config_hash.clone();
    res.refine(&[-0.5, -0.05], 0.1, 0.05).unwrap();
    let l = res.lambdas();
    assert_eq!(l, vec![-1.0, -0.75, -0.6, -0.55, -0.5, -0.45, -0.4, -0.25, -0.15, -0.1, -0.05, 0.0]);
    assert_ne!(res.config_hash, before);
    assert_eq!(res.config.grid, l);
}

#[test]
fn sweeps_are_byte_reproducible_across_worker_counts() {
    let render = |workers: usize| {
        let mut cfg = ed_config(ModelFamily::Xy { j: 1.0, gamma: 0.5 }, 6, grid(0.0, 2.0, 0.25));
        cfg.workers = workers;
        let res = sweep(&cfg).unwrap();
        let report = detect_critical_points(&res, &DetectorConfig::default()).unwrap();
        let prov = Provenance::new(res.config_hash.clone());
        let mut out = Vec::new();
        res.write_csv(&mut out, &prov).unwrap();
        report.write(&mut out, &prov).unwrap();
        out
    };
    let a = render(1);
    assert_eq!(a, render(1));
    assert_eq!(a, render(3));
}

#[test]
fn peak_scaling_reports_every_size() {
    let base = ed_config(ModelFamily::Xy { j: 1.0, gamma: 1.0 }, 4, grid(0.0, 2.0, 0.1));
    let s = peak_scaling(&base, &[4, 6, 8], 0.1, 0.05).unwrap();
    assert_eq!(s.entries.iter().map(|e| e.n).collect::<Vec<_>>(), vec![4, 6, 8]);
    assert!(s.entries.iter().all(|e| !e.tainted && e.peak > 0.0));
    assert!(s.entries.iter().all(|e| (0.5..=1.5).contains(&e.lambda_at_peak)), "{s:?}");
}

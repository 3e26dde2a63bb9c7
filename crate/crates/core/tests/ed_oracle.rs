//! Exact diagonalization against dense Kronecker references and an
//! independent Runge-Kutta propagation.

mod common;

use lgprobe::correlator::stc_ed;
use lgprobe::ed::{
    conjugation_identity_check, first_order_approx, hellmann_feynman_check, second_order_correction,
    stationarity_check, EdSystem,
};
use lgprobe::model::{build_xxz, build_xy, Direction, ModelFamily};
use lgprobe::verify::{run_suite, VerifyConfig};

fn times(dt: f64, t_max: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

const AXES: [(usize, Direction); 3] = [(0, Direction::X), (1, Direction::Y), (2, Direction::Z)];

#[test]
fn ground_energies_match_dense_reference() {
    for &delta in &[-0.5, 0.0, 0.5, 1.0] {
        let sys = EdSystem::new(&build_xxz(8, 1.0, delta).unwrap()).unwrap();
        let (e0, _, _) = common::ground(&common::xxz(8, delta));
        assert!((sys.ground().e0 - e0).abs() < 1e-10, "delta={delta}");
        assert!(sys.ground().residual < 1e-8);
    }
    let sys = EdSystem::new(&build_xy(8, 1.0, 0.5, 0.8).unwrap()).unwrap();
    let (e0, _, _) = common::ground(&common::xy(8, 0.5, 0.8));
    assert!((sys.ground().e0 - e0).abs() < 1e-10);
}

#[test]
fn krylov_path_matches_dense_reference() {
    // Above the full-spectrum size the ground state comes from Lanczos and
    // the propagation from Krylov exponentials.
    let n = 11;
    let sys = EdSystem::new(&build_xxz(n, 1.0, 0.5).unwrap()).unwrap();
    assert!(sys.spectrum().is_none());
    let h = common::xxz(n, 0.5);
    let (e0, _, _) = common::ground(&h);
    assert!((sys.ground().e0 - e0).abs() < 1e-9);
    let ts = times(0.25, 1.0);
    let ed = stc_ed(&sys, n / 2, Direction::Z, &ts).unwrap();
    let rk = common::correlation_rk4(&h, n, n / 2, 2, &ts, 2e-3);
    assert!(max_dev(&ed.values, &rk) < 1e-7, "{:?} vs {rk:?}", ed.values);
}

#[test]
fn correlations_match_runge_kutta_propagation() {
    let n = 6;
    let ts = times(0.1, 2.0);
    let cases = [
        (build_xxz(n, 1.0, -0.5).unwrap(), common::xxz(n, -0.5)),
        (build_xxz(n, 1.0, 0.5).unwrap(), common::xxz(n, 0.5)),
        (build_xy(n, 1.0, 1.0, 1.3).unwrap(), common::xy(n, 1.0, 1.3)),
        (build_xy(n, 1.0, 0.5, 0.6).unwrap(), common::xy(n, 0.5, 0.6)),
    ];
    for (h, dense) in &cases {
        let sys = EdSystem::new(h).unwrap();
        for (a, mu) in AXES {
            for k in [0, 2] {
                let ed = stc_ed(&sys, k, mu, &ts).unwrap();
                let rk = common::correlation_rk4(dense, n, k, a, &ts, 1e-3);
                let d = max_dev(&ed.values, &rk);
                assert!(d < 1e-8, "{:?} k={k} mu={mu}: {d}", h.tag());
                assert!(ed.imag_residue < 1e-10);
            }
        }
    }
}

#[test]
fn ferromagnet_is_flagged_and_frozen() {
    let sys = EdSystem::new(&build_xxz(8, 1.0, -1.5).unwrap()).unwrap();
    let g = sys.ground();
    assert!(g.degenerate);
    assert!((g.e0 + 1.5 * 7.0).abs() < 1e-10);
    // The all-up representative is index 0.
    assert!((g.psi0[0].norm() - 1.0).abs() < 1e-12);
    let ts = times(0.05, 3.0);
    let cz = stc_ed(&sys, 4, Direction::Z, &ts).unwrap();
    assert!(cz.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn strong_field_polarizes_against_the_field() {
    let n = 6;
    let sys = EdSystem::new(&build_xy(n, 1.0, 0.5, 20.0).unwrap()).unwrap();
    let all_down = (1 << n) - 1;
    assert!(sys.ground().psi0[all_down].norm() > 0.999);
    assert!(!sys.ground().degenerate);
}

#[test]
fn transverse_correlations_coincide_in_xxz() {
    let ts = times(0.05, 3.0);
    for &delta in &[-0.5, 0.0, 0.5, 1.0] {
        let sys = EdSystem::new(&build_xxz(8, 1.0, delta).unwrap()).unwrap();
        let cx = stc_ed(&sys, 3, Direction::X, &ts).unwrap();
        let cy = stc_ed(&sys, 3, Direction::Y, &ts).unwrap();
        assert!(max_dev(&cx.values, &cy.values) <= 1e-10, "delta={delta}");
    }
}

#[test]
fn stationarity_holds_and_validates_order() {
    let sys = EdSystem::new(&build_xy(6, 1.0, 0.5, 0.7).unwrap()).unwrap();
    for (_, mu) in AXES {
        for (t1, t2) in [(0.0, 0.5), (0.3, 0.7), (1.1, 2.4)] {
            assert!(stationarity_check(&sys, 2, mu, t1, t2).unwrap() <= 1e-10);
        }
    }
    assert!(stationarity_check(&sys, 2, Direction::Z, 0.7, 0.3).is_err());
}

#[test]
fn conjugation_identity_for_every_site_and_direction() {
    for h in [build_xxz(6, 1.0, 0.3).unwrap(), build_xy(6, 1.0, 0.5, 0.9).unwrap()] {
        for k in 0..6 {
            for (_, mu) in AXES {
                assert!(conjugation_identity_check(&h, k, mu).unwrap() <= 1e-12);
            }
        }
    }
    assert!(conjugation_identity_check(&build_xxz(11, 1.0, 0.3).unwrap(), 0, Direction::Z).is_err());
}

#[test]
fn hellmann_feynman_for_both_families() {
    for (fam, lambda) in [(ModelFamily::Xxz { j: 1.0 }, 0.5), (ModelFamily::Xy { j: 1.0, gamma: 0.5 }, 0.7)] {
        let hf = hellmann_feynman_check(&fam, 8, lambda, 1e-5).unwrap();
        assert!(!hf.degenerate);
        assert!(hf.residual <= 1e-6, "{fam}: {hf:?}");
    }
}

#[test]
fn short_time_expansion_remainders_scale() {
    let sys = EdSystem::new(&build_xxz(8, 1.0, 0.5).unwrap()).unwrap();
    let exact = |t: f64| stc_ed(&sys, 4, Direction::Z, &[0.0, t]).unwrap().values[1];
    let r1 = |t: f64| (exact(t) - first_order_approx(&sys, 4, Direction::Z, t).unwrap()).abs();
    let r2 = |t: f64| {
        (exact(t) - first_order_approx(&sys, 4, Direction::Z, t).unwrap()
            - second_order_correction(&sys, 4, Direction::Z, t).unwrap())
        .abs()
    };
    let ratio1 = r1(0.02) / r1(0.01);
    assert!((3.5..=4.5).contains(&ratio1), "{ratio1}");
    // The second-order term removes the t² remainder, leaving t⁴.
    let ratio2 = r2(0.02) / r2(0.01);
    assert!((14.0..=18.0).contains(&ratio2), "{ratio2}");
}

#[test]
fn verification_suite_passes_and_catches_a_corrupted_operator() {
    let mut cfg = VerifyConfig::new(ModelFamily::Xxz { j: 1.0 }, 8, 0.5);
    cfg.dual_engine = None;
    let rows = run_suite(&cfg).unwrap();
    assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    cfg.corrupt_fk = true;
    let rows = run_suite(&cfg).unwrap();
    assert!(rows.iter().any(|r| r.check == "conjugation" && !r.pass));
}

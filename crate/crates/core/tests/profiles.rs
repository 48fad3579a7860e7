use std::sync::Arc;

use fnls::error::Error;
use fnls::petviashvili::{iterate_step, residual_res, solve_with_beta_continuation};
use fnls::*;
use num_complex::Complex64;

fn grid() -> Arc<Grid> {
    Grid::new(-100.0, 100.0, 2048).unwrap()
}

fn even_defect(f: &ComplexField) -> f64 {
    let g = f.grid();
    let n = g.n();
    let j0 = g.nearest_index(0.0);
    (1..n / 4)
        .map(|m| (f.values()[j0 + m] - f.values()[j0 - m]).norm())
        .fold(0.0, f64::max)
}

#[test]
fn standing_profiles_are_even_positive_fixed_points() {
    let g = grid();
    for beta in [0.2, 0.5, 0.9] {
        let p = ModelParams::focusing(beta, 1.0);
        let rec = solve_standing_wave(&p, 1.0, &g, &SolveOptions::default()).unwrap();
        assert!(rec.trace.converged);
        assert!(even_defect(&rec.profile) < 1e-10, "beta {beta}");
        let peak = rec.profile.values()[g.nearest_index(0.0)];
        assert!(peak.re > 0.0 && peak.im.abs() < 1e-12);
        let max_im = rec.profile.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(max_im < 1e-10, "beta {beta}: imag {max_im:e}");
        // the zero mode of |k|^beta vanishes, so the profile integrates to zero
        let mean = rec.profile.values().iter().sum::<Complex64>().norm() / g.n() as f64;
        assert!(mean < 1e-12, "beta {beta}: mean {mean:e}");

        let (next, m) = iterate_step(&rec.profile, &p, &rec.wave, p.petviashvili_nu()).unwrap();
        assert!((m - 1.0).abs() < 1e-10);
        assert!(next.linf_distance(&rec.profile) < 1e-10);
        assert!(residual_res(&rec.profile, &p, &rec.wave).unwrap() < 1e-10);
    }
}

#[test]
fn pohozaev_residuals_small_for_beta_near_zero() {
    let g = grid();
    let rec = solve_standing_wave(&ModelParams::focusing(0.0, 1.5), 1.0, &g, &SolveOptions::default()).unwrap();
    assert!(rec.pohozaev.r0 < 1e-10 && rec.pohozaev.r1 < 1e-10);
    assert!(!rec.suspect);
    let exact = exact_profile_beta0(1.5, 1.0, &g);
    assert!(rec.profile.linf_distance(&exact) < 1e-10);
}

#[test]
fn frequency_scaling_matches_direct_solve() {
    let g = grid();
    let p = ModelParams::focusing(0.6, 1.0);
    let direct = solve_standing_wave(&p, 2.0, &g, &SolveOptions::default()).unwrap();
    let reduced = solve_standing_wave(
        &p,
        2.0,
        &g,
        &SolveOptions {
            reduce_frequency: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(direct.profile.linf_distance(&reduced.profile) < 1e-4 * direct.profile.linf());
}

#[test]
fn boosted_profile_symmetry() {
    let g = grid();
    let p = ModelParams::focusing(0.5, 1.0);
    let w = WaveParams::boosted(1.0, 0.8);
    let rec = solve_boosted(&p, &w, &g, &SolveOptions::default()).unwrap();
    assert!(rec.pohozaev.boosted < 1e-3, "{}", rec.pohozaev.boosted);
    assert_eq!(rec.pohozaev.r0, -1.0);
    // phi(-x) = conj(phi(x)) about the recentred peak
    let j0 = g.nearest_index(0.0);
    let v = rec.profile.values();
    let defect = (1..g.n() / 4)
        .map(|m| (v[j0 + m] - v[j0 - m].conj()).norm())
        .fold(0.0, f64::max);
    assert!(defect < 1e-9, "{defect:e}");
    let (_, m) = iterate_step(&rec.profile, &p, &w, p.petviashvili_nu()).unwrap();
    assert!((m - 1.0).abs() < 1e-10);
}

#[test]
fn continuation_reaches_target_beta() {
    let g = grid();
    let p = ModelParams::focusing(0.8, 1.0);
    let cont = solve_with_beta_continuation(&p, &WaveParams::standing(1.0), &g, &SolveOptions::default(), 0.2).unwrap();
    let direct = solve_standing_wave(&p, 1.0, &g, &SolveOptions::default()).unwrap();
    assert_eq!(cont.params.beta, 0.8);
    assert!(cont.profile.linf_distance(&direct.profile) < 1e-9);
}

#[test]
fn validation_paths() {
    let g = grid();
    let p = ModelParams::focusing(0.5, 1.0);
    assert!(matches!(
        solve_boosted(&p, &WaveParams::boosted(1.0, 2.0), &g, &SolveOptions::default()),
        Err(Error::SpeedTooLarge { .. })
    ));
    assert!(matches!(
        solve_standing_wave(&ModelParams::focusing(1.9, 1.0), 1.0, &g, &SolveOptions::default()),
        Err(Error::NonexistenceRegime(_))
    ));
    assert!(matches!(
        solve_standing_wave(&ModelParams::new(1.0, -1.0, 0.5, 1.0), 1.0, &g, &SolveOptions::default()),
        Err(Error::NonexistenceRegime(_))
    ));
    let few = SolveOptions {
        max_iter: 3,
        ..Default::default()
    };
    match solve_standing_wave(&p, 1.0, &g, &few) {
        Err(Error::NotConverged(trace)) => assert_eq!(trace.errors.len(), 3),
        other => panic!("expected NotConverged, got {other:?}"),
    }
}

#[test]
fn trace_csv_has_one_row_per_iteration() {
    let g = grid();
    let rec = solve_standing_wave(&ModelParams::focusing(0.3, 1.0), 1.0, &g, &SolveOptions::default()).unwrap();
    let csv = rec.trace.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,error,stab,res"));
    assert_eq!(lines.count(), rec.trace.iterations);
}

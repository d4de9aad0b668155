use proptest::prelude::*;
use slab_core::potentials::{make_potential, scattering_length_3d, PotentialKind, PotentialSpec};
use slab_core::scattering::{solve_neumann_3d, SlabParams, SlabSolution, SolverConfig};

fn well(strength: f64, radius: f64) -> f64 {
    let k = (strength / 2.0).sqrt();
    radius - (k * radius).tanh() / k
}

#[test]
fn zero_potential_has_no_scattering() {
    let v = make_potential(PotentialSpec { strength: 0.0, ..PotentialSpec::default() }).unwrap();
    assert_eq!(scattering_length_3d(&v, 1e-10).unwrap().a0, 0.0);
}

#[test]
fn neumann_profiles_stay_in_unit_interval() {
    let v = make_potential(PotentialSpec::default()).unwrap();
    let p = SlabParams::new(100, 1e-4, 1e-2, 0.25, 0.2).unwrap();
    let s = solve_neumann_3d(&v, &p, &SolverConfig::default()).unwrap();
    assert!(s.lambda > 0.0);
    for row in s.profile_table(100) {
        assert!(row[1] > 0.0 && row[1] <= 1.0 + 1e-12, "f = {}", row[1]);
    }
    let end = s.profile_table(2).last().copied().unwrap();
    assert!((end[1] - 1.0).abs() < 1e-9 && end[3].abs() < 1e-9);
}

#[test]
fn coarse_balls_are_refused() {
    let v = make_potential(PotentialSpec::default()).unwrap();
    let p = SlabParams::new(100, 1e-3, 1e-2, 0.25, 0.2).unwrap();
    assert!(solve_neumann_3d(&v, &p, &SolverConfig::default()).is_err());
}

#[test]
fn planar_solution_is_pinned_at_the_disk_edge() {
    let v = make_potential(PotentialSpec::default()).unwrap();
    let p = SlabParams::new(100, 1e-4, 1e-2, 0.25, 0.1).unwrap();
    let sol = SlabSolution::solve(&v, &p, &SolverConfig::default()).unwrap();
    let s2 = &sol.sol2d;
    assert!((s2.g(s2.radius) - 1.0).abs() < 1e-9);
    assert!(s2.mu > 0.0 && s2.m > 0.0);
    assert!(sol.induced.total > 0.0);
}

#[test]
fn out_of_range_slabs_are_rejected() {
    assert!(SlabParams::new(10, 0.0, 0.1, 0.25, 0.2).is_err());
    assert!(SlabParams::new(10, 1e-3, 1.5, 0.25, 0.2).is_err());
    assert!(SlabParams::new(10, 1e-3, 0.1, 0.25, 0.5).is_err());
    assert!(SlabParams::new(10, 1e-3, 0.1, 0.0, 0.2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn square_well_matches_closed_form(strength in 0.1f64..40.0, radius in 0.5f64..2.0) {
        let v = make_potential(PotentialSpec { kind: PotentialKind::SquareWell, strength, radius }).unwrap();
        let a0 = scattering_length_3d(&v, 1e-12).unwrap().a0;
        let exact = well(strength, radius);
        prop_assert!((a0 - exact).abs() <= 1e-8 * exact, "{} vs {}", a0, exact);
    }

    #[test]
    fn bump_scattering_length_is_monotone_and_bounded(s in 0.5f64..50.0) {
        let a = |x: f64| scattering_length_3d(&make_potential(PotentialSpec { strength: x, ..PotentialSpec::default() }).unwrap(), 1e-12).unwrap();
        let (lo, hi) = (a(s), a(1.1 * s));
        prop_assert!(lo.a0 > 0.0 && lo.a0 < hi.a0 && hi.a0 < 1.0);
        prop_assert!((lo.integral_vf / (8.0 * std::f64::consts::PI * lo.a0) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn neumann_eigenvalue_follows_leading_law(r in 0.02f64..0.08) {
        let v = make_potential(PotentialSpec::default()).unwrap();
        let (d, ell) = (1e-2, 0.25);
        let p = SlabParams::new(100, r * d * ell, d, ell, 0.2).unwrap();
        let s = solve_neumann_3d(&v, &p, &SolverConfig::default()).unwrap();
        let lead = 3.0 * s.a0 * r.powi(3);
        prop_assert!((s.lambda / lead - 1.0).abs() < 3.0 * s.a0 * r);
    }
}

use proptest::prelude::*;
use slab_core::potentials::{make_potential, PotentialSpec};
use slab_core::scattering::{SlabParams, SlabSolution, SolverConfig};
use slab_core::torus_fourier::{eta_coefficient, w_coefficient, AnisoMetric, Torus};

fn solution() -> SlabSolution {
    let v = make_potential(PotentialSpec::default()).unwrap();
    let p = SlabParams::new(100, 1e-4, 1e-2, 0.25, 0.2).unwrap();
    SlabSolution::solve(&v, &p, &SolverConfig::default()).unwrap()
}

#[test]
fn vertical_modes_carry_no_planar_profile() {
    let sol = solution();
    let t = Torus::new(&sol);
    for p in [[0, 0, 1], [2, 1, 3], [7, 0, 1]] {
        assert_eq!(t.xi(p).unwrap(), 0.0);
    }
    assert!(t.xi([1, 0, 0]).unwrap() != 0.0);
}

#[test]
fn metric_weights_the_short_direction() {
    let m = AnisoMetric::new(0.1);
    let tau = 2.0 * std::f64::consts::PI;
    assert!((m.norm([1, 0, 0]) - tau).abs() < 1e-14);
    assert!((m.norm([0, 0, 1]) - 10.0 * tau).abs() < 1e-12);
    assert!((m.norm_sq([1, 2, 1]) - m.planar([1, 2, 1]).powi(2) - m.vertical([1, 2, 1]).powi(2)).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coefficients_solve_their_equations(n1 in -30i64..=30, n2 in -30i64..=30, n3 in -3i64..=3) {
        prop_assume!([n1, n2, n3] != [0, 0, 0]);
        let sol = solution();
        let t = Torus::new(&sol);
        let p = [n1, n2, n3];
        let w = t.w(p).unwrap();
        prop_assert!(t.eta_equation_residual(p).unwrap().abs() <= 1e-10 * w.abs().max(1e-3));
        prop_assert!(t.xi_equation_residual(p).unwrap().abs() <= 1e-10 * w.abs().max(1e-3));
        let (wt, wr) = t.wtilde(p).unwrap();
        prop_assert!((wt - wr).abs() <= 1e-12 * wt.abs().max(1e-6));
    }

    #[test]
    fn coefficients_respect_lattice_symmetry(n1 in -20i64..=20, n2 in -20i64..=20, n3 in -2i64..=2) {
        prop_assume!([n1, n2, n3] != [0, 0, 0]);
        let sol = solution();
        let t = Torus::new(&sol);
        let base = t.mode([n1, n2, n3]).unwrap();
        for q in [[n2, n1, n3], [-n1, n2, -n3], [n1, -n2, n3]] {
            let c = t.mode(q).unwrap();
            prop_assert_eq!(c.w, base.w);
            prop_assert_eq!(c.eta, base.eta);
            prop_assert_eq!(c.xi, base.xi);
        }
        prop_assert_eq!(eta_coefficient(&sol.sol3d, &sol.params, [n1, n2, n3]).unwrap(), base.eta);
        prop_assert_eq!(w_coefficient(&sol.sol3d, &sol.params, [n1, n2, n3]).unwrap(), base.w);
    }
}

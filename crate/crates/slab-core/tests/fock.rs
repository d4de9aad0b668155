use proptest::prelude::*;
use slab_core::fock_oracle::{
    build_basis, dense_spectrum, ground_state, hamiltonian_matrix, modified_pair_oracle, operator_matrix, operator_matrix_between,
    sector_size, symmetric_modes, total_number, two_mode_bogoliubov_oracle, Monomial, OperatorMatrix,
};
use slab_core::potentials::{make_potential, PotentialSpec};
use slab_core::scattering::SlabParams;

const BUDGET: u64 = 200_000;

#[test]
fn two_mode_ground_state_converges_to_closed_form() {
    for (f, g) in [(2.0, 1.0), (1.0, 0.5), (3.0, 1.5)] {
        let r = two_mode_bogoliubov_oracle(f, g, 80).unwrap();
        let exact: f64 = -f + (f * f - g * g).sqrt();
        assert!((r.e0 - exact).abs() < 1e-6, "{f} {g}: {} vs {exact}", r.e0);
        assert!((r.closed_form - exact).abs() < 1e-14);
    }
    assert!(two_mode_bogoliubov_oracle(1.0, 1.5, 20).is_err());
}

#[test]
fn interacting_ground_state_lies_below_the_condensate() {
    let v = make_potential(PotentialSpec::default()).unwrap();
    let basis = build_basis(&symmetric_modes(&[[1, 0, 0], [0, 1, 0]]), 6, None, BUDGET).unwrap();
    let p = SlabParams::new(6, 0.05, 0.5, 0.25, 0.25).unwrap();
    let h = hamiltonian_matrix(&p, &v, &basis).unwrap();
    let gs = ground_state(&h.matrix, 1e-10).unwrap();
    let spec = dense_spectrum(&h.matrix);
    assert!((spec[0] - gs.energy).abs() < 1e-9 * spec[0].abs().max(1.0));
    assert!(gs.energy < h.factorized_energy);
    let n = total_number(&basis).unwrap();
    assert!(h.matrix.commutator(&n).unwrap().max_abs() < 1e-12);
}

#[test]
fn modified_operators_differ_only_at_finite_particle_number() {
    let small = modified_pair_oracle(2.0, 1.0, [1, 0, 0], 4).unwrap();
    let large = modified_pair_oracle(2.0, 1.0, [1, 0, 0], 64).unwrap();
    assert!(small.commutator_defect > 0.0);
    assert!(large.difference.abs() <= small.difference.abs() + 1e-12);
}

fn modes_strategy() -> impl Strategy<Value = Vec<[i64; 3]>> {
    prop::collection::vec((-2i64..=2, -2i64..=2, -1i64..=1), 1..3).prop_map(|g| {
        let gens: Vec<[i64; 3]> = g.into_iter().map(|(a, b, c)| [a, b, c]).filter(|p| *p != [0, 0, 0]).collect();
        symmetric_modes(&gens)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn basis_size_matches_stars_and_bars(modes in modes_strategy(), n in 0u32..5) {
        let b = build_basis(&modes, n, None, BUDGET).unwrap();
        prop_assert_eq!(b.len() as u64, sector_size(modes.len(), n, None));
        for i in 0..b.len() {
            prop_assert_eq!(b.state(i).iter().sum::<u32>(), n);
            prop_assert_eq!(b.index_of(b.state(i)), Some(i));
        }
    }

    #[test]
    fn canonical_commutation_holds(modes in modes_strategy(), n in 1u32..4, i in 0usize..8, j in 0usize..8) {
        let basis = build_basis(&modes, n, None, BUDGET).unwrap();
        let up = basis.sector(n + 1, BUDGET).unwrap();
        let (p, q) = (modes[i % modes.len()], modes[j % modes.len()]);
        let ap = operator_matrix_between(&Monomial::create(p), &basis, &up).unwrap();
        let aq = operator_matrix_between(&Monomial::annihilate(q), &up, &basis).unwrap();
        let forward = aq.mul(&ap).unwrap();
        let backward = operator_matrix(&Monomial::create(p).then(&Monomial::annihilate(q)), &basis).unwrap();
        let mut comm = forward.add_scaled(&backward, -1.0).unwrap();
        if p == q {
            comm = comm.add_scaled(&OperatorMatrix::identity(basis.len()), -1.0).unwrap();
        }
        prop_assert!(comm.max_abs() <= 1e-13);
    }

    #[test]
    fn modified_pairs_match_plain_pairs(modes in modes_strategy(), n in 1u32..5, i in 0usize..8, j in 0usize..8) {
        let nonzero: Vec<_> = modes.iter().copied().filter(|p| *p != [0, 0, 0]).collect();
        prop_assume!(!nonzero.is_empty());
        let basis = build_basis(&modes, n, None, BUDGET).unwrap();
        let (p, q) = (nonzero[i % nonzero.len()], nonzero[j % nonzero.len()]);
        let b = operator_matrix(&Monomial::b_create(p).then(&Monomial::b_annihilate(q)), &basis).unwrap();
        let a = operator_matrix(&Monomial::create(p).then(&Monomial::annihilate(q)), &basis).unwrap();
        prop_assert!(a.distance(&b).unwrap() <= 1e-13);
    }

    #[test]
    fn parsed_monomials_match_constructors(x in -2i64..=2, y in -2i64..=2) {
        let text = format!("a+[{x}, {y}, 0] a[0,0,0]");
        let parsed = Monomial::parse(&text).unwrap();
        prop_assert_eq!(parsed, Monomial::create([x, y, 0]).then(&Monomial::annihilate([0, 0, 0])));
    }
}

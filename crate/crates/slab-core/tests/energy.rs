use proptest::prelude::*;
use slab_core::energy::{
    bogoliubov_coeffs, classify_region, coupling_g, energy_region_i, thin_slab_gp_point, EnergyOptions, ModeInputs, RegionConstants, RegionTag,
};
use slab_core::scattering::SlabParams;
use slab_core::torus_fourier::AnisoMetric;

const A0: f64 = 0.1369086193594437;

#[test]
fn thick_slab_total_is_the_sum_of_its_parts() {
    let p = SlabParams::gross_pitaevskii(10_000, 0.1, 0.25, 0.2).unwrap();
    let r = energy_region_i(&p, A0, &EnergyOptions::default()).unwrap();
    assert!(r.is_consistent());
    assert!(r.frak_e_d < 0.0 && r.e_bog > 0.0);
    assert!((r.leading - 4.0 * std::f64::consts::PI * A0 * (p.n as f64 - 1.0)).abs() < 1e-9 * r.leading);
}

#[test]
fn exponentially_thin_slabs_are_region_three() {
    let (a, d) = thin_slab_gp_point(20, A0, -0.2).unwrap();
    let l = classify_region(20, a, d, &RegionConstants::default()).unwrap();
    assert!(l.contains(RegionTag::III));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_admissible_point_gets_a_label(log_n in 1.0f64..8.0, log_d in -40.0f64..-0.1, gap in 0.0f64..6.0) {
        let n = 10f64.powf(log_n) as u64;
        let d = 10f64.powf(log_d);
        let a = d / 10f64.powf(gap) / n as f64;
        let l = classify_region(n, a, d, &RegionConstants::default()).unwrap();
        prop_assert!(!l.tags.is_empty());
        prop_assert!(l.tags.windows(2).all(|w| w[0] < w[1]));
        prop_assert!((l.witnesses.d_over_a / (d / a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thin_slab_points_are_normalized(n in 10u64..200, upsilon in -1.0f64..-0.05) {
        let (a, d) = thin_slab_gp_point(n, A0, upsilon).unwrap();
        let c = coupling_g(n, a, d, A0).unwrap();
        prop_assert!((n as f64 * c.g / A0 - 1.0).abs() < 1e-9);
        prop_assert!(c.g > 0.0 && c.g_tilde > 0.0);
    }

    #[test]
    fn dispersion_is_the_bogoliubov_root(n1 in -20i64..=20, n2 in -20i64..=20, n3 in 0i64..=2, w in 0.0f64..1e-3) {
        prop_assume!([n1, n2, n3] != [0, 0, 0]);
        let p = SlabParams::gross_pitaevskii(1_000, 0.1, 0.25, 0.2).unwrap();
        let c = bogoliubov_coeffs([n1, n2, n3], &p, A0, &ModeInputs { w, thin: None }).unwrap();
        prop_assert!(c.g.abs() < c.f);
        prop_assert!((c.dispersion * c.dispersion - (c.f * c.f - c.g * c.g)).abs() <= 1e-10 * c.f * c.f);
        prop_assert!(c.f >= AnisoMetric::new(0.1).norm_sq([n1, n2, n3]));
        prop_assert!(((2.0 * c.tau).tanh() + c.g / c.f).abs() <= 1e-12);
    }
}

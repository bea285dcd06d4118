use proptest::prelude::*;

use hetnet::analytics::{
    build_offspring_matrix, example4_extinction, r0_unweighted_closed_form, spectral_radius,
    EXTINCTION_MAX_ITER, EXTINCTION_TOL, SPECTRAL_MAX_ITER, SPECTRAL_TOL,
};
use hetnet::distributions::{make_truncated_poisson, NegBinParams};
use hetnet::epidemic::transmission_prob;
use hetnet::experiment::max_feasible_cv;
use hetnet::{DegreeDistribution, TraitAtom, TraitDistribution, WeightKernel};

fn trait_atoms() -> impl Strategy<Value = Vec<TraitAtom>> {
    prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64, 0.01..1.0f64), 1..6).prop_map(|raw| {
        let total: f64 = raw.iter().map(|a| a.2).sum();
        raw.into_iter()
            .map(|(x, y, p)| TraitAtom { x, y, prob: p / total })
            .collect()
    })
}

fn degree_pmf() -> impl Strategy<Value = DegreeDistribution> {
    prop::collection::btree_map(1u32..12, 0.01..1.0f64, 1..5).prop_map(|m| {
        let total: f64 = m.values().sum();
        DegreeDistribution::new(m.into_iter().map(|(d, p)| (d, p / total)).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn truncated_poisson_is_normalized(lambda in 0.05..25.0f64, dmax in 1u32..60) {
        let d = make_truncated_poisson(lambda, dmax).unwrap();
        let total: f64 = d.support().iter().map(|&(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(d.max_degree() <= dmax);
    }

    #[test]
    fn two_point_reproduces_moments(
        mu_x in 0.05..0.95f64,
        fx in 0.0..1.0f64,
        mu_y in 0.05..0.95f64,
        fy in 0.0..1.0f64,
        rho in -1.0..=1.0f64,
    ) {
        let (cv_x, cv_y) = (fx * max_feasible_cv(mu_x), fy * max_feasible_cv(mu_y));
        let t = TraitDistribution::two_point(mu_x, cv_x, mu_y, cv_y, rho).unwrap();
        let (mx, my) = (t.x_moments(), t.y_moments());
        prop_assert!((mx.mean - mu_x).abs() <= 1e-12);
        prop_assert!((my.mean - mu_y).abs() <= 1e-12);
        prop_assert!((mx.std_dev() - mu_x * cv_x).abs() <= 1e-9);
        prop_assert!((my.std_dev() - mu_y * cv_y).abs() <= 1e-9);
        if cv_x > 1e-3 && cv_y > 1e-3 {
            prop_assert!((t.correlation().unwrap() - rho).abs() <= 1e-9);
        }
    }

    #[test]
    fn negbin_truncation_matches_pgf(r in 1u32..12, extra in 0.0..30.0f64, s in 0.0..=1.0f64) {
        let nb = NegBinParams::from_mean(r, f64::from(r) + extra).unwrap();
        let pmf = nb.truncated_pmf(1e-12).unwrap();
        prop_assert!((pmf.pgf(s) - nb.pgf(s)).abs() <= 1e-10);
        prop_assert!((pmf.moments().mean - nb.mean()).abs() <= 1e-8 * nb.mean());
    }

    #[test]
    fn negbin_cv_decreases_in_r(r in 1u32..40, mu in 41.0..200.0f64) {
        let a = NegBinParams::from_mean(r, mu).unwrap();
        let b = NegBinParams::from_mean(r + 1, mu).unwrap();
        prop_assert!(b.cv() < a.cv());
    }

    #[test]
    fn unweighted_r0_equals_trace(deg in degree_pmf(), atoms in trait_atoms()) {
        let traits = TraitDistribution::new(atoms).unwrap();
        let m = build_offspring_matrix(&deg, &WeightKernel::unweighted(), &traits).unwrap();
        let r0 = spectral_radius(&m, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        prop_assert!((r0 - m.trace()).abs() <= 1e-9 * m.trace().max(1.0));
    }

    #[test]
    fn correlation_sign_sets_r0_direction(
        mu in 0.05..0.95f64,
        f in 0.01..1.0f64,
        rho in -1.0..=1.0f64,
    ) {
        let cv = f * max_feasible_cv(mu);
        let with = r0_unweighted_closed_form(mu, cv, mu, cv, rho, 5.0, 0.0);
        let without = r0_unweighted_closed_form(mu, cv, mu, cv, 0.0, 5.0, 0.0);
        let diff = with - without;
        if rho > 1e-9 {
            prop_assert!(diff > 0.0);
        } else if rho < -1e-9 {
            prop_assert!(diff < 0.0);
        }
    }

    #[test]
    fn transmission_is_monotone(w in 1u32..50, y in 0.0..=1.0f64, x in 0.0..=1.0f64, dy in 0.0..0.5f64) {
        let t = transmission_prob(w, y, x);
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert!(transmission_prob(w + 1, y, x) >= t);
        prop_assert!(transmission_prob(w, (y + dy).min(1.0), x) >= t);
        prop_assert!(transmission_prob(w, y, (x + dy).min(1.0)) >= t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn outbreak_possible_iff_supercritical(d in 2u32..8, mu in 0.1..0.9f64, f in 0.0..=1.0f64) {
        let cv = f * max_feasible_cv(mu);
        let sol = example4_extinction(d, mu, cv, EXTINCTION_TOL, EXTINCTION_MAX_ITER).unwrap();
        prop_assume!((sol.r0 - 1.0).abs() > 1e-2);
        prop_assert_eq!(sol.pi > 0.0, sol.r0 > 1.0);
    }
}

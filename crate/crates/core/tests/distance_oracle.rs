mod common;

use bnpnorm::dirichlet::{dp_weights, BaseMeasure, DPApproximation, RngStream};
use bnpnorm::distance::{ad_distance, cvm_distance, DistanceError, FnCdf, SampleLabel};
use bnpnorm::mahalanobis::SquaredDistances;
use bnpnorm::rbtest::distance_sample;
use bnpnorm::specialfn::{ChiSquare, DegreesOfFreedom};
use common::{oracle, stats};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp1};

fn chi2(m: u32) -> ChiSquare {
    ChiSquare::new(DegreesOfFreedom::new(m).unwrap())
}

/// Random atoms from chi-square(m) and random normalized jumps, unsorted.
fn random_draw(rng: &mut ChaCha8Rng, n: usize, m: u32) -> (Vec<f64>, Vec<f64>) {
    let law = ChiSquared::new(m as f64).unwrap();
    let atoms: Vec<f64> = (0..n).map(|_| law.sample(rng)).collect();
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    (atoms, raw.iter().map(|v| v / total).collect())
}

#[test]
fn closed_forms_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut worst_ad: f64 = 0.0;
    let mut worst_cvm: f64 = 0.0;
    for case in 0..200 {
        let n = rng.random_range(1..=10);
        let m = (case % 5 + 1) as u32;
        let (atoms, jumps) = random_draw(&mut rng, n, m);
        let g = chi2(m);
        let p = DPApproximation::from_parts(atoms.clone(), jumps.clone()).unwrap();
        let cdf = |t: f64| g.cdf_sf(t);
        let dens = |t: f64| oracle::chi2_density(t, m);
        let ad_q = oracle::ad_by_quadrature(&atoms, &jumps, cdf, dens);
        let cvm_q = oracle::cvm_by_quadrature(&atoms, &jumps, cdf, dens);
        let ad = ad_distance(&p, &g).unwrap();
        let cvm = cvm_distance(&p, &g).unwrap();
        assert!(
            (ad - ad_q).abs() <= 1e-8,
            "case {case}: N={n} m={m} closed {ad} quadrature {ad_q}"
        );
        assert!(
            (cvm - cvm_q).abs() <= 1e-10,
            "case {case}: N={n} m={m} closed {cvm} quadrature {cvm_q}"
        );
        worst_ad = worst_ad.max((ad - ad_q).abs());
        worst_cvm = worst_cvm.max((cvm - cvm_q).abs());
    }
    eprintln!("worst |AD - quad| = {worst_ad:e}, worst |CvM - quad| = {worst_cvm:e}");
}

#[test]
fn prefix_sum_form_matches_triple_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let uniform = FnCdf(|t: f64| t);
    for _ in 0..500 {
        let n = rng.random_range(1..=8);
        let atoms: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = raw.iter().sum();
        let jumps: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let p = DPApproximation::from_parts(atoms, jumps).unwrap();
        let fast = ad_distance(&p, &uniform).unwrap();
        let slow = oracle::ad_triple_sum(p.atoms(), p.jumps()).max(0.0);
        assert!((fast - slow).abs() <= 1e-12, "N={n}: {fast} vs {slow}");
    }
}

#[test]
fn single_atom_values() {
    let p = DPApproximation::from_parts(vec![0.5], vec![1.0]).unwrap();
    let uniform = FnCdf(|t: f64| t);
    let ad = ad_distance(&p, &uniform).unwrap();
    assert!((ad - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
    let cvm = cvm_distance(&p, &uniform).unwrap();
    assert!((cvm - 1.0 / 12.0).abs() < 1e-16);
}

#[test]
fn non_monotone_cdf_is_rejected() {
    let p = DPApproximation::from_parts(vec![0.2, 0.4, 0.8], vec![0.3, 0.3, 0.4]).unwrap();
    let bent = FnCdf(|t: f64| if t < 0.5 { t } else { 1.0 - t });
    assert!(matches!(
        ad_distance(&p, &bent),
        Err(DistanceError::NonMonotoneCdf { index: 2, .. })
    ));
    assert!(matches!(
        cvm_distance(&p, &bent),
        Err(DistanceError::NonMonotoneCdf { .. })
    ));
}

/// Atoms drawn from `G` itself with weights from a fixed stream; the
/// distance should not depend on `G`.
fn self_distances(atom: &dyn Fn(&mut ChaCha8Rng) -> f64, cdf: &dyn Fn(f64) -> f64, atom_seed: u64) -> Vec<f64> {
    let g = FnCdf(cdf);
    (0..2000)
        .map(|k| {
            let jumps = dp_weights(5.0, 100, &mut RngStream::new(9, k).rng()).unwrap();
            let mut rng = RngStream::new(atom_seed, k).rng();
            let atoms = (0..100).map(|_| atom(&mut rng)).collect();
            ad_distance(&DPApproximation::from_parts(atoms, jumps).unwrap(), &g).unwrap()
        })
        .collect()
}

#[test]
fn distance_is_distribution_free() {
    let c2 = chi2(2);
    let c7 = chi2(7);
    let law2 = ChiSquared::new(2.0).unwrap();
    let law7 = ChiSquared::new(7.0).unwrap();
    let s2 = self_distances(&|r| law2.sample(r), &|t| c2.cdf_sf(t).0, 101);
    let s7 = self_distances(&|r| law7.sample(r), &|t| c7.cdf_sf(t).0, 1001);
    let su = self_distances(&|r| r.random::<f64>(), &|t| t, 2001);
    let crit = stats::ks_two_sample_critical_1pct(2000, 2000);
    for (name, a, b) in [
        ("chi2(2)/chi2(7)", &s2, &s7),
        ("chi2(2)/U", &s2, &su),
        ("chi2(7)/U", &s7, &su),
    ] {
        let ks = stats::ks_two_sample(a, b);
        assert!(ks < crit, "{name}: KS {ks} >= {crit}");
    }
}

#[test]
fn posterior_concentrates_as_a_grows() {
    let law = ChiSquared::new(2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = SquaredDistances::new((0..50).map(|_| law.sample(&mut rng)).collect()).unwrap();
    let g = chi2(2);
    let centre = bnpnorm::dirichlet::CentreLaw::chi_square(g.df());
    let means: Vec<f64> = [10.0, 1e2, 1e3, 1e4]
        .iter()
        .map(|&a| {
            let base = BaseMeasure::posterior(a, &d, centre).unwrap();
            distance_sample(a + 50.0, &base, &g, 500, 500, 11, 0, SampleLabel::Posterior)
                .unwrap()
                .mean()
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bound_chain_holds(seed in any::<u64>(), n in 1usize..40, m in 1u32..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (atoms, jumps) = random_draw(&mut rng, n, m);
        let g = chi2(m);
        let p = DPApproximation::from_parts(atoms, jumps).unwrap();
        let ad = ad_distance(&p, &g).unwrap();
        let cvm = cvm_distance(&p, &g).unwrap();
        let u: Vec<f64> = p.atoms().iter().map(|&y| g.cdf_sf(y).0).collect();
        let sup = oracle::sup_distance(&u, p.jumps());
        prop_assert!(ad >= 0.0 && cvm >= 0.0);
        prop_assert!(ad >= 4.0 * cvm - 1e-12, "ad {} < 4 cvm {}", ad, 4.0 * cvm);
        prop_assert!(4.0 * cvm >= 4.0 / 3.0 * sup.powi(3) - 1e-12, "4 cvm {} < 4/3 sup^3 {}", 4.0 * cvm, 4.0 / 3.0 * sup.powi(3));
    }
}

use mincorr::betagen::{
    c_beta_antithetic, cached_c_estimate, phi_beta, BetaTrivariateSampler, BetaVecTransform,
};
use mincorr::multigen::CorrMatrix;
use mincorr::stats::{ks_test, mean, variance, Alpha};
use mincorr::{Error, Marginal, RngStream, SampleBatch, Warning};

fn transformed(t: &BetaVecTransform, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed);
    let mut u = vec![0.0; t.dim_u()];
    (0..n)
        .map(|_| {
            rng.fill_uniform(&mut u);
            phi_beta(t, &u).unwrap()
        })
        .collect()
}

#[test]
fn one_one_transform_is_uniform() {
    let t = BetaVecTransform::new(1, 1).unwrap();
    let xs = transformed(&t, 100_000, 1);
    assert!(ks_test(&xs, &Marginal::uniform(), Alpha::P01).pass);
}

#[test]
fn four_seven_transform_has_beta_moments() {
    let t = BetaVecTransform::new(4, 7).unwrap();
    let xs = transformed(&t, 1_000_000, 2);
    assert!((mean(&xs) - 4.0 / 11.0).abs() < 0.002);
    // Var of the sample variance: (mu4 - sigma^4 (n-3)/(n-1)) / n, with
    // mu4 for Beta(4, 7) from its raw moments.
    let n = xs.len() as f64;
    let raw = |k: i32| {
        (0..k)
            .map(|r| (4.0 + r as f64) / (11.0 + r as f64))
            .product::<f64>()
    };
    let m = raw(1);
    let mu4 = raw(4) - 4.0 * m * raw(3) + 6.0 * m * m * raw(2) - 3.0 * m.powi(4);
    let s2 = t.variance();
    let se = ((mu4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).sqrt();
    assert!(
        (variance(&xs) - s2).abs() < 3.0 * se,
        "{} vs {s2} (se {se})",
        variance(&xs)
    );
    assert!(ks_test(&xs, &t.marginal(), Alpha::P01).pass);
}

#[test]
fn antithetic_coefficient_four_seven() {
    let t = BetaVecTransform::new(4, 7).unwrap();
    let (c, se) = c_beta_antithetic(&t, 1_000_000, &mut RngStream::new(3)).unwrap();
    assert!((c + 0.71).abs() < 0.02, "{c}");
    assert!(se < 0.002);
}

#[test]
fn antithetic_coefficient_is_negative_and_above_minus_one() {
    for (a, b) in [(1, 1), (1, 5), (2, 3), (6, 2)] {
        let t = BetaVecTransform::new(a, b).unwrap();
        let (c, se) = c_beta_antithetic(&t, 50_000, &mut RngStream::new(4)).unwrap();
        assert!(
            c + 3.0 * se < 0.0 && c - 3.0 * se > -1.0,
            "({a},{b}): {c} +- {se}"
        );
    }
}

#[test]
fn one_one_coefficient_reproducible_across_seeds() {
    let t = BetaVecTransform::new(1, 1).unwrap();
    let (a, sa) = c_beta_antithetic(&t, 1_000_000, &mut RngStream::new(10)).unwrap();
    let (b, sb) = c_beta_antithetic(&t, 1_000_000, &mut RngStream::new(11)).unwrap();
    assert!(a < 0.0 && b < 0.0);
    assert!(
        (a - b).abs() < 3.0 * (sa * sa + sb * sb).sqrt(),
        "{a} vs {b}"
    );
}

#[test]
fn cached_estimate_is_frozen() {
    let t = BetaVecTransform::new(4, 7).unwrap();
    let a = cached_c_estimate(&t);
    let b = cached_c_estimate(&t);
    assert_eq!(a, b);
    assert!((a.estimate + 0.71).abs() < 0.02);
}

fn check_experiment(p12: f64, p13: f64, p23: f64, seed: u64) {
    let m = CorrMatrix::trivariate(p12, p13, p23).unwrap();
    let s = BetaTrivariateSampler::new(4, 7, &m).unwrap();
    let b = SampleBatch::generate(&s, 10_000, seed);
    assert!(b.warnings.is_empty());
    let beta = Marginal::beta_int(4, 7).unwrap();
    for j in 0..3 {
        let col = b.column(j);
        assert!(col.iter().all(|&x| x > 0.0 && x < 1.0));
        assert!(ks_test(&col, &beta, Alpha::P01).pass, "margin {j}");
    }
    let c = b.correlation_matrix().unwrap();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert!(
            (c[i][j] - m.get(i, j)).abs() < 0.03,
            "({i},{j}): {} vs {}",
            c[i][j],
            m.get(i, j)
        );
    }
}

#[test]
fn positive_experiment() {
    check_experiment(0.4, 0.3, 0.2, 21);
}

#[test]
fn negative_experiment() {
    check_experiment(-0.4, -0.3, 0.3, 22);
}

#[test]
fn negative_correlations_at_scale() {
    let m = CorrMatrix::trivariate(-0.4, -0.3, 0.3).unwrap();
    let s = BetaTrivariateSampler::new(4, 7, &m).unwrap();
    let b = SampleBatch::generate(&s, 500_000, 23);
    let c = b.correlation_matrix().unwrap();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert!(
            (c[i][j] - m.get(i, j)).abs() < 0.01,
            "({i},{j}): {}",
            c[i][j]
        );
    }
}

#[test]
fn below_the_coefficient_stops() {
    let m = CorrMatrix::trivariate(-0.9, -0.1, 0.1).unwrap();
    assert!(matches!(
        BetaTrivariateSampler::new(4, 7, &m),
        Err(Error::NotApplicable(_))
    ));
}

#[test]
fn approximate_branch_is_flagged() {
    // Factors (-0.8, 0.75, 0.5): entries above the coefficient, first factor below.
    let m = CorrMatrix::trivariate(-0.6, -0.4, 0.375).unwrap();
    let s = BetaTrivariateSampler::new(4, 7, &m).unwrap();
    let b = SampleBatch::generate(&s, 50_000, 24);
    assert!(matches!(
        &b.warnings[..],
        [Warning::ApproximateNegative { .. }]
    ));
    // The unaffected positive pair is still exact.
    let c = b.correlation_matrix().unwrap();
    assert!((c[1][2] - 0.375).abs() < 0.02, "{}", c[1][2]);
}

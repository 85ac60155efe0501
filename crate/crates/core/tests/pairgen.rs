use mincorr::bounds::EXP_MIN_CORR;
use mincorr::pairgen::{frechet_bounds, ErlangPairSampler, PairSampler};
use mincorr::stats::{empirical_joint_cdf, ks_test, pearson_corr, Alpha};
use mincorr::{Marginal, RngStream, SampleBatch};
use proptest::prelude::*;

fn draw(s: &PairSampler, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = RngStream::new(seed);
    (0..n).map(|_| s.sample(&mut rng)).unzip()
}

#[test]
fn hits_targets_across_the_range() {
    let families = [
        Marginal::exponential(1.0).unwrap(),
        Marginal::weibull(0.5).unwrap(),
        Marginal::beta_int(2, 5).unwrap(),
        Marginal::gaussian(1.0, 2.0).unwrap(),
    ];
    for (i, f) in families.iter().enumerate() {
        let probe = PairSampler::new(*f, *f, 0.0).unwrap();
        let r = *probe.range();
        for (j, frac) in [-0.9, -0.3, 0.5, 0.9].into_iter().enumerate() {
            let rho = if frac < 0.0 {
                -frac * r.rho_min
            } else {
                frac * r.rho_max
            };
            let s = PairSampler::new(*f, *f, rho).unwrap();
            let (xs, ys) = draw(&s, 300_000, 10 * i as u64 + j as u64);
            let got = pearson_corr(&xs, &ys).unwrap();
            assert!((got - rho).abs() < 0.01, "{f} rho={rho}: {got}");
            assert!(ks_test(&xs, f, Alpha::P01).pass, "{f} rho={rho}: x margin");
            assert!(ks_test(&ys, f, Alpha::P01).pass, "{f} rho={rho}: y margin");
        }
    }
}

#[test]
fn different_marginals() {
    let f = Marginal::weibull(0.8).unwrap();
    let g = Marginal::beta_pow(2.0).unwrap();
    let probe = PairSampler::new(f, g, 0.0).unwrap();
    for rho in [
        0.95 * probe.range().rho_min,
        0.4,
        0.95 * probe.range().rho_max,
    ] {
        let s = PairSampler::new(f, g, rho).unwrap();
        let (xs, ys) = draw(&s, 300_000, 77);
        let got = pearson_corr(&xs, &ys).unwrap();
        assert!((got - rho).abs() < 0.01, "rho={rho}: {got}");
        assert!(ks_test(&xs, &f, Alpha::P01).pass);
        assert!(ks_test(&ys, &g, Alpha::P01).pass);
    }
}

#[test]
fn uniform_joint_cdf_at_the_centre() {
    let u = Marginal::uniform();
    let s = PairSampler::new(u, u, 0.5).unwrap();
    let (xs, ys) = draw(&s, 1_000_000, 3);
    let got = empirical_joint_cdf(&xs, &ys, 0.5, 0.5);
    assert!((got - 0.375).abs() < 0.005, "{got}");
}

#[test]
fn extremal_pairs_lie_on_the_quantile_curves() {
    let f = Marginal::erlang(3, 1.5).unwrap();
    let g = Marginal::gaussian(-2.0, 0.3).unwrap();
    let probe = PairSampler::new(f, g, 0.0).unwrap();
    let top = PairSampler::new(f, g, probe.range().rho_max).unwrap();
    let bottom = PairSampler::new(f, g, probe.range().rho_min).unwrap();
    let mut rng = RngStream::new(9);
    for _ in 0..20_000 {
        let (x, y) = top.sample(&mut rng);
        let want = if f.cdf(x) <= 0.5 {
            g.quantile(f.cdf(x)).unwrap()
        } else {
            g.upper_quantile(f.sf(x)).unwrap()
        };
        assert!(
            (y - want).abs() <= 1e-9 * (1.0 + want.abs()),
            "{x} -> {y} vs {want}"
        );
        let (x, y) = bottom.sample(&mut rng);
        let want = if f.cdf(x) <= 0.5 {
            g.upper_quantile(f.cdf(x)).unwrap()
        } else {
            g.quantile(f.sf(x)).unwrap()
        };
        assert!(
            (y - want).abs() <= 1e-9 * (1.0 + want.abs()),
            "{x} -> {y} vs {want}"
        );
    }
}

#[test]
fn erlang_sums() {
    let g = Marginal::erlang(5, 2.0).unwrap();
    for (k, rho) in [-0.6, 0.7].into_iter().enumerate() {
        let s = ErlangPairSampler::new(5, 2.0, rho).unwrap();
        let mut rng = RngStream::new(50 + k as u64);
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..300_000).map(|_| s.sample(&mut rng)).unzip();
        let got = pearson_corr(&xs, &ys).unwrap();
        assert!((got - rho).abs() < 0.01, "rho={rho}: {got}");
        assert!(ks_test(&xs, &g, Alpha::P01).pass);
        assert!(ks_test(&ys, &g, Alpha::P01).pass);
    }
    // The floor is the exponential one for every shape.
    assert!(ErlangPairSampler::new(5, 2.0, EXP_MIN_CORR).is_ok());
    assert!(ErlangPairSampler::new(5, 2.0, EXP_MIN_CORR - 1e-6).is_err());
}

#[test]
fn batches_are_reproducible() {
    let e = Marginal::exponential(1.0).unwrap();
    let s = PairSampler::new(e, e, -0.5).unwrap();
    let a = SampleBatch::generate(&s, 200_000, 42);
    let b = SampleBatch::generate(&s, 200_000, 42);
    assert_eq!(a, b);
    let got = pearson_corr(&a.column(0), &a.column(1)).unwrap();
    assert!((got + 0.5).abs() < 0.01);
}

proptest! {
    #[test]
    fn mixture_cdf_stays_inside_frechet_bounds(
        frac in -1.0f64..1.0,
        x in 0.01f64..4.0,
        y in 0.01f64..0.99,
    ) {
        let f = Marginal::exponential(1.0).unwrap();
        let g = Marginal::beta_pow(0.5).unwrap();
        let probe = PairSampler::new(f, g, 0.0).unwrap();
        let r = probe.range();
        let rho = if frac < 0.0 { -frac * r.rho_min } else { frac * r.rho_max };
        let s = PairSampler::new(f, g, rho).unwrap();
        let h = s.joint_cdf(x, y);
        let (lo, hi) = frechet_bounds(&f, &g, x, y);
        prop_assert!(lo - 1e-15 <= h && h <= hi + 1e-15);
        prop_assert!(s.accept_prob() >= 0.0 && s.accept_prob() <= 1.0);
        // Mixture weight times extremal correlation reproduces the target.
        let ext = if rho < 0.0 { r.rho_min } else { r.rho_max };
        prop_assert!((s.accept_prob() * ext - rho).abs() < 1e-12);
    }
}

//! Validation statistics: sample correlation, one-sample Kolmogorov–Smirnov
//! against an analytic CDF, and the empirical joint CDF.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::Marginal;

/// Significance levels with tabulated asymptotic KS coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alpha {
    #[serde(rename = "0.05")]
    P05,
    #[serde(rename = "0.01")]
    P01,
}

impl Alpha {
    /// `c(alpha)` in the large-sample critical value `c(alpha) / sqrt(n)`.
    pub fn coefficient(self) -> f64 {
        match self {
            Alpha::P05 => 1.358,
            Alpha::P01 => 1.628,
        }
    }

    pub fn level(self) -> f64 {
        match self {
            Alpha::P05 => 0.05,
            Alpha::P01 => 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub statistic: f64,
    pub n: usize,
    pub threshold: f64,
    pub alpha: f64,
    pub pass: bool,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance, two-pass.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Sample Pearson correlation, two-pass.
pub fn pearson_corr(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateInput("need at least two pairs".into()));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateInput("zero sample variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// `sup_x |F_n(x) - F(x)|` for the given CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

/// One-sample KS test against the analytic CDF of `m`, using the
/// asymptotic critical value. Intended for `n >= 50`.
pub fn ks_test(samples: &[f64], m: &Marginal, alpha: Alpha) -> GofReport {
    ks_test_cdf(samples, |x| m.cdf(x), alpha)
}

pub fn ks_test_cdf<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, alpha: Alpha) -> GofReport {
    let n = samples.len();
    let statistic = ks_statistic(samples, cdf).clamp(0.0, 1.0);
    let threshold = alpha.coefficient() / (n as f64).sqrt();
    GofReport {
        statistic,
        n,
        threshold,
        alpha: alpha.level(),
        pass: statistic < threshold,
    }
}

/// Fraction of pairs with `xs_i <= x` and `ys_i <= y`.
pub fn empirical_joint_cdf(xs: &[f64], ys: &[f64], x: f64, y: f64) -> f64 {
    assert_eq!(xs.len(), ys.len(), "paired samples must have equal length");
    assert!(!xs.is_empty(), "need at least one pair");
    let hits = xs
        .iter()
        .zip(ys)
        .filter(|(&a, &b)| a <= x && b <= y)
        .count();
    hits as f64 / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        let xs = [0.3, 1.7, -2.0, 5.5];
        assert_abs_diff_eq!(pearson_corr(&xs, &xs).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            pearson_corr(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        // means 1.5 and 2.5; sxy = 4, sxx = syy = 5
        assert_abs_diff_eq!(
            pearson_corr(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(),
            0.8,
            epsilon = 1e-15
        );
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson_corr(&[1.0, 2.0], &[1.0]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            pearson_corr(&[1.0], &[1.0]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            pearson_corr(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateInput(_))
        ));
    }

    proptest! {
        #[test]
        fn pearson_affine_invariant(
            pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
            scale_x in 0.01f64..50.0,
            shift_x in -100.0f64..100.0,
            scale_y in 0.01f64..50.0,
            shift_y in -100.0f64..100.0,
        ) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            if let Ok(r) = pearson_corr(&xs, &ys) {
                let xt: Vec<f64> = xs.iter().map(|x| scale_x * x + shift_x).collect();
                let yt: Vec<f64> = ys.iter().map(|y| scale_y * y + shift_y).collect();
                let rt = pearson_corr(&xt, &yt).unwrap();
                prop_assert!((r - rt).abs() < 1e-12, "{} vs {}", r, rt);
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn joint_cdf_monotone(
            pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..50),
            x in 0.0f64..1.0, y in 0.0f64..1.0, dx in 0.0f64..0.5, dy in 0.0f64..0.5,
        ) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let a = empirical_joint_cdf(&xs, &ys, x, y);
            let b = empirical_joint_cdf(&xs, &ys, x + dx, y + dy);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn joint_cdf_corners() {
        let xs = [0.1, 0.2, 0.3];
        let ys = [0.5, 0.6, 0.7];
        assert_eq!(empirical_joint_cdf(&xs, &ys, 1.0, 1.0), 1.0);
        assert_eq!(empirical_joint_cdf(&xs, &ys, 0.0, 1.0), 0.0);
        assert_eq!(empirical_joint_cdf(&xs, &ys, 0.25, 0.65), 2.0 / 3.0);
    }

    #[test]
    fn ks_accepts_matching_and_rejects_mismatch() {
        let e = Marginal::exponential(1.0).unwrap();
        let mut rng = RngStream::new(11);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| e.quantile(rng.uniform()).unwrap())
            .collect();
        let good = ks_test(&xs, &e, Alpha::P01);
        assert!(good.pass, "{good:?}");
        let bad = ks_test(&xs, &Marginal::uniform(), Alpha::P01);
        assert!(!bad.pass);
        assert!(bad.statistic <= 1.0 && good.statistic >= 0.0);
    }

    #[test]
    fn ks_statistic_small_case() {
        // Samples at 0.25 and 0.75 against U(0,1): gaps of 0.25 everywhere.
        let d = ks_statistic(&[0.75, 0.25], |x| x.clamp(0.0, 1.0));
        assert_abs_diff_eq!(d, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn ks_pass_rate_over_seeds() {
        let w = Marginal::weibull(2.0).unwrap();
        let mut passes = 0;
        for seed in 0..100u64 {
            let mut rng = RngStream::new(seed);
            let xs: Vec<f64> = (0..2_000)
                .map(|_| w.quantile(rng.uniform()).unwrap())
                .collect();
            if ks_test(&xs, &w, Alpha::P01).pass {
                passes += 1;
            }
        }
        assert!(passes >= 97, "passed {passes}/100");
    }
}

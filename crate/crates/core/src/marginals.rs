//! Registry of supported marginal families.
//!
//! Every family exposes an exact, non-decreasing quantile transform, its
//! CDF and survival function, and closed-form mean and standard deviation.
//! Parameters are checked once, when a [`Marginal`] is built.
//!
//! | family | parameters | quantile `Q(u)` |
//! |---|---|---|
//! | `uniform` | none | `u` |
//! | `arcsine` | none | `-cos(pi u)` on `[-1, 1]` |
//! | `exponential` | scale `lambda` | `-lambda ln(1 - u)` |
//! | `weibull` | shape `k`, unit scale | `(-ln(1 - u))^(1/k)` |
//! | `erlang` | shape `n`, scale `lambda` | numerical inversion |
//! | `beta_pow` | `a` (Beta(a, 1)) | `u^(1/a)` |
//! | `beta_int` | integer `nu1`, `nu2` | numerical inversion |
//! | `gaussian` | `mu`, `sigma` | Wichura AS241 |
//!
//! `lambda` is a scale (mean) parameter throughout: Exponential(lambda) has
//! density `exp(-x/lambda)/lambda`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use libm::{erfc, lgamma as ln_gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Family tag plus raw parameters, as they appear in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    #[serde(alias = "uniform01")]
    Uniform,
    Arcsine,
    Exponential {
        #[serde(default = "one")]
        lambda: f64,
    },
    Weibull {
        k: f64,
    },
    Erlang {
        n: u32,
        #[serde(default = "one")]
        lambda: f64,
    },
    BetaPow {
        a: f64,
    },
    BetaInt {
        nu1: u32,
        nu2: u32,
    },
    Gaussian {
        #[serde(default)]
        mu: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// A validated marginal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct Marginal {
    family: Family,
}

impl TryFrom<Family> for Marginal {
    type Error = Error;

    fn try_from(family: Family) -> Result<Self> {
        Marginal::new(family)
    }
}

impl From<Marginal> for Family {
    fn from(m: Marginal) -> Family {
        m.family
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

fn positive_int(name: &str, v: u32) -> Result<()> {
    if v >= 1 {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!(
            "{name} must be >= 1, got {v}"
        )))
    }
}

impl Marginal {
    pub fn new(family: Family) -> Result<Self> {
        match family {
            Family::Uniform | Family::Arcsine => {}
            Family::Exponential { lambda } => positive("lambda", lambda)?,
            Family::Weibull { k } => positive("k", k)?,
            Family::Erlang { n, lambda } => {
                positive_int("n", n)?;
                positive("lambda", lambda)?;
            }
            Family::BetaPow { a } => positive("a", a)?,
            Family::BetaInt { nu1, nu2 } => {
                positive_int("nu1", nu1)?;
                positive_int("nu2", nu2)?;
            }
            Family::Gaussian { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::ParameterDomain(format!(
                        "mu must be finite, got {mu}"
                    )));
                }
                positive("sigma", sigma)?;
            }
        }
        Ok(Self { family })
    }

    pub fn uniform() -> Self {
        Self {
            family: Family::Uniform,
        }
    }

    pub fn arcsine() -> Self {
        Self {
            family: Family::Arcsine,
        }
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        Self::new(Family::Exponential { lambda })
    }

    pub fn weibull(k: f64) -> Result<Self> {
        Self::new(Family::Weibull { k })
    }

    pub fn erlang(n: u32, lambda: f64) -> Result<Self> {
        Self::new(Family::Erlang { n, lambda })
    }

    pub fn beta_pow(a: f64) -> Result<Self> {
        Self::new(Family::BetaPow { a })
    }

    pub fn beta_int(nu1: u32, nu2: u32) -> Result<Self> {
        Self::new(Family::BetaInt { nu1, nu2 })
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::Gaussian { mu, sigma })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mean(&self) -> f64 {
        match self.family {
            Family::Uniform => 0.5,
            Family::Arcsine => 0.0,
            Family::Exponential { lambda } => lambda,
            Family::Weibull { k } => ln_gamma(1.0 + 1.0 / k).exp(),
            Family::Erlang { n, lambda } => n as f64 * lambda,
            Family::BetaPow { a } => a / (a + 1.0),
            Family::BetaInt { nu1, nu2 } => nu1 as f64 / (nu1 + nu2) as f64,
            Family::Gaussian { mu, .. } => mu,
        }
    }

    pub fn variance(&self) -> f64 {
        match self.family {
            Family::Uniform => 1.0 / 12.0,
            Family::Arcsine => 0.5,
            Family::Exponential { lambda } => lambda * lambda,
            Family::Weibull { k } => {
                // Gamma(1+2/k) - Gamma(1+1/k)^2 without cancellation for large k.
                let g1 = ln_gamma(1.0 + 1.0 / k);
                let g2 = ln_gamma(1.0 + 2.0 / k);
                (2.0 * g1).exp() * (g2 - 2.0 * g1).exp_m1()
            }
            Family::Erlang { n, lambda } => n as f64 * lambda * lambda,
            Family::BetaPow { a } => a / ((a + 1.0) * (a + 1.0) * (a + 2.0)),
            Family::BetaInt { nu1, nu2 } => {
                let (a, b) = (nu1 as f64, nu2 as f64);
                a * b / ((a + b) * (a + b) * (a + b + 1.0))
            }
            Family::Gaussian { sigma, .. } => sigma * sigma,
        }
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn mean_sd(&self) -> (f64, f64) {
        (self.mean(), self.sd())
    }

    /// Generalized inverse `F^{-1}(u)` for `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_open_unit(u)?;
        Ok(self.inv_cdf(u))
    }

    /// `F^{-1}(1 - t)` for `t` in (0, 1), accurate for tiny `t`.
    pub fn upper_quantile(&self, t: f64) -> Result<f64> {
        check_open_unit(t)?;
        Ok(self.inv_sf(t))
    }

    /// Unchecked quantile. Callers guarantee `0 < u < 1`.
    #[inline]
    pub(crate) fn inv_cdf(&self, u: f64) -> f64 {
        match self.family {
            Family::Uniform => u,
            Family::Arcsine => -(PI * u).cos(),
            Family::Exponential { lambda } => -lambda * (-u).ln_1p(),
            Family::Weibull { k } => (-(-u).ln_1p()).powf(1.0 / k),
            Family::BetaPow { a } => u.powf(1.0 / a),
            Family::Gaussian { mu, sigma } => mu + sigma * std_normal_quantile(u),
            Family::Erlang { .. } | Family::BetaInt { .. } => self.invert(u, 1.0 - u, u <= 0.5),
        }
    }

    /// Unchecked `F^{-1}(1 - t)`.
    #[inline]
    pub(crate) fn inv_sf(&self, t: f64) -> f64 {
        match self.family {
            Family::Uniform => 1.0 - t,
            Family::Arcsine => (PI * t).cos(),
            Family::Exponential { lambda } => -lambda * t.ln(),
            Family::Weibull { k } => (-t.ln()).powf(1.0 / k),
            Family::BetaPow { a } => ((-t).ln_1p() / a).exp(),
            Family::Gaussian { mu, sigma } => mu - sigma * std_normal_quantile(t),
            Family::Erlang { .. } | Family::BetaInt { .. } => self.invert(1.0 - t, t, t > 0.5),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform => x.clamp(0.0, 1.0),
            Family::Arcsine => {
                if x <= -1.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    0.5 + x.asin() / PI
                }
            }
            Family::Exponential { lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / lambda).exp_m1()
                }
            }
            Family::Weibull { k } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x.powf(k)).exp_m1()
                }
            }
            Family::Erlang { n, lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    erlang_cdf_sf(n, x / lambda).0
                }
            }
            Family::BetaPow { a } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    x.powf(a)
                }
            }
            Family::BetaInt { nu1, nu2 } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_int_cdf_sf(nu1, nu2, x).0
                }
            }
            Family::Gaussian { mu, sigma } => 0.5 * erfc(-(x - mu) / sigma * FRAC_1_SQRT_2),
        }
    }

    /// Survival function `1 - F(x)`, computed without cancellation in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform => 1.0 - x.clamp(0.0, 1.0),
            Family::Arcsine => {
                if x <= -1.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    0.5 - x.asin() / PI
                }
            }
            Family::Exponential { lambda } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / lambda).exp()
                }
            }
            Family::Weibull { k } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x.powf(k)).exp()
                }
            }
            Family::Erlang { n, lambda } => {
                if x <= 0.0 {
                    1.0
                } else {
                    erlang_cdf_sf(n, x / lambda).1
                }
            }
            Family::BetaPow { a } => {
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    -(a * x.ln()).exp_m1()
                }
            }
            Family::BetaInt { nu1, nu2 } => {
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    beta_int_cdf_sf(nu1, nu2, x).1
                }
            }
            Family::Gaussian { mu, sigma } => 0.5 * erfc((x - mu) / sigma * FRAC_1_SQRT_2),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Arcsine => {
                if x > -1.0 && x < 1.0 {
                    1.0 / (PI * (1.0 - x * x).sqrt())
                } else {
                    0.0
                }
            }
            Family::Exponential { lambda } => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x / lambda).exp() / lambda
                }
            }
            Family::Weibull { k } => {
                if x <= 0.0 {
                    0.0
                } else {
                    k * x.powf(k - 1.0) * (-x.powf(k)).exp()
                }
            }
            Family::Erlang { n, lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = x / lambda;
                    ((n as f64 - 1.0) * z.ln() - z - ln_gamma(n as f64)).exp() / lambda
                }
            }
            Family::BetaPow { a } => {
                if x <= 0.0 || x > 1.0 {
                    0.0
                } else {
                    a * x.powf(a - 1.0)
                }
            }
            Family::BetaInt { nu1, nu2 } => {
                if x <= 0.0 || x >= 1.0 {
                    0.0
                } else {
                    let (a, b) = (nu1 as f64, nu2 as f64);
                    let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
                    ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta).exp()
                }
            }
            Family::Gaussian { mu, sigma } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
        }
    }

    /// Safeguarded Newton inversion for families without an explicit
    /// quantile. Solves `F(x) = p` when `use_lower`, else `S(x) = q`, where
    /// `q = 1 - p` is the accurately known complement.
    fn invert(&self, p: f64, q: f64, use_lower: bool) -> f64 {
        let (mut lo, mut hi) = match self.family {
            Family::BetaInt { .. } => (0.0, 1.0),
            _ => {
                let mut hi = self.mean() + self.sd();
                while self.sf(hi) > q {
                    hi *= 2.0;
                }
                (0.0, hi)
            }
        };
        // Residual is increasing in x in both branches.
        let residual = |x: f64| {
            if use_lower {
                self.cdf(x) - p
            } else {
                q - self.sf(x)
            }
        };
        let mut x = 0.5 * (lo + hi);
        for _ in 0..400 {
            let r = residual(x);
            if r == 0.0 {
                return x;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.pdf(x);
            let mut next = if d > 0.0 && d.is_finite() {
                x - r / d
            } else {
                f64::NAN
            };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs() || hi - lo <= f64::MIN_POSITIVE {
                return next;
            }
            x = next;
        }
        x
    }
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Uniform => write!(f, "uniform"),
            Family::Arcsine => write!(f, "arcsine"),
            Family::Exponential { lambda } => write!(f, "exponential(lambda={lambda})"),
            Family::Weibull { k } => write!(f, "weibull(k={k})"),
            Family::Erlang { n, lambda } => write!(f, "erlang(n={n}, lambda={lambda})"),
            Family::BetaPow { a } => write!(f, "beta_pow(a={a})"),
            Family::BetaInt { nu1, nu2 } => write!(f, "beta_int(nu1={nu1}, nu2={nu2})"),
            Family::Gaussian { mu, sigma } => write!(f, "gaussian(mu={mu}, sigma={sigma})"),
        }
    }
}

fn check_open_unit(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "probability must lie in (0, 1), got {u}"
        )))
    }
}

/// Regularized lower/upper incomplete gamma for integer shape `n` at unit
/// scale, via the finite Poisson sum. Each side is summed directly so that
/// neither loses relative precision in its own tail.
fn erlang_cdf_sf(n: u32, x: f64) -> (f64, f64) {
    let ln_x = x.ln();
    let term = |k: u32| (-x + k as f64 * ln_x - ln_gamma(k as f64 + 1.0)).exp();
    if x < n as f64 {
        // Lower tail: e^{-x} sum_{k >= n} x^k / k!, terms decrease once k + 1 > x.
        let mut t = term(n);
        let mut lower = 0.0;
        let mut k = n;
        while t > lower * 1e-17 && t > 0.0 {
            lower += t;
            k += 1;
            t *= x / k as f64;
        }
        (lower, 1.0 - lower)
    } else {
        let upper: f64 = (0..n).map(term).sum();
        (1.0 - upper, upper)
    }
}

/// Regularized incomplete beta for integer parameters through the binomial
/// identity `I_x(a, b) = P(Bin(a + b - 1, x) >= a)`.
fn beta_int_cdf_sf(nu1: u32, nu2: u32, x: f64) -> (f64, f64) {
    let m = nu1 + nu2 - 1;
    let ln_x = x.ln();
    let ln_1mx = (-x).ln_1p();
    let ln_fact = |k: u32| ln_gamma(k as f64 + 1.0);
    let term = |j: u32| {
        (ln_fact(m) - ln_fact(j) - ln_fact(m - j) + j as f64 * ln_x + (m - j) as f64 * ln_1mx).exp()
    };
    let cdf: f64 = (nu1..=m).map(term).sum();
    let sf: f64 = (0..nu1).map(term).sum();
    (cdf.min(1.0), sf.min(1.0))
}

/// Standard normal quantile, Wichura's AS241 (PPND16). Relative accuracy
/// about 1e-16 over the whole open interval.
#[allow(clippy::excessive_precision)]
pub fn std_normal_quantile(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        133.141_667_891_784_377_45,
        1_971.590_950_306_551_442_7,
        13_731.693_765_509_461_125,
        45_921.953_931_549_871_457,
        67_265.770_927_008_700_853,
        33_430.575_583_588_128_105,
        2_509.080_928_730_122_672_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_911_252,
        687.187_007_492_057_908_30,
        5_394.196_021_424_751_107_7,
        21_213.794_301_586_595_867,
        39_307.895_800_092_710_610,
        28_729.085_735_721_942_674,
        5_226.495_278_852_854_561_0,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_90,
        5.769_497_221_460_691_405_50,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        0.241_780_725_177_450_611_770,
        0.022_723_844_989_269_184_583_3,
        7.745_450_142_783_414_076_40e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_40,
        0.689_767_334_985_100_004_550,
        0.148_103_976_427_480_074_590,
        0.015_198_666_563_616_457_196_6,
        5.475_938_084_995_344_946_00e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_20,
        5.463_784_911_164_114_369_90,
        1.784_826_539_917_291_335_80,
        0.296_560_571_828_504_891_230,
        0.026_532_189_526_576_123_093_0,
        1.242_660_947_388_078_438_60e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_937_690,
        0.136_929_880_922_735_805_310,
        0.014_875_361_290_850_614_852_5,
        7.868_691_311_456_132_591_00e-4,
        1.846_318_317_510_054_681_80e-5,
        1.421_511_758_316_445_888_70e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    fn poly(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// One representative of every family, used by sweeps and tests.
pub fn representative_set() -> Vec<Marginal> {
    vec![
        Marginal::uniform(),
        Marginal::arcsine(),
        Marginal::exponential(1.0).unwrap(),
        Marginal::exponential(2.5).unwrap(),
        Marginal::weibull(0.5).unwrap(),
        Marginal::weibull(2.0).unwrap(),
        Marginal::erlang(3, 1.5).unwrap(),
        Marginal::beta_pow(0.5).unwrap(),
        Marginal::beta_pow(3.0).unwrap(),
        Marginal::beta_int(4, 7).unwrap(),
        Marginal::gaussian(0.0, 1.0).unwrap(),
        Marginal::gaussian(-2.0, 0.3).unwrap(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantile_examples() {
        assert_eq!(Marginal::uniform().quantile(0.3).unwrap(), 0.3);
        let e = Marginal::exponential(1.0).unwrap();
        assert_abs_diff_eq!(e.quantile(0.5).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            Marginal::arcsine().quantile(0.5).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let w = Marginal::weibull(2.0).unwrap();
        let u = 1.0 - (-1.0f64).exp();
        assert_abs_diff_eq!(w.quantile(u).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quantile_rejects_closed_endpoints() {
        let e = Marginal::exponential(1.0).unwrap();
        for u in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(e.quantile(u), Err(Error::Domain(_))));
            assert!(matches!(e.upper_quantile(u), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn moment_examples() {
        let (m, s) = Marginal::uniform().mean_sd();
        assert_eq!(m, 0.5);
        assert_abs_diff_eq!(s, 0.288_675_134_594_812_9, epsilon = 1e-15);
        assert_eq!(Marginal::exponential(1.0).unwrap().mean_sd(), (1.0, 1.0));

        // Oracle for Beta(0.5, 1): substitute x = s^2 so the density
        // 0.5 x^{-1/2} dx becomes ds, then midpoint-integrate s^2 and s^4.
        let steps = 200_000;
        let h = 1.0 / steps as f64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for i in 0..steps {
            let s = (i as f64 + 0.5) * h;
            m1 += s * s * h;
            m2 += s.powi(4) * h;
        }
        let sd_oracle = (m2 - m1 * m1).sqrt();
        let (m, s) = Marginal::beta_pow(0.5).unwrap().mean_sd();
        assert_abs_diff_eq!(m, m1, epsilon = 1e-9);
        assert_abs_diff_eq!(s, sd_oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(s, 0.298_142_396_999_971_9, epsilon = 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(matches!(
            Marginal::weibull(-1.0),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            Marginal::weibull(0.0),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            Marginal::exponential(f64::NAN),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            Marginal::erlang(0, 1.0),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            Marginal::beta_int(3, 0),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            Marginal::gaussian(0.0, 0.0),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            Marginal::gaussian(f64::INFINITY, 1.0),
            Err(Error::ParameterDomain(_))
        ));
    }

    #[test]
    fn variance_positive_and_finite() {
        for m in representative_set() {
            let v = m.variance();
            assert!(v.is_finite() && v > 0.0, "{m}: {v}");
        }
        for k in [0.05, 0.3, 1.0, 4.0, 50.0, 500.0] {
            let v = Marginal::weibull(k).unwrap().variance();
            assert!(v.is_finite() && v > 0.0, "k={k}: {v}");
        }
    }

    #[test]
    fn monotone_on_dense_grid() {
        for m in representative_set() {
            let mut prev = f64::NEG_INFINITY;
            for i in 1..20_000 {
                let u = i as f64 / 20_000.0;
                let q = m.quantile(u).unwrap();
                assert!(q >= prev, "{m} not monotone at u={u}: {q} < {prev}");
                prev = q;
            }
        }
    }

    // Slack from rounding x itself: near a bounded support edge the next
    // representable double can move the CDF by more than the target.
    fn x_resolution(m: &Marginal, x: f64) -> f64 {
        let below = m.cdf(x.next_down());
        let above = m.cdf(x.next_up());
        2.0 * (above - below)
    }

    #[test]
    fn quantile_inverts_cdf() {
        for m in representative_set() {
            for &u in &[1e-9, 1e-4, 0.01, 0.2, 0.5, 0.77, 0.99, 1.0 - 1e-6] {
                let x = m.quantile(u).unwrap();
                let tol = 1e-12 * u.max(1e-3) + x_resolution(&m, x);
                assert!(
                    (m.cdf(x) - u).abs() <= tol,
                    "{m}: cdf(Q({u})) = {}",
                    m.cdf(x)
                );
                let t = u;
                let y = m.upper_quantile(t).unwrap();
                let tol = 1e-12 * t.max(1e-3) + x_resolution(&m, y);
                assert!(
                    (m.sf(y) - t).abs() <= tol,
                    "{m}: sf(Q(1-{t})) = {}",
                    m.sf(y)
                );
            }
        }
    }

    #[test]
    fn upper_quantile_matches_quantile_of_complement() {
        for m in representative_set() {
            for &t in &[0.1, 0.25, 0.5, 0.6, 0.9] {
                let a = m.upper_quantile(t).unwrap();
                let b = m.quantile(1.0 - t).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn normal_quantile_reference_points() {
        assert_abs_diff_eq!(
            std_normal_quantile(0.975),
            1.959_963_984_540_054,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(std_normal_quantile(0.5), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(
            std_normal_quantile(1e-10),
            -6.361_340_902_404_056,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            std_normal_quantile(0.1),
            -1.281_551_565_544_600_5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn erlang_cdf_sides_sum_to_one() {
        for &x in &[0.01, 0.5, 2.9, 3.0, 7.5, 40.0] {
            let (c, s) = erlang_cdf_sf(3, x);
            assert_abs_diff_eq!(c + s, 1.0, epsilon = 1e-14);
        }
        // n = 1 is the exponential.
        let (c, _) = erlang_cdf_sf(1, 0.7);
        assert_abs_diff_eq!(c, 1.0 - (-0.7f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn beta_int_one_one_is_uniform() {
        let m = Marginal::beta_int(1, 1).unwrap();
        for &x in &[0.01, 0.3, 0.9] {
            assert_abs_diff_eq!(m.cdf(x), x, epsilon = 1e-15);
        }
    }

    #[test]
    fn config_roundtrip() {
        let m: Marginal = serde_json::from_str(r#"{"family":"weibull","k":0.5}"#).unwrap();
        assert_eq!(m, Marginal::weibull(0.5).unwrap());
        let back = serde_json::to_string(&m).unwrap();
        assert_eq!(back, r#"{"family":"weibull","k":0.5}"#);
        let bad = serde_json::from_str::<Marginal>(r#"{"family":"weibull","k":-1}"#);
        assert!(bad.unwrap_err().to_string().contains("k must be"));
    }
}

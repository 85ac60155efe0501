//! Attainable correlation ranges.
//!
//! For marginals `F`, `G` with quantiles `Q_F`, `Q_G`, the normalized cross
//! moment
//!
//! ```text
//! c(U, V) = (E[Q_F(U) Q_G(V)] - m_F m_G) / (sd_F sd_G)
//! ```
//!
//! equals the maximum correlation when `V = U` and the minimum when
//! `V = 1 - U`. Closed forms are used where they exist; everything else goes
//! through adaptive quadrature on the unit interval.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::{Family, Marginal};
use crate::quadrature::{integrate_unit_split, QuadSettings};
use crate::rng::RngStream;

/// `1 - pi^2/6`, the minimum correlation of two unit exponentials.
pub const EXP_MIN_CORR: f64 = 1.0 - PI * PI / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `(Q_F(U), Q_G(U))`, the comonotone pair.
    SameSource,
    /// `(Q_F(U), Q_G(1 - U))`, the countermonotone pair.
    Antithetic,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrRange {
    pub rho_min: f64,
    pub rho_max: f64,
    pub method: Method,
    pub abs_error_bound: f64,
}

impl CorrRange {
    /// Whether `rho` lies in `[rho_min, rho_max]`, widened by `tol`.
    pub fn contains(&self, rho: f64, tol: f64) -> bool {
        rho >= self.rho_min - tol && rho <= self.rho_max + tol
    }
}

/// A c-coefficient together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub value: f64,
    pub method: Method,
    pub abs_error: f64,
}

impl Coefficient {
    fn exact(value: f64) -> Self {
        Self {
            value,
            method: Method::ClosedForm,
            abs_error: 0.0,
        }
    }
}

/// `F` and `G` differ at most by location and scale, so every correlation
/// between them equals the corresponding one for `F = G`.
fn same_shape(f: &Marginal, g: &Marginal) -> bool {
    match (f.family(), g.family()) {
        (Family::Exponential { .. }, Family::Exponential { .. }) => true,
        (Family::Gaussian { .. }, Family::Gaussian { .. }) => true,
        (Family::Erlang { n: a, .. }, Family::Erlang { n: b, .. }) => a == b,
        _ => f == g,
    }
}

/// If `1/a` is a positive integer (to rounding), return it.
fn reciprocal_integer(a: f64) -> Option<u64> {
    let n = (1.0 / a).round();
    if (1.0..1e9).contains(&n) && (n * a - 1.0).abs() < 1e-12 {
        Some(n as u64)
    } else {
        None
    }
}

fn closed_form(f: &Marginal, g: &Marginal, coupling: Coupling) -> Option<f64> {
    match coupling {
        Coupling::Independent => Some(0.0),
        _ if !same_shape(f, g) => None,
        Coupling::SameSource => Some(1.0),
        Coupling::Antithetic => match f.family() {
            Family::Uniform | Family::Arcsine | Family::Gaussian { .. } => Some(-1.0),
            Family::Exponential { .. } => Some(EXP_MIN_CORR),
            Family::Erlang { n: 1, .. } => Some(EXP_MIN_CORR),
            Family::Weibull { k: 1.0 } => Some(EXP_MIN_CORR),
            Family::BetaPow { a } => {
                reciprocal_integer(a).and_then(|n| beta_recip_min_corr(n).ok())
            }
            Family::BetaInt { nu1: 1, nu2: 1 } => Some(-1.0),
            _ => None,
        },
    }
}

/// The c-coefficient by quadrature, regardless of any closed form.
pub fn c_coeff_quadrature(f: &Marginal, g: &Marginal, coupling: Coupling) -> Result<Coefficient> {
    if coupling == Coupling::Independent {
        return Ok(Coefficient::exact(0.0));
    }
    let (mf, sf) = f.mean_sd();
    let (mg, sg) = g.mean_sd();
    let zf = |x: f64| (x - mf) / sf;
    let zg = |x: f64| (x - mg) / sg;
    let settings = QuadSettings::default();
    let r = match coupling {
        Coupling::SameSource => integrate_unit_split(
            |t| zf(f.inv_cdf(t)) * zg(g.inv_cdf(t)),
            |t| zf(f.inv_sf(t)) * zg(g.inv_sf(t)),
            settings,
        )?,
        Coupling::Antithetic => integrate_unit_split(
            |t| zf(f.inv_cdf(t)) * zg(g.inv_sf(t)),
            |t| zf(f.inv_sf(t)) * zg(g.inv_cdf(t)),
            settings,
        )?,
        Coupling::Independent => unreachable!(),
    };
    Ok(Coefficient {
        value: r.value.clamp(-1.0, 1.0),
        method: Method::Quadrature,
        abs_error: r.abs_error,
    })
}

/// The c-coefficient under `coupling`, closed form where one is known.
pub fn c_coeff_detailed(f: &Marginal, g: &Marginal, coupling: Coupling) -> Result<Coefficient> {
    match closed_form(f, g, coupling) {
        Some(v) => Ok(Coefficient::exact(v)),
        None => c_coeff_quadrature(f, g, coupling),
    }
}

pub fn c_coeff(f: &Marginal, g: &Marginal, coupling: Coupling) -> Result<f64> {
    c_coeff_detailed(f, g, coupling).map(|c| c.value)
}

/// Monte Carlo estimate of the c-coefficient with its standard error.
pub fn c_coeff_monte_carlo(
    f: &Marginal,
    g: &Marginal,
    coupling: Coupling,
    draws: usize,
    rng: &mut RngStream,
) -> (f64, f64) {
    let (mf, sf) = f.mean_sd();
    let (mg, sg) = g.mean_sd();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let u = rng.uniform();
        let v = rng.uniform();
        let x = f.inv_cdf(u);
        let y = match coupling {
            Coupling::SameSource => g.inv_cdf(u),
            Coupling::Antithetic => g.inv_sf(u),
            Coupling::Independent => g.inv_cdf(v),
        };
        let z = (x - mf) / sf * (y - mg) / sg;
        sum += z;
        sum_sq += z * z;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Range of correlations reachable by the quantile couplings: the
/// Fréchet–Hoeffding range of `(F, G)`.
pub fn frechet_range(f: &Marginal, g: &Marginal) -> Result<CorrRange> {
    let hi = c_coeff_detailed(f, g, Coupling::SameSource)?;
    let lo = c_coeff_detailed(f, g, Coupling::Antithetic)?;
    Ok(combine(lo, hi))
}

fn combine(lo: Coefficient, hi: Coefficient) -> CorrRange {
    let method = if lo.method == Method::ClosedForm && hi.method == Method::ClosedForm {
        Method::ClosedForm
    } else {
        Method::Quadrature
    };
    CorrRange {
        rho_min: lo.value,
        rho_max: hi.value,
        method,
        abs_error_bound: lo.abs_error + hi.abs_error,
    }
}

/// Attainable correlation range for the generator that serves `(F, G)`.
///
/// Identical to [`frechet_range`] except for two Erlang marginals of equal
/// shape, which are generated as sums of correlated exponential pairs and
/// therefore reach down to `1 - pi^2/6` for every shape.
pub fn corr_range(f: &Marginal, g: &Marginal) -> Result<CorrRange> {
    if let (Family::Erlang { n: a, .. }, Family::Erlang { n: b, .. }) = (f.family(), g.family()) {
        if a == b {
            return Ok(CorrRange {
                rho_min: EXP_MIN_CORR,
                rho_max: 1.0,
                method: Method::ClosedForm,
                abs_error_bound: 0.0,
            });
        }
    }
    frechet_range(f, g)
}

/// Minimum correlation of two Beta(1/n, 1) marginals,
/// `[((n+1)!)^2 - (2n+1)!] / (n^2 (2n)!)`, evaluated as
/// `((n+1)^2 / C(2n, n) - (2n + 1)) / n^2` so no factorial is formed.
pub fn beta_recip_min_corr(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ParameterDomain("n must be >= 1".into()));
    }
    let nf = n as f64;
    // 1 / C(2n, n) as a running product of i / (n + i).
    let mut inv_central = 1.0;
    for i in 1..=n {
        inv_central *= i as f64 / (nf + i as f64);
    }
    Ok(((nf + 1.0) * (nf + 1.0) * inv_central - (2.0 * nf + 1.0)) / (nf * nf))
}

/// Partial sum `sum_{i=1}^{terms} 1 / (i (i+1)^2)`, whose limit is
/// `int_0^1 ln(x) ln(1-x) dx = 2 - pi^2/6`.
pub fn exp_min_corr_series(terms: u64) -> f64 {
    // Smallest terms first.
    (1..=terms)
        .rev()
        .map(|i| {
            let i = i as f64;
            1.0 / (i * (i + 1.0) * (i + 1.0))
        })
        .sum()
}

/// Partial sum `sum_{k=0}^{terms-1} 1 / C(n+k, k)`; the full series equals
/// `n / (n - 1)`.
pub fn reciprocal_binomial_sum(n: u64, terms: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::ParameterDomain(format!("n must be >= 2, got {n}")));
    }
    let nf = n as f64;
    let mut t = 1.0;
    let mut parts = Vec::with_capacity(terms as usize);
    for k in 0..terms {
        if k > 0 {
            t *= k as f64 / (nf + k as f64);
        }
        parts.push(t);
    }
    Ok(parts.iter().rev().sum())
}

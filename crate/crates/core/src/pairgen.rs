//! Bivariate generation by mixing an extremal coupling with independence.
//!
//! Draw `U, V, W` uniform. `X = Q_F(U)`. With probability `rho / c`, where
//! `c` is the extremal correlation on the side of `rho`, `Y` reuses the
//! source (`U` for `rho > 0`, `1 - U` for `rho < 0`); otherwise `Y = Q_G(V)`.
//! The pair has marginals `F`, `G` exactly and correlation `rho`, and its
//! joint CDF is the matching mixture of a Fréchet–Hoeffding bound and
//! `F(x) G(y)`.

use crate::batch::Generator;
use crate::bounds::{frechet_range, CorrRange, Method, EXP_MIN_CORR};
use crate::error::{Error, Result};
use crate::marginals::Marginal;
use crate::rng::RngStream;

/// Slack allowed when comparing a target to a stored range bound.
pub const RANGE_TOLERANCE: f64 = 1e-12;

/// Mixture weight `rho / c` for a target inside `range`.
pub(crate) fn mixture_weight(rho: f64, range: &CorrRange) -> Result<f64> {
    if !rho.is_finite() || !range.contains(rho, RANGE_TOLERANCE) {
        return Err(Error::OutOfRange {
            rho,
            rho_min: range.rho_min,
            rho_max: range.rho_max,
        });
    }
    let w = if rho == 0.0 {
        0.0
    } else if rho > 0.0 {
        rho / range.rho_max
    } else {
        rho / range.rho_min
    };
    Ok(w.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSampler {
    f: Marginal,
    g: Marginal,
    rho: f64,
    range: CorrRange,
    accept_prob: f64,
    antithetic: bool,
}

impl PairSampler {
    /// Builds a sampler for target correlation `rho`, computing the
    /// attainable range of the quantile couplings of `(f, g)`.
    pub fn new(f: Marginal, g: Marginal, rho: f64) -> Result<Self> {
        let range = frechet_range(&f, &g)?;
        Self::with_range(f, g, rho, range)
    }

    /// Builds a sampler with a precomputed range; `range` must be the
    /// quantile-coupling range of `(f, g)`.
    pub fn with_range(f: Marginal, g: Marginal, rho: f64, range: CorrRange) -> Result<Self> {
        let accept_prob = mixture_weight(rho, &range)?;
        Ok(Self {
            f,
            g,
            rho,
            range,
            accept_prob,
            antithetic: rho < 0.0,
        })
    }

    pub fn f(&self) -> &Marginal {
        &self.f
    }

    pub fn g(&self) -> &Marginal {
        &self.g
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn range(&self) -> &CorrRange {
        &self.range
    }

    pub fn accept_prob(&self) -> f64 {
        self.accept_prob
    }

    pub fn antithetic(&self) -> bool {
        self.antithetic
    }

    /// One draw. Always consumes exactly three uniforms, in the order U, V, W.
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> (f64, f64) {
        let u = rng.uniform();
        let v = rng.uniform();
        let w = rng.uniform();
        let x = self.f.inv_cdf(u);
        let y = if w < self.accept_prob {
            if self.antithetic {
                self.g.inv_sf(u)
            } else {
                self.g.inv_cdf(u)
            }
        } else {
            self.g.inv_cdf(v)
        };
        (x, y)
    }

    /// Mixture CDF `w H_ext(x, y) + (1 - w) F(x) G(y)` with `w` the
    /// acceptance probability and `H_ext` the upper bound for `rho > 0`,
    /// the lower bound for `rho < 0`.
    pub fn joint_cdf(&self, x: f64, y: f64) -> f64 {
        let fx = self.f.cdf(x);
        let gy = self.g.cdf(y);
        let product = fx * gy;
        if self.accept_prob == 0.0 {
            return product;
        }
        let (lower, upper) = frechet_bounds(&self.f, &self.g, x, y);
        let extremal = if self.antithetic { lower } else { upper };
        self.accept_prob * extremal + (1.0 - self.accept_prob) * product
    }
}

pub fn sample_pair(s: &PairSampler, rng: &mut RngStream) -> (f64, f64) {
    s.sample(rng)
}

pub fn joint_cdf(s: &PairSampler, x: f64, y: f64) -> f64 {
    s.joint_cdf(x, y)
}

/// Fréchet–Hoeffding bounds `(max(0, F(x) + G(y) - 1), min(F(x), G(y)))`.
pub fn frechet_bounds(f: &Marginal, g: &Marginal, x: f64, y: f64) -> (f64, f64) {
    let fx = f.cdf(x);
    let gy = g.cdf(y);
    let lower = (gy - f.sf(x)).max(0.0);
    let upper = fx.min(gy);
    (lower.min(upper), upper)
}

/// Pairs of Erlang(n, lambda) variables built as sums of `n` independent
/// exponential pairs, each with correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangPairSampler {
    n: u32,
    lambda: f64,
    inner: PairSampler,
}

impl ErlangPairSampler {
    pub fn new(n: u32, lambda: f64, rho: f64) -> Result<Self> {
        // Validates n and lambda.
        Marginal::erlang(n, lambda)?;
        let e = Marginal::exponential(lambda)?;
        let range = CorrRange {
            rho_min: EXP_MIN_CORR,
            rho_max: 1.0,
            method: Method::ClosedForm,
            abs_error_bound: 0.0,
        };
        let inner = PairSampler::with_range(e, e, rho, range)?;
        Ok(Self { n, lambda, inner })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.inner.rho
    }

    pub fn marginal(&self) -> Marginal {
        Marginal::erlang(self.n, self.lambda).expect("validated at construction")
    }

    pub fn range(&self) -> &CorrRange {
        &self.inner.range
    }

    /// One draw; consumes `3 n` uniforms.
    pub fn sample(&self, rng: &mut RngStream) -> (f64, f64) {
        let mut x = 0.0;
        let mut y = 0.0;
        for _ in 0..self.n {
            let (a, b) = self.inner.sample(rng);
            x += a;
            y += b;
        }
        (x, y)
    }
}

pub fn sample_erlang_pair(
    n: u32,
    lambda: f64,
    rho: f64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    Ok(ErlangPairSampler::new(n, lambda, rho)?.sample(rng))
}

impl Generator for PairSampler {
    fn dim(&self) -> usize {
        2
    }

    fn draw(&self, rng: &mut RngStream, out: &mut [f64]) {
        let (x, y) = self.sample(rng);
        out[0] = x;
        out[1] = y;
    }
}

impl Generator for ErlangPairSampler {
    fn dim(&self) -> usize {
        2
    }

    fn draw(&self, rng: &mut RngStream, out: &mut [f64]) {
        let (x, y) = self.sample(rng);
        out[0] = x;
        out[1] = y;
    }
}

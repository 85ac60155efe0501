//! Correlated Beta(nu1, nu2) triples from a vector source.
//!
//! A Beta(nu1, nu2) variate with integer parameters is `G1 / (G1 + G2)`
//! with `G1`, `G2` sums of `nu1` and `nu2` unit exponentials, i.e. of
//! `-ln U_i` over a uniform vector of length `nu1 + nu2`. Feeding the same
//! vector (or its complement `1 - U`) to several coordinates correlates
//! them exactly as in the scalar multivariate generator. The complement's
//! coefficient has no closed form and is estimated by Monte Carlo.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::batch::{Generator, Warning};
use crate::error::{Error, Result};
use crate::marginals::Marginal;
use crate::multigen::{factorize, CorrMatrix, FactorVector, PSD_TOLERANCE};
use crate::rng::RngStream;

/// Draws behind the cached antithetic coefficient.
pub const C_ESTIMATE_DRAWS: u64 = 1_000_000;
/// Fixed seed of the cached estimate, so gating is the same on every run.
pub const C_ESTIMATE_SEED: u64 = 0x0b37_a5ee_d000_0001;
const MIN_MC_DRAWS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BetaVecTransform {
    nu1: u32,
    nu2: u32,
}

impl BetaVecTransform {
    pub fn new(nu1: u32, nu2: u32) -> Result<Self> {
        if nu1 == 0 || nu2 == 0 {
            return Err(Error::ParameterDomain(format!(
                "beta shape parameters must be positive integers, got ({nu1}, {nu2})"
            )));
        }
        Ok(Self { nu1, nu2 })
    }

    pub fn nu1(&self) -> u32 {
        self.nu1
    }

    pub fn nu2(&self) -> u32 {
        self.nu2
    }

    /// Length of the uniform source vector.
    pub fn dim_u(&self) -> usize {
        (self.nu1 + self.nu2) as usize
    }

    pub fn marginal(&self) -> Marginal {
        Marginal::beta_int(self.nu1, self.nu2).expect("validated shape")
    }

    pub fn mean(&self) -> f64 {
        self.nu1 as f64 / (self.nu1 + self.nu2) as f64
    }

    pub fn variance(&self) -> f64 {
        let (a, b) = (self.nu1 as f64, self.nu2 as f64);
        a * b / ((a + b) * (a + b) * (a + b + 1.0))
    }

    // G1 / (G1 + G2) with G = sum of -ln u. Unchecked.
    fn gamma_ratio(&self, u: &[f64]) -> f64 {
        let (head, tail) = u.split_at(self.nu1 as usize);
        let g1: f64 = head.iter().map(|x| -x.ln()).sum();
        let g2: f64 = tail.iter().map(|x| -x.ln()).sum();
        g1 / (g1 + g2)
    }
}

/// `sum_{i <= nu1} ln u_i / sum_i ln u_i`.
pub fn phi_beta(t: &BetaVecTransform, u: &[f64]) -> Result<f64> {
    if u.len() != t.dim_u() {
        return Err(Error::Shape(format!(
            "source vector has length {}, expected {}",
            u.len(),
            t.dim_u()
        )));
    }
    if let Some(x) = u.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::Domain(format!(
            "source component {x} outside (0, 1)"
        )));
    }
    Ok(t.gamma_ratio(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub draws: u64,
    pub seed: u64,
}

/// Monte Carlo estimate of `cor(phi(U), phi(1 - U))` using the exact Beta
/// mean and variance. Returns the estimate and its standard error.
pub fn c_beta_antithetic(
    t: &BetaVecTransform,
    mc_draws: u64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if mc_draws < MIN_MC_DRAWS {
        return Err(Error::ParameterDomain(format!(
            "need at least {MIN_MC_DRAWS} Monte Carlo draws, got {mc_draws}"
        )));
    }
    let m = t.mean();
    let var = t.variance();
    let mut u = vec![0.0; t.dim_u()];
    let mut comp = vec![0.0; t.dim_u()];
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 0..mc_draws {
        rng.fill_uniform(&mut u);
        for (c, &x) in comp.iter_mut().zip(&u) {
            *c = 1.0 - x;
        }
        let z = (t.gamma_ratio(&u) - m) * (t.gamma_ratio(&comp) - m) / var;
        let delta = z - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (z - mean);
    }
    let sd = (m2 / (mc_draws - 1) as f64).sqrt();
    Ok((mean, sd / (mc_draws as f64).sqrt()))
}

/// The frozen estimate used for gating, computed once per shape.
pub fn cached_c_estimate(t: &BetaVecTransform) -> CEstimate {
    static CACHE: OnceLock<Mutex<HashMap<BetaVecTransform, CEstimate>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().expect("cache lock").get(t) {
        return *c;
    }
    let mut rng = RngStream::new(C_ESTIMATE_SEED);
    let (estimate, std_error) =
        c_beta_antithetic(t, C_ESTIMATE_DRAWS, &mut rng).expect("draw count above minimum");
    let c = CEstimate {
        estimate,
        std_error,
        draws: C_ESTIMATE_DRAWS,
        seed: C_ESTIMATE_SEED,
    };
    cache.lock().expect("cache lock").insert(*t, c);
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaTrivariateSampler {
    t: BetaVecTransform,
    factors: FactorVector,
    c: CEstimate,
    accept: [f64; 3],
    warnings: Vec<Warning>,
}

impl BetaTrivariateSampler {
    /// Runs the gates in order: positive semi-definiteness, sign and zero
    /// pattern, entries against the antithetic coefficient, factorization.
    /// A factor at or below the coefficient does not stop construction; it
    /// clamps that coordinate's acceptance probability to 1 and records a
    /// warning.
    pub fn new(nu1: u32, nu2: u32, m: &CorrMatrix) -> Result<Self> {
        let t = BetaVecTransform::new(nu1, nu2)?;
        Self::with_estimate(t, m, cached_c_estimate(&t))
    }

    pub fn with_estimate(t: BetaVecTransform, m: &CorrMatrix, c: CEstimate) -> Result<Self> {
        if m.dim() != 3 {
            return Err(Error::Shape(format!(
                "expected a 3x3 matrix, got dimension {}",
                m.dim()
            )));
        }
        let min_eigenvalue = m.min_eigenvalue();
        if min_eigenvalue < -PSD_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
        }
        let entries = [m.get(0, 1), m.get(0, 2), m.get(1, 2)];
        let zeros = entries.iter().filter(|&&r| r == 0.0).count();
        if zeros == 1 {
            return Err(Error::NotApplicable(
                "exactly one pairwise correlation is zero".into(),
            ));
        }
        if entries[0] * entries[1] * entries[2] < 0.0 {
            return Err(Error::NotApplicable(
                "odd number of negative pairwise correlations".into(),
            ));
        }
        if let Some(r) = entries.iter().find(|&&r| r <= c.estimate) {
            return Err(Error::NotApplicable(format!(
                "correlation {r} is at or below the antithetic coefficient {:.4}",
                c.estimate
            )));
        }
        let factors = factorize(m)?;

        let mut accept = [0.0; 3];
        let mut low = Vec::new();
        for (i, &r) in factors.factors.iter().enumerate() {
            accept[i] = if r > 0.0 {
                r.min(1.0)
            } else if r < 0.0 {
                if r <= c.estimate {
                    low.push(i);
                }
                (r / c.estimate).min(1.0)
            } else {
                0.0
            };
        }
        let mut warnings = Vec::new();
        if !low.is_empty() {
            warnings.push(Warning::ApproximateNegative {
                indices: low,
                c_estimate: c.estimate,
            });
        }
        Ok(Self {
            t,
            factors,
            c,
            accept,
            warnings,
        })
    }

    pub fn transform(&self) -> &BetaVecTransform {
        &self.t
    }

    pub fn factors(&self) -> &FactorVector {
        &self.factors
    }

    pub fn c_estimate(&self) -> &CEstimate {
        &self.c
    }

    pub fn accept_probs(&self) -> &[f64; 3] {
        &self.accept
    }

    pub fn sample(&self, rng: &mut RngStream) -> [f64; 3] {
        let mut out = [0.0; 3];
        self.draw(rng, &mut out);
        out
    }
}

impl Generator for BetaTrivariateSampler {
    fn dim(&self) -> usize {
        3
    }

    /// Consumes the shared vector `U`, then for each coordinate its own
    /// vector `V_i` followed by `W_i`, whichever branch is taken.
    fn draw(&self, rng: &mut RngStream, out: &mut [f64]) {
        let k = self.t.dim_u();
        let mut u = vec![0.0; k];
        let mut v = vec![0.0; k];
        rng.fill_uniform(&mut u);
        let comp: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
        for (i, x) in out.iter_mut().enumerate() {
            rng.fill_uniform(&mut v);
            let w = rng.uniform();
            let rho = self.factors.factors[i];
            *x = if w < self.accept[i] {
                self.t.gamma_ratio(if rho < 0.0 { &comp } else { &u })
            } else {
                self.t.gamma_ratio(&v)
            };
        }
    }

    fn warnings(&self) -> Vec<Warning> {
        self.warnings.clone()
    }
}

pub fn sample_beta_trivariate(s: &BetaTrivariateSampler, rng: &mut RngStream) -> [f64; 3] {
    s.sample(rng)
}

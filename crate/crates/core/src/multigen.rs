//! Multivariate generation from one shared source.
//!
//! Every coordinate draws its own `(V_i, W_i)` and, when `W_i` falls under
//! its acceptance probability, reuses the shared `U` (or `1 - U` for a
//! negative factor) instead of `V_i`. Two coordinates are then correlated
//! through the shared branch only, which gives `cor(X_i, X_j) = rho_i rho_j`.
//! Target matrices therefore have to factor as an outer product, which
//! [`factorize`] checks and solves.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::batch::{Generator, Warning};
use crate::bounds::{corr_range, frechet_range, CorrRange};
use crate::error::{Error, FactorizationError, Result};
use crate::marginals::Marginal;
use crate::pairgen::{mixture_weight, RANGE_TOLERANCE};
use crate::rng::RngStream;

/// Default slack on the smallest eigenvalue.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Largest allowed `|rho_i rho_j - rho_ij|` after factorization.
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-10;
const ENTRY_TOLERANCE: f64 = 1e-12;

/// Symmetric matrix with unit diagonal and off-diagonal entries in (-1, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CorrMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl CorrMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let problems = Self::violations(&rows);
        if !problems.is_empty() {
            return Err(Error::InvalidMatrix(problems.join("; ")));
        }
        let dim = rows.len();
        let mut entries = rows.into_iter().flatten().collect::<Vec<_>>();
        // Store an exactly symmetric copy with an exact unit diagonal.
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
            for j in 0..i {
                entries[i * dim + j] = entries[j * dim + i];
            }
        }
        Ok(Self { dim, entries })
    }

    /// Every reason `rows` is not a correlation matrix; empty if it is one.
    pub fn violations(rows: &[Vec<f64>]) -> Vec<String> {
        let dim = rows.len();
        let mut out = Vec::new();
        if dim < 2 {
            out.push(format!("dimension {dim} is below 2"));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            out.push(format!("row {i} has {} entries, expected {dim}", r.len()));
            return out;
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    out.push(format!("entry ({i}, {j}) is not finite"));
                } else if i == j {
                    if (v - 1.0).abs() > ENTRY_TOLERANCE {
                        out.push(format!("unit diagonal required: entry ({i}, {i}) is {v}"));
                    }
                } else if j > i {
                    if (v - rows[j][i]).abs() > ENTRY_TOLERANCE {
                        out.push(format!(
                            "matrix is asymmetric: ({i}, {j}) = {v} but ({j}, {i}) = {}",
                            rows[j][i]
                        ));
                    }
                    if v.abs() >= 1.0 {
                        out.push(format!(
                            "off-diagonal entry ({i}, {j}) = {v} must lie in (-1, 1)"
                        ));
                    }
                }
            }
        }
        out
    }

    /// `[[1, p12, p13], [p12, 1, p23], [p13, p23, 1]]`.
    pub fn trivariate(p12: f64, p13: f64, p23: f64) -> Result<Self> {
        Self::new(vec![
            vec![1.0, p12, p13],
            vec![p12, 1.0, p23],
            vec![p13, p23, 1.0],
        ])
    }

    /// All off-diagonal entries equal to `r`.
    pub fn compound_symmetry(dim: usize, r: f64) -> Result<Self> {
        Self::new(
            (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { r }).collect())
                .collect(),
        )
    }

    /// Outer product of `factors` with the diagonal reset to 1.
    pub fn from_factors(factors: &[f64]) -> Result<Self> {
        let d = factors.len();
        Self::new(
            (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| if i == j { 1.0 } else { factors[i] * factors[j] })
                        .collect()
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    /// Upper-triangle entries in row order: `(0,1), (0,2), ..., (d-2,d-1)`.
    pub fn off_diagonal(&self) -> Vec<((usize, usize), f64)> {
        let mut out = Vec::with_capacity(self.dim * (self.dim - 1) / 2);
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                out.push(((i, j), self.get(i, j)));
            }
        }
        out
    }

    pub fn determinant(&self) -> f64 {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries).determinant()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.entries);
        SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<Vec<Vec<f64>>> for CorrMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<CorrMatrix> for Vec<Vec<f64>> {
    fn from(m: CorrMatrix) -> Self {
        m.rows()
    }
}

/// Smallest eigenvalue at least `-tol`.
pub fn is_positive_semidefinite(m: &CorrMatrix, tol: f64) -> bool {
    m.min_eigenvalue() >= -tol
}

/// Determinant route for `dim <= 3`, `None` above that.
///
/// With a unit diagonal and off-diagonal entries inside (-1, 1), every
/// principal minor of order 1 and 2 is positive, so only the full
/// determinant can fail.
pub fn sylvester_psd(m: &CorrMatrix, tol: f64) -> Option<bool> {
    match m.dim() {
        2 => Some(1.0 - m.get(0, 1).powi(2) >= -tol),
        3 => {
            let (p, q, r) = (m.get(0, 1), m.get(0, 2), m.get(1, 2));
            Some(1.0 - p * p - q * q - r * r + 2.0 * p * q * r >= -tol)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignChoice {
    /// Signs as propagated from the first correlated coordinate (taken positive).
    AsSolved,
    /// The global flip of `AsSolved`.
    Flipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorVector {
    pub factors: Vec<f64>,
    pub n_negative: usize,
    pub sign_choice: SignChoice,
}

impl FactorVector {
    pub fn new(factors: Vec<f64>) -> Self {
        let n_negative = factors.iter().filter(|&&r| r < 0.0).count();
        Self {
            factors,
            n_negative,
            sign_choice: SignChoice::AsSolved,
        }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn negative_indices(&self) -> Vec<usize> {
        (0..self.factors.len())
            .filter(|&i| self.factors[i] < 0.0)
            .collect()
    }

    /// Largest `|rho_i rho_j - rho_ij|` over `i != j`.
    pub fn max_round_trip_error(&self, m: &CorrMatrix) -> f64 {
        m.off_diagonal()
            .iter()
            .map(|&((i, j), v)| (self.factors[i] * self.factors[j] - v).abs())
            .fold(0.0, f64::max)
    }
}

/// Solves `rho_ij = rho_i rho_j` for all `i != j`.
///
/// Coordinates uncorrelated with everything get factor 0. The rest must be
/// pairwise nonzero. Two such coordinates `j < k` are served by
/// `(rho_j, rho_k) = (1, rho_jk)`, i.e. `j` always takes the shared source.
/// Three or more are solved on `ln |rho_ij|` (exactly for three, by least
/// squares beyond) with signs propagated from the first one, and of the two
/// global sign choices the one with fewer negative factors is returned.
pub fn factorize(m: &CorrMatrix) -> std::result::Result<FactorVector, FactorizationError> {
    let d = m.dim();
    let active: Vec<usize> = (0..d)
        .filter(|&i| (0..d).any(|j| j != i && m.get(i, j) != 0.0))
        .collect();
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            if m.get(i, j) == 0.0 {
                return Err(FactorizationError::ZeroPattern(i, j));
            }
        }
    }

    let mut factors = vec![0.0; d];
    match active.len() {
        0 => return Ok(FactorVector::new(factors)),
        2 => {
            let (j, k) = (active[0], active[1]);
            factors[j] = 1.0;
            factors[k] = m.get(j, k);
            return Ok(FactorVector::new(factors));
        }
        _ => {}
    }

    // Signs relative to the first active coordinate.
    let root = active[0];
    let mut sign = vec![1.0; d];
    for &j in &active[1..] {
        sign[j] = m.get(root, j).signum();
    }
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            if m.get(i, j).signum() != sign[i] * sign[j] {
                return Err(FactorizationError::SignPattern(i, j));
            }
        }
    }

    let magnitudes = if active.len() == 3 {
        let (a, b, c) = (active[0], active[1], active[2]);
        let (p_ab, p_ac, p_bc) = (m.get(a, b).abs(), m.get(a, c).abs(), m.get(b, c).abs());
        let mid = (p_ab * p_bc / p_ac).sqrt();
        vec![(a, p_ab / mid), (b, mid), (c, p_bc / mid)]
    } else {
        log_least_squares(m, &active)
    };
    for &(i, v) in &magnitudes {
        if v >= 1.0 {
            return Err(FactorizationError::Magnitude { index: i, value: v });
        }
        factors[i] = sign[i] * v;
    }

    let negatives = active.iter().filter(|&&i| factors[i] < 0.0).count();
    let mut fv = FactorVector::new(factors);
    if active.len() - negatives < negatives {
        for r in fv.factors.iter_mut() {
            *r = -*r;
        }
        fv.n_negative = active.len() - negatives;
        fv.sign_choice = SignChoice::Flipped;
    }

    for ((i, j), target) in m.off_diagonal() {
        let product = fv.factors[i] * fv.factors[j];
        if (product - target).abs() > ROUND_TRIP_TOLERANCE {
            return Err(FactorizationError::NotProduct {
                i,
                j,
                target,
                product,
            });
        }
    }
    Ok(fv)
}

// Minimises sum_{i<j} (a_i + a_j - L_ij)^2 with L_ij = ln |rho_ij| over the
// active block of size k >= 3. The normal equations give
// a_i = (T_i - S) / (k - 2) with T_i = sum_j L_ij and S = sum_{i<j} L_ij / (k - 1).
fn log_least_squares(m: &CorrMatrix, active: &[usize]) -> Vec<(usize, f64)> {
    let k = active.len() as f64;
    let row_sums: Vec<f64> = active
        .iter()
        .map(|&i| {
            active
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| m.get(i, j).abs().ln())
                .sum()
        })
        .collect();
    let s = row_sums.iter().sum::<f64>() / 2.0 / (k - 1.0);
    active
        .iter()
        .zip(&row_sums)
        .map(|(&i, &t)| (i, ((t - s) / (k - 2.0)).exp()))
        .collect()
}

/// Identically distributed coordinates that share the source with
/// probability `|rho|` each; every pair has correlation `rho^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquicorrelatedSampler {
    f: Marginal,
    rho: f64,
    dim: usize,
}

impl EquicorrelatedSampler {
    pub fn new(f: Marginal, rho: f64, dim: usize) -> Result<Self> {
        if rho.is_nan() || rho.abs() > 1.0 {
            return Err(Error::ParameterDomain(format!(
                "|rho| must be at most 1, got {rho}"
            )));
        }
        if dim < 2 {
            return Err(Error::ParameterDomain(format!(
                "dimension must be at least 2, got {dim}"
            )));
        }
        Ok(Self { f, rho, dim })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Common pairwise correlation, `rho^2`.
    pub fn pair_correlation(&self) -> f64 {
        self.rho * self.rho
    }
}

impl Generator for EquicorrelatedSampler {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Consumes `U`, then `(V_i, W_i)` for each coordinate.
    fn draw(&self, rng: &mut RngStream, out: &mut [f64]) {
        let u = rng.uniform();
        let p = self.rho.abs();
        for x in out.iter_mut() {
            let v = rng.uniform();
            let w = rng.uniform();
            *x = self.f.inv_cdf(if w < p { u } else { v });
        }
    }
}

pub fn sample_equicorrelated(
    f: Marginal,
    rho: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let s = EquicorrelatedSampler::new(f, rho, n)?;
    let mut out = vec![0.0; n];
    s.draw(rng, &mut out);
    Ok(out)
}

/// Coordinates with a common marginal and pairwise correlations
/// `rho_i rho_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSampler {
    f: Marginal,
    factors: FactorVector,
    range: CorrRange,
    accept: Vec<f64>,
    warnings: Vec<Warning>,
}

impl MultivariateSampler {
    pub fn new(f: Marginal, factors: FactorVector) -> Result<Self> {
        let range = frechet_range(&f, &f)?;
        Self::with_range(f, factors, range)
    }

    pub fn with_range(f: Marginal, factors: FactorVector, range: CorrRange) -> Result<Self> {
        if factors.dim() < 2 {
            return Err(Error::Shape(format!(
                "need at least two factors, got {}",
                factors.dim()
            )));
        }
        let accept = factors
            .factors
            .iter()
            .map(|&r| mixture_weight(r, &range))
            .collect::<Result<Vec<_>>>()?;
        let mut warnings = Vec::new();
        if factors.n_negative >= 2 {
            warnings.push(Warning::NegativeFactors {
                indices: factors.negative_indices(),
            });
        }
        Ok(Self {
            f,
            factors,
            range,
            accept,
            warnings,
        })
    }

    /// Checks the matrix, factors it and builds the sampler.
    pub fn from_matrix(f: Marginal, m: &CorrMatrix) -> Result<Self> {
        let min_eigenvalue = m.min_eigenvalue();
        if min_eigenvalue < -PSD_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
        }
        Self::new(f, factorize(m)?)
    }

    pub fn factors(&self) -> &FactorVector {
        &self.factors
    }

    pub fn range(&self) -> &CorrRange {
        &self.range
    }

    pub fn accept_probs(&self) -> &[f64] {
        &self.accept
    }
}

impl Generator for MultivariateSampler {
    fn dim(&self) -> usize {
        self.factors.dim()
    }

    /// Consumes `U`, then `(V_i, W_i)` for each coordinate.
    fn draw(&self, rng: &mut RngStream, out: &mut [f64]) {
        let u = rng.uniform();
        for ((x, &rho), &p) in out.iter_mut().zip(&self.factors.factors).zip(&self.accept) {
            let v = rng.uniform();
            let w = rng.uniform();
            *x = if w < p {
                if rho < 0.0 {
                    self.f.inv_sf(u)
                } else {
                    self.f.inv_cdf(u)
                }
            } else {
                self.f.inv_cdf(v)
            };
        }
    }

    fn warnings(&self) -> Vec<Warning> {
        self.warnings.clone()
    }
}

pub fn sample_multivariate(s: &MultivariateSampler, rng: &mut RngStream) -> Vec<f64> {
    let mut out = vec![0.0; s.dim()];
    s.draw(rng, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdStatus {
    pub pass: bool,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub determinant: f64,
    /// Determinant route, present for `dim <= 3`.
    pub sylvester: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationStatus {
    pub pass: bool,
    pub factors: Option<FactorVector>,
    pub error: Option<String>,
    /// Factors outside the attainable range of the marginal.
    pub factors_out_of_range: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Where `(p, q, r) = (rho_12, rho_13, rho_23)` falls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region3 {
    /// Not positive semi-definite.
    OutsidePsd,
    /// PSD, but the product `pqr` is negative or exactly one entry is zero.
    NotFactorizable,
    /// PSD and factorizable, but some entry or factor falls outside the
    /// attainable range of the marginal.
    OutsideMarginalRange,
    Attainable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub dim: usize,
    pub marginal: Marginal,
    pub range: CorrRange,
    pub psd: PsdStatus,
    pub factorization: FactorizationStatus,
    pub bound_violations: Vec<BoundViolation>,
    pub region: Option<Region3>,
    pub warnings: Vec<Warning>,
    pub feasible: bool,
    /// First failing gate, in the order PSD, factorization, bounds.
    pub stop: Option<String>,
}

/// Runs every gate and reports each outcome; gates are evaluated even
/// after an earlier one fails.
pub fn feasibility_check(f: &Marginal, m: &CorrMatrix) -> Result<FeasibilityReport> {
    let range = corr_range(f, f)?;
    let min_eigenvalue = m.min_eigenvalue();
    let psd = PsdStatus {
        pass: min_eigenvalue >= -PSD_TOLERANCE,
        min_eigenvalue,
        tolerance: PSD_TOLERANCE,
        determinant: m.determinant(),
        sylvester: sylvester_psd(m, PSD_TOLERANCE),
    };

    let factorization = match factorize(m) {
        Ok(fv) => {
            let factors_out_of_range = (0..fv.dim())
                .filter(|&i| !range.contains(fv.factors[i], RANGE_TOLERANCE))
                .collect();
            FactorizationStatus {
                pass: true,
                factors: Some(fv),
                error: None,
                factors_out_of_range,
            }
        }
        Err(e) => FactorizationStatus {
            pass: false,
            factors: None,
            error: Some(e.to_string()),
            factors_out_of_range: Vec::new(),
        },
    };

    let bound_violations: Vec<BoundViolation> = m
        .off_diagonal()
        .into_iter()
        .filter(|&(_, v)| !range.contains(v, RANGE_TOLERANCE))
        .map(|((i, j), value)| BoundViolation { i, j, value })
        .collect();

    let mut warnings = Vec::new();
    if let Some(fv) = &factorization.factors {
        if fv.n_negative >= 2 {
            warnings.push(Warning::NegativeFactors {
                indices: fv.negative_indices(),
            });
        }
    }

    let stop = if !psd.pass {
        Some(Error::NotPositiveSemidefinite { min_eigenvalue }.to_string())
    } else if let Some(e) = &factorization.error {
        Some(format!("factorization failed: {e}"))
    } else if let Some(b) = bound_violations.first() {
        Some(
            Error::OutOfRange {
                rho: b.value,
                rho_min: range.rho_min,
                rho_max: range.rho_max,
            }
            .to_string(),
        )
    } else if let Some(&i) = factorization.factors_out_of_range.first() {
        let fv = factorization.factors.as_ref().expect("factors present");
        Some(format!(
            "factor {i} = {} outside attainable range [{}, {}]",
            fv.factors[i], range.rho_min, range.rho_max
        ))
    } else {
        None
    };

    let region = (m.dim() == 3).then_some(if !psd.pass {
        Region3::OutsidePsd
    } else if !factorization.pass {
        Region3::NotFactorizable
    } else if !bound_violations.is_empty() || !factorization.factors_out_of_range.is_empty() {
        Region3::OutsideMarginalRange
    } else {
        Region3::Attainable
    });

    Ok(FeasibilityReport {
        dim: m.dim(),
        marginal: *f,
        range,
        psd,
        factorization,
        bound_violations,
        region,
        warnings,
        feasible: stop.is_none(),
        stop,
    })
}

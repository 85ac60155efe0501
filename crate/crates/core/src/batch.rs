//! Deterministic batch generation.
//!
//! A batch of `n` draws is cut into fixed blocks of [`BLOCK_SIZE`] draws.
//! Block `b` is generated from substream `b` of the run seed, so the output
//! depends only on `(generator, n, seed)`, never on how many worker threads
//! took part or in what order they finished.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::RngStream;
use crate::stats::pearson_corr;

pub const BLOCK_SIZE: usize = 1 << 16;

/// Non-fatal conditions attached to a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Two or more negative factors: pairs of negative-factor coordinates
    /// get correlation `(rho_i / rho_min)(rho_j / rho_min)` on the shared
    /// branch, which equals `rho_i rho_j` only when `rho_min = -1`.
    NegativeFactors { indices: Vec<usize> },
    /// Factors at or below the estimated antithetic coefficient; the
    /// acceptance probability was clamped to 1, so the correlations involving
    /// these coordinates are only approximate.
    ApproximateNegative {
        indices: Vec<usize>,
        c_estimate: f64,
    },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::NegativeFactors { indices } => write!(
                f,
                "{} negative factors (coordinates {:?}); pairwise correlations between them are not exact",
                indices.len(),
                indices
            ),
            Warning::ApproximateNegative { indices, c_estimate } => write!(
                f,
                "factors at coordinates {indices:?} are at or below the antithetic coefficient {c_estimate:.4}; results for those correlations are approximate"
            ),
        }
    }
}

/// Anything that turns a uniform stream into fixed-width draws.
pub trait Generator: Sync {
    fn dim(&self) -> usize;
    /// Writes one draw into `out` (length `dim()`).
    fn draw(&self, rng: &mut RngStream, out: &mut [f64]);
    fn warnings(&self) -> Vec<Warning> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    /// Row-major, `n * dim` values.
    pub data: Vec<f64>,
    pub dim: usize,
    pub n: usize,
    pub seed: u64,
    pub warnings: Vec<Warning>,
}

impl SampleBatch {
    pub fn generate<G: Generator + ?Sized>(gen: &G, n: usize, seed: u64) -> Self {
        let dim = gen.dim();
        let mut data = vec![0.0; n * dim];
        if dim > 0 {
            data.par_chunks_mut(BLOCK_SIZE * dim)
                .enumerate()
                .for_each(|(block, chunk)| {
                    let mut rng = RngStream::substream(seed, block as u64);
                    for row in chunk.chunks_exact_mut(dim) {
                        gen.draw(&mut rng, row);
                    }
                });
        }
        Self {
            data,
            dim,
            n,
            seed,
            warnings: gen.warnings(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        assert!(j < self.dim, "column {j} out of range for dim {}", self.dim);
        self.rows().map(|r| r[j]).collect()
    }

    /// Sample correlation matrix of the columns.
    pub fn correlation_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let cols: Vec<Vec<f64>> = (0..self.dim).map(|j| self.column(j)).collect();
        let mut out = vec![vec![1.0; self.dim]; self.dim];
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                let r = pearson_corr(&cols[i], &cols[j])?;
                out[i][j] = r;
                out[j][i] = r;
            }
        }
        Ok(out)
    }
}

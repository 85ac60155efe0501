//! Correlated random variates with exactly prescribed marginals.
//!
//! Pairs are generated by mixing a comonotone or countermonotone quantile
//! coupling with an independent one, which reaches every correlation between
//! the minimum and maximum the marginals allow. Shared-source extensions give
//! equicorrelated and outer-product correlation structures in higher
//! dimension, plus a vector-source variant for integer-shape Beta marginals.

pub mod batch;
pub mod betagen;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod marginals;
pub mod multigen;
pub mod pairgen;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use batch::{Generator, SampleBatch, Warning};
pub use betagen::{BetaTrivariateSampler, BetaVecTransform};
pub use bounds::{c_coeff, corr_range, frechet_range, CorrRange, Coupling};
pub use error::{Error, FactorizationError, Result};
pub use marginals::{Family, Marginal};
pub use multigen::{
    factorize, CorrMatrix, EquicorrelatedSampler, FactorVector, MultivariateSampler,
};
pub use pairgen::{ErlangPairSampler, PairSampler};
pub use rng::RngStream;

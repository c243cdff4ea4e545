//! Hubness analysis for high-dimensional representation spaces.
//!
//! Measures how skewed the k-nearest-neighbor relation of a data set is
//! (k-occurrence and its skewness), finds hubs, diagnoses concentration of
//! distances, and applies order-based secondary distances that reduce
//! hubness. Alongside the usual geometric measures it supports the
//! probability distance `1 − p(y | x)` produced by a softmax over
//! context–unembedding dot products, the comparison a language model makes
//! when it predicts the next token.
//!
//! Modules:
//!
//! - [`matrixio`]: HUBM matrices, frequency tables, vocabularies, reports
//! - [`dissim`]: measures and the exact streaming top-k engine
//! - [`hubstats`]: k-occurrence, skewness, hubs, concentration diagnostics
//! - [`freqcorr`]: Spearman correlation of hub counts with corpus frequency
//! - [`predeval`]: top-1 accuracy split by hub membership
//! - [`synth`]: seeded generators and dimension sweeps
//! - [`mitigate`]: Mutual Proximity and Globally Corrected Rank
//! - [`cli`]: the `hubkit` command-line pipelines

pub mod cli;
pub mod dissim;
pub mod error;
pub mod freqcorr;
pub mod hubstats;
pub mod matrixio;
pub mod mitigate;
pub mod numeric;
pub mod predeval;
pub mod rng;
pub mod synth;

pub use dissim::{Measure, Neighbor, NeighborList, TopkOptions, TopkResult};
pub use error::{HubError, Result};
pub use hubstats::{HubSet, KOccurrence};
pub use matrixio::{DenseMatrix, Dtype, FrequencyTable, Vocabulary};

//! Measurement-device-independent entanglement quantification.
//!
//! The crate covers the full pipeline from semiquantum correlations to
//! quantitative entanglement witnesses:
//!
//! - [`linalg`]: complex Hermitian matrix arithmetic with real embeddings,
//! - [`scenario`]: semiquantum scenarios, probability tables, tomography,
//! - [`sim`]: quantum and shared-randomness correlation generation, losses,
//!   finite statistics,
//! - [`builder`]: symbolic assembly of conic linear programs over Hermitian
//!   matrix variables,
//! - [`solver`]: standard-form conic programs and an interior-point backend,
//! - [`cones`]: conic formulations of five convex entanglement measures,
//! - [`quantify`]: data-driven quantification programs and witness
//!   extraction from dual solutions,
//! - [`witness`]: witness evaluation and curve generation,
//! - [`pipeline`]: file-based end-to-end commands.

pub mod linalg;
pub mod scenario;
pub mod builder;
pub mod cones;
pub mod quantify;
pub mod sim;
pub mod witness;
pub mod pipeline;
pub mod solver;

#[cfg(test)]
mod testutil;

//! Two-times iterated Itô integrals driven by a trace-class Q-Wiener process.
//!
//! Given the increments of a Q-Wiener process projected onto the first `K`
//! eigenfunctions of its covariance operator, this crate samples the Lévy
//! areas and assembles the full `K × K` matrix of iterated integrals
//! `I^Q_{(i,j)}(h)`. Two samplers are provided:
//!
//! - [`levyarea::sample_area_alg1`]: the Fourier series of the Brownian bridge,
//!   truncated after `D` terms. Mean-square error `O(h² / D)`.
//! - [`levyarea::sample_area_alg2`]: the same truncated series plus a Gaussian
//!   approximation of the tail whose covariance square root is known in
//!   closed form. Mean-square error `O(h² / D²)`.
//!
//! The [`harness`] module estimates the mean-square errors of both samplers by
//! Monte Carlo, using couplings that reproduce the exact error functional, and
//! fits convergence slopes. [`cli`] wraps everything in a small command-line
//! tool that writes CSV reports.
//!
//! Modules:
//!
//! | Module         | Contents                                                        |
//! |----------------|-----------------------------------------------------------------|
//! | [`kronkit`]    | pair-index selection, commutation, `Q̃_K`, symmetric square root |
//! | [`covariance`] | covariance spectra and Q-Wiener increments                      |
//! | [`streams`]    | counter-based random streams keyed by (seed, replicate, r)      |
//! | [`levyarea`]   | the two Lévy-area samplers, `Σ^Q_∞` and its closed-form root    |
//! | [`assembly`]   | iterated-integral matrices and test-operator contraction        |
//! | [`harness`]    | Monte-Carlo error estimation, moment checks, slope fitting      |
//! | [`cli`]        | argument parsing and report generation                          |

pub mod assembly;
pub mod cli;
pub mod covariance;
mod error;
pub mod harness;
pub mod kronkit;
pub mod levyarea;
pub mod streams;

pub use assembly::{assemble, contract, IteratedIntegralMatrix, TestOperatorPair};
pub use covariance::{make_model, sample_increment, CovarianceModel, SpectrumSpec, WienerIncrement};
pub use error::{Error, Result};
pub use kronkit::{pair_index_map, SelectionMap, SymmetricMatrix};
pub use levyarea::{
    choose_d, sample_area_alg1, sample_area_alg2, tail_constant, Algorithm, DRule, LevyAreaSample,
};
pub use streams::{ReplicateStreams, SeriesSource};

/// Largest `K` for which the `L × L` tail covariance is stored densely.
pub const MAX_DENSE_K: usize = 64;

//! Exact and Monte Carlo tooling for the `(n, k)` Bernoulli–Laplace urn chain.
//!
//! Two urns hold `n` balls each, `n` red and `n` white in total. Every step
//! swaps `k` uniformly chosen balls between the urns; the chain tracks the
//! number of red balls in the left urn. The crate provides
//!
//! * [`distributions`]: finite pmf algebra (hypergeometric, discrete normal,
//!   total variation, difference convolution) and reproducible RNG streams;
//! * [`chain`]: exact transition rows, the stationary law, distance profiles,
//!   mixing times, eigenfunction identities and a Chebyshev lower bound;
//! * [`coupling`]: the shared-label coupling of two copies and stopping-time
//!   estimators built on it;
//! * [`asymptotics`]: the `t_n`, `s_n` schedule and its expansions;
//! * [`approximation`]: discrete-normal approximation of hypergeometrics and
//!   the one-step total-variation decomposition;
//! * [`experiments`]: config-driven runs with CSV/JSON output.

pub mod approximation;
pub mod asymptotics;
pub mod chain;
pub mod coupling;
pub mod distributions;
pub mod error;
pub mod experiments;

pub use error::{Error, Result};

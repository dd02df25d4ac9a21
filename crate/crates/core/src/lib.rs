//! Exact p-adic arithmetic and non-Archimedean frequency analysis.
//!
//! The crate has five layers, each usable on its own:
//!
//! * [`padic`] — exact rationals, p-adic valuation/norm/metric, canonical
//!   digit expansions with precision tracking, and Hensel square roots.
//! * [`frequency`] — exact relative frequencies of binary event streams and
//!   statistical-stabilization verdicts in the real and p-adic topologies.
//! * [`realization`] — constructive realization of a target p-adic number as
//!   the p-adic limit of relative frequencies of a binary sequence.
//! * [`complexity`] — computable complexity proxies (LZ76 phrase counting,
//!   pluggable compressors) and linear-vs-logarithmic growth classification.
//! * [`interference`] — Monte-Carlo multi-slit detection experiments with
//!   inter-trial memory kernels, fringe visibility, and Poisson dispersion
//!   statistics.

pub mod complexity;
pub mod frequency;
pub mod interference;
pub mod padic;
pub mod realization;

pub use padic::{PAdicApprox, PrimeBase, Rational};

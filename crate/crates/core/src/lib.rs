//! Sparse support recovery from noisy linear measurements.
//!
//! The library covers the full pipeline for studying when the support of an
//! s-sparse binary signal can be recovered from `y = X β + z`:
//!
//! - [`model`] — measurement ensembles (dense Gaussian, Bernoulli-masked
//!   sparse Gaussian, and sparsified-dense with rescaled observations),
//!   signals, observations, and symmetric-difference error.
//! - [`estimator`] — the squared-error loss over candidate supports and the
//!   support-constrained maximum-likelihood estimator, exact by enumeration
//!   or approximate by swap-based local search.
//! - [`thresholds`] — closed-form sample-size thresholds for every regime,
//!   the price of sparsity / sparsification, and the sparsification budget.
//! - [`bounds`] — numerical evaluation of the large-deviation machinery
//!   behind those thresholds (Chernoff kernels, the product-of-Gaussians
//!   MGF, exact binomial Chernoff bases) together with Monte Carlo oracles
//!   for each closed form.
//! - [`experiments`] — a seeded, worker-count-independent Monte Carlo
//!   harness that estimates recovery probability as a function of sample
//!   size and persists sweep summaries as CSV/JSON.
//!
//! All randomness flows through [`rng`]: every stream is derived from a
//! master seed, so results are bit-reproducible across runs and across
//! thread counts.

pub mod bounds;
pub mod estimator;
pub mod experiments;
pub mod model;
pub mod rng;
pub mod thresholds;

pub(crate) mod util;

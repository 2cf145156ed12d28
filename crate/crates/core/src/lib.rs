//! Stochastic relaxation of pseudo-Boolean functions.
//!
//! A function `f: {-1,+1}^n -> R` is optimized indirectly by moving a density
//! `q_theta` inside an exponential family with monomial sufficient statistics
//! so that `E_theta[f]` increases. The crate provides:
//!
//! * [`walsh`]: sparse Walsh representation, fast transforms, closed-form
//!   moment generating functions under the uniform density.
//! * [`expfam`]: exact small-`n` engine (log partition, mean parameters,
//!   Fisher information, relaxation gradient), a Gibbs sampler, and the
//!   isometric transport between centered `L^2` spaces.
//! * [`optim`]: stochastic natural gradient, estimation-of-distribution loops,
//!   and the noiseless natural-gradient reference.
//! * [`scalarfam`]: the binomial family in its dual parametrizations.
//! * [`orlicz`]: the `cosh - 1` Orlicz gauge and two analytic examples.
//! * [`cli`]: problem registry, run configuration, and demo tables.

pub mod cli;
pub mod error;
pub mod expfam;
pub mod optim;
pub mod orlicz;
pub mod quadrature;
pub mod scalarfam;
pub mod seed;
pub mod walsh;

pub use error::{Error, Result};

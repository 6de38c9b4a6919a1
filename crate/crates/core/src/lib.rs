//! Numerical toolkit for `M_p`- and `Z_p`-norms of random vectors.
//!
//! For a random vector `X` in `R^n` and `p >= 1` the moment norm is
//!
//! ```text
//! ||t||_{M_p(X)} = (E|<t, X>|^p)^(1/p)
//! ```
//!
//! and the centroid-body norm `||s||_{Z_p(X)}` is its dual, the support
//! function of the unit ball `M_p(X)`. The crate evaluates both (exactly for
//! even `p` where closed-form moments exist, by sample average otherwise),
//! together with the combinatorial constants, covering numbers and Sudakov
//! minoration estimates needed to probe moment bounds on `||X||_{Z_p(X)}`.
//!
//! Module map:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`dists`] | distribution families, seeded sampling, exact moment oracles |
//! | [`combi`] | multiindices, exact rationals, the constant `c_{2k}` |
//! | [`norms`] | `M_p` norms, gradients, Rademacher sums |
//! | [`dual`] | `Z_p` norms, nested moments, conjecture ratios |
//! | [`cover`] | nets, packings, volume bounds |
//! | [`sudakov`] | suprema over index sets and minoration constants |

// NaN inputs must fail range checks, so `!(x > 0.0)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combi;
pub mod cover;
pub mod dists;
pub mod dual;
mod error;
pub mod norms;
pub mod rng;
pub mod special;
pub mod stats;
pub mod sudakov;

pub use nalgebra;
pub use combi::{c2k, c2k_bounds, enumerate_multiindices, ExactRational, Multiindex};
pub use cover::{BodyOracle, NetKind, NetResult};
pub use dists::{sample, Capabilities, DistributionSpec, Family, Marginal, RadialLaw, SampleCache};
pub use dual::{DualSolveOptions, MpNorm, ZpMomentReport};
pub use error::{Error, Result};
pub use norms::{Method, NormEstimate};
pub use sudakov::{IndexSet, MinorationReport};

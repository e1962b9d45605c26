//! Random walk in random environment on trees of critical exponential growth.
//!
//! The crate reduces the walk to a random electrical network on a tree and
//! provides the pieces needed to probe the recurrence/transience boundary
//! numerically:
//!
//! - [`env_model`]: increment laws, backward push, top-heaviness, tilting.
//! - [`tree_model`]: b-ary, explicit and growth-targeted trees, addressed lazily.
//! - [`gauge_capacity`]: gauges, energy, capacity and dimension.
//! - [`random_env`]: hashed per-vertex environments, bottleneck statistic,
//!   effective conductance.
//! - [`walk_sim`]: the walk itself and its escape probabilities.
//! - [`tube_estimates`]: confinement probabilities, exact lattice DP and
//!   multilevel splitting.
//! - [`critical_constants`]: large-deviation bounds, critical constants,
//!   survivor sets and second-moment surrogates.
//! - [`experiments`]: configuration, report emission and the experiment
//!   dispatcher behind the `rwre` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod critical_constants;
pub mod env_model;
pub mod error;
pub mod experiments;
pub mod gauge_capacity;
pub mod random_env;
pub mod report;
pub mod seed;
pub mod tree_model;
pub mod tube_estimates;
pub mod walk_sim;

pub use env_model::{push_profile, tilt, EnvDistribution, PushProfile};
pub use error::{Error, Result};
pub use random_env::EnvSample;
pub use tree_model::{Tree, TreeSpec, VertexId};

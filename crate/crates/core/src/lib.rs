//! Simulation and analysis of Poisson random hypergraphs near criticality.
//!
//! A Poisson random hypergraph on `N` vertices carries, for every `k`-subset,
//! an independent Poisson number of `k`-edges with mean `N β_k / C(N, k)`.
//! Putting patches (1-edges) on vertices and collapsing identifies vertices;
//! the crate provides
//!
//! * [`beta`]: the intensity vector `β`, its critical quantities and the
//!   closed-form limit curves,
//! * [`hypergraph`]: sampling and edge-list persistence,
//! * [`collapse`]: identifiable sets, domains and sequential patching,
//! * [`bfw`] and [`walk`]: the breadth-first walk, either read off a
//!   materialized hypergraph or sampled directly from its sequential law,
//! * [`scaling`] and [`stats`]: the drifted Brownian limit, fluid and
//!   fluctuation comparisons, and the statistics used to compare them.

pub mod beta;
pub mod bfw;
pub mod collapse;
pub mod error;
pub mod hypergraph;
pub mod rng;
pub mod scaling;
pub mod stats;
pub mod trace;
pub mod walk;

pub use beta::{BetaParams, BorelModel, CriticalityReport, Regime};
pub use collapse::{Placement, StopReason, TrialReport};
pub use error::{Error, Result};
pub use hypergraph::Hypergraph;
pub use trace::{ExcursionRecord, WalkTrace};

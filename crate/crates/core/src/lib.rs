//! Equal-energy routing for one-dimensional ad-hoc wireless networks with a
//! single data collector.
//!
//! Nodes sit on a half-line at `x_1 < x_2 < … < x_N`; the collector sits at
//! `x_0 = 0`. Every node generates `Q_i` units of data and may send any part
//! of it to any other node or directly to the collector. Sending one unit
//! across a distance `d` costs `Σ λ_n d^{a_n}` (a [`CostSeries`]). The
//! network lifetime is maximized by minimizing the largest per-node energy,
//! and in the regimes covered here the optimum is an *equal-energy* flow in
//! which every node spends the same amount.
//!
//! The crate provides:
//!
//! - [`cost`]: superadditive distance costs and node positions.
//! - [`regular`]: closed forms for the regular chain `x_i = i` and the
//!   ranges of data volumes over which they stay optimal.
//! - [`perturbed`]: the linear system for shifted nodes `x_i = i - d_i`,
//!   its closed forms, and stability intervals for each shift.
//! - [`lp`]: an independent minimax simplex solver used as ground truth.
//! - [`validation`]: conservation, loop, equal-energy and lifetime checks
//!   for any [`FlowMatrix`].
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod cost;
mod error;
pub mod flow;
pub mod linalg;
pub mod lp;
pub mod perturbed;
pub mod regular;
pub mod roots;
pub mod validation;

pub use cost::{transmission_cost, CostSeries, CostTerm, Positions};
pub use error::{Error, Result};
pub use flow::{EqualEnergySolution, FlowMatrix};
pub use lp::{LpInstance, LpSolution, Verdict};
pub use perturbed::{PerturbedNetwork, StabilityInterval, SystemMatrix};
pub use regular::RegularNetwork;

/// Flow components with magnitude at or below this are treated as zero.
pub const FLOW_ZERO_TOL: f64 = 1e-9;

/// Read-only view shared by the regular and perturbed network types.
pub trait Network {
    /// Number of data-generating nodes `N`.
    fn node_count(&self) -> usize;
    /// Node positions, collector included at index 0.
    fn positions(&self) -> Positions;
    /// Data volumes `Q_1..Q_N`.
    fn volumes(&self) -> &[f64];
    fn series(&self) -> &CostSeries;
}

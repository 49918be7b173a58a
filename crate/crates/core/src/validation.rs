//! Feasibility, balance and lifetime checks that apply to any [`FlowMatrix`].
//!
//! Every tolerance here is relative with a floor of 1, so the same threshold
//! works for data volumes of any scale.

use alloc::vec::Vec;

use crate::cost::{CostSeries, Positions};
use crate::error::{Error, Result};
use crate::flow::{energies, FlowMatrix};
use crate::FLOW_ZERO_TOL;

/// Relative tolerance on the conservation residual.
pub const CONSERVATION_TOL: f64 = 1e-9;

/// Per-node `h_i(q) - Q_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    pub pass: bool,
}

/// `h_i(q) = q_{i,0} + Σ_{j≠i} (q_{i,j} - q_{j,i})` compared against `Q_i`.
pub fn check_conservation(flow: &FlowMatrix, volumes: &[f64]) -> ConservationReport {
    let n = flow.node_count();
    assert_eq!(volumes.len(), n, "one volume per node");
    let mut residuals: Vec<f64> = volumes.iter().map(|q| -q).collect();
    for (i, j, q) in flow.entries() {
        residuals[i - 1] += q;
        if j != 0 {
            residuals[j - 1] -= q;
        }
    }
    let max_abs = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let scale = volumes.iter().copied().fold(1.0, f64::max);
    ConservationReport {
        pass: max_abs <= CONSERVATION_TOL * scale,
        residuals,
        max_abs,
    }
}

/// `E_i^s = Σ_{j≠i} q_{i,j} E_{i,j}` for every node.
pub fn node_energies(flow: &FlowMatrix, positions: &Positions, series: &CostSeries) -> Vec<f64> {
    energies(flow, positions, series)
}

/// `max E - min E ≤ tol · max(1, max E)`. Empty input counts as balanced.
pub fn is_equal_energy(energies: &[f64], tol: f64) -> bool {
    let Some(&first) = energies.first() else {
        return true;
    };
    let (lo, hi) = energies
        .iter()
        .fold((first, first), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    hi - lo <= tol * hi.max(1.0)
}

/// No pair of nodes exchanges data in both directions.
pub fn check_no_loop(flow: &FlowMatrix) -> bool {
    let n = flow.node_count();
    for i in 1..=n {
        for j in i + 1..=n {
            if flow.get(i, j) > FLOW_ZERO_TOL && flow.get(j, i) > FLOW_ZERO_TOL {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeReport {
    pub per_node_energy: Vec<f64>,
    pub lifetime: f64,
    /// 1-based index of the first node to run dry.
    pub bottleneck: usize,
}

/// Time until the first node exhausts its initial energy:
/// `min_i E_i^(0) / E_i^s` over nodes that spend anything.
pub fn lifetime(
    flow: &FlowMatrix,
    positions: &Positions,
    series: &CostSeries,
    initial_energies: &[f64],
) -> Result<LifetimeReport> {
    if initial_energies.len() != flow.node_count() {
        return Err(Error::InvalidArgument("one initial energy per node"));
    }
    if initial_energies.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("initial energies must be positive"));
    }
    let per_node_energy = energies(flow, positions, series);
    let mut best: Option<(usize, f64)> = None;
    for (k, (&spent, &budget)) in per_node_energy.iter().zip(initial_energies).enumerate() {
        if spent > 0.0 {
            let t = budget / spent;
            if best.map_or(true, |(_, b)| t < b) {
                best = Some((k + 1, t));
            }
        }
    }
    let (bottleneck, lifetime) = best.ok_or(Error::ZeroEnergyNoFlow)?;
    Ok(LifetimeReport {
        per_node_energy,
        lifetime,
        bottleneck,
    })
}

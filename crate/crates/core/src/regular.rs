//! Equal-energy solutions on the regular chain `x_i = i`.
//!
//! In the regime where every node splits its outgoing data between a direct
//! transmission to the collector and a single hop to its left neighbour,
//! the flow and the common node energy have closed forms in the hop costs
//! `E_r = E(r)`. The functions here evaluate them and locate the volume
//! ranges over which they remain valid.

use alloc::vec;
use alloc::vec::Vec;

use crate::cost::{CostSeries, Positions};
use crate::error::{Error, Result};
use crate::flow::{EqualEnergySolution, FlowMatrix};
use crate::{Network, FLOW_ZERO_TOL};

/// Slack used for the strict volume inequalities.
const STRICT_TOL: f64 = 1e-12;

/// Nodes at `1..=N`, collector at 0, volumes `Q_1..Q_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularNetwork {
    volumes: Vec<f64>,
    series: CostSeries,
}

impl Network for RegularNetwork {
    fn node_count(&self) -> usize {
        self.volumes.len()
    }

    fn positions(&self) -> Positions {
        Positions::regular(self.volumes.len())
    }

    fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    fn series(&self) -> &CostSeries {
        &self.series
    }
}

/// The two flow families of a chain solution, indexed by sender.
///
/// `direct[i-1] = q_{i,0}` and `relay[i-1] = q_{i,i-1}` for `i ≥ 2`;
/// `relay[0]` is always 0 because node 1's left neighbour is the collector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFlows {
    pub direct: Vec<f64>,
    pub relay: Vec<f64>,
}

impl ChainFlows {
    /// Most negative component as `(from, to, amount)`, if any is below `-tol`.
    pub fn most_negative(&self, tol: f64) -> Option<(usize, usize, f64)> {
        let direct = self.direct.iter().enumerate().map(|(k, &q)| (k + 1, 0, q));
        let relay = self
            .relay
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &q)| (k + 1, k, q));
        direct
            .chain(relay)
            .filter(|e| e.2 < -tol)
            .min_by(|a, b| a.2.total_cmp(&b.2))
    }

    /// Smallest component over both families.
    pub fn min_component(&self) -> f64 {
        self.direct
            .iter()
            .chain(self.relay.iter().skip(1))
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_matrix(&self) -> FlowMatrix {
        let n = self.direct.len();
        let mut f = FlowMatrix::new(n);
        for i in 1..=n {
            f.set(i, 0, self.direct[i - 1]);
            if i >= 2 {
                f.set(i, i - 1, self.relay[i - 1]);
            }
        }
        f
    }
}

impl RegularNetwork {
    pub fn new(volumes: Vec<f64>, series: CostSeries) -> Result<Self> {
        validate_volumes(&volumes)?;
        Ok(Self { volumes, series })
    }

    pub fn n(&self) -> usize {
        self.volumes.len()
    }

    /// Copy of the network with `Q_i` replaced.
    pub fn with_volume(&self, i: usize, value: f64) -> Result<Self> {
        let n = self.n();
        if !(1..=n).contains(&i) {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let mut volumes = self.volumes.clone();
        volumes[i - 1] = value;
        Self::new(volumes, self.series.clone())
    }

    fn hops(&self) -> Vec<f64> {
        hop_costs(&self.series, self.n())
    }

    /// Common energy by iterating `E(L_k) = Q_k + (1 - 1/E_k) E(L_{k-1})`
    /// from `E(L_1) = Q_1`.
    pub fn node_energy_recurrence(&self) -> f64 {
        let hops = self.hops();
        let mut e = self.volumes[0];
        for k in 2..=self.n() {
            e = self.volumes[k - 1] + (1.0 - 1.0 / hops[k]) * e;
        }
        e
    }

    /// Common energy as the polynomial
    /// `Q_N + Σ_{j=2}^{N} Q_{j-1} Π_{r=j}^{N} (1 - 1/E_r)`.
    pub fn node_energy_closed_form(&self) -> f64 {
        prefix_energy(&self.volumes, &self.hops(), self.n())
    }

    /// Raw closed-form flows, without any sign check.
    pub fn closed_form_flows(&self) -> ChainFlows {
        chain_flows(&self.volumes, &self.hops())
    }

    /// Closed-form equal-energy flow. Fails with [`Error::NegativeFlow`] when
    /// the volumes lie outside the region where the chain structure is optimal.
    pub fn flow_closed_form(&self) -> Result<EqualEnergySolution> {
        let flows = self.closed_form_flows();
        if let Some((from, to, amount)) = flows.most_negative(FLOW_ZERO_TOL) {
            return Err(Error::NegativeFlow { from, to, amount });
        }
        EqualEnergySolution::from_flow(flows.to_matrix(), &self.positions(), &self.series)
    }

    /// Sufficient condition for the chain solution: `Q_1 ≥ 1` and
    /// `Q_{i+1} > E(L_i) / E_{i+1}` for every prefix `L_i`.
    pub fn check_q_constraints(&self) -> bool {
        let hops = self.hops();
        let q = &self.volumes;
        if q[0] < 1.0 {
            return false;
        }
        (1..self.n()).all(|i| q[i] > prefix_energy(q, &hops, i) / hops[i + 1] - STRICT_TOL)
    }

    /// Smallest `Q_N` for which node `N` still relays through node `N-1`:
    /// the root of `q_{N,N-1}(Q_N) = 0`.
    pub fn q_n_min(&self) -> Result<f64> {
        let n = self.n();
        if n < 2 {
            return Err(Error::InvalidNetwork("Q_N^min needs at least two nodes"));
        }
        let hops = self.hops();
        let q = &self.volumes;
        let mut bracket = q[n - 2];
        for j in 2..n {
            let mut prod = 1.0;
            for r in j..n {
                prod *= 1.0 - 1.0 / hops[r];
            }
            bracket += q[j - 2] * prod;
        }
        Ok(bracket / hops[n])
    }

    /// Largest `Q_i` (others fixed) for which `q_{i+1,i} ≥ 0`.
    ///
    /// `q_{i+1,i}` is affine in `Q_i`; the root is solved exactly.
    pub fn q_i_max(&self, i: usize) -> Result<f64> {
        let n = self.n();
        if i == 0 || i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let hops = self.hops();
        let e1 = hops[1];
        // d q_{i+1,i} / d Q_i = -Σ_{k=i+1}^{N} (E_1/E_k) c_k, with c_k the
        // coefficient of Q_i in the bracket of q_{k,0}.
        let mut slope = 0.0;
        for k in i + 1..=n {
            let mut c = 1.0;
            for r in 1..k - i {
                c *= 1.0 - e1 / hops[k - r];
            }
            slope -= e1 / hops[k] * c;
        }
        if !(slope.abs() > f64::MIN_POSITIVE) {
            return Err(Error::DegenerateCoefficient { index: i });
        }
        let mut zeroed = self.volumes.clone();
        zeroed[i - 1] = 0.0;
        let intercept = chain_flows(&zeroed, &hops).relay[i];
        Ok(-intercept / slope)
    }

    /// Membership in `{Q : Σ Q_i < 3N/2, Q_i ≥ 1}`, inside which the chain
    /// solution is optimal for every valid cost series. Needs `N ≥ 3`.
    pub fn stability_region_q_check(&self) -> Result<bool> {
        let n = self.n();
        if n < 3 {
            return Err(Error::InvalidNetwork(
                "the volume region is defined for N >= 3",
            ));
        }
        let total: f64 = self.volumes.iter().sum();
        Ok(total < 1.5 * n as f64 && self.volumes.iter().all(|&q| q >= 1.0))
    }

    /// `[(1/N) Σ j Q_j, Σ Q_j)`: range of the common energy of any
    /// equal-energy solution.
    pub fn energy_bounds_regular(&self) -> (f64, f64) {
        let n = self.n() as f64;
        let weighted: f64 = self
            .volumes
            .iter()
            .enumerate()
            .map(|(k, q)| (k + 1) as f64 * q)
            .sum();
        (weighted / n, self.volumes.iter().sum())
    }
}

/// `q_{i,0} = (i - H_i) / (i (i - 1))`: the direct flow of node `i` for
/// `E(d) = d²` and unit volumes.
pub fn harmonic_flow_a2(i: usize, n: usize) -> Result<f64> {
    if i < 2 || i > n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let h: f64 = (1..=i).map(|k| 1.0 / k as f64).sum();
    let i = i as f64;
    Ok((i - h) / (i * (i - 1.0)))
}

pub(crate) fn validate_volumes(volumes: &[f64]) -> Result<()> {
    if volumes.is_empty() {
        return Err(Error::InvalidNetwork("at least one node is required"));
    }
    if volumes.iter().any(|q| !(*q > 0.0) || !q.is_finite()) {
        return Err(Error::InvalidNetwork(
            "data volumes must be positive and finite",
        ));
    }
    Ok(())
}

/// `E_r` for `r ∈ [0, n]`.
fn hop_costs(series: &CostSeries, n: usize) -> Vec<f64> {
    (0..=n).map(|r| series.hop(r)).collect()
}

/// `E(L_m)` for the prefix `Q_1..Q_m`.
fn prefix_energy(q: &[f64], hops: &[f64], m: usize) -> f64 {
    if m == 1 {
        return q[0];
    }
    let mut e = q[m - 1];
    for j in 2..=m {
        let mut prod = 1.0;
        for r in j..=m {
            prod *= 1.0 - 1.0 / hops[r];
        }
        e += q[j - 2] * prod;
    }
    e
}

/// `Q_{k-1} + Σ_{j=1}^{k-2} Q_{k-j-1} Π_{r=1}^{j} (1 - E_1/E_{k-r})`, so
/// that `q_{k,0} = (E_1/E_k) · bracket(k)` for `k ≥ 2`.
fn bracket(q: &[f64], hops: &[f64], k: usize) -> f64 {
    let e1 = hops[1];
    let mut b = q[k - 2];
    for j in 1..=k.saturating_sub(2) {
        let mut prod = 1.0;
        for r in 1..=j {
            prod *= 1.0 - e1 / hops[k - r];
        }
        b += q[k - j - 2] * prod;
    }
    b
}

fn chain_flows(q: &[f64], hops: &[f64]) -> ChainFlows {
    let n = q.len();
    let e1 = hops[1];
    let mut direct = vec![0.0; n];
    let mut relay = vec![0.0; n];

    let mut q10 = q[n - 1];
    for j in 2..=n {
        let mut prod = 1.0;
        for r in j..=n {
            prod *= 1.0 - e1 / hops[r];
        }
        q10 += q[j - 2] * prod;
    }
    direct[0] = q10;

    let mut outflow = vec![0.0; n + 1];
    for k in 2..=n {
        let d = e1 / hops[k] * bracket(q, hops, k);
        direct[k - 1] = d;
        outflow[k] = d;
    }
    // q_{i,i-1} = Σ_{k=i}^{N} Q_k - Σ_{k=i}^{N} q_{k,0}
    for i in 2..=n {
        let supply: f64 = q[i - 1..].iter().sum();
        let sent: f64 = outflow[i..].iter().sum();
        relay[i - 1] = supply - sent;
    }
    ChainFlows { direct, relay }
}

use alloc::vec;
use alloc::vec::Vec;

use crate::cost::{transmission_cost, CostSeries, Positions};
use crate::error::{Error, Result};
use crate::FLOW_ZERO_TOL;

/// Dense data-flow matrix `q[i][j]`: amount node `i ∈ [1, N]` sends to node
/// `j ∈ [0, N]`, where `j = 0` is the collector.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    n: usize,
    q: Vec<f64>,
}

impl FlowMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            q: vec![0.0; n * (n + 1)],
        }
    }

    /// Direct routing: every node sends its own data to the collector.
    pub fn direct(volumes: &[f64]) -> Self {
        let mut f = Self::new(volumes.len());
        for (k, &v) in volumes.iter().enumerate() {
            f.set(k + 1, 0, v);
        }
        f
    }

    /// Next-hop routing: every node forwards all it holds to its left neighbour.
    pub fn next_hop(volumes: &[f64]) -> Self {
        let mut f = Self::new(volumes.len());
        let mut carried = 0.0;
        for i in (1..=volumes.len()).rev() {
            carried += volumes[i - 1];
            f.set(i, i - 1, carried);
        }
        f
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    fn index(&self, from: usize, to: usize) -> usize {
        assert!(
            (1..=self.n).contains(&from) && to <= self.n && from != to,
            "invalid edge ({from}, {to}) for {} nodes",
            self.n
        );
        (from - 1) * (self.n + 1) + to
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.q[self.index(from, to)]
    }

    /// Panics on a self-edge, an edge leaving the collector, or an index past `N`.
    pub fn set(&mut self, from: usize, to: usize, amount: f64) {
        let k = self.index(from, to);
        self.q[k] = amount;
    }

    /// All permitted edges `(from, to, amount)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (1..=self.n).flat_map(move |i| {
            (0..=self.n)
                .filter(move |&j| j != i)
                .map(move |j| (i, j, self.get(i, j)))
        })
    }

    /// Entries with amount above the zero tolerance.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries().filter(|e| e.2.abs() > FLOW_ZERO_TOL)
    }

    /// Most negative entry, if any entry is below `-tol`.
    pub fn most_negative(&self, tol: f64) -> Option<(usize, usize, f64)> {
        self.entries()
            .filter(|e| e.2 < -tol)
            .min_by(|a, b| a.2.total_cmp(&b.2))
    }

    /// Sets entries in `(-FLOW_ZERO_TOL, 0)` to zero.
    pub fn clamp_small_negatives(&mut self) {
        for v in &mut self.q {
            if *v < 0.0 && *v > -FLOW_ZERO_TOL {
                *v = 0.0;
            }
        }
    }
}

/// Flow together with the per-node energies it induces and their common
/// value.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualEnergySolution {
    pub flow: FlowMatrix,
    pub node_energies: Vec<f64>,
    pub common_energy: f64,
}

impl EqualEnergySolution {
    /// Rejects any entry below `-FLOW_ZERO_TOL`, clamps the rest, recomputes
    /// node energies and checks they agree to `1e-9 · max(1, E)`.
    pub fn from_flow(mut flow: FlowMatrix, pos: &Positions, series: &CostSeries) -> Result<Self> {
        if let Some((from, to, amount)) = flow.most_negative(FLOW_ZERO_TOL) {
            return Err(Error::NegativeFlow { from, to, amount });
        }
        flow.clamp_small_negatives();
        let node_energies = energies(&flow, pos, series);
        let common_energy = node_energies.first().copied().unwrap_or(0.0);
        let spread = node_energies
            .iter()
            .map(|e| (e - common_energy).abs())
            .fold(0.0, f64::max);
        if spread > 1e-9 * common_energy.max(1.0) {
            return Err(Error::EqualEnergyViolation { spread });
        }
        Ok(Self {
            flow,
            node_energies,
            common_energy,
        })
    }

    /// Largest node energy, the minimax objective.
    pub fn objective(&self) -> f64 {
        self.node_energies.iter().copied().fold(0.0, f64::max)
    }
}

pub(crate) fn energies(flow: &FlowMatrix, pos: &Positions, series: &CostSeries) -> Vec<f64> {
    let x = pos.as_slice();
    let mut e = vec![0.0; flow.node_count()];
    for (i, j, q) in flow.entries() {
        if q != 0.0 {
            e[i - 1] += q * transmission_cost(series, x[i], x[j]);
        }
    }
    e
}

//! Equal-energy solutions on a perturbed chain `x_i = i - d_i`.
//!
//! With the chain structure (each node sends only to the collector and to
//! its left neighbour), equal energies plus flow conservation form a square
//! linear system `M q = Q` of size `2N - 1`. Its unknowns are ordered
//!
//! ```text
//! (q_{N,0}, …, q_{1,0}, q_{2,1}, …, q_{N,N-1})
//! ```
//!
//! and its right-hand side is `(Q_N, …, Q_1, 0, …, 0)`. The solution is the
//! minimax optimum as long as every component stays nonnegative, which
//! defines the stability interval of each shift `d_i`.

use alloc::vec;
use alloc::vec::Vec;

use crate::cost::{transmission_cost, CostSeries, Positions};
use crate::error::{Error, Result};
use crate::flow::{EqualEnergySolution, FlowMatrix};
use crate::linalg::DenseMatrix;
use crate::regular::{validate_volumes, ChainFlows};
use crate::roots::bisect;
use crate::{Network, FLOW_ZERO_TOL};

/// Bisection brackets stop this far short of `±1` so nodes never coincide.
pub const BRACKET_MARGIN: f64 = 1e-6;

/// Width at which boundary bisection stops.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Outward scan resolution used to find the first sign change.
const SCAN_STEPS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedNetwork {
    shifts: Vec<f64>,
    volumes: Vec<f64>,
    series: CostSeries,
    positions: Positions,
}

impl Network for PerturbedNetwork {
    fn node_count(&self) -> usize {
        self.volumes.len()
    }

    fn positions(&self) -> Positions {
        self.positions.clone()
    }

    fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    fn series(&self) -> &CostSeries {
        &self.series
    }
}

/// Open interval of one shift parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityInterval {
    pub lo: f64,
    pub hi: f64,
}

impl StabilityInterval {
    pub fn contains(&self, d: f64) -> bool {
        self.lo < d && d < self.hi
    }

    /// `self ⊆ other`, allowing `tol` of slack at each end.
    pub fn is_within(&self, other: &StabilityInterval, tol: f64) -> bool {
        self.lo >= other.lo - tol && self.hi <= other.hi + tol
    }
}

/// The assembled `(2N-1) × (2N-1)` system and its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    n: usize,
}

impl SystemMatrix {
    /// Column of `q_{i,0}`.
    pub fn direct_column(n: usize, i: usize) -> usize {
        n - i
    }

    /// Column of `q_{i,i-1}`, `i ≥ 2`.
    pub fn relay_column(n: usize, i: usize) -> usize {
        n + i - 2
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn det(&self) -> Result<f64> {
        Ok(self.matrix.lu()?.det())
    }

    pub fn solve(&self) -> Result<ChainFlows> {
        let x = self.matrix.lu()?.solve(&self.rhs);
        Ok(self.unpack(&x))
    }

    pub fn unpack(&self, x: &[f64]) -> ChainFlows {
        let n = self.n;
        let direct = (1..=n).map(|i| x[Self::direct_column(n, i)]).collect();
        let relay = (1..=n)
            .map(|i| {
                if i >= 2 {
                    x[Self::relay_column(n, i)]
                } else {
                    0.0
                }
            })
            .collect();
        ChainFlows { direct, relay }
    }
}

impl PerturbedNetwork {
    /// `shifts[k]` and `volumes[k]` belong to node `k + 1`.
    pub fn new(shifts: Vec<f64>, volumes: Vec<f64>, series: CostSeries) -> Result<Self> {
        validate_volumes(&volumes)?;
        if shifts.len() != volumes.len() {
            return Err(Error::InvalidNetwork("one shift per node is required"));
        }
        let positions = Positions::from_shifts(&shifts)?;
        Ok(Self {
            shifts,
            volumes,
            series,
            positions,
        })
    }

    /// All shifts zero.
    pub fn unshifted(volumes: Vec<f64>, series: CostSeries) -> Result<Self> {
        Self::new(vec![0.0; volumes.len()], volumes, series)
    }

    /// Copy with `d_i` replaced.
    pub fn with_shift(&self, i: usize, d: f64) -> Result<Self> {
        let n = self.n();
        if !(1..=n).contains(&i) {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let mut shifts = self.shifts.clone();
        shifts[i - 1] = d;
        Self::new(shifts, self.volumes.clone(), self.series.clone())
    }

    pub fn n(&self) -> usize {
        self.volumes.len()
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    fn cost(&self, i: usize, j: usize) -> f64 {
        let x = self.positions.as_slice();
        transmission_cost(&self.series, x[i], x[j])
    }

    /// Builds `M` in block form `[[I, A], [B, C]]`: the top `N` rows are flow
    /// conservation (node `N` first), the bottom `N-1` rows equate the energies
    /// of consecutive nodes.
    pub fn assemble_system(&self) -> SystemMatrix {
        let n = self.n();
        let size = 2 * n - 1;
        let mut m = DenseMatrix::zeros(size);
        let mut rhs = vec![0.0; size];
        let dc = |i| SystemMatrix::direct_column(n, i);
        let rc = |i| SystemMatrix::relay_column(n, i);

        for row in 0..n {
            let node = n - row;
            m[(row, dc(node))] = 1.0;
            if node >= 2 {
                m[(row, rc(node))] += 1.0;
            }
            if node < n {
                m[(row, rc(node + 1))] -= 1.0;
            }
            rhs[row] = self.volumes[node - 1];
        }
        for i in 1..n {
            let row = n + i - 1;
            m[(row, dc(i))] += self.cost(i, 0);
            if i >= 2 {
                m[(row, rc(i))] += self.cost(i, i - 1);
            }
            m[(row, dc(i + 1))] -= self.cost(i + 1, 0);
            m[(row, rc(i + 1))] -= self.cost(i + 1, i);
        }
        SystemMatrix { matrix: m, rhs, n }
    }

    /// Solution of `M q = Q`, without any sign check.
    pub fn solve_system(&self) -> Result<ChainFlows> {
        self.assemble_system().solve()
    }

    /// Equal-energy flow from the linear system. Fails with
    /// [`Error::NegativeFlow`] outside the stability region.
    pub fn solve_equal_energy(&self) -> Result<EqualEnergySolution> {
        let flows = self.solve_system()?;
        if let Some((from, to, amount)) = flows.most_negative(FLOW_ZERO_TOL) {
            return Err(Error::NegativeFlow { from, to, amount });
        }
        EqualEnergySolution::from_flow(flows.to_matrix(), &self.positions, &self.series)
    }

    /// Common energy from the determinant form
    ///
    /// ```text
    /// E = (Σ_{k<N} Q_k Π_{i≤k} E_{i,0} Π_{i>k} (E_{i,0} - E_{i,i-1}) + Q_N Π_i E_{i,0}) / det M
    /// ```
    pub fn node_energy_sn(&self) -> Result<f64> {
        let n = self.n();
        if n == 1 {
            return Ok(self.cost(1, 0) * self.volumes[0]);
        }
        let det = self.assemble_system().det()?;
        let to_collector: Vec<f64> = (1..=n).map(|i| self.cost(i, 0)).collect();
        let mut total = 0.0;
        for k in 1..n {
            let head: f64 = to_collector[..k].iter().product();
            let tail: f64 = (k + 1..=n)
                .map(|i| to_collector[i - 1] - self.cost(i, i - 1))
                .product();
            total += self.volumes[k - 1] * head * tail;
        }
        total += self.volumes[n - 1] * to_collector.iter().product::<f64>();
        Ok(total / det)
    }

    /// `[(1/N) Σ_i Q_i Σ_{j≤i} E_{j,j-1}, max_i E_{i,i-1} Σ_{j≥i} Q_j)`.
    pub fn energy_bounds_perturbed(&self) -> (f64, f64) {
        let n = self.n();
        let mut path = 0.0;
        let mut lower = 0.0;
        for i in 1..=n {
            path += self.cost(i, i - 1);
            lower += self.volumes[i - 1] * path;
        }
        let upper = (1..=n)
            .map(|i| self.cost(i, i - 1) * self.volumes[i - 1..].iter().sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        (lower / n as f64, upper)
    }
}

/// Envelope `(d_i^L, d_i^R)` containing the stability interval of `d_i` for
/// unit volumes, single-node perturbation and any valid cost series. It is
/// exact for the linear cost.
pub fn stability_bounds_d(n: usize, i: usize) -> Result<(f64, f64)> {
    if n == 0 || i == 0 || i > n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let nf = n as f64;
    let fi = i as f64;

    let left = if i == 1 || i == n || fi >= (nf * nf + nf + 2.0) / (2.0 * nf) {
        -1.0
    } else {
        let m = nf + 1.0 - fi;
        -0.25 * (libm::sqrt(nf * (8.0 * fi + nf * m * m)) - nf * m)
    };

    let right = if n == 2 && i == 1 {
        1.0 / 3.0
    } else if i == n {
        1.0
    } else if i == n - 1 {
        // Root of the (linear) q_{N,0}; at or beyond 1 once N ≥ 4.
        (nf * (nf - 1.0) / (2.0 * (nf + 1.0))).min(1.0)
    } else if i == 1 {
        (libm::sqrt(nf * (nf * nf * nf + 2.0 * nf * nf + 5.0 * nf - 8.0)) - nf - nf * nf)
            / (2.0 * nf - 4.0)
    } else {
        let threshold = (nf * nf - nf - 2.0
            + libm::sqrt(
                4.0 - 12.0 * nf + 37.0 * nf * nf + 6.0 * nf * nf * nf + nf * nf * nf * nf,
            ))
            / (4.0 * nf);
        if fi < threshold {
            let m = nf - 1.0 - fi;
            let inner = 3.0 - fi * fi + nf + fi * nf;
            (libm::sqrt(nf * (8.0 * fi * (1.0 + fi) * m + nf * inner * inner))
                - nf * nf * (1.0 + fi)
                + nf * (fi * fi - 3.0))
                / (4.0 * m)
        } else {
            1.0
        }
    };
    Ok((left, right))
}

/// `(q_{i,0}, q_{i+1,0})` for linear cost, unit volumes and node `i` alone
/// shifted by `d`. The first component describes node `i` only for `i ≥ 2`.
pub fn flow_quadratics_a1(n: usize, i: usize, d: f64) -> Result<(f64, f64)> {
    if n < 2 || i == 0 || i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let nf = n as f64;
    let fi = i as f64;
    let qi0 = (fi * nf + (nf + 1.0 - fi) * nf * d - 2.0 * d * d) / (2.0 * nf * (fi - d));
    let qip10 = (fi * (fi + 1.0) * nf
        - (nf * (fi + 1.0) - fi * fi + 3.0) * nf * d
        - 2.0 * (nf - 1.0 - fi) * d * d)
        / (2.0 * (fi + 1.0) * nf * (fi - d));
    Ok((qi0, qip10))
}

/// Largest open interval around `d_i = 0` on which the linear-system
/// solution of `template` with `d_i` varied keeps every flow positive.
///
/// Each side is scanned outward to the first nonpositive point and then
/// bisected to [`BOUNDARY_TOL`]. A side whose flows stay positive up to
/// `±(1 - BRACKET_MARGIN)` reports `±1`.
pub fn numeric_d_interval(template: &PerturbedNetwork, i: usize) -> Result<StabilityInterval> {
    let n = template.n();
    if !(1..=n).contains(&i) {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let origin = template.with_shift(i, 0.0)?.solve_system()?;
    if let Some((from, to, amount)) = origin.most_negative(0.0) {
        return Err(Error::NegativeFlow { from, to, amount });
    }
    let margin = |d: f64| -> f64 {
        template
            .with_shift(i, d)
            .and_then(|net| net.solve_system())
            .map(|f| f.min_component())
            .ok()
            .filter(|v| !v.is_nan())
            .unwrap_or(-1.0)
    };
    let lo = boundary(&margin, -1.0)?;
    let hi = boundary(&margin, 1.0)?;
    Ok(StabilityInterval { lo, hi })
}

fn boundary(margin: &impl Fn(f64) -> f64, direction: f64) -> Result<f64> {
    let edge = direction * (1.0 - BRACKET_MARGIN);
    let mut inside = 0.0;
    for k in 1..=SCAN_STEPS {
        let d = edge * k as f64 / SCAN_STEPS as f64;
        if margin(d) <= 0.0 {
            return bisect(margin, inside, d, BOUNDARY_TOL);
        }
        inside = d;
    }
    Ok(direction)
}

/// Closed-form equal-energy flow for the linear cost `E_{i,j} = |x_i - x_j|`
/// at arbitrary positions.
pub fn closed_form_a1(positions: &Positions, volumes: &[f64]) -> Result<EqualEnergySolution> {
    let n = positions.node_count();
    if volumes.len() != n {
        return Err(Error::InvalidNetwork("one volume per node is required"));
    }
    validate_volumes(volumes)?;
    let x = positions.as_slice();
    let nf = n as f64;
    // prefix[i] = Σ_{j≤i} x_j Q_j
    let mut prefix = vec![0.0; n + 1];
    for j in 1..=n {
        prefix[j] = prefix[j - 1] + x[j] * volumes[j - 1];
    }
    let total = prefix[n];

    let mut flow = FlowMatrix::new(n);
    flow.set(1, 0, total / (nf * x[1]));
    for i in 2..n {
        let fi = i as f64;
        let q = (nf * (x[i] - x[i - 1]) * prefix[i - 1]
            + (fi * x[i - 1] - (fi - 1.0) * x[i]) * total)
            / (nf * x[i] * x[i - 1]);
        flow.set(i, 0, q);
    }
    if n >= 2 {
        let q = (1.0 - (nf - 1.0) / nf * x[n] / x[n - 1]) * volumes[n - 1]
            + prefix[n - 1] / (nf * x[n - 1]);
        flow.set(n, 0, q);
    }
    for i in 2..=n {
        let fi = i as f64;
        let q = ((fi - 1.0) * (total - prefix[i - 1]) - (nf - fi + 1.0) * prefix[i - 1])
            / (nf * x[i - 1]);
        flow.set(i, i - 1, q);
    }
    let linear = CostSeries::power(1.0)?;
    EqualEnergySolution::from_flow(flow, positions, &linear)
}

//! Minimax flow linear program, solved by a dense simplex method.
//!
//! `min_q max_i E_i(q)` is rewritten as `min t` subject to
//!
//! ```text
//! q_{i,0} + Σ_{j≠i} (q_{i,j} - q_{j,i}) = Q_i     (conservation, one row per node)
//! Σ_{j≠i} q_{i,j} E_{i,j} - t + s_i     = 0       (energy, one row per node)
//! q, s ≥ 0
//! ```
//!
//! Every node may send to every other node and to the collector. The start
//! basis is direct routing (`q_{i,0} = Q_i`), which is always feasible, so no
//! phase one is needed. Pivoting follows Bland's rule, which excludes
//! cycling and makes the pivot sequence deterministic.

use alloc::vec;
use alloc::vec::Vec;

use crate::cost::{transmission_cost, CostSeries, Positions};
use crate::error::{Error, Result};
use crate::flow::{energies, FlowMatrix};
use crate::validation::check_conservation;
use crate::{Network, FLOW_ZERO_TOL};

/// Pivot and reduced-cost tolerance, scaled by the instance magnitude.
pub const PIVOT_TOL: f64 = 1e-11;

/// Relative tolerance used when checking the solver's own output.
const SELF_CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LpInstance {
    positions: Positions,
    volumes: Vec<f64>,
    series: CostSeries,
    edges: Vec<(usize, usize)>,
    costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub flow: FlowMatrix,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// Candidate's largest node energy is within `tol` of the optimum.
    Optimal {
        gap: f64,
    },
    Suboptimal {
        gap: f64,
    },
    /// Conservation or nonnegativity fails by more than `tol`.
    Infeasible {
        max_residual: f64,
        min_entry: f64,
    },
}

impl Verdict {
    pub fn is_optimal(&self) -> bool {
        matches!(self, Verdict::Optimal { .. })
    }
}

impl LpInstance {
    /// Complete topology: `N·N` flow variables plus `t`.
    pub fn formulate<N: Network>(net: &N) -> Self {
        Self::restricted(net, |_, _| true)
    }

    /// Only edges accepted by `allow` get a variable. Edges into the collector
    /// are always kept so that direct routing stays feasible.
    pub fn restricted<N: Network>(net: &N, allow: impl Fn(usize, usize) -> bool) -> Self {
        let positions = net.positions();
        let n = net.node_count();
        let x = positions.as_slice();
        let mut edges = Vec::new();
        let mut costs = Vec::new();
        for i in 1..=n {
            for j in 0..=n {
                if j != i && (j == 0 || allow(i, j)) {
                    edges.push((i, j));
                    costs.push(transmission_cost(net.series(), x[i], x[j]));
                }
            }
        }
        Self {
            positions,
            volumes: net.volumes().to_vec(),
            series: net.series().clone(),
            edges,
            costs,
        }
    }

    pub fn node_count(&self) -> usize {
        self.volumes.len()
    }

    /// Flow variables `(from, to)` in column order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn flow_variable_count(&self) -> usize {
        self.edges.len()
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let order: Vec<usize> = (0..self.edges.len()).collect();
        self.solve_with_order(&order)
    }

    /// Solves with the flow columns laid out as `order[0], order[1], …`.
    /// Bland's rule picks by column position, so a different order walks a
    /// different vertex path.
    pub fn solve_with_order(&self, order: &[usize]) -> Result<LpSolution> {
        let mut seen = vec![false; self.edges.len()];
        if order.len() != self.edges.len()
            || order
                .iter()
                .any(|&k| k >= seen.len() || core::mem::replace(&mut seen[k], true))
        {
            return Err(Error::InvalidArgument(
                "order must permute the flow variables",
            ));
        }
        let mut tab = Tableau::build(self, order);
        let iterations = tab.run()?;
        let (flow, t) = tab.extract(self, order);
        self.self_check(flow, t, iterations)
    }

    fn scale(&self) -> f64 {
        let q = self.volumes.iter().copied().fold(1.0, f64::max);
        let e = self.costs.iter().copied().fold(1.0, f64::max);
        q * e
    }

    fn self_check(&self, mut flow: FlowMatrix, t: f64, iterations: usize) -> Result<LpSolution> {
        let stall = |reason| Err(Error::NumericalStall { iterations, reason });
        if flow.most_negative(FLOW_ZERO_TOL * self.scale()).is_some() {
            return stall("negative flow in final basis");
        }
        let negatives: Vec<_> = flow.entries().filter(|e| e.2 < 0.0).collect();
        for (i, j, _) in negatives {
            flow.set(i, j, 0.0);
        }
        if !check_conservation(&flow, &self.volumes).pass {
            return stall("conservation residual in final basis");
        }
        let e = energies(&flow, &self.positions, &self.series);
        let max_e = e.iter().copied().fold(0.0, f64::max);
        if (max_e - t).abs() > SELF_CHECK_TOL * t.abs().max(1.0) {
            return stall("epigraph value disagrees with node energies");
        }
        Ok(LpSolution {
            objective: t,
            flow,
            iterations,
        })
    }

    /// Compares a candidate flow against the optimum of this instance.
    pub fn verify_candidate(&self, candidate: &FlowMatrix, tol: f64) -> Result<Verdict> {
        if candidate.node_count() != self.node_count() {
            return Err(Error::InvalidArgument("candidate has the wrong node count"));
        }
        let cons = check_conservation(candidate, &self.volumes);
        let min_entry = candidate
            .entries()
            .map(|e| e.2)
            .fold(f64::INFINITY, f64::min);
        let scale = self.volumes.iter().copied().fold(1.0, f64::max);
        if cons.max_abs > tol * scale || min_entry < -tol {
            return Ok(Verdict::Infeasible {
                max_residual: cons.max_abs,
                min_entry,
            });
        }
        let optimum = self.solve()?.objective;
        let e = energies(candidate, &self.positions, &self.series);
        let gap = e.iter().copied().fold(0.0, f64::max) - optimum;
        Ok(if gap <= tol {
            Verdict::Optimal { gap }
        } else {
            Verdict::Suboptimal { gap }
        })
    }
}

/// Dense tableau in canonical form for the current basis. Columns are the
/// flow variables (permuted), then `t`, then one slack per node; the last
/// entry of every row is the right-hand side.
struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced costs, with `-objective` in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
    tol: f64,
}

impl Tableau {
    fn build(inst: &LpInstance, order: &[usize]) -> Self {
        let n = inst.node_count();
        let nf = order.len();
        let t_col = nf;
        let slack = |i: usize| nf + i;
        let width = nf + 1 + n + 1;
        let mut rows = vec![vec![0.0; width]; 2 * n];
        let mut direct_col = vec![0; n + 1];

        for (col, &k) in order.iter().enumerate() {
            let (i, j) = inst.edges[k];
            rows[i - 1][col] += 1.0;
            if j == 0 {
                direct_col[i] = col;
            } else {
                rows[j - 1][col] -= 1.0;
            }
            rows[n + i - 1][col] = inst.costs[k];
        }
        for i in 1..=n {
            rows[i - 1][width - 1] = inst.volumes[i - 1];
            rows[n + i - 1][t_col] = -1.0;
            rows[n + i - 1][slack(i)] = 1.0;
        }

        // Direct routing: t sits in the energy row of the busiest node.
        let busiest = (1..=n)
            .map(|i| {
                inst.volumes[i - 1]
                    * inst.costs[inst.edges.iter().position(|&e| e == (i, 0)).unwrap()]
            })
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |b, (k, e)| if e > b.1 { (k, e) } else { b },
            )
            .0
            + 1;

        let mut obj = vec![0.0; width];
        obj[t_col] = 1.0;
        let mut tab = Self {
            rows,
            obj,
            basis: vec![0; 2 * n],
            tol: PIVOT_TOL * inst.scale(),
        };
        for i in 1..=n {
            tab.pivot(i - 1, direct_col[i]);
        }
        tab.pivot(n + busiest - 1, t_col);
        for i in (1..=n).filter(|&i| i != busiest) {
            tab.pivot(n + i - 1, slack(i));
        }
        for row in &mut tab.rows {
            let rhs = row.last_mut().unwrap();
            if *rhs < 0.0 && *rhs > -tab.tol {
                *rhs = 0.0;
            }
        }
        tab
    }

    fn width(&self) -> usize {
        self.obj.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in &mut self.rows[r] {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k != r {
                eliminate(row, &pivot_row, c);
            }
        }
        eliminate(&mut self.obj, &pivot_row, c);
        self.basis[r] = c;
    }

    fn run(&mut self) -> Result<usize> {
        let limit = 200 * (self.rows.len() + self.width()) + 1000;
        for iterations in 0..limit {
            let Some(enter) = (0..self.width()).find(|&c| self.obj[c] < -self.tol) else {
                return Ok(iterations);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a <= self.tol {
                    continue;
                }
                let ratio = row[row.len() - 1].max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((best, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * best_ratio.abs().max(1.0);
                        if ratio < best_ratio && !tie || tie && self.basis[r] < self.basis[best] {
                            Some((r, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Err(Error::NumericalStall {
                    iterations,
                    reason: "unbounded direction",
                });
            };
            self.pivot(r, enter);
        }
        Err(Error::NumericalStall {
            iterations: limit,
            reason: "iteration limit",
        })
    }

    fn extract(&self, inst: &LpInstance, order: &[usize]) -> (FlowMatrix, f64) {
        let mut x = vec![0.0; self.width()];
        for (r, &c) in self.basis.iter().enumerate() {
            x[c] = self.rows[r][self.width()];
        }
        let mut flow = FlowMatrix::new(inst.node_count());
        for (col, &k) in order.iter().enumerate() {
            let (i, j) = inst.edges[k];
            flow.set(i, j, x[col]);
        }
        (flow, x[order.len()])
    }
}

fn eliminate(row: &mut [f64], pivot_row: &[f64], c: usize) {
    let f = row[c];
    if f != 0.0 {
        for (v, p) in row.iter_mut().zip(pivot_row) {
            *v -= f * p;
        }
        row[c] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regular::RegularNetwork;

    fn net(q: &[f64], a: f64) -> RegularNetwork {
        RegularNetwork::new(q.to_vec(), CostSeries::power(a).unwrap()).unwrap()
    }

    #[test]
    fn variable_counts() {
        let one = LpInstance::formulate(&net(&[1.0], 2.0));
        assert_eq!(one.edges(), &[(1, 0)]);
        let two = LpInstance::formulate(&net(&[1.0; 2], 2.0));
        assert_eq!(two.flow_variable_count(), 4);
        assert!(two.edges().contains(&(1, 2)) && two.edges().contains(&(2, 1)));
        assert_eq!(
            LpInstance::formulate(&net(&[1.0; 3], 2.0)).flow_variable_count(),
            9
        );
    }

    #[test]
    fn small_optima() {
        let s = LpInstance::formulate(&net(&[1.0], 2.0)).solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!((s.flow.get(1, 0) - 1.0).abs() < 1e-12);

        let s = LpInstance::formulate(&net(&[1.0; 2], 2.0)).solve().unwrap();
        assert!((s.objective - 1.75).abs() < 1e-10);
        let s = LpInstance::formulate(&net(&[1.0; 3], 2.0)).solve().unwrap();
        assert!((s.objective - 23.0 / 9.0).abs() < 1e-10);
    }

    #[test]
    fn verdicts() {
        let n = net(&[1.0; 3], 2.0);
        let inst = LpInstance::formulate(&n);
        let cf = n.flow_closed_form().unwrap();
        let v = inst.verify_candidate(&cf.flow, 1e-7).unwrap();
        assert!(matches!(v, Verdict::Optimal { gap } if gap.abs() < 1e-7));

        let nh = FlowMatrix::next_hop(&[1.0; 3]);
        match inst.verify_candidate(&nh, 1e-7).unwrap() {
            Verdict::Suboptimal { gap } => assert!((gap - (3.0 - 23.0 / 9.0)).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }

        let mut bad = FlowMatrix::direct(&[1.0; 3]);
        bad.set(2, 1, -0.5);
        bad.set(1, 0, 0.5);
        assert!(matches!(
            inst.verify_candidate(&bad, 1e-7).unwrap(),
            Verdict::Infeasible { .. }
        ));
    }

    #[test]
    fn rejects_bad_order() {
        let inst = LpInstance::formulate(&net(&[1.0; 2], 2.0));
        assert!(inst.solve_with_order(&[0, 1, 2]).is_err());
        assert!(inst.solve_with_order(&[0, 1, 1, 3]).is_err());
    }

    fn relay_only(i: usize, j: usize) -> bool {
        j + 1 == i
    }

    #[test]
    fn mixed_series_prefers_a_long_hop() {
        // Superadditive, yet node 3 does better sending straight to node 1.
        let s = CostSeries::new(
            vec![
                CostTerm::new(0.04849619091065105, 3.7197051259066205),
                CostTerm::new(0.28881909092849073, 1.5491482342309562),
                CostTerm::new(0.6626847181608584, 1.076466008773584),
            ],
            true,
        )
        .unwrap();
        assert!(crate::cost::check_superadditivity(&s, &Positions::regular(3)).is_empty());
        let n = RegularNetwork::new(vec![1.0; 3], s).unwrap();
        assert!(n.check_q_constraints());
        let full = LpInstance::formulate(&n).solve().unwrap();
        let chain = LpInstance::restricted(&n, relay_only).solve().unwrap();
        assert!(full.flow.get(3, 1) > 0.1);
        assert!(chain.objective - full.objective > 8e-3);
        let cf = n.flow_closed_form().unwrap();
        assert!((chain.objective - cf.common_energy).abs() < 1e-9);
    }

    use crate::cost::CostTerm;
    use proptest::prelude::*;

    fn power_chain() -> impl Strategy<Value = RegularNetwork> {
        (
            1usize..7,
            1.0f64..4.0,
            prop::collection::vec(0.2f64..3.0, 7),
        )
            .prop_map(|(n, a, q)| net(&q[..n], a))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn permuted_order_same_optimum(n in power_chain(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let inst = LpInstance::formulate(&n);
            let mut order: Vec<usize> = (0..inst.flow_variable_count()).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = inst.solve().unwrap().objective;
            let b = inst.solve_with_order(&order).unwrap().objective;
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }

        #[test]
        fn optimum_scales_with_volumes(n in power_chain(), k in 0.01f64..100.0) {
            let a = LpInstance::formulate(&n).solve().unwrap().objective;
            let scaled: Vec<f64> = n.volumes().iter().map(|q| q * k).collect();
            let m = RegularNetwork::new(scaled, n.series().clone()).unwrap();
            let b = LpInstance::formulate(&m).solve().unwrap().objective;
            prop_assert!((b - k * a).abs() <= 1e-9 * (k * a).max(1.0));
        }

        #[test]
        fn chain_support_suffices_for_powers(n in power_chain()) {
            prop_assume!(n.check_q_constraints());
            let full = LpInstance::formulate(&n).solve().unwrap().objective;
            let chain = LpInstance::restricted(&n, relay_only).solve().unwrap().objective;
            prop_assert!((full - chain).abs() <= 1e-9 * full.max(1.0));
        }
    }
}

//! Output documents.

use eqroute_core::validation::{
    check_conservation, check_no_loop, is_equal_energy, LifetimeReport,
};
use eqroute_core::{EqualEnergySolution, FlowMatrix, LpSolution, FLOW_ZERO_TOL};
use serde::{Deserialize, Serialize};

use crate::config::TermConfig;
use crate::format::{csv_num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub from: usize,
    pub to: usize,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub flows: Vec<FlowEntry>,
    pub node_energies: Vec<f64>,
    pub common_energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

fn entries(flow: &FlowMatrix) -> Vec<FlowEntry> {
    flow.nonzero()
        .map(|(from, to, amount)| FlowEntry { from, to, amount })
        .collect()
}

impl SolutionDoc {
    pub fn from_solution(sol: &EqualEnergySolution) -> Self {
        Self {
            flows: entries(&sol.flow),
            node_energies: sol.node_energies.clone(),
            common_energy: sol.common_energy,
            objective: None,
            iterations: None,
        }
    }

    /// LP optimum. `common_energy` is the optimal max node energy.
    pub fn from_lp(sol: &LpSolution, node_energies: Vec<f64>) -> Self {
        Self {
            flows: entries(&sol.flow),
            node_energies,
            common_energy: sol.objective,
            objective: Some(sol.objective),
            iterations: Some(sol.iterations),
        }
    }

    pub fn to_flow(&self, n: usize) -> Result<FlowMatrix, String> {
        let mut f = FlowMatrix::new(n);
        for e in &self.flows {
            if e.from == 0 || e.from > n || e.to > n || e.from == e.to {
                return Err(format!("invalid edge ({}, {}) for {n} nodes", e.from, e.to));
            }
            f.set(e.from, e.to, e.amount);
        }
        Ok(f)
    }

    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&["from", "to", "amount"]);
        for e in &self.flows {
            t.row(&[e.from.to_string(), e.to.to_string(), csv_num(e.amount)]);
        }
        t.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityDoc {
    pub node: usize,
    pub envelope: [f64; 2],
    pub numeric: [f64; 2],
    pub series: Vec<TermConfig>,
}

pub fn stability_csv(rows: &[StabilityDoc]) -> String {
    let mut t = Table::new(&["node", "env_lo", "env_hi", "num_lo", "num_hi"]);
    for r in rows {
        t.row(&[
            r.node.to_string(),
            csv_num(r.envelope[0]),
            csv_num(r.envelope[1]),
            csv_num(r.numeric[0]),
            csv_num(r.numeric[1]),
        ]);
    }
    t.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeRegionDoc {
    pub n: usize,
    pub q_constraints: bool,
    /// `None` below three nodes, where the region is not defined.
    pub in_volume_region: Option<bool>,
    pub q_n_min: Option<f64>,
    /// `q_i_max[k]` belongs to node `k + 1`.
    pub q_i_max: Vec<Option<f64>>,
}

impl VolumeRegionDoc {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".into(), csv_num);
        let mut t = Table::new(&["quantity", "node", "value"]);
        t.row(&[
            "q_constraints",
            "",
            if self.q_constraints { "true" } else { "false" },
        ]);
        let region = self
            .in_volume_region
            .map_or("none", |b| if b { "true" } else { "false" });
        t.row(&["in_volume_region", "", region]);
        t.row(&["q_n_min".into(), self.n.to_string(), opt(self.q_n_min)]);
        for (k, v) in self.q_i_max.iter().enumerate() {
            t.row(&["q_i_max".into(), (k + 1).to_string(), opt(*v)]);
        }
        t.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationDoc {
    pub conservation_max_residual: f64,
    pub equal_energy: bool,
    pub no_loop: bool,
    pub lifetime: f64,
    pub bottleneck: usize,
}

impl ValidationDoc {
    pub fn new(flow: &FlowMatrix, volumes: &[f64], life: &LifetimeReport) -> Self {
        Self {
            conservation_max_residual: check_conservation(flow, volumes).max_abs,
            equal_energy: is_equal_energy(&life.per_node_energy, FLOW_ZERO_TOL),
            no_loop: check_no_loop(flow),
            lifetime: life.lifetime,
            bottleneck: life.bottleneck,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&[
            "conservation_max_residual",
            "equal_energy",
            "no_loop",
            "lifetime",
            "bottleneck",
        ]);
        t.row(&[
            csv_num(self.conservation_max_residual),
            self.equal_energy.to_string(),
            self.no_loop.to_string(),
            csv_num(self.lifetime),
            self.bottleneck.to_string(),
        ]);
        t.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub n: usize,
    pub series: Vec<TermConfig>,
    pub volumes: Vec<f64>,
    /// Largest node energy of the closed-form chain flow.
    pub closed_form: f64,
    pub lp: f64,
    /// `closed_form - lp`; absent when the closed form is infeasible.
    pub gap: Option<f64>,
    /// `optimal`, `suboptimal` or `infeasible`.
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tolerance: f64,
    pub all_optimal: bool,
    pub instances: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&[
            "n",
            "exponents",
            "volumes",
            "closed_form",
            "lp",
            "gap",
            "verdict",
        ]);
        let join = |v: Vec<String>| v.join(";");
        for r in &self.instances {
            t.row(&[
                r.n.to_string(),
                join(r.series.iter().map(|s| csv_num(s.exponent)).collect()),
                join(r.volumes.iter().map(|&q| csv_num(q)).collect()),
                csv_num(r.closed_form),
                csv_num(r.lp),
                r.gap.map_or_else(|| "none".into(), csv_num),
                r.verdict.clone(),
            ]);
        }
        t.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// `None` past the stability boundary.
    pub common_energy: Option<f64>,
    pub outside: bool,
    pub min_flow: f64,
}

pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut t = Table::new(&[param, "common_energy", "min_flow"]);
    for r in rows {
        let e = match r.common_energy {
            Some(e) if !r.outside => csv_num(e),
            _ => "outside".into(),
        };
        t.row(&[csv_num(r.value), e, csv_num(r.min_flow)]);
    }
    t.finish()
}

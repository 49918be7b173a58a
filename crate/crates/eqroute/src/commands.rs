use eqroute_core::perturbed::{numeric_d_interval, stability_bounds_d, PerturbedNetwork};
use eqroute_core::regular::ChainFlows;
use eqroute_core::validation::{lifetime, node_energies, LifetimeReport};
use eqroute_core::{Error, LpInstance, Network, RegularNetwork, Verdict, FLOW_ZERO_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{read_json, NetworkConfig, VerifySuite, VolumeMode};
use crate::doc::{
    stability_csv, sweep_csv, SolutionDoc, StabilityDoc, SweepRow, ValidationDoc, VerifyReport,
    VerifyRow, VolumeRegionDoc,
};
use crate::format::csv_num;
use crate::{Cli, CliError, Command, Format};

/// Gap below which a closed-form solution counts as optimal.
pub const VERIFY_TOL: f64 = 1e-7;

/// Exit code for a verification run with at least one non-optimal instance.
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub body: String,
    pub code: i32,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self { body, code: 0 }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::SolveRegular => solve_regular(cli),
        Command::SolvePerturbed => solve_perturbed(cli),
        Command::SolveLp => solve_lp(cli),
        Command::StabilityQ => stability_q(cli),
        Command::StabilityD { nodes } => stability_d(cli, nodes),
        Command::Verify => verify(cli),
        Command::Sweep { param, grid } => sweep(cli, param, grid),
        Command::Validate {
            flow,
            initial_energy,
        } => validate(cli, flow, *initial_energy),
    }
}

fn load_network(cli: &Cli) -> Result<NetworkConfig, CliError> {
    let path = cli
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("--input is required".into()))?;
    read_json(path)
}

fn render<T: Serialize>(value: &T, format: Format, csv: impl FnOnce() -> String) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
            s.push('\n');
            s
        }
        Format::Csv => csv(),
    }
}

fn negative_flow(from: usize, to: usize, amount: f64) -> String {
    format!("q_{{{from},{to}}} = {} < 0", csv_num(amount))
}

/// Names the volume boundary closest to the current volumes, preferring
/// boundaries that are already crossed.
fn nearest_volume_boundary(net: &RegularNetwork) -> Option<String> {
    let q = net.volumes();
    let n = net.n();
    let mut candidates = Vec::new();
    if let Ok(m) = net.q_n_min() {
        candidates.push((q[n - 1] < m, n, "min", m));
    }
    for i in 1..n {
        if let Ok(m) = net.q_i_max(i) {
            candidates.push((q[i - 1] > m, i, "max", m));
        }
    }
    let distance = |(_, i, _, m): &(bool, usize, &str, f64)| {
        (q[*i - 1] - m).abs() / m.abs().max(f64::MIN_POSITIVE)
    };
    candidates
        .iter()
        .min_by(|a, b| b.0.cmp(&a.0).then(distance(a).total_cmp(&distance(b))))
        .map(|&(_, i, kind, m)| {
            format!(
                "nearest boundary Q_{i}^{kind} = {} (Q_{i} = {})",
                csv_num(m),
                csv_num(q[i - 1])
            )
        })
}

fn solve_regular(cli: &Cli) -> Result<Outcome, CliError> {
    let net = load_network(cli)?.regular()?;
    match net.flow_closed_form() {
        Ok(sol) => {
            let doc = SolutionDoc::from_solution(&sol);
            Ok(Outcome::ok(render(&doc, cli.format, || doc.to_csv())))
        }
        Err(Error::NegativeFlow { from, to, amount }) => {
            let mut msg = negative_flow(from, to, amount);
            if let Some(b) = nearest_volume_boundary(&net) {
                msg.push_str("; ");
                msg.push_str(&b);
            }
            Err(CliError::OutOfRegion(msg))
        }
        Err(e) => Err(CliError::runtime(e)),
    }
}

fn solve_perturbed(cli: &Cli) -> Result<Outcome, CliError> {
    let net = load_network(cli)?.perturbed()?;
    match net.solve_equal_energy() {
        Ok(sol) => {
            let doc = SolutionDoc::from_solution(&sol);
            Ok(Outcome::ok(render(&doc, cli.format, || doc.to_csv())))
        }
        Err(Error::NegativeFlow { from, to, amount }) => Err(CliError::OutOfRegion(format!(
            "{}; shifts lie outside the stability region",
            negative_flow(from, to, amount)
        ))),
        Err(e) => Err(CliError::runtime(e)),
    }
}

fn solve_lp(cli: &Cli) -> Result<Outcome, CliError> {
    let net = load_network(cli)?.perturbed()?;
    let sol = LpInstance::formulate(&net)
        .solve()
        .map_err(CliError::runtime)?;
    let energies = node_energies(&sol.flow, &net.positions(), net.series());
    let doc = SolutionDoc::from_lp(&sol, energies);
    Ok(Outcome::ok(render(&doc, cli.format, || doc.to_csv())))
}

fn stability_q(cli: &Cli) -> Result<Outcome, CliError> {
    let net = load_network(cli)?.regular()?;
    let doc = VolumeRegionDoc {
        n: net.n(),
        q_constraints: net.check_q_constraints(),
        in_volume_region: net.stability_region_q_check().ok(),
        q_n_min: net.q_n_min().ok(),
        q_i_max: (1..net.n()).map(|i| net.q_i_max(i).ok()).collect(),
    };
    Ok(Outcome::ok(render(&doc, cli.format, || doc.to_csv())))
}

fn parse_nodes(list: &str, n: usize) -> Result<Vec<usize>, CliError> {
    if list.trim() == "all" {
        return Ok((1..=n).collect());
    }
    list.split(',')
        .map(|s| {
            let i: usize = s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad node index '{s}'")))?;
            if (1..=n).contains(&i) {
                Ok(i)
            } else {
                Err(CliError::Config(format!("node {i} outside 1..={n}")))
            }
        })
        .collect()
}

fn stability_d(cli: &Cli, nodes: &str) -> Result<Outcome, CliError> {
    let cfg = load_network(cli)?;
    if !cfg.is_unshifted() {
        return Err(CliError::Config(
            "stability queries start from zero shifts".into(),
        ));
    }
    let net = cfg.perturbed()?;
    let series: Vec<_> = net.series().terms().iter().map(|&t| t.into()).collect();
    let mut rows = Vec::new();
    for i in parse_nodes(nodes, net.n())? {
        let (lo, hi) = stability_bounds_d(net.n(), i).map_err(CliError::config)?;
        let num = numeric_d_interval(&net, i).map_err(|e| match e {
            Error::NegativeFlow { from, to, amount } => {
                CliError::OutOfRegion(negative_flow(from, to, amount))
            }
            e => CliError::runtime(e),
        })?;
        rows.push(StabilityDoc {
            node: i,
            envelope: [lo, hi],
            numeric: [num.lo, num.hi],
            series: series.clone(),
        });
    }
    Ok(Outcome::ok(render(&rows, cli.format, || {
        stability_csv(&rows)
    })))
}

/// `Q_i = 1 + s w_i` with `s < N/2` and random weights summing to 1.
fn region_volumes(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let s = rng.gen_range(0.0..0.5 * n as f64 * (1.0 - 1e-9));
    let w: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| 1.0 + s * x / total).collect()
}

fn suite_networks(suite: &VerifySuite, seed: u64) -> Result<Vec<RegularNetwork>, CliError> {
    let mut nets = suite
        .instances
        .iter()
        .map(NetworkConfig::regular)
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(grid) = &suite.grid {
        if grid.n[0] == 0 || grid.n[0] > grid.n[1] {
            return Err(CliError::Config(
                "grid node range must be 1 <= lo <= hi".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for n in grid.n[0]..=grid.n[1] {
            for &a in &grid.exponents {
                let series = crate::config::CostConfig::power(a).series()?;
                for _ in 0..grid.samples {
                    let q = match grid.volumes {
                        VolumeMode::Ones => vec![1.0; n],
                        VolumeMode::Region => region_volumes(&mut rng, n),
                    };
                    nets.push(RegularNetwork::new(q, series.clone()).map_err(CliError::config)?);
                }
            }
        }
    }
    Ok(nets)
}

fn verify_one(net: &RegularNetwork) -> Result<VerifyRow, CliError> {
    let candidate = net.closed_form_flows().to_matrix();
    let closed_form = node_energies(&candidate, &net.positions(), net.series())
        .into_iter()
        .fold(0.0, f64::max);
    let inst = LpInstance::formulate(net);
    let verdict = inst
        .verify_candidate(&candidate, VERIFY_TOL)
        .map_err(CliError::runtime)?;
    let (lp, gap, label) = match verdict {
        Verdict::Optimal { gap } => (closed_form - gap, Some(gap), "optimal"),
        Verdict::Suboptimal { gap } => (closed_form - gap, Some(gap), "suboptimal"),
        Verdict::Infeasible { .. } => (
            inst.solve().map_err(CliError::runtime)?.objective,
            None,
            "infeasible",
        ),
    };
    Ok(VerifyRow {
        n: net.n(),
        series: net.series().terms().iter().map(|&t| t.into()).collect(),
        volumes: net.volumes().to_vec(),
        closed_form,
        lp,
        gap,
        verdict: label.into(),
    })
}

fn verify(cli: &Cli) -> Result<Outcome, CliError> {
    let suite = match &cli.input {
        Some(path) => read_json(path)?,
        None => VerifySuite::default_suite(),
    };
    let instances = suite_networks(&suite, cli.seed)?
        .iter()
        .map(verify_one)
        .collect::<Result<Vec<_>, _>>()?;
    let all_optimal = instances.iter().all(|r| r.verdict == "optimal");
    let report = VerifyReport {
        tolerance: VERIFY_TOL,
        all_optimal,
        instances,
    };
    Ok(Outcome {
        body: render(&report, cli.format, || report.to_csv()),
        code: if all_optimal { 0 } else { EXIT_VERIFY_FAILED },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Param {
    Volume(usize),
    Shift(usize),
}

fn parse_param(name: &str, n: usize) -> Result<Param, CliError> {
    let bad = || {
        CliError::Config(format!(
            "--param must be Q<i> or d<i> with 1 <= i <= {n}, got '{name}'"
        ))
    };
    let (kind, index) = name.split_at_checked(1).ok_or_else(bad)?;
    let i: usize = index.parse().map_err(|_| bad())?;
    if !(1..=n).contains(&i) {
        return Err(bad());
    }
    match kind {
        "Q" | "q" => Ok(Param::Volume(i)),
        "d" | "D" => Ok(Param::Shift(i)),
        _ => Err(bad()),
    }
}

/// `LO:HI:STEP` expanded to `LO + k STEP` for every point up to `HI`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Config(format!("--grid '{text}': {why}"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("expected LO:HI:STEP"))?;
    let [lo, hi, step] = parts[..] else {
        return Err(bad("expected LO:HI:STEP"));
    };
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(bad("need finite LO <= HI and STEP > 0"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return Err(bad("too many points"));
    }
    Ok((0..count)
        .map(|k| {
            let v = lo + k as f64 * step;
            if v.abs() < 1e-9 * step {
                0.0
            } else {
                v
            }
        })
        .collect())
}

fn sweep_point(
    cfg: &NetworkConfig,
    template: &PerturbedNetwork,
    param: Param,
    value: f64,
) -> Result<SweepRow, CliError> {
    let (flows, net): (ChainFlows, PerturbedNetwork) = match param {
        Param::Volume(i) => {
            let mut volumes = template.volumes().to_vec();
            volumes[i - 1] = value;
            let net = PerturbedNetwork::new(
                template.shifts().to_vec(),
                volumes.clone(),
                template.series().clone(),
            )
            .map_err(CliError::config)?;
            let flows = if cfg.is_unshifted() {
                RegularNetwork::new(volumes, template.series().clone())
                    .map_err(CliError::config)?
                    .closed_form_flows()
            } else {
                net.solve_system().map_err(CliError::runtime)?
            };
            (flows, net)
        }
        Param::Shift(i) => {
            let net = template.with_shift(i, value).map_err(CliError::config)?;
            (net.solve_system().map_err(CliError::runtime)?, net)
        }
    };
    let min_flow = flows.min_component();
    let outside = min_flow < -FLOW_ZERO_TOL;
    let common_energy = if outside {
        None
    } else {
        node_energies(&flows.to_matrix(), &net.positions(), net.series())
            .first()
            .copied()
    };
    Ok(SweepRow {
        value,
        common_energy,
        outside,
        min_flow,
    })
}

fn sweep(cli: &Cli, param: &str, grid: &str) -> Result<Outcome, CliError> {
    let cfg = load_network(cli)?;
    let template = cfg.perturbed()?;
    let which = parse_param(param, template.n())?;
    let values = parse_grid(grid)?;
    let rows = values
        .par_iter()
        .map(|&v| sweep_point(&cfg, &template, which, v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Outcome::ok(render(&rows, cli.format, || {
        sweep_csv(param, &rows)
    })))
}

fn validate(cli: &Cli, flow_path: &std::path::Path, initial: f64) -> Result<Outcome, CliError> {
    let net = load_network(cli)?.perturbed()?;
    let doc: SolutionDoc = read_json(flow_path)?;
    let flow = doc.to_flow(net.n()).map_err(CliError::Config)?;
    let budget = vec![initial; net.n()];
    let life = match lifetime(&flow, &net.positions(), net.series(), &budget) {
        Ok(r) => r,
        Err(Error::ZeroEnergyNoFlow) => LifetimeReport {
            per_node_energy: vec![0.0; net.n()],
            lifetime: f64::INFINITY,
            bottleneck: 0,
        },
        Err(e) => return Err(CliError::config(e)),
    };
    let report = ValidationDoc::new(&flow, net.volumes(), &life);
    Ok(Outcome::ok(render(&report, cli.format, || report.to_csv())))
}

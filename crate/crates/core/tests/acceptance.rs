//! Acceptance suite. Each test prints one `[PASS]` or `[FAIL]` line and then
//! asserts. Lines go straight to stdout so they show up without
//! `--nocapture`.

use std::io::Write;
use std::time::Instant;

use eqroute_core::perturbed::{
    closed_form_a1, numeric_d_interval, stability_bounds_d, PerturbedNetwork,
};
use eqroute_core::validation::{check_conservation, check_no_loop, lifetime};
use eqroute_core::{
    CostSeries, CostTerm, EqualEnergySolution, FlowMatrix, LpInstance, Network, RegularNetwork,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAP_TOL: f64 = 1e-7;

fn report(id: &str, what: &str, pass: bool, detail: String) {
    let line = format!(
        "[{}] {id} {what}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "{id} {what}: {detail}");
}

fn power(a: f64) -> CostSeries {
    CostSeries::power(a).unwrap()
}

fn random_series(rng: &mut impl Rng, terms: usize) -> CostSeries {
    let t: Vec<CostTerm> = (0..terms)
        .map(|_| CostTerm::new(rng.gen_range(0.05..1.0), rng.gen_range(1.0..4.0)))
        .collect();
    CostSeries::new(t, true).unwrap()
}

/// `Q_i = 1 + s w_i` with `s < N/2` and random weights summing to 1, so
/// `Q_i ≥ 1` and `Σ Q_i < 3N/2`.
fn random_region_volumes(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let s = rng.gen_range(0.0..0.5 * n as f64 * (1.0 - 1e-9));
    let w: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| 1.0 + s * x / total).collect()
}

fn lp_optimum<N: Network>(net: &N) -> f64 {
    LpInstance::formulate(net).solve().unwrap().objective
}

// Instance generators, shared with the energy-bound criterion.

fn c1_instances() -> Vec<RegularNetwork> {
    let mut v = Vec::new();
    for n in 2..=8 {
        for a in [1.0, 1.5, 2.0, 3.0] {
            v.push(RegularNetwork::new(vec![1.0; n], power(a)).unwrap());
        }
    }
    v
}

fn c2_instances() -> Vec<RegularNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut v = Vec::new();
    for n in 3..=6 {
        for _ in 0..200 {
            let s = random_series(&mut rng, 3);
            let q = random_region_volumes(&mut rng, n);
            v.push(RegularNetwork::new(q, s).unwrap());
        }
    }
    v
}

fn c3_instances() -> Vec<RegularNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..1000)
        .map(|_| {
            let n = rng.gen_range(1..=30);
            let terms = rng.gen_range(1..=3);
            let s = random_series(&mut rng, terms);
            let q = (0..n).map(|_| rng.gen_range(0.01..10.0)).collect();
            RegularNetwork::new(q, s).unwrap()
        })
        .collect()
}

fn c4_instance() -> RegularNetwork {
    RegularNetwork::new(vec![1.0; 50], power(2.0)).unwrap()
}

/// Unit-volume chains with one volume moved onto its boundary.
fn c5_instances() -> Vec<(RegularNetwork, usize, f64, f64)> {
    let mut v = Vec::new();
    for n in 2..=6 {
        for a in [1.0, 2.0] {
            let base = RegularNetwork::new(vec![1.0; n], power(a)).unwrap();
            // (network at boundary, varied node, boundary value, outward factor)
            let m = base.q_n_min().unwrap();
            v.push((base.with_volume(n, m).unwrap(), n, m, 1.0 - 1e-6));
            for i in 1..n {
                let qmax = base.q_i_max(i).unwrap();
                v.push((base.with_volume(i, qmax).unwrap(), i, qmax, 1.0 + 1e-6));
            }
        }
    }
    v
}

fn c8_templates() -> Vec<(PerturbedNetwork, f64)> {
    let mut v = Vec::new();
    for n in 3..=8 {
        for a in [1.0, 1.1, 2.0, 3.0] {
            v.push((
                PerturbedNetwork::unshifted(vec![1.0; n], power(a)).unwrap(),
                a,
            ));
        }
    }
    v
}

fn c9_instances() -> Vec<PerturbedNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut v = Vec::new();
    while v.len() < 100 {
        let n = rng.gen_range(2..=10);
        let i = rng.gen_range(1..=n);
        let terms = rng.gen_range(1..=3);
        let s = random_series(&mut rng, terms);
        let mut shifts = vec![0.0; n];
        shifts[i - 1] = rng.gen_range(-0.9..0.9);
        let q = if n >= 3 {
            random_region_volumes(&mut rng, n)
        } else {
            vec![1.0; n]
        };
        let net = PerturbedNetwork::new(shifts, q, s).unwrap();
        if net.solve_equal_energy().is_ok() {
            v.push(net);
        }
    }
    v
}

fn c10_instances() -> Vec<PerturbedNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut v = Vec::new();
    while v.len() < 100 {
        let n = rng.gen_range(2..=10);
        let i = rng.gen_range(1..=n);
        let (lo, hi) = stability_bounds_d(n, i).unwrap();
        let mut shifts = vec![0.0; n];
        shifts[i - 1] = rng.gen_range(0.9 * lo..0.9 * hi);
        let q = if n >= 3 {
            random_region_volumes(&mut rng, n)
        } else {
            vec![1.0; n]
        };
        let net = PerturbedNetwork::new(shifts, q, power(1.0)).unwrap();
        if net.solve_equal_energy().is_ok() {
            v.push(net);
        }
    }
    v
}

fn c12_instances() -> Vec<RegularNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut v = Vec::new();
    for n in 2..=5 {
        for a in [1.0, 2.0, 3.0] {
            v.push(RegularNetwork::new(vec![1.0; n], power(a)).unwrap());
        }
        if n >= 3 {
            let s = random_series(&mut rng, 3);
            v.push(RegularNetwork::new(random_region_volumes(&mut rng, n), s).unwrap());
        }
    }
    v
}

#[test]
fn c01_oracle_equivalence_regular() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for net in c1_instances() {
        let cf = net.flow_closed_form().unwrap();
        worst = worst.max((cf.objective() - lp_optimum(&net)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "C1",
        "closed form vs LP, N 2..8, a in {1, 1.5, 2, 3}, Q = 1",
        worst <= GAP_TOL && secs < 10.0,
        format!("worst |gap| {worst:.3e}, {secs:.2} s"),
    );
}

#[test]
fn c02_oracle_equivalence_volume_region() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut count = 0;
    for net in c2_instances() {
        assert!(net.stability_region_q_check().unwrap());
        let gap = match net.flow_closed_form() {
            Ok(cf) => (cf.objective() - lp_optimum(&net)).abs(),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(gap);
        count += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "C2",
        "closed form vs LP on random volume-region instances",
        worst <= GAP_TOL && secs < 60.0,
        format!("{count} instances, worst |gap| {worst:.3e}, {secs:.2} s"),
    );
}

#[test]
fn c03_recurrence_matches_closed_form() {
    let mut worst = 0.0f64;
    for net in c3_instances() {
        let a = net.node_energy_recurrence();
        let b = net.node_energy_closed_form();
        worst = worst.max((a - b).abs() / b.abs());
    }
    report(
        "C3",
        "recurrence vs closed-form energy, 1000 instances, N <= 30",
        worst <= 1e-12,
        format!("worst relative difference {worst:.3e}"),
    );
}

#[test]
fn c04_harmonic_special_case() {
    let cf = c4_instance().flow_closed_form().unwrap();
    let mut worst = 0.0f64;
    let mut h = 1.0;
    for i in 2..=50 {
        h += 1.0 / i as f64;
        let fi = i as f64;
        let want = (fi - h) / (fi * (fi - 1.0));
        worst = worst.max((cf.flow.get(i, 0) - want).abs());
    }
    report(
        "C4",
        "a = 2, Q = 1, N = 50 direct flows vs harmonic numbers",
        worst <= 1e-12,
        format!("worst difference {worst:.3e}"),
    );
}

#[test]
fn c05_volume_boundaries() {
    let mut worst_zero = 0.0f64;
    let mut all_negative_beyond = true;
    let mut cases = 0;
    for (net, i, value, factor) in c5_instances() {
        let n = net.n();
        let at = net.closed_form_flows();
        // q_{N,N-1} for the Q_N boundary, q_{i+1,i} for the Q_i boundary
        let watched = if i == n { at.relay[n - 1] } else { at.relay[i] };
        worst_zero = worst_zero.max(watched.abs());
        let beyond = net
            .with_volume(i, value * factor)
            .unwrap()
            .closed_form_flows();
        all_negative_beyond &= beyond.most_negative(0.0).is_some();
        cases += 1;
    }
    report(
        "C5",
        "Q_N^min and Q_i^max boundaries, N 2..6, a in {1, 2}",
        worst_zero <= 1e-10 && all_negative_beyond,
        format!(
            "{cases} boundaries, worst |flow| at boundary {worst_zero:.3e}, \
             negative one step beyond: {all_negative_beyond}"
        ),
    );
}

#[test]
fn c06_published_stability_intervals() {
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, want) in [(1.0, 0.245), (1.1, 0.21), (2.0, 0.10)] {
        let net = PerturbedNetwork::unshifted(vec![1.0; 3], power(a)).unwrap();
        let hi = numeric_d_interval(&net, 1).unwrap().hi;
        let hit = (hi - want).abs() <= 0.005;
        ok &= hit;
        parts.push(format!(
            "a={a}: {hi:.5} vs {want} {}",
            if hit { "ok" } else { "off" }
        ));
    }
    report("C6", "N = 3, node 1 right endpoints", ok, parts.join("; "));
}

#[test]
fn c07_exact_envelope_values() {
    let (_, r) = stability_bounds_d(2, 1).unwrap();
    let mut ok = (r - 1.0 / 3.0).abs() <= 1e-12;
    for n in 2..=10 {
        ok &= stability_bounds_d(n, n).unwrap() == (-1.0, 1.0);
    }
    report(
        "C7",
        "N = 2 right bound 1/3, last node (-1, 1) for N 2..10",
        ok,
        format!("d_1^R(N=2) = {r:.15}"),
    );
}

#[test]
fn c08_envelope_containment() {
    let mut contained = true;
    let mut worst_eq = 0.0f64;
    let mut failures = Vec::new();
    for (net, a) in c8_templates() {
        let n = net.n();
        for i in 1..=n {
            let (lo, hi) = stability_bounds_d(n, i).unwrap();
            let num = numeric_d_interval(&net, i).unwrap();
            let inside = num.lo >= lo - 1e-9 && num.hi <= hi + 1e-9;
            if !inside {
                failures.push(format!("N={n} i={i} a={a}"));
            }
            contained &= inside;
            if a == 1.0 {
                worst_eq = worst_eq.max((num.lo - lo).abs()).max((num.hi - hi).abs());
            }
        }
    }
    report(
        "C8",
        "numeric interval inside envelope, equality at a = 1",
        contained && worst_eq <= 1e-6,
        format!("worst a=1 endpoint difference {worst_eq:.3e}, outside: {failures:?}"),
    );
}

#[test]
fn c09_determinant_energy() {
    let mut worst = 0.0f64;
    for net in c9_instances() {
        let sys = net.solve_equal_energy().unwrap().common_energy;
        let det = net.node_energy_sn().unwrap();
        worst = worst.max((det - sys).abs() / sys.abs());
    }
    report(
        "C9",
        "determinant energy vs linear system, 100 single-shift instances",
        worst <= 1e-8,
        format!("worst relative difference {worst:.3e}"),
    );
}

#[test]
fn c10_linear_closed_form() {
    let mut worst_flow = 0.0f64;
    let mut worst_rows = 0.0f64;
    for net in c10_instances() {
        let n = net.n();
        let pos = net.positions();
        let x = pos.as_slice();
        let sys = net.solve_equal_energy().unwrap();
        let cf = closed_form_a1(&pos, net.volumes()).unwrap();
        for (a, b) in cf.flow.entries().zip(sys.flow.entries()) {
            worst_flow = worst_flow.max((a.2 - b.2).abs());
        }
        let q = |i, j| cf.flow.get(i, j);
        let vol = net.volumes();
        let mut rows = vec![x[1] * q(1, 0) - x[2] * q(2, 0) - (x[2] - x[1]) * q(2, 1)];
        rows.push(q(1, 0) - vol[0] - q(2, 1));
        for i in 2..n {
            rows.push(
                x[i] * q(i, 0) + (x[i] - x[i - 1]) * q(i, i - 1)
                    - x[i + 1] * q(i + 1, 0)
                    - (x[i + 1] - x[i]) * q(i + 1, i),
            );
            rows.push(q(i, 0) + q(i, i - 1) - vol[i - 1] - q(i + 1, i));
        }
        let delivered: f64 = (1..=n).map(|i| x[i] * vol[i - 1]).sum();
        rows.push(cf.node_energies.iter().sum::<f64>() - delivered);
        worst_rows = rows.iter().fold(worst_rows, |w, r| w.max(r.abs()));
    }
    report(
        "C10",
        "linear-cost closed form vs linear system, 100 instances",
        worst_flow <= 1e-10 && worst_rows <= 1e-10,
        format!(
            "worst flow difference {worst_flow:.3e}, worst constraint residual {worst_rows:.3e}"
        ),
    );
}

fn within(e: f64, (lo, hi): (f64, f64)) -> bool {
    e >= lo - 1e-12 * lo.abs().max(1.0) && e < hi
}

#[test]
fn c11_energy_bounds() {
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut regular = |net: &RegularNetwork, sol: &EqualEnergySolution, tag: &str| {
        checked += 1;
        if !within(sol.common_energy, net.energy_bounds_regular()) {
            failures.push(format!("{tag} N={}", net.n()));
        }
    };
    for (tag, nets) in [
        ("C1", c1_instances()),
        ("C2", c2_instances()),
        ("C3", c3_instances()),
        ("C4", vec![c4_instance()]),
        ("C12", c12_instances()),
    ] {
        for net in nets.iter().filter(|n| n.n() >= 2) {
            // C3 volumes are unconstrained; only equal-energy solutions count.
            if let Ok(sol) = net.flow_closed_form() {
                regular(net, &sol, tag);
            }
        }
    }
    for (net, ..) in c5_instances() {
        let flows = net.closed_form_flows();
        let mut flow = flows.to_matrix();
        flow.clamp_small_negatives();
        let sol = EqualEnergySolution::from_flow(flow, &net.positions(), net.series()).unwrap();
        regular(&net, &sol, "C5");
    }
    let mut perturbed = Vec::new();
    perturbed.extend(c8_templates().into_iter().map(|t| t.0));
    for a in [1.0, 1.1, 2.0] {
        perturbed.push(PerturbedNetwork::unshifted(vec![1.0; 3], power(a)).unwrap());
    }
    perturbed.extend(c9_instances());
    perturbed.extend(c10_instances());
    for net in &perturbed {
        checked += 1;
        let sol = net.solve_equal_energy().unwrap();
        if !within(sol.common_energy, net.energy_bounds_perturbed()) {
            failures.push(format!("perturbed N={} d={:?}", net.n(), net.shifts()));
        }
    }
    report(
        "C11",
        "common energy inside its bounds for every generated instance",
        failures.is_empty(),
        format!("{checked} solutions, outside: {failures:?}"),
    );
}

/// Random feasible flow on the leftward DAG: every node splits what it holds
/// among the collector and the nodes to its left.
fn random_dag_flow(rng: &mut impl Rng, volumes: &[f64]) -> FlowMatrix {
    let n = volumes.len();
    let mut held = volumes.to_vec();
    let mut f = FlowMatrix::new(n);
    for i in (1..=n).rev() {
        let w: Vec<f64> = (0..i).map(|_| rng.gen::<f64>().powi(3)).collect();
        let total: f64 = w.iter().sum();
        for (j, wj) in w.iter().enumerate() {
            let amount = held[i - 1] * wj / total;
            f.set(i, j, amount);
            if j > 0 {
                held[j - 1] += amount;
            }
        }
    }
    f
}

#[test]
fn c12_lifetime_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(1212);
    let mut worst_margin = f64::INFINITY;
    let mut flows = 0;
    for net in c12_instances() {
        let pos = net.positions();
        let uniform = vec![1.0; net.n()];
        let best = net.flow_closed_form().unwrap();
        assert!(check_no_loop(&best.flow));
        let t_best = lifetime(&best.flow, &pos, net.series(), &uniform)
            .unwrap()
            .lifetime;
        for _ in 0..1000 {
            let f = random_dag_flow(&mut rng, net.volumes());
            assert!(check_conservation(&f, net.volumes()).pass);
            let t = lifetime(&f, &pos, net.series(), &uniform).unwrap().lifetime;
            worst_margin = worst_margin.min((t_best - t) / t_best);
            flows += 1;
        }
    }
    report(
        "C12",
        "equal-energy lifetime >= random feasible flows, N <= 5",
        worst_margin >= -1e-12,
        format!("{flows} random flows, smallest relative margin {worst_margin:.3e}"),
    );
}

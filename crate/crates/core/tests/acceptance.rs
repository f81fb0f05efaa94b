//! Acceptance gate. Every test prints a `criterion N: PASS|FAIL ...` line
//! (run with `--nocapture` to see them) and fails when its criterion fails.

use std::sync::OnceLock;
use std::time::Instant;

use antwsn::harness::{run_experiment, write_csv, ExperimentPlan, ExperimentResult, RunRecord};
use antwsn::kernel::{RandomStream, StreamId};
use antwsn::protocols::rules::{
    babr_reinforce, eeabr_delta_tau, eeabr_select_next, ieeabr_initial, ieeabr_link_failure, ieeabr_p_dd, ieeabr_p_dm,
    sc_initial, visibility,
};
use antwsn::protocols::{DropCause, ProtocolRegistry};
use antwsn::routing::{uniform_column, Ant, AntId, AntKind};
use antwsn::scenario::{ScenarioKind, Topology};
use antwsn::sim::AntStep;
use antwsn::{NodeId, Point, SimConfig, Simulation};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, RngAlgorithm, TestRng, TestRunner};

fn report(id: &str, ok: bool, detail: String) {
    println!("criterion {id}: {} {detail}", if ok { "PASS" } else { "FAIL" });
}

fn column_sum_ok(col: &[f64]) -> bool {
    (col.iter().sum::<f64>() - 1.0).abs() <= 1e-9 && col.iter().all(|p| (-1e-12..=1.0 + 1e-12).contains(p))
}

fn runner() -> TestRunner {
    let config = PtConfig {
        cases: 10_000,
        failure_persistence: None,
        ..PtConfig::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Neighbor count, then a sequence of (chosen neighbor, reinforcement) pairs.
fn reinforce_sequences() -> impl Strategy<Value = (usize, Vec<(usize, f64)>)> {
    (1usize..12).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0.0f64..=1.0), 1..60)))
}

#[test]
fn criterion_1_normalization() {
    let start = Instant::now();
    let mut failures = Vec::new();

    let r = runner().run(&reinforce_sequences(), |(n, updates)| {
        let mut col = uniform_column(n);
        for (f, r) in updates {
            babr_reinforce(&mut col, f, r).unwrap();
            prop_assert!(column_sum_ok(&col), "{col:?}");
        }
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("babr: {e}"));
    }

    let sc_inputs = (1usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(0.0f64..100.0, n),
            0.1f64..5.0,
            prop::collection::vec((0..n, 0.0f64..=1.0), 0..30),
        )
    });
    let r = runner().run(&sc_inputs, |(q, c, beta, updates)| {
        let mut col = sc_initial(&q, &c, beta).unwrap();
        prop_assert!(column_sum_ok(&col), "initial {col:?}");
        for (f, r) in updates {
            babr_reinforce(&mut col, f, r).unwrap();
            prop_assert!(column_sum_ok(&col), "{col:?}");
        }
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("sc: {e}"));
    }

    // Initial column, then link failures interleaved with reinforcements.
    let ieeabr_inputs = (2usize..12).prop_flat_map(|n| {
        (
            Just(n),
            prop::option::of(0..n),
            prop::collection::vec((any::<bool>(), any::<prop::sample::Index>(), 0.0f64..=1.0), 0..30),
        )
    });
    let r = runner().run(&ieeabr_inputs, |(n, dest, ops)| {
        let mut col = ieeabr_initial(n, dest).unwrap();
        prop_assert!(column_sum_ok(&col), "initial {col:?}");
        for (fail, idx, r) in ops {
            let live: Vec<usize> = (0..col.len()).filter(|&i| col[i] > 0.0).collect();
            let i = live[idx.index(live.len())];
            if fail && live.len() > 1 {
                ieeabr_link_failure(&mut col, i).unwrap();
                prop_assert_eq!(col[i], 0.0);
            } else {
                babr_reinforce(&mut col, i, r).unwrap();
            }
            prop_assert!(column_sum_ok(&col), "{col:?}");
        }
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("ieeabr: {e}"));
    }

    let secs = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs < 10.0;
    report("1", ok, format!("3 families x 10^4 sequences in {secs:.2} s {failures:?}"));
    assert!(ok);
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn to_f64(r: &BigRational) -> f64 {
    let n: f64 = r.numer().to_string().parse().unwrap();
    let d: f64 = r.denom().to_string().parse().unwrap();
    n / d
}

#[test]
fn criterion_2_closed_forms() {
    let mut problems = Vec::new();
    for n in 1..=50i64 {
        if rat(9 * n - 5) + rat(n - 1) * rat(4 * n - 5) != rat(4 * n * n) {
            problems.push(format!("identity fails at N={n}"));
        }
        let dd = BigRational::new(BigInt::from(9 * n - 5), BigInt::from(4 * n * n));
        let dm = BigRational::new(BigInt::from(4 * n - 5), BigInt::from(4 * n * n));
        if n > 1 && dd.clone() + rat(n - 1) * dm.clone() != rat(1) {
            problems.push(format!("column sum fails at N={n}"));
        }
        let un = n as usize;
        if (ieeabr_p_dd(un) - to_f64(&dd)).abs() > 1e-15 {
            problems.push(format!("p_dd({n}) drifts"));
        }
        if n > 1 && (ieeabr_p_dm(un) - to_f64(&dm)).abs() > 1e-15 {
            problems.push(format!("p_dm({n}) drifts"));
        }
    }

    let mut rng = RandomStream::new(2, StreamId::Topology);
    for _ in 0..1000 {
        let len = rng.int_inclusive(2, 12) as usize;
        let raw: Vec<i64> = (0..len).map(|_| rng.int_inclusive(1, 1000) as i64).collect();
        let total: i64 = raw.iter().sum();
        let col: Vec<BigRational> = raw.iter().map(|&v| BigRational::new(BigInt::from(v), BigInt::from(total))).collect();
        let m = rng.int_inclusive(0, len as u64 - 1) as usize;

        let z = col[m].clone() / (rat(1) - col[m].clone());
        let exact: Vec<BigRational> = col
            .iter()
            .enumerate()
            .map(|(i, p)| if i == m { rat(0) } else { p.clone() * (rat(1) + z.clone()) })
            .collect();
        let sum = exact.iter().fold(rat(0), |a, b| a + b);
        if sum != rat(1) {
            problems.push(format!("rational redistribution sums to {sum}"));
            break;
        }

        let mut float: Vec<f64> = raw.iter().map(|&v| v as f64 / total as f64).collect();
        ieeabr_link_failure(&mut float, m).unwrap();
        if exact.iter().zip(&float).any(|(e, f)| (to_f64(e) - f).abs() > 1e-12) {
            problems.push("f64 redistribution disagrees with rational".into());
            break;
        }
    }
    let ok = problems.is_empty();
    report("2", ok, format!("N in 1..=50, 10^3 rational columns {problems:?}"));
    assert!(ok);
}

#[test]
fn criterion_3_selection_oracle() {
    // Node 0 with neighbors 1, 2, 3; every route is a single hop from 0.
    let c = 30.0;
    let tau = [0.5, 0.3, 0.2];
    let residual = [12.0, 27.0, 20.0];
    let vis: Vec<f64> = residual.iter().map(|&e| visibility(c, e, 0.001)).collect();
    let (alpha, beta) = (1.0, 1.0);

    let weights: Vec<f64> = tau.iter().zip(residual).map(|(t, e)| t / (c - e)).collect();
    let z: f64 = weights.iter().sum();
    let oracle: Vec<f64> = weights.iter().map(|w| w / z).collect();

    let draws = 100_000;
    let mut rng = RandomStream::new(3, StreamId::Protocol);
    let mut counts = [0u32; 3];
    for _ in 0..draws {
        counts[eeabr_select_next(&mut rng, &tau, &vis, &[false; 3], alpha, beta).unwrap()] += 1;
    }
    let tv: f64 = 0.5
        * counts
            .iter()
            .zip(&oracle)
            .map(|(&k, p)| (f64::from(k) / draws as f64 - p).abs())
            .sum::<f64>();

    // An excluded neighbor is never chosen.
    let mut excluded_hit = false;
    for _ in 0..1000 {
        excluded_hit |= eeabr_select_next(&mut rng, &tau, &vis, &[false, true, false], alpha, beta) == Some(1);
    }

    let (e_min, e_av) = (10.0, 20.0);
    let grid: Vec<f64> = (0..20).map(|i| f64::from(i) * 0.5).collect();
    let dtau: Vec<f64> = grid.iter().map(|&n| eeabr_delta_tau(c, e_min, e_av, n, f64::INFINITY)).collect();
    let monotone = dtau.windows(2).all(|w| w[1] < w[0]);

    let ok = tv < 0.01 && !excluded_hit && monotone;
    report(
        "3",
        ok,
        format!("TV={tv:.4} over {draws} draws, delta_tau strictly decreasing={monotone}, excluded chosen={excluded_hit}"),
    );
    assert!(ok);
}

#[test]
fn criterion_4_congestion_cap() {
    let start = Instant::now();
    let reg = ProtocolRegistry::with_builtins();
    let config = SimConfig {
        protocol: "IEEABR".into(),
        nodes: 49,
        ..SimConfig::default()
    };
    let cap = 5 * config.nodes;
    let mut sim = Simulation::new(config.clone(), &reg).unwrap();
    sim.enable_live_trace();
    sim.run_until(config.duration).unwrap();
    let trace = sim.live_trace().unwrap().to_vec();
    let report_ = sim.finish();
    let max = trace.iter().map(|&(_, n)| n).max().unwrap_or(0);
    let over = trace.iter().filter(|&&(_, n)| n > cap).count();
    let secs = start.elapsed().as_secs_f64();
    let ok = over == 0 && !trace.is_empty() && report_.max_live_forward_ants <= cap && secs < 60.0;
    report(
        "4",
        ok,
        format!("max live forward ants {max} <= {cap} over {} samples, {secs:.2} s", trace.len()),
    );
    assert!(ok);
}

/// Four nodes on the corners of a 30 m square, plus a sink out of range.
fn ring() -> Topology {
    let positions = vec![
        Point::new(0.0, 0.0),
        Point::new(30.0, 0.0),
        Point::new(30.0, 30.0),
        Point::new(0.0, 30.0),
        Point::new(190.0, 190.0),
    ];
    Topology::from_positions(positions, 200.0, NodeId(4), 35.0).unwrap()
}

#[test]
fn criterion_5_loop_destruction() {
    let reg = ProtocolRegistry::with_builtins();
    let probe = AntId {
        source: NodeId(0),
        seq: 1_000_000,
    };
    let mut destroyed = 0;
    let mut notes = Vec::new();
    for seed in 0..100u64 {
        let topology = ring();
        assert_eq!(topology.neighbors(NodeId(0)).len(), 2);
        let mut config = SimConfig {
            protocol: "IEEABR".into(),
            nodes: 5,
            duration: 10.0,
            traffic_rate: 0.001,
            seed,
            ..SimConfig::default()
        };
        config.routing.ant_interval = 1000.0;
        let mut sim = Simulation::with_topology(config, &reg, topology).unwrap();
        sim.enable_ant_trace();
        // A one-entry memory only stops immediate backtracking, so the ant circles the ring.
        let ant = Ant::new(probe, AntKind::Forward, NodeId(4), Some(1), 0.0);
        let from = if seed % 2 == 0 { NodeId(3) } else { NodeId(1) };
        sim.inject_ant(NodeId(0), from, ant).unwrap();
        sim.run_until(10.0).unwrap();
        let steps: Vec<AntStep> = sim
            .ant_trace()
            .unwrap()
            .iter()
            .filter(|e| e.ant == probe)
            .map(|e| e.step)
            .collect();
        let hops = steps.iter().filter(|s| matches!(s, AntStep::Received { .. })).count() - 1;
        match steps.last() {
            Some(AntStep::Dropped(DropCause::Loop)) if hops <= 4 => destroyed += 1,
            other => notes.push(format!("seed {seed}: {other:?} after {hops} hops")),
        }
    }
    let ok = destroyed == 100;
    report("5", ok, format!("{destroyed}/100 looping ants destroyed within one lap {notes:?}"));
    assert!(ok);
}

struct Gate {
    static49: ExperimentResult,
    static100: ExperimentResult,
    dynamic49: ExperimentResult,
    secs: f64,
}

fn plan(protocols: &[&str], nodes: usize, scenario: ScenarioKind) -> ExperimentPlan {
    ExperimentPlan {
        protocols: protocols.iter().map(|s| s.to_string()).collect(),
        node_counts: vec![nodes],
        scenarios: vec![scenario],
        replicates: 10,
        seed: 1,
        ..ExperimentPlan::default()
    }
}

fn gate() -> &'static Gate {
    static GATE: OnceLock<Gate> = OnceLock::new();
    GATE.get_or_init(|| {
        let reg = ProtocolRegistry::with_builtins();
        let start = Instant::now();
        let all = ["BABR", "SC", "FF", "FP", "EEABR", "IEEABR"];
        let static49 = run_experiment(&plan(&all, 49, ScenarioKind::Static), &reg);
        let static100 = run_experiment(&plan(&["FP", "IEEABR"], 100, ScenarioKind::Static), &reg);
        let dynamic49 = run_experiment(&plan(&["EEABR", "IEEABR"], 49, ScenarioKind::Dynamic), &reg);
        for r in [&static49, &static100, &dynamic49] {
            assert!(r.failures.is_empty(), "{:?}", r.failures);
        }
        Gate {
            static49,
            static100,
            dynamic49,
            secs: start.elapsed().as_secs_f64(),
        }
    })
}

fn mean(result: &ExperimentResult, protocol: &str, f: impl Fn(&RunRecord) -> Option<f64>) -> f64 {
    let values: Vec<f64> = result.runs.iter().filter(|r| r.cell.protocol == protocol).filter_map(f).collect();
    assert_eq!(values.len(), 10, "{protocol}");
    values.iter().sum::<f64>() / values.len() as f64
}

fn energy(r: &RunRecord) -> Option<f64> {
    Some(r.summary.energy_j)
}

fn success(r: &RunRecord) -> Option<f64> {
    Some(r.summary.success_rate_pct)
}

fn efficiency(r: &RunRecord) -> Option<f64> {
    Some(r.summary.efficiency_kbit_per_j)
}

/// Mean latency over the replicates that delivered something.
fn mean_latency(result: &ExperimentResult, protocol: &str) -> f64 {
    let values: Vec<f64> = result
        .runs
        .iter()
        .filter(|r| r.cell.protocol == protocol)
        .filter_map(|r| r.summary.latency_s)
        .collect();
    assert!(!values.is_empty(), "{protocol} never delivered");
    values.iter().sum::<f64>() / values.len() as f64
}

#[test]
fn criterion_6a_eeabr_energy_above_ieeabr() {
    let g = gate();
    let (e, i) = (mean(&g.static49, "EEABR", energy), mean(&g.static49, "IEEABR", energy));
    let ok = e >= 1.10 * i;
    report("6a", ok, format!("EEABR {e:.3} J vs IEEABR {i:.3} J, ratio {:.3} (need >= 1.10)", e / i));
    assert!(ok);
}

#[test]
fn criterion_6b_fp_best_success() {
    let g = gate();
    let fp = mean(&g.static49, "FP", success);
    let others: Vec<(&str, f64)> = ["BABR", "SC", "FF", "EEABR", "IEEABR"]
        .into_iter()
        .map(|p| (p, mean(&g.static49, p, success)))
        .collect();
    let ok = others.iter().all(|&(_, s)| fp >= s);
    report("6b", ok, format!("FP {fp:.2}% vs {others:.2?}"));
    assert!(ok);
}

#[test]
fn criterion_6c_fp_energy_at_100_nodes() {
    let g = gate();
    let (f, i) = (mean(&g.static100, "FP", energy), mean(&g.static100, "IEEABR", energy));
    let ok = f >= 5.0 * i;
    report("6c", ok, format!("FP {f:.3} J vs IEEABR {i:.3} J, ratio {:.3} (need >= 5)", f / i));
    assert!(ok);
}

#[test]
fn criterion_6d_babr_latency_not_below_ieeabr() {
    let g = gate();
    let (b, i) = (mean_latency(&g.static49, "BABR"), mean_latency(&g.static49, "IEEABR"));
    let ok = b >= i;
    report("6d", ok, format!("BABR {b:.3} s vs IEEABR {i:.3} s"));
    assert!(ok);
}

#[test]
fn criterion_6_runtime() {
    let g = gate();
    let ok = g.secs < 15.0 * 60.0;
    report("6/7 runtime", ok, format!("{:.1} s for the full gate", g.secs));
    assert!(ok);
}

#[test]
fn criterion_7_dynamic() {
    let g = gate();
    let (ee, ie) = (mean(&g.dynamic49, "EEABR", energy), mean(&g.dynamic49, "IEEABR", energy));
    let (eff_ee, eff_ie) = (mean(&g.dynamic49, "EEABR", efficiency), mean(&g.dynamic49, "IEEABR", efficiency));
    let ok = ie <= 0.95 * ee && eff_ie > eff_ee;
    report(
        "7",
        ok,
        format!(
            "energy IEEABR {ie:.3} J vs EEABR {ee:.3} J (ratio {:.3}, need <= 0.95); efficiency {eff_ie:.3} vs {eff_ee:.3} kbit/J",
            ie / ee
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_determinism() {
    let reg = ProtocolRegistry::with_builtins();
    let mut p = ExperimentPlan {
        protocols: vec!["FF".into(), "EEABR".into(), "IEEABR".into()],
        node_counts: vec![9, 16],
        scenarios: vec![ScenarioKind::Static, ScenarioKind::Dynamic],
        replicates: 3,
        seed: 8,
        ..ExperimentPlan::default()
    };
    p.base.duration = 30.0;
    let dir = tempfile::tempdir().unwrap();
    let csv = |plan: &ExperimentPlan, name: &str| {
        let path = dir.path().join(name);
        write_csv(&run_experiment(plan, &reg).rows(), &path).unwrap();
        std::fs::read(path).unwrap()
    };
    p.parallel = true;
    let first = csv(&p, "a.csv");
    let second = csv(&p, "b.csv");
    p.parallel = false;
    let serial = csv(&p, "c.csv");
    let ok = first == second && first == serial && !first.is_empty();
    report(
        "8",
        ok,
        format!("{} CSV bytes, repeat identical={}, serial identical={}", first.len(), first == second, first == serial),
    );
    assert!(ok);
}

#[test]
fn criterion_9_energy_conservation() {
    let g = gate();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for r in [&g.static49, &g.static100, &g.dynamic49].iter().flat_map(|e| &e.runs) {
        let m = &r.metrics;
        let rel = (m.energy_total - m.energy_by_category).abs() / m.energy_total.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        count += 1;
    }
    let ok = worst <= 1e-9 && count > 0;
    report("9", ok, format!("{count} runs, worst relative gap {worst:.3e}"));
    assert!(ok);
}

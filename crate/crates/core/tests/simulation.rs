use antwsn::protocols::{ProtocolRegistry, BUILTIN_PROTOCOLS};
use antwsn::scenario::{Layout, ScenarioKind, Topology};
use antwsn::{run_config, NodeId, Point, SimConfig, Simulation};

fn grid(protocol: &str, nodes: usize) -> SimConfig {
    SimConfig {
        protocol: protocol.into(),
        nodes,
        layout: Layout::Grid,
        duration: 30.0,
        ..SimConfig::default()
    }
}

#[test]
fn disconnected_sink_receives_nothing() {
    let reg = ProtocolRegistry::with_builtins();
    let positions = vec![
        Point::new(0.0, 0.0),
        Point::new(20.0, 0.0),
        Point::new(0.0, 20.0),
        Point::new(150.0, 150.0),
    ];
    for name in BUILTIN_PROTOCOLS {
        let topology = Topology::from_positions(positions.clone(), 160.0, NodeId(3), 35.0).unwrap();
        let config = grid(name, 4);
        let r = Simulation::with_topology(config, &reg, topology).unwrap().run().unwrap();
        assert!(r.metrics.generated > 0, "{name}");
        assert_eq!(r.metrics.delivered, 0, "{name}");
        assert_eq!(r.metrics.summary().latency_s, None);
    }
}

#[test]
fn two_node_line_delivers_most_events() {
    // One hop to the sink, nothing else on the air but ants.
    let reg = ProtocolRegistry::with_builtins();
    let positions = vec![Point::new(0.0, 0.0), Point::new(20.0, 0.0)];
    for name in ["FF", "FP", "IEEABR"] {
        let topology = Topology::from_positions(positions.clone(), 20.0, NodeId(0), 35.0).unwrap();
        let config = SimConfig {
            traffic_rate: 0.5,
            layout: Layout::RandomSquare,
            ..grid(name, 2)
        };
        let r = Simulation::with_topology(config, &reg, topology).unwrap().run().unwrap();
        let s = r.metrics.summary();
        assert!(s.success_rate_pct > 80.0, "{name}: {s:?}");
        // 400 bits at 40 kbit/s is 10 ms of air time per hop.
        assert!(s.latency_s.unwrap() >= 0.01, "{name}");
    }
}

#[test]
fn runs_are_reproducible_and_seed_sensitive() {
    let reg = ProtocolRegistry::with_builtins();
    for name in BUILTIN_PROTOCOLS {
        let a = run_config(grid(name, 16), &reg).unwrap();
        let b = run_config(grid(name, 16), &reg).unwrap();
        assert_eq!(a.metrics, b.metrics, "{name}");
        assert_eq!(a.timeline, b.timeline, "{name}");
        let c = run_config(SimConfig { seed: 99, ..grid(name, 16) }, &reg).unwrap();
        assert_ne!(a.metrics, c.metrics, "{name}");
    }
}

#[test]
fn stepping_matches_a_single_run() {
    let reg = ProtocolRegistry::with_builtins();
    let config = grid("EEABR", 16);
    let whole = run_config(config.clone(), &reg).unwrap();
    let mut sim = Simulation::new(config, &reg).unwrap();
    for t in [3.0, 7.5, 12.0, 30.0] {
        sim.run_until(t).unwrap();
        assert_eq!(sim.now(), t);
    }
    let stepped = sim.finish();
    assert_eq!(whole.metrics, stepped.metrics);
    assert_eq!(whole.events, stepped.events);
}

#[test]
fn small_batteries_kill_nodes() {
    let reg = ProtocolRegistry::with_builtins();
    let mut config = grid("FF", 16);
    config.apply_str("initial_energy = 0.02").unwrap();
    let r = run_config(config, &reg).unwrap();
    assert!(r.alive_at_end < 16);
    for residual in &r.metrics.per_node_residual {
        assert!(*residual >= 0.0);
    }
    let m = &r.metrics;
    assert!((m.energy_total - m.energy_by_category).abs() <= 1e-9 * m.energy_total);
}

#[test]
fn timeline_is_monotone() {
    let reg = ProtocolRegistry::with_builtins();
    let r = run_config(grid("IEEABR", 25), &reg).unwrap();
    assert!(r.timeline.len() >= 30);
    for w in r.timeline.windows(2) {
        assert!(w[1].time > w[0].time);
        assert!(w[1].energy_j >= w[0].energy_j);
        assert!(w[1].generated >= w[0].generated);
        assert!(w[1].delivered >= w[0].delivered);
    }
}

#[test]
fn dynamic_scenario_uses_larger_battery_and_moves_sink() {
    let reg = ProtocolRegistry::with_builtins();
    let config = SimConfig {
        scenario: ScenarioKind::Dynamic,
        ..grid("IEEABR", 16)
    };
    assert_eq!(config.effective_energy(), 60.0);
    let mut sim = Simulation::new(config, &reg).unwrap();
    let sink = sim.topology().sink();
    let start = sim.topology().position(sink);
    sim.run_until(20.0).unwrap();
    assert_ne!(sim.topology().position(sink), start);
}

#[test]
fn ieeabr_tables_stay_stochastic() {
    let reg = ProtocolRegistry::with_builtins();
    for scenario in [ScenarioKind::Static, ScenarioKind::Dynamic] {
        let config = SimConfig {
            scenario,
            ..grid("IEEABR", 25)
        };
        let mut sim = Simulation::new(config, &reg).unwrap();
        sim.run_until(30.0).unwrap();
        for v in sim.topology().nodes() {
            let table = sim.table(v).unwrap();
            for d in table.destinations().collect::<Vec<_>>() {
                assert!(table.normalize_check(d), "node {v} dest {d}");
            }
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use antwsn::config::{ConfigError, SimConfig};
use antwsn::harness::{self, ExperimentPlan, ResultRow};
use antwsn::protocols::ProtocolRegistry;
use antwsn::scenario::{Layout, ScenarioKind};
use antwsn::{NodeId, SimError, Simulation};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "antwsn", version, about = "Ant-colony routing simulator for wireless sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario and print its metrics.
    Run {
        #[command(flatten)]
        run: RunArgs,
        /// Directory for results.csv, results.json and timeline plot data.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print MAC and ant counters.
        #[arg(long)]
        stats: bool,
    },
    /// Run every cell of a plan file.
    Sweep {
        /// Plan file (run keys plus protocols/nodes/scenarios/replicates/seed).
        #[arg(long)]
        plan: PathBuf,
        /// Override the plan's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run cells one after another instead of in parallel.
        #[arg(long)]
        serial: bool,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Print one node's routing table as CSV.
    DumpTable {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        node: u32,
        /// Simulated time at which to dump (default: end of run).
        #[arg(long)]
        at: Option<f64>,
    },
    /// Print every configuration key with its default value.
    Defaults,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (flat key = value).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    scenario: Option<ScenarioKind>,
    #[arg(long)]
    layout: Option<Layout>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn config(&self) -> Result<SimConfig, ConfigError> {
        let mut c = SimConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.display().to_string(),
                source,
            })?;
            c.apply_str(&text)?;
        }
        if let Some(p) = &self.protocol {
            c.protocol = p.to_ascii_uppercase();
        }
        if let Some(n) = self.nodes {
            c.nodes = n;
        }
        if let Some(s) = self.scenario {
            c.scenario = s;
        }
        if let Some(l) = self.layout {
            c.layout = l;
        }
        if let Some(d) = self.duration {
            c.duration = d;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        for kv in &self.set {
            c.apply_str(kv)?;
        }
        c.validate()?;
        if ProtocolRegistry::with_builtins().canonical(&c.protocol).is_none() {
            return Err(ConfigError::Invalid(format!("unknown protocol `{}`", c.protocol)));
        }
        Ok(c)
    }
}

/// Failure split by exit code.
enum Failure {
    Config(anyhow::Error),
    Simulation(anyhow::Error),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Protocol(_) => Failure::Config(e.into()),
            other => Failure::Simulation(other.into()),
        }
    }
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn sim_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Simulation(e.into())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

fn cmd_run(args: &RunArgs, out: Option<&Path>, stats: bool) -> Result<(), Failure> {
    let config = args.config().map_err(config_err)?;
    let registry = ProtocolRegistry::with_builtins();
    let protocol = config.protocol.clone();
    let report = Simulation::new(config.clone(), &registry)?.run()?;
    let s = report.metrics.summary();
    println!("protocol      {protocol}");
    println!("nodes         {} ({}, {})", config.nodes, config.layout, config.scenario);
    println!("generated     {}", report.metrics.generated);
    println!("delivered     {}", report.metrics.delivered);
    println!("latency_s     {}", fmt_opt(s.latency_s));
    println!("success_pct   {:.2}", s.success_rate_pct);
    println!("energy_J      {:.6}", s.energy_j);
    println!("efficiency    {:.4} kbit/J", s.efficiency_kbit_per_j);
    println!("alive_at_end  {}", report.alive_at_end);
    println!("max_live_ants {}", report.max_live_forward_ants);
    if stats {
        println!("mac           {:?}", report.mac);
        println!("ants          {:?}", report.ants);
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(sim_err)?;
        let row = ResultRow {
            run_id: format!("{protocol}-n{}-{}-seed{}", config.nodes, config.scenario, config.seed),
            protocol: protocol.clone(),
            nodes: config.nodes,
            scenario: config.scenario.to_string(),
            replicate: "0".into(),
            latency_s: s.latency_s,
            success_rate_pct: s.success_rate_pct,
            energy_j: s.energy_j,
            efficiency_kbit_per_j: s.efficiency_kbit_per_j,
        };
        harness::write_csv(std::slice::from_ref(&row), &dir.join("results.csv")).map_err(sim_err)?;
        harness::write_json(&[row], &dir.join("results.json")).map_err(sim_err)?;
        harness::write_timeline(&report.timeline, &protocol, &dir.join("plot")).map_err(sim_err)?;
    }
    Ok(())
}

fn cmd_sweep(plan_path: &Path, seed: Option<u64>, serial: bool, out: &Path) -> Result<(), Failure> {
    let mut plan = ExperimentPlan::from_file(plan_path).map_err(config_err)?;
    if let Some(s) = seed {
        plan.seed = s;
    }
    if serial {
        plan.parallel = false;
    }
    let registry = ProtocolRegistry::with_builtins();
    let result = harness::run_experiment(&plan, &registry);
    for f in &result.failures {
        eprintln!("failed: {}: {}", f.cell.run_id(), f.error);
    }
    if !result.runs.is_empty() {
        std::fs::create_dir_all(out)
            .with_context(|| format!("cannot create {}", out.display()))
            .map_err(sim_err)?;
        let rows = result.rows();
        harness::write_csv(&rows, &out.join("results.csv")).map_err(sim_err)?;
        harness::write_json(&rows, &out.join("results.json")).map_err(sim_err)?;
        harness::write_summary_csv(&result.summary(), &out.join("summary.csv")).map_err(sim_err)?;
        harness::write_plot_data(&rows, &out.join("plot")).map_err(sim_err)?;
        for s in result.summary() {
            println!(
                "{:<7} n={:<4} {:<8} latency={} success={:.2}% energy={:.4} J efficiency={:.4} kbit/J",
                s.protocol,
                s.nodes,
                s.scenario,
                fmt_opt(s.latency_s_mean),
                s.success_rate_pct_mean,
                s.energy_j_mean,
                s.efficiency_mean
            );
        }
        println!("wrote {}", out.display());
    }
    if !result.failures.is_empty() {
        return Err(sim_err(anyhow::anyhow!("{} cell(s) failed", result.failures.len())));
    }
    Ok(())
}

fn cmd_dump(args: &RunArgs, node: u32, at: Option<f64>) -> Result<(), Failure> {
    let config = args.config().map_err(config_err)?;
    if node as usize >= config.nodes {
        return Err(config_err(anyhow::anyhow!("node {node} out of range (0..{})", config.nodes)));
    }
    let registry = ProtocolRegistry::with_builtins();
    let t = at.unwrap_or(config.duration);
    let mut sim = Simulation::new(config, &registry)?;
    sim.run_until(t)?;
    let table = sim.table(NodeId(node)).expect("node in range");
    print!("{}", table.to_csv());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { run, out, stats } => cmd_run(run, out.as_deref(), *stats),
        Command::Sweep {
            plan,
            seed,
            serial,
            out,
        } => cmd_sweep(plan, *seed, *serial, out),
        Command::DumpTable { run, node, at } => cmd_dump(run, *node, *at),
        Command::Defaults => {
            print!("{}", SimConfig::default().render());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Simulation(e)) => {
            eprintln!("simulation failed: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{MetricSummary, RunMetrics};
use crate::config::{parse_pairs, ConfigError, SimConfig};
use crate::kernel::derive_seed;
use crate::protocols::{ProtocolRegistry, BUILTIN_PROTOCOLS};
use crate::scenario::ScenarioKind;
use crate::sim::Simulation;

/// Node counts used by the density sweeps.
pub const DENSITIES: [usize; 6] = [9, 16, 36, 49, 64, 100];

/// Protocols x node counts x scenarios x replicates, on top of a base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub protocols: Vec<String>,
    pub node_counts: Vec<usize>,
    pub scenarios: Vec<ScenarioKind>,
    pub replicates: u32,
    pub seed: u64,
    /// Settings shared by every cell; its nodes/protocol/scenario/seed are overridden.
    pub base: SimConfig,
    pub parallel: bool,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            protocols: BUILTIN_PROTOCOLS.iter().map(|s| s.to_string()).collect(),
            node_counts: vec![49],
            scenarios: vec![ScenarioKind::Static],
            replicates: 10,
            seed: 1,
            base: SimConfig::default(),
            parallel: true,
        }
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl ExperimentPlan {
    /// Parse a plan file. Besides any run-configuration key it accepts
    /// `protocols`, `nodes`, `scenarios` (comma lists), `replicates`,
    /// `seed` and `parallel`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut plan = Self::default();
        for (line, key, value) in parse_pairs(text)? {
            let bad = |reason: String| ConfigError::BadValue {
                key: key.clone(),
                value: value.clone(),
                reason,
            };
            match key.as_str() {
                "protocols" => plan.protocols = list(&value).map(str::to_ascii_uppercase).collect(),
                "nodes" => {
                    plan.node_counts = list(&value)
                        .map(|s| s.parse::<usize>().map_err(|e| bad(e.to_string())))
                        .collect::<Result<_, _>>()?
                }
                "scenarios" | "scenario" => {
                    plan.scenarios = list(&value)
                        .map(|s| s.parse::<ScenarioKind>().map_err(|e| bad(e.to_string())))
                        .collect::<Result<_, _>>()?
                }
                "replicates" => plan.replicates = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "seed" => plan.seed = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "parallel" => plan.parallel = value.parse().map_err(|e: std::str::ParseBoolError| bad(e.to_string()))?,
                _ => {
                    if !plan.base.set(&key, &value)? {
                        return Err(ConfigError::UnknownKey { line, key });
                    }
                }
            }
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.replicates == 0 {
            return invalid("replicates must be at least 1");
        }
        if self.protocols.is_empty() || self.node_counts.is_empty() || self.scenarios.is_empty() {
            return invalid("plan needs at least one protocol, node count and scenario");
        }
        let registry = ProtocolRegistry::with_builtins();
        for p in &self.protocols {
            if registry.canonical(p).is_none() {
                return Err(ConfigError::Invalid(format!("unknown protocol `{p}`")));
            }
        }
        for c in self.cells().filter(|c| c.replicate == 0) {
            c.config(self).validate()?;
        }
        Ok(())
    }

    /// Every (protocol, nodes, scenario, replicate) cell in output order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.protocols.iter().enumerate().flat_map(move |(pi, p)| {
            self.node_counts.iter().flat_map(move |&n| {
                self.scenarios.iter().flat_map(move |&s| {
                    (0..self.replicates).map(move |r| Cell {
                        protocol_index: pi,
                        protocol: p.clone(),
                        nodes: n,
                        scenario: s,
                        replicate: r,
                    })
                })
            })
        })
    }

    /// Seed of a cell. It does not depend on the protocol, so every
    /// protocol sees the same topology and traffic for a given replicate.
    pub fn cell_seed(&self, nodes: usize, scenario: ScenarioKind, replicate: u32) -> u64 {
        let s = match scenario {
            ScenarioKind::Static => 0,
            ScenarioKind::Dynamic => 1,
        };
        derive_seed(self.seed, &[nodes as u64, s, u64::from(replicate)])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub protocol_index: usize,
    pub protocol: String,
    pub nodes: usize,
    pub scenario: ScenarioKind,
    pub replicate: u32,
}

impl Cell {
    pub fn config(&self, plan: &ExperimentPlan) -> SimConfig {
        let mut c = plan.base.clone();
        c.protocol = self.protocol.to_ascii_uppercase();
        c.nodes = self.nodes;
        c.scenario = self.scenario;
        c.seed = plan.cell_seed(self.nodes, self.scenario, self.replicate);
        c
    }

    pub fn run_id(&self) -> String {
        format!("{}-n{}-{}-r{}", self.protocol, self.nodes, self.scenario, self.replicate)
    }
}

/// One output row; field names are the CSV/JSON column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub protocol: String,
    pub nodes: usize,
    pub scenario: String,
    /// Replicate index, or `mean` for the aggregate row.
    pub replicate: String,
    pub latency_s: Option<f64>,
    pub success_rate_pct: f64,
    #[serde(rename = "energy_J")]
    pub energy_j: f64,
    #[serde(rename = "efficiency_kbit_per_J")]
    pub efficiency_kbit_per_j: f64,
}

/// Mean and standard deviation of each metric over a cell's replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub protocol: String,
    pub nodes: usize,
    pub scenario: String,
    pub replicates: u32,
    pub latency_s_mean: Option<f64>,
    pub latency_s_std: Option<f64>,
    pub success_rate_pct_mean: f64,
    pub success_rate_pct_std: f64,
    #[serde(rename = "energy_J_mean")]
    pub energy_j_mean: f64,
    #[serde(rename = "energy_J_std")]
    pub energy_j_std: f64,
    #[serde(rename = "efficiency_kbit_per_J_mean")]
    pub efficiency_mean: f64,
    #[serde(rename = "efficiency_kbit_per_J_std")]
    pub efficiency_std: f64,
}

/// A completed run with its raw accumulators.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub cell: Cell,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub summary: MetricSummary,
    pub max_live_forward_ants: usize,
    pub alive_at_end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub cell: Cell,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<RunRecord>,
    pub failures: Vec<CellFailure>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl ExperimentResult {
    /// Replicate rows followed by one `mean` row per cell.
    pub fn rows(&self) -> Vec<ResultRow> {
        let mut out = Vec::new();
        for group in self.groups() {
            for r in &group {
                let s = &r.summary;
                out.push(ResultRow {
                    run_id: r.cell.run_id(),
                    protocol: r.cell.protocol.clone(),
                    nodes: r.cell.nodes,
                    scenario: r.cell.scenario.to_string(),
                    replicate: r.cell.replicate.to_string(),
                    latency_s: s.latency_s,
                    success_rate_pct: s.success_rate_pct,
                    energy_j: s.energy_j,
                    efficiency_kbit_per_j: s.efficiency_kbit_per_j,
                });
            }
            let agg = aggregate(&group);
            let c = &group[0].cell;
            out.push(ResultRow {
                run_id: format!("{}-n{}-{}-mean", c.protocol, c.nodes, c.scenario),
                protocol: c.protocol.clone(),
                nodes: c.nodes,
                scenario: c.scenario.to_string(),
                replicate: "mean".into(),
                latency_s: agg.latency_s_mean,
                success_rate_pct: agg.success_rate_pct_mean,
                energy_j: agg.energy_j_mean,
                efficiency_kbit_per_j: agg.efficiency_mean,
            });
        }
        out
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        self.groups().iter().map(|g| aggregate(g)).collect()
    }

    /// Completed runs grouped by (protocol, nodes, scenario), in run order.
    fn groups(&self) -> Vec<Vec<&RunRecord>> {
        let mut groups: Vec<Vec<&RunRecord>> = Vec::new();
        for r in &self.runs {
            match groups.last_mut() {
                Some(g) if same_group(&g[0].cell, &r.cell) => g.push(r),
                _ => groups.push(vec![r]),
            }
        }
        groups
    }

    /// Runs of one protocol/nodes/scenario cell.
    pub fn cell_runs<'a>(&'a self, protocol: &'a str, nodes: usize, scenario: ScenarioKind) -> impl Iterator<Item = &'a RunRecord> {
        self.runs
            .iter()
            .filter(move |r| r.cell.protocol.eq_ignore_ascii_case(protocol) && r.cell.nodes == nodes && r.cell.scenario == scenario)
    }

    pub fn cell_summary(&self, protocol: &str, nodes: usize, scenario: ScenarioKind) -> Option<SummaryRow> {
        let runs: Vec<&RunRecord> = self.cell_runs(protocol, nodes, scenario).collect();
        (!runs.is_empty()).then(|| aggregate(&runs))
    }
}

fn same_group(a: &Cell, b: &Cell) -> bool {
    a.protocol_index == b.protocol_index && a.nodes == b.nodes && a.scenario == b.scenario
}

fn aggregate(runs: &[&RunRecord]) -> SummaryRow {
    let c = &runs[0].cell;
    let lat: Vec<f64> = runs.iter().filter_map(|r| r.summary.latency_s).collect();
    let (lat_mean, lat_std) = if lat.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&lat);
        (Some(m), Some(s))
    };
    let pick = |f: fn(&MetricSummary) -> f64| mean_std(&runs.iter().map(|r| f(&r.summary)).collect::<Vec<_>>());
    let (sr_m, sr_s) = pick(|s| s.success_rate_pct);
    let (e_m, e_s) = pick(|s| s.energy_j);
    let (ef_m, ef_s) = pick(|s| s.efficiency_kbit_per_j);
    SummaryRow {
        protocol: c.protocol.clone(),
        nodes: c.nodes,
        scenario: c.scenario.to_string(),
        replicates: runs.len() as u32,
        latency_s_mean: lat_mean,
        latency_s_std: lat_std,
        success_rate_pct_mean: sr_m,
        success_rate_pct_std: sr_s,
        energy_j_mean: e_m,
        energy_j_std: e_s,
        efficiency_mean: ef_m,
        efficiency_std: ef_s,
    }
}

/// Run one cell.
pub fn run_cell(plan: &ExperimentPlan, cell: &Cell, registry: &ProtocolRegistry) -> Result<RunRecord, CellFailure> {
    let config = cell.config(plan);
    let seed = config.seed;
    let report = Simulation::new(config, registry).and_then(|s| s.run()).map_err(|e| CellFailure {
        cell: cell.clone(),
        error: e.to_string(),
    })?;
    let summary = report.metrics.summary();
    Ok(RunRecord {
        cell: cell.clone(),
        seed,
        metrics: report.metrics,
        summary,
        max_live_forward_ants: report.max_live_forward_ants,
        alive_at_end: report.alive_at_end,
    })
}

/// Run every cell of the plan. Output order follows the plan, whether or
/// not the cells ran in parallel.
pub fn run_experiment(plan: &ExperimentPlan, registry: &ProtocolRegistry) -> ExperimentResult {
    let cells: Vec<Cell> = plan.cells().collect();
    let outcomes: Vec<Result<RunRecord, CellFailure>> = if plan.parallel {
        cells.par_iter().map(|c| run_cell(plan, c, registry)).collect()
    } else {
        cells.iter().map(|c| run_cell(plan, c, registry)).collect()
    };
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => runs.push(r),
            Err(f) => failures.push(f),
        }
    }
    ExperimentResult { runs, failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentPlan {
        ExperimentPlan::parse("protocols = IEEABR\nnodes = 9\nscenarios = static\nreplicates = 3\nduration = 5\nlayout = grid\n")
            .unwrap()
    }

    #[test]
    fn plan_parsing() {
        let p = ExperimentPlan::parse("protocols = babr, ff\nnodes = 9, 16\nreplicates = 2\nradio.gamma = 3\n").unwrap();
        assert_eq!(p.protocols, vec!["BABR", "FF"]);
        assert_eq!(p.node_counts, vec![9, 16]);
        assert_eq!(p.base.radio.gamma, 3.0);
        assert_eq!(p.cells().count(), 8);
        assert!(ExperimentPlan::parse("replicates = 0").is_err());
        assert!(ExperimentPlan::parse("protocols = AODV").is_err());
        assert!(ExperimentPlan::parse("colour = blue").is_err());
    }

    #[test]
    fn three_replicates_give_four_rows() {
        let plan = tiny();
        let res = run_experiment(&plan, &ProtocolRegistry::with_builtins());
        assert!(res.failures.is_empty());
        let rows = res.rows();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3].replicate, "mean");
        let mean = rows[..3].iter().map(|r| r.energy_j).sum::<f64>() / 3.0;
        assert_eq!(rows[3].energy_j, mean);
    }

    #[test]
    fn seeds_ignore_protocol() {
        let p = ExperimentPlan::default();
        let cells: Vec<Cell> = p.cells().filter(|c| c.replicate == 0).collect();
        let seeds: Vec<u64> = cells.iter().map(|c| c.config(&p).seed).collect();
        assert!(seeds.windows(2).all(|w| w[0] == w[1]));
        assert_ne!(p.cell_seed(49, ScenarioKind::Static, 0), p.cell_seed(49, ScenarioKind::Static, 1));
    }

    #[test]
    fn parallel_matches_serial() {
        let mut plan = tiny();
        let reg = ProtocolRegistry::with_builtins();
        let a = run_experiment(&plan, &reg).rows();
        plan.parallel = false;
        let b = run_experiment(&plan, &reg).rows();
        assert_eq!(a, b);
    }

    #[test]
    fn failed_topology_reported() {
        let mut plan = tiny();
        plan.base.layout = crate::scenario::Layout::RandomSquare;
        plan.base.radio.tx_radius = 1.0;
        plan.base.max_topology_attempts = 2;
        let res = run_experiment(&plan, &ProtocolRegistry::with_builtins());
        assert_eq!(res.failures.len(), 3);
        assert!(res.runs.is_empty());
    }

    #[test]
    fn mean_std_small() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }
}

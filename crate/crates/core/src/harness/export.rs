use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::{ResultRow, SummaryRow};
use crate::sim::Sample;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("bad JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("nothing to export")]
    Empty,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExportError + '_ {
    move |source| ExportError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn write_records<T: Serialize>(rows: &[T], path: &Path) -> Result<(), ExportError> {
    if rows.is_empty() {
        return Err(ExportError::Empty);
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Result rows as CSV (header plus one line per row).
pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<(), ExportError> {
    write_records(rows, path)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, ExportError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

/// Per-cell mean and standard deviation as CSV.
pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<(), ExportError> {
    write_records(rows, path)
}

/// Result rows as a JSON array of objects with the CSV field names.
pub fn write_json(rows: &[ResultRow], path: &Path) -> Result<(), ExportError> {
    if rows.is_empty() {
        return Err(ExportError::Empty);
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, rows).map_err(|source| ExportError::Json {
        path: path.display().to_string(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_json(path: &Path) -> Result<Vec<ResultRow>, ExportError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| ExportError::Json {
        path: path.display().to_string(),
        source,
    })
}

fn write_series(dir: &Path, name: &str, points: &[(f64, f64)]) -> Result<PathBuf, ExportError> {
    let path = dir.join(format!("{name}.dat"));
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    for (x, y) in points {
        writeln!(w, "{x} {y}").map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

/// Two-column `nodes value` files from the `mean` rows, one per
/// scenario/metric/protocol: `<scenario>_<metric>_<protocol>.dat`.
pub fn write_plot_data(rows: &[ResultRow], dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    let means: Vec<&ResultRow> = rows.iter().filter(|r| r.replicate == "mean").collect();
    if means.is_empty() {
        return Err(ExportError::Empty);
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    type Metric = fn(&ResultRow) -> Option<f64>;
    let metrics: [(&str, Metric); 4] = [
        ("latency", |r| r.latency_s),
        ("success", |r| Some(r.success_rate_pct)),
        ("energy", |r| Some(r.energy_j)),
        ("efficiency", |r| Some(r.efficiency_kbit_per_j)),
    ];
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &means {
        for (metric, f) in &metrics {
            if let Some(y) = f(r) {
                let key = format!("{}_{}_{}", r.scenario, metric, r.protocol);
                series.entry(key).or_default().push((r.nodes as f64, y));
            }
        }
    }
    let mut written = Vec::new();
    for (name, mut points) in series {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        written.push(write_series(dir, &name, &points)?);
    }
    Ok(written)
}

/// Two-column `time value` files from one run's timeline:
/// `timeline_<metric>_<protocol>.dat`.
pub fn write_timeline(samples: &[Sample], protocol: &str, dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    if samples.is_empty() {
        return Err(ExportError::Empty);
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    type Metric = fn(&Sample) -> f64;
    let metrics: [(&str, Metric); 4] = [
        ("energy", |s| s.energy_j),
        ("success", |s| {
            if s.generated == 0 {
                0.0
            } else {
                100.0 * s.delivered as f64 / s.generated as f64
            }
        }),
        ("alive", |s| s.alive as f64),
        ("ants", |s| s.live_forward_ants as f64),
    ];
    let mut written = Vec::new();
    for (metric, f) in metrics {
        let points: Vec<(f64, f64)> = samples.iter().map(|s| (s.time, f(s))).collect();
        written.push(write_series(dir, &format!("timeline_{metric}_{protocol}"), &points)?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(protocol: &str, nodes: usize, replicate: &str, latency: Option<f64>) -> ResultRow {
        ResultRow {
            run_id: format!("{protocol}-{nodes}-{replicate}"),
            protocol: protocol.into(),
            nodes,
            scenario: "static".into(),
            replicate: replicate.into(),
            latency_s: latency,
            success_rate_pct: 95.5,
            energy_j: 0.1 + 0.2,
            efficiency_kbit_per_j: 1.0 / 3.0,
        }
    }

    #[test]
    fn csv_header_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![row("FF", 9, "0", None)];
        write_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "run_id,protocol,nodes,scenario,replicate,latency_s,success_rate_pct,energy_J,efficiency_kbit_per_J"
        );
        assert_eq!(lines.count(), 1);
        assert_eq!(read_csv(&path).unwrap(), rows);
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let rows = vec![row("FF", 9, "0", Some(0.123456789)), row("FF", 9, "mean", None)];
        write_json(&rows, &path).unwrap();
        assert_eq!(read_json(&path).unwrap(), rows);
    }

    #[test]
    fn unwritable_path_names_file() {
        let err = write_csv(&[row("FF", 9, "0", None)], Path::new("/nonexistent/dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/out.csv"));
    }

    #[test]
    fn empty_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(write_csv(&[], &dir.path().join("x.csv")), Err(ExportError::Empty)));
    }

    #[test]
    fn plot_files_per_protocol() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            row("FF", 16, "mean", Some(1.0)),
            row("FF", 9, "mean", Some(2.0)),
            row("SC", 9, "mean", None),
            row("SC", 9, "0", None),
        ];
        let files = write_plot_data(&rows, dir.path()).unwrap();
        let energy = std::fs::read_to_string(dir.path().join("static_energy_FF.dat")).unwrap();
        let xs: Vec<&str> = energy.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
        assert_eq!(xs, vec!["9", "16"]);
        assert!(!dir.path().join("static_latency_SC.dat").exists());
        assert_eq!(files.len(), 4 + 3);
    }
}

//! Exact-versus-GA experiment runner.
//!
//! For each requested size a fresh instance is generated, solved exactly
//! under a time limit and by the GA under its budget. The optimality ratio
//! is reported only for rows whose optimum was proven; `bound_ratio` is
//! the GA value over the exact solver's upper bound, which never exceeds
//! the true ratio and is available for every row.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::Result;
use crate::exact::{solve_exact, ExactConfig};
use crate::ga::{run_ga, GaConfig};
use crate::generate::{derived_seeds, gen_instance, FlowGenConfig, TopoConfig};
use crate::paths::DEFAULT_MAX_PATH_LEN;

pub const DEFAULT_EXACT_LIMIT: Duration = Duration::from_secs(300);

pub const CSV_HEADER: &str = "nodes,flows,optimal,exact_s,proven,ga_value,ga_s,ratio";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub instances_per_size: u64,
    pub max_path_len: usize,
    pub exact: ExactConfig,
    pub ga: GaConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: Vec::new(),
            seed: 0,
            instances_per_size: 1,
            max_path_len: DEFAULT_MAX_PATH_LEN,
            exact: ExactConfig::default().with_time_limit(DEFAULT_EXACT_LIMIT),
            ga: GaConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub nodes: usize,
    pub flows: usize,
    pub exact_objective: u64,
    pub exact_bound: u64,
    #[serde(serialize_with = "secs")]
    pub exact_time: Duration,
    pub exact_proven: bool,
    pub ga_objective: u64,
    #[serde(serialize_with = "secs")]
    pub ga_time: Duration,
    pub ratio: Option<f64>,
    pub bound_ratio: Option<f64>,
    pub error: Option<String>,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

fn ratio(value: u64, reference: u64) -> f64 {
    if reference == 0 {
        1.0
    } else {
        value as f64 / reference as f64
    }
}

impl BenchRow {
    fn failed(nodes: usize, error: String) -> Self {
        BenchRow {
            nodes,
            flows: 0,
            exact_objective: 0,
            exact_bound: 0,
            exact_time: Duration::ZERO,
            exact_proven: false,
            ga_objective: 0,
            ga_time: Duration::ZERO,
            ratio: None,
            bound_ratio: None,
            error: Some(error),
        }
    }
}

/// Generates, solves and compares one instance.
pub fn bench_instance(nodes: usize, k: u64, cfg: &BenchConfig) -> Result<BenchRow> {
    let (topo_seed, flow_seed) = derived_seeds(cfg.seed, nodes, k);
    let instance =
        gen_instance(&TopoConfig::new(nodes, topo_seed), &FlowGenConfig::new(flow_seed), cfg.max_path_len)?.instance;

    let t = Instant::now();
    let exact = solve_exact(&instance, &cfg.exact)?;
    let exact_time = t.elapsed();

    let ga_cfg = GaConfig { seed: topo_seed, ..cfg.ga.clone() };
    let t = Instant::now();
    let (ga, _) = run_ga(&instance, &ga_cfg)?;
    let ga_time = t.elapsed();

    Ok(BenchRow {
        nodes,
        flows: instance.flow_count(),
        exact_objective: exact.objective,
        exact_bound: exact.stats.bound,
        exact_time,
        exact_proven: exact.proven_optimal,
        ga_objective: ga.objective,
        ga_time,
        ratio: exact.proven_optimal.then(|| ratio(ga.objective, exact.objective)),
        bound_ratio: Some(ratio(ga.objective, exact.stats.bound)),
        error: None,
    })
}

/// Runs every size in order, `instances_per_size` times each, handing each
/// row to `on_row` as soon as it is done. A failing row is recorded with
/// its error and the run continues.
pub fn run_benchmark(cfg: &BenchConfig, mut on_row: impl FnMut(&BenchRow)) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for &nodes in &cfg.sizes {
        for k in 0..cfg.instances_per_size {
            let row = bench_instance(nodes, k, cfg).unwrap_or_else(|e| BenchRow::failed(nodes, e.to_string()));
            on_row(&row);
            rows.push(row);
        }
    }
    rows
}

pub fn csv_line(row: &BenchRow) -> String {
    let ratio = row.ratio.map(|r| format!("{r:.4}")).unwrap_or_default();
    format!(
        "{},{},{},{:.3},{},{},{:.3},{}",
        row.nodes,
        row.flows,
        row.exact_objective,
        row.exact_time.as_secs_f64(),
        row.exact_proven,
        row.ga_objective,
        row.ga_time.as_secs_f64(),
        ratio
    )
}

/// CSV text (header plus one line per row) and a JSON array with every
/// field, including bounds and errors.
pub fn emit_report(rows: &[BenchRow]) -> (String, String) {
    let mut csv = format!("{CSV_HEADER}\n");
    for row in rows {
        writeln!(csv, "{}", csv_line(row)).unwrap();
    }
    let json = serde_json::to_string_pretty(rows).expect("serializable");
    (csv, json)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(ratio: Option<f64>) -> BenchRow {
        BenchRow {
            nodes: 13,
            flows: 900,
            exact_objective: 1000,
            exact_bound: 1000,
            exact_time: Duration::from_millis(1250),
            exact_proven: ratio.is_some(),
            ga_objective: 945,
            ga_time: Duration::from_secs(10),
            ratio,
            bound_ratio: Some(0.945),
            error: None,
        }
    }

    #[test]
    fn empty_report() {
        let (csv, json) = emit_report(&[]);
        assert_eq!(csv, format!("{CSV_HEADER}\n"));
        assert_eq!(json, "[]");
        let cfg = BenchConfig::default();
        assert!(run_benchmark(&cfg, |_| panic!("no rows expected")).is_empty());
    }

    #[test]
    fn csv_formatting() {
        let (csv, _) = emit_report(&[row(Some(0.945926))]);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().nth(1).unwrap(), "13,900,1000,1.250,true,945,10.000,0.9459");
        assert!(csv_line(&row(None)).ends_with(",false,945,10.000,"));
    }

    #[test]
    fn small_sizes_run_and_agree() {
        let cfg = BenchConfig {
            sizes: vec![2, 3],
            seed: 11,
            ga: GaConfig { time_budget: Duration::from_millis(300), ..GaConfig::default() },
            exact: ExactConfig::default().with_time_limit(Duration::from_secs(20)),
            ..BenchConfig::default()
        };
        let mut seen = 0;
        let rows = run_benchmark(&cfg, |_| seen += 1);
        assert_eq!(seen, 2);
        for r in &rows {
            assert!(r.error.is_none());
            assert!(r.exact_proven, "{r:?}");
            assert!(r.ga_objective <= r.exact_objective);
            let q = r.ratio.unwrap();
            assert!((0.0..=1.0).contains(&q));
            assert!(r.ga_time <= Duration::from_millis(330), "{:?}", r.ga_time);
        }
    }

    #[test]
    fn failures_are_recorded() {
        let cfg = BenchConfig {
            sizes: vec![1, 2],
            ga: GaConfig { time_budget: Duration::from_millis(50), ..GaConfig::default() },
            ..BenchConfig::default()
        };
        let rows = run_benchmark(&cfg, |_| {});
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.as_deref().is_some_and(|e| !e.is_empty()));
        assert!(rows[1].error.is_none());
    }
}

use std::error::Error;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use serde_json::json;

use pfar::bench::{csv_line, emit_report, run_benchmark, BenchConfig, CSV_HEADER};
use pfar::exact::{solve_exact, solve_strict, ExactConfig};
use pfar::ga::{run_ga, GaConfig};
use pfar::generate::{gen_instance, FlowGenConfig, TopoConfig, L0, L1, L2};
use pfar::ilp::{build_ilp, decode_assignment, export_lp, verify_ilp_values, IlpSolutionValues};
use pfar::io::{ga_stats_csv, instance_to_json, read_instance, SolutionDoc};
use pfar::paths::DEFAULT_MAX_PATH_LEN;
use pfar::{check_solution, objective_value};

type CliResult<T = ()> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "pfar", version, about = "Priority flow admission and routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark instance.
    Gen {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = L0)]
        l0: u64,
        #[arg(long, default_value_t = L1)]
        l1: u64,
        #[arg(long, default_value_t = L2)]
        l2: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seed of the flow stream; defaults to a value derived from --seed.
        #[arg(long)]
        flow_seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_MAX_PATH_LEN)]
        max_path_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the 0-1 program in LP format.
    ExportLp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a `name value` solution file against the 0-1 program.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        values: PathBuf,
    },
    /// Solve to optimality by branch and bound.
    SolveExact {
        #[arg(long)]
        instance: PathBuf,
        /// Wall-clock limit in seconds; the best solution found is reported.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        node_limit: Option<u64>,
        /// Solve priority classes one after another, highest first.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the genetic heuristic.
    SolveGa {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        budget_secs: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        population: usize,
        /// Stop after this many generations; makes runs reproducible.
        #[arg(long)]
        generations: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-generation statistics as CSV.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Compare exact and GA solutions over generated instances.
    Bench {
        /// Node counts: `A..B` (inclusive), a comma list, or a single value.
        #[arg(long, value_parser = parse_sizes)]
        sizes: Sizes,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        instances: u64,
        #[arg(long, default_value_t = 10.0)]
        ga_budget: f64,
        #[arg(long, default_value_t = 300.0)]
        exact_limit: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_PATH_LEN)]
        max_path_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full report with bounds and errors as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Debug)]
struct Sizes(Vec<usize>);

fn parse_sizes(s: &str) -> std::result::Result<Sizes, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad size `{t}`: {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty range {s}"));
        }
        return Ok(Sizes((a..=b).collect()));
    }
    s.split(',').map(num).collect::<std::result::Result<_, _>>().map(Sizes)
}

fn secs(s: f64) -> CliResult<Duration> {
    Duration::try_from_secs_f64(s).map_err(|e| format!("invalid duration {s}: {e}").into())
}

fn emit(out: Option<&PathBuf>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Gen { nodes, l0, l1, l2, seed, flow_seed, max_path_len, out } => {
            let topo = TopoConfig { nodes, l0, l1, l2, seed };
            let flows = FlowGenConfig::new(flow_seed.unwrap_or(seed ^ 0x9e37_79b9_7f4a_7c15));
            let g = gen_instance(&topo, &flows, max_path_len)?;
            emit(out.as_ref(), &instance_to_json(&g.instance, Some(&g.meta)))?;
            eprintln!(
                "{} nodes, {} links, {} flows",
                nodes,
                g.instance.network().edge_count(),
                g.instance.flow_count()
            );
        }
        Command::ExportLp { instance, out } => {
            let inst = read_instance(&instance)?;
            emit(out.as_ref(), &export_lp(&build_ilp(&inst)?))?;
        }
        Command::Check { instance, values } => {
            let inst = read_instance(&instance)?;
            let program = build_ilp(&inst)?;
            let values = IlpSolutionValues::parse(&fs::read_to_string(values)?)?;
            let report = verify_ilp_values(&program, &values)?;
            for &k in &report.violated {
                println!("violated {}", program.constraints[k].name);
            }
            for name in &report.non_binary {
                println!("non-binary {name}");
            }
            if !report.feasible {
                println!("infeasible");
                return Ok(ExitCode::FAILURE);
            }
            let assignment = decode_assignment(&inst, &values)?;
            if !check_solution(&inst, &assignment)?.valid {
                println!("infeasible");
                return Ok(ExitCode::FAILURE);
            }
            println!("feasible objective {}", objective_value(&inst, &assignment)?);
        }
        Command::SolveExact { instance, time_limit, node_limit, strict, out } => {
            let inst = read_instance(&instance)?;
            let cfg =
                ExactConfig { time_limit: time_limit.map(secs).transpose()?, node_limit, ..ExactConfig::default() };
            let r = if strict { solve_strict(&inst, &cfg)? } else { solve_exact(&inst, &cfg)? };
            let doc =
                SolutionDoc::new(&inst, &r.assignment, r.objective, r.proven_optimal, serde_json::to_value(&r.stats)?)?;
            emit(out.as_ref(), &doc.to_json())?;
            eprintln!(
                "objective {} ({}), bound {}, {} nodes in {:.3}s",
                r.objective,
                if r.proven_optimal { "optimal" } else { "not proven" },
                r.stats.bound,
                r.stats.nodes_explored,
                r.stats.elapsed.as_secs_f64()
            );
        }
        Command::SolveGa { instance, budget_secs, seed, population, generations, out, stats } => {
            let inst = read_instance(&instance)?;
            let cfg = GaConfig {
                population_size: population,
                time_budget: secs(budget_secs)?,
                seed,
                max_generations: generations,
                ..GaConfig::default()
            };
            let (r, ga) = run_ga(&inst, &cfg)?;
            let best_fitness = ga.history.last().map(|h| h.best_fitness);
            let summary = json!({
                "generations": ga.generations,
                "terminated_by": ga.terminated_by,
                "best_fitness": best_fitness,
                "upper_bound": r.stats.bound,
            });
            let doc = SolutionDoc::new(&inst, &r.assignment, r.objective, r.proven_optimal, summary)?;
            emit(out.as_ref(), &doc.to_json())?;
            if let Some(path) = stats {
                fs::write(path, ga_stats_csv(&ga))?;
            }
            eprintln!(
                "objective {} after {} generations in {:.3}s ({})",
                r.objective,
                ga.generations,
                ga.elapsed.as_secs_f64(),
                ga.terminated_by
            );
        }
        Command::Bench { sizes, seed, instances, ga_budget, exact_limit, max_path_len, out, json } => {
            let cfg = BenchConfig {
                sizes: sizes.0,
                seed,
                instances_per_size: instances,
                max_path_len,
                exact: ExactConfig::default().with_time_limit(secs(exact_limit)?),
                ga: GaConfig { time_budget: secs(ga_budget)?, ..GaConfig::default() },
            };
            let mut sink: Box<dyn Write> = match &out {
                Some(path) => Box::new(BufWriter::new(File::create(path)?)),
                None => Box::new(std::io::stdout()),
            };
            writeln!(sink, "{CSV_HEADER}")?;
            sink.flush()?;
            let mut io_error = None;
            let rows = run_benchmark(&cfg, |row| {
                if let Some(e) = &row.error {
                    eprintln!("size {}: {e}", row.nodes);
                }
                let written = writeln!(sink, "{}", csv_line(row)).and_then(|_| sink.flush());
                if let Err(e) = written {
                    io_error.get_or_insert(e);
                }
            });
            if let Some(e) = io_error {
                return Err(e.into());
            }
            if let Some(path) = json {
                fs::write(path, emit_report(&rows).1 + "\n")?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

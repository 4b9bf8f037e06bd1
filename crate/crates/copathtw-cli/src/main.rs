//! Batch front end: solve instances, verify solution files, and run the
//! randomized self-check suites.
//!
//! Exit codes: 0 success (or verified), 1 failed verification or failed
//! self-check, 2 input error, 3 internal verification failure (a solver
//! bug trap, never silent).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use copathtw::decomposition::{
    heuristic_decomposition, is_path_shape, nicify, parse_td, validate, Strategy,
};
use copathtw::graph::{
    parse_weights, verify_packing_solution, verify_set_solution, weight_of, Graph, WeightKind,
};
use copathtw::matroid::{binomial, complete_graph_representation, max_q_representative};
use copathtw::oracle::{
    brute_packing, brute_set, check_representative, corpus_instance, random_family,
    with_random_weights,
};
use copathtw::{decide_packing, decide_set, solve_packing, solve_set, SolveOptions};

#[derive(Parser)]
#[command(name = "copathtw", version, about = "Exact Co-Path Set / Co-Path Packing solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Problem {
    Set,
    Packing,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a report.
    Solve {
        #[arg(long, value_enum)]
        problem: Problem,
        /// Graph in PACE .gr format.
        #[arg(long)]
        graph: PathBuf,
        /// Tree decomposition in PACE .td format; omitted = heuristic.
        #[arg(long)]
        td: Option<PathBuf>,
        /// Weight file: one integer per line, vertex- or edge-indexed.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Also answer the decision question "delete at most K?".
        #[arg(long, value_name = "K")]
        decision: Option<usize>,
        /// Include the kept id set in the report.
        #[arg(long)]
        emit_solution: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Seed for heuristic tie-breaks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include table sizes per node and the max family size.
        #[arg(long)]
        stats: bool,
    },
    /// Check a solution file against a graph; exit 0 iff it verifies.
    Verify {
        #[arg(long, value_enum)]
        problem: Problem,
        #[arg(long)]
        graph: PathBuf,
        /// Solution report as produced by `solve --emit-solution`.
        #[arg(long)]
        solution: PathBuf,
    },
    /// Run the oracle-equivalence, representative-family, and invariant
    /// suites on seeded random instances.
    Selfcheck {
        /// Number of corpus instances per problem.
        #[arg(long, default_value_t = 40)]
        seeds: u64,
        /// Largest instance size (the oracles are exponential).
        #[arg(long, default_value_t = 8)]
        max_n: usize,
    },
}

#[derive(Serialize, Deserialize)]
struct Report {
    problem: String,
    n: usize,
    m: usize,
    width: usize,
    opt_weight: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    kept: Option<Vec<u32>>,
    deleted_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<ReportStats>,
}

#[derive(Serialize, Deserialize)]
struct ReportStats {
    nodes: usize,
    max_state_entries: usize,
    size_invariant_violations: usize,
    per_node_entries: Vec<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve {
            problem,
            graph,
            td,
            weights,
            decision,
            emit_solution,
            format,
            seed,
            stats,
        } => cmd_solve(
            problem,
            &graph,
            td.as_deref(),
            weights.as_deref(),
            decision,
            emit_solution,
            format,
            seed,
            stats,
        ),
        Command::Verify {
            problem,
            graph,
            solution,
        } => cmd_verify(problem, &graph, &solution),
        Command::Selfcheck { seeds, max_n } => cmd_selfcheck(seeds, max_n),
    }
}

fn fail_input(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn threads_from_env() -> usize {
    match std::env::var("COPATHTW_THREADS") {
        Ok(v) => v.parse().unwrap_or(0),
        Err(_) => 0,
    }
}

fn read_file(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    problem: Problem,
    graph_path: &Path,
    td_path: Option<&Path>,
    weights_path: Option<&Path>,
    decision: Option<usize>,
    emit_solution: bool,
    format: Format,
    seed: u64,
    stats: bool,
) -> ExitCode {
    let started = Instant::now();
    let text = match read_file(graph_path) {
        Ok(t) => t,
        Err(e) => return fail_input(e),
    };
    let mut g = match Graph::from_gr_str(&text) {
        Ok(g) => g,
        Err(e) => return fail_input(e),
    };
    if let Some(path) = weights_path {
        let text = match read_file(path) {
            Ok(t) => t,
            Err(e) => return fail_input(e),
        };
        let ws = match parse_weights(&text) {
            Ok(w) => w,
            Err(e) => return fail_input(e),
        };
        let attach = match problem {
            Problem::Set => g.set_edge_weights(ws),
            Problem::Packing => g.set_vertex_weights(ws),
        };
        if let Err(e) = attach {
            return fail_input(e);
        }
    }
    let td = match td_path {
        Some(path) => {
            let text = match read_file(path) {
                Ok(t) => t,
                Err(e) => return fail_input(e),
            };
            let td = match parse_td(&text) {
                Ok(td) => td,
                Err(e) => return fail_input(e),
            };
            let report = validate(&g, &td);
            if !report.is_valid() {
                return fail_input(format!(
                    "decomposition invalid: {:?}",
                    report.violations
                ));
            }
            td
        }
        None => heuristic_decomposition(&g, Strategy::MinFill, seed),
    };
    let (nice, schedule) = match nicify(&g, &td) {
        Ok(pair) => pair,
        Err(e) => return fail_input(e),
    };
    let opts = SolveOptions::with_threads(threads_from_env());

    let (opt_weight, kept, solve_stats, kind) = match problem {
        Problem::Set => match solve_set(&g, &nice, &schedule, &opts) {
            Ok(sol) => (sol.weight, sol.kept_edges, sol.stats, WeightKind::Edges),
            Err(e) => return fail_input(e),
        },
        Problem::Packing => match solve_packing(&g, &nice, &schedule, &opts) {
            Ok(sol) => (sol.weight, sol.kept_vertices, sol.stats, WeightKind::Vertices),
            Err(e) => return fail_input(e),
        },
    };

    // Bug trap: whatever we are about to print must re-verify.
    let verified = match problem {
        Problem::Set => verify_set_solution(&g, &kept),
        Problem::Packing => verify_packing_solution(&g, &kept),
    };
    let weight_matches = matches!(weight_of(&g, kind, &kept), Ok(w) if w == opt_weight);
    if !verified || !weight_matches {
        eprintln!("internal error: solution failed re-verification");
        return ExitCode::from(3);
    }

    let total = match problem {
        Problem::Set => g.edge_count(),
        Problem::Packing => g.vertex_count(),
    };
    let verdict = decision.map(|k| {
        let yes = match problem {
            Problem::Set => decide_set(&g, k, &nice, &schedule, &opts).map(|(v, _)| v),
            Problem::Packing => decide_packing(&g, k, &nice, &schedule, &opts).map(|(v, _)| v),
        };
        match yes {
            Ok(true) => "YES".to_string(),
            Ok(false) => "NO".to_string(),
            Err(e) => format!("error: {e}"),
        }
    });

    let report = Report {
        problem: match problem {
            Problem::Set => "set".into(),
            Problem::Packing => "packing".into(),
        },
        n: g.vertex_count(),
        m: g.edge_count(),
        width: nice.width(),
        opt_weight,
        kept: emit_solution.then_some(kept.clone()),
        deleted_count: total - kept.len(),
        verdict,
        stats: stats.then(|| ReportStats {
            nodes: solve_stats.node_count(),
            max_state_entries: solve_stats.max_state_entries,
            size_invariant_violations: solve_stats.size_invariant_violations,
            per_node_entries: solve_stats.per_node_entries.clone(),
        }),
    };
    if stats {
        // Wall time goes to stderr so stdout stays byte-identical per seed.
        eprintln!(
            "wall_time_ms: {} (path_shape: {})",
            started.elapsed().as_millis(),
            is_path_shape(&nice)
        );
    }
    match format {
        Format::Json => println!("{}", serde_json::to_string(&report).expect("serializable")),
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "problem: {}", report.problem);
            let _ = writeln!(out, "n: {}  m: {}  width: {}", report.n, report.m, report.width);
            let _ = writeln!(out, "opt_weight: {}", report.opt_weight);
            let _ = writeln!(out, "deleted_count: {}", report.deleted_count);
            if let Some(v) = &report.verdict {
                let _ = writeln!(out, "verdict: {v}");
            }
            if let Some(kept) = &report.kept {
                let _ = writeln!(out, "kept: {kept:?}");
            }
            if let Some(s) = &report.stats {
                let _ = writeln!(
                    out,
                    "nodes: {}  max_state_entries: {}  size_invariant_violations: {}",
                    s.nodes, s.max_state_entries, s.size_invariant_violations
                );
                let _ = writeln!(out, "per_node_entries: {:?}", s.per_node_entries);
            }
            print!("{out}");
        }
    }
    ExitCode::SUCCESS
}

fn cmd_verify(problem: Problem, graph_path: &Path, solution_path: &Path) -> ExitCode {
    let text = match read_file(graph_path) {
        Ok(t) => t,
        Err(e) => return fail_input(e),
    };
    let g = match Graph::from_gr_str(&text) {
        Ok(g) => g,
        Err(e) => return fail_input(e),
    };
    let text = match read_file(solution_path) {
        Ok(t) => t,
        Err(e) => return fail_input(e),
    };
    let report: Report = match serde_json::from_str(&text) {
        Ok(r) => r,
        Err(e) => return fail_input(format!("bad solution file: {e}")),
    };
    let Some(kept) = report.kept else {
        return fail_input("solution file has no kept set (use solve --emit-solution)");
    };
    let (ok, kind) = match problem {
        Problem::Set => (verify_set_solution(&g, &kept), WeightKind::Edges),
        Problem::Packing => (verify_packing_solution(&g, &kept), WeightKind::Vertices),
    };
    if !ok {
        eprintln!("kept set does not induce a linear forest");
        return ExitCode::from(1);
    }
    match weight_of(&g, kind, &kept) {
        Ok(w) if w == report.opt_weight => {
            println!("verified: weight {w}");
            ExitCode::SUCCESS
        }
        Ok(w) => {
            eprintln!("weight mismatch: claimed {}, actual {w}", report.opt_weight);
            ExitCode::from(1)
        }
        Err(e) => fail_input(e),
    }
}

fn cmd_selfcheck(seeds: u64, max_n: usize) -> ExitCode {
    let opts = SolveOptions::with_threads(threads_from_env());
    let mut failures = 0usize;

    // Oracle equivalence for both problems, unit and random weights.
    for index in 0..seeds {
        let base = corpus_instance(index, max_n);
        let td = heuristic_decomposition(&base, Strategy::MinFill, index);
        let (nice, schedule) = match nicify(&base, &td) {
            Ok(pair) => pair,
            Err(e) => {
                eprintln!("selfcheck: nicify failed on instance {index}: {e}");
                failures += 1;
                continue;
            }
        };
        for weighted in [false, true] {
            let gs = if weighted {
                with_random_weights(&base, WeightKind::Edges, index)
            } else {
                base.clone()
            };
            match solve_set(&gs, &nice, &schedule, &opts) {
                Ok(sol) => {
                    let (opt, _) = brute_set(&gs);
                    if sol.weight != opt
                        || !verify_set_solution(&gs, &sol.kept_edges)
                        || sol.stats.size_invariant_violations != 0
                    {
                        eprintln!("selfcheck: set mismatch on instance {index} (weighted={weighted}): dp={} oracle={opt}", sol.weight);
                        failures += 1;
                    }
                }
                Err(e) => {
                    eprintln!("selfcheck: set solve failed on instance {index}: {e}");
                    failures += 1;
                }
            }
            let gp = if weighted {
                with_random_weights(&base, WeightKind::Vertices, index)
            } else {
                base.clone()
            };
            match solve_packing(&gp, &nice, &schedule, &opts) {
                Ok(sol) => {
                    let (opt, _) = brute_packing(&gp);
                    if sol.weight != opt
                        || !verify_packing_solution(&gp, &sol.kept_vertices)
                        || sol.stats.size_invariant_violations != 0
                    {
                        eprintln!("selfcheck: packing mismatch on instance {index} (weighted={weighted}): dp={} oracle={opt}", sol.weight);
                        failures += 1;
                    }
                }
                Err(e) => {
                    eprintln!("selfcheck: packing solve failed on instance {index}: {e}");
                    failures += 1;
                }
            }
        }
        // Decision consistency at a few thresholds.
        let m = base.edge_count();
        let (set_opt, _) = brute_set(&base);
        for k in [0, m / 2, m] {
            match decide_set(&base, k, &nice, &schedule, &opts) {
                Ok((yes, deleted)) => {
                    let expected = m as u64 - set_opt <= k as u64;
                    let kept: Vec<u32> = (0..m as u32)
                        .filter(|e| !deleted.contains(e))
                        .collect();
                    if yes != expected || !verify_set_solution(&base, &kept) {
                        eprintln!("selfcheck: decide_set disagrees on instance {index} k={k}");
                        failures += 1;
                    }
                }
                Err(e) => {
                    eprintln!("selfcheck: decide_set failed on instance {index}: {e}");
                    failures += 1;
                }
            }
        }
    }

    // Representative-family property on random weighted families, over
    // every valid (p, q) split of the matroid rank.
    for seed in 0..seeds.max(10) {
        let k = 2 + (seed as usize) % 4; // ground K_k, k in 2..=5
        let rep = complete_graph_representation(k);
        for p in 0..=(k - 1) {
            let q = k - 1 - p;
            let family = random_family(seed, k, p, 30);
            match max_q_representative(&rep, &family, p, q) {
                Ok(kept_payloads) => {
                    let kept: Vec<usize> = kept_payloads
                        .iter()
                        .map(|&pl| family.iter().position(|s| s.payload == pl).unwrap())
                        .collect();
                    if kept.len() > binomial(p + q, p)
                        || !check_representative(&rep, &family, &kept, q)
                    {
                        eprintln!(
                            "selfcheck: representative property failed at seed {seed} (k={k}, p={p})"
                        );
                        failures += 1;
                    }
                }
                Err(e) => {
                    eprintln!("selfcheck: max_q_representative failed at seed {seed}: {e}");
                    failures += 1;
                }
            }
        }
    }

    if failures == 0 {
        println!("selfcheck: all suites passed ({seeds} instances, max_n {max_n})");
        ExitCode::SUCCESS
    } else {
        println!("selfcheck: {failures} failure(s)");
        ExitCode::from(1)
    }
}

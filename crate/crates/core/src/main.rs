//! Command-line frontend: every pipeline stage as a subcommand over the
//! JSON artifact formats, plus the randomized oracle-comparison harness and
//! a micro-benchmark.
//!
//! Exit codes: 0 success/solvable, 1 unsolvable or verification failed,
//! 2 input error, 3 budget exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use pathgain::equations::{build_km_system, build_path_formulation, EquationsError};
use pathgain::galois::FieldSpec;
use pathgain::network::Problem;
use pathgain::poly::PolySystem;
use pathgain::random::random_dag;
use pathgain::recover::{derive_code, verify_code, NetworkCode};
use pathgain::simplify::{
    branch_analyze, linear_eliminate, DEFAULT_BRANCH_DEPTH, DEFAULT_BRANCH_WIDTH,
};
use pathgain::solve::{brute_force, solve_system, Solution, SolveError, SolveMode, DEFAULT_BUDGET};

#[derive(Parser)]
#[command(name = "pathgain", version, about = "Scalar linear network coding via path-gain polynomial systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Formulation {
    Path,
    Edge,
}

#[derive(Subcommand)]
enum Command {
    /// Transform a problem into its sink-rooted tree forest.
    Transform {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the polynomial system for a problem.
    Equations {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "path")]
        formulation: Formulation,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prune and eliminate a system; writes the reduced system with trace.
    Simplify {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simplify plus bounded case analysis of admissible characteristics.
    Analyze {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BRANCH_DEPTH)]
        depth: u32,
        #[arg(long, default_value_t = DEFAULT_BRANCH_WIDTH)]
        width: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a system over a field; exit 1 with a verdict when unsolvable.
    Solve {
        input: PathBuf,
        #[arg(long)]
        field: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = DEFAULT_BRANCH_DEPTH)]
        depth: u32,
        #[arg(long, default_value_t = DEFAULT_BRANCH_WIDTH)]
        width: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derive edge-to-edge coding coefficients from a path-gain solution.
    Recover {
        problem: PathBuf,
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a network code by independent forward propagation.
    Verify {
        problem: PathBuf,
        code: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random problems solved through both formulations; exit 1 on any
    /// disagreement.
    CompareOracle {
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "2")]
        field: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 8)]
        nodes: usize,
        #[arg(long, default_value_t = 12)]
        edges: usize,
        #[arg(long, default_value_t = 2)]
        sources: usize,
        /// 0 alternates between 2 and 3 sinks per trial.
        #[arg(long, default_value_t = 0)]
        sinks: usize,
    },
    /// Time transform, equation build, and elimination on a random problem.
    Bench {
        #[arg(long, default_value_t = 87)]
        nodes: usize,
        #[arg(long, default_value_t = 161)]
        edges: usize,
        #[arg(long, default_value_t = 5)]
        sources: usize,
        #[arg(long, default_value_t = 10)]
        sinks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

fn emit(value: &serde_json::Value, out: &Option<PathBuf>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    match out {
        Some(path) => write_atomic(path, &text).map_err(input_err),
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

/// Write-then-rename so readers never observe a partial file.
fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => PathBuf::from(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
    };
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)
}

fn load_problem(path: &Path) -> Result<Problem, Failure> {
    Problem::load(path).map_err(input_err)
}

fn load_system(path: &Path) -> Result<PolySystem, Failure> {
    let text = std::fs::read_to_string(path).map_err(input_err)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(input_err)?;
    PolySystem::from_json(&value).map_err(input_err)
}

fn parse_field(name: &str) -> Result<FieldSpec, Failure> {
    FieldSpec::parse(name).map_err(input_err)
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Transform { input, out } => {
            let problem = load_problem(&input)?.normalize_rates();
            let topo = problem.topo_sort().map_err(input_err)?;
            let forest = pathgain::forest::transform(&problem, &topo);
            emit(&forest.to_json(&problem), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Equations { input, formulation, out } => {
            let problem = load_problem(&input)?;
            let system = match formulation {
                Formulation::Path => match build_path_formulation(&problem) {
                    Ok(pf) => pf.system,
                    Err(EquationsError::UnsatisfiableDemand { sink, demanded }) => {
                        return Err(Failure {
                            code: 1,
                            message: format!(
                                "sink {} demands source {} but no path connects them",
                                sink, demanded
                            ),
                        });
                    }
                    Err(e) => return Err(input_err(e)),
                },
                Formulation::Edge => build_km_system(&problem),
            };
            emit(&system.to_json(), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simplify { input, out } => {
            let system = load_system(&input)?;
            let result = linear_eliminate(&system);
            emit(&result.to_json(), &out)?;
            eprintln!(
                "{} variables, {} equations left; verdict {}",
                result.reduced.variables.len(),
                result.reduced.equations.len(),
                result.verdict.render()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze { input, depth, width, out } => {
            let system = load_system(&input)?;
            let mut result = linear_eliminate(&system);
            let (verdict, log) = branch_analyze(&result.reduced, depth, width);
            result.verdict = result.verdict.meet(verdict);
            result.branch_log = log;
            emit(&result.to_json(), &out)?;
            eprintln!("verdict {}", result.verdict.render());
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { input, field, budget, depth, width, out } => {
            let system = load_system(&input)?;
            let field = parse_field(&field)?;
            let solved = match solve_system(&system, &field, budget, depth, width) {
                Ok(s) => s,
                Err(SolveError::BudgetExceeded { space, budget }) => {
                    return Err(Failure {
                        code: 3,
                        message: format!(
                            "budget exceeded: {} assignments vs budget {}",
                            space, budget
                        ),
                    });
                }
                Err(e) => return Err(input_err(e)),
            };
            match solved.solution {
                Some(solution) => {
                    emit(&solution.to_json(), &out)?;
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    let doc = serde_json::json!({
                        "solvable": false,
                        "field": field.name(),
                        "verdict": solved.verdict.render(),
                    });
                    emit(&doc, &out)?;
                    eprintln!("unsolvable over GF({}); verdict {}", field.name(), solved.verdict.render());
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Recover { problem, solution, out } => {
            let problem = load_problem(&problem)?;
            let text = std::fs::read_to_string(&solution).map_err(input_err)?;
            let solution = Solution::from_json_str(&text).map_err(input_err)?;
            let code = derive_code(&problem, &solution).map_err(input_err)?;
            emit(&code.to_json(), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { problem, code, out } => {
            let problem = load_problem(&problem)?;
            let text = std::fs::read_to_string(&code).map_err(input_err)?;
            let code = NetworkCode::from_json_str(&text).map_err(input_err)?;
            let report = verify_code(&problem, &code);
            emit(&report.to_json(), &out)?;
            if report.pass() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("verification failed at {} sink(s)",
                    report.sinks.iter().filter(|s| !s.pass).count());
                Ok(ExitCode::from(1))
            }
        }
        Command::CompareOracle { trials, seed, field, budget, nodes, edges, sources, sinks } => {
            let field = parse_field(&field)?;
            let mut agree_yes = 0u64;
            let mut agree_no = 0u64;
            let mut disagreements: Vec<u64> = Vec::new();
            let mut skipped = 0u64;
            let mut witness_failures: Vec<u64> = Vec::new();
            for t in 0..trials {
                let trial_seed = seed.wrapping_add(t);
                let n_sinks = if sinks == 0 { 2 + (t % 2) as usize } else { sinks };
                let problem = match random_dag(trial_seed, nodes, edges, sources, n_sinks) {
                    Ok(p) => p,
                    Err(_) => {
                        skipped += 1;
                        continue;
                    }
                };
                match compare_once(&problem, &field, budget) {
                    Ok(Comparison::Agree { solvable, witness_ok }) => {
                        if solvable {
                            agree_yes += 1;
                        } else {
                            agree_no += 1;
                        }
                        if !witness_ok {
                            witness_failures.push(trial_seed);
                        }
                    }
                    Ok(Comparison::Disagree) => disagreements.push(trial_seed),
                    Err(SolveError::BudgetExceeded { .. }) => skipped += 1,
                    Err(e) => return Err(input_err(e)),
                }
            }
            println!(
                "{} trials over GF({}): {} solvable-agree, {} unsolvable-agree, {} disagreements, {} skipped (budget/infeasible)",
                trials, field.name(), agree_yes, agree_no, disagreements.len(), skipped
            );
            if !disagreements.is_empty() {
                eprintln!("disagreeing seeds: {:?}", disagreements);
            }
            if !witness_failures.is_empty() {
                eprintln!("witness recovery failures at seeds: {:?}", witness_failures);
            }
            if disagreements.is_empty() && witness_failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::Bench { nodes, edges, sources, sinks, seed } => {
            let problem = random_dag(seed, nodes, edges, sources, sinks).map_err(input_err)?;
            let t0 = Instant::now();
            let normalized = problem.normalize_rates();
            let topo = normalized.topo_sort().map_err(input_err)?;
            let forest = pathgain::forest::transform(&normalized, &topo);
            let t_transform = t0.elapsed();

            let t1 = Instant::now();
            let pf = match build_path_formulation(&problem) {
                Ok(pf) => pf,
                Err(EquationsError::UnsatisfiableDemand { sink, demanded }) => {
                    println!(
                        "instance unsatisfiable (sink {} cannot reach source {}); nothing to time",
                        sink, demanded
                    );
                    return Ok(ExitCode::SUCCESS);
                }
                Err(e) => return Err(input_err(e)),
            };
            let t_equations = t1.elapsed();

            let t2 = Instant::now();
            let result = linear_eliminate(&pf.system);
            let t_simplify = t2.elapsed();

            println!(
                "bench seed={} nodes={} edges={} sources={} sinks={}",
                seed, nodes, edges, sources, sinks
            );
            println!(
                "transform: {:.3}s ({} tree nodes, {} leaf variables)",
                t_transform.as_secs_f64(),
                forest.nodes.len(),
                forest.leaf_vars.len()
            );
            println!(
                "equations: {:.3}s ({} variables, {} equations: {} linear, {} quadratic)",
                t_equations.as_secs_f64(),
                pf.system.variables.len(),
                pf.system.equations.len(),
                pf.system.linear_count(),
                pf.system.quadratic_count()
            );
            println!(
                "simplify:  {:.3}s ({} variables, {} equations left; verdict {})",
                t_simplify.as_secs_f64(),
                result.reduced.variables.len(),
                result.reduced.equations.len(),
                result.verdict.render()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

enum Comparison {
    Agree { solvable: bool, witness_ok: bool },
    Disagree,
}

/// Solves one instance through both formulations and, when the path-gain
/// route finds a witness, insists the recovered code verifies at every sink.
fn compare_once(
    problem: &Problem,
    field: &FieldSpec,
    budget: u64,
) -> Result<Comparison, SolveError> {
    let path_report = pathgain::solve::solvable_over(
        problem,
        field,
        budget,
        DEFAULT_BRANCH_DEPTH,
        DEFAULT_BRANCH_WIDTH,
    )?;
    let km = build_km_system(problem);
    let km_solvable = brute_force(&km, field, SolveMode::First, budget)?
        .first()
        .is_some();
    if path_report.solvable != km_solvable {
        return Ok(Comparison::Disagree);
    }
    let witness_ok = match path_report.witness {
        Some(solution) => match derive_code(problem, &solution) {
            Ok(code) => verify_code(problem, &code).pass(),
            Err(_) => false,
        },
        None => true,
    };
    Ok(Comparison::Agree { solvable: path_report.solvable, witness_ok })
}

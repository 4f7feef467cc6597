use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use uniqcube::cube::{level_set, parse_vertex_list, LevelSpec, Vertex};
use uniqcube::extremal::{
    g_exact, kleitman_spencer_g2, pairwise_covering_g2, result_csv_row, result_json, u_exact, ExtremalOutcome,
    SearchBudget, RESULT_CSV_HEADER,
};
use uniqcube::ising::{
    curve_csv, fit_homogeneous, fit_mle, prob_uniqueness_curve, sample_from, FitStatus, HomogeneousParams, Sample,
};
use uniqcube::levels::{polygon_csv, polygon_json, polygon_points};
use uniqcube::uniqueness::{Problem, Space, UniquenessVerdict};
use uniqcube::Error;
use uniqcube_cli::{exit_code, parse_k_range, parse_list, run_suite, Status, Suite};

const EXIT_NEGATIVE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "uniqcube", version, about = "Sets of uniqueness for low-degree functions on the hypercube")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a point set is a set of uniqueness.
    Uniq {
        #[arg(short)]
        k: u32,
        #[arg(short)]
        q: u32,
        /// Comma-separated Hamming levels of the set.
        #[arg(long, conflicts_with = "points", required_unless_present = "points")]
        levels: Option<String>,
        /// Base point the levels are measured from (default all minus).
        #[arg(long, requires = "levels", allow_hyphen_values = true)]
        base: Option<String>,
        /// Comma-separated vertices such as "---,+++".
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
        #[arg(long, value_enum, default_value_t = SpaceArg::Cone)]
        space: SpaceArg,
    },
    /// Run a verification suite over a range of dimensions.
    Verify {
        #[arg(value_parser = ["level-theorem", "polygon", "remarks", "bounds"])]
        suite: String,
        /// Inclusive range such as 3..6.
        #[arg(long = "k")]
        k: String,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Exhaustive minimum set of uniqueness (u) or subcube transversal (g).
    Extremal {
        #[arg(value_enum)]
        quantity: QuantityArg,
        #[arg(short)]
        k: u32,
        #[arg(short)]
        q: u32,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Ising model fitting and simulation.
    Ising {
        #[command(subcommand)]
        command: IsingCommand,
    },
    /// The projected binomial polygon P_0..P_k.
    Polygon {
        #[arg(short)]
        k: u32,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum IsingCommand {
    /// Maximum likelihood fit of a sample file.
    Fit {
        #[arg(long)]
        sample: PathBuf,
        /// Expected dimension; checked against the file.
        #[arg(short)]
        k: Option<u32>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Fit only the uniform field and coupling.
        #[arg(long)]
        homogeneous: bool,
    },
    /// Draw a sample from the homogeneous model.
    Simulate {
        #[arg(short)]
        k: u32,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Monte Carlo probability that the sample support is a set of uniqueness.
    Curve {
        #[arg(short)]
        k: u32,
        #[arg(short)]
        q: u32,
        /// Comma-separated sample sizes.
        #[arg(long)]
        n: String,
        #[arg(long, default_value_t = 1000)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(clap::Args)]
struct ModelArgs {
    /// Uniform field on every coordinate.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    field: f64,
    /// Coupling on every pair.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
}

#[derive(clap::Args)]
struct BudgetArgs {
    /// Search nodes (g) or canonical candidates (u) before giving up.
    #[arg(long)]
    budget: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<u64>,
}

impl BudgetArgs {
    fn apply(&self, mut b: SearchBudget) -> SearchBudget {
        if let Some(w) = self.budget {
            b.max_work = w;
        }
        if let Some(t) = self.time_limit {
            b.time_limit = Some(Duration::from_secs(t));
        }
        b
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Linear,
    Cone,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    U,
    G,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("UNIQCUBE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| format!("UNIQCUBE_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("UNIQCUBE_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

// Write errors (a closed pipe) are not worth a panic.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &serde_json::Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("json values serialize")));
}

fn run(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Uniq { k, q, levels, base, points, space } => {
            let points: Vec<Vertex> = match (levels, points) {
                (Some(levels), _) => {
                    let levels = parse_list::<u32>(&levels)?;
                    let spec = match base {
                        Some(b) => LevelSpec::with_base(b.parse()?, levels)?,
                        None => LevelSpec::new(k, levels)?,
                    };
                    if spec.k != k {
                        return Err(Error::DimensionMismatch { left: k, right: spec.k });
                    }
                    level_set(&spec)?
                }
                (None, Some(p)) => parse_vertex_list(&p)?,
                (None, None) => unreachable!("clap requires one of --levels/--points"),
            };
            if let Some(p) = points.iter().find(|p| p.dim() != k) {
                return Err(Error::DimensionMismatch { left: k, right: p.dim() });
            }
            let space = match space {
                SpaceArg::Linear => Space::Linear,
                SpaceArg::Cone => Space::Cone,
            };
            let start = Instant::now();
            let verdict = Problem { k, q, points: points.clone(), space }.solve()?;
            let elapsed = start.elapsed();
            let (name, witness) = match &verdict {
                UniquenessVerdict::Unique => ("Unique", None),
                UniquenessVerdict::NotUnique { witness } => ("NotUnique", Some(witness.to_json())),
            };
            print_json(&json!({
                "k": k,
                "q": q,
                "space": if space == Space::Linear { "linear" } else { "cone" },
                "points": points.len(),
                "verdict": name,
                "witness": witness,
                "elapsed_ms": elapsed.as_secs_f64() * 1e3,
            }));
            Ok(if verdict.is_unique() { 0 } else { EXIT_NEGATIVE })
        }
        Command::Verify { suite, k, budget } => {
            let suite: Suite = suite.parse()?;
            let ks = parse_k_range(&k)?;
            let checks = run_suite(suite, ks, &budget.apply(SearchBudget::for_u()))?;
            for c in &checks {
                let tag = match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Skipped => "SKIP",
                };
                emit(&format!("{tag} k={} {}: {}\n", c.k, c.name, c.detail));
            }
            let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
            let skipped = checks.iter().filter(|c| c.status == Status::Skipped).count();
            emit(&format!("{} checks, {failed} failed, {skipped} skipped\n", checks.len()));
            Ok(exit_code(&checks))
        }
        Command::Extremal { quantity, k, q, budget, format } => {
            let outcome = match quantity {
                QuantityArg::U => u_exact(k, q, &budget.apply(SearchBudget::for_u()))?,
                QuantityArg::G => g_exact(k, q, &budget.apply(SearchBudget::for_g()))?,
            };
            match outcome {
                ExtremalOutcome::Found(r) => {
                    if format == Format::Csv {
                        emit(&format!("{RESULT_CSV_HEADER}\n{}\n", result_csv_row(&r)));
                    } else {
                        let mut v = result_json(&r);
                        if matches!(quantity, QuantityArg::G) && q == 2 {
                            v["formula"] = json!(kleitman_spencer_g2(k));
                            v["pairwise_covering"] = json!(pairwise_covering_g2(k));
                        }
                        print_json(&v);
                    }
                    Ok(0)
                }
                ExtremalOutcome::Unknown { quantity, k, q, lower, upper } => {
                    print_json(&json!({
                        "quantity": quantity.as_str(),
                        "k": k,
                        "q": q,
                        "status": "unknown",
                        "lower": lower,
                        "upper": upper,
                    }));
                    Ok(EXIT_BUDGET)
                }
            }
        }
        Command::Ising { command } => run_ising(command),
        Command::Polygon { k, format } => {
            let points = polygon_points(k)?;
            match format {
                Format::Csv => emit(&polygon_csv(&points)),
                Format::Json => print_json(&polygon_json(&points)),
            }
            Ok(0)
        }
    }
}

fn run_ising(cmd: IsingCommand) -> Result<u8, Error> {
    match cmd {
        IsingCommand::Fit { sample, k, tol, max_iter, homogeneous } => {
            let text = std::fs::read_to_string(&sample)
                .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", sample.display())))?;
            let s = Sample::parse(&text)?;
            if let Some(k) = k {
                if k != s.dim() {
                    return Err(Error::DimensionMismatch { left: k, right: s.dim() });
                }
            }
            let status = if homogeneous {
                let r = fit_homogeneous(&s, tol, max_iter)?;
                print_json(&serde_json::to_value(&r).expect("serializable"));
                r.status
            } else {
                let r = fit_mle(&s, tol, max_iter)?;
                print_json(&r.to_json());
                r.status
            };
            Ok(match status {
                FitStatus::Fitted => 0,
                FitStatus::NonExistent => EXIT_NEGATIVE,
                FitStatus::Budget => EXIT_BUDGET,
            })
        }
        IsingCommand::Simulate { k, n, seed, model } => {
            let p = HomogeneousParams { b: model.field, beta: model.beta }.to_ising(k)?;
            emit(&sample_from(&p, n, seed)?.to_text());
            Ok(0)
        }
        IsingCommand::Curve { k, q, n, reps, seed, model } => {
            let p = HomogeneousParams { b: model.field, beta: model.beta }.to_ising(k)?;
            let ns = parse_list::<u64>(&n)?;
            emit(&curve_csv(&prob_uniqueness_curve(k, q, &p, &ns, reps, seed)?));
            Ok(0)
        }
    }
}

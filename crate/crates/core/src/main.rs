use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use omapf::bench::{self, BenchSpec, MapSource};
use omapf::io;
use omapf::sim::{run_online, RunFailure};
use omapf::{Error, HeuristicKind, SolverConfig, Variant};

const EXIT_USAGE: u8 = 1;
const EXIT_UNSOLVABLE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "omapf", version, about = "Online multi-agent path finding with sustainable replanning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a map, scenario files and a manifest.
    Gen(GenArgs),
    /// Run one online instance and print its report as JSON.
    Solve(SolveArgs),
    /// Run every scenario under several solvers and write CSV/Markdown tables.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct GenArgs {
    /// Map file; a generated grid is used when absent.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    width: u32,
    #[arg(long, default_value_t = 32)]
    height: u32,
    /// Fraction of blocked interior cells for a generated grid.
    #[arg(long, default_value_t = 0.0)]
    density: f64,
    /// Agent counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "40,60")]
    agents: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    instances: usize,
    #[arg(long, default_value_t = 1)]
    start_min: u32,
    #[arg(long, default_value_t = 100)]
    start_max: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl GenArgs {
    fn spec(&self, solvers: Vec<Variant>, time_limit: f64, threads: Option<usize>) -> BenchSpec {
        let map = match &self.map {
            Some(path) => MapSource::File { path: path.clone() },
            None if self.density > 0.0 => MapSource::Obstacles {
                width: self.width,
                height: self.height,
                density: self.density,
            },
            None => MapSource::Open {
                width: self.width,
                height: self.height,
            },
        };
        BenchSpec {
            maps: vec![map],
            agent_counts: self.agents.clone(),
            instances: self.instances,
            start_times: (self.start_min, self.start_max),
            time_limit,
            seed: self.seed,
            solvers,
            heuristic: HeuristicKind::Manhattan,
            threads,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    scen: PathBuf,
    #[arg(long, default_value = "a4")]
    solver: Variant,
    /// Seconds for the whole run.
    #[arg(long, default_value_t = 30.0)]
    time_limit: f64,
    #[arg(long, default_value = "manhattan")]
    heuristic: HeuristicKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one JSON line per iteration with every agent's plan.
    #[arg(long)]
    plan_dump: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory written by `gen`; scenarios are generated in memory when absent.
    #[arg(long)]
    scen: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "a1,a2,a3,a4")]
    solver: Vec<Variant>,
    #[arg(long, default_value_t = 30.0)]
    time_limit: f64,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    gen: GenArgs,
}

fn main() -> ExitCode {
    // clap's own exit code 2 would read as "unsolvable"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(args) => gen(args),
        Command::Solve(args) => solve(args),
        Command::Bench(args) => run_bench(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("omapf: {e}");
            ExitCode::from(match e {
                Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
                Error::Unsolvable(_) => EXIT_UNSOLVABLE,
                Error::Timeout => EXIT_TIMEOUT,
                _ => EXIT_USAGE,
            })
        }
    }
}

fn gen(args: GenArgs) -> omapf::Result<ExitCode> {
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("scenarios"));
    let spec = args.spec(Variant::ALL.to_vec(), 30.0, None);
    let manifest = bench::gen_scenarios(&spec, &out)?;
    eprintln!("wrote {} scenarios to {}", manifest.scenarios.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn solve(args: SolveArgs) -> omapf::Result<ExitCode> {
    let instance = io::load_instance(&args.map, &args.scen)?;
    args.heuristic.validate(&instance.graph)?;
    let config = SolverConfig {
        variant: args.solver,
        heuristic: args.heuristic,
        time_limit: args.time_limit,
        seed: args.seed,
    };
    let report = run_online(&instance, &config)?;
    let json = report.to_json() + "\n";
    match &args.out {
        Some(path) => io::write_text(path, &json)?,
        None => print!("{json}"),
    }
    if let Some(path) = &args.plan_dump {
        io::write_text(path, &report.plan_dump())?;
    }
    Ok(match report.failure {
        None => ExitCode::SUCCESS,
        Some(RunFailure::Unsolvable) => ExitCode::from(EXIT_UNSOLVABLE),
        Some(RunFailure::Timeout) => ExitCode::from(EXIT_TIMEOUT),
    })
}

fn run_bench(args: BenchArgs) -> omapf::Result<ExitCode> {
    let (mut spec, cases) = match &args.scen {
        Some(dir) => bench::load_cases(dir)?,
        None => {
            let spec = args.gen.spec(args.solver.clone(), args.time_limit, args.threads);
            let cases = bench::generate_cases(&spec)?;
            (spec, cases)
        }
    };
    spec.solvers = args.solver.clone();
    spec.time_limit = args.time_limit;
    spec.threads = args.threads;
    let out_dir = args.gen.out.clone().unwrap_or_else(|| PathBuf::from("bench-out"));
    let output = bench::run_bench(&spec, &cases)?;
    let csv = bench::rows_csv(&output.rows);
    io::write_text(&out_dir.join("results.csv"), &csv)?;
    io::write_text(&out_dir.join("results.md"), &bench::markdown_tables(&output.rows))?;
    let runs = serde_json::to_string_pretty(&output.runs).expect("runs serialize");
    io::write_text(&out_dir.join("runs.json"), &(runs + "\n"))?;
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

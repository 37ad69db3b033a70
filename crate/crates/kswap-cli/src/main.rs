//! kswap: exact k-swap local search for makespan scheduling.
//!
//! Exit codes: 0 success, 2 usage or malformed input, 3 exceeded work
//! budget or iteration cap, 4 failed verification or validation.

use clap::{Parser, Subcommand, ValueEnum};
use kswap::analysis;
use kswap::error::Error;
use kswap::experiments::{self, ExperimentConfig};
use kswap::instance::{self, parse_rational, BasePattern, GenKind, GeneratorConfig};
use kswap::neighborhood::{self, PivotRule, DEFAULT_WORK_BUDGET};
use kswap::oracle;
use kswap::rng;
use kswap::schedule::{parse_schedule, write_schedule};
use kswap::search::{run, InitStrategy, SearchConfig};
use kswap::trace::{parse_trace, JsonlSink, NullSink, TraceSink};
use kswap::{Dyadic, Instance};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "kswap",
    version,
    about = "k-swap local search on identical machines, with exact dyadic arithmetic"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Uniform,
    Smoothed,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance as JSON.
    Gen {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Perturbation magnitude phi >= 1 as "a/b", decimal, or integer
        /// (smoothed only).
        #[arg(long)]
        phi: Option<String>,
        /// File with one base b_j per line, rationals in [0, 1 - 1/phi].
        #[arg(long)]
        bases_file: Option<PathBuf>,
        /// Built-in base layout: zero, clustered, or spread.
        #[arg(long, conflicts_with = "bases_file")]
        base_pattern: Option<String>,
        #[arg(long)]
        seed: u64,
        /// Grid resolution: processing times are multiples of 2^-scale.
        #[arg(long, default_value_t = 53)]
        scale_log2: u32,
        #[arg(long)]
        label: Option<String>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run local search to a certified local optimum.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        k: usize,
        /// all-on-one, round-robin, lpt, or random (random needs --seed).
        #[arg(long, default_value = "lpt")]
        init: String,
        /// Start from this schedule JSON instead of --init.
        #[arg(long, conflicts_with = "init")]
        init_file: Option<PathBuf>,
        /// first, best, or random (random needs --seed).
        #[arg(long, default_value = "first")]
        pivot: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the run's trace as JSONL.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Write run statistics as JSON.
        #[arg(long)]
        stats_out: Option<PathBuf>,
        /// Write the final schedule as JSON.
        #[arg(long)]
        schedule_out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_WORK_BUDGET)]
        work_budget: u64,
        #[arg(long)]
        iteration_cap: Option<u64>,
        /// Skip the closing brute-force certification.
        #[arg(long)]
        no_certify: bool,
    },
    /// Compute delta_min with its witness sets.
    Deltamin {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        k: usize,
        /// Recompute via the independent reference enumeration and compare.
        #[arg(long)]
        cross_check: bool,
        #[arg(long, default_value_t = DEFAULT_WORK_BUDGET)]
        work_budget: u64,
    },
    /// Check a schedule for k-swap local optimality.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_WORK_BUDGET)]
        work_budget: u64,
    },
    /// Run a seeded trial grid from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Replay a trace and validate every recorded invariant.
    ValidateTrace {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        /// Must match the k recorded in the trace header.
        #[arg(long)]
        k: usize,
        /// Write the report JSON here as well as stdout.
        #[arg(long)]
        report_out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_WORK_BUDGET)]
        work_budget: u64,
    },
}

fn read_instance(path: &Path) -> Result<Instance, Error> {
    instance::parse_instance(&fs::read_to_string(path)?)
}

fn print_dyadic(label: &str, d: Dyadic) {
    println!("{label} = {} (as {})", d.to_f64(), d.reduced_string());
}

fn init_strategy(name: &str, seed: Option<u64>) -> Result<InitStrategy, Error> {
    match name {
        "all-on-one" => Ok(InitStrategy::AllOnOne),
        "round-robin" => Ok(InitStrategy::RoundRobin),
        "lpt" => Ok(InitStrategy::Lpt),
        "random" => seed
            .map(|s| InitStrategy::Random { seed: s })
            .ok_or_else(|| Error::InvalidArgument("--init random needs --seed".into())),
        other => Err(Error::InvalidArgument(format!("unknown init strategy {other:?}"))),
    }
}

fn pivot_rule(name: &str, seed: Option<u64>) -> Result<PivotRule, Error> {
    match name {
        "first" => Ok(PivotRule::First),
        "best" => Ok(PivotRule::Best),
        "random" => seed
            .map(|s| PivotRule::Random { seed: rng::splitmix64(s) })
            .ok_or_else(|| Error::InvalidArgument("--pivot random needs --seed".into())),
        other => Err(Error::InvalidArgument(format!("unknown pivot rule {other:?}"))),
    }
}

fn cmd_gen(
    kind: KindArg,
    n: usize,
    m: usize,
    phi: Option<String>,
    bases_file: Option<PathBuf>,
    base_pattern: Option<String>,
    seed: u64,
    scale_log2: u32,
    label: Option<String>,
    out: Option<PathBuf>,
) -> Result<u8, Error> {
    let kind = match kind {
        KindArg::Uniform => {
            if phi.is_some() || bases_file.is_some() || base_pattern.is_some() {
                return Err(Error::InvalidArgument(
                    "--phi, --bases-file, and --base-pattern apply to --kind smoothed only".into(),
                ));
            }
            GenKind::Uniform
        }
        KindArg::Smoothed => {
            let phi_text = phi.ok_or_else(|| {
                Error::InvalidArgument("--kind smoothed needs --phi".into())
            })?;
            let phi = parse_rational(&phi_text)?;
            let bases = match (&bases_file, &base_pattern) {
                (Some(path), None) => fs::read_to_string(path)?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(parse_rational)
                    .collect::<Result<Vec<_>, _>>()?,
                (None, pattern) => {
                    let pattern = pattern.as_deref().unwrap_or("zero");
                    BasePattern::parse(pattern)?.bases(n, &phi)
                }
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            if bases.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "need {n} bases, got {}",
                    bases.len()
                )));
            }
            GenKind::Smoothed { phi, bases }
        }
    };
    let mut inst = instance::generate(&GeneratorConfig { n, m, scale_log2, seed, kind })?;
    if let Some(label) = label {
        inst = Instance::new(m, scale_log2, inst.job_nums().to_vec(), label)?;
    }
    let text = instance::write_instance(&inst);
    match out {
        Some(path) => {
            fs::write(&path, text)?;
            println!("wrote {} (n = {n}, m = {m}, scale 2^-{scale_log2})", path.display());
        }
        None => print!("{text}"),
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    instance: PathBuf,
    k: usize,
    init: String,
    init_file: Option<PathBuf>,
    pivot: String,
    seed: Option<u64>,
    trace_out: Option<PathBuf>,
    stats_out: Option<PathBuf>,
    schedule_out: Option<PathBuf>,
    work_budget: u64,
    iteration_cap: Option<u64>,
    no_certify: bool,
) -> Result<u8, Error> {
    let inst = read_instance(&instance)?;
    let init = match init_file {
        Some(path) => {
            let sched = parse_schedule(&fs::read_to_string(path)?, &inst)?;
            InitStrategy::File { assignment: sched.assignment }
        }
        None => init_strategy(&init, seed)?,
    };
    let config = SearchConfig {
        k,
        init,
        pivot: pivot_rule(&pivot, seed)?,
        iteration_cap,
        work_budget,
    };

    let mut file_sink = match &trace_out {
        Some(path) => Some(JsonlSink::new(BufWriter::new(fs::File::create(path)?))),
        None => None,
    };
    let sink: &mut dyn TraceSink = match &mut file_sink {
        Some(s) => s,
        None => &mut NullSink,
    };
    let (sched, stats) = run(&inst, &config, sink)?;
    if let Some(s) = file_sink {
        s.into_inner().flush()?;
    }

    println!(
        "T = {} iterations (type1 {}, type2 {}, jumps {})",
        stats.iterations, stats.type1_count, stats.type2_count, stats.jump_count
    );
    print_dyadic("makespan", stats.final_makespan);
    match stats.delta_min {
        Some(dm) => print_dyadic("delta_min", dm),
        None => println!(
            "delta_min unavailable: {}",
            stats.delta_min_note.as_deref().unwrap_or("unknown")
        ),
    }
    if let Some(path) = stats_out {
        let mut text = serde_json::to_string_pretty(&stats)?;
        text.push('\n');
        fs::write(path, text)?;
    }
    if let Some(path) = schedule_out {
        fs::write(path, write_schedule(&sched))?;
    }
    if no_certify {
        println!("certification skipped (--no-certify)");
        return Ok(0);
    }
    match oracle::verify_local_opt(&inst, &sched, k, work_budget)? {
        None => {
            println!("certified {k}-swap local optimum");
            Ok(0)
        }
        Some(mv) => {
            println!("NOT a local optimum: improving move {}", serde_json::to_string(&mv)?);
            Ok(EXIT_VALIDATION)
        }
    }
}

fn cmd_deltamin(
    instance: PathBuf,
    k: usize,
    cross_check: bool,
    work_budget: u64,
) -> Result<u8, Error> {
    let inst = read_instance(&instance)?;
    match neighborhood::delta_min(&inst, k, work_budget) {
        Ok(dm) => {
            print_dyadic("delta_min", dm.value);
            println!("witness A = {:?}, B = {:?}", dm.witness_a, dm.witness_b);
            if cross_check {
                let reference = oracle::delta_min_reference(&inst, k, work_budget)?;
                if reference != dm.value {
                    println!(
                        "cross-check DISAGREES: reference found {} (as {})",
                        reference.to_f64(),
                        reference.reduced_string()
                    );
                    return Ok(EXIT_VALIDATION);
                }
                println!("cross-check agrees (independent ternary enumeration)");
            }
            Ok(0)
        }
        Err(Error::ZeroDelta { a, b }) => {
            println!("delta_min = 0: ties present, p(A) = p(B) for A = {a:?}, B = {b:?}");
            println!("smoothed bounds do not apply to this instance");
            if cross_check {
                let reference = oracle::delta_min_reference(&inst, k, work_budget)?;
                if !reference.is_zero() {
                    println!(
                        "cross-check DISAGREES: reference found {} (as {})",
                        reference.to_f64(),
                        reference.reduced_string()
                    );
                    return Ok(EXIT_VALIDATION);
                }
                println!("cross-check agrees (independent ternary enumeration)");
            }
            Ok(0)
        }
        Err(e) => Err(e),
    }
}

fn cmd_verify(
    instance: PathBuf,
    schedule: PathBuf,
    k: usize,
    work_budget: u64,
) -> Result<u8, Error> {
    let inst = read_instance(&instance)?;
    let sched = parse_schedule(&fs::read_to_string(schedule)?, &inst)?;
    match oracle::verify_local_opt(&inst, &sched, k, work_budget)? {
        None => {
            println!("certified: no improving move with |A| + |B| <= {k} exists");
            Ok(0)
        }
        Some(mv) => {
            println!("counterexample: {}", serde_json::to_string(&mv)?);
            Ok(EXIT_VALIDATION)
        }
    }
}

fn cmd_experiment(config: PathBuf) -> Result<u8, Error> {
    let cfg = ExperimentConfig::parse(&fs::read_to_string(config)?)?;
    let result = experiments::run_batch(&cfg)?;
    fs::write(&cfg.trials_out, experiments::trials_csv(&result.records))?;
    fs::write(&cfg.summary_out, experiments::summary_csv(&result))?;
    let violated: u64 = result
        .records
        .iter()
        .map(|r| u64::from(r.violations.unwrap_or(0) > 0))
        .sum();
    println!(
        "ran {} trials over {} cells: wrote {} and {}",
        result.records.len(),
        result.cells.len(),
        cfg.trials_out,
        cfg.summary_out
    );
    if violated > 0 {
        println!("{violated} trials had validation violations");
        return Ok(EXIT_VALIDATION);
    }
    Ok(0)
}

fn cmd_validate_trace(
    trace: PathBuf,
    instance: PathBuf,
    k: usize,
    report_out: Option<PathBuf>,
    work_budget: u64,
) -> Result<u8, Error> {
    let inst = read_instance(&instance)?;
    let trace = parse_trace(BufReader::new(fs::File::open(trace)?))?;
    if trace.meta.k != k {
        return Err(Error::InvalidArgument(format!(
            "trace was produced with k = {}, not k = {k}",
            trace.meta.k
        )));
    }
    let report = analysis::validate(&inst, &trace, work_budget)?;
    let json = report.to_json();
    print!("{json}");
    if let Some(path) = report_out {
        fs::write(path, &json)?;
    }
    if report.passed {
        Ok(0)
    } else {
        Ok(EXIT_VALIDATION)
    }
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.cmd {
        Cmd::Gen {
            kind,
            n,
            m,
            phi,
            bases_file,
            base_pattern,
            seed,
            scale_log2,
            label,
            out,
        } => cmd_gen(kind, n, m, phi, bases_file, base_pattern, seed, scale_log2, label, out),
        Cmd::Run {
            instance,
            k,
            init,
            init_file,
            pivot,
            seed,
            trace_out,
            stats_out,
            schedule_out,
            work_budget,
            iteration_cap,
            no_certify,
        } => cmd_run(
            instance,
            k,
            init,
            init_file,
            pivot,
            seed,
            trace_out,
            stats_out,
            schedule_out,
            work_budget,
            iteration_cap,
            no_certify,
        ),
        Cmd::Deltamin { instance, k, cross_check, work_budget } => {
            cmd_deltamin(instance, k, cross_check, work_budget)
        }
        Cmd::Verify { instance, schedule, k, work_budget } => {
            cmd_verify(instance, schedule, k, work_budget)
        }
        Cmd::Experiment { config } => cmd_experiment(config),
        Cmd::ValidateTrace { trace, instance, k, report_out, work_budget } => {
            cmd_validate_trace(trace, instance, k, report_out, work_budget)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

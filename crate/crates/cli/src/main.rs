use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use q4rpd::benchmark::run_benchmark;
use q4rpd::config::{BackendChoice, RunConfig};
use q4rpd::dataset::load_dataset_instance;
use q4rpd::generator::{generate_instance, InstanceProfile, PROFILE_NAMES};
use q4rpd::io::{instance_to_json, read_instance, read_solution, to_json, write_text, IoError, SolutionDoc, ValidationDoc};
use q4rpd::svg::render_svg;
use q4rpd_core::model::ProblemInstance;
use q4rpd_core::orchestrator::run;
use q4rpd_core::validation::validate_solution;

#[derive(Parser)]
#[command(name = "q4rpd", version, about = "Heterogeneous-fleet delivery routing with top-priority deadlines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolveOptions {
    /// JSON or TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<BackendChoice>,
    #[arg(long)]
    exact_threshold: Option<usize>,
    /// Print wall-clock times to stderr.
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance for a named profile.
    Generate {
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance and write the solution JSON.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        opts: SolveOptions,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve, validate and compare a set of instances.
    Benchmark {
        /// Instance files; the six generated profiles when empty.
        instances: Vec<PathBuf>,
        /// Restrict the generated set to these profiles.
        #[arg(long)]
        profile: Vec<String>,
        /// Read instances by profile name from this directory instead.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Seed for generated instances.
        #[arg(long, default_value_t = 0)]
        instance_seed: u64,
        #[command(flatten)]
        opts: SolveOptions,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a solution as SVG.
    Plot {
        solution: PathBuf,
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check a solution against its instance.
    Validate { solution: PathBuf, instance: PathBuf },
}

enum Failure {
    Validation(String),
    Infeasible(String),
    Io(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Io(e.to_string())
    }
}

fn warn_ignored(source: &Path, ignored: &[String]) {
    for field in ignored {
        eprintln!("warning: {}: ignored field `{field}`", source.display());
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => Ok(write_text(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(opts: &SolveOptions) -> Result<RunConfig, Failure> {
    let mut cfg = match &opts.config {
        Some(p) => {
            let (cfg, ignored) = RunConfig::load(p)?;
            warn_ignored(p, &ignored);
            cfg
        }
        None => RunConfig::default(),
    };
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(b) = opts.backend {
        cfg.backend = b;
    }
    if let Some(t) = opts.exact_threshold {
        cfg.exact_threshold = t;
    }
    Ok(cfg)
}

fn load_instance(path: &Path) -> Result<ProblemInstance, Failure> {
    let (inst, ignored) = read_instance(path)?;
    warn_ignored(path, &ignored);
    Ok(inst)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate { profile, seed, out } => {
            let p = InstanceProfile::named(&profile)
                .map_err(|e| Failure::Infeasible(e.to_string()))?
                .with_seed(seed);
            let inst = generate_instance(&p).map_err(|e| Failure::Infeasible(e.to_string()))?;
            emit(out.as_deref(), &instance_to_json(&inst))
        }
        Command::Solve { instance, opts, out } => {
            let cfg = load_config(&opts)?;
            let inst = load_instance(&instance)?;
            let start = Instant::now();
            let sol = run(&inst, &cfg.to_core()).map_err(|e| Failure::Infeasible(e.to_string()))?;
            if opts.timings {
                eprintln!("solved in {:.3}s", start.elapsed().as_secs_f64());
            }
            let report = validate_solution(&sol, &inst).map_err(|e| Failure::Validation(e.to_string()))?;
            emit(out.as_deref(), &to_json(&SolutionDoc::from_solution(&sol, Some(&report))))?;
            if report.is_valid() {
                Ok(())
            } else {
                Err(Failure::Validation(ValidationDoc::from_report(&report).violations.join("; ")))
            }
        }
        Command::Benchmark {
            instances,
            profile,
            dataset,
            instance_seed,
            opts,
            out,
        } => {
            let cfg = load_config(&opts)?;
            let names: Vec<String> = if profile.is_empty() {
                PROFILE_NAMES.iter().map(|s| s.to_string()).collect()
            } else {
                profile
            };
            let mut set = Vec::new();
            if !instances.is_empty() {
                for p in &instances {
                    let name = p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                    set.push((name, load_instance(p)?));
                }
            } else if let Some(dir) = &dataset {
                for n in &names {
                    let (inst, ignored) = load_dataset_instance(dir, n).map_err(|e| Failure::Io(e.to_string()))?;
                    warn_ignored(dir, &ignored);
                    set.push((n.clone(), inst));
                }
            } else {
                for n in &names {
                    let p = InstanceProfile::named(n).map_err(|e| Failure::Infeasible(e.to_string()))?;
                    let inst = generate_instance(&p.with_seed(instance_seed))
                        .map_err(|e| Failure::Infeasible(e.to_string()))?;
                    set.push((n.clone(), inst));
                }
            }
            let report = run_benchmark(&set, &cfg.to_core(), opts.timings);
            print!("{}", report.to_table());
            if let Some(p) = &out {
                write_text(p, &report.to_json())?;
            }
            let bad = report.rows.iter().any(|r| {
                r.error.is_some() || [&r.r1, &r.r2, &r.r3, &r.p1, &r.p2].iter().any(|m| m.as_str() == "\u{d7}")
            });
            if bad {
                Err(Failure::Validation("some rows failed".into()))
            } else {
                Ok(())
            }
        }
        Command::Plot { solution, instance, out } => {
            let inst = load_instance(&instance)?;
            let (doc, ignored) = read_solution(&solution)?;
            warn_ignored(&solution, &ignored);
            Ok(write_text(&out, &render_svg(&doc.to_solution(), &inst))?)
        }
        Command::Validate { solution, instance } => {
            let inst = load_instance(&instance)?;
            let (doc, ignored) = read_solution(&solution)?;
            warn_ignored(&solution, &ignored);
            let report =
                validate_solution(&doc.to_solution(), &inst).map_err(|e| Failure::Validation(e.to_string()))?;
            print!("{}", to_json(&ValidationDoc::from_report(&report)));
            if report.is_valid() {
                Ok(())
            } else {
                Err(Failure::Validation("solution violates restrictions".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("validation failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Infeasible(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use stabguard::analysis::{analyze_error, analyze_range, RangeEnv};
use stabguard::experiment::{run_experiment, ExperimentConfig};
use stabguard::fp::{format_float, round_up, Format};
use stabguard::interp::{classify_run, differential_check, parse_input, AssignmentPair};
use stabguard::lang::{arith_to_string, parse_arith, parse_program, print_program, program_json, Program, VarMap};
use stabguard::polygon::Polygon;
use stabguard::semantics::{program_semantics, Flag, SemConfig, DEFAULT_TUPLE_CAP};
use stabguard::transform::{atom_errors, transform_program, unreachable_branches};

const EXIT_USAGE: u8 = 64;
const EXIT_ANALYSIS: u8 = 2;
const EXIT_INVARIANT: u8 = 70;

#[derive(Parser)]
#[command(name = "stabguard", version, about = "Detect and guard unstable floating-point tests")]
struct Cli {
    /// Floating-point format of programs and inputs.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Double)]
    format: FormatArg,
    /// Seed for every randomized command.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Single,
    Double,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Single => Format::SINGLE,
            FormatArg::Double => Format::DOUBLE,
        }
    }
}

#[derive(Args)]
struct RangesArg {
    /// File of `name in [lo, hi]` lines.
    #[arg(long)]
    ranges: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and print its syntax tree as JSON.
    Parse { file: PathBuf },
    /// Parse a program and print it in canonical form.
    Print { file: PathBuf },
    /// Print the conditional tuples of a program as JSON.
    Analyze {
        file: PathBuf,
        /// Prune tuples refuted under these ranges.
        #[arg(long)]
        ranges: Option<PathBuf>,
        /// Largest tuple count allowed.
        #[arg(long, default_value_t = DEFAULT_TUPLE_CAP)]
        cap: usize,
        /// Keep every tuple, including refuted ones.
        #[arg(long)]
        no_prune: bool,
    },
    /// Round-off error bounds: of one expression, or of every guard atom of a program.
    Error {
        #[command(flatten)]
        ranges: RangesArg,
        /// Program file.
        #[arg(required_unless_present = "expr", conflicts_with = "expr")]
        file: Option<PathBuf>,
        /// Arithmetic expression to analyse instead of a program.
        #[arg(long)]
        expr: Option<String>,
    },
    /// Strengthen the guards of a program so unstable tests return warning.
    Transform {
        #[command(flatten)]
        ranges: RangesArg,
        file: PathBuf,
        /// Write the transformed program here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also list branches that can never be taken.
        #[arg(long)]
        unreachable: bool,
    },
    /// Run a program on one input with both evaluators.
    Run {
        file: PathBuf,
        /// Assignments such as `x=0.1, y=3`.
        #[arg(long)]
        input: String,
    },
    /// Compare a program with its transformation on random inputs.
    Check {
        #[command(flatten)]
        ranges: RangesArg,
        file: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Winding-number experiment on a polygon.
    Experiment {
        /// JSON array of [x, y] decimal strings.
        #[arg(long)]
        polygon: PathBuf,
        /// Points per band.
        #[arg(long)]
        points: Option<usize>,
        /// Points sampled in the circumscribing square.
        #[arg(long)]
        square_points: Option<usize>,
        /// Edge distances relative to the polygon scale, decreasing.
        #[arg(long, value_delimiter = ',')]
        bands: Option<Vec<f64>>,
    },
}

enum Failure {
    Usage(String),
    Analysis(String),
    Invariant(String),
}

impl From<stabguard::Error> for Failure {
    fn from(e: stabguard::Error) -> Failure {
        Failure::Analysis(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path, fmt: Format) -> Result<Program, Failure> {
    Ok(parse_program(&read(path)?, fmt)?)
}

fn load_ranges(path: &Path) -> Result<RangeEnv, Failure> {
    Ok(RangeEnv::parse(&read(path)?)?)
}

fn print_json(v: &Value) {
    emit(&serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

/// Writes a line to stdout; a closed pipe ends the output quietly.
fn emit(text: &str) {
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn run(cli: Cli) -> Outcome {
    let fmt: Format = cli.format.into();
    match cli.command {
        Command::Parse { file } => print_json(&program_json(&load_program(&file, fmt)?)),
        Command::Print { file } => emit(&print_program(&load_program(&file, fmt)?)),
        Command::Analyze {
            file,
            ranges,
            cap,
            no_prune,
        } => {
            let p = load_program(&file, fmt)?;
            let mut cfg = match &ranges {
                Some(r) => SemConfig::with_ranges(&p, &load_ranges(r)?)?,
                None => SemConfig::default(),
            };
            cfg.cap = cap;
            cfg.prune = !no_prune;
            let tuples = program_semantics(&p, &cfg)?;
            print_json(&json!({
                "program": p.name,
                "stable": tuples.count(Flag::Stable),
                "unstable": tuples.count(Flag::Unstable),
                "tuples": tuples.to_json(fmt),
            }));
        }
        Command::Error { ranges, file, expr } => {
            let r = load_ranges(&ranges.ranges)?;
            let bound = |eps: &stabguard::fp::Rational| -> Result<String, Failure> {
                Ok(format_float(&round_up(eps, fmt)?, fmt))
            };
            if let Some(text) = expr {
                let a = parse_arith(&text, fmt)?;
                let eps = analyze_error(&a, &r, fmt)?.eps;
                let range = analyze_range(&a, &r, fmt)?;
                print_json(&json!({
                    "expression": arith_to_string(&a, fmt),
                    "eps": bound(&eps)?,
                    "range": [range.lo().to_f64(), range.hi().to_f64()],
                }));
            } else {
                let p = load_program(file.as_deref().expect("clap requires one"), fmt)?;
                let errs = atom_errors(&p, &r)?;
                let atoms = errs
                    .iter()
                    .map(|(a, e)| Ok(json!({"atom": arith_to_string(a, fmt), "eps": bound(&e.eps)?})))
                    .collect::<Result<Vec<_>, Failure>>()?;
                print_json(&json!({"program": p.name, "atoms": atoms}));
            }
        }
        Command::Transform {
            ranges,
            file,
            output,
            unreachable,
        } => {
            let r = load_ranges(&ranges.ranges)?;
            let t = transform_program(&load_program(&file, fmt)?, &r)?;
            let text = print_program(&t);
            match output {
                Some(path) => fs::write(&path, format!("{text}\n"))
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
                None => emit(&text),
            }
            if unreachable {
                for b in unreachable_branches(&t, &r)? {
                    eprintln!("unreachable: conditional {} branch {}", b.conditional, b.branch);
                }
            }
        }
        Command::Run { file, input } => {
            let p = load_program(&file, fmt)?;
            let chi = VarMap::canonical();
            let vals = parse_input(&input, &p.params, fmt)?;
            let rep = classify_run(&p, &AssignmentPair::from_floats(&p.params, &vals, &chi), &chi)?;
            print_json(&rep.to_json(fmt));
        }
        Command::Check { ranges, file, trials } => {
            let r = load_ranges(&ranges.ranges)?;
            let p = load_program(&file, fmt)?;
            let t = transform_program(&p, &r)?;
            let rep = differential_check(&p, &t, &r, trials, cli.seed)?;
            emit(&format!(
                "{} trials, {} unstable, {} warnings",
                rep.trials, rep.unstable, rep.warnings
            ));
            emit(&format!("{} violations", rep.violations));
            if rep.violations > 0 {
                return Err(Failure::Invariant("the transformed program returned an unguarded value".into()));
            }
        }
        Command::Experiment {
            polygon,
            points,
            square_points,
            bands,
        } => {
            let poly = Polygon::from_json(&read(&polygon)?, fmt)?;
            let mut cfg = ExperimentConfig::new(poly, cli.seed);
            if let Some(n) = points {
                cfg.points = n;
            }
            if let Some(n) = square_points {
                cfg.square_points = n;
            }
            if let Some(b) = bands {
                cfg.bands = b;
            }
            let rep = run_experiment(&cfg)?;
            if rep.bands.iter().chain(&rep.square).any(|b| b.transformed_errors > 0 || b.edge_violations > 0) {
                print_json(&serde_json::to_value(&rep).expect("report serializes"));
                return Err(Failure::Invariant("a transformed verdict disagreed with the real one".into()));
            }
            print_json(&serde_json::to_value(&rep).expect("report serializes"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Analysis(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_ANALYSIS)
        }
        Err(Failure::Invariant(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(EXIT_INVARIANT)
        }
    }
}

//! `escape`: batch front end for the measure, generic-group, schedule and
//! escape machinery. Exit status is 0 on success, 1 when a checked property
//! fails or the input is refused, 2 on usage and parse errors.

mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use escape_core::bounds::{
    dlog_schedule, markov_exceed_count, phi, power_threshold_check, tail_bound_check, EscapeSchedule, Schedule,
};
use escape_core::diag::{
    assemble_open_set, escape, escape_family, toy_registry, verify_escape, AssemblyConfig, DiagError, EscapeConfig,
    EscapeTranscript, FiniteOpenSet, GgmTestFamily,
};
use escape_core::ggm::{
    builtin, cdh_success_ggm, dlog_success_ggm, minimal_shoup_constant, n_bit_primes, shoup_audit, GenericProgram,
    Mode, Trials,
};
use escape_core::measure::text::{parse_set, AnySet};
use escape_core::measure::{CylinderSet, ExactRational, Prefix};
use serde_json::{json, Value};

use output::{decimal, emit, rational_cells, Format, Table};

#[derive(Parser)]
#[command(name = "escape", version, about = "Exact measures, generic-group experiments and constructive escape")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact measure of a cylinder-set file.
    Measure {
        file: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Discrete-log success probability averaged over encodings and primes.
    Dlog(ExperimentArgs),
    /// Diffie-Hellman success probability averaged over encodings and primes.
    Cdh(ExperimentArgs),
    /// Compare success at a fixed prime with the C·m²/p bound.
    Audit(AuditArgs),
    /// Build a prefix avoiding a finite set or the assembled test family.
    Diagonalize(DiagonalizeArgs),
    /// Evaluate f(k,d) or the stage cutoff g(m).
    Schedule(ScheduleArgs),
    /// Exact lemma checks.
    Bounds {
        #[command(subcommand)]
        check: BoundsCheck,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SampleMode {
    Exhaustive,
    Sample,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Built-in program (e.g. `const_guess(0)`) or an assembly file.
    #[arg(long)]
    prog: String,
    #[arg(long)]
    n: u32,
    #[arg(long, value_enum, default_value_t = SampleMode::Exhaustive)]
    mode: SampleMode,
    #[arg(long, required_if_eq("mode", "sample"))]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    /// Largest width enumerated exhaustively.
    #[arg(long, default_value_t = escape_core::ggm::DEFAULT_EXHAUSTIVE_CAP)]
    cap: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AuditArgs {
    /// Repeat to audit several programs; the minimal constant covers all of them.
    #[arg(long, required = true)]
    prog: Vec<String>,
    #[arg(long)]
    n: u32,
    /// Group order; every n-bit prime when omitted.
    #[arg(long)]
    modulus: Option<u64>,
    /// Constant in the bound, as an integer or fraction.
    #[arg(long = "C", default_value = "1")]
    constant: ExactRational,
    #[arg(long, default_value_t = escape_core::ggm::DEFAULT_EXHAUSTIVE_CAP)]
    cap: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EscapeModeArg {
    Exact,
    Approx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Pipeline {
    Ggm,
}

#[derive(Clone, Debug)]
enum ScheduleArg {
    Paper,
    Compressed,
    File(PathBuf),
}

fn parse_schedule(s: &str) -> Result<ScheduleArg, String> {
    match s {
        "paper" => Ok(ScheduleArg::Paper),
        "compressed" => Ok(ScheduleArg::Compressed),
        _ => match s.strip_prefix("file:") {
            Some(path) if !path.is_empty() => Ok(ScheduleArg::File(PathBuf::from(path))),
            _ => Err("expected paper, compressed or file:PATH".into()),
        },
    }
}

#[derive(Args)]
struct DiagonalizeArgs {
    /// Finite set file in the cylinder-set text format.
    #[arg(long, conflicts_with = "pipeline", required_unless_present = "pipeline")]
    set: Option<PathBuf>,
    /// Assemble the open set from a test family instead.
    #[arg(long, value_enum)]
    pipeline: Option<Pipeline>,
    #[arg(long)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = EscapeModeArg::Exact)]
    mode: EscapeModeArg,
    /// Stage cutoff for the pipeline: paper, compressed or file:PATH (an f table).
    #[arg(long, value_parser = parse_schedule, default_value = "paper")]
    schedule: ScheduleArg,
    /// Constant of the default schedule.
    #[arg(long = "C", default_value_t = 1)]
    constant: u64,
    /// Offset of the compressed schedule g(m) = m + offset.
    #[arg(long, default_value_t = 1)]
    offset: u64,
    /// Largest encoding width the pipeline materialises.
    #[arg(long, default_value_t = 3)]
    horizon: u32,
    /// Program registry for the pipeline; the toy registry when omitted.
    #[arg(long)]
    prog: Vec<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, requires = "d", required_unless_present = "m")]
    k: Option<u64>,
    #[arg(long, requires = "k")]
    d: Option<u64>,
    #[arg(long = "C", default_value_t = 1)]
    constant: u64,
    /// Evaluate g(m) instead; repeatable.
    #[arg(long, conflicts_with_all = ["k", "d"])]
    m: Vec<u64>,
    #[arg(long, value_parser = parse_schedule, default_value = "paper")]
    schedule: ScheduleArg,
    #[arg(long, default_value_t = 1)]
    offset: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand)]
enum BoundsCheck {
    /// Σ_{k≥n} 1/k^d ≤ 2/n.
    Tail {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 200)]
        terms: u64,
    },
    /// 2^n ≥ n^d for every n in [d², to].
    Power {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        to: u64,
    },
    /// Markov counting bound on a list of values.
    Markov {
        /// Comma-separated rationals.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<ExactRational>,
        #[arg(long)]
        epsilon: ExactRational,
        #[arg(long)]
        alpha: ExactRational,
    },
}

/// A refusal or violated property; exits with status 1.
#[derive(Debug)]
struct Violation(String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Violation {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Measure { file, output } => cmd_measure(&file, &output),
        Command::Dlog(args) => cmd_experiment(&args, false),
        Command::Cdh(args) => cmd_experiment(&args, true),
        Command::Audit(args) => cmd_audit(&args),
        Command::Diagonalize(args) => cmd_diagonalize(&args),
        Command::Schedule(args) => cmd_schedule(&args),
        Command::Bounds { check, output } => cmd_bounds(&check, &output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<Violation>().is_some() => {
            eprintln!("escape: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("escape: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn violated(message: impl Into<String>) -> anyhow::Error {
    Violation(message.into()).into()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_program(spec: &str) -> Result<GenericProgram> {
    let path = Path::new(spec);
    if path.is_file() {
        let prog = GenericProgram::parse(&read(path)?).with_context(|| format!("assembling {spec}"))?;
        prog.validate().with_context(|| format!("validating {spec}"))?;
        Ok(prog)
    } else {
        Ok(builtin(spec)?.program)
    }
}

fn cmd_measure(file: &Path, output: &OutputArgs) -> Result<()> {
    let mut table = Table::new(&["kind", "members", "measure", "measure_num", "measure_den", "measure_decimal"]);
    let (kind, members, measure) = match parse_set(&read(file)?)? {
        AnySet::Binary(s) => ("binary", s.normalized().len(), s.measure()),
        AnySet::Family(s) => ("family", s.normalized().len(), s.measure()),
    };
    let [num, den, dec] = rational_cells(&measure);
    table.push(vec![json!(kind), json!(members), json!(format!("{}/{}", measure.numer(), measure.denom())), num, den, dec]);
    emit(&table.render(output.format), output.out.as_deref())
}

fn cmd_experiment(args: &ExperimentArgs, cdh: bool) -> Result<()> {
    let prog = load_program(&args.prog)?;
    let mode = match args.mode {
        SampleMode::Exhaustive => Mode::Exhaustive { cap: args.cap },
        SampleMode::Sample => Mode::Sampled {
            seed: args.seed.ok_or_else(|| anyhow!("sampled mode needs --seed"))?,
            samples: args.samples,
        },
    };
    let result = if cdh {
        cdh_success_ggm(&prog, args.n, mode)?
    } else {
        dlog_success_ggm(&prog, args.n, mode)?
    };
    let std_error = match result.trials {
        Trials::Exhaustive { .. } => Value::Null,
        Trials::Sampled { std_error, .. } => json!(std_error),
    };
    let mut table = Table::new(&[
        "program",
        "n",
        "modulus",
        "success_num",
        "success_den",
        "success_decimal",
        "m",
        "std_error",
    ]);
    let [num, den, dec] = rational_cells(&result.success_probability);
    table.push(vec![
        json!(prog.name),
        json!(args.n),
        json!("avg"),
        num,
        den,
        dec,
        json!(result.max_queries),
        std_error,
    ]);
    emit(&table.render(args.output.format), args.output.out.as_deref())
}

fn cmd_audit(args: &AuditArgs) -> Result<()> {
    let programs = args.prog.iter().map(|p| load_program(p)).collect::<Result<Vec<_>>>()?;
    let moduli = match args.modulus {
        Some(m) => vec![m],
        None => n_bit_primes(args.n),
    };
    if moduli.is_empty() {
        bail!("there is no {}-bit prime", args.n);
    }
    let mut table = Table::new(&[
        "program",
        "n",
        "modulus",
        "success_num",
        "success_den",
        "success_decimal",
        "m",
        "largest_prime",
        "bound_num",
        "bound_den",
        "bound_decimal",
        "holds",
    ]);
    let mut all_hold = true;
    for prog in &programs {
        for &modulus in &moduli {
            let audit = shoup_audit(prog, args.n, modulus, &args.constant, args.cap)?;
            all_hold &= audit.holds;
            let [num, den, dec] = rational_cells(&audit.success);
            let [bnum, bden, bdec] = rational_cells(&audit.bound);
            table.push(vec![
                json!(prog.name),
                json!(args.n),
                json!(modulus),
                num,
                den,
                dec,
                json!(audit.max_queries),
                json!(audit.largest_prime),
                bnum,
                bden,
                bdec,
                json!(audit.holds),
            ]);
        }
    }
    emit(&table.render(args.output.format), args.output.out.as_deref())?;
    let grid: Vec<(u32, u64)> = moduli.iter().map(|&m| (args.n, m)).collect();
    match minimal_shoup_constant(&programs, &grid, args.cap) {
        Ok(c) => eprintln!("minimal_shoup_constant: {c}"),
        Err(e) => eprintln!("minimal_shoup_constant: unavailable ({e})"),
    }
    if all_hold {
        Ok(())
    } else {
        Err(violated(format!("success exceeds C·m²/p with C = {}", args.constant)))
    }
}

fn escape_config(mode: EscapeModeArg) -> EscapeConfig {
    match mode {
        EscapeModeArg::Exact => EscapeConfig::default(),
        EscapeModeArg::Approx => EscapeConfig::approx(),
    }
}

fn escape_schedule_of(arg: &ScheduleArg, constant: u64, offset: u64) -> Result<EscapeSchedule> {
    Ok(match arg {
        ScheduleArg::Paper => EscapeSchedule::Paper(Schedule::DlogPaper { shoup_constant: constant }),
        ScheduleArg::Compressed => EscapeSchedule::Compressed { offset },
        ScheduleArg::File(path) => EscapeSchedule::Paper(Schedule::parse_table(&read(path)?)?),
    })
}

fn lift(e: DiagError) -> anyhow::Error {
    match e {
        DiagError::MeasureNotBelowOne(m) => violated(format!("refusing to diagonalize: measure {m} is not below 1")),
        other => other.into(),
    }
}

fn transcript_json<P: Prefix>(t: &EscapeTranscript<P>, verified: bool) -> String {
    let steps: Vec<Value> = t
        .steps
        .iter()
        .map(|s| {
            json!({
                "level": s.level,
                "candidates": s.candidates.map(|c| c.to_string()),
                "scanned": s.scanned,
                "chosen_index": s.chosen_index.to_string(),
                "conditional": s.conditional.to_string(),
                "conditional_decimal": decimal(&s.conditional),
                "cell_volume": s.cell_volume.to_string(),
                "prefix": s.prefix.to_string(),
            })
        })
        .collect();
    let doc = json!({
        "mode": format!("{:?}", t.mode).to_lowercase(),
        "initial_measure": t.initial.to_string(),
        "prefix": t.prefix.to_string(),
        "verified": verified,
        "steps": steps,
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("plain values");
    out.push('\n');
    out
}

fn finish<P: Prefix>(t: &EscapeTranscript<P>, set: &CylinderSet<P>, output: &OutputArgs) -> Result<()> {
    let verified = verify_escape(&t.prefix, set) && t.invariant_holds();
    let text = match output.format {
        Format::Csv => t.report(),
        Format::Json => transcript_json(t, verified),
    };
    emit(&text, output.out.as_deref())?;
    if verified {
        Ok(())
    } else {
        Err(violated(format!("escape prefix {} failed verification", t.prefix)))
    }
}

fn cmd_diagonalize(args: &DiagonalizeArgs) -> Result<()> {
    let config = escape_config(args.mode);
    if let Some(path) = &args.set {
        return match parse_set(&read(path)?)? {
            AnySet::Binary(s) => {
                let t = escape(&FiniteOpenSet::new(s.clone()), args.depth, &config).map_err(lift)?;
                finish(&t, &s, &args.output)
            }
            AnySet::Family(s) => {
                let t = escape_family(&FiniteOpenSet::new(s.clone()), args.depth, &config).map_err(lift)?;
                finish(&t, &s, &args.output)
            }
        };
    }
    let programs = if args.prog.is_empty() {
        toy_registry()
    } else {
        args.prog.iter().map(|p| load_program(p)).collect::<Result<Vec<_>>>()?
    };
    let family = GgmTestFamily::new(programs, args.horizon);
    let schedule = escape_schedule_of(&args.schedule, args.constant, args.offset)?;
    let open = assemble_open_set(&family, &AssemblyConfig::new(schedule)).map_err(lift)?;
    eprint!("{}", open.report());
    let t = escape_family(&open, args.depth, &config).map_err(lift)?;
    for (piece, set) in open.piece_sets() {
        if !verify_escape(&t.prefix, set) {
            return Err(violated(format!(
                "escape prefix {} lies in the constraint set for i={}, d={}, n={}",
                t.prefix, piece.i, piece.d, piece.n
            )));
        }
    }
    finish(&t, open.union(), &args.output)
}

fn cmd_schedule(args: &ScheduleArgs) -> Result<()> {
    let text = if args.m.is_empty() {
        let (k, d) = (args.k.expect("clap enforces"), args.d.expect("clap enforces"));
        if k == 0 || d == 0 {
            bail!("k and d must be positive");
        }
        let mut table = Table::new(&["k", "d", "C", "f"]);
        table.push(vec![json!(k), json!(d), json!(args.constant), json!(dlog_schedule(k, d, args.constant).to_string())]);
        table.render(args.output.format)
    } else {
        let schedule = escape_schedule_of(&args.schedule, args.constant, args.offset)?;
        let mut table = Table::new(&["m", "i", "d", "g"]);
        for &m in &args.m {
            if m == 0 {
                bail!("m must be positive");
            }
            let (i, d) = phi(m);
            table.push(vec![json!(m), json!(i), json!(d), json!(schedule.eval(m)?.to_string())]);
        }
        table.render(args.output.format)
    };
    emit(&text, args.output.out.as_deref())
}

fn verdict(holds: bool) -> Value {
    json!(if holds { "holds" } else { "violated" })
}

fn cmd_bounds(check: &BoundsCheck, output: &OutputArgs) -> Result<()> {
    let mut table = Table::new(&["check", "parameters", "value", "bound", "verdict"]);
    let holds = match check {
        BoundsCheck::Tail { n, d, terms } => {
            let r = tail_bound_check(*n, *d, *terms)?;
            let value = &r.lower + &r.remainder;
            table.push(vec![
                json!("tail"),
                json!(format!("n={n} d={d} terms={terms}")),
                decimal(&value),
                json!(r.bound.to_string()),
                verdict(r.holds),
            ]);
            r.holds
        }
        BoundsCheck::Power { d, to } => {
            let holds = power_threshold_check(*d, *to)?;
            table.push(vec![json!("power"), json!(format!("d={d} to={to}")), Value::Null, Value::Null, verdict(holds)]);
            holds
        }
        BoundsCheck::Markov { values, epsilon, alpha } => {
            let r = markov_exceed_count(values, epsilon, alpha)?;
            table.push(vec![
                json!("markov"),
                json!(format!("values={} epsilon={epsilon} alpha={alpha}", values.len())),
                json!(r.count),
                json!(r.bound.to_string()),
                verdict(r.holds),
            ]);
            r.holds
        }
    };
    emit(&table.render(output.format), output.out.as_deref())?;
    if holds {
        Ok(())
    } else {
        Err(violated("bound violated"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use num_traits::One;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn schedule_argument_forms() {
        assert!(matches!(parse_schedule("paper"), Ok(ScheduleArg::Paper)));
        assert!(matches!(parse_schedule("compressed"), Ok(ScheduleArg::Compressed)));
        assert!(matches!(parse_schedule("file:f.txt"), Ok(ScheduleArg::File(p)) if p == Path::new("f.txt")));
        assert!(parse_schedule("file:").is_err());
        assert!(parse_schedule("fast").is_err());
    }

    #[test]
    fn violations_are_distinguished() {
        let e = violated("x");
        assert!(e.downcast_ref::<Violation>().is_some());
        assert!(anyhow!("y").downcast_ref::<Violation>().is_none());
        assert!(lift(DiagError::MeasureNotBelowOne(ExactRational::one())).downcast_ref::<Violation>().is_some());
    }
}

//! `tricount`: run counter programs, the multiplication program and
//! compiled Turing machines from the command line.
//!
//! Exit status: 0 on success, 1 when a result fails verification, 2 on
//! usage, parse or I/O errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use tricount_core::asm::{emit_asm, parse_asm};
use tricount_core::bench::{bench_sweep, fit_exponent, records_to_csv, Axis, BenchRecord, SweepKind, CSV_HEADER};
use tricount_core::machine::{run_mode, ProbeHit};
use tricount_core::macros::{expand, parse_macros};
use tricount_core::mult::{check_bound, check_structure, run_mult_nat};
use tricount_core::tm::{parse_tm, tm_decode_output, tm_encode_input, tm_run, TmOutcome, TuringMachine};
use tricount_core::tm_compile::{compile, make_coding, simulate_program, space_audit_with, SimOutcome, SPACE_C0};
use tricount_core::{Mode, Nat};

#[derive(Parser)]
#[command(name = "tricount", version, about = "Three-counter machine toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunOpts {
    /// Interpreter: naive or accel.
    #[arg(long, default_value = "accel")]
    mode: Mode,
    /// Step limit (unbounded by default).
    #[arg(long)]
    fuel: Option<u64>,
    /// Also print probe snapshots as `probe,<name>,<counters...>` rows.
    #[arg(long)]
    probes: bool,
    /// Write output to a file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a counter assembly file.
    Run {
        file: PathBuf,
        /// Initial counter values; missing ones are 0.
        counters: Vec<Nat>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Compile a macro program to counter assembly.
    Expand {
        file: PathBuf,
        /// Machine size; defaults to the declared registers plus scratch.
        #[arg(long)]
        registers: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multiply two numbers with the three-counter program.
    Mult {
        x: Nat,
        y: Nat,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Sweep the multiplication program over a grid and print CSV.
    BenchMult {
        /// Values of x: `a..b` (inclusive), a comma list, or one number.
        #[arg(long, default_value = "0..15")]
        x: String,
        #[arg(long, default_value = "0..15")]
        y: String,
        /// Report the log-log slope of steps along this axis on stderr.
        #[arg(long)]
        fit: Option<FitAxis>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a Turing machine directly on bin(x) # reverse(bin(y)).
    TmRun {
        file: PathBuf,
        x: Nat,
        y: Nat,
        #[arg(long)]
        fuel: Option<u64>,
    },
    /// Compile a Turing machine to counter assembly.
    TmCompile {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a compiled Turing machine and check it against the direct run.
    TmSim {
        file: PathBuf,
        x: Nat,
        y: Nat,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Check the counter sizes of a compiled run against the tape usage.
    Audit {
        file: PathBuf,
        x: Nat,
        y: Nat,
        #[arg(long, default_value_t = SPACE_C0)]
        c0: u64,
        #[arg(long, default_value = "accel")]
        mode: Mode,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FitAxis {
    X,
    Y,
}

enum Failure {
    Usage(anyhow::Error),
    Verify(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn probe_rows(hits: &[ProbeHit]) -> String {
    let mut s = String::new();
    for h in hits {
        s.push_str("probe,");
        s.push_str(&h.name);
        for c in &h.counters {
            s.push(',');
            s.push_str(&c.to_string());
        }
        s.push('\n');
    }
    s
}

fn snapshot_hits(snapshots: &std::collections::BTreeMap<String, Vec<Nat>>) -> Vec<ProbeHit> {
    snapshots
        .iter()
        .map(|(name, counters)| ProbeHit {
            name: name.clone(),
            counters: counters.clone(),
        })
        .collect()
}

/// One CSV data row without the header.
fn record_row(rec: &BenchRecord) -> anyhow::Result<String> {
    let text = records_to_csv(std::slice::from_ref(rec)).map_err(|e| anyhow!("{e}"))?;
    Ok(text.split_once('\n').map_or(String::new(), |(_, row)| row.to_string()))
}

fn parse_values(spec: &str) -> anyhow::Result<Vec<u64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().with_context(|| format!("bad range start in `{spec}`"))?;
        let b: u64 = b.trim().parse().with_context(|| format!("bad range end in `{spec}`"))?;
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|v| v.trim().parse().with_context(|| format!("bad value `{v}`")))
        .collect()
}

fn load_tm(path: &Path) -> anyhow::Result<TuringMachine> {
    parse_tm(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_run(file: &Path, counters: Vec<Nat>, opts: &RunOpts) -> Outcome {
    let p = parse_asm(&read(file)?).map_err(|e| anyhow!("{}: {e}", file.display()))?;
    let n = p.register_count as usize;
    if counters.len() > n {
        return Err(anyhow!("{} initial values for {n} counters", counters.len()).into());
    }
    let mut init = counters;
    init.resize(n, Nat::zero());
    let (state, stats) = run_mode(&p, init, opts.fuel, opts.mode).map_err(|e| anyhow!("{e}"))?;
    let mut text = String::from("counters");
    for c in &state.counters {
        text.push_str(&format!(",{c}"));
    }
    text.push_str(&format!(
        "\nsteps,{}\nmax_counter_value,{}\nmax_counter_bitlen,{}\nhalted,{}\n",
        stats.steps, stats.max_counter_value, stats.max_counter_bitlen, state.halted
    ));
    if opts.probes {
        text.push_str(&probe_rows(&stats.probe_log));
    }
    emit(&opts.out, &text)?;
    Ok(())
}

fn cmd_expand(file: &Path, registers: Option<u32>, out: &Option<PathBuf>) -> Outcome {
    let mp = parse_macros(&read(file)?).map_err(|e| anyhow!("{}: {e}", file.display()))?;
    let r = registers.unwrap_or(mp.machine_size().max(2));
    let p = expand(&mp, r).map_err(|e| anyhow!("{e}"))?;
    emit(out, &emit_asm(&p))?;
    Ok(())
}

fn cmd_mult(x: Nat, y: Nat, opts: &RunOpts) -> Outcome {
    let r = run_mult_nat(x, y, opts.mode, opts.fuel).map_err(|e| anyhow!("{e}"))?;
    let mut text = records_to_csv(&[BenchRecord::from(&r)]).map_err(|e| anyhow!("{e}"))?;
    if opts.probes {
        text.push_str(&probe_rows(&snapshot_hits(&r.probe_snapshots)));
    }
    emit(&opts.out, &text)?;
    if r.fuel_exhausted {
        eprintln!("fuel exhausted after {} steps", r.steps);
        return Ok(());
    }
    let mut problems = Vec::new();
    if r.product != r.x.clone() * r.y.clone() {
        problems.push(format!("product {} is not x*y", r.product));
    }
    let s = check_structure(&r);
    if !s.is_ok() {
        problems.push(format!("structure: {s}"));
    }
    let b = check_bound(&r);
    if !b.is_ok() {
        problems.push(format!(
            "bound: value ratio {:.3}, step ratio {:.3}",
            b.value_ratio, b.step_ratio
        ));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(problems.join("; ")))
    }
}

fn cmd_bench_mult(x: &str, y: &str, fit: Option<FitAxis>, opts: &RunOpts) -> Outcome {
    if opts.fuel.is_some() {
        return Err(anyhow!("bench-mult runs to completion; --fuel is not supported").into());
    }
    let xs = parse_values(x)?;
    let ys = parse_values(y)?;
    let recs = bench_sweep(SweepKind::Mult, &xs, &ys, opts.mode).map_err(|e| Failure::Verify(e.to_string()))?;
    let text = if opts.probes {
        // Each record row is followed by the probe rows of its run.
        let mut text = format!("{CSV_HEADER}\n");
        for rec in &recs {
            let r = run_mult_nat(rec.x.clone(), rec.y.clone(), opts.mode, None).map_err(|e| anyhow!("{e}"))?;
            text.push_str(&record_row(rec)?);
            text.push_str(&probe_rows(&snapshot_hits(&r.probe_snapshots)));
        }
        text
    } else {
        records_to_csv(&recs).map_err(|e| anyhow!("{e}"))?
    };
    emit(&opts.out, &text)?;
    if let Some(axis) = fit {
        let axis = match axis {
            FitAxis::X => Axis::X,
            FitAxis::Y => Axis::Y,
        };
        match fit_exponent(&recs, axis) {
            Ok(slope) => eprintln!("slope {slope:.4}"),
            Err(e) => return Err(anyhow!("fit: {e}").into()),
        }
    }
    Ok(())
}

fn cmd_tm_run(file: &Path, x: &Nat, y: &Nat, fuel: Option<u64>) -> Outcome {
    let m = load_tm(file)?;
    let r = tm_run(&m, &tm_encode_input(x, y), fuel);
    let decoded = tm_decode_output(&r.tape);
    let result = decoded.as_ref().map_or_else(|_| String::new(), Nat::to_string);
    println!("result,steps,cells_used,outcome");
    println!("{result},{},{},{:?}", r.steps, r.cells_used, r.outcome);
    match (r.outcome, decoded) {
        (TmOutcome::Halted, Ok(_)) => Ok(()),
        (TmOutcome::Halted, Err(e)) => Err(Failure::Verify(format!("output tape: {e}"))),
        (TmOutcome::Stuck, _) => Err(Failure::Verify(format!("stuck in state {}", r.tape.state))),
        (TmOutcome::FuelExhausted, _) => Err(Failure::Verify("fuel exhausted".into())),
    }
}

fn cmd_tm_compile(file: &Path, out: &Option<PathBuf>) -> Outcome {
    let m = load_tm(file)?;
    let p = compile(&m).map_err(|e| anyhow!("{e}"))?;
    emit(out, &emit_asm(&p))?;
    Ok(())
}

fn cmd_tm_sim(file: &Path, x: Nat, y: Nat, opts: &RunOpts) -> Outcome {
    let m = load_tm(file)?;
    let p = compile(&m).map_err(|e| anyhow!("{e}"))?;
    let sim = simulate_program(&p, &x, &y, opts.mode, opts.fuel).map_err(|e| anyhow!("{e}"))?;
    let rec = BenchRecord {
        x: x.clone(),
        y: y.clone(),
        steps: sim.stats.steps,
        max_counter_value: sim.stats.max_counter_value.clone(),
        max_counter_bitlen: sim.stats.max_counter_bitlen,
        result: sim.result.clone(),
        mode: opts.mode,
    };
    let mut text = records_to_csv(&[rec]).map_err(|e| anyhow!("{e}"))?;
    if opts.probes {
        text.push_str(&probe_rows(&sim.stats.probe_log));
    }
    emit(&opts.out, &text)?;
    match sim.outcome {
        SimOutcome::Halted => {}
        SimOutcome::Stuck => return Err(Failure::Verify("compiled machine got stuck".into())),
        SimOutcome::FuelExhausted => {
            eprintln!("fuel exhausted after {} steps", sim.stats.steps);
            return Ok(());
        }
    }
    let direct = tm_run(&m, &tm_encode_input(&x, &y), None);
    match tm_decode_output(&direct.tape) {
        Ok(v) if direct.outcome == TmOutcome::Halted && v == sim.result => Ok(()),
        Ok(v) => Err(Failure::Verify(format!("direct run gives {v}, compiled run {}", sim.result))),
        Err(e) => Err(Failure::Verify(format!("direct run output: {e}"))),
    }
}

fn cmd_audit(file: &Path, x: Nat, y: Nat, c0: u64, mode: Mode) -> Outcome {
    let m = load_tm(file)?;
    let coding = make_coding(&m.alphabet).map_err(|e| anyhow!("{e}"))?;
    let p = compile(&m).map_err(|e| anyhow!("{e}"))?;
    let sim = simulate_program(&p, &x, &y, mode, None).map_err(|e| anyhow!("{e}"))?;
    let direct = tm_run(&m, &tm_encode_input(&x, &y), None);
    let v = space_audit_with(&sim.stats, coding.k, direct.cells_used, c0);
    println!("{v}");
    if v.is_ok() {
        Ok(())
    } else {
        Err(Failure::Verify("space bound exceeded".into()))
    }
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Run { file, counters, opts } => cmd_run(&file, counters, &opts),
        Command::Expand { file, registers, out } => cmd_expand(&file, registers, &out),
        Command::Mult { x, y, opts } => cmd_mult(x, y, &opts),
        Command::BenchMult { x, y, fit, opts } => cmd_bench_mult(&x, &y, fit, &opts),
        Command::TmRun { file, x, y, fuel } => cmd_tm_run(&file, &x, &y, fuel),
        Command::TmCompile { file, out } => cmd_tm_compile(&file, &out),
        Command::TmSim { file, x, y, opts } => cmd_tm_sim(&file, x, y, &opts),
        Command::Audit { file, x, y, c0, mode } => cmd_audit(&file, x, y, c0, mode),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

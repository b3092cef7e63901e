//! Sweeps over input grids, their CSV form and log-log growth fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{ExecError, Mode};
use crate::mult::{run_mult_nat, MultReport};
use crate::nat::Nat;
use crate::tm::{tm_decode_output, tm_encode_input, tm_run, TmOutcome, TuringMachine};
use crate::tm_compile::{compile, simulate_program, CompileError, SimOutcome};

pub const CSV_HEADER: &str = "x,y,steps,max_counter_value,max_counter_bitlen,result,mode";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub x: Nat,
    pub y: Nat,
    pub steps: u64,
    pub max_counter_value: Nat,
    pub max_counter_bitlen: u64,
    pub result: Nat,
    pub mode: Mode,
}

impl From<&MultReport> for BenchRecord {
    fn from(r: &MultReport) -> Self {
        BenchRecord {
            x: r.x.clone(),
            y: r.y.clone(),
            steps: r.steps,
            max_counter_value: r.max_counter_value.clone(),
            max_counter_bitlen: r.max_counter_bitlen,
            result: r.product.clone(),
            mode: r.mode,
        }
    }
}

#[derive(Clone, Copy)]
pub enum SweepKind<'a> {
    /// The multiplication program, checked against `x * y`.
    Mult,
    /// A compiled Turing machine, checked against the machine's direct run.
    Tm(&'a TuringMachine),
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("({x}, {y}): expected {expected}, got {got}")]
    Mismatch { x: Nat, y: Nat, expected: String, got: Nat },
    #[error("({x}, {y}): direct run gave no result: {reason}")]
    Oracle { x: Nat, y: Nat, reason: String },
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// One record per `(x, y)` in `xs × ys`, x-major. Pairs run in parallel; the
/// order of the result does not depend on scheduling.
pub fn bench_sweep(kind: SweepKind<'_>, xs: &[u64], ys: &[u64], mode: Mode) -> Result<Vec<BenchRecord>, BenchError> {
    let pairs: Vec<(Nat, Nat)> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| (Nat::from(x), Nat::from(y))))
        .collect();
    bench_pairs(kind, &pairs, mode)
}

pub fn bench_pairs(kind: SweepKind<'_>, pairs: &[(Nat, Nat)], mode: Mode) -> Result<Vec<BenchRecord>, BenchError> {
    match kind {
        SweepKind::Mult => pairs
            .par_iter()
            .map(|(x, y)| {
                let r = run_mult_nat(x.clone(), y.clone(), mode, None)?;
                let expected = x.clone() * y.clone();
                if r.product != expected {
                    return Err(BenchError::Mismatch {
                        x: x.clone(),
                        y: y.clone(),
                        expected: expected.to_string(),
                        got: r.product,
                    });
                }
                Ok(BenchRecord::from(&r))
            })
            .collect(),
        SweepKind::Tm(m) => {
            let p = compile(m)?;
            pairs
                .par_iter()
                .map(|(x, y)| {
                    let direct = tm_run(m, &tm_encode_input(x, y), None);
                    let oracle = match direct.outcome {
                        TmOutcome::Halted => tm_decode_output(&direct.tape).map_err(|e| e.to_string()),
                        other => Err(format!("{other:?}")),
                    };
                    let expected = oracle.map_err(|reason| BenchError::Oracle {
                        x: x.clone(),
                        y: y.clone(),
                        reason,
                    })?;
                    let sim = simulate_program(&p, x, y, mode, None)?;
                    if sim.outcome != SimOutcome::Halted || sim.result != expected {
                        return Err(BenchError::Mismatch {
                            x: x.clone(),
                            y: y.clone(),
                            expected: expected.to_string(),
                            got: sim.result,
                        });
                    }
                    Ok(BenchRecord {
                        x: x.clone(),
                        y: y.clone(),
                        steps: sim.stats.steps,
                        max_counter_value: sim.stats.max_counter_value,
                        max_counter_bitlen: sim.stats.max_counter_bitlen,
                        result: sim.result,
                        mode,
                    })
                })
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FitError {
    #[error("need at least 4 distinct positive values of the swept variable, have {0}")]
    InsufficientData(usize),
    #[error("the other coordinate is not fixed")]
    NotFixed,
    #[error("a record has zero steps")]
    ZeroSteps,
}

/// Least-squares slope of `ln(steps)` against `ln(axis value)`. Records with
/// `y <= 1` are dropped first.
pub fn fit_exponent(records: &[BenchRecord], axis: Axis) -> Result<f64, FitError> {
    let one = Nat::from(1u64);
    let kept: Vec<&BenchRecord> = records.iter().filter(|r| r.y > one).collect();
    let (var, other): (fn(&BenchRecord) -> &Nat, fn(&BenchRecord) -> &Nat) = match axis {
        Axis::X => (|r| &r.x, |r| &r.y),
        Axis::Y => (|r| &r.y, |r| &r.x),
    };
    let mut points = Vec::new();
    for r in &kept {
        if other(r) != other(kept[0]) {
            return Err(FitError::NotFixed);
        }
        let v = var(r);
        if v.is_zero() {
            continue;
        }
        if r.steps == 0 {
            return Err(FitError::ZeroSteps);
        }
        points.push((log_nat(v), (r.steps as f64).ln()));
    }
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(FitError::InsufficientData(distinct.len()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

fn log_nat(v: &Nat) -> f64 {
    use num_traits::ToPrimitive;
    let b = v.to_biguint();
    match b.to_f64() {
        Some(f) if f.is_finite() => f.ln(),
        _ => {
            // Keep the top 64 bits.
            let shift = b.bits() - 64;
            (b >> shift).to_f64().unwrap_or(f64::MAX).ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

#[derive(Debug, Error)]
#[error("csv: {0}")]
pub struct CsvError(#[from] csv::Error);

/// Header plus one row per record, `\n` line endings.
pub fn records_to_csv(records: &[BenchRecord]) -> Result<String, CsvError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CsvError(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parse CSV produced by [`records_to_csv`]. Rows starting with `probe,`
/// are skipped.
pub fn parse_records(text: &str) -> Result<Vec<BenchRecord>, CsvError> {
    let filtered: String = text
        .lines()
        .filter(|l| !l.starts_with("probe,"))
        .flat_map(|l| [l, "\n"])
        .collect();
    let mut r = csv::Reader::from_reader(filtered.as_bytes());
    r.deserialize().map(|row| row.map_err(CsvError)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tm::{adder, divider};

    fn rec(x: u64, y: u64, steps: u64) -> BenchRecord {
        BenchRecord {
            x: Nat::from(x),
            y: Nat::from(y),
            steps,
            max_counter_value: Nat::from(0u64),
            max_counter_bitlen: 0,
            result: Nat::from(x * y),
            mode: Mode::Naive,
        }
    }

    #[test]
    fn mult_sweep_orders_x_major() {
        let recs = bench_sweep(SweepKind::Mult, &[2, 3], &[1, 2, 3], Mode::Accelerated).unwrap();
        let keys: Vec<(u64, u64)> = recs
            .iter()
            .map(|r| (r.x.to_u64().unwrap(), r.y.to_u64().unwrap()))
            .collect();
        assert_eq!(keys, [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)]);
    }

    #[test]
    fn small_mult_sweep() {
        let xs: Vec<u64> = (0..16).collect();
        let recs = bench_sweep(SweepKind::Mult, &xs, &xs, Mode::Accelerated).unwrap();
        assert_eq!(recs.len(), 256);
        assert!(recs.iter().all(|r| r.result == r.x.clone() * r.y.clone()));
        let ys: Vec<u64> = (1..=8).collect();
        let line = bench_sweep(SweepKind::Mult, &[3], &ys, Mode::Accelerated).unwrap();
        assert_eq!(line.len(), 8);
        // Loose sanity check only: steps grow with y on this line.
        assert!(line.first().unwrap().steps < line.last().unwrap().steps);
    }

    #[test]
    fn empty_range() {
        assert!(bench_sweep(SweepKind::Mult, &[], &[1, 2], Mode::Naive).unwrap().is_empty());
    }

    #[test]
    fn modes_give_identical_records_apart_from_mode() {
        let xs: Vec<u64> = (0..6).collect();
        let a = bench_sweep(SweepKind::Mult, &xs, &xs, Mode::Naive).unwrap();
        let b = bench_sweep(SweepKind::Mult, &xs, &xs, Mode::Accelerated).unwrap();
        for (a, mut b) in a.into_iter().zip(b) {
            b.mode = Mode::Naive;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn tm_sweeps() {
        let recs = bench_sweep(SweepKind::Tm(&adder()), &[0, 5], &[0, 3], Mode::Accelerated).unwrap();
        let sums: Vec<u64> = recs.iter().map(|r| r.result.to_u64().unwrap()).collect();
        assert_eq!(sums, [0, 3, 5, 8]);
        let recs = bench_sweep(SweepKind::Tm(&divider()), &[9], &[2, 4], Mode::Accelerated).unwrap();
        let quotients: Vec<u64> = recs.iter().map(|r| r.result.to_u64().unwrap()).collect();
        assert_eq!(quotients, [4, 2]);
    }

    #[test]
    fn flat_data_fits_zero_slope() {
        let recs: Vec<BenchRecord> = [2, 4, 8, 16, 32].iter().map(|&y| rec(3, y, 1000)).collect();
        assert!(fit_exponent(&recs, Axis::Y).unwrap().abs() < 1e-6);
    }

    #[test]
    fn power_law_fits_its_exponent() {
        let recs: Vec<BenchRecord> = [4u64, 8, 16, 32].iter().map(|&x| rec(x, 5, x * x * x)).collect();
        assert!((fit_exponent(&recs, Axis::X).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn fit_errors() {
        let recs: Vec<BenchRecord> = [0, 1, 2, 4, 8].iter().map(|&y| rec(3, y, 10)).collect();
        assert_eq!(fit_exponent(&recs, Axis::Y), Err(FitError::InsufficientData(3)));
        let mixed = vec![rec(3, 4, 1), rec(4, 8, 2), rec(3, 16, 3), rec(3, 32, 4)];
        assert_eq!(fit_exponent(&mixed, Axis::Y), Err(FitError::NotFixed));
    }

    #[test]
    fn csv_round_trip() {
        let mut recs = bench_sweep(SweepKind::Mult, &[0, 7], &[0, 9], Mode::Naive).unwrap();
        recs[0].max_counter_value = "123456789012345678901234567890".parse().unwrap();
        let text = records_to_csv(&recs).unwrap();
        assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
        assert!(!text.contains('\r'));
        assert_eq!(parse_records(&text).unwrap(), recs);
        let with_probe = text.replacen('\n', "\nprobe,final,0,0,0\n", 1);
        assert_eq!(parse_records(&with_probe).unwrap(), recs);
    }

    #[test]
    fn empty_csv_has_header() {
        let text = records_to_csv(&[]).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\n"));
        assert!(parse_records(&text).unwrap().is_empty());
    }
}

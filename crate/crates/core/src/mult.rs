//! Polynomial-time multiplication on a three-counter machine.
//!
//! The program in `corpus/mult.macro` takes X in counter A (1) and Y in
//! counter B (2), uses counter 3 as scratch, and leaves X·Y in B. It works
//! on the binary structure of Y: the four loops reverse Y's bits into
//! two-bit groups, append zero bits, shift a flagged copy of X into place,
//! and finally add shifted multiples of X under control of Y's bits.
//!
//! Probes mark the end of each loop (after the adjacent flag removal for
//! loops II and III) and the exit of the procedure; [`check_structure`]
//! compares those snapshots against the closed forms traced from the code.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::isa::Program;
use crate::machine::{ExecError, Machine, Mode};
use crate::macros::{expand, parse_macros, MacroProgram};
use crate::nat::Nat;

const SOURCE: &str = include_str!("../../../corpus/mult.macro");
const LISTING: &str = include_str!("../../../corpus/mult.listing.txt");

pub const PROBES: [&str; 5] = ["loop1_end", "loop2_end", "loop3_end", "loop4_end", "final"];

/// Value bound constant: `max_counter_value <= C * max(1,x) * max(1,y)^3`.
/// Calibrated as the exact maximum ratio over `[0,15]^2`, attained at (1,1).
pub const VALUE_BOUND_C: (u64, u64) = (30, 1);

/// Step bound constant: `steps <= C' * max(1,x) * max(1,y)^3 * (bitlen(y)+1)`,
/// as an exact fraction. Calibrated over `[0,15]^2`, attained at (1,1) (1313 steps).
pub const STEP_BOUND_C: (u64, u64) = (1313, 2);

/// The shipped multiplication source, including probe directives.
pub fn mult_source() -> &'static str {
    SOURCE
}

/// A plain transcription of the published listing, without probes.
pub fn mult_listing() -> &'static str {
    LISTING
}

pub fn mult_macro_program() -> &'static MacroProgram {
    static CELL: OnceLock<MacroProgram> = OnceLock::new();
    CELL.get_or_init(|| parse_macros(SOURCE).expect("shipped mult source parses"))
}

/// The expanded three-counter program.
pub fn mult_program() -> &'static Program {
    static CELL: OnceLock<Program> = OnceLock::new();
    CELL.get_or_init(|| expand(mult_macro_program(), 3).expect("shipped mult source expands"))
}

/// Whitespace-insensitive comparison of the shipped source with the
/// transcription after dropping probe directives, then the same comparison
/// on the parsed statements. Returns a description of the first difference.
pub fn check_fidelity() -> Result<(), String> {
    fn strip_probes(text: &str) -> String {
        let mut out = String::new();
        let mut rest = text;
        while let Some(i) = rest.find("(* probe:") {
            out.push_str(&rest[..i]);
            let tail = &rest[i..];
            let end = tail.find("*)").map_or(tail.len(), |j| j + 2);
            rest = &tail[end..];
        }
        out.push_str(rest);
        out
    }
    let tokens = |t: &str| t.split_whitespace().map(str::to_string).collect::<Vec<_>>();
    let shipped = tokens(&strip_probes(SOURCE));
    let listing = tokens(LISTING);
    if let Some(i) = (0..shipped.len().max(listing.len())).find(|&i| shipped.get(i) != listing.get(i)) {
        return Err(format!(
            "token {i}: shipped {:?}, transcription {:?}",
            shipped.get(i),
            listing.get(i)
        ));
    }
    let listed = parse_macros(LISTING).map_err(|e| format!("transcription does not parse: {e}"))?;
    if mult_macro_program().without_probes() != listed {
        return Err("parsed statements differ".into());
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultReport {
    pub x: Nat,
    pub y: Nat,
    pub product: Nat,
    pub steps: u64,
    pub max_counter_value: Nat,
    pub max_counter_bitlen: u64,
    pub probe_snapshots: BTreeMap<String, Vec<Nat>>,
    pub mode: Mode,
    pub fuel_exhausted: bool,
}

pub fn run_mult(x: u64, y: u64, mode: Mode) -> MultReport {
    run_mult_nat(Nat::from(x), Nat::from(y), mode, None).expect("unbounded run cannot fail")
}

/// Run the program from counters `(x, y, 0)`. With finite fuel the report
/// may be partial; check `fuel_exhausted`.
pub fn run_mult_nat(x: Nat, y: Nat, mode: Mode, fuel: Option<u64>) -> Result<MultReport, ExecError> {
    let p = mult_program();
    let mut m = Machine::new(p, vec![x.clone(), y.clone(), Nat::zero()], mode)?;
    m.run(fuel);
    let (state, stats) = m.into_parts();
    let mut probe_snapshots = BTreeMap::new();
    for hit in stats.probe_log {
        probe_snapshots.insert(hit.name, hit.counters);
    }
    Ok(MultReport {
        x,
        y,
        product: state.counters[1].clone(),
        steps: stats.steps,
        max_counter_value: stats.max_counter_value,
        max_counter_bitlen: stats.max_counter_bitlen,
        probe_snapshots,
        mode,
        fuel_exhausted: stats.fuel_exhausted,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseFailure {
    pub clause: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Verdict {
    pub failures: Vec<ClauseFailure>,
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, clause: &str, expected: &BigUint, actual: Option<&Nat>) {
        let actual_big = actual.map(Nat::to_biguint);
        if actual_big.as_ref() != Some(expected) {
            self.failures.push(ClauseFailure {
                clause: clause.to_string(),
                expected: expected.to_string(),
                actual: actual_big.map_or_else(|| "missing".to_string(), |v| v.to_string()),
            });
        }
    }

    fn fail(&mut self, clause: &str, expected: impl ToString, actual: impl ToString) {
        self.failures.push(ClauseFailure {
            clause: clause.to_string(),
            expected: expected.to_string(),
            actual: actual.to_string(),
        });
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, c) in self.failures.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: expected {}, got {}", c.clause, c.expected, c.actual)?;
        }
        Ok(())
    }
}

/// Counter A after Loop I: `(2x+1)·4^n + Σ d_i·2·4^(n-1-i)` where `d_i` is
/// bit `i` of y and `n = bitlen(y)`. Y's bits appear reversed, one per
/// two-bit group with the bit in the high position.
pub fn loop1_value(x: &BigUint, y: &BigUint) -> BigUint {
    let n = y.bits();
    let mut acc = (x * 2u32 + 1u32) << (2 * n);
    for i in 0..n {
        if y.bit(i) {
            acc += BigUint::from(2u32) << (2 * (n - 1 - i));
        }
    }
    acc
}

/// Compare the probe snapshots with the closed forms of the traced program.
///
/// * (a) `loop1_end`: A = [`loop1_value`], B = 0.
/// * (b) `loop2_end` (after `B := B - 1`): B = 2x, A = (A₁ + 1)·2^n.
///   Before the flag removal B holds 2x+1.
/// * (c) `loop3_end` (after `A := A - 1`): B = 2x·8^n, A = A₁, and the
///   value before flag removal (A + 1) has no trailing zeros.
/// * (e) `loop4_end`: A = 2xy + 2x + 1, B = 2x.
/// * (d) `final`: B = x·y.
///
/// Scratch must be zero at every probe.
pub fn check_structure(r: &MultReport) -> Verdict {
    let mut v = Verdict::default();
    if r.fuel_exhausted {
        v.fail("complete", "halted run", "fuel exhausted");
        return v;
    }
    let x = r.x.to_biguint();
    let y = r.y.to_biguint();
    let get = |name: &str, i: usize| r.probe_snapshots.get(name).map(|c| &c[i]);

    for (name, counters) in &r.probe_snapshots {
        if !counters[2].is_zero() {
            v.fail(&format!("{name}: scratch"), 0, &counters[2]);
        }
    }

    let product = &x * &y;
    v.check("(d) final: B", &product, get("final", 1));
    if r.product.to_biguint() != product {
        v.fail("(d) product", &product, &r.product);
    }
    if y.is_zero() {
        for p in &PROBES[..4] {
            if r.probe_snapshots.contains_key(*p) {
                v.fail(&format!("{p} reached"), "not reached for y = 0", "reached");
            }
        }
        return v;
    }

    let n = y.bits();
    let a1 = loop1_value(&x, &y);
    let two_x: BigUint = &x * 2u32;
    v.check("(a) loop1_end: A", &a1, get("loop1_end", 0));
    v.check("(a) loop1_end: B", &BigUint::zero(), get("loop1_end", 1));
    v.check("(b) loop2_end: A", &((&a1 + 1u32) << n), get("loop2_end", 0));
    v.check("(b) loop2_end: B", &two_x, get("loop2_end", 1));
    v.check("(c) loop3_end: A", &a1, get("loop3_end", 0));
    v.check("(c) loop3_end: B", &(&two_x << (3 * n)), get("loop3_end", 1));
    if let Some(a) = get("loop3_end", 0) {
        let before = a.to_biguint() + 1u32;
        if before.trailing_zeros() != Some(0) {
            v.fail("(c) loop3_end: flag is lowest bit", "odd A+1", before);
        }
    }
    v.check(
        "(e) loop4_end: A",
        &(&two_x * &y + &two_x + BigUint::one()),
        get("loop4_end", 0),
    );
    v.check("(e) loop4_end: B", &two_x, get("loop4_end", 1));
    v
}

fn bound_denominator(x: &Nat, y: &Nat) -> BigUint {
    let x = x.to_biguint().max(BigUint::one());
    let y = y.to_biguint().max(BigUint::one());
    x * &y * &y * &y
}

/// `max(1,x)·max(1,y)³` and `max(1,x)·max(1,y)³·(bitlen(y)+1)`.
pub fn bound_scales(x: &Nat, y: &Nat) -> (BigUint, BigUint) {
    let d = bound_denominator(x, y);
    let steps = &d * BigUint::from(y.bits() + 1);
    (d, steps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundVerdict {
    pub value_ratio: f64,
    pub step_ratio: f64,
    pub value_ok: bool,
    pub steps_ok: bool,
}

impl BoundVerdict {
    pub fn is_ok(&self) -> bool {
        self.value_ok && self.steps_ok
    }
}

fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    use num_traits::ToPrimitive;
    num.to_f64().unwrap_or(f64::INFINITY) / den.to_f64().unwrap_or(f64::INFINITY)
}

/// `num/den <= c.0/c.1`, exactly.
fn within(num: &BigUint, den: &BigUint, c: (u64, u64)) -> bool {
    num * BigUint::from(c.1) <= den * BigUint::from(c.0)
}

/// Check the report against the frozen value and step bound constants.
pub fn check_bound(r: &MultReport) -> BoundVerdict {
    check_bound_with(r, VALUE_BOUND_C, STEP_BOUND_C)
}

pub fn check_bound_with(r: &MultReport, value_c: (u64, u64), step_c: (u64, u64)) -> BoundVerdict {
    let (vd, sd) = bound_scales(&r.x, &r.y);
    let maxv = r.max_counter_value.to_biguint();
    let steps = BigUint::from(r.steps);
    BoundVerdict {
        value_ratio: ratio(&maxv, &vd),
        step_ratio: ratio(&steps, &sd),
        value_ok: within(&maxv, &vd, value_c),
        steps_ok: within(&steps, &sd, step_c),
    }
}

/// Exact maxima of the value and step ratios over a set of reports, as
/// `(numerator, denominator)` pairs taken from the maximizing run.
pub fn calibrate<'a>(reports: impl IntoIterator<Item = &'a MultReport>) -> ((BigUint, BigUint), (BigUint, BigUint)) {
    let mut best_v = (BigUint::zero(), BigUint::one());
    let mut best_s = (BigUint::zero(), BigUint::one());
    for r in reports {
        let (vd, sd) = bound_scales(&r.x, &r.y);
        let maxv = r.max_counter_value.to_biguint();
        if &maxv * &best_v.1 > &best_v.0 * &vd {
            best_v = (maxv, vd);
        }
        let steps = BigUint::from(r.steps);
        if &steps * &best_s.1 > &best_s.0 * &sd {
            best_s = (steps, sd);
        }
    }
    (best_v, best_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::macros::MacroStmt;

    #[test]
    fn source_shape() {
        let src = mult_source();
        assert_eq!(src.matches("while").count(), 4);
        let mp = mult_macro_program();
        let MacroStmt::IfPos(_, body) = &mp.statements[0] else {
            panic!("expected guard");
        };
        assert_eq!(
            body[0],
            MacroStmt::MulConstAddConst {
                r: crate::macros::RegisterRef::new("A", 1),
                m: 2,
                c: 1
            }
        );
        let real: Vec<&MacroStmt> = body.iter().filter(|s| !matches!(s, MacroStmt::Probe(_))).collect();
        let n = real.len();
        assert!(matches!(real[n - 2], MacroStmt::Copy { .. }));
        assert!(matches!(real[n - 1], MacroStmt::DivConst { m: 2, .. }));
        let loops = body.iter().filter(|s| matches!(s, MacroStmt::WhilePos(..) | MacroStmt::WhileEven(..))).count();
        assert_eq!(loops, 4);
    }

    #[test]
    fn shipped_source_matches_transcription() {
        assert_eq!(check_fidelity(), Ok(()));
        assert!(mult_listing().contains("procedure mult;"));
    }

    #[test]
    fn program_shape() {
        let p = mult_program();
        assert_eq!(p.register_count, 3);
        assert!(p.validate().is_valid());
        let regs: Vec<u32> = p.registers_used().iter().map(|r| r.0).collect();
        assert_eq!(regs, vec![1, 2, 3]);
        let probes: std::collections::BTreeSet<&str> = p.probes.values().map(String::as_str).collect();
        assert_eq!(probes, PROBES.into_iter().collect());
    }

    #[test]
    fn small_products() {
        assert_eq!(run_mult(5, 0, Mode::Naive).product, Nat::zero());
        assert_eq!(run_mult(1, 1, Mode::Naive).product, Nat::from(1u64));
        assert_eq!(run_mult(2, 3, Mode::Naive).product, Nat::from(6u64));
    }

    #[test]
    fn traced_snapshots_two_three() {
        let r = run_mult(2, 3, Mode::Naive);
        assert_eq!(r.probe_snapshots["loop1_end"][0], Nat::from(90u64));
        assert_eq!(r.probe_snapshots["loop2_end"][1], Nat::from(4u64));
        assert_eq!(r.max_counter_value, Nat::from(364u64));
        assert!(check_structure(&r).is_ok(), "{}", check_structure(&r));
    }

    #[test]
    fn traced_snapshots_one_one() {
        let r = run_mult(1, 1, Mode::Naive);
        assert_eq!(r.probe_snapshots["loop3_end"][1], Nat::from(16u64));
        assert_eq!(r.max_counter_value, Nat::from(30u64));
        assert!(check_structure(&r).is_ok());
    }

    #[test]
    fn zero_multiplier_skips_everything() {
        let r = run_mult(5, 0, Mode::Naive);
        assert_eq!(r.max_counter_value, Nat::from(5u64));
        assert!(r.steps < 5);
        assert_eq!(r.probe_snapshots.keys().collect::<Vec<_>>(), vec!["final"]);
        assert!(check_structure(&r).is_ok());
    }

    #[test]
    fn structure_check_detects_tampering() {
        let mut r = run_mult(3, 5, Mode::Accelerated);
        r.probe_snapshots.get_mut("loop3_end").unwrap()[1] = Nat::from(1u64);
        let v = check_structure(&r);
        assert_eq!(v.failures.len(), 1);
        assert!(v.failures[0].clause.starts_with("(c)"));
    }

    #[test]
    fn value_bound_example() {
        let r = run_mult(2, 3, Mode::Naive);
        let v = check_bound_with(&r, (8, 1), (u64::MAX, 1));
        assert!(v.value_ok);
        assert!((v.value_ratio - 364.0 / 54.0).abs() < 1e-12);
    }

    #[test]
    fn fuel_limited_run_reports_exhaustion() {
        let r = run_mult_nat(Nat::from(3u64), Nat::from(3u64), Mode::Naive, Some(10)).unwrap();
        assert!(r.fuel_exhausted);
        assert_eq!(r.steps, 10);
        assert!(!check_structure(&r).is_ok());
    }
}

//! Compiling Turing machines to three-counter programs.
//!
//! Tape symbols are `k`-bit digits of a base `2^k` number, `k` the bit
//! width needed for the alphabet. Blank is digit 0, so an empty counter
//! stands for an infinite run of blanks. Counter 1 holds the cells left of
//! the head (nearest cell least significant), counter 2 the head cell and
//! everything to its right (head cell least significant), counter 3 is
//! scratch.
//!
//! The compiled program runs four phases, each ending at a probe:
//!
//! 1. `phase1_end`: counter 1 holds `2^k·x + 1` followed by the bits of y,
//!    pushed least significant first.
//! 2. `phase2_end`: the digits are moved onto counter 2 up to the
//!    separator, then x is pushed bit by bit; counter 2 now encodes the
//!    whole input tape with the head on its first symbol.
//! 3. `phase3_end`: one block per control state reads the head digit,
//!    writes and moves. Every simulated step passes a `tmstep` probe.
//! 4. `phase4_end`: the binary digits under the head are read back
//!    into counter 1, most significant first, and counter 2 is cleared.
//!
//! A missing transition ends at a `Halt` carrying the `stuck` probe.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::builder::{Builder, Label};
use crate::isa::{Program, Reg};
use crate::machine::{ExecError, Machine, Mode, RunStats};
use crate::macros::mul_add;
use crate::nat::Nat;
use crate::tm::{
    tm_encode_input, tm_run, validate_tm, TapeState, TmExecution, TmOutcome, TmReport, TuringMachine,
    BLANK, ONE, SEP, ZERO,
};

/// Slack added to `k·(S+2)` by [`space_audit`]. None is needed: on the
/// shipped corpus the largest counter stays at least 8 bits below `k·(S+2)`.
pub const SPACE_C0: u64 = 0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolCoding {
    pub k: u32,
    pub codes: BTreeMap<String, u64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodingError {
    #[error("symbol `{0}` must have code {1}")]
    FixedCode(String, u64),
    #[error("k = {k} but {symbols} symbols need k = {expected}")]
    Width { k: u32, symbols: usize, expected: u32 },
    #[error("codes are not 0..{0} without repeats")]
    NotDense(usize),
    #[error("symbol `{0}` has no code")]
    Unknown(String),
}

fn width(symbols: usize) -> u32 {
    let mut k = 0;
    while (1usize << k) < symbols {
        k += 1;
    }
    k
}

impl SymbolCoding {
    pub fn base(&self) -> u64 {
        1 << self.k
    }

    pub fn code(&self, sym: &str) -> Option<u64> {
        self.codes.get(sym).copied()
    }

    pub fn symbol(&self, digit: u64) -> Option<&str> {
        self.codes
            .iter()
            .find(|(_, &c)| c == digit)
            .map(|(s, _)| s.as_str())
    }

    pub fn check(&self) -> Result<(), CodingError> {
        for (sym, code) in [(BLANK, 0), (SEP, 1), (ZERO, 2), (ONE, 3)] {
            if self.code(sym) != Some(code) {
                return Err(CodingError::FixedCode(sym.to_string(), code));
            }
        }
        let n = self.codes.len();
        let expected = width(n);
        if self.k != expected {
            return Err(CodingError::Width {
                k: self.k,
                symbols: n,
                expected,
            });
        }
        let mut used: Vec<u64> = self.codes.values().copied().collect();
        used.sort_unstable();
        if used.iter().enumerate().any(|(i, &c)| c != i as u64) {
            return Err(CodingError::NotDense(n));
        }
        Ok(())
    }
}

/// Blank 0, `#` 1, `0` 2, `1` 3, the remaining symbols from 4 upward in
/// declaration order.
pub fn make_coding(alphabet: &[String]) -> Result<SymbolCoding, CodingError> {
    let mut codes: BTreeMap<String, u64> = [(BLANK, 0), (SEP, 1), (ZERO, 2), (ONE, 3)]
        .into_iter()
        .map(|(s, c)| (s.to_string(), c))
        .collect();
    for s in alphabet {
        if !codes.contains_key(s) {
            codes.insert(s.clone(), codes.len() as u64);
        }
    }
    for s in codes.keys() {
        if !alphabet.contains(s) {
            return Err(CodingError::Unknown(s.clone()));
        }
    }
    let coding = SymbolCoding {
        k: width(codes.len()),
        codes,
    };
    coding.check()?;
    Ok(coding)
}

/// The two tape halves as counter values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterTapeView {
    pub left: Nat,
    pub right: Nat,
    pub k: u32,
}

pub fn view_of_tape(t: &TapeState, coding: &SymbolCoding) -> Result<CounterTapeView, CodingError> {
    let mut left = BigUint::zero();
    let mut right = BigUint::zero();
    // Highest digit first, so each cell shifts in below the farther ones.
    for (&pos, sym) in t.cells.iter().rev() {
        if pos >= t.head {
            let d = coding.code(sym).ok_or_else(|| CodingError::Unknown(sym.clone()))?;
            right += BigUint::from(d) << (coding.k as u64 * (pos - t.head) as u64);
        }
    }
    for (&pos, sym) in t.cells.iter() {
        if pos < t.head {
            let d = coding.code(sym).ok_or_else(|| CodingError::Unknown(sym.clone()))?;
            left += BigUint::from(d) << (coding.k as u64 * (t.head - 1 - pos) as u64);
        }
    }
    Ok(CounterTapeView {
        left: Nat::from(left),
        right: Nat::from(right),
        k: coding.k,
    })
}

/// Inverse of [`view_of_tape`], with the head at position 0.
pub fn tape_of_view(v: &CounterTapeView, coding: &SymbolCoding, state: &str) -> Result<TapeState, CodingError> {
    let mut t = TapeState {
        cells: BTreeMap::new(),
        head: 0,
        state: state.to_string(),
    };
    let digits = |n: &Nat| -> Vec<u64> {
        let n = n.to_biguint();
        let mask = BigUint::from(coding.base() - 1);
        let count = n.bits().div_ceil(coding.k as u64);
        (0..count)
            .map(|i| {
                let d: BigUint = (&n >> (i * coding.k as u64)) & &mask;
                d.iter_u64_digits().next().unwrap_or(0)
            })
            .collect()
    };
    for (i, d) in digits(&v.right).into_iter().enumerate() {
        let s = coding.symbol(d).ok_or_else(|| CodingError::Unknown(format!("digit {d}")))?;
        t.write(i as i64, s);
    }
    for (i, d) in digits(&v.left).into_iter().enumerate() {
        let s = coding.symbol(d).ok_or_else(|| CodingError::Unknown(format!("digit {d}")))?;
        t.write(-1 - i as i64, s);
    }
    Ok(t)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("invalid machine: {0}")]
    Invalid(TmReport),
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error(transparent)]
    Build(#[from] crate::builder::BuildError),
}

fn label_name(state: &str) -> String {
    let clean: String = state
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    format!("q.{clean}")
}

pub fn compile(m: &TuringMachine) -> Result<Program, CompileError> {
    let report = validate_tm(m);
    if !report.is_valid() {
        return Err(CompileError::Invalid(report));
    }
    let coding = make_coding(&m.alphabet)?;
    let base = coding.base();
    let code = |s: &str| coding.code(s).expect("validated symbol");
    let (c1, c2) = (Reg(1), Reg(2));
    let mut b = Builder::new(3);

    // Phase 1: c1 := 2^k·x + 1, then push y's bits, least significant first.
    let start = b.mark();
    b.name(start, "phase1");
    mul_add(&mut b, c1, base, 1);
    push_bits(&mut b, c2, c1, base, code(ZERO), code(ONE));
    b.probe("phase1_end");
    let phase2 = b.label();
    b.jmp(phase2);

    // Phase 2: move digits to c2 through the separator, then push x.
    b.bind(phase2);
    b.name(phase2, "phase2");
    let pop = b.mark();
    let rems: Vec<Label> = (0..base).map(|_| b.label()).collect();
    b.divmod(c1, base, &rems);
    let x_part = b.label();
    for (d, &l) in rems.iter().enumerate() {
        b.bind(l);
        mul_add(&mut b, c2, base, d as u64);
        b.jmp(if d as u64 == code(SEP) { x_part } else { pop });
    }
    b.bind(x_part);
    push_bits(&mut b, c1, c2, base, code(ZERO), code(ONE));
    b.probe("phase2_end");
    let decode = b.label();
    let mut entry: BTreeMap<&str, Label> = BTreeMap::new();
    for q in m.states() {
        let l = if m.is_halt(q) { decode } else { b.label() };
        entry.insert(q, l);
    }
    b.jmp(entry[m.start.as_str()]);

    // Phase 3: one block per running state.
    let stuck = b.label();
    let mut move_left: BTreeMap<&str, Label> = BTreeMap::new();
    let mut named = std::collections::BTreeSet::new();
    for q in m.states() {
        if m.is_halt(q) {
            continue;
        }
        b.bind(entry[q]);
        let name = label_name(q);
        if named.insert(name.clone()) {
            b.name(entry[q], name);
        }
        b.probe("tmstep");
        let digits: Vec<Label> = (0..base).map(|_| b.label()).collect();
        b.divmod(c2, base, &digits);
        for (d, &l) in digits.iter().enumerate() {
            b.bind(l);
            let t = coding.symbol(d as u64).and_then(|s| m.transition(q, s));
            match t {
                None => {
                    mul_add(&mut b, c2, base, d as u64);
                    b.jmp(stuck);
                }
                Some(t) => match t.mv {
                    crate::tm::Move::R => {
                        mul_add(&mut b, c1, base, code(&t.write));
                        b.jmp(entry[t.next.as_str()]);
                    }
                    crate::tm::Move::L => {
                        mul_add(&mut b, c2, base, code(&t.write));
                        let next = t.next.as_str();
                        let ml = *move_left.entry(next).or_insert_with(|| b.label());
                        b.jmp(ml);
                    }
                },
            }
        }
    }
    // Shared tails of left moves: pop a digit from c1 onto c2.
    for (q, ml) in move_left {
        b.bind(ml);
        let rems: Vec<Label> = (0..base).map(|_| b.label()).collect();
        b.divmod(c1, base, &rems);
        for (d, &l) in rems.iter().enumerate() {
            b.bind(l);
            mul_add(&mut b, c2, base, d as u64);
            b.jmp(entry[q]);
        }
    }
    b.bind(stuck);
    b.name(stuck, "stuck");
    b.probe("stuck");
    b.halt();

    // Phase 4: binary digits at the head, most significant first, into c1.
    b.bind(decode);
    b.name(decode, "phase4");
    b.probe("phase3_end");
    let read = b.label();
    b.clear(c1, read);
    b.bind(read);
    let digits: Vec<Label> = (0..base).map(|_| b.label()).collect();
    b.divmod(c2, base, &digits);
    let tail = b.label();
    for (d, &l) in digits.iter().enumerate() {
        b.bind(l);
        let d = d as u64;
        if d == code(ZERO) || d == code(ONE) {
            mul_add(&mut b, c1, 2, (d == code(ONE)) as u64);
            b.jmp(read);
        } else {
            b.jmp(tail);
        }
    }
    b.bind(tail);
    let fin = b.label();
    b.clear(c2, fin);
    b.bind(fin);
    b.probe("phase4_end");
    b.halt();

    Ok(b.finish()?)
}

/// Push the binary digits of `src` onto `dst` as `zero`/`one` digits,
/// least significant bit first, emptying `src`. Zero pushes one `zero`.
fn push_bits(b: &mut Builder, src: Reg, dst: Reg, base: u64, zero: u64, one: u64) {
    let is_zero = b.label();
    let done = b.label();
    b.decjz(src, is_zero);
    b.inc(src);
    let top = b.mark();
    let bits = [b.label(), b.label()];
    b.divmod(src, 2, &bits);
    for (l, digit) in [(bits[0], zero), (bits[1], one)] {
        b.bind(l);
        mul_add(b, dst, base, digit);
        b.decjz(src, done);
        b.inc(src);
        b.jmp(top);
    }
    b.bind(is_zero);
    mul_add(b, dst, base, zero);
    b.bind(done);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimOutcome {
    Halted,
    Stuck,
    FuelExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Simulation {
    /// Counter 1 at the end of the run.
    pub result: Nat,
    pub stats: RunStats,
    pub outcome: SimOutcome,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// Run an already compiled program from `(x, y, 0)`.
pub fn simulate_program(p: &Program, x: &Nat, y: &Nat, mode: Mode, fuel: Option<u64>) -> Result<Simulation, ExecError> {
    let mut m = Machine::new(p, vec![x.clone(), y.clone(), Nat::zero()], mode)?;
    m.run(fuel);
    let (state, stats) = m.into_parts();
    let outcome = if !state.halted {
        SimOutcome::FuelExhausted
    } else if p.labels.get("stuck") == Some(&state.pc) {
        SimOutcome::Stuck
    } else {
        SimOutcome::Halted
    };
    Ok(Simulation {
        result: state.counters[0].clone(),
        stats,
        outcome,
    })
}

pub fn simulate_compiled(m: &TuringMachine, x: &Nat, y: &Nat, mode: Mode, fuel: Option<u64>) -> Result<Simulation, SimError> {
    let p = compile(m)?;
    Ok(simulate_program(&p, x, y, mode, fuel)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceVerdict {
    pub max_bitlen: u64,
    pub bound: u64,
    pub cells: u64,
    pub k: u32,
}

impl SpaceVerdict {
    pub fn is_ok(&self) -> bool {
        self.max_bitlen <= self.bound
    }
}

impl std::fmt::Display for SpaceVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.is_ok() { "ok" } else { "violation" };
        write!(
            f,
            "{verdict}: max bitlen {} vs k(S+2)+c0 = {} (k = {}, S = {})",
            self.max_bitlen, self.bound, self.k, self.cells
        )
    }
}

/// `max_counter_bitlen <= k·(cells + 2) + c0`.
pub fn space_audit_with(stats: &RunStats, k: u32, cells: u64, c0: u64) -> SpaceVerdict {
    SpaceVerdict {
        max_bitlen: stats.max_counter_bitlen,
        bound: k as u64 * (cells + 2) + c0,
        cells,
        k,
    }
}

/// Audit a compiled run against the tape usage of the direct run on the
/// same input, with the shipped [`SPACE_C0`].
pub fn space_audit(stats: &RunStats, m: &TuringMachine, x: &Nat, y: &Nat) -> Result<SpaceVerdict, CodingError> {
    let coding = make_coding(&m.alphabet)?;
    let run = tm_run(m, &tm_encode_input(x, y), None);
    Ok(space_audit_with(stats, coding.k, run.cells_used, SPACE_C0))
}

/// Compare every `tmstep` snapshot of a compiled run with the tape of the
/// direct run after the same number of steps. Returns the number of steps
/// compared, or a description of the first mismatch.
pub fn check_step_views(m: &TuringMachine, x: &Nat, y: &Nat, mode: Mode) -> Result<u64, String> {
    let coding = make_coding(&m.alphabet).map_err(|e| e.to_string())?;
    let sim = simulate_compiled(m, x, y, mode, None).map_err(|e| e.to_string())?;
    let input = tm_encode_input(x, y);
    let mut exec = TmExecution::new(m, &input);
    let mut compared = 0u64;
    for hit in &sim.stats.probe_log {
        let expect_running = match hit.name.as_str() {
            "tmstep" | "stuck" => true,
            "phase3_end" => false,
            _ => continue,
        };
        if hit.name == "tmstep" && exec.status().is_some_and(|s| s != TmOutcome::Stuck) {
            return Err(format!("compiled run continues after direct run stopped at step {}", exec.steps()));
        }
        if !expect_running && exec.status() != Some(TmOutcome::Halted) {
            return Err(format!("compiled run halted at step {} but direct run did not", exec.steps()));
        }
        let view = view_of_tape(exec.tape(), &coding).map_err(|e| e.to_string())?;
        let got = (&hit.counters[0], &hit.counters[1]);
        if got != (&view.left, &view.right) || !hit.counters[2].is_zero() {
            return Err(format!(
                "step {}: counters ({}, {}, {}) but tape view ({}, {})",
                exec.steps(),
                hit.counters[0],
                hit.counters[1],
                hit.counters[2],
                view.left,
                view.right
            ));
        }
        if hit.name == "tmstep" && exec.step() {
            compared += 1;
        }
    }
    if exec.status().is_none() {
        return Err(format!("direct run still running after {} steps", exec.steps()));
    }
    Ok(compared)
}

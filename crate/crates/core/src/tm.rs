//! Deterministic single-tape Turing machines.
//!
//! Inputs are presented as `bin(x) # reverse(bin(y))` with the head on the
//! first symbol; a halted machine leaves `bin(f(x, y))` on the tape with the
//! head on its first symbol. `bin(0)` is `"0"`.
//!
//! Text format, one item per line, `;` starts a comment:
//!
//! ```text
//! alphabet: blank # 0 1
//! start: scan
//! halt: done
//! scan 0 -> scan 0 R
//! ```
//!
//! The keyword `blank` names the blank symbol wherever a symbol is expected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::nat::Nat;

pub const BLANK: &str = "blank";
pub const SEP: &str = "#";
pub const ZERO: &str = "0";
pub const ONE: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    L,
    R,
}

impl Move {
    fn delta(self) -> i64 {
        match self {
            Move::L => -1,
            Move::R => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub state: String,
    pub read: String,
    pub next: String,
    pub write: String,
    pub mv: Move,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TuringMachine {
    /// Tape alphabet in declaration order, blank written as [`BLANK`].
    pub alphabet: Vec<String>,
    pub start: String,
    pub halt: BTreeSet<String>,
    pub transitions: Vec<Transition>,
}

impl TuringMachine {
    pub fn states(&self) -> BTreeSet<&str> {
        let mut s: BTreeSet<&str> = BTreeSet::new();
        s.insert(&self.start);
        s.extend(self.halt.iter().map(String::as_str));
        for t in &self.transitions {
            s.insert(&t.state);
            s.insert(&t.next);
        }
        s
    }

    pub fn is_halt(&self, state: &str) -> bool {
        self.halt.contains(state)
    }

    pub fn transition(&self, state: &str, read: &str) -> Option<&Transition> {
        self.transitions
            .iter()
            .find(|t| t.state == state && t.read == read)
    }
}

impl fmt::Display for TuringMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alphabet: {}", self.alphabet.join(" "))?;
        writeln!(f, "start: {}", self.start)?;
        let halt: Vec<&str> = self.halt.iter().map(String::as_str).collect();
        writeln!(f, "halt: {}", halt.join(" "))?;
        for t in &self.transitions {
            writeln!(
                f,
                "{} {} -> {} {} {:?}",
                t.state, t.read, t.next, t.write, t.mv
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TmError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid machine: {0}")]
    Invalid(TmReport),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TmReport {
    pub violations: Vec<String>,
}

impl TmReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for TmReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.violations.join("; "))
    }
}

/// Parse without semantic checks. Duplicate transitions are kept so that
/// [`validate_tm`] can report them.
pub fn parse_tm_unchecked(text: &str) -> Result<TuringMachine, TmError> {
    let mut alphabet = None;
    let mut start = None;
    let mut halt = None;
    let mut transitions = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| TmError::Syntax { line, message };
        let body = raw.split(';').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let owned = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        match tokens[0] {
            "alphabet:" => {
                if alphabet.is_some() {
                    return Err(err("alphabet declared twice".into()));
                }
                alphabet = Some(owned(&tokens[1..]));
            }
            "start:" => {
                if tokens.len() != 2 {
                    return Err(err("start: expects one state".into()));
                }
                if start.is_some() {
                    return Err(err("start declared twice".into()));
                }
                start = Some(tokens[1].to_string());
            }
            "halt:" => {
                if halt.is_some() {
                    return Err(err("halt declared twice".into()));
                }
                halt = Some(owned(&tokens[1..]).into_iter().collect::<BTreeSet<_>>());
            }
            _ => {
                if tokens.len() != 6 || tokens[2] != "->" {
                    return Err(err(format!(
                        "expected `state symbol -> state symbol L|R`, got `{body}`"
                    )));
                }
                let mv = match tokens[5] {
                    "L" => Move::L,
                    "R" => Move::R,
                    other => return Err(err(format!("move must be L or R, got `{other}`"))),
                };
                transitions.push(Transition {
                    state: tokens[0].to_string(),
                    read: tokens[1].to_string(),
                    next: tokens[3].to_string(),
                    write: tokens[4].to_string(),
                    mv,
                });
            }
        }
    }
    let missing = |what: &str| TmError::Syntax {
        line: 0,
        message: format!("missing `{what}` line"),
    };
    Ok(TuringMachine {
        alphabet: alphabet.ok_or_else(|| missing("alphabet:"))?,
        start: start.ok_or_else(|| missing("start:"))?,
        halt: halt.unwrap_or_default(),
        transitions,
    })
}

/// Parse and validate.
pub fn parse_tm(text: &str) -> Result<TuringMachine, TmError> {
    let m = parse_tm_unchecked(text)?;
    let report = validate_tm(&m);
    if report.is_valid() {
        Ok(m)
    } else {
        Err(TmError::Invalid(report))
    }
}

pub fn validate_tm(m: &TuringMachine) -> TmReport {
    let mut v = Vec::new();
    let mut seen = BTreeSet::new();
    for s in &m.alphabet {
        if !seen.insert(s.as_str()) {
            v.push(format!("symbol `{s}` listed twice"));
        }
    }
    for req in [BLANK, SEP, ZERO, ONE] {
        if !seen.contains(req) {
            v.push(format!("alphabet lacks `{req}`"));
        }
    }
    let mut keys: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for t in &m.transitions {
        for s in [&t.read, &t.write] {
            if !seen.contains(s.as_str()) {
                v.push(format!("symbol `{s}` not in alphabet"));
            }
        }
        if m.is_halt(&t.state) {
            v.push(format!("transition out of halt state `{}`", t.state));
        }
        let n = keys.entry((&t.state, &t.read)).or_default();
        *n += 1;
        if *n == 2 {
            v.push(format!(
                "nondeterministic: two transitions for ({}, {})",
                t.state, t.read
            ));
        }
    }
    TmReport { violations: v }
}

/// `bin(x) # reverse(bin(y))`.
pub fn tm_encode_input(x: &Nat, y: &Nat) -> Vec<String> {
    let bits = |n: &Nat| -> Vec<String> {
        n.to_biguint()
            .to_str_radix(2)
            .chars()
            .map(|c| c.to_string())
            .collect()
    };
    let mut out = bits(x);
    out.push(SEP.to_string());
    let mut yb = bits(y);
    yb.reverse();
    out.extend(yb);
    out
}

/// Finite tape window plus head and control state. Blank cells are never
/// stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TapeState {
    pub cells: BTreeMap<i64, String>,
    pub head: i64,
    pub state: String,
}

impl TapeState {
    pub fn new(input: &[String], state: impl Into<String>) -> Self {
        let cells = input
            .iter()
            .enumerate()
            .filter(|(_, s)| s.as_str() != BLANK)
            .map(|(i, s)| (i as i64, s.clone()))
            .collect();
        TapeState {
            cells,
            head: 0,
            state: state.into(),
        }
    }

    pub fn read(&self, pos: i64) -> &str {
        self.cells.get(&pos).map_or(BLANK, String::as_str)
    }

    pub fn write(&mut self, pos: i64, sym: &str) {
        if sym == BLANK {
            self.cells.remove(&pos);
        } else {
            self.cells.insert(pos, sym.to_string());
        }
    }

    /// Non-blank content from the leftmost to the rightmost non-blank cell,
    /// blanks rendered as `_`.
    pub fn content(&self) -> String {
        let (Some((&lo, _)), Some((&hi, _))) = (self.cells.first_key_value(), self.cells.last_key_value())
        else {
            return String::new();
        };
        (lo..=hi)
            .map(|p| match self.read(p) {
                BLANK => "_".to_string(),
                s => s.to_string(),
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TmOutcome {
    Halted,
    /// No transition for the current (state, symbol) in a non-halt state.
    Stuck,
    FuelExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmRun {
    pub tape: TapeState,
    pub steps: u64,
    /// Width of the window spanned by the input and every head position.
    pub cells_used: u64,
    pub outcome: TmOutcome,
}

/// Step-by-step execution, for callers that inspect intermediate tapes.
pub struct TmExecution<'m> {
    machine: &'m TuringMachine,
    tape: TapeState,
    steps: u64,
    lo: i64,
    hi: i64,
}

impl<'m> TmExecution<'m> {
    pub fn new(machine: &'m TuringMachine, input: &[String]) -> Self {
        TmExecution {
            machine,
            tape: TapeState::new(input, machine.start.clone()),
            steps: 0,
            lo: 0,
            hi: input.len().max(1) as i64 - 1,
        }
    }

    pub fn tape(&self) -> &TapeState {
        &self.tape
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn cells_used(&self) -> u64 {
        (self.hi - self.lo + 1) as u64
    }

    /// Whether the machine can take another step; `None` means it can, else
    /// the terminal outcome.
    pub fn status(&self) -> Option<TmOutcome> {
        if self.machine.is_halt(&self.tape.state) {
            Some(TmOutcome::Halted)
        } else if self
            .machine
            .transition(&self.tape.state, self.tape.read(self.tape.head))
            .is_none()
        {
            Some(TmOutcome::Stuck)
        } else {
            None
        }
    }

    /// Take one step; returns false when the machine is halted or stuck.
    pub fn step(&mut self) -> bool {
        if self.machine.is_halt(&self.tape.state) {
            return false;
        }
        let head = self.tape.head;
        let Some(t) = self.machine.transition(&self.tape.state, self.tape.read(head)) else {
            return false;
        };
        self.tape.write(head, &t.write);
        self.tape.head = head + t.mv.delta();
        self.tape.state = t.next.clone();
        self.lo = self.lo.min(self.tape.head);
        self.hi = self.hi.max(self.tape.head);
        self.steps += 1;
        true
    }

    pub fn finish(mut self, fuel: Option<u64>) -> TmRun {
        loop {
            if let Some(outcome) = self.status() {
                return self.into_run(outcome);
            }
            if fuel.is_some_and(|f| self.steps >= f) {
                return self.into_run(TmOutcome::FuelExhausted);
            }
            self.step();
        }
    }

    fn into_run(self, outcome: TmOutcome) -> TmRun {
        TmRun {
            cells_used: self.cells_used(),
            tape: self.tape,
            steps: self.steps,
            outcome,
        }
    }
}

pub fn tm_run(m: &TuringMachine, input: &[String], fuel: Option<u64>) -> TmRun {
    TmExecution::new(m, input).finish(fuel)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("no output at the head")]
    Empty,
    #[error("non-binary symbol `{symbol}` at offset {offset} from the head")]
    NonBinary { symbol: String, offset: i64 },
    #[error("tape content outside the output run at position {0}")]
    Stray(i64),
}

/// Read `bin(n)` starting at the head: the non-blank content must be a
/// contiguous run of `0`/`1` beginning at the head.
pub fn tm_decode_output(t: &TapeState) -> Result<Nat, DecodeError> {
    let mut value = BigUint::default();
    let mut pos = t.head;
    loop {
        match t.read(pos) {
            BLANK => break,
            ZERO => value <<= 1u32,
            ONE => value = (value << 1u32) + 1u32,
            other => {
                return Err(DecodeError::NonBinary {
                    symbol: other.to_string(),
                    offset: pos - t.head,
                })
            }
        }
        pos += 1;
    }
    if pos == t.head {
        return Err(DecodeError::Empty);
    }
    if let Some((&p, _)) = t.cells.iter().find(|(&p, _)| p < t.head || p >= pos) {
        return Err(DecodeError::Stray(p));
    }
    Ok(Nat::from(value))
}

pub fn adder_source() -> &'static str {
    include_str!("../../../corpus/add.tm")
}

pub fn divider_source() -> &'static str {
    include_str!("../../../corpus/div.tm")
}

pub fn adder() -> TuringMachine {
    parse_tm(adder_source()).expect("shipped adder is valid")
}

pub fn divider() -> TuringMachine {
    parse_tm(divider_source()).expect("shipped divider is valid")
}

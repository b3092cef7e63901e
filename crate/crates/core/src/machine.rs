//! Step-exact interpreters for counter machine programs.
//!
//! Two drivers share one [`Machine`]: the naive driver executes one
//! instruction at a time, the accelerated driver additionally recognises
//! simple cycles after a backward jump and applies all of their iterations
//! in a single closed-form update. Both produce identical final states,
//! step counts, value maxima and probe logs.

use std::fmt;

use thiserror::Error;

use crate::isa::{validate, Addr, Instruction, Program, ValidateOptions, ValidationReport};
use crate::nat::Nat;

/// Longest cycle body the accelerator will try to batch.
const MAX_CYCLE_LEN: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    #[serde(rename = "naive")]
    Naive,
    #[default]
    #[serde(rename = "accel", alias = "accelerated")]
    Accelerated,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Naive => "naive",
            Mode::Accelerated => "accel",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Mode::Naive),
            "accel" | "accelerated" => Ok(Mode::Accelerated),
            other => Err(format!("unknown mode '{other}' (expected naive or accel)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineState {
    pub counters: Vec<Nat>,
    pub pc: Addr,
    pub halted: bool,
}

impl MachineState {
    pub fn new(counters: Vec<Nat>) -> Self {
        MachineState {
            counters,
            pc: 0,
            halted: false,
        }
    }

    pub fn from_u64s(values: &[u64]) -> Self {
        MachineState::new(values.iter().map(|&v| Nat::from_u64(v)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeHit {
    pub name: String,
    pub counters: Vec<Nat>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunStats {
    /// Executed instructions, `Halt` included.
    pub steps: u64,
    pub max_counter_value: Nat,
    pub max_counter_bitlen: u64,
    pub probe_log: Vec<ProbeHit>,
    pub fuel_exhausted: bool,
}

impl RunStats {
    fn new(counters: &[Nat]) -> Self {
        let max = counters.iter().max().cloned().unwrap_or_default();
        RunStats {
            steps: 0,
            max_counter_bitlen: max.bits(),
            max_counter_value: max,
            probe_log: Vec::new(),
            fuel_exhausted: false,
        }
    }

    #[inline]
    fn observe(&mut self, v: &Nat) {
        if *v > self.max_counter_value {
            self.max_counter_value = v.clone();
            self.max_counter_bitlen = v.bits();
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("invalid program: {0}")]
    InvalidProgram(ValidationReport),
    #[error("expected {expected} initial counters, got {got}")]
    CounterCount { expected: usize, got: usize },
    #[error("machine is halted")]
    Halted,
    #[error("program counter {0} does not address an instruction")]
    PcOutOfRange(Addr),
}

/// Execute a single instruction in place.
///
/// Stepping a halted state is a caller error.
pub fn step(p: &Program, s: &mut MachineState) -> Result<(), ExecError> {
    if s.halted {
        return Err(ExecError::Halted);
    }
    let ins = *p
        .instructions
        .get(s.pc)
        .ok_or(ExecError::PcOutOfRange(s.pc))?;
    match ins {
        Instruction::Inc(r) => {
            s.counters[r.slot()].inc();
            s.pc += 1;
        }
        Instruction::DecJz(r, t) => {
            if s.counters[r.slot()].dec() {
                s.pc += 1;
            } else {
                s.pc = t;
            }
        }
        Instruction::Jmp(t) => s.pc = t,
        Instruction::Halt => s.halted = true,
    }
    Ok(())
}

/// Run from pc 0 with the naive driver.
pub fn run(
    p: &Program,
    init: Vec<Nat>,
    fuel: Option<u64>,
) -> Result<(MachineState, RunStats), ExecError> {
    run_mode(p, init, fuel, Mode::Naive)
}

/// Run from pc 0 with cycle acceleration.
pub fn run_accelerated(
    p: &Program,
    init: Vec<Nat>,
    fuel: Option<u64>,
) -> Result<(MachineState, RunStats), ExecError> {
    run_mode(p, init, fuel, Mode::Accelerated)
}

pub fn run_mode(
    p: &Program,
    init: Vec<Nat>,
    fuel: Option<u64>,
    mode: Mode,
) -> Result<(MachineState, RunStats), ExecError> {
    let mut m = Machine::new(p, init, mode)?;
    m.run(fuel);
    Ok(m.into_parts())
}

/// A resumable interpreter bound to one program.
pub struct Machine<'p> {
    program: &'p Program,
    probe_at: Vec<bool>,
    state: MachineState,
    stats: RunStats,
    mode: Mode,
    record_probes: bool,
    scratch: CycleScratch,
}

impl<'p> Machine<'p> {
    pub fn new(program: &'p Program, init: Vec<Nat>, mode: Mode) -> Result<Self, ExecError> {
        let report = validate(program, ValidateOptions { allow_end_target: true });
        if !report.is_valid() {
            return Err(ExecError::InvalidProgram(report));
        }
        let expected = program.register_count as usize;
        if init.len() != expected {
            return Err(ExecError::CounterCount {
                expected,
                got: init.len(),
            });
        }
        let mut probe_at = vec![false; program.len()];
        for &a in program.probes.keys() {
            probe_at[a] = true;
        }
        let stats = RunStats::new(&init);
        Ok(Machine {
            program,
            probe_at,
            state: MachineState::new(init),
            stats,
            mode,
            record_probes: true,
            scratch: CycleScratch::new(expected),
        })
    }

    /// Disable probe logging (probes still cost nothing either way).
    pub fn discard_probes(mut self) -> Self {
        self.record_probes = false;
        self
    }

    pub fn state(&self) -> &MachineState {
        &self.state
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn into_parts(self) -> (MachineState, RunStats) {
        (self.state, self.stats)
    }

    /// Execute up to `fuel` further steps (unbounded when `None`).
    ///
    /// Sets `fuel_exhausted` if the budget ran out before `Halt`; calling
    /// again continues exactly where the previous call stopped.
    pub fn run(&mut self, fuel: Option<u64>) {
        self.stats.fuel_exhausted = false;
        let mut left = fuel.unwrap_or(u64::MAX);
        let bounded = fuel.is_some();
        let prog = self.program;
        let len = prog.len();
        let accel = self.mode == Mode::Accelerated;
        while !self.state.halted {
            let pc = self.state.pc;
            if pc >= len {
                // Only reachable when the program jumps to its own end.
                self.state.halted = true;
                break;
            }
            if left == 0 {
                if bounded {
                    self.stats.fuel_exhausted = true;
                }
                break;
            }
            if self.probe_at[pc] && self.record_probes {
                self.stats.probe_log.push(ProbeHit {
                    name: prog.probes[&pc].clone(),
                    counters: self.state.counters.clone(),
                });
            }
            left -= 1;
            self.stats.steps += 1;
            match prog.instructions[pc] {
                Instruction::Inc(r) => {
                    let c = &mut self.state.counters[r.slot()];
                    c.inc();
                    self.stats.observe(c);
                    self.state.pc = pc + 1;
                }
                Instruction::DecJz(r, t) => {
                    if self.state.counters[r.slot()].dec() {
                        self.state.pc = pc + 1;
                    } else {
                        self.state.pc = t;
                        if accel && t <= pc {
                            self.try_batch(&mut left);
                        }
                    }
                }
                Instruction::Jmp(t) => {
                    self.state.pc = t;
                    if accel && t <= pc {
                        self.try_batch(&mut left);
                    }
                }
                Instruction::Halt => self.state.halted = true,
            }
        }
    }

    /// Attempt to batch iterations of a simple cycle starting at the
    /// current pc. Never crosses a probed address.
    fn try_batch(&mut self, left: &mut u64) {
        let start = self.state.pc;
        let Some(cycle) = self.scratch.trace(self.program, &self.probe_at, &self.state.counters, start)
        else {
            return;
        };
        let len = cycle.len as u64;
        let mut iters = *left / len;
        for c in cycle.constraints {
            let d = cycle.delta[c.slot];
            let bound = if c.nonzero {
                if d >= 0 {
                    continue;
                }
                // v + off + i*d >= 1 for all i < N
                let avail = self.state.counters[c.slot]
                    .checked_offset(c.offset - 1)
                    .expect("constraint held on the traced iteration");
                avail.div_u64_saturating(d.unsigned_abs()).saturating_add(1)
            } else if d == 0 {
                continue;
            } else {
                1
            };
            iters = iters.min(bound);
        }
        if iters < 2 {
            return;
        }
        for &slot in cycle.touched {
            let d = cycle.delta[slot];
            let v = &self.state.counters[slot];
            let peak_base = if d > 0 { v.add_scaled(iters - 1, d) } else { v.clone() };
            if let Some(peak) = peak_base.checked_offset(cycle.max_offset[slot]) {
                self.stats.observe(&peak);
            }
            self.state.counters[slot] = v.add_scaled(iters, d);
        }
        let spent = iters * len;
        self.stats.steps += spent;
        *left -= spent;
    }
}

struct Constraint {
    slot: usize,
    offset: i64,
    nonzero: bool,
}

struct Cycle<'a> {
    len: usize,
    delta: &'a [i64],
    max_offset: &'a [i64],
    touched: &'a [usize],
    constraints: &'a [Constraint],
}

/// Reusable buffers for cycle tracing.
struct CycleScratch {
    offset: Vec<i64>,
    max_offset: Vec<i64>,
    touched: Vec<usize>,
    visited: Vec<Addr>,
    constraints: Vec<Constraint>,
}

impl CycleScratch {
    fn new(registers: usize) -> Self {
        CycleScratch {
            offset: vec![0; registers],
            max_offset: vec![0; registers],
            touched: Vec::new(),
            visited: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Follow the path one iteration would take from `start` under the
    /// current counters, recording which branch each decrement takes.
    fn trace(
        &mut self,
        p: &Program,
        probe_at: &[bool],
        counters: &[Nat],
        start: Addr,
    ) -> Option<Cycle<'_>> {
        for &s in &self.touched {
            self.offset[s] = 0;
            self.max_offset[s] = 0;
        }
        self.touched.clear();
        self.visited.clear();
        self.constraints.clear();

        let mut cur = start;
        let mut len = 0;
        loop {
            if cur >= p.len() || probe_at[cur] || len >= MAX_CYCLE_LEN {
                return None;
            }
            if len > 0 && self.visited.contains(&cur) {
                return None;
            }
            self.visited.push(cur);
            len += 1;
            match p.instructions[cur] {
                Instruction::Inc(r) => {
                    let s = r.slot();
                    self.touch(s);
                    self.offset[s] += 1;
                    self.max_offset[s] = self.max_offset[s].max(self.offset[s]);
                    cur += 1;
                }
                Instruction::DecJz(r, t) => {
                    let s = r.slot();
                    self.touch(s);
                    let off = self.offset[s];
                    let positive = counters[s].checked_offset(off - 1).is_some();
                    self.constraints.push(Constraint {
                        slot: s,
                        offset: off,
                        nonzero: positive,
                    });
                    if positive {
                        self.offset[s] -= 1;
                        cur += 1;
                    } else {
                        cur = t;
                    }
                }
                Instruction::Jmp(t) => cur = t,
                Instruction::Halt => return None,
            }
            if cur == start {
                break;
            }
        }
        Some(Cycle {
            len,
            delta: &self.offset,
            max_offset: &self.max_offset,
            touched: &self.touched,
            constraints: &self.constraints,
        })
    }

    fn touch(&mut self, slot: usize) {
        if !self.touched.contains(&slot) {
            self.touched.push(slot);
        }
    }
}

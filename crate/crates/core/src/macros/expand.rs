use thiserror::Error;

use super::{Block, MacroProgram, MacroStmt, RegisterRef};
use crate::builder::{BuildError, Builder, Label};
use crate::isa::{Program, Reg};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExpandError {
    #[error("program needs {needed} registers (including scratch), machine has {available}")]
    TooFewRegisters { needed: u32, available: u32 },
    #[error(transparent)]
    Build(#[from] BuildError),
}

/// Compile a macro program for a machine with `register_count` counters.
/// The last counter is scratch. The result ends in a single `Halt`.
pub fn expand(mp: &MacroProgram, register_count: u32) -> Result<Program, ExpandError> {
    let needed = mp.machine_size().max(2);
    if register_count < needed {
        return Err(ExpandError::TooFewRegisters {
            needed,
            available: register_count,
        });
    }
    let mut b = Builder::new(register_count);
    emit_block(&mut b, &mp.statements);
    let end = b.mark();
    b.name(end, "end");
    b.halt();
    Ok(b.finish()?)
}

pub(crate) fn emit_block(b: &mut Builder, block: &Block) {
    for s in block {
        emit_stmt(b, s);
    }
}

fn reg(r: &RegisterRef) -> Reg {
    Reg(r.index)
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Parity {
    Even,
    Odd,
}

/// Parity test on `r` that restores `r` before leaving. The `fall` outcome
/// continues after the emitted code, the other outcome jumps to `other`.
pub(crate) fn parity_test(b: &mut Builder, r: Reg, fall: Parity, other: Label) {
    let s = b.scratch();
    let even = b.label();
    let odd = b.label();
    // Decrement twice per round, counting both units on scratch.
    b.decjz(r, even);
    let round = b.mark();
    b.decjz(r, odd);
    b.inc(s);
    b.inc(s);
    b.decjz(r, even);
    b.jmp(round);

    match fall {
        Parity::Odd => {
            b.bind(even);
            b.drain(s, &[r], other);
            b.bind(odd);
            let restored = b.label();
            b.drain(s, &[r], restored);
            b.bind(restored);
            b.inc(r);
        }
        Parity::Even => {
            b.bind(odd);
            let restored = b.label();
            b.drain(s, &[r], restored);
            b.bind(restored);
            b.inc(r);
            b.jmp(other);
            b.bind(even);
            let done = b.label();
            b.drain(s, &[r], done);
            b.bind(done);
        }
    }
}

/// `r := m * r + c`
pub(crate) fn mul_add(b: &mut Builder, r: Reg, m: u64, c: u64) {
    if m > 1 {
        let s = b.scratch();
        let back = b.label();
        b.drain(r, &[s], back);
        b.bind(back);
        let add = b.label();
        let targets = vec![r; m as usize];
        b.drain(s, &targets, add);
        b.bind(add);
    }
    b.inc_by(r, c);
}

fn emit_stmt(b: &mut Builder, stmt: &MacroStmt) {
    let s = b.scratch();
    match stmt {
        MacroStmt::IfPos(r, body) => {
            let end = b.label();
            b.decjz(reg(r), end);
            b.inc(reg(r));
            emit_block(b, body);
            b.bind(end);
        }
        MacroStmt::WhilePos(r, body) => {
            // The guard is duplicated at the bottom so the entry instruction
            // runs once per statement, not once per iteration.
            let end = b.label();
            b.decjz(reg(r), end);
            let top = b.mark();
            b.inc(reg(r));
            emit_block(b, body);
            b.decjz(reg(r), end);
            b.jmp(top);
            b.bind(end);
        }
        MacroStmt::IfOdd(r, body) => {
            let skip = b.label();
            parity_test(b, reg(r), Parity::Odd, skip);
            emit_block(b, body);
            b.bind(skip);
        }
        MacroStmt::WhileEven(r, body) => {
            let end = b.label();
            parity_test(b, reg(r), Parity::Even, end);
            let top = b.mark();
            emit_block(b, body);
            parity_test(b, reg(r), Parity::Odd, top);
            b.bind(end);
        }
        MacroStmt::Copy { dst, src } => {
            if dst == src {
                return;
            }
            let fill = b.label();
            b.clear(reg(dst), fill);
            b.bind(fill);
            let restore = b.label();
            b.drain(reg(src), &[reg(dst), s], restore);
            b.bind(restore);
            let done = b.label();
            b.drain(s, &[reg(src)], done);
            b.bind(done);
        }
        MacroStmt::AddReg { dst, src } => {
            if dst == src {
                mul_add(b, reg(dst), 2, 0);
                return;
            }
            let restore = b.label();
            b.drain(reg(src), &[reg(dst), s], restore);
            b.bind(restore);
            let done = b.label();
            b.drain(s, &[reg(src)], done);
            b.bind(done);
        }
        MacroStmt::MonusReg { dst, src } => {
            if dst == src {
                let done = b.label();
                b.clear(reg(dst), done);
                b.bind(done);
                return;
            }
            let restore = b.label();
            b.decjz(reg(src), restore);
            let round = b.mark();
            b.inc(s);
            let next = b.label();
            // Decrement dst if possible; both outcomes continue.
            b.decjz(reg(dst), next);
            b.bind(next);
            b.decjz(reg(src), restore);
            b.jmp(round);
            b.bind(restore);
            let done = b.label();
            b.drain(s, &[reg(src)], done);
            b.bind(done);
        }
        MacroStmt::MulConstAddConst { r, m, c } => mul_add(b, reg(r), *m, *c),
        MacroStmt::DivConst { r, m } => {
            if *m > 1 {
                let done = b.label();
                let rems = vec![done; *m as usize];
                b.divmod(reg(r), *m, &rems);
                b.bind(done);
            }
        }
        MacroStmt::AddConst { r, c } => b.inc_by(reg(r), *c),
        MacroStmt::SubConst { r, c } => {
            for _ in 0..*c {
                let next = b.label();
                b.decjz(reg(r), next);
                b.bind(next);
            }
        }
        MacroStmt::Probe(name) => b.probe(name.clone()),
    }
}

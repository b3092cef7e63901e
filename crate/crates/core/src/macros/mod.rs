//! Structured macro language compiled to counter programs.
//!
//! The last register of the target machine is reserved as scratch: source
//! programs cannot name it, every macro expects it to be zero on entry and
//! leaves it at zero on exit.

mod cost;
mod expand;
mod parse;

use std::fmt;

pub use cost::macro_cost;
pub use expand::{expand, ExpandError};
pub(crate) use expand::mul_add;
pub use parse::{parse_macros, MacroError};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RegisterRef {
    pub name: String,
    /// 1-based register index, never the scratch register.
    pub index: u32,
}

impl RegisterRef {
    pub fn new(name: impl Into<String>, index: u32) -> Self {
        RegisterRef {
            name: name.into(),
            index,
        }
    }
}

impl fmt::Display for RegisterRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub type Block = Vec<MacroStmt>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MacroStmt {
    /// `if R > 0 then begin ... end`
    IfPos(RegisterRef, Block),
    /// `while R > 0 do begin ... end`
    WhilePos(RegisterRef, Block),
    /// `if odd(R) then begin ... end`
    IfOdd(RegisterRef, Block),
    /// `while even(R) do begin ... end`
    WhileEven(RegisterRef, Block),
    /// `R1 := R2`
    Copy { dst: RegisterRef, src: RegisterRef },
    /// `R1 := R1 + R2`
    AddReg { dst: RegisterRef, src: RegisterRef },
    /// `R1 := R1 - R2`, clamped at zero.
    MonusReg { dst: RegisterRef, src: RegisterRef },
    /// `R := m * R + c`
    MulConstAddConst { r: RegisterRef, m: u64, c: u64 },
    /// `R := R div m`
    DivConst { r: RegisterRef, m: u64 },
    /// `R := R + c`
    AddConst { r: RegisterRef, c: u64 },
    /// `R := R - c`, clamped at zero.
    SubConst { r: RegisterRef, c: u64 },
    /// `(* probe: name *)`
    Probe(String),
}

/// Statement kinds, used for cost lookups and reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MacroKind {
    IfPos,
    WhilePos,
    IfOdd,
    WhileEven,
    Copy,
    AddReg,
    MonusReg,
    MulConstAddConst,
    DivConst,
    AddConst,
    SubConst,
    Probe,
}

impl MacroStmt {
    pub fn kind(&self) -> MacroKind {
        match self {
            MacroStmt::IfPos(..) => MacroKind::IfPos,
            MacroStmt::WhilePos(..) => MacroKind::WhilePos,
            MacroStmt::IfOdd(..) => MacroKind::IfOdd,
            MacroStmt::WhileEven(..) => MacroKind::WhileEven,
            MacroStmt::Copy { .. } => MacroKind::Copy,
            MacroStmt::AddReg { .. } => MacroKind::AddReg,
            MacroStmt::MonusReg { .. } => MacroKind::MonusReg,
            MacroStmt::MulConstAddConst { .. } => MacroKind::MulConstAddConst,
            MacroStmt::DivConst { .. } => MacroKind::DivConst,
            MacroStmt::AddConst { .. } => MacroKind::AddConst,
            MacroStmt::SubConst { .. } => MacroKind::SubConst,
            MacroStmt::Probe(_) => MacroKind::Probe,
        }
    }

    pub fn body(&self) -> Option<&Block> {
        match self {
            MacroStmt::IfPos(_, b)
            | MacroStmt::WhilePos(_, b)
            | MacroStmt::IfOdd(_, b)
            | MacroStmt::WhileEven(_, b) => Some(b),
            _ => None,
        }
    }

    /// Registers a statement (not its body) reads or writes.
    pub fn registers(&self) -> Vec<&RegisterRef> {
        match self {
            MacroStmt::IfPos(r, _)
            | MacroStmt::WhilePos(r, _)
            | MacroStmt::IfOdd(r, _)
            | MacroStmt::WhileEven(r, _)
            | MacroStmt::MulConstAddConst { r, .. }
            | MacroStmt::DivConst { r, .. }
            | MacroStmt::AddConst { r, .. }
            | MacroStmt::SubConst { r, .. } => vec![r],
            MacroStmt::Copy { dst, src }
            | MacroStmt::AddReg { dst, src }
            | MacroStmt::MonusReg { dst, src } => vec![dst, src],
            MacroStmt::Probe(_) => vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacroProgram {
    pub name: String,
    pub statements: Block,
    /// Declared registers in index order (index 1 first).
    pub register_names: Vec<String>,
}

impl MacroProgram {
    /// The smallest machine this program fits: declared registers plus scratch.
    pub fn machine_size(&self) -> u32 {
        self.register_names.len() as u32 + 1
    }

    /// Copy of the program with all probe statements removed.
    pub fn without_probes(&self) -> MacroProgram {
        fn strip(b: &Block) -> Block {
            b.iter()
                .filter(|s| !matches!(s, MacroStmt::Probe(_)))
                .map(|s| match s {
                    MacroStmt::IfPos(r, b) => MacroStmt::IfPos(r.clone(), strip(b)),
                    MacroStmt::WhilePos(r, b) => MacroStmt::WhilePos(r.clone(), strip(b)),
                    MacroStmt::IfOdd(r, b) => MacroStmt::IfOdd(r.clone(), strip(b)),
                    MacroStmt::WhileEven(r, b) => MacroStmt::WhileEven(r.clone(), strip(b)),
                    other => other.clone(),
                })
                .collect()
        }
        MacroProgram {
            name: self.name.clone(),
            statements: strip(&self.statements),
            register_names: self.register_names.clone(),
        }
    }
}

fn write_block(f: &mut fmt::Formatter<'_>, b: &Block, depth: usize) -> fmt::Result {
    let pad = "  ".repeat(depth);
    let real: Vec<usize> = b
        .iter()
        .enumerate()
        .filter(|(_, s)| !matches!(s, MacroStmt::Probe(_)))
        .map(|(i, _)| i)
        .collect();
    let last_real = real.last().copied();
    for (i, s) in b.iter().enumerate() {
        write!(f, "{pad}")?;
        write_stmt(f, s, depth)?;
        if !matches!(s, MacroStmt::Probe(_)) && Some(i) != last_real {
            f.write_str(";")?;
        }
        f.write_str("\n")?;
    }
    Ok(())
}

fn write_stmt(f: &mut fmt::Formatter<'_>, s: &MacroStmt, depth: usize) -> fmt::Result {
    let pad = "  ".repeat(depth);
    let block = |f: &mut fmt::Formatter<'_>, head: String, b: &Block| -> fmt::Result {
        writeln!(f, "{head}")?;
        writeln!(f, "{pad}begin")?;
        write_block(f, b, depth + 1)?;
        write!(f, "{pad}end")
    };
    match s {
        MacroStmt::IfPos(r, b) => block(f, format!("if {r} > 0 then"), b),
        MacroStmt::WhilePos(r, b) => block(f, format!("while {r} > 0 do"), b),
        MacroStmt::IfOdd(r, b) => block(f, format!("if odd({r}) then"), b),
        MacroStmt::WhileEven(r, b) => block(f, format!("while even({r}) do"), b),
        MacroStmt::Copy { dst, src } => write!(f, "{dst} := {src}"),
        MacroStmt::AddReg { dst, src } => write!(f, "{dst} := {dst} + {src}"),
        MacroStmt::MonusReg { dst, src } => write!(f, "{dst} := {dst} - {src}"),
        MacroStmt::MulConstAddConst { r, m, c: 0 } => write!(f, "{r} := {m} * {r}"),
        MacroStmt::MulConstAddConst { r, m, c } => write!(f, "{r} := {m} * {r} + {c}"),
        MacroStmt::DivConst { r, m } => write!(f, "{r} := {r} div {m}"),
        MacroStmt::AddConst { r, c } => write!(f, "{r} := {r} + {c}"),
        MacroStmt::SubConst { r, c } => write!(f, "{r} := {r} - {c}"),
        MacroStmt::Probe(name) => write!(f, "(* probe: {name} *)"),
    }
}

/// Pretty-prints in the source grammar; the output parses back to an equal
/// program.
impl fmt::Display for MacroProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "#registers {}", self.register_names.join(","))?;
        writeln!(f, "procedure {};", self.name)?;
        writeln!(f, "begin")?;
        write_block(f, &self.statements, 1)?;
        writeln!(f, "end;")
    }
}

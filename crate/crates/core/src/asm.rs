//! Line-oriented assembly text for counter programs.
//!
//! ```text
//! #registers 3
//! loop: decjz 1 end   ; move counter 1 to counter 2
//!       inc 2
//!       jmp loop
//! #probe done
//! end:  halt
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::isa::{Addr, Instruction, Program, Reg};

pub const DEFAULT_REGISTERS: u32 = 3;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct AsmError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> AsmError {
    AsmError {
        line,
        message: message.into(),
    }
}

enum Operand {
    Addr(Addr),
    Label(String, usize),
}

enum Pending {
    Ready(Instruction),
    DecJz(Reg, Operand),
    Jmp(Operand),
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '.')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

pub fn parse_asm(text: &str) -> Result<Program, AsmError> {
    let mut register_count = DEFAULT_REGISTERS;
    let mut labels: BTreeMap<String, Addr> = BTreeMap::new();
    let mut probes: BTreeMap<Addr, String> = BTreeMap::new();
    let mut pending_probe: Option<(String, usize)> = None;
    let mut pending_labels: Vec<(String, usize)> = Vec::new();
    let mut code: Vec<(Pending, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(directive) = line.strip_prefix('#') {
            let mut parts = directive.split_whitespace();
            match parts.next().map(str::to_ascii_lowercase).as_deref() {
                Some("registers") => {
                    let n = parts
                        .next()
                        .and_then(|s| s.parse::<u32>().ok())
                        .filter(|&n| n > 0)
                        .ok_or_else(|| err(line_no, "#registers expects a positive integer"))?;
                    register_count = n;
                }
                Some("probe") => {
                    let name = parts
                        .next()
                        .ok_or_else(|| err(line_no, "#probe expects a name"))?;
                    if pending_probe.is_some() {
                        return Err(err(line_no, "two probes on one instruction"));
                    }
                    pending_probe = Some((name.to_string(), line_no));
                }
                _ => return Err(err(line_no, format!("unknown directive '#{directive}'"))),
            }
            if parts.next().is_some() {
                return Err(err(line_no, "trailing tokens after directive"));
            }
            continue;
        }

        let mut rest = line;
        while let Some(colon) = rest.find(':') {
            let name = rest[..colon].trim();
            if !is_ident(name) {
                return Err(err(line_no, format!("bad label '{name}'")));
            }
            if labels.contains_key(name) || pending_labels.iter().any(|(l, _)| l == name) {
                return Err(err(line_no, format!("duplicate label '{name}'")));
            }
            pending_labels.push((name.to_string(), line_no));
            rest = rest[colon + 1..].trim();
        }
        if rest.is_empty() {
            continue;
        }

        let addr = code.len();
        for (l, _) in pending_labels.drain(..) {
            labels.insert(l, addr);
        }
        if let Some((name, _)) = pending_probe.take() {
            probes.insert(addr, name);
        }

        let toks: Vec<&str> = rest.split_whitespace().collect();
        let reg = |s: &str| -> Result<Reg, AsmError> {
            s.parse::<u32>()
                .ok()
                .filter(|&r| r > 0)
                .map(Reg)
                .ok_or_else(|| err(line_no, format!("bad register '{s}'")))
        };
        let operand = |s: &str| -> Result<Operand, AsmError> {
            if let Ok(a) = s.parse::<Addr>() {
                Ok(Operand::Addr(a))
            } else if is_ident(s) {
                Ok(Operand::Label(s.to_string(), line_no))
            } else {
                Err(err(line_no, format!("bad jump target '{s}'")))
            }
        };
        let op = toks[0].to_ascii_lowercase();
        let pending = match (op.as_str(), toks.len()) {
            ("inc", 2) => Pending::Ready(Instruction::Inc(reg(toks[1])?)),
            ("decjz", 3) => Pending::DecJz(reg(toks[1])?, operand(toks[2])?),
            ("jmp", 2) => Pending::Jmp(operand(toks[1])?),
            ("halt", 1) => Pending::Ready(Instruction::Halt),
            ("inc" | "decjz" | "jmp" | "halt", _) => {
                return Err(err(line_no, format!("wrong operand count for '{op}'")))
            }
            _ => return Err(err(line_no, format!("unknown opcode '{}'", toks[0]))),
        };
        code.push((pending, line_no));
    }

    if let Some((l, line)) = pending_labels.first() {
        return Err(err(*line, format!("label '{l}' is not followed by an instruction")));
    }
    if let Some((name, line)) = pending_probe {
        return Err(err(line, format!("probe '{name}' is not followed by an instruction")));
    }

    let resolve = |op: Operand| -> Result<Addr, AsmError> {
        match op {
            Operand::Addr(a) => Ok(a),
            Operand::Label(l, line) => labels
                .get(&l)
                .copied()
                .ok_or_else(|| err(line, format!("unknown label '{l}'"))),
        }
    };
    let mut instructions = Vec::with_capacity(code.len());
    for (p, _) in code {
        instructions.push(match p {
            Pending::Ready(i) => i,
            Pending::DecJz(r, op) => Instruction::DecJz(r, resolve(op)?),
            Pending::Jmp(op) => Instruction::Jmp(resolve(op)?),
        });
    }
    Ok(Program {
        instructions,
        register_count,
        labels,
        probes,
    })
}

/// Render a program so that `parse_asm(emit_asm(p)) == p`.
///
/// Jump targets print as a label when one exists at that address and as a
/// numeric address otherwise.
pub fn emit_asm(p: &Program) -> String {
    let mut by_addr: BTreeMap<Addr, Vec<&str>> = BTreeMap::new();
    for (name, &a) in &p.labels {
        by_addr.entry(a).or_default().push(name);
    }
    let target = |a: Addr| -> String {
        match by_addr.get(&a) {
            Some(names) => names[0].to_string(),
            None => a.to_string(),
        }
    };
    let width = p
        .labels
        .keys()
        .map(|l| l.len() + 2)
        .max()
        .unwrap_or(0)
        .max(4);

    let mut out = String::new();
    let _ = writeln!(out, "#registers {}", p.register_count);
    let used: BTreeSet<Addr> = p.instructions.iter().filter_map(Instruction::target).collect();
    for (addr, ins) in p.instructions.iter().enumerate() {
        if let Some(name) = p.probes.get(&addr) {
            let _ = writeln!(out, "#probe {name}");
        }
        let names = by_addr.get(&addr).cloned().unwrap_or_default();
        let (extra, last) = match names.split_last() {
            Some((last, extra)) => (extra.to_vec(), Some(*last)),
            None => (Vec::new(), None),
        };
        for l in extra {
            let _ = writeln!(out, "{l}:");
        }
        let prefix = last.map(|l| format!("{l}:")).unwrap_or_default();
        let body = match *ins {
            Instruction::Inc(r) => format!("inc {r}"),
            Instruction::DecJz(r, t) => format!("decjz {r} {}", target(t)),
            Instruction::Jmp(t) => format!("jmp {}", target(t)),
            Instruction::Halt => "halt".to_string(),
        };
        let _ = write!(out, "{prefix:<width$} {body}");
        if last.is_none() && used.contains(&addr) {
            let _ = write!(out, " ; @{addr}");
        }
        out.push('\n');
    }
    out
}

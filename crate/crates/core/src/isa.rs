//! The four-instruction counter machine ISA.

use std::collections::BTreeMap;
use std::fmt;

/// A 1-based counter index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reg(pub u32);

impl Reg {
    /// Zero-based slot in a counter vector.
    #[inline]
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Instruction address (0-based).
pub type Addr = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    /// Add one to the counter.
    Inc(Reg),
    /// Subtract one if the counter is positive, otherwise jump to the target.
    DecJz(Reg, Addr),
    Jmp(Addr),
    Halt,
}

impl Instruction {
    pub fn register(&self) -> Option<Reg> {
        match *self {
            Instruction::Inc(r) | Instruction::DecJz(r, _) => Some(r),
            _ => None,
        }
    }

    pub fn target(&self) -> Option<Addr> {
        match *self {
            Instruction::DecJz(_, t) | Instruction::Jmp(t) => Some(t),
            _ => None,
        }
    }
}

/// A counter machine program: instructions plus label and probe metadata.
///
/// Probes are attached to addresses, not instructions, so they never
/// consume a step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub instructions: Vec<Instruction>,
    pub register_count: u32,
    pub labels: BTreeMap<String, Addr>,
    pub probes: BTreeMap<Addr, String>,
}

impl Program {
    pub fn new(instructions: Vec<Instruction>, register_count: u32) -> Self {
        Program {
            instructions,
            register_count,
            labels: BTreeMap::new(),
            probes: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn with_probe(mut self, addr: Addr, name: impl Into<String>) -> Self {
        self.probes.insert(addr, name.into());
        self
    }

    /// Registers referenced by any instruction.
    pub fn registers_used(&self) -> std::collections::BTreeSet<Reg> {
        self.instructions
            .iter()
            .filter_map(Instruction::register)
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self, ValidateOptions::default())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidateOptions {
    /// Accept jump targets equal to the program length ("fall off the end").
    pub allow_end_target: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub addr: Option<Addr>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.addr {
            Some(a) => write!(f, "{} at address {}", self.message, a),
            None => f.write_str(&self.message),
        }
    }
}

/// The list of invariant violations found in a program; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate(p: &Program, opts: ValidateOptions) -> ValidationReport {
    let mut violations = Vec::new();
    let len = p.instructions.len();
    let mut bad = |addr: Option<Addr>, message: String| violations.push(Violation { addr, message });

    if p.register_count == 0 {
        bad(None, "register count must be positive".into());
    }
    let max_target = if opts.allow_end_target { len } else { len.saturating_sub(1) };
    for (addr, ins) in p.instructions.iter().enumerate() {
        if let Some(r) = ins.register() {
            if r.0 == 0 || r.0 > p.register_count {
                bad(Some(addr), format!("register out of range ({r})"));
            }
        }
        if let Some(t) = ins.target() {
            if len == 0 || t > max_target {
                bad(Some(addr), format!("target out of range ({t})"));
            }
        }
    }
    for (name, &addr) in &p.labels {
        if addr >= len {
            bad(Some(addr), format!("label '{name}' does not address an instruction"));
        }
    }
    for (&addr, name) in &p.probes {
        if addr >= len {
            bad(Some(addr), format!("probe '{name}' does not address an instruction"));
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Instruction::*;

    #[test]
    fn minimal_program_is_valid() {
        let p = Program::new(vec![Inc(Reg(1)), Halt], 3);
        assert!(p.validate().is_valid());
    }

    #[test]
    fn jump_past_end_is_reported() {
        let p = Program::new(vec![Jmp(5)], 3);
        let r = p.validate();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].addr, Some(0));
        assert_eq!(r.to_string(), "target out of range (5) at address 0");
    }

    #[test]
    fn end_target_allowed_when_configured() {
        let p = Program::new(vec![Jmp(1)], 1);
        assert!(!p.validate().is_valid());
        let opts = ValidateOptions { allow_end_target: true };
        assert!(validate(&p, opts).is_valid());
    }

    #[test]
    fn register_out_of_range_is_reported() {
        let p = Program::new(vec![DecJz(Reg(4), 0)], 3);
        let r = p.validate();
        assert!(r.to_string().contains("register out of range"));
        let p = Program::new(vec![Inc(Reg(0)), Halt], 3);
        assert!(!p.validate().is_valid());
    }

    #[test]
    fn dangling_probe_and_label() {
        let mut p = Program::new(vec![Halt], 1).with_probe(3, "x");
        p.labels.insert("end".into(), 1);
        assert_eq!(p.validate().violations.len(), 2);
    }
}

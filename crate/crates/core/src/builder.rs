//! Program construction with forward references.
//!
//! Code generators allocate [`Label`]s, emit instructions that jump to
//! them, and bind each label once its address is known. Every emitted
//! helper keeps one property the probe machinery relies on: the first
//! instruction of a helper's code is executed exactly once per use of the
//! helper, so a probe attached there fires once.

use std::collections::BTreeMap;

use crate::isa::{Addr, Instruction, Program, Reg};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Label(usize);

#[derive(Clone, Copy, Debug)]
enum Op {
    Inc(Reg),
    DecJz(Reg, Label),
    Jmp(Label),
    Halt,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("two probes ('{0}' and '{1}') resolve to address {2}")]
    ProbeCollision(String, String, Addr),
    #[error("probe '{0}' is not followed by any instruction")]
    DanglingProbe(String),
}

pub struct Builder {
    register_count: u32,
    ops: Vec<Op>,
    bound: Vec<Option<Addr>>,
    names: BTreeMap<String, Label>,
    probes: Vec<(Addr, String)>,
}

impl Builder {
    pub fn new(register_count: u32) -> Self {
        Builder {
            register_count,
            ops: Vec::new(),
            bound: Vec::new(),
            names: BTreeMap::new(),
            probes: Vec::new(),
        }
    }

    pub fn register_count(&self) -> u32 {
        self.register_count
    }

    /// The scratch counter: the highest-numbered register.
    pub fn scratch(&self) -> Reg {
        Reg(self.register_count)
    }

    pub fn here(&self) -> Addr {
        self.ops.len()
    }

    pub fn label(&mut self) -> Label {
        self.bound.push(None);
        Label(self.bound.len() - 1)
    }

    pub fn bind(&mut self, l: Label) {
        debug_assert!(self.bound[l.0].is_none(), "label bound twice");
        self.bound[l.0] = Some(self.ops.len());
    }

    /// A label bound right here.
    pub fn mark(&mut self) -> Label {
        let l = self.label();
        self.bind(l);
        l
    }

    /// Export a label under a public name in the finished program.
    pub fn name(&mut self, l: Label, name: impl Into<String>) {
        self.names.insert(name.into(), l);
    }

    /// Attach a probe to the next emitted instruction.
    pub fn probe(&mut self, name: impl Into<String>) {
        self.probes.push((self.ops.len(), name.into()));
    }

    pub fn inc(&mut self, r: Reg) {
        self.ops.push(Op::Inc(r));
    }

    pub fn inc_by(&mut self, r: Reg, n: u64) {
        for _ in 0..n {
            self.inc(r);
        }
    }

    pub fn decjz(&mut self, r: Reg, target: Label) {
        self.ops.push(Op::DecJz(r, target));
    }

    pub fn jmp(&mut self, target: Label) {
        self.ops.push(Op::Jmp(target));
    }

    pub fn halt(&mut self) {
        self.ops.push(Op::Halt);
    }

    /// Empty `from` into each of `to` (with multiplicity), exit to `exit`.
    ///
    /// Costs 1 step when `from` is 0, otherwise `from * (to.len() + 2)`.
    pub fn drain(&mut self, from: Reg, to: &[Reg], exit: Label) {
        self.decjz(from, exit);
        let body = self.mark();
        for &t in to {
            self.inc(t);
        }
        self.decjz(from, exit);
        self.jmp(body);
    }

    /// Set `r` to zero, then continue at `exit`.
    ///
    /// Costs 1 step when `r` is 0, otherwise `2 * r`.
    pub fn clear(&mut self, r: Reg, exit: Label) {
        self.decjz(r, exit);
        let body = self.mark();
        self.decjz(r, exit);
        self.jmp(body);
    }

    /// `r := r div m`, branching on the remainder.
    ///
    /// `r` is moved to the scratch counter and rebuilt one group of `m` at a
    /// time; when scratch runs dry `j` units into a group, control goes to
    /// `on_rem[j]`. Scratch is 0 at every exit.
    pub fn divmod(&mut self, r: Reg, m: u64, on_rem: &[Label]) {
        assert!(m >= 1 && on_rem.len() as u64 == m);
        let s = self.scratch();
        let back = self.label();
        self.drain(r, &[s], back);
        self.bind(back);
        self.decjz(s, on_rem[0]);
        let group = self.mark();
        for j in 1..m {
            self.decjz(s, on_rem[j as usize]);
        }
        self.inc(r);
        self.decjz(s, on_rem[0]);
        self.jmp(group);
    }

    pub fn finish(self) -> Result<Program, BuildError> {
        let resolve = |l: Label| self.bound[l.0].expect("jump to an unbound label");
        let instructions: Vec<Instruction> = self
            .ops
            .iter()
            .map(|op| match *op {
                Op::Inc(r) => Instruction::Inc(r),
                Op::DecJz(r, l) => Instruction::DecJz(r, resolve(l)),
                Op::Jmp(l) => Instruction::Jmp(resolve(l)),
                Op::Halt => Instruction::Halt,
            })
            .collect();
        let mut probes: BTreeMap<Addr, String> = BTreeMap::new();
        for (addr, name) in self.probes {
            if addr >= instructions.len() {
                return Err(BuildError::DanglingProbe(name));
            }
            if let Some(prev) = probes.get(&addr) {
                return Err(BuildError::ProbeCollision(prev.clone(), name, addr));
            }
            probes.insert(addr, name);
        }
        let labels = self
            .names
            .iter()
            .map(|(n, &l)| (n.clone(), resolve(l)))
            .collect();
        Ok(Program {
            instructions,
            register_count: self.register_count,
            labels,
            probes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::run;
    use crate::nat::Nat;

    fn nats(v: &[u64]) -> Vec<Nat> {
        v.iter().map(|&x| Nat::from_u64(x)).collect()
    }

    #[test]
    fn drain_cost_matches_formula() {
        for v in 0..20u64 {
            let mut b = Builder::new(3);
            let done = b.label();
            b.drain(Reg(1), &[Reg(2), Reg(2)], done);
            b.bind(done);
            b.halt();
            let p = b.finish().unwrap();
            let (s, st) = run(&p, nats(&[v, 1, 0]), None).unwrap();
            assert_eq!(s.counters, nats(&[0, 1 + 2 * v, 0]));
            let expected = if v == 0 { 1 } else { v * 4 };
            assert_eq!(st.steps, expected + 1);
        }
    }

    #[test]
    fn divmod_branches_on_remainder() {
        for v in 0..40u64 {
            let mut b = Builder::new(3);
            let rems: Vec<Label> = (0..5).map(|_| b.label()).collect();
            b.divmod(Reg(1), 5, &rems);
            for (j, &l) in rems.iter().enumerate() {
                b.bind(l);
                b.inc_by(Reg(2), j as u64);
                b.halt();
            }
            let p = b.finish().unwrap();
            let (s, _) = run(&p, nats(&[v, 0, 0]), None).unwrap();
            assert_eq!(s.counters, nats(&[v / 5, v % 5, 0]), "v = {v}");
        }
    }

    #[test]
    fn probe_collision_is_reported() {
        let mut b = Builder::new(2);
        b.probe("a");
        b.probe("b");
        b.halt();
        assert!(matches!(b.finish(), Err(BuildError::ProbeCollision(..))));
    }
}

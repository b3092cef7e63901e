//! Behavioral contracts of the macro expansions, checked against native
//! arithmetic on a four-counter machine: A, B, C and scratch.

#![allow(dead_code)]

use proptest::prelude::*;
use tricount_core::macros::{expand, MacroKind, MacroProgram, MacroStmt, RegisterRef};
use tricount_core::{run_accelerated, run, Nat, Reg};

pub const KINDS: [MacroKind; 11] = [
    MacroKind::IfPos,
    MacroKind::WhilePos,
    MacroKind::IfOdd,
    MacroKind::WhileEven,
    MacroKind::Copy,
    MacroKind::AddReg,
    MacroKind::MonusReg,
    MacroKind::MulConstAddConst,
    MacroKind::DivConst,
    MacroKind::AddConst,
    MacroKind::SubConst,
];

const NAMES: [&str; 3] = ["A", "B", "C"];

fn r(i: usize) -> RegisterRef {
    RegisterRef::new(NAMES[i], i as u32 + 1)
}

#[derive(Clone, Debug)]
pub struct Case {
    pub kind: MacroKind,
    /// Register operands, 0 = A, 1 = B. Block constructs test `dst`.
    pub dst: usize,
    pub src: usize,
    pub m: u64,
    pub c: u64,
    pub values: [u64; 3],
    /// Also run the naive interpreter.
    pub naive: bool,
}

pub fn case(kind: MacroKind) -> impl Strategy<Value = Case> {
    (
        0..2usize,
        0..2usize,
        1..=8u64,
        0..=8u64,
        [0..1u64 << 16, 0..1u64 << 16, 0..1u64 << 16],
        prop::bool::weighted(0.01),
    )
        .prop_map(move |(dst, src, m, c, values, naive)| Case {
            kind,
            dst,
            src,
            m,
            c,
            values,
            naive,
        })
}

fn bump_c() -> MacroStmt {
    MacroStmt::AddConst { r: r(2), c: 1 }
}

fn statement(k: &Case) -> MacroStmt {
    let (d, s) = (r(k.dst), r(k.src));
    match k.kind {
        MacroKind::IfPos => MacroStmt::IfPos(d, vec![bump_c()]),
        MacroKind::WhilePos => MacroStmt::WhilePos(d.clone(), vec![MacroStmt::SubConst { r: d, c: 1 }, bump_c()]),
        MacroKind::IfOdd => MacroStmt::IfOdd(d, vec![bump_c()]),
        MacroKind::WhileEven => MacroStmt::WhileEven(d.clone(), vec![MacroStmt::AddConst { r: d, c: 1 }, bump_c()]),
        MacroKind::Copy => MacroStmt::Copy { dst: d, src: s },
        MacroKind::AddReg => MacroStmt::AddReg { dst: d, src: s },
        MacroKind::MonusReg => MacroStmt::MonusReg { dst: d, src: s },
        MacroKind::MulConstAddConst => MacroStmt::MulConstAddConst { r: d, m: k.m, c: k.c },
        MacroKind::DivConst => MacroStmt::DivConst { r: d, m: k.m },
        MacroKind::AddConst => MacroStmt::AddConst { r: d, c: k.c },
        MacroKind::SubConst => MacroStmt::SubConst { r: d, c: k.c },
        MacroKind::Probe => unreachable!(),
    }
}

/// Native-arithmetic result for registers A, B, C.
fn expected(k: &Case) -> [u64; 3] {
    let mut v = k.values;
    let (d, s) = (k.dst, k.src);
    match k.kind {
        MacroKind::IfPos => v[2] += (v[d] > 0) as u64,
        MacroKind::WhilePos => {
            v[2] += v[d];
            v[d] = 0;
        }
        MacroKind::IfOdd => v[2] += v[d] % 2,
        MacroKind::WhileEven => {
            if v[d] % 2 == 0 {
                v[d] += 1;
                v[2] += 1;
            }
        }
        MacroKind::Copy => v[d] = v[s],
        MacroKind::AddReg => v[d] += v[s],
        MacroKind::MonusReg => v[d] = v[d].saturating_sub(v[s]),
        MacroKind::MulConstAddConst => v[d] = k.m * v[d] + k.c,
        MacroKind::DivConst => v[d] /= k.m,
        MacroKind::AddConst => v[d] += k.c,
        MacroKind::SubConst => v[d] = v[d].saturating_sub(k.c),
        MacroKind::Probe => unreachable!(),
    }
    v
}

/// Run one case. Checks the result registers (which covers the frame
/// property for every register the macro does not name), scratch
/// restoration and the register budget.
pub fn check(k: &Case) -> Result<(), String> {
    let mp = MacroProgram {
        name: "t".into(),
        statements: vec![statement(k)],
        register_names: NAMES.iter().map(|s| s.to_string()).collect(),
    };
    let p = expand(&mp, 4).map_err(|e| e.to_string())?;
    if !p.validate().is_valid() {
        return Err("expansion does not validate".into());
    }
    if p.registers_used().iter().any(|&Reg(i)| !(1..=4).contains(&i)) {
        return Err("register outside [1, 4]".into());
    }
    let init: Vec<Nat> = k.values.iter().map(|&v| Nat::from(v)).chain([Nat::zero()]).collect();
    let (state, stats) = run_accelerated(&p, init.clone(), None).map_err(|e| e.to_string())?;
    let want: Vec<Nat> = expected(k).iter().map(|&v| Nat::from(v)).chain([Nat::zero()]).collect();
    if state.counters != want {
        return Err(format!("{k:?}: got {:?}, want {:?}", state.counters, want));
    }
    if k.naive {
        let (ns, nst) = run(&p, init, None).map_err(|e| e.to_string())?;
        if ns != state || nst != stats {
            return Err(format!("{k:?}: naive and accelerated runs differ"));
        }
    }
    Ok(())
}

mod common;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use tricount_core::macros::MacroKind;

fn run_kind(kind: MacroKind) {
    let mut runner = TestRunner::new(Config::with_cases(512));
    runner
        .run(&common::case(kind), |c| {
            common::check(&c).map_err(TestCaseError::fail)
        })
        .unwrap();
}

#[test]
fn if_pos() {
    run_kind(MacroKind::IfPos);
}

#[test]
fn while_pos() {
    run_kind(MacroKind::WhilePos);
}

#[test]
fn if_odd() {
    run_kind(MacroKind::IfOdd);
}

#[test]
fn while_even() {
    run_kind(MacroKind::WhileEven);
}

#[test]
fn copy() {
    run_kind(MacroKind::Copy);
}

#[test]
fn add_reg() {
    run_kind(MacroKind::AddReg);
}

#[test]
fn monus_reg() {
    run_kind(MacroKind::MonusReg);
}

#[test]
fn mul_const_add_const() {
    run_kind(MacroKind::MulConstAddConst);
}

#[test]
fn div_const() {
    run_kind(MacroKind::DivConst);
}

#[test]
fn add_const() {
    run_kind(MacroKind::AddConst);
}

#[test]
fn sub_const() {
    run_kind(MacroKind::SubConst);
}

proptest! {
    #[test]
    fn nested_blocks_keep_scratch_clean(a in 0u64..300, b in 0u64..300) {
        use tricount_core::macros::{expand, parse_macros};
        let text = "#registers A,B,C\nprocedure t;\nbegin\n\
            while A > 0 do begin\n\
              if odd(A) then begin C := C + B end;\n\
              A := A div 2;\n\
              B := 2 * B\n\
            end\nend;";
        let p = expand(&parse_macros(text).unwrap(), 4).unwrap();
        let init = [a, b, 0, 0].map(tricount_core::Nat::from).to_vec();
        let (s, _) = tricount_core::run_accelerated(&p, init, None).unwrap();
        let bits = 64 - a.leading_zeros();
        let want = [0, b << bits, a * b, 0].map(tricount_core::Nat::from).to_vec();
        prop_assert_eq!(s.counters, want);
    }
}

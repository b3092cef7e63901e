//! Three-counter machines.
//!
//! * [`isa`], [`machine`], [`asm`]: the four-instruction counter machine,
//!   its naive and cycle-accelerated interpreters and its assembly text.
//! * [`macros`]: a small structured language (conditionals, loops and
//!   arithmetic updates) compiled to counter programs with one scratch
//!   counter.
//! * [`mult`]: a three-counter multiplication program that runs in time
//!   polynomial in its inputs, with structural and bound checks.
//! * [`tm`], [`tm_compile`]: deterministic Turing machines and their
//!   compilation to three-counter programs over a base-2^k tape encoding.
//! * [`bench`]: sweeps, CSV records and log-log growth fits.

pub mod asm;
pub mod bench;
pub mod builder;
pub mod isa;
pub mod machine;
pub mod macros;
pub mod mult;
pub mod nat;
pub mod tm;
pub mod tm_compile;

pub use isa::{Addr, Instruction, Program, Reg};
pub use machine::{run, run_accelerated, MachineState, Mode, RunStats};
pub use nat::Nat;

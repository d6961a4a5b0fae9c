//! Proof microkernel and decision toolkit for differential refinement logic.
//!
//! The crate is organized around a small trusted core and a set of untrusted
//! helpers built on top of it:
//!
//! * [`syntax`] — AST, parser and pretty-printer for terms, formulas and
//!   hybrid programs.
//! * [`statics`] — free/bound/must-bound variable computation and the
//!   finite-or-cofinite variable set algebra.
//! * [`usubst`] — one-pass uniform substitution with taboo sets, the sole
//!   admissibility gatekeeper.
//! * [`axioms`] — the finite registry of concrete axiom formulas.
//! * [`kernel`] — the trusted proof checker (`Provable`, proof scripts).
//! * [`arith`] — validity for linear real arithmetic by Gauss elimination
//!   and Fourier-Motzkin.
//! * [`oracle`] — executable concrete semantics over exact rationals, used
//!   as a falsification oracle by the test suites.
//! * [`decider`] — refinement decision procedure for the loop-free /
//!   idempotent-controller fragment.
//! * [`tactics`] — untrusted helpers that compile high-level reasoning into
//!   kernel proof steps.

pub mod arith;
pub mod axioms;
pub mod decider;
pub mod kernel;
pub mod oracle;
pub mod poly;
pub mod statics;
pub mod syntax;
pub mod tactics;
pub mod usubst;

pub use syntax::{Formula, HybridProgram, Term, Variable};

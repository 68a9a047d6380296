//! Oxide: a type checker and instrumented interpreter for a core calculus
//! of Rust-style ownership and borrowing.
//!
//! The crate is organized around the pipeline: [`parser`] turns `.ox` source
//! into a [`ast::GlobalEnv`] plus a program body, [`typeck`] runs the
//! flow-sensitive borrow checker over it, and [`interp`] executes programs
//! under a small-step semantics with optional dynamic safety checks. The
//! [`probes`] module turns the metatheory (progress, preservation, check
//! erasure) into executable desk-scale test suites, and [`cli`] wires
//! everything into the `oxide` binary.

pub mod ast;
pub mod cli;
pub mod diag;
pub mod interp;
pub mod parser;
pub mod probes;
pub mod typeck;

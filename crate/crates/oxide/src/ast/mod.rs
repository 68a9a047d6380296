//! Core syntax trees, environments, and the place algebra shared by the
//! checker and the interpreter.

pub mod env;
pub mod expr;
pub mod global;
pub mod place;
pub mod ty;

pub use env::{EnvGroup, PlaceEnv, TyVarEnv};
pub use expr::{escape_str, free_roots, ty_loan_roots, CtorFields, Expr, ExprKind};
pub use global::{FnDef, GlobalEnv, StructDef, StructFields};
pub use place::{overlaps, prefix_of, Loan, LoanSet, OwnQual, PathElem, Place, Provenance};
pub use ty::{FnType, Kind, Type};

#[cfg(test)]
mod tests;

//! The sized/unsized type grammar, kinds, and type rendering.

use std::fmt;

use super::env::PlaceEnv;
use super::place::{OwnQual, Provenance};

/// The two kinds: ordinary types and provenances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Type,
    Prov,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Type => f.write_str("type"),
            Kind::Prov => f.write_str("provenance"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Type {
    Unit,
    U32,
    Bool,
    /// `String` from the surface syntax; non-copyable, so moves are
    /// exercised on a base type.
    Str,
    TyVar(String),
    Tuple(Vec<Type>),
    /// Struct instantiation: name, provenance arguments, type arguments.
    Struct(String, Vec<Provenance>, Vec<Type>),
    Ref(Provenance, OwnQual, Box<Type>),
    Array(Box<Type>, usize),
    /// Unsized; may appear only under a reference.
    Slice(Box<Type>),
    Fn(FnType),
}

/// Function and closure types. Top-level functions always carry an empty
/// captured environment; closures carry the places they consumed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FnType {
    pub prov_params: Vec<String>,
    pub ty_params: Vec<String>,
    pub params: Vec<Type>,
    pub ret: Box<Type>,
    pub captured: PlaceEnv,
}

impl Type {
    pub fn shrd_ref(prov: Provenance, referent: Type) -> Type {
        Type::Ref(prov, OwnQual::Shrd, Box::new(referent))
    }

    pub fn uniq_ref(prov: Provenance, referent: Type) -> Type {
        Type::Ref(prov, OwnQual::Uniq, Box::new(referent))
    }

    pub fn tuple(elems: impl IntoIterator<Item = Type>) -> Type {
        Type::Tuple(elems.into_iter().collect())
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Type::Unit | Type::U32 | Type::Bool | Type::Str)
    }

    /// Sizedness: slices cannot live on the stack directly.
    pub fn is_sized(&self) -> bool {
        !matches!(self, Type::Slice(_))
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Unit => f.write_str("()"),
            Type::U32 => f.write_str("u32"),
            Type::Bool => f.write_str("bool"),
            Type::Str => f.write_str("String"),
            Type::TyVar(name) => f.write_str(name),
            Type::Tuple(elems) => {
                f.write_str("(")?;
                for (i, elem) in elems.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{elem}")?;
                }
                if elems.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
            Type::Struct(name, provs, tys) => {
                f.write_str(name)?;
                if !provs.is_empty() || !tys.is_empty() {
                    f.write_str("<")?;
                    let mut first = true;
                    for p in provs {
                        if !first {
                            f.write_str(", ")?;
                        }
                        first = false;
                        write!(f, "{p}")?;
                    }
                    for t in tys {
                        if !first {
                            f.write_str(", ")?;
                        }
                        first = false;
                        write!(f, "{t}")?;
                    }
                    f.write_str(">")?;
                }
                Ok(())
            }
            Type::Ref(prov, qual, referent) => write!(f, "&{prov} {qual} {referent}"),
            Type::Array(elem, len) => write!(f, "[{elem}; {len}]"),
            Type::Slice(elem) => write!(f, "[{elem}]"),
            Type::Fn(fn_ty) => {
                f.write_str("fn")?;
                if !fn_ty.captured.is_empty() {
                    f.write_str("[")?;
                    for (i, (place, ty)) in fn_ty.captured.entries().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{place}: {ty}")?;
                    }
                    f.write_str("]")?;
                }
                if !fn_ty.prov_params.is_empty() || !fn_ty.ty_params.is_empty() {
                    f.write_str("<")?;
                    let mut first = true;
                    for p in &fn_ty.prov_params {
                        if !first {
                            f.write_str(", ")?;
                        }
                        first = false;
                        write!(f, "'{p}")?;
                    }
                    for t in &fn_ty.ty_params {
                        if !first {
                            f.write_str(", ")?;
                        }
                        first = false;
                        f.write_str(t)?;
                    }
                    f.write_str(">")?;
                }
                f.write_str("(")?;
                for (i, param) in fn_ty.params.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{param}")?;
                }
                write!(f, ") -> {}", fn_ty.ret)
            }
        }
    }
}

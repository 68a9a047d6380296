//! The global environment Σ: top-level function and struct definitions.

use crate::diag::SourceSpan;

use super::expr::Expr;
use super::place::PathElem;
use super::ty::Type;

#[derive(Clone, Debug)]
pub struct FnDef {
    pub name: String,
    pub prov_params: Vec<String>,
    pub ty_params: Vec<String>,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    pub body: Expr,
    pub span: SourceSpan,
}

// Definitions compare structurally; spans are location metadata.
impl PartialEq for FnDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.prov_params == other.prov_params
            && self.ty_params == other.ty_params
            && self.params == other.params
            && self.ret == other.ret
            && self.body == other.body
    }
}

impl Eq for FnDef {}

#[derive(Clone, Debug, PartialEq)]
pub enum StructFields {
    Positional(Vec<Type>),
    Named(Vec<(String, Type)>),
}

impl StructFields {
    pub fn len(&self) -> usize {
        match self {
            StructFields::Positional(ts) => ts.len(),
            StructFields::Named(fs) => fs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Field selectors in declaration order paired with field types.
    /// Positional structs project like tuples; named structs use fields.
    pub fn selectors(&self) -> Vec<(PathElem, &Type)> {
        match self {
            StructFields::Positional(ts) => ts
                .iter()
                .enumerate()
                .map(|(i, t)| (PathElem::TupleProj(i), t))
                .collect(),
            StructFields::Named(fs) => fs
                .iter()
                .map(|(name, t)| (PathElem::Field(name.clone()), t))
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StructDef {
    pub name: String,
    pub prov_params: Vec<String>,
    pub ty_params: Vec<String>,
    pub fields: StructFields,
    pub span: SourceSpan,
}

impl PartialEq for StructDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.prov_params == other.prov_params
            && self.ty_params == other.ty_params
            && self.fields == other.fields
    }
}

impl Eq for StructDef {}

/// Top-level definitions, kept in declaration order for deterministic
/// checking and reporting. Names are unique across each namespace.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GlobalEnv {
    pub fns: Vec<FnDef>,
    pub structs: Vec<StructDef>,
}

impl GlobalEnv {
    pub fn new() -> GlobalEnv {
        GlobalEnv::default()
    }

    pub fn fn_def(&self, name: &str) -> Option<&FnDef> {
        self.fns.iter().find(|f| f.name == name)
    }

    pub fn struct_def(&self, name: &str) -> Option<&StructDef> {
        self.structs.iter().find(|s| s.name == name)
    }
}

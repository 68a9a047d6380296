//! Expressions, including the runtime-only forms that arise during
//! evaluation (pops, pointer values, packaged closures).

use std::collections::BTreeSet;
use std::fmt;

use crate::diag::SourceSpan;
use crate::interp::value::{ClosureData, PtrTarget};

use super::place::{OwnQual, Place, Provenance};
use super::ty::Type;

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Unit,
    Num(u32),
    Bool(bool),
    Str(String),
    /// A place usage: a move for non-copyable types, a copy otherwise.
    Use(Place),
    Borrow(OwnQual, Place),
    /// Borrow one element of an array or slice; the loan covers the whole
    /// aggregate.
    BorrowIdx(OwnQual, Place, Box<Expr>),
    BorrowSlice(OwnQual, Place, Box<Expr>, Box<Expr>),
    Seq(Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Assign(Place, Box<Expr>),
    Let {
        name: String,
        annot: Type,
        rhs: Box<Expr>,
        body: Box<Expr>,
    },
    App {
        callee: Box<Expr>,
        prov_args: Vec<Provenance>,
        ty_args: Vec<Type>,
        args: Vec<Expr>,
    },
    Closure {
        prov_params: Vec<String>,
        ty_params: Vec<String>,
        params: Vec<(String, Type)>,
        body: Box<Expr>,
    },
    Tuple(Vec<Expr>),
    StructCtor {
        name: String,
        prov_args: Vec<Provenance>,
        ty_args: Vec<Type>,
        fields: CtorFields,
    },
    ArrayLit(Vec<Expr>),
    Abort(String),

    // Runtime-only forms below; the parser never produces them.
    /// Evaluate the body, then drop the most recent binding group rooted at
    /// the identifier, yielding the body's value.
    Pop(String, Box<Expr>),
    PtrVal(OwnQual, PtrTarget),
    ClosureVal(Box<ClosureData>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CtorFields {
    Positional(Vec<Expr>),
    Named(Vec<(String, Expr)>),
}

impl CtorFields {
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            CtorFields::Positional(es) => es.iter().collect(),
            CtorFields::Named(fs) => fs.iter().map(|(_, e)| e).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            CtorFields::Positional(es) => es.len(),
            CtorFields::Named(fs) => fs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An expression with its source span. Equality ignores spans so that
/// parse/pretty round trips and runtime rewrites compare structurally.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

impl Expr {
    pub fn new(kind: ExprKind, span: SourceSpan) -> Expr {
        Expr { kind, span }
    }

    /// An expression with a synthesized span, for runtime-built terms.
    pub fn synth(kind: ExprKind) -> Expr {
        Expr::new(kind, SourceSpan::synthetic())
    }

    pub fn unit() -> Expr {
        Expr::synth(ExprKind::Unit)
    }

    /// True for fully evaluated expressions: constants, pointers, packaged
    /// closures, and aggregates of values.
    pub fn is_value(&self) -> bool {
        match &self.kind {
            ExprKind::Unit
            | ExprKind::Num(_)
            | ExprKind::Bool(_)
            | ExprKind::Str(_)
            | ExprKind::PtrVal(..)
            | ExprKind::ClosureVal(_) => true,
            ExprKind::Tuple(elems) | ExprKind::ArrayLit(elems) => {
                elems.iter().all(Expr::is_value)
            }
            ExprKind::StructCtor { fields, .. } => {
                fields.exprs().iter().all(|e| e.is_value())
            }
            _ => false,
        }
    }

    /// True when the node is one of the runtime-only forms anywhere in the
    /// tree. Source programs must be free of them.
    pub fn has_runtime_nodes(&self) -> bool {
        match &self.kind {
            ExprKind::Pop(..) | ExprKind::PtrVal(..) | ExprKind::ClosureVal(_) => true,
            _ => self.children().iter().any(|e| e.has_runtime_nodes()),
        }
    }

    fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Unit
            | ExprKind::Num(_)
            | ExprKind::Bool(_)
            | ExprKind::Str(_)
            | ExprKind::Use(_)
            | ExprKind::Borrow(..)
            | ExprKind::Abort(_)
            | ExprKind::PtrVal(..)
            | ExprKind::ClosureVal(_) => Vec::new(),
            ExprKind::BorrowIdx(_, _, idx) => vec![idx],
            ExprKind::BorrowSlice(_, _, lo, hi) => vec![lo, hi],
            ExprKind::Seq(a, b) => vec![a, b],
            ExprKind::If(c, t, e) => vec![c, t, e],
            ExprKind::Assign(_, rhs) => vec![rhs],
            ExprKind::Let { rhs, body, .. } => vec![rhs, body],
            ExprKind::App { callee, args, .. } => {
                let mut out = vec![callee.as_ref()];
                out.extend(args.iter());
                out
            }
            ExprKind::Closure { body, .. } => vec![body],
            ExprKind::Tuple(es) | ExprKind::ArrayLit(es) => es.iter().collect(),
            ExprKind::StructCtor { fields, .. } => fields.exprs(),
            ExprKind::Pop(_, body) => vec![body],
        }
    }
}

/// Root identifiers with a free occurrence in `e`. Used by the weakening
/// scan and by closure capture. Loan sets inside written types count as
/// occurrences of their places' roots: a type that names a loan on `pt`
/// still needs `pt` to exist.
pub fn free_roots(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free_roots(e, &mut out);
    out
}

fn collect_free_roots(e: &Expr, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Use(place) | ExprKind::Borrow(_, place) => {
            out.insert(place.root.clone());
        }
        ExprKind::BorrowIdx(_, place, idx) => {
            out.insert(place.root.clone());
            collect_free_roots(idx, out);
        }
        ExprKind::BorrowSlice(_, place, lo, hi) => {
            out.insert(place.root.clone());
            collect_free_roots(lo, out);
            collect_free_roots(hi, out);
        }
        ExprKind::Assign(place, rhs) => {
            out.insert(place.root.clone());
            collect_free_roots(rhs, out);
        }
        ExprKind::Let {
            name,
            annot,
            rhs,
            body,
        } => {
            ty_loan_roots(annot, out);
            collect_free_roots(rhs, out);
            let mut body_roots = BTreeSet::new();
            collect_free_roots(body, &mut body_roots);
            body_roots.remove(name);
            out.extend(body_roots);
        }
        ExprKind::Closure { params, body, .. } => {
            for (_, ty) in params {
                ty_loan_roots(ty, out);
            }
            let mut body_roots = BTreeSet::new();
            collect_free_roots(body, &mut body_roots);
            for (name, _) in params {
                body_roots.remove(name);
            }
            out.extend(body_roots);
        }
        ExprKind::App {
            callee,
            prov_args,
            ty_args,
            args,
        } => {
            collect_free_roots(callee, out);
            for p in prov_args {
                prov_loan_roots(p, out);
            }
            for t in ty_args {
                ty_loan_roots(t, out);
            }
            for a in args {
                collect_free_roots(a, out);
            }
        }
        ExprKind::StructCtor {
            prov_args,
            ty_args,
            fields,
            ..
        } => {
            for p in prov_args {
                prov_loan_roots(p, out);
            }
            for t in ty_args {
                ty_loan_roots(t, out);
            }
            for f in fields.exprs() {
                collect_free_roots(f, out);
            }
        }
        // A pop is not a read and a packaged value reads nothing.
        ExprKind::Pop(_, body) => collect_free_roots(body, out),
        ExprKind::PtrVal(..) | ExprKind::ClosureVal(_) => {}
        _ => {
            for child in e.children() {
                collect_free_roots(child, out);
            }
        }
    }
}

/// Roots of places mentioned in concrete loan sets within a type.
pub fn ty_loan_roots(ty: &Type, out: &mut BTreeSet<String>) {
    match ty {
        Type::Unit | Type::U32 | Type::Bool | Type::Str | Type::TyVar(_) => {}
        Type::Tuple(elems) => {
            for t in elems {
                ty_loan_roots(t, out);
            }
        }
        Type::Struct(_, provs, tys) => {
            for p in provs {
                prov_loan_roots(p, out);
            }
            for t in tys {
                ty_loan_roots(t, out);
            }
        }
        Type::Ref(prov, _, referent) => {
            prov_loan_roots(prov, out);
            ty_loan_roots(referent, out);
        }
        Type::Array(elem, _) | Type::Slice(elem) => ty_loan_roots(elem, out),
        Type::Fn(fn_ty) => {
            for t in &fn_ty.params {
                ty_loan_roots(t, out);
            }
            ty_loan_roots(&fn_ty.ret, out);
            for (place, t) in fn_ty.captured.entries() {
                out.insert(place.root.clone());
                ty_loan_roots(t, out);
            }
        }
    }
}

fn prov_loan_roots(prov: &Provenance, out: &mut BTreeSet<String>) {
    if let Provenance::Concrete(loans) = prov {
        for loan in loans {
            out.insert(loan.place.root.clone());
        }
    }
}

pub fn escape_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Rendering. Statement position lets sequences and lets print bare
// (`a; b`, `let x: t = e; rest`); in expression position they print as a
// braced block so that parsing the result reproduces the same tree.
// ---------------------------------------------------------------------------

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, true)
    }
}

fn is_stmt_sequence(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Seq(..) | ExprKind::Let { .. })
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, stmt_pos: bool) -> fmt::Result {
    match &e.kind {
        ExprKind::Seq(..) | ExprKind::Let { .. } if !stmt_pos => {
            f.write_str("{ ")?;
            write_expr(f, e, true)?;
            f.write_str(" }")
        }
        ExprKind::Seq(a, b) => {
            write_stmt_head(f, a)?;
            // Branch statements end in a brace and take no semicolon, as
            // in the surface language.
            if matches!(a.kind, ExprKind::If(..)) {
                f.write_str(" ")?;
            } else {
                f.write_str("; ")?;
            }
            write_expr(f, b, true)
        }
        ExprKind::Let {
            name,
            annot,
            rhs,
            body,
        } => {
            write!(f, "let {name}: {annot} = ")?;
            write_expr(f, rhs, false)?;
            f.write_str("; ")?;
            write_expr(f, body, true)
        }
        ExprKind::Unit => f.write_str("()"),
        ExprKind::Num(n) => write!(f, "{n}"),
        ExprKind::Bool(b) => write!(f, "{b}"),
        ExprKind::Str(s) => write!(f, "\"{}\"", escape_str(s)),
        ExprKind::Use(place) => write!(f, "{place}"),
        ExprKind::Borrow(q, place) => write!(f, "&{q} {place}"),
        ExprKind::BorrowIdx(q, place, idx) => {
            write!(f, "&{q} {}[", index_place(place))?;
            write_expr(f, idx, false)?;
            f.write_str("]")
        }
        ExprKind::BorrowSlice(q, place, lo, hi) => {
            write!(f, "&{q} {}[", index_place(place))?;
            write_expr(f, lo, false)?;
            f.write_str("..")?;
            write_expr(f, hi, false)?;
            f.write_str("]")
        }
        ExprKind::If(cond, then_e, else_e) => {
            f.write_str("if ")?;
            write_expr(f, cond, false)?;
            f.write_str(" { ")?;
            write_expr(f, then_e, true)?;
            f.write_str(" } else { ")?;
            write_expr(f, else_e, true)?;
            f.write_str(" }")
        }
        ExprKind::Assign(place, rhs) => {
            if !stmt_pos {
                f.write_str("(")?;
            }
            write!(f, "{place} = ")?;
            write_expr(f, rhs, false)?;
            if !stmt_pos {
                f.write_str(")")?;
            }
            Ok(())
        }
        ExprKind::App {
            callee,
            prov_args,
            ty_args,
            args,
        } => {
            match &callee.kind {
                ExprKind::Use(place) if place.is_root() => f.write_str(&place.root)?,
                _ => {
                    f.write_str("(")?;
                    write_expr(f, callee, false)?;
                    f.write_str(")")?;
                }
            }
            write_ty_args(f, prov_args, ty_args)?;
            f.write_str("(")?;
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_expr(f, arg, false)?;
            }
            f.write_str(")")
        }
        ExprKind::Closure {
            prov_params,
            ty_params,
            params,
            body,
        } => {
            if !prov_params.is_empty() || !ty_params.is_empty() {
                f.write_str("<")?;
                let mut first = true;
                for p in prov_params {
                    if !first {
                        f.write_str(", ")?;
                    }
                    first = false;
                    write!(f, "'{p}")?;
                }
                for t in ty_params {
                    if !first {
                        f.write_str(", ")?;
                    }
                    first = false;
                    f.write_str(t)?;
                }
                f.write_str("> ")?;
            }
            f.write_str("|")?;
            for (i, (name, ty)) in params.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{name}: {ty}")?;
            }
            f.write_str("| { ")?;
            write_expr(f, body, true)?;
            f.write_str(" }")
        }
        ExprKind::Tuple(elems) => {
            f.write_str("(")?;
            for (i, elem) in elems.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_expr(f, elem, false)?;
            }
            if elems.len() == 1 {
                f.write_str(",")?;
            }
            f.write_str(")")
        }
        ExprKind::StructCtor {
            name,
            prov_args,
            ty_args,
            fields,
        } => {
            f.write_str(name)?;
            write_ty_args(f, prov_args, ty_args)?;
            match fields {
                CtorFields::Positional(es) => {
                    f.write_str("(")?;
                    for (i, e) in es.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write_expr(f, e, false)?;
                    }
                    f.write_str(")")
                }
                CtorFields::Named(fs) => {
                    f.write_str(" { ")?;
                    for (i, (fname, e)) in fs.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{fname}: ")?;
                        write_expr(f, e, false)?;
                    }
                    f.write_str(" }")
                }
            }
        }
        ExprKind::ArrayLit(elems) => {
            f.write_str("[")?;
            for (i, elem) in elems.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_expr(f, elem, false)?;
            }
            f.write_str("]")
        }
        ExprKind::Abort(msg) => write!(f, "abort(\"{}\")", escape_str(msg)),
        ExprKind::Pop(name, body) => {
            write!(f, "pop {name} {{ ")?;
            write_expr(f, body, true)?;
            f.write_str(" }")
        }
        ExprKind::PtrVal(q, target) => write!(f, "&{q} {target}"),
        ExprKind::ClosureVal(data) => write!(f, "{data}"),
    }
}

/// A place in indexing position: one that ends in a dereference takes
/// parentheses so the brackets read as indexing, `(*s)[1]`.
fn index_place(place: &crate::ast::Place) -> String {
    if place.path.last() == Some(&crate::ast::PathElem::Deref) {
        format!("({place})")
    } else {
        place.to_string()
    }
}

/// First statement of a sequence; itself rendered in statement position so
/// nested assignments print bare, but blocks stay delimited.
fn write_stmt_head(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if is_stmt_sequence(e) {
        write_expr(f, e, false)
    } else {
        write_expr(f, e, true)
    }
}

fn write_ty_args(
    f: &mut fmt::Formatter<'_>,
    prov_args: &[Provenance],
    ty_args: &[Type],
) -> fmt::Result {
    if prov_args.is_empty() && ty_args.is_empty() {
        return Ok(());
    }
    f.write_str("::<")?;
    let mut first = true;
    for p in prov_args {
        if !first {
            f.write_str(", ")?;
        }
        first = false;
        write!(f, "{p}")?;
    }
    for t in ty_args {
        if !first {
            f.write_str(", ")?;
        }
        first = false;
        write!(f, "{t}")?;
    }
    f.write_str(">")
}

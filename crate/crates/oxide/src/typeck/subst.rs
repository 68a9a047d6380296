//! Provenance and type-variable substitution over types and expressions.

use std::collections::BTreeMap;

use crate::ast::ty::FnType;
use crate::ast::{CtorFields, Expr, ExprKind, LoanSet, PlaceEnv, Provenance, Type};

/// The result of subtyping: each provenance variable in the annotated type
/// mapped to the concrete loan set computed for the actual type. A variable
/// constrained twice holds the union of its loan sets.
pub type Substitution = BTreeMap<String, LoanSet>;

/// Extend `dst` with `src`, unioning loan sets on collision.
pub fn merge_substitution(dst: &mut Substitution, src: Substitution) {
    for (name, loans) in src {
        dst.entry(name).or_default().extend(loans);
    }
}

/// A generic instantiation maps provenance parameters to provenance
/// arguments (possibly variables) and type parameters to type arguments.
#[derive(Clone, Debug, Default)]
pub struct Instantiation {
    pub provs: BTreeMap<String, Provenance>,
    pub tys: BTreeMap<String, Type>,
}

impl Instantiation {
    pub fn is_empty(&self) -> bool {
        self.provs.is_empty() && self.tys.is_empty()
    }

    pub fn from_substitution(subst: &Substitution) -> Instantiation {
        Instantiation {
            provs: subst
                .iter()
                .map(|(name, loans)| (name.clone(), Provenance::Concrete(loans.clone())))
                .collect(),
            tys: BTreeMap::new(),
        }
    }

    pub fn apply_prov(&self, prov: &Provenance) -> Provenance {
        match prov {
            Provenance::Var(name) => self
                .provs
                .get(name)
                .cloned()
                .unwrap_or_else(|| prov.clone()),
            Provenance::Concrete(_) => prov.clone(),
        }
    }

    pub fn apply_ty(&self, ty: &Type) -> Type {
        match ty {
            Type::Unit | Type::U32 | Type::Bool | Type::Str => ty.clone(),
            Type::TyVar(name) => self.tys.get(name).cloned().unwrap_or_else(|| ty.clone()),
            Type::Tuple(elems) => Type::Tuple(elems.iter().map(|t| self.apply_ty(t)).collect()),
            Type::Struct(name, provs, tys) => Type::Struct(
                name.clone(),
                provs.iter().map(|p| self.apply_prov(p)).collect(),
                tys.iter().map(|t| self.apply_ty(t)).collect(),
            ),
            Type::Ref(prov, qual, referent) => Type::Ref(
                self.apply_prov(prov),
                *qual,
                Box::new(self.apply_ty(referent)),
            ),
            Type::Array(elem, len) => Type::Array(Box::new(self.apply_ty(elem)), *len),
            Type::Slice(elem) => Type::Slice(Box::new(self.apply_ty(elem))),
            Type::Fn(fn_ty) => {
                // Inner binders shadow the instantiation.
                let mut inner = self.clone();
                for p in &fn_ty.prov_params {
                    inner.provs.remove(p);
                }
                for t in &fn_ty.ty_params {
                    inner.tys.remove(t);
                }
                let mut captured = PlaceEnv::new();
                for group in fn_ty.captured.groups() {
                    let entries = group
                        .entries
                        .iter()
                        .map(|(p, t)| (p.clone(), inner.apply_ty(t)))
                        .collect();
                    captured.push_group(group.root.clone(), entries);
                }
                Type::Fn(FnType {
                    prov_params: fn_ty.prov_params.clone(),
                    ty_params: fn_ty.ty_params.clone(),
                    params: fn_ty.params.iter().map(|t| inner.apply_ty(t)).collect(),
                    ret: Box::new(inner.apply_ty(&fn_ty.ret)),
                    captured,
                })
            }
        }
    }

    /// Rewrite every type annotation inside an expression, leaving the term
    /// structure untouched.
    pub fn apply_expr(&self, e: &Expr) -> Expr {
        let kind = match &e.kind {
            ExprKind::Let {
                name,
                annot,
                rhs,
                body,
            } => ExprKind::Let {
                name: name.clone(),
                annot: self.apply_ty(annot),
                rhs: Box::new(self.apply_expr(rhs)),
                body: Box::new(self.apply_expr(body)),
            },
            ExprKind::Closure {
                prov_params,
                ty_params,
                params,
                body,
            } => {
                let mut inner = self.clone();
                for p in prov_params {
                    inner.provs.remove(p);
                }
                for t in ty_params {
                    inner.tys.remove(t);
                }
                ExprKind::Closure {
                    prov_params: prov_params.clone(),
                    ty_params: ty_params.clone(),
                    params: params
                        .iter()
                        .map(|(n, t)| (n.clone(), inner.apply_ty(t)))
                        .collect(),
                    body: Box::new(inner.apply_expr(body)),
                }
            }
            ExprKind::App {
                callee,
                prov_args,
                ty_args,
                args,
            } => ExprKind::App {
                callee: Box::new(self.apply_expr(callee)),
                prov_args: prov_args.iter().map(|p| self.apply_prov(p)).collect(),
                ty_args: ty_args.iter().map(|t| self.apply_ty(t)).collect(),
                args: args.iter().map(|a| self.apply_expr(a)).collect(),
            },
            ExprKind::StructCtor {
                name,
                prov_args,
                ty_args,
                fields,
            } => ExprKind::StructCtor {
                name: name.clone(),
                prov_args: prov_args.iter().map(|p| self.apply_prov(p)).collect(),
                ty_args: ty_args.iter().map(|t| self.apply_ty(t)).collect(),
                fields: match fields {
                    CtorFields::Positional(es) => {
                        CtorFields::Positional(es.iter().map(|e| self.apply_expr(e)).collect())
                    }
                    CtorFields::Named(fs) => CtorFields::Named(
                        fs.iter()
                            .map(|(n, e)| (n.clone(), self.apply_expr(e)))
                            .collect(),
                    ),
                },
            },
            ExprKind::Seq(a, b) => {
                ExprKind::Seq(Box::new(self.apply_expr(a)), Box::new(self.apply_expr(b)))
            }
            ExprKind::If(c, t, els) => ExprKind::If(
                Box::new(self.apply_expr(c)),
                Box::new(self.apply_expr(t)),
                Box::new(self.apply_expr(els)),
            ),
            ExprKind::Assign(place, rhs) => {
                ExprKind::Assign(place.clone(), Box::new(self.apply_expr(rhs)))
            }
            ExprKind::BorrowIdx(q, place, idx) => {
                ExprKind::BorrowIdx(*q, place.clone(), Box::new(self.apply_expr(idx)))
            }
            ExprKind::BorrowSlice(q, place, lo, hi) => ExprKind::BorrowSlice(
                *q,
                place.clone(),
                Box::new(self.apply_expr(lo)),
                Box::new(self.apply_expr(hi)),
            ),
            ExprKind::Tuple(es) => {
                ExprKind::Tuple(es.iter().map(|e| self.apply_expr(e)).collect())
            }
            ExprKind::ArrayLit(es) => {
                ExprKind::ArrayLit(es.iter().map(|e| self.apply_expr(e)).collect())
            }
            ExprKind::Pop(name, body) => {
                ExprKind::Pop(name.clone(), Box::new(self.apply_expr(body)))
            }
            other => other.clone(),
        };
        Expr::new(kind, e.span.clone())
    }
}

/// Replace solved provenance variables with their concrete loan sets in a
/// type. Variables outside the substitution's domain are left alone.
pub fn apply_subst_ty(subst: &Substitution, ty: &Type) -> Type {
    Instantiation::from_substitution(subst).apply_ty(ty)
}

/// As `apply_subst_ty`, over every annotation in an expression.
pub fn apply_subst_expr(subst: &Substitution, e: &Expr) -> Expr {
    if subst.is_empty() {
        return e.clone();
    }
    Instantiation::from_substitution(subst).apply_expr(e)
}

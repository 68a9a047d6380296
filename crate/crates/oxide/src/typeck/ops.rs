//! Type-level judgments: unification, substitution-yielding subtyping,
//! copyability, well-formedness, environment intersection, and the
//! place-expansion metafunction.

use std::collections::BTreeSet;

use crate::ast::{
    GlobalEnv, LoanSet, OwnQual, PathElem, Place, PlaceEnv, Provenance, StructFields, TyVarEnv,
    Type,
};
use crate::diag::Code;

use super::subst::{merge_substitution, Instantiation, Substitution};
use super::CheckError;

/// Instantiate a struct's declared fields at the given arguments, yielding
/// selector/type pairs in declaration order.
pub fn struct_fields(
    globals: &GlobalEnv,
    name: &str,
    prov_args: &[Provenance],
    ty_args: &[Type],
) -> Result<Vec<(PathElem, Type)>, CheckError> {
    let def = globals.struct_def(name).ok_or_else(|| {
        CheckError::new(Code::Unbound, format!("struct `{name}` is not defined"))
    })?;
    if def.prov_params.len() != prov_args.len() || def.ty_params.len() != ty_args.len() {
        return Err(CheckError::new(
            Code::Arity,
            format!(
                "struct `{name}` expects {} provenance and {} type arguments, got {} and {}",
                def.prov_params.len(),
                def.ty_params.len(),
                prov_args.len(),
                ty_args.len()
            ),
        ));
    }
    let mut inst = Instantiation::default();
    for (param, arg) in def.prov_params.iter().zip(prov_args) {
        inst.provs.insert(param.clone(), arg.clone());
    }
    for (param, arg) in def.ty_params.iter().zip(ty_args) {
        inst.tys.insert(param.clone(), arg.clone());
    }
    Ok(match &def.fields {
        StructFields::Positional(tys) => tys
            .iter()
            .enumerate()
            .map(|(i, t)| (PathElem::TupleProj(i), inst.apply_ty(t)))
            .collect(),
        StructFields::Named(fields) => fields
            .iter()
            .map(|(fname, t)| (PathElem::Field(fname.clone()), inst.apply_ty(t)))
            .collect(),
    })
}

/// All places rooted at `root` given its type: the root itself, aggregate
/// components through projections and fields, and for references the
/// dereference place with its own expansion. Arrays and slices are not
/// expanded per element.
pub fn places_typ(
    globals: &GlobalEnv,
    root: &Place,
    ty: &Type,
) -> Result<Vec<(Place, Type)>, CheckError> {
    let mut out = Vec::new();
    expand_places(globals, root, ty, &mut out, 0)?;
    Ok(out)
}

fn expand_places(
    globals: &GlobalEnv,
    root: &Place,
    ty: &Type,
    out: &mut Vec<(Place, Type)>,
    depth: usize,
) -> Result<(), CheckError> {
    if depth > 64 {
        return Err(CheckError::new(
            Code::Kind,
            format!("type expansion for `{root}` does not terminate"),
        ));
    }
    out.push((root.clone(), ty.clone()));
    match ty {
        Type::Tuple(elems) => {
            for (i, elem) in elems.iter().enumerate() {
                expand_places(globals, &root.proj(i), elem, out, depth + 1)?;
            }
        }
        Type::Struct(name, prov_args, ty_args) => {
            for (sel, field_ty) in struct_fields(globals, name, prov_args, ty_args)? {
                expand_places(globals, &root.extend(sel), &field_ty, out, depth + 1)?;
            }
        }
        Type::Ref(_, _, referent) => {
            expand_places(globals, &root.deref(), referent, out, depth + 1)?;
        }
        _ => {}
    }
    Ok(())
}

/// A type is copyable when duplicating a value of it cannot duplicate a
/// claim to uniqueness or ownership: no unique reference anywhere inside,
/// no type variable (generic types are never copyable), no owning base
/// type, and no struct. Structs are nominal and move-only, as a double use
/// of a plain `Point` must be rejected; shared references to them still
/// copy freely.
pub fn is_copyable(globals: &GlobalEnv, ty: &Type) -> bool {
    copyable(globals, ty, 0)
}

fn copyable(globals: &GlobalEnv, ty: &Type, depth: usize) -> bool {
    if depth > 64 {
        return false;
    }
    match ty {
        Type::Unit | Type::U32 | Type::Bool => true,
        Type::Str => false,
        Type::TyVar(_) => false,
        Type::Ref(_, OwnQual::Uniq, _) => false,
        Type::Ref(_, OwnQual::Shrd, referent) => !demands_uniqueness(globals, referent, depth + 1),
        Type::Tuple(elems) => elems.iter().all(|t| copyable(globals, t, depth + 1)),
        Type::Array(elem, _) => copyable(globals, elem, depth + 1),
        Type::Slice(_) => false,
        Type::Struct(..) => false,
        Type::Fn(fn_ty) => fn_ty.captured.is_empty(),
    }
}

/// True when the type contains a unique reference or a type variable
/// anywhere. A shared reference to such a type must not be duplicated
/// freely through copies of copies.
fn demands_uniqueness(globals: &GlobalEnv, ty: &Type, depth: usize) -> bool {
    if depth > 64 {
        return true;
    }
    match ty {
        Type::Unit | Type::U32 | Type::Bool | Type::Str => false,
        Type::TyVar(_) => true,
        Type::Ref(_, OwnQual::Uniq, _) => true,
        Type::Ref(_, OwnQual::Shrd, referent) => demands_uniqueness(globals, referent, depth + 1),
        Type::Tuple(elems) => elems
            .iter()
            .any(|t| demands_uniqueness(globals, t, depth + 1)),
        Type::Array(elem, _) | Type::Slice(elem) => demands_uniqueness(globals, elem, depth + 1),
        Type::Struct(name, prov_args, ty_args) => {
            match struct_fields(globals, name, prov_args, ty_args) {
                Ok(fields) => fields
                    .iter()
                    .any(|(_, t)| demands_uniqueness(globals, t, depth + 1)),
                Err(_) => true,
            }
        }
        Type::Fn(fn_ty) => !fn_ty.captured.is_empty(),
    }
}

fn unify_prov(p1: &Provenance, p2: &Provenance) -> Result<Provenance, CheckError> {
    match (p1, p2) {
        (Provenance::Concrete(a), Provenance::Concrete(b)) => {
            let mut loans = a.clone();
            loans.extend(b.iter().cloned());
            Ok(Provenance::Concrete(loans))
        }
        (Provenance::Var(a), Provenance::Var(b)) if a == b => Ok(Provenance::Var(a.clone())),
        _ => Err(CheckError::new(
            Code::Unify,
            format!("cannot unify provenances `{p1}` and `{p2}`"),
        )),
    }
}

/// Symmetric type unification. References union their provenances; a
/// unique and a shared reference unify to a shared reference with the
/// combined loan set; everything else must agree structurally. The global
/// environment is part of the judgment even though no rule expands a
/// struct: same-named instantiations unify argumentwise.
#[allow(clippy::only_used_in_recursion)]
pub fn unify(globals: &GlobalEnv, t1: &Type, t2: &Type) -> Result<Type, CheckError> {
    match (t1, t2) {
        (Type::Unit, Type::Unit) => Ok(Type::Unit),
        (Type::U32, Type::U32) => Ok(Type::U32),
        (Type::Bool, Type::Bool) => Ok(Type::Bool),
        (Type::Str, Type::Str) => Ok(Type::Str),
        (Type::TyVar(a), Type::TyVar(b)) if a == b => Ok(Type::TyVar(a.clone())),
        (Type::Tuple(xs), Type::Tuple(ys)) if xs.len() == ys.len() => {
            let elems = xs
                .iter()
                .zip(ys)
                .map(|(x, y)| unify(globals, x, y))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Type::Tuple(elems))
        }
        (Type::Array(e1, n1), Type::Array(e2, n2)) if n1 == n2 => {
            Ok(Type::Array(Box::new(unify(globals, e1, e2)?), *n1))
        }
        (Type::Slice(e1), Type::Slice(e2)) => {
            Ok(Type::Slice(Box::new(unify(globals, e1, e2)?)))
        }
        (Type::Ref(p1, q1, r1), Type::Ref(p2, q2, r2)) => {
            let prov = unify_prov(p1, p2)?;
            let referent = unify(globals, r1, r2)?;
            // Joining a unique and a shared reference demotes to shared.
            let qual = if q1 == q2 { *q1 } else { OwnQual::Shrd };
            Ok(Type::Ref(prov, qual, Box::new(referent)))
        }
        (Type::Struct(n1, pa1, ta1), Type::Struct(n2, pa2, ta2))
            if n1 == n2 && pa1.len() == pa2.len() && ta1.len() == ta2.len() =>
        {
            let provs = pa1
                .iter()
                .zip(pa2)
                .map(|(a, b)| unify_prov(a, b))
                .collect::<Result<Vec<_>, _>>()?;
            let tys = ta1
                .iter()
                .zip(ta2)
                .map(|(a, b)| unify(globals, a, b))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Type::Struct(n1.clone(), provs, tys))
        }
        (Type::Fn(f1), Type::Fn(f2)) if f1 == f2 => Ok(Type::Fn(f1.clone())),
        _ => Err(CheckError::new(
            Code::Unify,
            format!("cannot unify `{t1}` with `{t2}`"),
        )),
    }
}

/// Substitution-yielding subtyping: `actual` against `annotated`. When a
/// concrete provenance on the left meets a provenance variable on the
/// right, the variable is solved to that loan set — unless it is rigid
/// (universally quantified in the enclosing scope), in which case only the
/// variable itself matches. Concrete-against-concrete requires the actual
/// loans to be covered by the annotation.
pub fn subtype(
    globals: &GlobalEnv,
    actual: &Type,
    annotated: &Type,
    rigid: &BTreeSet<String>,
) -> Result<Substitution, CheckError> {
    let mut subst = Substitution::new();
    subtype_into(globals, actual, annotated, rigid, &mut subst)?;
    Ok(subst)
}

fn mismatch(actual: &Type, annotated: &Type) -> CheckError {
    CheckError::new(
        Code::Subtype,
        format!("`{actual}` is not a subtype of `{annotated}`"),
    )
}

fn subtype_prov(
    actual: &Provenance,
    annotated: &Provenance,
    rigid: &BTreeSet<String>,
    subst: &mut Substitution,
) -> Result<(), CheckError> {
    match (actual, annotated) {
        (Provenance::Concrete(loans), Provenance::Var(name)) if !rigid.contains(name) => {
            merge_substitution(subst, Substitution::from([(name.clone(), loans.clone())]));
            Ok(())
        }
        (Provenance::Concrete(actual_loans), Provenance::Concrete(annot_loans)) => {
            if actual_loans.is_subset(annot_loans) {
                Ok(())
            } else {
                Err(CheckError::new(
                    Code::Subtype,
                    format!(
                        "loan set `{}` is not covered by annotated `{}`",
                        Provenance::Concrete(actual_loans.clone()),
                        Provenance::Concrete(annot_loans.clone())
                    ),
                ))
            }
        }
        (Provenance::Var(a), Provenance::Var(b)) if a == b => Ok(()),
        _ => Err(CheckError::new(
            Code::Subtype,
            format!("provenance `{actual}` does not match `{annotated}`"),
        )),
    }
}

#[allow(clippy::only_used_in_recursion)]
fn subtype_into(
    globals: &GlobalEnv,
    actual: &Type,
    annotated: &Type,
    rigid: &BTreeSet<String>,
    subst: &mut Substitution,
) -> Result<(), CheckError> {
    match (actual, annotated) {
        (Type::Unit, Type::Unit)
        | (Type::U32, Type::U32)
        | (Type::Bool, Type::Bool)
        | (Type::Str, Type::Str) => Ok(()),
        (Type::TyVar(a), Type::TyVar(b)) if a == b => Ok(()),
        (Type::Tuple(xs), Type::Tuple(ys)) if xs.len() == ys.len() => {
            for (x, y) in xs.iter().zip(ys) {
                subtype_into(globals, x, y, rigid, subst)?;
            }
            Ok(())
        }
        (Type::Array(e1, n1), Type::Array(e2, n2)) if n1 == n2 => {
            subtype_into(globals, e1, e2, rigid, subst)
        }
        (Type::Slice(e1), Type::Slice(e2)) => subtype_into(globals, e1, e2, rigid, subst),
        (Type::Ref(p1, q1, r1), Type::Ref(p2, q2, r2)) => {
            if q1 != q2 {
                return Err(CheckError::new(
                    Code::Subtype,
                    format!("reference qualifier mismatch: `{actual}` vs `{annotated}`"),
                ));
            }
            subtype_prov(p1, p2, rigid, subst)?;
            subtype_into(globals, r1, r2, rigid, subst)
        }
        (Type::Struct(n1, pa1, ta1), Type::Struct(n2, pa2, ta2))
            if n1 == n2 && pa1.len() == pa2.len() && ta1.len() == ta2.len() =>
        {
            for (a, b) in pa1.iter().zip(pa2) {
                subtype_prov(a, b, rigid, subst)?;
            }
            for (a, b) in ta1.iter().zip(ta2) {
                subtype_into(globals, a, b, rigid, subst)?;
            }
            Ok(())
        }
        (Type::Fn(f1), Type::Fn(f2)) => {
            if f1.prov_params != f2.prov_params
                || f1.ty_params != f2.ty_params
                || f1.params.len() != f2.params.len()
            {
                return Err(mismatch(actual, annotated));
            }
            // Parameters are contravariant, the result covariant.
            for (p1, p2) in f1.params.iter().zip(&f2.params) {
                subtype_into(globals, p2, p1, rigid, subst)?;
            }
            subtype_into(globals, &f1.ret, &f2.ret, rigid, subst)?;
            // Captured environments must agree on their places; the
            // annotation must account for everything the closure consumed.
            let actual_caps: Vec<_> = f1.captured.entries().collect();
            let annot_caps: Vec<_> = f2.captured.entries().collect();
            if actual_caps.len() != annot_caps.len() {
                return Err(CheckError::new(
                    Code::Subtype,
                    format!(
                        "closure captures are not reflected in the annotation: `{actual}` vs `{annotated}`"
                    ),
                ));
            }
            for ((pa, ta), (pb, tb)) in actual_caps.iter().zip(&annot_caps) {
                if pa != pb {
                    return Err(CheckError::new(
                        Code::Subtype,
                        format!("captured place `{pa}` does not match annotated `{pb}`"),
                    ));
                }
                subtype_into(globals, ta, tb, rigid, subst)?;
            }
            Ok(())
        }
        _ => Err(mismatch(actual, annotated)),
    }
}

/// Intersection of two place environments: the domain is the intersection
/// of domains, each shared place's type is the unification of the two
/// sides, and binding order follows the left environment. Binding groups
/// pair positionally per root so shadowed bindings join with their own
/// counterparts, not with the shadow.
pub fn env_intersect(
    globals: &GlobalEnv,
    g1: &PlaceEnv,
    g2: &PlaceEnv,
) -> Result<PlaceEnv, CheckError> {
    let mut out = PlaceEnv::new();
    let mut seen: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    for group in g1.groups() {
        let k = {
            let counter = seen.entry(group.root.as_str()).or_insert(0);
            let k = *counter;
            *counter += 1;
            k
        };
        let Some(other) = g2
            .groups()
            .iter()
            .filter(|g| g.root == group.root)
            .nth(k)
        else {
            continue;
        };
        let mut entries = Vec::new();
        for (place, t1) in &group.entries {
            if let Some((_, t2)) = other.entries.iter().rev().find(|(p, _)| p == place) {
                entries.push((place.clone(), unify(globals, t1, t2)?));
            }
        }
        if !entries.is_empty() {
            out.push_group(group.root.clone(), entries);
        }
    }
    Ok(out)
}

/// Type well-formedness: every loan place inside a concrete provenance is
/// bound in the environment, every provenance and type variable is in
/// scope, struct instantiations match their declared arity, and unsized
/// types appear only behind references.
pub fn well_formed_type(
    globals: &GlobalEnv,
    tyvars: &TyVarEnv,
    env: &PlaceEnv,
    ty: &Type,
) -> Result<(), CheckError> {
    wf(globals, tyvars, env, ty, WfMode::strict())
}

/// Well-formedness of a written annotation before subtyping has solved its
/// provenance variables: free provenance variables are binders here, but
/// struct names, arities, type variables, loans, and sizedness must hold.
pub fn annot_well_formed(
    globals: &GlobalEnv,
    tyvars: &TyVarEnv,
    env: &PlaceEnv,
    ty: &Type,
) -> Result<(), CheckError> {
    wf(
        globals,
        tyvars,
        env,
        ty,
        WfMode {
            allow_unsized: false,
            free_prov_ok: true,
        },
    )
}

#[derive(Clone, Copy)]
struct WfMode {
    allow_unsized: bool,
    free_prov_ok: bool,
}

impl WfMode {
    fn strict() -> WfMode {
        WfMode {
            allow_unsized: false,
            free_prov_ok: false,
        }
    }

    fn behind_ref(self) -> WfMode {
        WfMode {
            allow_unsized: true,
            ..self
        }
    }

    fn component(self) -> WfMode {
        WfMode {
            allow_unsized: false,
            ..self
        }
    }
}

fn wf(
    globals: &GlobalEnv,
    tyvars: &TyVarEnv,
    env: &PlaceEnv,
    ty: &Type,
    mode: WfMode,
) -> Result<(), CheckError> {
    match ty {
        Type::Unit | Type::U32 | Type::Bool | Type::Str => Ok(()),
        Type::TyVar(name) => {
            if tyvars.has_ty(name) {
                Ok(())
            } else {
                Err(CheckError::new(
                    Code::Wf,
                    format!("type variable `{name}` is not in scope"),
                ))
            }
        }
        Type::Tuple(elems) => {
            for elem in elems {
                wf(globals, tyvars, env, elem, mode.component())?;
            }
            Ok(())
        }
        Type::Struct(name, prov_args, ty_args) => {
            for prov in prov_args {
                wf_prov(tyvars, env, prov, mode)?;
            }
            for arg in ty_args {
                wf(globals, tyvars, env, arg, mode.component())?;
            }
            // Arity and existence.
            struct_fields(globals, name, prov_args, ty_args)?;
            Ok(())
        }
        Type::Ref(prov, _, referent) => {
            wf_prov(tyvars, env, prov, mode)?;
            wf(globals, tyvars, env, referent, mode.behind_ref())
        }
        Type::Array(elem, _) => wf(globals, tyvars, env, elem, mode.component()),
        Type::Slice(elem) => {
            if !mode.allow_unsized {
                return Err(CheckError::new(
                    Code::Wf,
                    format!("slice type `{ty}` may only appear behind a reference"),
                ));
            }
            wf(globals, tyvars, env, elem, mode.component())
        }
        Type::Fn(fn_ty) => {
            let mut inner = tyvars.clone();
            for p in &fn_ty.prov_params {
                inner.push(p.clone(), crate::ast::Kind::Prov);
            }
            for t in &fn_ty.ty_params {
                inner.push(t.clone(), crate::ast::Kind::Type);
            }
            for param in &fn_ty.params {
                wf(globals, &inner, env, param, mode.component())?;
            }
            wf(globals, &inner, env, &fn_ty.ret, mode.component())?;
            // Captured places were consumed and need not remain bound, but
            // the loans their types hold must still be live.
            for (_, cap_ty) in fn_ty.captured.entries() {
                wf(globals, &inner, env, cap_ty, mode.component())?;
            }
            Ok(())
        }
    }
}

fn wf_prov(
    tyvars: &TyVarEnv,
    env: &PlaceEnv,
    prov: &Provenance,
    mode: WfMode,
) -> Result<(), CheckError> {
    match prov {
        Provenance::Var(name) => {
            if mode.free_prov_ok || tyvars.has_prov(name) {
                Ok(())
            } else {
                Err(CheckError::new(
                    Code::Wf,
                    format!("provenance variable `'{name}` is not in scope"),
                ))
            }
        }
        Provenance::Concrete(loans) => {
            for loan in loans {
                if !env.contains(&loan.place) {
                    return Err(CheckError::new(
                        Code::Wf,
                        format!("`{}` does not live long enough", loan.place),
                    ));
                }
            }
            Ok(())
        }
    }
}

/// The loan sets reachable inside a type, including through referents,
/// aggregate components, and closure captured environments.
pub fn type_loans(globals: &GlobalEnv, ty: &Type, out: &mut LoanSet) {
    type_loans_depth(globals, ty, out, 0)
}

fn type_loans_depth(globals: &GlobalEnv, ty: &Type, out: &mut LoanSet, depth: usize) {
    if depth > 64 {
        return;
    }
    match ty {
        Type::Unit | Type::U32 | Type::Bool | Type::Str | Type::TyVar(_) => {}
        Type::Tuple(elems) => {
            for t in elems {
                type_loans_depth(globals, t, out, depth + 1);
            }
        }
        Type::Struct(name, prov_args, ty_args) => {
            for prov in prov_args {
                if let Provenance::Concrete(loans) = prov {
                    out.extend(loans.iter().cloned());
                }
            }
            if let Ok(fields) = struct_fields(globals, name, prov_args, ty_args) {
                for (_, t) in fields {
                    type_loans_depth(globals, &t, out, depth + 1);
                }
            }
        }
        Type::Ref(prov, _, referent) => {
            if let Provenance::Concrete(loans) = prov {
                out.extend(loans.iter().cloned());
            }
            type_loans_depth(globals, referent, out, depth + 1);
        }
        Type::Array(elem, _) | Type::Slice(elem) => {
            type_loans_depth(globals, elem, out, depth + 1)
        }
        Type::Fn(fn_ty) => {
            for (_, cap_ty) in fn_ty.captured.entries() {
                type_loans_depth(globals, cap_ty, out, depth + 1);
            }
        }
    }
}

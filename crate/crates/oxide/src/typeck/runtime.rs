//! Typing of runtime stores: reconstruct a place environment from shapes,
//! assigning references the concrete singleton provenance of their current
//! target. Used by the preservation probe to re-check residual
//! configurations, and by the checker's runtime-only typing rules.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::ty::FnType;
use crate::ast::{Kind, Place, PlaceEnv, Provenance, StructDef, StructFields, TyVarEnv, Type};
use crate::ast::{GlobalEnv, LoanSet};
use crate::diag::Code;
use crate::interp::value::{ClosureData, Constant, PtrTarget, Shape, Store, Value};

use super::ops::places_typ;
use super::{walk_component_type, CheckError, Checker};

/// Reconstruct a place environment that the store satisfies: one entry per
/// store entry, plus dereference expansions for references, mirroring the
/// expansions the static checker introduces at bindings.
pub fn reconstruct_env(globals: &GlobalEnv, store: &Store) -> Result<PlaceEnv, CheckError> {
    let mut env = PlaceEnv::new();
    for group in store.groups() {
        let mut entries = Vec::new();
        for (place, _) in &group.entries {
            let ty = place_type(globals, store, place)?;
            if let Type::Ref(..) = ty {
                // The referent's places are virtual (they alias storage at
                // the target), so only the checker's view grows here.
                let expanded = places_typ(globals, place, &ty)?;
                entries.extend(expanded);
            } else {
                entries.push((place.clone(), ty));
            }
        }
        env.push_group(group.root.clone(), entries);
    }
    Ok(env)
}

/// Type of the shape stored at `place`.
pub fn place_type(globals: &GlobalEnv, store: &Store, place: &Place) -> Result<Type, CheckError> {
    let mut seen = BTreeSet::new();
    place_type_guarded(globals, store, place, &mut seen)
}

fn place_type_guarded(
    globals: &GlobalEnv,
    store: &Store,
    place: &Place,
    seen: &mut BTreeSet<Place>,
) -> Result<Type, CheckError> {
    if !seen.insert(place.clone()) {
        return Err(CheckError::new(
            Code::Kind,
            format!("cyclic store reference through `{place}`"),
        ));
    }
    let shape = store.lookup(place).ok_or_else(|| {
        CheckError::new(Code::Unbound, format!("`{place}` is not in the store"))
    })?;
    let ty = match shape {
        Shape::Prim(c) => constant_type(c),
        Shape::Tuple(n) => {
            let mut elems = Vec::with_capacity(*n);
            for i in 0..*n {
                elems.push(place_type_guarded(globals, store, &place.proj(i), seen)?);
            }
            Type::Tuple(elems)
        }
        Shape::Struct { name, selectors } => {
            let mut field_tys = Vec::with_capacity(selectors.len());
            for sel in selectors {
                field_tys.push(place_type_guarded(
                    globals,
                    store,
                    &place.extend(sel.clone()),
                    seen,
                )?);
            }
            infer_struct_type(globals, name, &field_tys)?
        }
        Shape::Array(values) => array_type(globals, store, values)?,
        Shape::Ptr(qual, target) => {
            let referent = target_type(globals, store, target, seen)?;
            Type::Ref(
                Provenance::single(*qual, target.base().clone()),
                *qual,
                Box::new(referent),
            )
        }
        Shape::Closure(data) => closure_type(globals, store, data)?,
    };
    seen.remove(place);
    Ok(ty)
}

fn constant_type(c: &Constant) -> Type {
    match c {
        Constant::Unit => Type::Unit,
        Constant::U32(_) => Type::U32,
        Constant::Bool(_) => Type::Bool,
        Constant::Str(_) => Type::Str,
    }
}

fn array_type(globals: &GlobalEnv, store: &Store, values: &[Value]) -> Result<Type, CheckError> {
    let first = values.first().ok_or_else(|| {
        CheckError::new(Code::Unify, "cannot reconstruct the type of an empty array")
    })?;
    Ok(Type::Array(
        Box::new(value_type(globals, store, first)?),
        values.len(),
    ))
}

/// Type of a materialized value (array elements, in-flight values).
pub fn value_type(globals: &GlobalEnv, store: &Store, v: &Value) -> Result<Type, CheckError> {
    match v {
        Value::Prim(c) => Ok(constant_type(c)),
        Value::Tuple(vs) => {
            let elems = vs
                .iter()
                .map(|v| value_type(globals, store, v))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Type::Tuple(elems))
        }
        Value::Struct { name, fields } => {
            let field_tys = fields
                .iter()
                .map(|(_, v)| value_type(globals, store, v))
                .collect::<Result<Vec<_>, _>>()?;
            infer_struct_type(globals, name, &field_tys)
        }
        Value::Array(vs) => array_type(globals, store, vs),
        Value::Ptr(qual, target) => {
            let mut seen = BTreeSet::new();
            let referent = target_type(globals, store, target, &mut seen)?;
            Ok(Type::Ref(
                Provenance::single(*qual, target.base().clone()),
                *qual,
                Box::new(referent),
            ))
        }
        Value::Closure(data) => closure_type(globals, store, data),
    }
}

fn target_type(
    globals: &GlobalEnv,
    store: &Store,
    target: &PtrTarget,
    seen: &mut BTreeSet<Place>,
) -> Result<Type, CheckError> {
    match target {
        PtrTarget::Place(p) => place_type_guarded(globals, store, p, seen),
        PtrTarget::Indexed { base, index, path } => {
            let elem = array_elem_at(globals, store, base, *index)?;
            walk_component_type(globals, &elem, path)
        }
        PtrTarget::Sliced { base, .. } => {
            let base_ty = place_type_guarded(globals, store, base, seen)?;
            match base_ty {
                Type::Array(elem, _) | Type::Slice(elem) => Ok(Type::Slice(elem)),
                other => Err(CheckError::new(
                    Code::Unify,
                    format!("sliced pointer into non-array `{other}`"),
                )),
            }
        }
    }
}

fn array_elem_at(
    globals: &GlobalEnv,
    store: &Store,
    base: &Place,
    index: u32,
) -> Result<Type, CheckError> {
    match store.lookup(base) {
        Some(Shape::Array(values)) => {
            let v = values.get(index as usize).or_else(|| values.first());
            match v {
                Some(v) => value_type(globals, store, v),
                None => Err(CheckError::new(
                    Code::Unbound,
                    format!("pointer into empty array at `{base}`"),
                )),
            }
        }
        Some(other) => Err(CheckError::new(
            Code::Unify,
            format!("indexed pointer into non-array shape `{other}` at `{base}`"),
        )),
        None => Err(CheckError::new(
            Code::Unbound,
            format!("`{base}` is not in the store"),
        )),
    }
}

/// Reconstruct a full function type for a packaged closure: parameters are
/// annotated, the captured environment is typed from the captured store,
/// and the return type comes from re-checking the body.
pub fn closure_type(
    globals: &GlobalEnv,
    store: &Store,
    data: &ClosureData,
) -> Result<Type, CheckError> {
    // Captured groups overlay the backing store so captured references can
    // resolve both to the outer stack and to sibling captures.
    let mut combined = store.clone();
    for group in &data.captured {
        combined.push_store_group(group.clone());
    }

    let mut captured = PlaceEnv::new();
    let mut body_env = PlaceEnv::new();
    for group in &data.captured {
        let root_place = Place::root(group.root.clone());
        let root_ty = place_type(globals, &combined, &root_place)?;
        captured.push_group(group.root.clone(), vec![(root_place.clone(), root_ty.clone())]);
        body_env.push_group(group.root.clone(), places_typ(globals, &root_place, &root_ty)?);
    }

    let mut dvars = TyVarEnv::new();
    for p in &data.prov_params {
        dvars.push(p.clone(), Kind::Prov);
    }
    for t in &data.ty_params {
        dvars.push(t.clone(), Kind::Type);
    }
    for (name, ty) in &data.params {
        body_env.push_group(
            name.clone(),
            places_typ(globals, &Place::root(name.clone()), ty)?,
        );
    }

    let mut checker = Checker::for_runtime(globals, &combined);
    let (ret, _) = checker
        .check(&dvars, body_env, &data.body, &[])
        .map_err(|d| CheckError::new(d.code, d.message))?;

    Ok(Type::Fn(FnType {
        prov_params: data.prov_params.clone(),
        ty_params: data.ty_params.clone(),
        params: data.params.iter().map(|(_, t)| t.clone()).collect(),
        ret: Box::new(ret),
        captured,
    }))
}

/// Infer a struct type from reconstructed field types by matching them
/// against the declaration, solving the declared parameters.
fn infer_struct_type(
    globals: &GlobalEnv,
    name: &str,
    field_tys: &[Type],
) -> Result<Type, CheckError> {
    let def = globals.struct_def(name).ok_or_else(|| {
        CheckError::new(Code::Unbound, format!("struct `{name}` is not defined"))
    })?;
    if def.prov_params.is_empty() && def.ty_params.is_empty() {
        return Ok(Type::Struct(name.to_string(), Vec::new(), Vec::new()));
    }
    let decl_tys: Vec<&Type> = match &def.fields {
        StructFields::Positional(ts) => ts.iter().collect(),
        StructFields::Named(fs) => fs.iter().map(|(_, t)| t).collect(),
    };
    if decl_tys.len() != field_tys.len() {
        return Err(CheckError::new(
            Code::Arity,
            format!("struct `{name}` field arity mismatch during reconstruction"),
        ));
    }
    let mut provs: BTreeMap<String, LoanSet> = BTreeMap::new();
    let mut tys: BTreeMap<String, Type> = BTreeMap::new();
    for (decl, actual) in decl_tys.iter().zip(field_tys) {
        match_ty(decl, actual, &mut provs, &mut tys)?;
    }
    solve_params(def, provs, tys, name)
}

fn solve_params(
    def: &StructDef,
    provs: BTreeMap<String, LoanSet>,
    tys: BTreeMap<String, Type>,
    name: &str,
) -> Result<Type, CheckError> {
    let mut prov_args = Vec::new();
    for p in &def.prov_params {
        let loans = provs.get(p).cloned().ok_or_else(|| {
            CheckError::new(
                Code::Kind,
                format!("cannot infer provenance `'{p}` of `{name}` from the store"),
            )
        })?;
        prov_args.push(Provenance::Concrete(loans));
    }
    let mut ty_args = Vec::new();
    for t in &def.ty_params {
        let ty = tys.get(t).cloned().ok_or_else(|| {
            CheckError::new(
                Code::Kind,
                format!("cannot infer type parameter `{t}` of `{name}` from the store"),
            )
        })?;
        ty_args.push(ty);
    }
    Ok(Type::Struct(name.to_string(), prov_args, ty_args))
}

fn match_ty(
    decl: &Type,
    actual: &Type,
    provs: &mut BTreeMap<String, LoanSet>,
    tys: &mut BTreeMap<String, Type>,
) -> Result<(), CheckError> {
    match (decl, actual) {
        (Type::TyVar(name), _) => {
            if let Some(prev) = tys.get(name) {
                if prev != actual {
                    return Err(CheckError::new(
                        Code::Kind,
                        format!("conflicting solutions for type parameter `{name}`"),
                    ));
                }
            }
            tys.insert(name.clone(), actual.clone());
            Ok(())
        }
        (Type::Ref(pd, qd, rd), Type::Ref(pa, qa, ra)) if qd == qa => {
            if let (Provenance::Var(name), Provenance::Concrete(loans)) = (pd, pa) {
                provs.entry(name.clone()).or_default().extend(loans.iter().cloned());
            }
            match_ty(rd, ra, provs, tys)
        }
        (Type::Tuple(ds), Type::Tuple(as_)) if ds.len() == as_.len() => {
            for (d, a) in ds.iter().zip(as_) {
                match_ty(d, a, provs, tys)?;
            }
            Ok(())
        }
        (Type::Array(d, n1), Type::Array(a, n2)) if n1 == n2 => match_ty(d, a, provs, tys),
        (Type::Slice(d), Type::Slice(a)) => match_ty(d, a, provs, tys),
        (Type::Struct(n1, pd, td), Type::Struct(n2, pa, ta))
            if n1 == n2 && pd.len() == pa.len() && td.len() == ta.len() =>
        {
            for (d, a) in pd.iter().zip(pa) {
                if let (Provenance::Var(name), Provenance::Concrete(loans)) = (d, a) {
                    provs.entry(name.clone()).or_default().extend(loans.iter().cloned());
                }
            }
            for (d, a) in td.iter().zip(ta) {
                match_ty(d, a, provs, tys)?;
            }
            Ok(())
        }
        _ if decl == actual => Ok(()),
        _ => Err(CheckError::new(
            Code::Kind,
            format!("store shape `{actual}` does not match declared field `{decl}`"),
        )),
    }
}

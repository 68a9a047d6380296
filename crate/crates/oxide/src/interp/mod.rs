//! Small-step operational semantics over configurations of a store and an
//! expression, instrumented with dynamic μ-safety checks that can be
//! switched off (erasure mode). Evaluation order is leftmost-innermost,
//! left to right, matching the checker's environment threading.

pub mod value;


use std::collections::BTreeSet;

use crate::ast::expr::free_roots;
use crate::ast::{overlaps, Expr, ExprKind, GlobalEnv, OwnQual, PathElem, Place, PlaceEnv, Type};
use crate::typeck::{resolve_loan_place, Instantiation};

use value::{
    expr_to_value, places_val, value_to_expr, ClosureData, Constant, PtrTarget, Shape, Store,
    StoreGroup, Value,
};

/// Outcome of one step or of a whole evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum StepResult {
    Stepped(Store, Expr),
    Finished(Value),
    Aborted(String),
    /// Only reachable with dynamic checks enabled (or on ill-formed input
    /// run by force); signals a checker bug on checked programs.
    Stuck(String),
}

/// Where a place resolves to at runtime, after following pointers.
#[derive(Clone, Debug, PartialEq)]
enum Loc {
    Plain(Place),
    /// Inside an array element, at a deref-free projection path.
    Elem {
        base: Place,
        index: u32,
        path: Vec<PathElem>,
    },
    /// A whole slice view of an array.
    View {
        base: Place,
        lo: u32,
        hi: u32,
    },
}

impl Loc {
    /// The place whose ownership an access at this location occupies.
    fn base(&self) -> &Place {
        match self {
            Loc::Plain(p) => p,
            Loc::Elem { base, .. } | Loc::View { base, .. } => base,
        }
    }

    fn to_target(&self) -> PtrTarget {
        match self {
            Loc::Plain(p) => PtrTarget::Place(p.clone()),
            Loc::Elem { base, index, path } => PtrTarget::Indexed {
                base: base.clone(),
                index: *index,
                path: path.clone(),
            },
            Loc::View { base, lo, hi } => PtrTarget::Sliced {
                base: base.clone(),
                lo: *lo,
                hi: *hi,
            },
        }
    }

    fn from_target(target: &PtrTarget) -> Loc {
        match target {
            PtrTarget::Place(p) => Loc::Plain(p.clone()),
            PtrTarget::Indexed { base, index, path } => Loc::Elem {
                base: base.clone(),
                index: *index,
                path: path.clone(),
            },
            PtrTarget::Sliced { base, lo, hi } => Loc::View {
                base: base.clone(),
                lo: *lo,
                hi: *hi,
            },
        }
    }
}

enum Halt {
    Abort(String),
    Stuck(String),
}

fn stuck<T>(msg: impl Into<String>) -> Result<T, Halt> {
    Err(Halt::Stuck(msg.into()))
}

/// Resolve a source place against the store, following the pointer stored
/// at each dereference. Returns the final location and the pointers that
/// were followed (exempt from the conflict scan when strong enough: the
/// access goes through them).
fn resolve_loc(store: &Store, place: &Place) -> Result<(Loc, Vec<(OwnQual, PtrTarget)>), Halt> {
    let mut cur = Loc::Plain(Place::root(place.root.clone()));
    let mut followed = Vec::new();
    for elem in &place.path {
        match elem {
            PathElem::TupleProj(_) | PathElem::Field(_) => {
                cur = match cur {
                    Loc::Plain(p) => Loc::Plain(p.extend(elem.clone())),
                    Loc::Elem { base, index, mut path } => {
                        path.push(elem.clone());
                        Loc::Elem { base, index, path }
                    }
                    Loc::View { .. } => {
                        return stuck(format!("cannot project `{elem}` out of a slice"))
                    }
                };
            }
            PathElem::Deref => {
                let pointer = read_loc(store, &cur)?;
                match pointer {
                    Value::Ptr(q, target) => {
                        followed.push((q, target.clone()));
                        cur = Loc::from_target(&target);
                    }
                    other => {
                        return stuck(format!(
                            "dereference of a non-pointer value `{other}` while resolving `{place}`"
                        ))
                    }
                }
            }
        }
    }
    Ok((cur, followed))
}

/// Read the full value at a location.
fn read_loc(store: &Store, loc: &Loc) -> Result<Value, Halt> {
    match loc {
        Loc::Plain(p) => store.valuify(p).map_err(|missing| {
            Halt::Stuck(format!("E-UNBOUND-RT: `{missing}` is not on the stack"))
        }),
        Loc::Elem { base, index, path } => {
            let values = array_at(store, base)?;
            let elem = values.get(*index as usize).ok_or_else(|| {
                Halt::Stuck(format!("index {index} is out of the array at `{base}`"))
            })?;
            project_value(elem, path).cloned()
        }
        Loc::View { .. } => stuck("cannot read a whole slice as a value"),
    }
}

fn array_at<'s>(store: &'s Store, base: &Place) -> Result<&'s Vec<Value>, Halt> {
    match store.lookup(base) {
        Some(Shape::Array(values)) => Ok(values),
        Some(other) => stuck(format!("expected an array at `{base}`, found `{other}`")),
        None => stuck(format!("`{base}` is not on the stack")),
    }
}

fn project_value<'v>(v: &'v Value, path: &[PathElem]) -> Result<&'v Value, Halt> {
    let mut cur = v;
    for elem in path {
        cur = match (elem, cur) {
            (PathElem::TupleProj(i), Value::Tuple(vs)) => vs.get(*i).ok_or_else(|| {
                Halt::Stuck(format!("no component {i} in tuple value"))
            })?,
            (sel, Value::Struct { fields, .. }) => fields
                .iter()
                .find(|(s, _)| s == sel)
                .map(|(_, v)| v)
                .ok_or_else(|| Halt::Stuck(format!("no field `{sel}` in struct value")))?,
            (elem, other) => {
                return stuck(format!("cannot project `{elem}` out of value `{other}`"))
            }
        };
    }
    Ok(cur)
}

/// Overwrite the contents at a location with a new value.
fn write_loc(store: &mut Store, loc: &Loc, v: Value) -> Result<(), Halt> {
    match loc {
        Loc::Plain(p) => {
            store.replace_chain(p, places_val(p, &v));
            Ok(())
        }
        Loc::Elem { base, index, path } => store
            .update_array(base, *index as usize, path, v)
            .map_err(Halt::Stuck),
        Loc::View { .. } => stuck("cannot assign to a whole slice"),
    }
}

/// The dynamic μ-safety judgment: scan every pointer reachable in the
/// store (including inside closure captured stores and array elements).
/// For a unique use no pointer may target an overlapping place; for a
/// shared use only unique pointers conflict.
pub fn dyn_mu_safety(store: &Store, qual: OwnQual, place: &Place) -> bool {
    match resolve_loc(store, place) {
        Ok((loc, followed)) => {
            dyn_safe_loc(store, qual, &loc, &followed, &BTreeSet::new())
        }
        Err(_) => false,
    }
}

fn dyn_safe_loc(
    store: &Store,
    qual: OwnQual,
    loc: &Loc,
    followed: &[(OwnQual, PtrTarget)],
    dead_roots: &BTreeSet<String>,
) -> bool {
    let use_base = loc.base();
    let conflicts = |q_ptr: OwnQual, target: &PtrTarget| -> bool {
        if qual == OwnQual::Shrd && q_ptr == OwnQual::Shrd {
            return false;
        }
        // Pointers on the access path grant the use when strong enough.
        if q_ptr.grants(qual)
            && followed
                .iter()
                .any(|(fq, ft)| *fq == q_ptr && ft == target)
        {
            return false;
        }
        overlaps(target.base(), use_base)
    };

    for group in store.groups() {
        // A binding with no occurrence left in the program may as well not
        // exist; its pointers no longer claim anything (non-lexical
        // lifetimes, dynamically).
        if dead_roots.contains(&group.root) {
            continue;
        }
        for (_, shape) in &group.entries {
            if shape_has_conflict(shape, &conflicts) {
                return false;
            }
        }
    }
    true
}

fn shape_has_conflict(shape: &Shape, conflicts: &dyn Fn(OwnQual, &PtrTarget) -> bool) -> bool {
    match shape {
        Shape::Ptr(q, target) => conflicts(*q, target),
        Shape::Array(values) => values.iter().any(|v| value_has_conflict(v, conflicts)),
        Shape::Closure(data) => closure_has_conflict(data, conflicts),
        _ => false,
    }
}

fn value_has_conflict(v: &Value, conflicts: &dyn Fn(OwnQual, &PtrTarget) -> bool) -> bool {
    match v {
        Value::Ptr(q, target) => conflicts(*q, target),
        Value::Tuple(vs) | Value::Array(vs) => {
            vs.iter().any(|v| value_has_conflict(v, conflicts))
        }
        Value::Struct { fields, .. } => {
            fields.iter().any(|(_, v)| value_has_conflict(v, conflicts))
        }
        Value::Closure(data) => closure_has_conflict(data, conflicts),
        Value::Prim(_) => false,
    }
}

fn closure_has_conflict(
    data: &ClosureData,
    conflicts: &dyn Fn(OwnQual, &PtrTarget) -> bool,
) -> bool {
    data.captured.iter().any(|group| {
        group
            .entries
            .iter()
            .any(|(_, shape)| shape_has_conflict(shape, conflicts))
    })
}

/// Take one reduction step. A value yields `Finished`; otherwise exactly
/// one rule applies to the leftmost-innermost redex.
pub fn step(globals: &GlobalEnv, store: &Store, e: &Expr, checks: bool) -> StepResult {
    if let Some(v) = expr_to_value(e) {
        return StepResult::Finished(v);
    }
    let mut next = store.clone();
    let dead = if checks {
        dead_store_roots(store, e)
    } else {
        BTreeSet::new()
    };
    match reduce(globals, &mut next, e, checks, &dead) {
        Ok(e2) => StepResult::Stepped(next, e2),
        Err(Halt::Abort(msg)) => StepResult::Aborted(msg),
        Err(Halt::Stuck(msg)) => StepResult::Stuck(msg),
    }
}

/// Roots bound in the store with no free occurrence left in the residual
/// program.
fn dead_store_roots(store: &Store, e: &Expr) -> BTreeSet<String> {
    let live = free_roots(e);
    store
        .groups()
        .iter()
        .map(|g| g.root.clone())
        .filter(|root| !live.contains(root))
        .collect()
}

fn check_or_stuck(
    store: &Store,
    checks: bool,
    qual: OwnQual,
    loc: &Loc,
    followed: &[(OwnQual, PtrTarget)],
    dead: &BTreeSet<String>,
    what: &str,
) -> Result<(), Halt> {
    if checks && !dyn_safe_loc(store, qual, loc, followed, dead) {
        return stuck(format!(
            "dynamic {qual}-safety violation at `{what}`"
        ));
    }
    Ok(())
}

fn reduce(
    globals: &GlobalEnv,
    store: &mut Store,
    e: &Expr,
    checks: bool,
    dead: &BTreeSet<String>,
) -> Result<Expr, Halt> {
    match &e.kind {
        ExprKind::Abort(msg) => Err(Halt::Abort(msg.clone())),

        ExprKind::Use(place) => {
            if place.is_root() && !store.contains_root(&place.root) {
                if let Some(def) = globals.fn_def(&place.root) {
                    return Ok(Expr::synth(ExprKind::ClosureVal(Box::new(ClosureData {
                        captured: Vec::new(),
                        prov_params: def.prov_params.clone(),
                        ty_params: def.ty_params.clone(),
                        params: def.params.clone(),
                        body: def.body.clone(),
                    }))));
                }
            }
            let (loc, followed) = resolve_loc(store, place)?;
            let v = read_loc(store, &loc)?;
            if v.is_copyable() {
                check_or_stuck(store, checks, OwnQual::Shrd, &loc, &followed, dead, &place.to_string())?;
            } else {
                check_or_stuck(store, checks, OwnQual::Uniq, &loc, &followed, dead, &place.to_string())?;
                match &loc {
                    Loc::Plain(p) => store.remove_chain(p),
                    _ => return stuck(format!("cannot move `{place}` out of an array")),
                }
            }
            Ok(value_to_expr(v))
        }

        ExprKind::Borrow(qual, place) => {
            let (loc, followed) = resolve_loc(store, place)?;
            check_or_stuck(store, checks, *qual, &loc, &followed, dead, &place.to_string())?;
            Ok(Expr::synth(ExprKind::PtrVal(*qual, loc.to_target())))
        }

        ExprKind::BorrowIdx(qual, place, idx) => {
            if !idx.is_value() {
                let idx2 = reduce(globals, store, idx, checks, dead)?;
                return Ok(Expr::new(
                    ExprKind::BorrowIdx(*qual, place.clone(), Box::new(idx2)),
                    e.span.clone(),
                ));
            }
            let i = expect_u32(idx)?;
            let (loc, followed) = resolve_loc(store, place)?;
            let target = match &loc {
                Loc::Plain(p) => {
                    let len = array_at(store, p)?.len() as u32;
                    if i >= len {
                        return Err(Halt::Abort(format!("index out of bounds: {i} >= {len}")));
                    }
                    PtrTarget::Indexed {
                        base: p.clone(),
                        index: i,
                        path: Vec::new(),
                    }
                }
                Loc::View { base, lo, hi } => {
                    let len = hi - lo;
                    if i >= len {
                        return Err(Halt::Abort(format!("index out of bounds: {i} >= {len}")));
                    }
                    PtrTarget::Indexed {
                        base: base.clone(),
                        index: lo + i,
                        path: Vec::new(),
                    }
                }
                Loc::Elem { .. } => {
                    return stuck("indexing into a nested array element is not supported")
                }
            };
            check_or_stuck(store, checks, *qual, &loc, &followed, dead, &place.to_string())?;
            Ok(Expr::synth(ExprKind::PtrVal(*qual, target)))
        }

        ExprKind::BorrowSlice(qual, place, lo, hi) => {
            if !lo.is_value() {
                let lo2 = reduce(globals, store, lo, checks, dead)?;
                return Ok(Expr::new(
                    ExprKind::BorrowSlice(*qual, place.clone(), Box::new(lo2), hi.clone()),
                    e.span.clone(),
                ));
            }
            if !hi.is_value() {
                let hi2 = reduce(globals, store, hi, checks, dead)?;
                return Ok(Expr::new(
                    ExprKind::BorrowSlice(*qual, place.clone(), lo.clone(), Box::new(hi2)),
                    e.span.clone(),
                ));
            }
            let (lo_i, hi_i) = (expect_u32(lo)?, expect_u32(hi)?);
            let (loc, followed) = resolve_loc(store, place)?;
            let target = match &loc {
                Loc::Plain(p) => {
                    let len = array_at(store, p)?.len() as u32;
                    if lo_i > hi_i || hi_i > len {
                        return Err(Halt::Abort(format!(
                            "slice bounds out of range: {lo_i}..{hi_i} over length {len}"
                        )));
                    }
                    PtrTarget::Sliced {
                        base: p.clone(),
                        lo: lo_i,
                        hi: hi_i,
                    }
                }
                Loc::View { base, lo: l0, hi: h0 } => {
                    let len = h0 - l0;
                    if lo_i > hi_i || hi_i > len {
                        return Err(Halt::Abort(format!(
                            "slice bounds out of range: {lo_i}..{hi_i} over length {len}"
                        )));
                    }
                    PtrTarget::Sliced {
                        base: base.clone(),
                        lo: l0 + lo_i,
                        hi: l0 + hi_i,
                    }
                }
                Loc::Elem { .. } => {
                    return stuck("slicing a nested array element is not supported")
                }
            };
            check_or_stuck(store, checks, *qual, &loc, &followed, dead, &place.to_string())?;
            Ok(Expr::synth(ExprKind::PtrVal(*qual, target)))
        }

        ExprKind::Seq(e1, e2) => {
            if e1.is_value() {
                Ok((**e2).clone())
            } else {
                let e1new = reduce(globals, store, e1, checks, dead)?;
                Ok(Expr::new(
                    ExprKind::Seq(Box::new(e1new), e2.clone()),
                    e.span.clone(),
                ))
            }
        }

        ExprKind::If(cond, then_e, else_e) => {
            if cond.is_value() {
                match &cond.kind {
                    ExprKind::Bool(true) => Ok((**then_e).clone()),
                    ExprKind::Bool(false) => Ok((**else_e).clone()),
                    other => stuck(format!("branch condition is not a boolean: {other:?}")),
                }
            } else {
                let c2 = reduce(globals, store, cond, checks, dead)?;
                Ok(Expr::new(
                    ExprKind::If(Box::new(c2), then_e.clone(), else_e.clone()),
                    e.span.clone(),
                ))
            }
        }

        ExprKind::Assign(place, rhs) => {
            if !rhs.is_value() {
                let r2 = reduce(globals, store, rhs, checks, dead)?;
                return Ok(Expr::new(
                    ExprKind::Assign(place.clone(), Box::new(r2)),
                    e.span.clone(),
                ));
            }
            let v = expr_to_value(rhs).expect("value expression");
            let (loc, followed) = resolve_loc(store, place)?;
            check_or_stuck(store, checks, OwnQual::Uniq, &loc, &followed, dead, &place.to_string())?;
            write_loc(store, &loc, v)?;
            Ok(Expr::synth(ExprKind::Unit))
        }

        ExprKind::Let {
            name,
            annot,
            rhs,
            body,
        } => {
            if !rhs.is_value() {
                let r2 = reduce(globals, store, rhs, checks, dead)?;
                return Ok(Expr::new(
                    ExprKind::Let {
                        name: name.clone(),
                        annot: annot.clone(),
                        rhs: Box::new(r2),
                        body: body.clone(),
                    },
                    e.span.clone(),
                ));
            }
            let v = expr_to_value(rhs).expect("value expression");
            let root = Place::root(name.clone());
            store.push_group(name.clone(), places_val(&root, &v));
            Ok(Expr::synth(ExprKind::Pop(name.clone(), body.clone())))
        }

        ExprKind::Pop(name, body) => {
            if body.is_value() {
                store.pop_group(name);
                Ok((**body).clone())
            } else {
                let b2 = reduce(globals, store, body, checks, dead)?;
                Ok(Expr::new(
                    ExprKind::Pop(name.clone(), Box::new(b2)),
                    e.span.clone(),
                ))
            }
        }

        ExprKind::App {
            callee,
            prov_args,
            ty_args,
            args,
        } => {
            if !callee.is_value() {
                let c2 = reduce(globals, store, callee, checks, dead)?;
                return Ok(Expr::new(
                    ExprKind::App {
                        callee: Box::new(c2),
                        prov_args: prov_args.clone(),
                        ty_args: ty_args.clone(),
                        args: args.to_vec(),
                    },
                    e.span.clone(),
                ));
            }
            if let Some(i) = args.iter().position(|a| !a.is_value()) {
                let mut args2 = args.to_vec();
                args2[i] = reduce(globals, store, &args[i], checks, dead)?;
                return Ok(Expr::new(
                    ExprKind::App {
                        callee: callee.clone(),
                        prov_args: prov_args.clone(),
                        ty_args: ty_args.clone(),
                        args: args2,
                    },
                    e.span.clone(),
                ));
            }
            let data = match &callee.kind {
                ExprKind::ClosureVal(data) => data.clone(),
                other => return stuck(format!("call of a non-closure value: {other:?}")),
            };
            if data.params.len() != args.len()
                || data.prov_params.len() != prov_args.len()
                || data.ty_params.len() != ty_args.len()
            {
                return stuck("call arity mismatch");
            }

            // Instantiate the provenance and type arguments through the
            // parameter annotations and the body, so residual programs
            // carry concrete types.
            let mut inst = Instantiation::default();
            for (param, arg) in data.prov_params.iter().zip(prov_args) {
                inst.provs.insert(param.clone(), arg.clone());
            }
            for (param, arg) in data.ty_params.iter().zip(ty_args) {
                inst.tys.insert(param.clone(), arg.clone());
            }
            let body = inst.apply_expr(&data.body);

            let mut pushed: Vec<String> = Vec::new();
            for group in &data.captured {
                pushed.push(group.root.clone());
                store.push_store_group(group.clone());
            }
            for ((name, _), arg) in data.params.iter().zip(args) {
                let v = expr_to_value(arg).expect("value expression");
                let root = Place::root(name.clone());
                store.push_group(name.clone(), places_val(&root, &v));
                pushed.push(name.clone());
            }
            let mut wrapped = body;
            for root in pushed.into_iter().rev() {
                wrapped = Expr::synth(ExprKind::Pop(root, Box::new(wrapped)));
            }
            Ok(wrapped)
        }

        ExprKind::Closure {
            prov_params,
            ty_params,
            params,
            body,
        } => {
            let mut roots: BTreeSet<String> = free_roots(body)
                .into_iter()
                .filter(|r| store.contains_root(r))
                .collect();
            for (name, _) in params {
                roots.remove(name);
            }
            let mut captured: Vec<StoreGroup> = Vec::new();
            for root in &roots {
                let group = store
                    .group_of(root)
                    .expect("captured root is bound")
                    .clone();
                let move_capture = group
                    .entries
                    .iter()
                    .any(|(_, shape)| !shape_is_copyable(shape));
                if move_capture {
                    store.pop_group(root);
                }
                captured.push(group);
            }
            Ok(Expr::synth(ExprKind::ClosureVal(Box::new(ClosureData {
                captured,
                prov_params: prov_params.clone(),
                ty_params: ty_params.clone(),
                params: params.clone(),
                body: (**body).clone(),
            }))))
        }

        ExprKind::Tuple(elems) => {
            let i = elems
                .iter()
                .position(|el| !el.is_value())
                .expect("tuple with a reducible component");
            let mut elems2 = elems.to_vec();
            elems2[i] = reduce(globals, store, &elems[i], checks, dead)?;
            Ok(Expr::new(ExprKind::Tuple(elems2), e.span.clone()))
        }

        ExprKind::ArrayLit(elems) => {
            let i = elems
                .iter()
                .position(|el| !el.is_value())
                .expect("array with a reducible component");
            let mut elems2 = elems.to_vec();
            elems2[i] = reduce(globals, store, &elems[i], checks, dead)?;
            Ok(Expr::new(ExprKind::ArrayLit(elems2), e.span.clone()))
        }

        ExprKind::StructCtor {
            name,
            prov_args,
            ty_args,
            fields,
        } => {
            use crate::ast::CtorFields;
            let mut fields2 = fields.clone();
            let reduced = match &mut fields2 {
                CtorFields::Positional(es) => {
                    let i = es.iter().position(|el| !el.is_value());
                    match i {
                        Some(i) => {
                            es[i] = reduce(globals, store, &es[i], checks, dead)?;
                            true
                        }
                        None => false,
                    }
                }
                CtorFields::Named(fs) => {
                    let i = fs.iter().position(|(_, el)| !el.is_value());
                    match i {
                        Some(i) => {
                            fs[i].1 = reduce(globals, store, &fs[i].1, checks, dead)?;
                            true
                        }
                        None => false,
                    }
                }
            };
            if !reduced {
                return stuck("constructor with no reducible component");
            }
            Ok(Expr::new(
                ExprKind::StructCtor {
                    name: name.clone(),
                    prov_args: prov_args.clone(),
                    ty_args: ty_args.clone(),
                    fields: fields2,
                },
                e.span.clone(),
            ))
        }

        // Values never reach reduce; the remaining runtime forms are values.
        ExprKind::Unit
        | ExprKind::Num(_)
        | ExprKind::Bool(_)
        | ExprKind::Str(_)
        | ExprKind::PtrVal(..)
        | ExprKind::ClosureVal(_) => stuck("attempted to reduce a value"),
    }
}

/// Whether duplicating this single shape is harmless. The verdict for a
/// whole binding group is the conjunction over its entries, mirroring the
/// static rule over the entry types.
fn shape_is_copyable(shape: &Shape) -> bool {
    match shape {
        Shape::Prim(Constant::Str(_)) => false,
        Shape::Prim(_) => true,
        Shape::Tuple(_) | Shape::Struct { .. } => true, // components judged separately
        Shape::Array(values) => values.iter().all(Value::is_copyable),
        Shape::Ptr(q, _) => *q == OwnQual::Shrd,
        Shape::Closure(data) => data.captured.is_empty(),
    }
}

fn expect_u32(e: &Expr) -> Result<u32, Halt> {
    match &e.kind {
        ExprKind::Num(n) => Ok(*n),
        other => stuck(format!("expected an integer index, found {other:?}")),
    }
}

/// Iterate the step relation from an empty store until a terminal result
/// or until `fuel` steps have been taken.
pub fn eval(globals: &GlobalEnv, e: &Expr, checks: bool, fuel: usize) -> StepResult {
    let (_, result) = eval_trace(globals, e, checks, fuel);
    result
}

/// As `eval`, also returning every configuration visited (including the
/// initial one), for the erasure and preservation probes.
pub fn eval_trace(
    globals: &GlobalEnv,
    e: &Expr,
    checks: bool,
    fuel: usize,
) -> (Vec<(Store, Expr)>, StepResult) {
    let mut store = Store::new();
    let mut expr = e.clone();
    let mut trace = vec![(store.clone(), expr.clone())];
    let mut steps = 0usize;
    loop {
        if let Some(v) = expr_to_value(&expr) {
            return (trace, StepResult::Finished(v));
        }
        if steps >= fuel {
            return (
                trace,
                StepResult::Stuck(format!("diverged: fuel exhausted after {steps} steps")),
            );
        }
        match step(globals, &store, &expr, checks) {
            StepResult::Stepped(s2, e2) => {
                store = s2;
                expr = e2;
                trace.push((store.clone(), expr.clone()));
                steps += 1;
            }
            StepResult::Finished(v) => return (trace, StepResult::Finished(v)),
            StepResult::Aborted(msg) => return (trace, StepResult::Aborted(msg)),
            StepResult::Stuck(msg) => return (trace, StepResult::Stuck(msg)),
        }
    }
}

/// Store/environment satisfaction: the deref-free places of the
/// environment and the store agree exactly, and every shape structurally
/// matches its type one level deep. Dereference places in the environment
/// are views through pointers and have no storage of their own.
pub fn store_satisfies(_globals: &GlobalEnv, env: &PlaceEnv, store: &Store) -> bool {
    let env_places: BTreeSet<&Place> = env
        .effective_entries()
        .into_iter()
        .map(|(p, _)| p)
        .filter(|p| !p.has_deref())
        .collect();
    let store_places: BTreeSet<&Place> = store
        .groups()
        .iter()
        .enumerate()
        .filter(|(i, g)| {
            // Only the most recent group per root is visible.
            !store.groups()[i + 1..].iter().any(|g2| g2.root == g.root)
        })
        .flat_map(|(_, g)| g.entries.iter().map(|(p, _)| p))
        .collect();
    if env_places != store_places {
        return false;
    }
    for (place, ty) in env.effective_entries() {
        if place.has_deref() {
            continue;
        }
        let Some(shape) = store.lookup(place) else {
            return false;
        };
        if !shape_matches(env, shape, ty) {
            return false;
        }
    }
    true
}

fn shape_matches(env: &PlaceEnv, shape: &Shape, ty: &Type) -> bool {
    match (shape, ty) {
        (Shape::Prim(Constant::Unit), Type::Unit)
        | (Shape::Prim(Constant::U32(_)), Type::U32)
        | (Shape::Prim(Constant::Bool(_)), Type::Bool)
        | (Shape::Prim(Constant::Str(_)), Type::Str) => true,
        (Shape::Tuple(n), Type::Tuple(elems)) => *n == elems.len(),
        (Shape::Struct { name, .. }, Type::Struct(ty_name, _, _)) => name == ty_name,
        (Shape::Array(values), Type::Array(_, len)) => values.len() == *len,
        (Shape::Ptr(q, target), Type::Ref(prov, q_ty, _)) => {
            if q != q_ty {
                return false;
            }
            match prov {
                crate::ast::Provenance::Concrete(loan_set) => loan_set.iter().any(|loan| {
                    resolve_loan_place(env, &loan.place)
                        .iter()
                        .any(|lp| lp == target.base())
                }),
                crate::ast::Provenance::Var(_) => false,
            }
        }
        (Shape::Closure(data), Type::Fn(fn_ty)) => data.params.len() == fn_ty.params.len(),
        _ => false,
    }
}

/// Convenience: the final value of evaluating with plenty of fuel.
pub fn run_to_value(globals: &GlobalEnv, e: &Expr) -> StepResult {
    eval(globals, e, true, 1_000_000)
}

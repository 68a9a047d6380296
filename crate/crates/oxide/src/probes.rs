//! Executable metatheory at desk scale: progress, preservation, and check
//! erasure over concrete programs, plus exhaustive small-instance suites
//! for the algebraic judgments.

use std::collections::BTreeSet;

use crate::ast::{
    overlaps, prefix_of, Expr, GlobalEnv, Loan, OwnQual, PathElem, Place, Provenance, TyVarEnv,
    Type,
};
use crate::interp::value::{places_val, PtrTarget, Store, Value};
use crate::interp::{eval_trace, store_satisfies, StepResult};
use crate::typeck::{self, check_program, Checker};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeKind {
    Progress,
    Preservation,
    Erasure,
    Smallcheck,
}

impl ProbeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeKind::Progress => "progress",
            ProbeKind::Preservation => "preservation",
            ProbeKind::Erasure => "erasure",
            ProbeKind::Smallcheck => "smallcheck",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProbeFailure {
    /// Step index the failure was observed at (0 for non-stepwise checks).
    pub step: usize,
    pub property: String,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub program_id: String,
    pub probe: ProbeKind,
    pub steps_taken: usize,
    pub failures: Vec<ProbeFailure>,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn is_diverged(result: &StepResult) -> bool {
    matches!(result, StepResult::Stuck(msg) if msg.starts_with("diverged:"))
}

/// Progress at desk scale: a checked program either finishes, aborts, or
/// runs out of fuel — it never gets stuck on a dynamic check.
pub fn progress_probe(globals: &GlobalEnv, e: &Expr, id: &str, fuel: usize) -> ProbeReport {
    let (trace, result) = eval_trace(globals, e, true, fuel);
    let mut failures = Vec::new();
    match &result {
        StepResult::Finished(_) | StepResult::Aborted(_) => {}
        stuck if is_diverged(stuck) => {}
        StepResult::Stuck(msg) => failures.push(ProbeFailure {
            step: trace.len().saturating_sub(1),
            property: "progress".to_string(),
            detail: format!("stuck configuration: {msg}"),
        }),
        StepResult::Stepped(..) => unreachable!("eval never returns an intermediate step"),
    }
    ProbeReport {
        program_id: id.to_string(),
        probe: ProbeKind::Progress,
        steps_taken: trace.len().saturating_sub(1),
        failures,
    }
}

/// Preservation at desk scale: after every step, the store satisfies an
/// environment reconstructed from it, and the residual expression
/// re-checks at a type related to the original by subtyping.
pub fn preservation_probe(globals: &GlobalEnv, e: &Expr, id: &str, fuel: usize) -> ProbeReport {
    let mut failures = Vec::new();
    let (original_ty, original_env) = match check_program(globals, e) {
        Ok(outcome) => (outcome.ty, outcome.env_out),
        Err(d) => {
            return ProbeReport {
                program_id: id.to_string(),
                probe: ProbeKind::Preservation,
                steps_taken: 0,
                failures: vec![ProbeFailure {
                    step: 0,
                    property: "precondition".to_string(),
                    detail: format!("program does not check: {d}"),
                }],
            }
        }
    };

    let (trace, _) = eval_trace(globals, e, true, fuel);
    for (i, (store, residual)) in trace.iter().enumerate() {
        let env = match typeck::runtime::reconstruct_env(globals, store) {
            Ok(env) => env,
            Err(err) => {
                failures.push(ProbeFailure {
                    step: i,
                    property: "store-typing".to_string(),
                    detail: format!("cannot reconstruct an environment: {}", err.message),
                });
                continue;
            }
        };
        if !store_satisfies(globals, &env, store) {
            failures.push(ProbeFailure {
                step: i,
                property: "store-satisfaction".to_string(),
                detail: format!("store does not satisfy its reconstruction: {store}"),
            });
            continue;
        }
        let mut checker = Checker::for_runtime(globals, store);
        let (residual_ty, residual_env) = match checker.check(&TyVarEnv::new(), env, residual, &[])
        {
            Ok(out) => out,
            Err(d) => {
                failures.push(ProbeFailure {
                    step: i,
                    property: "residual-typing".to_string(),
                    detail: format!("residual does not re-check: {d}"),
                });
                continue;
            }
        };
        if typeck::subtype(globals, &residual_ty, &original_ty).is_err() {
            failures.push(ProbeFailure {
                step: i,
                property: "type-preservation".to_string(),
                detail: format!(
                    "residual type `{residual_ty}` is not a subtype of `{original_ty}`"
                ),
            });
        }
        // Output environments relate by domain subset plus per-place
        // subtyping: everything the original run left bound must still be
        // bound at a possibly more specific type.
        for (place, original) in original_env.effective_entries() {
            match residual_env.lookup(place) {
                Some(residual) if typeck::subtype(globals, residual, original).is_ok() => {}
                Some(residual) => failures.push(ProbeFailure {
                    step: i,
                    property: "env-preservation".to_string(),
                    detail: format!(
                        "`{place}` re-checks at `{residual}`, not a subtype of `{original}`"
                    ),
                }),
                None => failures.push(ProbeFailure {
                    step: i,
                    property: "env-preservation".to_string(),
                    detail: format!("`{place}` is missing from the residual environment"),
                }),
            }
        }
    }
    ProbeReport {
        program_id: id.to_string(),
        probe: ProbeKind::Preservation,
        steps_taken: trace.len().saturating_sub(1),
        failures,
    }
}

/// Erasure at desk scale: running with and without dynamic checks yields
/// pointwise-identical configuration sequences, and no check fires in the
/// checked run.
pub fn erasure_probe(globals: &GlobalEnv, e: &Expr, id: &str, fuel: usize) -> ProbeReport {
    let (checked, checked_result) = eval_trace(globals, e, true, fuel);
    let (unchecked, unchecked_result) = eval_trace(globals, e, false, fuel);
    let mut failures = Vec::new();

    if matches!(&checked_result, StepResult::Stuck(_)) && !is_diverged(&checked_result) {
        failures.push(ProbeFailure {
            step: checked.len().saturating_sub(1),
            property: "checks-never-fire".to_string(),
            detail: format!("checked run got stuck: {checked_result:?}"),
        });
    }
    let common = checked.len().min(unchecked.len());
    for i in 0..common {
        let (s1, e1) = &checked[i];
        let (s2, e2) = &unchecked[i];
        // Configurations compare by rendering, to stay independent of
        // incidental structural identities.
        if s1.to_string() != s2.to_string() || e1.to_string() != e2.to_string() {
            failures.push(ProbeFailure {
                step: i,
                property: "step-sequence".to_string(),
                detail: format!(
                    "configurations diverge: checked `{s1} | {e1}` vs unchecked `{s2} | {e2}`"
                ),
            });
            break;
        }
    }
    if checked.len() != unchecked.len() && failures.is_empty() {
        failures.push(ProbeFailure {
            step: common,
            property: "step-sequence".to_string(),
            detail: format!(
                "sequence lengths differ: {} checked vs {} unchecked",
                checked.len(),
                unchecked.len()
            ),
        });
    }
    if format!("{checked_result:?}") != format!("{unchecked_result:?}") && failures.is_empty() {
        failures.push(ProbeFailure {
            step: common,
            property: "final-result".to_string(),
            detail: format!("results differ: {checked_result:?} vs {unchecked_result:?}"),
        });
    }
    ProbeReport {
        program_id: id.to_string(),
        probe: ProbeKind::Erasure,
        steps_taken: checked.len().saturating_sub(1),
        failures,
    }
}

// ---------------------------------------------------------------------------
// Small-instance enumerations and the exhaustive suite over them.
// ---------------------------------------------------------------------------

/// Every place over two roots and path elements {.0, .1, .f, *} up to the
/// given depth.
pub fn enumerate_places(depth: usize) -> Vec<Place> {
    let elems = [
        PathElem::TupleProj(0),
        PathElem::TupleProj(1),
        PathElem::Field("f".to_string()),
        PathElem::Deref,
    ];
    let mut out = Vec::new();
    for root in ["a", "b"] {
        let mut frontier = vec![Place::root(root)];
        out.extend(frontier.clone());
        for _ in 0..depth {
            let mut next = Vec::new();
            for p in &frontier {
                for e in &elems {
                    next.push(p.extend(e.clone()));
                }
            }
            out.extend(next.clone());
            frontier = next;
        }
    }
    out
}

/// Types of depth <= 3 over two base types and two loan atoms, including
/// references at every qualifier/provenance combination and small tuples.
pub fn enumerate_types(depth: usize) -> Vec<Type> {
    let loan_a = Loan::new(OwnQual::Uniq, Place::root("a"));
    let loan_b = Loan::new(OwnQual::Shrd, Place::root("b"));
    let provs = [
        Provenance::concrete([]),
        Provenance::concrete([loan_a.clone()]),
        Provenance::concrete([loan_b.clone()]),
        Provenance::concrete([loan_a, loan_b]),
    ];
    let mut tys = vec![Type::U32, Type::Bool];
    for _ in 0..depth {
        let prev: Vec<Type> = tys.iter().take(40).cloned().collect();
        for t in &prev {
            for prov in &provs {
                for qual in [OwnQual::Shrd, OwnQual::Uniq] {
                    tys.push(Type::Ref(prov.clone(), qual, Box::new(t.clone())));
                }
            }
            tys.push(Type::tuple([t.clone(), Type::U32]));
        }
        tys.dedup();
    }
    tys
}

/// Value trees of depth <= 4 over the primitive constants, pointers,
/// tuples, structs, and arrays.
pub fn enumerate_small_values(depth: usize) -> Vec<Value> {
    use crate::interp::value::Constant;
    let mut out = vec![
        Value::num(5),
        Value::num(9),
        Value::Prim(Constant::Bool(true)),
        Value::Prim(Constant::Str("s".into())),
        Value::Prim(Constant::Unit),
        Value::Ptr(OwnQual::Uniq, PtrTarget::Place(Place::root("a").proj(0))),
        Value::Ptr(OwnQual::Shrd, PtrTarget::Place(Place::root("b"))),
    ];
    for _ in 0..depth {
        let prev: Vec<Value> = out.iter().take(150).cloned().collect();
        for v in &prev {
            out.push(Value::Tuple(vec![v.clone()]));
            out.push(Value::Tuple(vec![v.clone(), Value::num(1)]));
            out.push(Value::Struct {
                name: "S".into(),
                fields: vec![
                    (PathElem::Field("f".into()), v.clone()),
                    (PathElem::Field("g".into()), Value::num(2)),
                ],
            });
            out.push(Value::Array(vec![v.clone(), v.clone()]));
        }
        out.dedup();
    }
    out
}

/// The exhaustive brute-force suite: unification commutativity and
/// idempotence, subtype reflexivity, overlap symmetry/reflexivity and its
/// prefix characterization, and the places-val/valuify round trip.
pub fn smallcheck_suite() -> ProbeReport {
    let globals = GlobalEnv::new();
    let mut failures = Vec::new();
    let mut cases = 0usize;

    // Unification: commutative and idempotent over all small type pairs.
    let tys = enumerate_types(3);
    for t in &tys {
        let same = typeck::unify(&globals, t, t);
        if same.as_ref() != Ok(t) {
            failures.push(ProbeFailure {
                step: 0,
                property: "unify-idempotent".to_string(),
                detail: format!("unify({t}, {t}) = {same:?}"),
            });
        }
        cases += 1;
    }
    for t1 in &tys {
        for t2 in &tys {
            let ab = typeck::unify(&globals, t1, t2);
            let ba = typeck::unify(&globals, t2, t1);
            let agree = match (&ab, &ba) {
                (Ok(x), Ok(y)) => x == y,
                (Err(_), Err(_)) => true,
                _ => false,
            };
            if !agree {
                failures.push(ProbeFailure {
                    step: 0,
                    property: "unify-commutative".to_string(),
                    detail: format!("unify({t1}, {t2}) != unify({t2}, {t1})"),
                });
            }
            cases += 1;
        }
    }

    // Subtyping: reflexive with an empty substitution on variable-free types.
    for t in &tys {
        match typeck::subtype(&globals, t, t) {
            Ok(subst) if subst.is_empty() => {}
            other => failures.push(ProbeFailure {
                step: 0,
                property: "subtype-reflexive".to_string(),
                detail: format!("subtype({t}, {t}) = {other:?}"),
            }),
        }
        cases += 1;
    }

    // Overlap: symmetric, reflexive, and exactly mutual prefixhood.
    let places = enumerate_places(3);
    for p in &places {
        if !overlaps(p, p) {
            failures.push(ProbeFailure {
                step: 0,
                property: "overlaps-reflexive".to_string(),
                detail: format!("overlaps({p}, {p}) is false"),
            });
        }
        cases += 1;
    }
    for p1 in &places {
        for p2 in &places {
            if overlaps(p1, p2) != overlaps(p2, p1) {
                failures.push(ProbeFailure {
                    step: 0,
                    property: "overlaps-symmetric".to_string(),
                    detail: format!("overlaps({p1}, {p2}) is not symmetric"),
                });
            }
            if overlaps(p1, p2) != (prefix_of(p1, p2) || prefix_of(p2, p1)) {
                failures.push(ProbeFailure {
                    step: 0,
                    property: "overlaps-prefix-characterization".to_string(),
                    detail: format!("overlaps({p1}, {p2}) does not match prefixhood"),
                });
            }
            cases += 1;
        }
    }

    // places-val / valuify: an exact inverse pair on small value trees.
    let values = enumerate_small_values(4);
    let root = Place::root("x");
    for v in &values {
        let mut store = Store::new();
        store.push_group("x", places_val(&root, v));
        match store.valuify(&root) {
            Ok(back) if &back == v => {}
            other => failures.push(ProbeFailure {
                step: 0,
                property: "valuify-inverts-places-val".to_string(),
                detail: format!("round trip of {v} produced {other:?}"),
            }),
        }
        cases += 1;
    }

    ProbeReport {
        program_id: "smallcheck".to_string(),
        probe: ProbeKind::Smallcheck,
        steps_taken: cases,
        failures,
    }
}

/// Counts per property domain, used by the acceptance suite to confirm the
/// enumerations are large enough to mean something.
pub struct SmallcheckSizes {
    pub types: usize,
    pub places: usize,
    pub values: usize,
}

pub fn smallcheck_sizes() -> SmallcheckSizes {
    SmallcheckSizes {
        types: enumerate_types(3).len(),
        places: enumerate_places(3).len(),
        values: enumerate_small_values(4).len(),
    }
}

/// Roots that appear free anywhere in an expression; exposed for tests
/// that want to exercise the liveness scan directly.
pub fn live_roots(e: &Expr) -> BTreeSet<String> {
    crate::ast::free_roots(e)
}

use std::collections::BTreeSet;

use super::*;
use crate::ast::{Loan, LoanSet, OwnQual, Place, Provenance, Type};
use crate::parser::{parse_expr, parse_program};

fn pt() -> Place {
    Place::root("pt")
}

fn place(s: &str) -> Place {
    let e = parse_expr(s).unwrap();
    match e.kind {
        crate::ast::ExprKind::Use(p) => p,
        other => panic!("`{s}` is not a place: {other:?}"),
    }
}

fn loans(items: &[(OwnQual, &str)]) -> LoanSet {
    items
        .iter()
        .map(|(q, p)| Loan::new(*q, place(p)))
        .collect()
}

fn point_globals() -> crate::ast::GlobalEnv {
    parse_program("struct Point(u32, u32); ()", "<test>").unwrap().0
}

fn env_of(entries: &[(&str, Type)]) -> crate::ast::PlaceEnv {
    // Entries are grouped per root in order of first appearance.
    let mut env = crate::ast::PlaceEnv::new();
    let mut order: Vec<String> = Vec::new();
    for (p, _) in entries {
        let root = place(p).root;
        if !order.contains(&root) {
            order.push(root);
        }
    }
    for root in order {
        let group: Vec<_> = entries
            .iter()
            .filter(|(p, _)| place(p).root == root)
            .map(|(p, t)| (place(p), t.clone()))
            .collect();
        env.push_group(root, group);
    }
    env
}

fn point_ty() -> Type {
    Type::Struct("Point".into(), vec![], vec![])
}

fn uniq_ref(loan_set: LoanSet, referent: Type) -> Type {
    Type::Ref(Provenance::Concrete(loan_set), OwnQual::Uniq, Box::new(referent))
}

fn shrd_ref(loan_set: LoanSet, referent: Type) -> Type {
    Type::Ref(Provenance::Concrete(loan_set), OwnQual::Shrd, Box::new(referent))
}

// -- mu_safety ---------------------------------------------------------------

#[test]
fn shared_use_conflicts_with_unique_loan() {
    let globals = point_globals();
    let env = env_of(&[
        ("pt", point_ty()),
        ("pt.0", Type::U32),
        ("pt.1", Type::U32),
        ("x", uniq_ref(loans(&[(OwnQual::Uniq, "pt")]), point_ty())),
    ]);
    let err = mu_safety(&globals, &env, OwnQual::Shrd, &pt()).unwrap_err();
    assert_eq!(err.error.code, crate::diag::Code::LoanConflict);
    assert_eq!(err.holders, BTreeSet::from([place("x")]));
}

#[test]
fn disjoint_projection_loans_do_not_conflict() {
    let globals = point_globals();
    let env = env_of(&[
        ("pt", point_ty()),
        ("pt.0", Type::U32),
        ("pt.1", Type::U32),
        ("y", uniq_ref(loans(&[(OwnQual::Uniq, "pt.1")]), Type::U32)),
    ]);
    let ty = mu_safety(&globals, &env, OwnQual::Uniq, &place("pt.0")).unwrap();
    assert_eq!(ty, Type::U32);
}

#[test]
fn no_loans_means_any_use_is_safe() {
    let globals = point_globals();
    let env = env_of(&[("x", Type::U32)]);
    assert_eq!(
        mu_safety(&globals, &env, OwnQual::Uniq, &place("x")).unwrap(),
        Type::U32
    );
}

#[test]
fn unique_use_conflicts_with_shared_loan() {
    let globals = point_globals();
    let env = env_of(&[
        ("m", Type::U32),
        ("n", Type::U32),
        (
            "x",
            shrd_ref(
                loans(&[(OwnQual::Shrd, "m"), (OwnQual::Shrd, "n")]),
                Type::U32,
            ),
        ),
    ]);
    let err = mu_safety(&globals, &env, OwnQual::Uniq, &place("m")).unwrap_err();
    assert_eq!(err.error.code, crate::diag::Code::LoanConflict);
}

#[test]
fn unbound_place_reports_unbound() {
    let globals = point_globals();
    let env = env_of(&[]);
    let err = mu_safety(&globals, &env, OwnQual::Uniq, &place("ghost")).unwrap_err();
    assert_eq!(err.error.code, crate::diag::Code::Unbound);
}

#[test]
fn deref_rooted_loans_resolve_before_overlap() {
    // A loan on (*r).0, with r pointing at pt, stands for a loan on pt.0.
    let globals = point_globals();
    let env = env_of(&[
        ("pt", point_ty()),
        ("pt.0", Type::U32),
        ("pt.1", Type::U32),
        ("r", uniq_ref(loans(&[(OwnQual::Uniq, "pt")]), point_ty())),
        ("(*r)", point_ty()),
        ("(*r).0", Type::U32),
        ("(*r).1", Type::U32),
        ("z", uniq_ref(loans(&[(OwnQual::Uniq, "(*r).0")]), Type::U32)),
    ]);
    // pt.0 is claimed through z's resolved loan (and pt through r's).
    let err = mu_safety(&globals, &env, OwnQual::Uniq, &place("pt.0")).unwrap_err();
    assert_eq!(err.error.code, crate::diag::Code::LoanConflict);
    // pt.1 is claimed by r's loan on all of pt, not by z's.
    let err = mu_safety(&globals, &env, OwnQual::Uniq, &place("pt.1")).unwrap_err();
    assert!(err.holders.contains(&place("r")));
}

#[test]
fn access_through_the_granting_loan_is_exempt() {
    let globals = point_globals();
    let env = env_of(&[
        ("pt", point_ty()),
        ("pt.0", Type::U32),
        ("pt.1", Type::U32),
        ("p", uniq_ref(loans(&[(OwnQual::Uniq, "pt")]), point_ty())),
        ("(*p)", point_ty()),
        ("(*p).0", Type::U32),
        ("(*p).1", Type::U32),
    ]);
    // Writing (*p).1 goes through p's own loan: allowed.
    assert!(mu_safety(&globals, &env, OwnQual::Uniq, &place("(*p).1")).is_ok());
    // Touching pt directly while p's loan lives: rejected.
    assert!(mu_safety(&globals, &env, OwnQual::Shrd, &pt()).is_err());
}

#[test]
fn writing_through_a_shared_reference_is_rejected() {
    let globals = point_globals();
    let env = env_of(&[
        ("m", Type::U32),
        ("s", shrd_ref(loans(&[(OwnQual::Shrd, "m")]), Type::U32)),
        ("(*s)", Type::U32),
    ]);
    let err = mu_safety(&globals, &env, OwnQual::Uniq, &place("(*s)")).unwrap_err();
    assert_eq!(err.error.code, crate::diag::Code::LoanConflict);
    // Reading through it is fine.
    assert!(mu_safety(&globals, &env, OwnQual::Shrd, &place("(*s)")).is_ok());
}

// -- is_copyable ---------------------------------------------------------

#[test]
fn copyability_examples() {
    let globals = point_globals();
    assert!(is_copyable(&globals, &Type::U32));
    assert!(!is_copyable(
        &globals,
        &Type::uniq_ref(Provenance::var("a"), Type::U32)
    ));
    assert!(is_copyable(
        &globals,
        &Type::tuple([
            Type::U32,
            Type::shrd_ref(Provenance::var("a"), Type::U32)
        ])
    ));
    assert!(!is_copyable(&globals, &Type::Str));
    assert!(!is_copyable(&globals, &Type::TyVar("T".into())));
    assert!(!is_copyable(&globals, &point_ty()), "structs are nominal and move-only");
}

/// Independent oracle over an enumeration of small types: copyability is a
/// containment scan for uniqueness demands, with String owning only when
/// not behind a shared reference.
#[test]
fn copyability_matches_structural_oracle_on_small_types() {
    let globals = point_globals();
    let atoms = [Type::U32, Type::Bool, Type::Str, Type::TyVar("T".into())];
    let mut tys: Vec<Type> = atoms.to_vec();
    for _ in 0..2 {
        let prev = tys.clone();
        for t in &prev {
            tys.push(Type::tuple([t.clone(), Type::U32]));
            tys.push(Type::shrd_ref(
                Provenance::single(OwnQual::Shrd, place("m")),
                t.clone(),
            ));
            tys.push(Type::uniq_ref(
                Provenance::single(OwnQual::Uniq, place("m")),
                t.clone(),
            ));
            tys.push(Type::Array(Box::new(t.clone()), 2));
        }
    }
    fn oracle(globals: &crate::ast::GlobalEnv, t: &Type, under_shrd: bool) -> bool {
        match t {
            Type::U32 | Type::Bool | Type::Unit => true,
            Type::Str => under_shrd,
            Type::TyVar(_) => false,
            Type::Ref(_, OwnQual::Uniq, _) => false,
            Type::Ref(_, OwnQual::Shrd, r) => oracle(globals, r, true),
            Type::Tuple(es) => es.iter().all(|e| oracle(globals, e, under_shrd)),
            Type::Array(e, _) => oracle(globals, e, under_shrd),
            _ => is_copyable(globals, t),
        }
    }
    let mut cases = 0;
    for t in &tys {
        assert_eq!(
            is_copyable(&globals, t),
            oracle(&globals, t, false),
            "copyability disagrees for {t}"
        );
        cases += 1;
    }
    assert!(cases > 30);
}

// -- unify ----------------------------------------------------------------

#[test]
fn unify_unions_shared_reference_provenances() {
    let globals = point_globals();
    let a = shrd_ref(loans(&[(OwnQual::Shrd, "m")]), Type::U32);
    let b = shrd_ref(loans(&[(OwnQual::Shrd, "n")]), Type::U32);
    let joined = unify(&globals, &a, &b).unwrap();
    assert_eq!(
        joined,
        shrd_ref(loans(&[(OwnQual::Shrd, "m"), (OwnQual::Shrd, "n")]), Type::U32)
    );
}

#[test]
fn unify_identity_on_base_types() {
    let globals = point_globals();
    assert_eq!(unify(&globals, &Type::U32, &Type::U32).unwrap(), Type::U32);
    assert!(unify(&globals, &Type::U32, &Type::Bool).is_err());
}

#[test]
fn unify_mixed_qualifiers_demotes_to_shared() {
    let globals = point_globals();
    let a = uniq_ref(loans(&[(OwnQual::Uniq, "m")]), Type::U32);
    let b = shrd_ref(loans(&[(OwnQual::Shrd, "n")]), Type::U32);
    let joined = unify(&globals, &a, &b).unwrap();
    assert_eq!(
        joined,
        shrd_ref(loans(&[(OwnQual::Uniq, "m"), (OwnQual::Shrd, "n")]), Type::U32)
    );
}

#[test]
fn unify_commutes_and_is_idempotent_over_qualifier_table() {
    let globals = point_globals();
    let quals = [OwnQual::Shrd, OwnQual::Uniq];
    for qa in quals {
        for qb in quals {
            let a = Type::Ref(
                Provenance::single(qa, place("m")),
                qa,
                Box::new(Type::U32),
            );
            let b = Type::Ref(
                Provenance::single(qb, place("n")),
                qb,
                Box::new(Type::U32),
            );
            let ab = unify(&globals, &a, &b).unwrap();
            let ba = unify(&globals, &b, &a).unwrap();
            assert_eq!(ab, ba, "unify must commute for {a} / {b}");
            let aa = unify(&globals, &a, &a).unwrap();
            assert_eq!(aa, a, "unify must be idempotent for {a}");
        }
    }
}

// -- subtype ----------------------------------------------------------------

#[test]
fn subtype_solves_provenance_variables() {
    let globals = point_globals();
    let actual = uniq_ref(loans(&[(OwnQual::Uniq, "pt.0")]), Type::U32);
    let annot = Type::uniq_ref(Provenance::var("x"), Type::U32);
    let subst = subtype(&globals, &actual, &annot).unwrap();
    assert_eq!(subst.len(), 1);
    assert_eq!(subst["x"], loans(&[(OwnQual::Uniq, "pt.0")]));
}

#[test]
fn subtype_reflexive_on_variable_free_types() {
    let globals = point_globals();
    let subst = subtype(&globals, &Type::U32, &Type::U32).unwrap();
    assert!(subst.is_empty());
    let t = uniq_ref(loans(&[(OwnQual::Uniq, "pt")]), point_ty());
    assert!(subtype(&globals, &t, &t).unwrap().is_empty());
}

#[test]
fn subtype_matches_tuple_components_positionwise() {
    let globals = point_globals();
    let actual = Type::tuple([
        shrd_ref(loans(&[(OwnQual::Shrd, "a")]), Type::U32),
        shrd_ref(loans(&[(OwnQual::Shrd, "b")]), Type::U32),
    ]);
    let annot = Type::tuple([
        Type::shrd_ref(Provenance::var("p"), Type::U32),
        Type::shrd_ref(Provenance::var("q"), Type::U32),
    ]);
    let subst = subtype(&globals, &actual, &annot).unwrap();
    assert_eq!(subst["p"], loans(&[(OwnQual::Shrd, "a")]));
    assert_eq!(subst["q"], loans(&[(OwnQual::Shrd, "b")]));
}

#[test]
fn subtype_requires_loan_coverage_between_concrete_provenances() {
    let globals = point_globals();
    let small = shrd_ref(loans(&[(OwnQual::Shrd, "m")]), Type::U32);
    let large = shrd_ref(loans(&[(OwnQual::Shrd, "m"), (OwnQual::Shrd, "n")]), Type::U32);
    assert!(subtype(&globals, &small, &large).is_ok());
    assert!(subtype(&globals, &large, &small).is_err());
}

#[test]
fn rigid_variables_only_match_themselves() {
    let globals = point_globals();
    let rigid = BTreeSet::from(["a".to_string()]);
    let annot = Type::shrd_ref(Provenance::var("a"), Type::U32);
    let var_actual = Type::shrd_ref(Provenance::var("a"), Type::U32);
    assert!(ops::subtype(&globals, &var_actual, &annot, &rigid).is_ok());
    let concrete_actual = shrd_ref(loans(&[(OwnQual::Shrd, "m")]), Type::U32);
    assert!(ops::subtype(&globals, &concrete_actual, &annot, &rigid).is_err());
}

// -- apply_subst -----------------------------------------------------------

#[test]
fn apply_subst_examples() {
    let mut subst = Substitution::new();
    subst.insert("x".into(), loans(&[(OwnQual::Uniq, "pt.0")]));

    let annot = Type::uniq_ref(Provenance::var("x"), Type::U32);
    assert_eq!(
        apply_subst_ty(&subst, &annot),
        uniq_ref(loans(&[(OwnQual::Uniq, "pt.0")]), Type::U32)
    );

    // Empty substitution is the identity.
    let empty = Substitution::new();
    assert_eq!(apply_subst_ty(&empty, &annot), annot);

    // Nested positions are rewritten too.
    let nested = Type::tuple([annot.clone(), Type::Bool]);
    let rewritten = apply_subst_ty(&subst, &nested);
    assert_eq!(
        rewritten,
        Type::tuple([
            uniq_ref(loans(&[(OwnQual::Uniq, "pt.0")]), Type::U32),
            Type::Bool
        ])
    );
}

// -- places_typ --------------------------------------------------------------

#[test]
fn places_typ_expands_tuples() {
    let globals = point_globals();
    let out = places_typ(&globals, &place("m"), &Type::tuple([Type::Str])).unwrap();
    assert_eq!(
        out,
        vec![
            (place("m"), Type::tuple([Type::Str])),
            (place("m.0"), Type::Str),
        ]
    );
}

#[test]
fn places_typ_expands_through_references() {
    let globals = point_globals();
    let ty = uniq_ref(loans(&[(OwnQual::Uniq, "pt")]), point_ty());
    let out = places_typ(&globals, &place("p"), &ty).unwrap();
    let places: Vec<String> = out.iter().map(|(p, _)| p.to_string()).collect();
    assert_eq!(places, vec!["p", "*p", "(*p).0", "(*p).1"]);
    assert_eq!(out[1].1, point_ty());
    assert_eq!(out[2].1, Type::U32);
}

#[test]
fn places_typ_scalar_is_a_leaf() {
    let globals = point_globals();
    let out = places_typ(&globals, &place("x"), &Type::U32).unwrap();
    assert_eq!(out, vec![(place("x"), Type::U32)]);
}

#[test]
fn places_typ_does_not_expand_array_elements() {
    let globals = point_globals();
    let out = places_typ(&globals, &place("a"), &Type::Array(Box::new(Type::U32), 4)).unwrap();
    assert_eq!(out.len(), 1);
}

// -- env_intersect -----------------------------------------------------------

#[test]
fn env_intersect_is_idempotent() {
    let globals = point_globals();
    let env = env_of(&[("m", Type::U32), ("n", Type::Bool)]);
    let joined = env_intersect(&globals, &env, &env).unwrap();
    assert_eq!(joined, env);
}

#[test]
fn env_intersect_unifies_types_of_shared_places() {
    let globals = point_globals();
    let g1 = env_of(&[
        ("m", Type::U32),
        ("x", shrd_ref(loans(&[(OwnQual::Shrd, "m")]), Type::U32)),
    ]);
    let g2 = env_of(&[
        ("m", Type::U32),
        ("x", shrd_ref(loans(&[(OwnQual::Shrd, "n")]), Type::U32)),
    ]);
    let joined = env_intersect(&globals, &g1, &g2).unwrap();
    assert_eq!(
        joined.lookup(&place("x")),
        Some(&shrd_ref(
            loans(&[(OwnQual::Shrd, "m"), (OwnQual::Shrd, "n")]),
            Type::U32
        ))
    );
}

#[test]
fn env_intersect_drops_one_sided_bindings() {
    let globals = point_globals();
    let g1 = env_of(&[("m", Type::U32), ("x", Type::Bool)]);
    let g2 = env_of(&[("m", Type::U32)]);
    let joined = env_intersect(&globals, &g1, &g2).unwrap();
    assert!(joined.contains(&place("m")));
    assert!(!joined.contains(&place("x")));
}

// -- well_formed_type --------------------------------------------------------

#[test]
fn wf_rejects_loans_on_dead_places() {
    let globals = point_globals();
    let dvars = crate::ast::TyVarEnv::new();
    let env = env_of(&[]); // m has been dropped
    let ty = shrd_ref(loans(&[(OwnQual::Shrd, "m.0")]), Type::Str);
    let err = well_formed_type(&globals, &dvars, &env, &ty).unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Wf);
    assert!(err.message.contains("does not live long enough"));
}

#[test]
fn wf_accepts_base_types_anywhere() {
    let globals = point_globals();
    let dvars = crate::ast::TyVarEnv::new();
    let env = env_of(&[]);
    assert!(well_formed_type(&globals, &dvars, &env, &Type::U32).is_ok());
}

#[test]
fn wf_requires_provenance_variables_in_scope() {
    let globals = point_globals();
    let mut dvars = crate::ast::TyVarEnv::new();
    let env = env_of(&[]);
    let ty = Type::uniq_ref(Provenance::var("a"), Type::U32);
    assert!(well_formed_type(&globals, &dvars, &env, &ty).is_err());
    dvars.push("a", crate::ast::Kind::Prov);
    assert!(well_formed_type(&globals, &dvars, &env, &ty).is_ok());
}

// -- mutually_safe -----------------------------------------------------------

#[test]
fn disjoint_unique_loans_are_mutually_safe() {
    let globals = point_globals();
    let env = env_of(&[("pt", point_ty()), ("pt.0", Type::U32), ("pt.1", Type::U32)]);
    let tys = [
        uniq_ref(loans(&[(OwnQual::Uniq, "pt.0")]), Type::U32),
        uniq_ref(loans(&[(OwnQual::Uniq, "pt.1")]), Type::U32),
    ];
    assert!(mutually_safe(&globals, &env, &tys).is_ok());
}

#[test]
fn overlapping_mixed_loans_are_not_mutually_safe() {
    let globals = point_globals();
    let env = env_of(&[("pt", point_ty()), ("pt.0", Type::U32), ("pt.1", Type::U32)]);
    let tys = [
        uniq_ref(loans(&[(OwnQual::Uniq, "pt")]), point_ty()),
        shrd_ref(loans(&[(OwnQual::Shrd, "pt")]), point_ty()),
    ];
    let err = mutually_safe(&globals, &env, &tys).unwrap_err();
    assert_eq!(err.code, crate::diag::Code::LoanConflict);
}

#[test]
fn loan_free_types_are_trivially_mutually_safe() {
    let globals = point_globals();
    let env = env_of(&[]);
    assert!(mutually_safe(&globals, &env, &[Type::U32, Type::Bool]).is_ok());
}

// -- apply_weakening ---------------------------------------------------------

#[test]
fn weakening_drops_dead_holders() {
    let globals = point_globals();
    let env = env_of(&[
        ("pt", point_ty()),
        ("pt.0", Type::U32),
        ("pt.1", Type::U32),
        ("x", uniq_ref(loans(&[(OwnQual::Uniq, "pt")]), point_ty())),
    ]);
    let holders = BTreeSet::from([place("x")]);
    let rest = parse_expr("(*y).0").unwrap(); // x unused afterwards
    let pruned = apply_weakening(&env, &holders, &rest);
    assert!(!pruned.contains(&place("x")));
    assert!(mu_safety(&globals, &pruned, OwnQual::Uniq, &pt()).is_ok());
}

#[test]
fn weakening_keeps_live_holders() {
    let env = env_of(&[
        ("pt", point_ty()),
        ("x", uniq_ref(loans(&[(OwnQual::Uniq, "pt")]), point_ty())),
    ]);
    let holders = BTreeSet::from([place("x")]);
    let rest = parse_expr("(*x).0").unwrap();
    let pruned = apply_weakening(&env, &holders, &rest);
    assert!(pruned.contains(&place("x")));
}

#[test]
fn weakening_with_no_holders_is_identity() {
    let env = env_of(&[("pt", point_ty())]);
    let rest = parse_expr("()").unwrap();
    let pruned = apply_weakening(&env, &BTreeSet::new(), &rest);
    assert_eq!(pruned, env);
}

// -- type_check / check_program on the worked programs ------------------------

fn check_src(src: &str) -> Result<CheckOutcome, crate::diag::Diagnostic> {
    let (globals, body) = parse_program(src, "<test>").unwrap();
    check_program(&globals, &body)
}

#[test]
fn double_move_is_rejected_as_moved() {
    let err = check_src(
        "struct Point(u32, u32);\n\
         let pt: Point = Point(6, 9);\n\
         let x: Point = pt;\n\
         let y: Point = pt;\n\
         ()",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Moved);
    assert_eq!(err.span.start_line, 4);
}

#[test]
fn double_shared_borrow_is_accepted() {
    check_src(
        "struct Point(u32, u32);\n\
         let pt: Point = Point(6, 9);\n\
         let x: &'x shrd Point = &shrd pt;\n\
         let y: &'y shrd Point = &shrd pt;\n\
         (*x).0",
    )
    .unwrap();
}

#[test]
fn double_unique_borrow_with_later_uses_is_rejected() {
    let err = check_src(
        "struct Point(u32, u32);\n\
         let pt: Point = Point(6, 9);\n\
         let x: &'x uniq Point = &uniq pt;\n\
         let y: &'y uniq Point = &uniq pt;\n\
         let a: u32 = (*x).0;\n\
         let b: u32 = (*y).0;\n\
         ()",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::LoanConflict);
    assert_eq!(err.span.start_line, 4);
}

#[test]
fn unique_then_shared_borrow_is_rejected() {
    let err = check_src(
        "struct Point(u32, u32);\n\
         let pt: Point = Point(6, 9);\n\
         let x: &'a uniq Point = &uniq pt;\n\
         let y: &'b shrd Point = &shrd pt;\n\
         let a: u32 = (*x).0;\n\
         let b: u32 = (*y).0;\n\
         ()",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::LoanConflict);
    assert_eq!(err.span.start_line, 4);
}

#[test]
fn disjoint_projection_borrows_solve_their_provenances() {
    let outcome = check_src(
        "struct Point(u32, u32);\n\
         let pt: Point = Point(6, 9);\n\
         let x: &'x uniq u32 = &uniq pt.0;\n\
         let y: &'y uniq u32 = &uniq pt.1;\n\
         (*x)",
    )
    .unwrap();
    assert_eq!(outcome.ty, Type::U32);
    let solved = solved_map(&outcome);
    assert_eq!(solved["x"], loans(&[(OwnQual::Uniq, "pt.0")]));
    assert_eq!(solved["y"], loans(&[(OwnQual::Uniq, "pt.1")]));
}

#[test]
fn nll_variant_with_unused_first_borrow_is_accepted() {
    check_src(
        "struct Point(u32, u32);\n\
         let pt: Point = Point(6, 9);\n\
         let x: &'x uniq Point = &uniq pt;\n\
         let y: &'y uniq Point = &uniq pt;\n\
         (*y).1",
    )
    .unwrap();
}

#[test]
fn escaping_reference_is_rejected_as_not_living_long_enough() {
    let err = check_src(
        "let msg: &'msg shrd String = {\n\
         let m: (String,) = (\"Hello\",);\n\
         &shrd m.0\n\
         };\n\
         msg",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Wf);
    assert!(err.message.contains("does not live long enough"));
    assert_eq!(err.span.start_line, 3);
}

#[test]
fn branch_disjoint_unique_borrows_are_accepted() {
    let outcome = check_src(
        "struct Point(u32, u32);\n\
         let cond: bool = true;\n\
         let pt: Point = Point(3, 2);\n\
         if cond {\n\
             let x: &'a uniq u32 = &uniq pt.0;\n\
             *x = 4;\n\
             ()\n\
         } else {\n\
             let p: &'b uniq Point = &uniq pt;\n\
             (*p).1 = 5;\n\
             ()\n\
         }\n\
         pt.0",
    )
    .unwrap();
    assert_eq!(outcome.ty, Type::U32);
}

#[test]
fn branch_join_keeps_both_loan_sets_and_rejects_unique_borrow() {
    let err = check_src(
        "let m: u32 = 6;\n\
         let n: u32 = 5;\n\
         let x: &'a shrd u32 = &shrd n;\n\
         if false {\n\
             x = &shrd m;\n\
             ()\n\
         } else {\n\
             ()\n\
         }\n\
         &uniq m;\n\
         let z: u32 = *x;\n\
         ()",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::LoanConflict);
    assert_eq!(err.span.start_line, 10);
}

#[test]
fn assignment_replaces_the_loan_set() {
    // After x = &shrd m in straight-line code, n is uniquely borrowable.
    check_src(
        "let m: u32 = 6;\n\
         let n: u32 = 5;\n\
         let x: &'a shrd u32 = &shrd n;\n\
         x = &shrd m;\n\
         let y: &'y uniq u32 = &uniq n;\n\
         *y = 7;\n\
         let z: u32 = *x;\n\
         ()",
    )
    .unwrap();
}

#[test]
fn undefined_struct_is_unbound() {
    let err = check_src("let p: Pointt = 5; ()").unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Unbound);
}

#[test]
fn fn_body_must_subtype_declared_return() {
    let err = check_src("fn f() -> u32 { true } ()").unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Subtype);
}

#[test]
fn empty_program_checks_at_unit() {
    let outcome = check_src("()").unwrap();
    assert_eq!(outcome.ty, Type::Unit);
    assert!(outcome.env_out.is_empty());
}

#[test]
fn sequencing_requires_unit_statements() {
    let err = check_src("5; ()").unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Unify);
}

#[test]
fn returning_a_reference_to_a_local_is_rejected() {
    let err = check_src("fn f<'a>() -> &'a shrd u32 { let m: u32 = 5; &shrd m } ()").unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Wf);
}

#[test]
fn returning_a_borrow_of_a_parameter_is_rejected() {
    let err = check_src("fn f<'a>(x: u32) -> &'a shrd u32 { &shrd x } ()").unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Subtype);
}

#[test]
fn generic_identity_function_checks() {
    check_src(
        "fn id<'a>(x: &'a shrd u32) -> &'a shrd u32 { x }\n\
         let m: u32 = 6;\n\
         let r: &'r shrd u32 = &shrd m;\n\
         let s: &'s shrd u32 = id::<{shrd m}>(r);\n\
         *s",
    )
    .unwrap();
}

#[test]
fn closure_capturing_unique_reference_blocks_later_borrows() {
    let err = check_src(
        "let m: u32 = 6;\n\
         let r: &'r uniq u32 = &uniq m;\n\
         let f: fn[r: &{uniq m} uniq u32]() -> u32 = || { *r };\n\
         let bad: &'b uniq u32 = &uniq m;\n\
         let v: u32 = f();\n\
         v",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::LoanConflict);
    assert_eq!(err.span.start_line, 4);
}

#[test]
fn closure_capture_and_apply_checks() {
    let outcome = check_src(
        "let m: u32 = 6;\n\
         let r: &'r uniq u32 = &uniq m;\n\
         let f: fn[r: &{uniq m} uniq u32]() -> u32 = || { *r };\n\
         f()",
    )
    .unwrap();
    assert_eq!(outcome.ty, Type::U32);
}

#[test]
fn closure_may_not_leak_a_reference_to_its_captures() {
    let err = check_src(
        "let m: u32 = 6;\n\
         let f: fn() -> &{uniq m} uniq u32 = || { &uniq m };\n\
         ()",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Wf);
    assert!(err.message.contains("escapes"));
}

#[test]
fn partial_move_then_whole_use_is_rejected() {
    let err = check_src(
        "let p: (String, String) = (\"a\", \"b\");\n\
         let a: String = p.0;\n\
         let q: (String, String) = p;\n\
         ()",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Moved);
    assert_eq!(err.span.start_line, 3);
}

#[test]
fn partial_move_keeps_siblings_usable() {
    check_src(
        "let p: (String, String) = (\"a\", \"b\");\n\
         let a: String = p.0;\n\
         let b: String = p.1;\n\
         ()",
    )
    .unwrap();
}

#[test]
fn tuple_of_conflicting_borrows_is_rejected() {
    let err = check_src(
        "struct Point(u32, u32);\n\
         let pt: Point = Point(6, 9);\n\
         let t: (&'a uniq Point, &'b uniq u32) = (&uniq pt, &uniq pt.0);\n\
         ()",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::LoanConflict);
}

#[test]
fn branch_arms_may_return_references_to_different_places() {
    let outcome = check_src(
        "let c: bool = true;\n\
         let m: u32 = 6;\n\
         let n: u32 = 5;\n\
         let r: &'r shrd u32 = if c { &shrd m } else { &shrd n };\n\
         *r",
    )
    .unwrap();
    assert_eq!(outcome.ty, Type::U32);
}

#[test]
fn shadowing_a_loaned_binding_is_rejected() {
    let err = check_src(
        "let m: u32 = 6;\n\
         let r: &'r shrd u32 = &shrd m;\n\
         let m: bool = true;\n\
         let v: u32 = *r;\n\
         ()",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::LoanConflict);
}

#[test]
fn plain_shadowing_is_accepted() {
    let outcome = check_src(
        "let x: u32 = 1;\n\
         let x: bool = true;\n\
         if x { 1 } else { 2 }",
    )
    .unwrap();
    assert_eq!(outcome.ty, Type::U32);
}

#[test]
fn moving_out_of_a_reference_is_rejected() {
    let err = check_src(
        "let s: (String,) = (\"hi\",);\n\
         let r: &'r uniq (String,) = &uniq s;\n\
         let t: String = (*r).0;\n\
         ()",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Moved);
    assert!(err.message.contains("out of a reference"));
}

#[test]
fn borrow_index_types_and_loans() {
    let outcome = check_src(
        "let a: [u32; 3] = [1, 2, 3];\n\
         let x: &'x uniq u32 = &uniq a[1];\n\
         *x",
    )
    .unwrap();
    assert_eq!(outcome.ty, Type::U32);
    let solved = solved_map(&outcome);
    assert_eq!(solved["x"], loans(&[(OwnQual::Uniq, "a")]));
}

#[test]
fn two_unique_index_borrows_conflict() {
    let err = check_src(
        "let a: [u32; 3] = [1, 2, 3];\n\
         let x: &'x uniq u32 = &uniq a[0];\n\
         let y: &'y uniq u32 = &uniq a[1];\n\
         let v: u32 = *x;\n\
         ()",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::LoanConflict);
}

#[test]
fn slice_borrow_and_index_through_it() {
    let outcome = check_src(
        "let a: [u32; 4] = [1, 2, 3, 4];\n\
         let s: &'s shrd [u32] = &shrd a[1..3];\n\
         let x: &'x shrd u32 = &shrd (*s)[1];\n\
         *x",
    )
    .unwrap();
    assert_eq!(outcome.ty, Type::U32);
}

#[test]
fn arity_mismatch_in_calls() {
    let err = check_src("fn f(x: u32) -> u32 { x } f(1, 2)").unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Arity);
}

#[test]
fn named_struct_fields_check_in_declaration_order() {
    check_src(
        "struct Pair { first: u32, second: String }\n\
         let p: Pair = Pair { first: 1, second: \"x\" };\n\
         let s: String = p.second;\n\
         ()",
    )
    .unwrap();
    let err = check_src(
        "struct Pair { first: u32, second: String }\n\
         let p: Pair = Pair { second: \"x\", first: 1 };\n\
         ()",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Arity);
}

#[test]
fn recursive_structs_are_rejected() {
    let err = check_src("struct S(T); struct T(S); ()").unwrap_err();
    assert_eq!(err.code, crate::diag::Code::Kind);
}

#[test]
fn call_arguments_must_be_mutually_safe() {
    let err = check_src(
        "struct Point(u32, u32);\n\
         fn f<'a, 'b>(x: &'a uniq Point, y: &'b uniq Point) -> u32 { 0 }\n\
         let pt: Point = Point(6, 9);\n\
         f::<{uniq pt}, {uniq pt}>(&uniq pt, &uniq pt)",
    )
    .unwrap_err();
    assert_eq!(err.code, crate::diag::Code::LoanConflict);
}

//! Property tests over randomly generated types, places, and values.
//! These stress the algebraic invariants beyond the exhaustive small
//! enumerations: unification is commutative and idempotent, subtyping is
//! reflexive, overlap is symmetric and prefix-characterized, and the
//! value/shape translation is a bijection on its image.

use proptest::prelude::*;

use oxide::ast::{overlaps, prefix_of, GlobalEnv, Loan, OwnQual, PathElem, Place, Provenance, Type};
use oxide::interp::value::{places_val, Constant, PtrTarget, Store, Value};
use oxide::typeck;

fn arb_qual() -> impl Strategy<Value = OwnQual> {
    prop_oneof![Just(OwnQual::Shrd), Just(OwnQual::Uniq)]
}

fn arb_path_elem() -> impl Strategy<Value = PathElem> {
    prop_oneof![
        (0usize..3).prop_map(PathElem::TupleProj),
        prop::sample::select(&["f", "g"][..]).prop_map(|s| PathElem::Field(s.to_string())),
        Just(PathElem::Deref),
    ]
}

fn arb_place() -> impl Strategy<Value = Place> {
    (
        prop::sample::select(&["a", "b", "pt"][..]),
        prop::collection::vec(arb_path_elem(), 0..4),
    )
        .prop_map(|(root, path)| Place {
            root: root.to_string(),
            path,
        })
}

fn arb_provenance() -> impl Strategy<Value = Provenance> {
    prop::collection::btree_set((arb_qual(), arb_place()), 0..3)
        .prop_map(|loans| {
            Provenance::Concrete(
                loans
                    .into_iter()
                    .map(|(q, p)| Loan::new(q, p))
                    .collect(),
            )
        })
}

fn arb_type(depth: u32) -> BoxedStrategy<Type> {
    let leaf = prop_oneof![
        Just(Type::Unit),
        Just(Type::U32),
        Just(Type::Bool),
        Just(Type::Str),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    let inner = arb_type(depth - 1);
    prop_oneof![
        3 => leaf,
        2 => (arb_provenance(), arb_qual(), inner.clone())
            .prop_map(|(prov, qual, t)| Type::Ref(prov, qual, Box::new(t))),
        1 => prop::collection::vec(inner.clone(), 1..3).prop_map(Type::Tuple),
        1 => (inner, 1usize..4).prop_map(|(t, n)| Type::Array(Box::new(t), n)),
    ]
    .boxed()
}

fn arb_value(depth: u32) -> BoxedStrategy<Value> {
    let leaf = prop_oneof![
        (0u32..100).prop_map(Value::num),
        any::<bool>().prop_map(|b| Value::Prim(Constant::Bool(b))),
        Just(Value::Prim(Constant::Unit)),
        "[a-z]{0,6}".prop_map(|s| Value::Prim(Constant::Str(s))),
        (arb_qual(), arb_place()).prop_map(|(q, p)| Value::Ptr(q, PtrTarget::Place(p))),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    let inner = arb_value(depth - 1);
    prop_oneof![
        3 => leaf,
        1 => prop::collection::vec(inner.clone(), 1..3).prop_map(Value::Tuple),
        1 => prop::collection::vec(inner.clone(), 1..3).prop_map(Value::Array),
        1 => inner.prop_map(|v| Value::Struct {
            name: "S".into(),
            fields: vec![
                (PathElem::TupleProj(0), v),
                (PathElem::TupleProj(1), Value::num(7)),
            ],
        }),
    ]
    .boxed()
}

proptest! {
    #[test]
    fn unify_is_commutative(t1 in arb_type(3), t2 in arb_type(3)) {
        let globals = GlobalEnv::new();
        let ab = typeck::unify(&globals, &t1, &t2);
        let ba = typeck::unify(&globals, &t2, &t1);
        match (ab, ba) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "one side failed: {:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn unify_is_idempotent(t in arb_type(3)) {
        let globals = GlobalEnv::new();
        prop_assert_eq!(typeck::unify(&globals, &t, &t), Ok(t));
    }

    #[test]
    fn unify_result_absorbs_both_sides(t1 in arb_type(2), t2 in arb_type(2)) {
        // Joining with the join again changes nothing: the union of loan
        // sets has already happened.
        let globals = GlobalEnv::new();
        if let Ok(joined) = typeck::unify(&globals, &t1, &t2) {
            let again = typeck::unify(&globals, &t1, &joined);
            prop_assert_eq!(again, Ok(joined));
        }
    }

    #[test]
    fn subtype_is_reflexive_with_empty_substitution(t in arb_type(3)) {
        let globals = GlobalEnv::new();
        let subst = typeck::subtype(&globals, &t, &t);
        prop_assert!(matches!(subst, Ok(ref s) if s.is_empty()), "got {:?}", subst);
    }

    #[test]
    fn overlap_is_symmetric_and_prefix_characterized(p1 in arb_place(), p2 in arb_place()) {
        prop_assert_eq!(overlaps(&p1, &p2), overlaps(&p2, &p1));
        prop_assert_eq!(overlaps(&p1, &p2), prefix_of(&p1, &p2) || prefix_of(&p2, &p1));
        prop_assert!(overlaps(&p1, &p1));
    }

    #[test]
    fn valuify_inverts_places_val(v in arb_value(4)) {
        let root = Place::root("x");
        let mut store = Store::new();
        store.push_group("x", places_val(&root, &v));
        prop_assert_eq!(store.valuify(&root), Ok(v));
    }

    #[test]
    fn flattened_groups_are_rooted_and_contiguous(v in arb_value(3)) {
        let root = Place::root("x");
        let mappings = places_val(&root, &v);
        prop_assert!(!mappings.is_empty());
        prop_assert_eq!(&mappings[0].0, &root);
        for (place, _) in &mappings {
            prop_assert_eq!(&place.root, &"x");
            prop_assert!(prefix_of(&root, place));
        }
    }

    #[test]
    fn printed_places_reparse(p in arb_place()) {
        // A place with no dereferences is also valid expression syntax.
        let printed = p.to_string();
        let parsed = oxide::parser::parse_expr(&printed);
        match parsed {
            Ok(e) => match e.kind {
                oxide::ast::ExprKind::Use(p2) => prop_assert_eq!(p, p2),
                other => prop_assert!(false, "parsed to {:?}", other),
            },
            Err(d) => prop_assert!(false, "`{}` failed to parse: {}", printed, d),
        }
    }
}

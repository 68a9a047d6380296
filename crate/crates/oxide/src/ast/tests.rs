use super::*;

fn pt() -> Place {
    Place::root("pt")
}

#[test]
fn disjoint_projections_do_not_overlap() {
    assert!(!overlaps(&pt().proj(0), &pt().proj(1)));
}

#[test]
fn place_overlaps_its_projection() {
    assert!(overlaps(&pt(), &pt().proj(0)));
    assert!(overlaps(&pt().proj(0), &pt()));
}

#[test]
fn distinct_roots_never_overlap() {
    assert!(!overlaps(&Place::root("x"), &Place::root("y")));
}

#[test]
fn prefix_examples() {
    assert!(prefix_of(&pt(), &pt().proj(0)));
    assert!(!prefix_of(&pt().proj(0), &pt()));
    let p = Place::root("p");
    assert!(!prefix_of(&p.deref().proj(0), &p));
    assert!(prefix_of(&p, &p.deref().proj(0)));
    assert!(prefix_of(&p.deref(), &p.deref().proj(0)));
}

/// Every place of depth <= 3 over a small element alphabet.
fn small_places() -> Vec<Place> {
    let elems = [
        PathElem::TupleProj(0),
        PathElem::TupleProj(1),
        PathElem::Field("f".to_string()),
        PathElem::Deref,
    ];
    let mut out = Vec::new();
    for root in ["a", "b"] {
        let base = Place::root(root);
        out.push(base.clone());
        for e1 in &elems {
            let p1 = base.extend(e1.clone());
            out.push(p1.clone());
            for e2 in &elems {
                let p2 = p1.extend(e2.clone());
                out.push(p2.clone());
                for e3 in &elems {
                    out.push(p2.extend(e3.clone()));
                }
            }
        }
    }
    out
}

/// Independent oracle: treat (root, path) as a token sequence and test
/// prefixhood by direct token comparison.
fn tokens(p: &Place) -> Vec<String> {
    let mut out = vec![format!("root:{}", p.root)];
    for elem in &p.path {
        out.push(format!("{elem:?}"));
    }
    out
}

fn prefix_oracle(a: &Place, b: &Place) -> bool {
    let (ta, tb) = (tokens(a), tokens(b));
    tb.len() >= ta.len() && ta[..] == tb[..ta.len()]
}

#[test]
fn prefix_table_matches_brute_force_oracle() {
    let places = small_places();
    let mut checked = 0usize;
    for a in &places {
        for b in &places {
            assert_eq!(
                prefix_of(a, b),
                prefix_oracle(a, b),
                "prefix_of({a}, {b}) disagrees with the token oracle"
            );
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

#[test]
fn overlap_is_symmetric_reflexive_and_prefix_characterized() {
    let places = small_places();
    for a in &places {
        assert!(overlaps(a, a));
        for b in &places {
            assert_eq!(overlaps(a, b), overlaps(b, a));
            assert_eq!(overlaps(a, b), prefix_of(a, b) || prefix_of(b, a));
        }
    }
}

#[test]
fn concrete_provenances_compare_as_sets() {
    let l1 = Loan::new(OwnQual::Uniq, pt().proj(0));
    let l2 = Loan::new(OwnQual::Shrd, Place::root("m"));
    let a = Provenance::concrete([l1.clone(), l2.clone()]);
    let b = Provenance::concrete([l2.clone(), l1.clone(), l1]);
    assert_eq!(a, b);
}

#[test]
fn place_rendering() {
    assert_eq!(pt().proj(0).to_string(), "pt.0");
    let p = Place::root("p");
    assert_eq!(p.deref().to_string(), "*p");
    assert_eq!(p.deref().proj(1).to_string(), "(*p).1");
    assert_eq!(p.proj(0).deref().to_string(), "*p.0");
    assert_eq!(p.deref().deref().to_string(), "**p");
    assert_eq!(Place::root("s").field("name").to_string(), "s.name");
}

#[test]
fn type_rendering() {
    let ref_ty = Type::uniq_ref(Provenance::single(OwnQual::Uniq, pt().proj(0)), Type::U32);
    assert_eq!(ref_ty.to_string(), "&{uniq pt.0} uniq u32");
    assert_eq!(Type::tuple([Type::U32, Type::U32]).to_string(), "(u32, u32)");
    assert_eq!(Type::tuple([Type::Str]).to_string(), "(String,)");
    assert_eq!(
        Type::shrd_ref(Provenance::var("a"), Type::Slice(Box::new(Type::U32))).to_string(),
        "&'a shrd [u32]"
    );
}

#[test]
fn env_lookup_sees_most_recent_binding() {
    let mut env = PlaceEnv::new();
    env.push_group("x", vec![(Place::root("x"), Type::U32)]);
    env.push_group("y", vec![(Place::root("y"), Type::Bool)]);
    env.push_group("x", vec![(Place::root("x"), Type::Str)]);
    assert_eq!(env.lookup(&Place::root("x")), Some(&Type::Str));

    // Popping the shadow restores the earlier binding.
    env.pop_group("x");
    assert_eq!(env.lookup(&Place::root("x")), Some(&Type::U32));
    env.pop_group("x");
    assert_eq!(env.lookup(&Place::root("x")), None);
    assert!(env.contains(&Place::root("y")));
}

#[test]
fn env_remove_chain_keeps_siblings_and_drops_ancestors() {
    let mut env = PlaceEnv::new();
    env.push_group(
        "pt",
        vec![
            (pt(), Type::tuple([Type::Str, Type::Str])),
            (pt().proj(0), Type::Str),
            (pt().proj(1), Type::Str),
        ],
    );
    env.remove_chain(&pt().proj(0));
    assert!(!env.contains(&pt().proj(0)));
    assert!(!env.contains(&pt()), "partially moved aggregate is unusable");
    assert!(env.contains(&pt().proj(1)));
}

#[test]
fn free_roots_respects_binders() {
    let e = crate::parser::parse_expr("let x: u32 = y; x").unwrap();
    let roots = free_roots(&e);
    assert!(roots.contains("y"));
    assert!(!roots.contains("x"));

    let closure = crate::parser::parse_expr("|x: u32| { (x, z) }").unwrap();
    let roots = free_roots(&closure);
    assert_eq!(roots.into_iter().collect::<Vec<_>>(), vec!["z"]);
}

use super::*;
use crate::ast::{free_roots, OwnQual, Place};
use crate::diag::Code;

fn roundtrip(src: &str) {
    let e = parse_expr(src).unwrap_or_else(|d| panic!("parse failed for `{src}`: {d}"));
    let printed = e.to_string();
    let again = parse_expr(&printed)
        .unwrap_or_else(|d| panic!("reparse failed for `{printed}`: {d}"));
    assert_eq!(e, again, "round trip changed the tree for `{src}` -> `{printed}`");
}

#[test]
fn parses_unit() {
    let e = parse_expr("()").unwrap();
    assert_eq!(e.kind, ExprKind::Unit);
}

#[test]
fn parses_shared_borrow() {
    let e = parse_expr("&shrd m.0").unwrap();
    assert_eq!(
        e.kind,
        ExprKind::Borrow(OwnQual::Shrd, Place::root("m").proj(0))
    );
}

#[test]
fn parses_if() {
    let e = parse_expr("if cond { () } else { () }").unwrap();
    assert!(matches!(e.kind, ExprKind::If(..)));
}

#[test]
fn parses_turbofish_app() {
    let e = parse_expr("f::<'a, u32>(x, y)").unwrap();
    match e.kind {
        ExprKind::App {
            prov_args,
            ty_args,
            args,
            ..
        } => {
            assert_eq!(prov_args, vec![Provenance::var("a")]);
            assert_eq!(ty_args, vec![Type::U32]);
            assert_eq!(args.len(), 2);
        }
        other => panic!("expected an application, got {other:?}"),
    }
}

#[test]
fn parses_abort() {
    let e = parse_expr("abort(\"oops\")").unwrap();
    assert_eq!(e.kind, ExprKind::Abort("oops".to_string()));
}

#[test]
fn parses_point_program() {
    let src = r#"
        struct Point(u32, u32);
        let pt: Point = Point(6, 9);
        let x: &'x uniq u32 = &uniq pt.0;
        let y: &'y uniq u32 = &uniq pt.1;
        ()
    "#;
    let (globals, body) = parse_program(src, "point.ox").unwrap();
    assert_eq!(globals.structs.len(), 1);
    let ExprKind::Let { name, annot, rhs, body: inner } = &body.kind else {
        panic!("expected let at top level");
    };
    assert_eq!(name, "pt");
    assert_eq!(annot, &Type::Struct("Point".into(), vec![], vec![]));
    assert!(matches!(rhs.kind, ExprKind::StructCtor { .. }));
    let ExprKind::Let { annot, rhs, .. } = &inner.kind else {
        panic!("expected nested let");
    };
    assert_eq!(
        annot,
        &Type::uniq_ref(Provenance::var("x"), Type::U32)
    );
    assert_eq!(
        rhs.kind,
        ExprKind::Borrow(OwnQual::Uniq, Place::root("pt").proj(0))
    );
}

#[test]
fn every_node_carries_a_span() {
    let (_, body) = parse_program("let pt: u32 = 6;\nlet y: u32 = pt;\ny", "spans.ox").unwrap();
    let ExprKind::Let { rhs, body: inner, .. } = &body.kind else {
        panic!();
    };
    assert_eq!(rhs.span.start_line, 1);
    let ExprKind::Let { rhs, .. } = &inner.kind else {
        panic!();
    };
    assert_eq!(rhs.span.start_line, 2);
    assert_eq!(rhs.span.start_col, 14);
}

#[test]
fn deref_projection_places_parse() {
    let e = parse_expr("(*p).1 = 5").unwrap();
    let ExprKind::Assign(place, _) = &e.kind else {
        panic!("expected assignment, got {:?}", e.kind);
    };
    assert_eq!(*place, Place::root("p").deref().proj(1));

    // Assignment through `:=` is an accepted alias.
    let e2 = parse_expr("(*p).1 := 5").unwrap();
    assert_eq!(e, e2);
}

#[test]
fn mut_on_lets_is_accepted_and_ignored() {
    let a = parse_expr("let mut m: u32 = 6; m").unwrap();
    let b = parse_expr("let m: u32 = 6; m").unwrap();
    assert_eq!(a, b);
}

#[test]
fn pop_is_rejected_in_source() {
    let err = parse_expr("pop x").unwrap_err();
    assert_eq!(err.code, Code::Parse);
    assert!(err.message.contains("reserved"));
}

#[test]
fn parse_errors_carry_spans() {
    let err = parse_expr("let x: = 5; x").unwrap_err();
    assert_eq!(err.code, Code::Parse);
    assert_eq!(err.span.start_line, 1);
    assert_eq!(err.span.start_col, 8);
}

#[test]
fn semicolon_optional_after_if_blocks() {
    let e = parse_expr("if c { () } else { () }\n&uniq m; ()").unwrap();
    assert!(matches!(e.kind, ExprKind::Seq(..)));
}

#[test]
fn struct_literal_not_taken_in_if_condition() {
    let src = "struct S(u32);\nlet s: bool = true;\nif s { () } else { () }";
    assert!(parse_program(src, "t.ox").is_ok());
}

#[test]
fn named_struct_definitions_and_literals() {
    let src = r#"
        struct Pair { first: u32, second: String }
        let p: Pair = Pair { first: 1, second: "x" };
        p.second
    "#;
    let (globals, body) = parse_program(src, "named.ox").unwrap();
    assert!(matches!(
        globals.structs[0].fields,
        StructFields::Named(_)
    ));
    let ExprKind::Let { rhs, .. } = &body.kind else { panic!() };
    assert!(matches!(
        rhs.kind,
        ExprKind::StructCtor { fields: CtorFields::Named(_), .. }
    ));
}

#[test]
fn fn_definitions_parse() {
    let src = r#"
        fn id<'a>(x: &'a shrd u32) -> &'a shrd u32 { x }
        ()
    "#;
    let (globals, _) = parse_program(src, "fns.ox").unwrap();
    let def = &globals.fns[0];
    assert_eq!(def.prov_params, vec!["a"]);
    assert_eq!(def.params[0].1, Type::shrd_ref(Provenance::var("a"), Type::U32));
    assert_eq!(def.ret, Type::shrd_ref(Provenance::var("a"), Type::U32));
}

#[test]
fn tyvars_resolve_inside_generic_scopes() {
    let src = "fn fst<T>(x: (T, u32)) -> u32 { x.1 } ()";
    let (globals, _) = parse_program(src, "g.ox").unwrap();
    assert_eq!(
        globals.fns[0].params[0].1,
        Type::tuple([Type::TyVar("T".into()), Type::U32])
    );
}

#[test]
fn concrete_provenance_types_parse() {
    let e = parse_expr("let x: &{uniq pt.0, shrd m} uniq u32 = y; ()").unwrap();
    let ExprKind::Let { annot, .. } = &e.kind else { panic!() };
    let Type::Ref(Provenance::Concrete(loans), OwnQual::Uniq, _) = annot else {
        panic!("expected concrete provenance, got {annot}");
    };
    assert_eq!(loans.len(), 2);
}

#[test]
fn closures_parse_with_and_without_generics() {
    roundtrip("|x: u32| { x }");
    roundtrip("<'a, T> |x: &'a shrd T| { x }");
    roundtrip("(|x: u32| { x })(5)");
}

#[test]
fn fn_types_with_captures_parse() {
    let e = parse_expr("let f: fn[r: &{uniq m} uniq u32]() -> u32 = g; ()").unwrap();
    let ExprKind::Let { annot: Type::Fn(fn_ty), .. } = &e.kind else {
        panic!("expected fn type");
    };
    assert_eq!(fn_ty.captured.entries().count(), 1);
}

#[test]
fn pretty_parse_round_trips() {
    for src in [
        "()",
        "5",
        "true",
        "\"hi\\n\"",
        "pt.0",
        "*x",
        "(*p).1",
        "&uniq pt.0",
        "&shrd a[1]",
        "&shrd a[1..3]",
        "[1, 2, 3]",
        "(5, (6, true))",
        "(\"one\",)",
        "x = 5",
        "let x: u32 = 5; x",
        "let x: (u32, bool) = (5, true); x.0",
        "if b { 1 } else { 2 }",
        "f(x)",
        "f::<'a, {uniq pt.0}, u32>(x, y)",
        "abort(\"boom\")",
        "let f: fn(u32) -> u32 = |x: u32| { x }; f(5)",
        "5; ()",
        "{ let x: u32 = 1; x }; ()",
    ] {
        roundtrip(src);
    }
}

#[test]
fn programs_render_canonically() {
    let src = "struct Point(u32, u32);\nfn mk() -> Point { Point(6, 9) }\nlet pt: Point = mk();\npt.0\n";
    let (globals, body) = parse_program(src, "c.ox").unwrap();
    let printed = render_program(&globals, &body);
    let (globals2, body2) = parse_program(&printed, "c.ox").unwrap();
    assert_eq!(globals, globals2);
    assert_eq!(body, body2);
}

#[test]
fn free_roots_sees_loans_in_annotations() {
    let e = parse_expr("let r: &{uniq pt} uniq u32 = q; ()").unwrap();
    let roots = free_roots(&e);
    assert!(roots.contains("pt"));
    assert!(roots.contains("q"));
}

//! Rendering round trips: the canonical printer reproduces the corpus
//! files token for token (whitespace and comments aside), and printed
//! types re-parse to the same trees.

use std::path::Path;

use oxide::parser::lexer::{lex, Tok};
use oxide::parser::{parse_expr, parse_program, render_program};

fn tokens(src: &str) -> Vec<Tok> {
    lex(src, "<tokens>")
        .expect("lexes")
        .into_iter()
        .map(|t| t.tok)
        .collect()
}

#[test]
fn printing_a_parsed_corpus_file_preserves_its_tokens() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut checked = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("ox") {
            continue;
        }
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name == "parse_error.ox" {
            continue; // deliberately malformed
        }
        let src = std::fs::read_to_string(&path).unwrap();
        let (globals, body) =
            parse_program(&src, &name).unwrap_or_else(|d| panic!("{name}: {d}"));
        let printed = render_program(&globals, &body);
        assert_eq!(
            tokens(&printed),
            tokens(&src),
            "{name}: canonical rendering changes the token stream\n--- printed ---\n{printed}"
        );
        checked += 1;
    }
    assert!(checked >= 30, "only {checked} corpus files checked");
}

#[test]
fn reparsing_a_printed_corpus_file_preserves_the_tree() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("ox") {
            continue;
        }
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name == "parse_error.ox" {
            continue;
        }
        let src = std::fs::read_to_string(&path).unwrap();
        let (globals, body) = parse_program(&src, &name).unwrap();
        let printed = render_program(&globals, &body);
        let (globals2, body2) =
            parse_program(&printed, &name).unwrap_or_else(|d| panic!("{name} reparse: {d}"));
        assert_eq!(globals, globals2, "{name}: globals changed");
        assert_eq!(body, body2, "{name}: body changed");
    }
}

#[test]
fn printed_types_reparse_to_the_same_annotation() {
    // Types have no standalone entry point; embed them as an annotation.
    for ty_src in [
        "u32",
        "bool",
        "String",
        "()",
        "(u32, bool)",
        "(String,)",
        "&'a uniq u32",
        "&{uniq pt.0} uniq u32",
        "&{uniq pt.0, shrd m} shrd (u32, u32)",
        "&'a shrd [u32]",
        "[u32; 3]",
        "Point",
        "Pair<'a, u32>",
        "fn(u32) -> u32",
        "fn<'a>(&'a shrd u32) -> &'a shrd u32",
        "fn[r: &{uniq m} uniq u32]() -> u32",
        "&'a uniq &'b shrd u32",
    ] {
        let src = format!("let x: {ty_src} = y; ()");
        let e = parse_expr(&src).unwrap_or_else(|d| panic!("`{ty_src}`: {d}"));
        let oxide::ast::ExprKind::Let { annot, .. } = &e.kind else {
            panic!()
        };
        let printed = format!("let x: {annot} = y; ()");
        let e2 = parse_expr(&printed).unwrap_or_else(|d| panic!("`{annot}` reparse: {d}"));
        let oxide::ast::ExprKind::Let { annot: annot2, .. } = &e2.kind else {
            panic!()
        };
        assert_eq!(annot, annot2, "type `{ty_src}` printed as `{annot}` changed on reparse");
    }
}

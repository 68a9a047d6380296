//! Recursive-descent parser from `.ox` source to a global environment plus
//! the trailing program body. Statements are sugar: `e1; e2` builds a
//! right-nested sequence and `let x: t = e;` scopes over the rest of its
//! block. Blocks are expressions and desugar away entirely.

pub mod lexer;

#[cfg(test)]
mod tests;

use std::collections::BTreeSet;

use crate::ast::ty::FnType;
use crate::ast::PlaceEnv;
use crate::ast::{
    CtorFields, Expr, ExprKind, FnDef, GlobalEnv, Loan, LoanSet, OwnQual, Place, Provenance,
    StructDef, StructFields, Type,
};
use crate::diag::{Code, Diagnostic, SourceSpan};

use lexer::{lex, Kw, Tok, Token};

/// Parse a whole program: top-level `struct`/`fn` items followed by the
/// program body. Every node carries a source span.
pub fn parse_program(src: &str, file: &str) -> Result<(GlobalEnv, Expr), Diagnostic> {
    let tokens = lex(src, file)?;
    let mut parser = Parser::new(tokens);
    parser.prescan_struct_names();
    let mut globals = GlobalEnv::new();
    loop {
        match parser.peek() {
            Tok::Kw(Kw::Struct) => {
                let def = parser.struct_def()?;
                globals.structs.push(def);
            }
            Tok::Kw(Kw::Fn) => {
                let def = parser.fn_def()?;
                globals.fns.push(def);
            }
            _ => break,
        }
    }
    let body = parser.stmts(StmtsEnd::Eof)?;
    parser.expect_eof()?;
    Ok((globals, body))
}

/// Parse a single expression (statement sugar allowed), for tests and
/// programmatic use.
pub fn parse_expr(src: &str) -> Result<Expr, Diagnostic> {
    let tokens = lex(src, "<expr>")?;
    let mut parser = Parser::new(tokens);
    let e = parser.stmts(StmtsEnd::Eof)?;
    parser.expect_eof()?;
    Ok(e)
}

/// Canonical rendering of a parsed program; `parse_program` of the result
/// yields the same trees.
pub fn render_program(globals: &GlobalEnv, body: &Expr) -> String {
    let mut out = String::new();
    for def in &globals.structs {
        out.push_str("struct ");
        out.push_str(&def.name);
        render_generic_params(&mut out, &def.prov_params, &def.ty_params);
        match &def.fields {
            StructFields::Positional(tys) if tys.is_empty() => out.push(';'),
            StructFields::Positional(tys) => {
                out.push('(');
                for (i, ty) in tys.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&ty.to_string());
                }
                out.push_str(");");
            }
            StructFields::Named(fields) => {
                out.push_str(" { ");
                for (i, (name, ty)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(name);
                    out.push_str(": ");
                    out.push_str(&ty.to_string());
                }
                out.push_str(" }");
            }
        }
        out.push('\n');
    }
    for def in &globals.fns {
        out.push_str("fn ");
        out.push_str(&def.name);
        render_generic_params(&mut out, &def.prov_params, &def.ty_params);
        out.push('(');
        for (i, (name, ty)) in def.params.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(name);
            out.push_str(": ");
            out.push_str(&ty.to_string());
        }
        out.push(')');
        if def.ret != Type::Unit {
            out.push_str(" -> ");
            out.push_str(&def.ret.to_string());
        }
        out.push_str(" { ");
        out.push_str(&def.body.to_string());
        out.push_str(" }\n");
    }
    out.push_str(&body.to_string());
    out.push('\n');
    out
}

fn render_generic_params(out: &mut String, provs: &[String], tys: &[String]) {
    if provs.is_empty() && tys.is_empty() {
        return;
    }
    out.push('<');
    let mut first = true;
    for p in provs {
        if !first {
            out.push_str(", ");
        }
        first = false;
        out.push('\'');
        out.push_str(p);
    }
    for t in tys {
        if !first {
            out.push_str(", ");
        }
        first = false;
        out.push_str(t);
    }
    out.push('>');
}

#[derive(Clone, Copy, PartialEq)]
enum StmtsEnd {
    Eof,
    Brace,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    struct_names: BTreeSet<String>,
    tyvars: Vec<String>,
    /// Set while parsing an `if` condition, where `Name { .. }` would be
    /// ambiguous with the branch block.
    no_struct_literal: bool,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Parser {
        Parser {
            tokens,
            pos: 0,
            struct_names: BTreeSet::new(),
            tyvars: Vec::new(),
            no_struct_literal: false,
        }
    }

    fn prescan_struct_names(&mut self) {
        for window in self.tokens.windows(2) {
            if window[0].tok == Tok::Kw(Kw::Struct) {
                if let Tok::Ident(name) = &window[1].tok {
                    self.struct_names.insert(name.clone());
                }
            }
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn here(&self) -> SourceSpan {
        self.tokens[self.pos].span.clone()
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos.saturating_sub(1)].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, Diagnostic> {
        if self.peek() == &tok {
            Ok(self.bump())
        } else {
            Err(self.err(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    fn expect_eof(&mut self) -> Result<(), Diagnostic> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            Err(self.err(format!("unexpected {}", self.peek().describe())))
        }
    }

    fn err(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(Code::Parse, msg, self.here())
    }

    fn ident(&mut self) -> Result<(String, SourceSpan), Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let t = self.bump();
                Ok((name, t.span))
            }
            Tok::Kw(Kw::Pop) => Err(self.err("`pop` is reserved for runtime terms")),
            other => Err(self.err(format!("expected identifier, found {}", other.describe()))),
        }
    }

    // -- items ----------------------------------------------------------

    fn struct_def(&mut self) -> Result<StructDef, Diagnostic> {
        let kw = self.expect(Tok::Kw(Kw::Struct))?;
        let (name, _) = self.ident()?;
        let (prov_params, ty_params) = self.generic_params()?;
        self.tyvars.extend(ty_params.iter().cloned());
        let fields = match self.peek() {
            Tok::LParen => {
                self.bump();
                let mut tys = Vec::new();
                while self.peek() != &Tok::RParen {
                    tys.push(self.ty()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                StructFields::Positional(tys)
            }
            Tok::LBrace => {
                self.bump();
                let mut fields = Vec::new();
                while self.peek() != &Tok::RBrace {
                    let (fname, _) = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let ty = self.ty()?;
                    fields.push((fname, ty));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                self.eat(&Tok::Semi);
                StructFields::Named(fields)
            }
            Tok::Semi => {
                self.bump();
                StructFields::Positional(Vec::new())
            }
            other => {
                return Err(self.err(format!(
                    "expected struct fields or `;`, found {}",
                    other.describe()
                )))
            }
        };
        self.tyvars.truncate(self.tyvars.len() - ty_params.len());
        let span = kw.span.to(&self.prev_span());
        Ok(StructDef {
            name,
            prov_params,
            ty_params,
            fields,
            span,
        })
    }

    fn fn_def(&mut self) -> Result<FnDef, Diagnostic> {
        let kw = self.expect(Tok::Kw(Kw::Fn))?;
        let (name, _) = self.ident()?;
        let (prov_params, ty_params) = self.generic_params()?;
        self.tyvars.extend(ty_params.iter().cloned());
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        while self.peek() != &Tok::RParen {
            let (pname, _) = self.ident()?;
            self.expect(Tok::Colon)?;
            let ty = self.ty()?;
            params.push((pname, ty));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        let ret = if self.eat(&Tok::Arrow) {
            self.ty()?
        } else {
            Type::Unit
        };
        self.expect(Tok::LBrace)?;
        let body = self.stmts(StmtsEnd::Brace)?;
        self.expect(Tok::RBrace)?;
        self.tyvars.truncate(self.tyvars.len() - ty_params.len());
        let span = kw.span.to(&self.prev_span());
        Ok(FnDef {
            name,
            prov_params,
            ty_params,
            params,
            ret,
            body,
            span,
        })
    }

    /// `<'a, 'b, T, U>`: provenance parameters first, then type parameters.
    fn generic_params(&mut self) -> Result<(Vec<String>, Vec<String>), Diagnostic> {
        let mut provs = Vec::new();
        let mut tys = Vec::new();
        if !self.eat(&Tok::Lt) {
            return Ok((provs, tys));
        }
        while self.peek() != &Tok::Gt {
            match self.peek().clone() {
                Tok::ProvIdent(name) => {
                    if !tys.is_empty() {
                        return Err(
                            self.err("provenance parameters must precede type parameters")
                        );
                    }
                    self.bump();
                    provs.push(name);
                }
                Tok::Ident(name) => {
                    self.bump();
                    tys.push(name);
                }
                other => {
                    return Err(self.err(format!(
                        "expected generic parameter, found {}",
                        other.describe()
                    )))
                }
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::Gt)?;
        Ok((provs, tys))
    }

    // -- statements -------------------------------------------------------

    /// A run of statements ending at `}` or end of input, desugared to
    /// nested lets and sequences. An empty run is the unit value.
    fn stmts(&mut self, end: StmtsEnd) -> Result<Expr, Diagnostic> {
        let at_end = |p: &Parser| match end {
            StmtsEnd::Eof => p.peek() == &Tok::Eof,
            StmtsEnd::Brace => p.peek() == &Tok::RBrace,
        };
        if at_end(self) {
            return Ok(Expr::new(ExprKind::Unit, self.here()));
        }
        if self.peek() == &Tok::Kw(Kw::Let) {
            let kw = self.bump();
            // `mut` has no meaning here; bindings are always reassignable.
            self.eat(&Tok::Kw(Kw::Mut));
            let (name, _) = self.ident()?;
            self.expect(Tok::Colon)?;
            let annot = self.ty()?;
            self.expect(Tok::Eq)?;
            let rhs = self.expr()?;
            self.expect(Tok::Semi)?;
            let head_span = kw.span.to(&self.prev_span());
            let body = self.stmts(end)?;
            return Ok(Expr::new(
                ExprKind::Let {
                    name,
                    annot,
                    rhs: Box::new(rhs),
                    body: Box::new(body),
                },
                head_span,
            ));
        }

        let e = self.expr()?;
        let brace_ended = self.prev_span_is_rbrace();
        if self.eat(&Tok::Semi) {
            let rest = self.stmts(end)?;
            let span = e.span.to(&rest.span);
            return Ok(Expr::new(ExprKind::Seq(Box::new(e), Box::new(rest)), span));
        }
        if at_end(self) {
            return Ok(e);
        }
        if brace_ended {
            // Statement position after a block-ended expression (e.g. an
            // `if`); the semicolon is optional, as in the source language.
            let rest = self.stmts(end)?;
            let span = e.span.to(&rest.span);
            return Ok(Expr::new(ExprKind::Seq(Box::new(e), Box::new(rest)), span));
        }
        Err(self.err(format!(
            "expected `;` or end of block, found {}",
            self.peek().describe()
        )))
    }

    fn prev_span_is_rbrace(&self) -> bool {
        self.pos > 0 && self.tokens[self.pos - 1].tok == Tok::RBrace
    }

    // -- expressions ------------------------------------------------------

    fn expr(&mut self) -> Result<Expr, Diagnostic> {
        // Try an assignment first: place (`=` | `:=`) expr.
        let save = self.pos;
        if let Ok(place) = self.try_place() {
            if matches!(self.peek(), Tok::Eq | Tok::ColonEq) {
                let start = self.tokens[save].span.clone();
                self.bump();
                let rhs = self.expr()?;
                let span = start.to(&rhs.span);
                return Ok(Expr::new(ExprKind::Assign(place, Box::new(rhs)), span));
            }
        }
        self.pos = save;
        self.primary_expr()
    }

    fn primary_expr(&mut self) -> Result<Expr, Diagnostic> {
        let start = self.here();
        // Brace-ended forms do not take call suffixes directly; calling
        // one requires parentheses. This keeps `if .. { } (e)` a sequence
        // rather than an application.
        match self.peek() {
            Tok::Kw(Kw::If) => return self.if_expr(),
            Tok::Pipe | Tok::Lt => return self.closure_expr(),
            Tok::LBrace => {
                self.bump();
                let inner = self.stmts(StmtsEnd::Brace)?;
                self.expect(Tok::RBrace)?;
                return Ok(inner);
            }
            _ => {}
        }
        let e = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Expr::new(ExprKind::Num(n), start)
            }
            Tok::Kw(Kw::True) => {
                self.bump();
                Expr::new(ExprKind::Bool(true), start)
            }
            Tok::Kw(Kw::False) => {
                self.bump();
                Expr::new(ExprKind::Bool(false), start)
            }
            Tok::StrLit(s) => {
                self.bump();
                Expr::new(ExprKind::Str(s), start)
            }
            Tok::Kw(Kw::Abort) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let msg = match self.peek().clone() {
                    Tok::StrLit(s) => {
                        self.bump();
                        s
                    }
                    other => {
                        return Err(self.err(format!(
                            "abort takes a string literal, found {}",
                            other.describe()
                        )))
                    }
                };
                self.expect(Tok::RParen)?;
                Expr::new(ExprKind::Abort(msg), start.to(&self.prev_span()))
            }
            Tok::Kw(Kw::Pop) => return Err(self.err("`pop` is reserved for runtime terms")),
            Tok::Amp => self.borrow_expr()?,
            Tok::LBracket => {
                self.bump();
                let mut elems = Vec::new();
                while self.peek() != &Tok::RBracket {
                    elems.push(self.expr()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBracket)?;
                Expr::new(ExprKind::ArrayLit(elems), start.to(&self.prev_span()))
            }
            Tok::Star => {
                let place = self.try_place()?;
                Expr::new(ExprKind::Use(place), start.to(&self.prev_span()))
            }
            Tok::LParen => {
                // `(*p).1` must parse as a place usage, so try a place
                // before falling back to unit, grouping, or a tuple.
                let save = self.pos;
                match self.try_place() {
                    Ok(place) => Expr::new(ExprKind::Use(place), start.to(&self.prev_span())),
                    Err(_) => {
                        self.pos = save;
                        self.bump();
                        if self.eat(&Tok::RParen) {
                            Expr::new(ExprKind::Unit, start.to(&self.prev_span()))
                        } else {
                            let first = self.expr()?;
                            if self.eat(&Tok::RParen) {
                                first // grouping parentheses
                            } else {
                                let mut elems = vec![first];
                                let mut trailing = false;
                                while self.eat(&Tok::Comma) {
                                    if self.peek() == &Tok::RParen {
                                        trailing = true;
                                        break;
                                    }
                                    elems.push(self.expr()?);
                                }
                                self.expect(Tok::RParen)?;
                                if elems.len() == 1 && !trailing {
                                    return Err(self.err("expected `,` or `)` in tuple"));
                                }
                                Expr::new(ExprKind::Tuple(elems), start.to(&self.prev_span()))
                            }
                        }
                    }
                }
            }
            Tok::Ident(_) => self.ident_expr()?,
            other => {
                return Err(self.err(format!(
                    "expected an expression, found {}",
                    other.describe()
                )))
            }
        };
        self.call_suffix(e)
    }

    /// Postfix call applications: `e(args)`.
    fn call_suffix(&mut self, mut e: Expr) -> Result<Expr, Diagnostic> {
        while self.peek() == &Tok::LParen {
            self.bump();
            let mut args = Vec::new();
            while self.peek() != &Tok::RParen {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
            let span = e.span.to(&self.prev_span());
            e = Expr::new(
                ExprKind::App {
                    callee: Box::new(e),
                    prov_args: Vec::new(),
                    ty_args: Vec::new(),
                    args,
                },
                span,
            );
        }
        Ok(e)
    }

    /// Expression starting with an identifier: a place usage, a call
    /// (optionally with turbofish), or a struct constructor.
    fn ident_expr(&mut self) -> Result<Expr, Diagnostic> {
        let start = self.here();
        let place = self.try_place()?;
        let is_struct = place.is_root() && self.struct_names.contains(&place.root);

        // Turbofish instantiation: `f::<'a, u32>(...)` or `S::<...> { .. }`.
        let (prov_args, ty_args) = if self.peek() == &Tok::ColonColon && self.peek_at(1) == &Tok::Lt
        {
            self.bump();
            self.bump();
            self.generic_args()?
        } else {
            (Vec::new(), Vec::new())
        };
        let has_turbofish = !prov_args.is_empty() || !ty_args.is_empty();

        if self.peek() == &Tok::LParen && is_struct {
            self.bump();
            let mut fields = Vec::new();
            while self.peek() != &Tok::RParen {
                fields.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
            return Ok(Expr::new(
                ExprKind::StructCtor {
                    name: place.root,
                    prov_args,
                    ty_args,
                    fields: CtorFields::Positional(fields),
                },
                start.to(&self.prev_span()),
            ));
        }

        if self.peek() == &Tok::LBrace && is_struct && !self.no_struct_literal {
            self.bump();
            let mut fields = Vec::new();
            while self.peek() != &Tok::RBrace {
                let (fname, _) = self.ident()?;
                self.expect(Tok::Colon)?;
                let value = self.expr()?;
                fields.push((fname, value));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
            return Ok(Expr::new(
                ExprKind::StructCtor {
                    name: place.root,
                    prov_args,
                    ty_args,
                    fields: CtorFields::Named(fields),
                },
                start.to(&self.prev_span()),
            ));
        }

        if self.peek() == &Tok::LParen {
            self.bump();
            let mut args = Vec::new();
            while self.peek() != &Tok::RParen {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
            let callee_span = start.clone();
            return Ok(Expr::new(
                ExprKind::App {
                    callee: Box::new(Expr::new(ExprKind::Use(place), callee_span)),
                    prov_args,
                    ty_args,
                    args,
                },
                start.to(&self.prev_span()),
            ));
        }

        if has_turbofish {
            return Err(self.err("expected `(` after instantiation arguments"));
        }
        Ok(Expr::new(ExprKind::Use(place), start.to(&self.prev_span())))
    }

    fn if_expr(&mut self) -> Result<Expr, Diagnostic> {
        let kw = self.expect(Tok::Kw(Kw::If))?;
        let prev = self.no_struct_literal;
        self.no_struct_literal = true;
        let cond = self.expr()?;
        self.no_struct_literal = prev;
        self.expect(Tok::LBrace)?;
        let then_e = self.stmts(StmtsEnd::Brace)?;
        self.expect(Tok::RBrace)?;
        self.expect(Tok::Kw(Kw::Else))?;
        self.expect(Tok::LBrace)?;
        let else_e = self.stmts(StmtsEnd::Brace)?;
        self.expect(Tok::RBrace)?;
        let span = kw.span.to(&self.prev_span());
        Ok(Expr::new(
            ExprKind::If(Box::new(cond), Box::new(then_e), Box::new(else_e)),
            span,
        ))
    }

    /// `&uniq p`, `&shrd p`, `&uniq p[e]`, `&uniq p[e1..e2]`.
    fn borrow_expr(&mut self) -> Result<Expr, Diagnostic> {
        let amp = self.expect(Tok::Amp)?;
        let qual = self.own_qual()?;
        let place = self.try_place()?;
        if self.eat(&Tok::LBracket) {
            let first = self.expr()?;
            if self.eat(&Tok::DotDot) {
                let hi = self.expr()?;
                self.expect(Tok::RBracket)?;
                let span = amp.span.to(&self.prev_span());
                return Ok(Expr::new(
                    ExprKind::BorrowSlice(qual, place, Box::new(first), Box::new(hi)),
                    span,
                ));
            }
            self.expect(Tok::RBracket)?;
            let span = amp.span.to(&self.prev_span());
            return Ok(Expr::new(
                ExprKind::BorrowIdx(qual, place, Box::new(first)),
                span,
            ));
        }
        let span = amp.span.to(&self.prev_span());
        Ok(Expr::new(ExprKind::Borrow(qual, place), span))
    }

    fn own_qual(&mut self) -> Result<OwnQual, Diagnostic> {
        match self.peek() {
            Tok::Kw(Kw::Uniq) => {
                self.bump();
                Ok(OwnQual::Uniq)
            }
            Tok::Kw(Kw::Shrd) => {
                self.bump();
                Ok(OwnQual::Shrd)
            }
            other => Err(self.err(format!(
                "expected `uniq` or `shrd`, found {}",
                other.describe()
            ))),
        }
    }

    /// `<'a, T> |x: u32, ...| { body }`; the generic prefix is optional.
    fn closure_expr(&mut self) -> Result<Expr, Diagnostic> {
        let start = self.here();
        let (prov_params, ty_params) = if self.peek() == &Tok::Lt {
            self.generic_params()?
        } else {
            (Vec::new(), Vec::new())
        };
        self.tyvars.extend(ty_params.iter().cloned());
        self.expect(Tok::Pipe)?;
        let mut params = Vec::new();
        while self.peek() != &Tok::Pipe {
            let (name, _) = self.ident()?;
            self.expect(Tok::Colon)?;
            let ty = self.ty()?;
            params.push((name, ty));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::Pipe)?;
        self.expect(Tok::LBrace)?;
        let body = self.stmts(StmtsEnd::Brace)?;
        self.expect(Tok::RBrace)?;
        self.tyvars.truncate(self.tyvars.len() - ty_params.len());
        let span = start.to(&self.prev_span());
        Ok(Expr::new(
            ExprKind::Closure {
                prov_params,
                ty_params,
                params,
                body: Box::new(body),
            },
            span,
        ))
    }

    // -- places -----------------------------------------------------------

    /// Place grammar: `*` binds looser than projection, so `*p.0` reads the
    /// referent of `p.0` and `(*p).1` projects out of the referent of `p`.
    fn try_place(&mut self) -> Result<Place, Diagnostic> {
        if self.eat(&Tok::Star) {
            let inner = self.try_place()?;
            return self.place_suffixes(inner.deref());
        }
        let base = match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Place::root(name)
            }
            Tok::LParen => {
                self.bump();
                let inner = self.try_place()?;
                self.expect(Tok::RParen)?;
                inner
            }
            other => {
                return Err(self.err(format!("expected a place, found {}", other.describe())))
            }
        };
        self.place_suffixes(base)
    }

    fn place_suffixes(&mut self, mut place: Place) -> Result<Place, Diagnostic> {
        while self.peek() == &Tok::Dot {
            self.bump();
            match self.peek().clone() {
                Tok::Int(n) => {
                    self.bump();
                    place = place.proj(n as usize);
                }
                Tok::Ident(name) => {
                    self.bump();
                    place = place.field(name);
                }
                other => {
                    return Err(self.err(format!(
                        "expected projection index or field name, found {}",
                        other.describe()
                    )))
                }
            }
        }
        Ok(place)
    }

    // -- types --------------------------------------------------------------

    fn ty(&mut self) -> Result<Type, Diagnostic> {
        match self.peek().clone() {
            Tok::Kw(Kw::U32) => {
                self.bump();
                Ok(Type::U32)
            }
            Tok::Kw(Kw::Bool) => {
                self.bump();
                Ok(Type::Bool)
            }
            Tok::Kw(Kw::StringTy) => {
                self.bump();
                Ok(Type::Str)
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Type::Unit);
                }
                let first = self.ty()?;
                if self.eat(&Tok::RParen) {
                    return Ok(first); // grouping
                }
                let mut elems = vec![first];
                let mut trailing = false;
                while self.eat(&Tok::Comma) {
                    if self.peek() == &Tok::RParen {
                        trailing = true;
                        break;
                    }
                    elems.push(self.ty()?);
                }
                self.expect(Tok::RParen)?;
                if elems.len() == 1 && !trailing {
                    return Err(self.err("expected `,` or `)` in tuple type"));
                }
                Ok(Type::Tuple(elems))
            }
            Tok::LBracket => {
                self.bump();
                let elem = self.ty()?;
                if self.eat(&Tok::Semi) {
                    let len = match self.peek().clone() {
                        Tok::Int(n) => {
                            self.bump();
                            n as usize
                        }
                        other => {
                            return Err(self.err(format!(
                                "expected array length, found {}",
                                other.describe()
                            )))
                        }
                    };
                    self.expect(Tok::RBracket)?;
                    Ok(Type::Array(Box::new(elem), len))
                } else {
                    self.expect(Tok::RBracket)?;
                    Ok(Type::Slice(Box::new(elem)))
                }
            }
            Tok::Amp => {
                self.bump();
                let prov = self.provenance()?;
                let qual = self.own_qual()?;
                let referent = self.ty()?;
                Ok(Type::Ref(prov, qual, Box::new(referent)))
            }
            Tok::Kw(Kw::Fn) => {
                self.bump();
                let mut captured = PlaceEnv::new();
                if self.eat(&Tok::LBracket) {
                    while self.peek() != &Tok::RBracket {
                        let place = self.try_place()?;
                        self.expect(Tok::Colon)?;
                        let ty = self.ty()?;
                        let root = place.root.clone();
                        captured.push_group(root, vec![(place, ty)]);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBracket)?;
                }
                let (prov_params, ty_params) = self.generic_params()?;
                self.tyvars.extend(ty_params.iter().cloned());
                self.expect(Tok::LParen)?;
                let mut params = Vec::new();
                while self.peek() != &Tok::RParen {
                    params.push(self.ty()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Arrow)?;
                let ret = self.ty()?;
                self.tyvars.truncate(self.tyvars.len() - ty_params.len());
                Ok(Type::Fn(FnType {
                    prov_params,
                    ty_params,
                    params,
                    ret: Box::new(ret),
                    captured,
                }))
            }
            Tok::Ident(name) => {
                self.bump();
                let has_args = self.peek() == &Tok::Lt;
                if self.tyvars.contains(&name) {
                    if has_args {
                        return Err(self.err("type variables take no arguments"));
                    }
                    return Ok(Type::TyVar(name));
                }
                let (prov_args, ty_args) = if has_args {
                    self.bump();
                    self.generic_args()?
                } else {
                    (Vec::new(), Vec::new())
                };
                Ok(Type::Struct(name, prov_args, ty_args))
            }
            other => Err(self.err(format!("expected a type, found {}", other.describe()))),
        }
    }

    /// A provenance in type position: `'a` or `{uniq pt.0, shrd m}`.
    fn provenance(&mut self) -> Result<Provenance, Diagnostic> {
        match self.peek().clone() {
            Tok::ProvIdent(name) => {
                self.bump();
                Ok(Provenance::Var(name))
            }
            Tok::LBrace => {
                self.bump();
                let mut loans = LoanSet::new();
                while self.peek() != &Tok::RBrace {
                    let qual = self.own_qual()?;
                    let place = self.try_place()?;
                    loans.insert(Loan::new(qual, place));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(Provenance::Concrete(loans))
            }
            other => Err(self.err(format!(
                "expected a provenance (`'a` or `{{..}}`), found {}",
                other.describe()
            ))),
        }
    }

    /// Generic arguments after `<`: provenances first, then types, up to `>`.
    fn generic_args(&mut self) -> Result<(Vec<Provenance>, Vec<Type>), Diagnostic> {
        let mut provs = Vec::new();
        let mut tys = Vec::new();
        while self.peek() != &Tok::Gt {
            match self.peek() {
                Tok::ProvIdent(_) | Tok::LBrace => {
                    if !tys.is_empty() {
                        return Err(
                            self.err("provenance arguments must precede type arguments")
                        );
                    }
                    provs.push(self.provenance()?);
                }
                _ => tys.push(self.ty()?),
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::Gt)?;
        Ok((provs, tys))
    }
}

//! Parser for the textual IR:
//!
//! ```text
//! def F_r1(n) = if n < 2 then F_r2(1) else (F_r1(n - 1) [] let* x in F_r2(x))
//! def F_r2(z) = skip
//! main = let* m in F_r1(m)
//! ```
//!
//! `[]` binds loosest; the bodies of `let*`, `if` and `assume` extend over a
//! single operand of `[]`.

use super::{SeqDef, SeqExpr, SeqProgram};
use crate::logic::parse_formula_at;
use crate::syntax::expr::parse_simple;
use crate::syntax::lexer::{Cursor, Tok};
use crate::syntax::{is_reserved, name, Name, ParseError};

pub fn parse_program(src: &str) -> Result<SeqProgram, ParseError> {
    let mut cur = Cursor::new(src)?;
    let mut defs = Vec::new();
    let mut main = None;
    while *cur.peek() != Tok::Eof {
        if cur.eat_kw("def") {
            let fname = ident(&mut cur)?;
            cur.expect(&Tok::LParen, "`(`")?;
            let mut params = Vec::new();
            if *cur.peek() != Tok::RParen {
                params.push(ident(&mut cur)?);
                while cur.eat(&Tok::Comma) {
                    params.push(ident(&mut cur)?);
                }
            }
            cur.expect(&Tok::RParen, "`)`")?;
            cur.expect(&Tok::Eq, "`=`")?;
            let body = parse_choice(&mut cur)?;
            defs.push(SeqDef { fname, params, body });
        } else if main.is_none() && cur.eat_kw("main") {
            cur.expect(&Tok::Eq, "`=`")?;
            main = Some(parse_choice(&mut cur)?);
        } else {
            return Err(cur.error(if main.is_none() { &["`def`", "`main`"] } else { &["`def`"] }));
        }
    }
    Ok(SeqProgram { defs, main: main.unwrap_or(SeqExpr::Skip) })
}

pub fn parse_seq_expr(src: &str) -> Result<SeqExpr, ParseError> {
    let mut cur = Cursor::new(src)?;
    let e = parse_choice(&mut cur)?;
    cur.expect_eof()?;
    Ok(e)
}

fn ident(cur: &mut Cursor) -> Result<Name, ParseError> {
    match cur.peek().clone() {
        Tok::Ident(s) if !is_reserved(&s) => {
            cur.bump();
            Ok(name(&s))
        }
        _ => Err(cur.error(&["identifier"])),
    }
}

fn parse_choice(cur: &mut Cursor) -> Result<SeqExpr, ParseError> {
    let lhs = parse_prefix(cur)?;
    if cur.eat(&Tok::Choice) {
        let rhs = parse_choice(cur)?;
        return Ok(SeqExpr::choice(lhs, rhs));
    }
    Ok(lhs)
}

fn parse_prefix(cur: &mut Cursor) -> Result<SeqExpr, ParseError> {
    if cur.eat(&Tok::LParen) {
        let e = parse_choice(cur)?;
        cur.expect(&Tok::RParen, "`)`")?;
        return Ok(e);
    }
    if cur.eat_kw("skip") {
        return Ok(SeqExpr::Skip);
    }
    if cur.eat_kw("let") {
        cur.expect(&Tok::Star, "`*` after `let`")?;
        let mut names = vec![ident(cur)?];
        while cur.eat(&Tok::Comma) {
            names.push(ident(cur)?);
        }
        cur.expect_kw("in")?;
        let body = parse_prefix(cur)?;
        return Ok(SeqExpr::LetNd(names, Box::new(body)));
    }
    if cur.eat_kw("if") {
        let c = parse_simple(cur)?;
        cur.expect_kw("then")?;
        let a = parse_prefix(cur)?;
        cur.expect_kw("else")?;
        let b = parse_prefix(cur)?;
        return Ok(SeqExpr::if_(c, a, b));
    }
    if cur.is_kw("assume") && *cur.peek_at(1) == Tok::LParen {
        cur.bump();
        cur.bump();
        let f = parse_formula_at(cur)?;
        cur.expect(&Tok::RParen, "`)`")?;
        cur.expect(&Tok::Semi, "`;`")?;
        let body = parse_prefix(cur)?;
        return Ok(SeqExpr::assume(f, body));
    }
    if let Tok::Ident(_) = cur.peek() {
        let f = ident(cur)?;
        cur.expect(&Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *cur.peek() != Tok::RParen {
            args.push(parse_simple(cur)?);
            while cur.eat(&Tok::Comma) {
                args.push(parse_simple(cur)?);
            }
        }
        cur.expect(&Tok::RParen, "`)`")?;
        return Ok(SeqExpr::Call(f, args));
    }
    Err(cur.error(&["`skip`", "`let*`", "`if`", "`assume`", "`(`", "function call"]))
}

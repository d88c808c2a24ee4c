//! Recursive-descent parser for `.pi` sources.

use super::expr::parse_simple;
use super::lexer::{Cursor, Tok};
use super::{
    is_reserved, name, InputPrefix, Name, OutputPrefix, ParseError, Process, Span, TypeAnnot,
};

pub fn parse_process(src: &str) -> Result<Process, ParseError> {
    let mut cur = Cursor::new(src)?;
    let p = parse_par(&mut cur)?;
    cur.expect_eof()?;
    Ok(p)
}

fn span(cur: &Cursor) -> Span {
    let (l, c) = cur.pos();
    Span::new(l, c)
}

pub(crate) fn ident(cur: &mut Cursor) -> Result<Name, ParseError> {
    match cur.peek().clone() {
        Tok::Ident(s) if !is_reserved(&s) => {
            cur.bump();
            Ok(name(&s))
        }
        _ => Err(cur.error(&["identifier"])),
    }
}

fn parse_par(cur: &mut Cursor) -> Result<Process, ParseError> {
    let lhs = parse_prefix(cur)?;
    if cur.eat(&Tok::Bar) {
        let rhs = parse_par(cur)?;
        return Ok(Process::par(lhs, rhs));
    }
    Ok(lhs)
}

fn parse_cont(cur: &mut Cursor) -> Result<Process, ParseError> {
    if cur.eat(&Tok::Dot) {
        parse_prefix(cur)
    } else {
        Ok(Process::Nil)
    }
}

fn parse_prefix(cur: &mut Cursor) -> Result<Process, ParseError> {
    let sp = span(cur);
    match cur.peek().clone() {
        Tok::Int(0) => {
            cur.bump();
            Ok(Process::Nil)
        }
        Tok::LParen => {
            cur.bump();
            let p = parse_par(cur)?;
            cur.expect(&Tok::RParen, "`)`")?;
            Ok(p)
        }
        Tok::Ident(kw) if kw == "new" => {
            cur.bump();
            let x = ident(cur)?;
            let annot = if cur.eat(&Tok::Colon) { Some(parse_chtype(cur)?) } else { None };
            cur.expect_kw("in")?;
            let body = parse_prefix(cur)?;
            Ok(Process::Nu { name: x, annot, body: Box::new(body), span: sp })
        }
        Tok::Ident(kw) if kw == "if" => {
            cur.bump();
            let cond = parse_simple(cur)?;
            cur.expect_kw("then")?;
            let then = parse_prefix(cur)?;
            cur.expect_kw("else")?;
            let els = parse_prefix(cur)?;
            Ok(Process::If { cond, then: Box::new(then), els: Box::new(els), span: sp })
        }
        Tok::Ident(kw) if kw == "let" => {
            cur.bump();
            cur.expect(&Tok::Star, "`*` after `let`")?;
            let mut names = vec![ident(cur)?];
            while cur.eat(&Tok::Comma) {
                names.push(ident(cur)?);
            }
            cur.expect_kw("in")?;
            let body = parse_prefix(cur)?;
            Ok(Process::LetNd { names, body: Box::new(body), span: sp })
        }
        Tok::Star => {
            cur.bump();
            let chan = ident(cur)?;
            cur.expect(&Tok::Quest, "`?`")?;
            let (ints, chans) = parse_binders(cur)?;
            let cont = parse_cont(cur)?;
            Ok(Process::RepInput(InputPrefix { chan, ints, chans, cont: Box::new(cont), span: sp }))
        }
        Tok::Ident(_) => {
            let chan = ident(cur)?;
            match cur.peek() {
                Tok::Quest => {
                    cur.bump();
                    let (ints, chans) = parse_binders(cur)?;
                    let cont = parse_cont(cur)?;
                    Ok(Process::Input(InputPrefix {
                        chan,
                        ints,
                        chans,
                        cont: Box::new(cont),
                        span: sp,
                    }))
                }
                Tok::Bang => {
                    cur.bump();
                    cur.expect(&Tok::LParen, "`(`")?;
                    let mut ints = Vec::new();
                    let mut chans = Vec::new();
                    if !matches!(cur.peek(), Tok::RParen | Tok::Semi) {
                        ints.push(parse_simple(cur)?);
                        while cur.eat(&Tok::Comma) {
                            ints.push(parse_simple(cur)?);
                        }
                    }
                    if cur.eat(&Tok::Semi) {
                        chans = parse_name_list(cur)?;
                    }
                    cur.expect(&Tok::RParen, "`)`")?;
                    let cont = parse_cont(cur)?;
                    Ok(Process::Output(OutputPrefix {
                        chan,
                        ints,
                        chans,
                        cont: Box::new(cont),
                        span: sp,
                    }))
                }
                _ => Err(cur.error(&["`!`", "`?`"])),
            }
        }
        _ => Err(cur.error(&["`0`", "`(`", "`new`", "`if`", "`let*`", "`*`", "channel name"])),
    }
}

fn parse_name_list(cur: &mut Cursor) -> Result<Vec<Name>, ParseError> {
    let mut out = Vec::new();
    if matches!(cur.peek(), Tok::Ident(_)) {
        out.push(ident(cur)?);
        while cur.eat(&Tok::Comma) {
            out.push(ident(cur)?);
        }
    }
    Ok(out)
}

fn parse_binders(cur: &mut Cursor) -> Result<(Vec<Name>, Vec<Name>), ParseError> {
    cur.expect(&Tok::LParen, "`(`")?;
    let ints = parse_name_list(cur)?;
    let chans = if cur.eat(&Tok::Semi) { parse_name_list(cur)? } else { Vec::new() };
    cur.expect(&Tok::RParen, "`)`")?;
    Ok((ints, chans))
}

/// `ch[label](int, int; ch(int))`, with `int^n` abbreviating `n` slots.
pub(crate) fn parse_chtype(cur: &mut Cursor) -> Result<TypeAnnot, ParseError> {
    if !cur.eat_kw("ch") {
        return Err(cur.error(&["`ch`"]));
    }
    let label = if cur.eat(&Tok::LBrack) {
        let l = match cur.peek().clone() {
            Tok::Ident(s) => {
                cur.bump();
                name(&s)
            }
            Tok::Int(n) => {
                cur.bump();
                name(&n.to_string())
            }
            _ => return Err(cur.error(&["region label"])),
        };
        cur.expect(&Tok::RBrack, "`]`")?;
        Some(l)
    } else {
        None
    };
    cur.expect(&Tok::LParen, "`(`")?;
    let mut ints = 0usize;
    if cur.is_kw("int") {
        loop {
            cur.expect_kw("int")?;
            if cur.eat(&Tok::Caret) {
                match cur.bump() {
                    Tok::Int(n) => ints += n as usize,
                    _ => return Err(cur.error(&["arity after `^`"])),
                }
            } else {
                ints += 1;
            }
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
    }
    let mut chans = Vec::new();
    if cur.eat(&Tok::Semi) && cur.is_kw("ch") {
        chans.push(parse_chtype(cur)?);
        while cur.eat(&Tok::Comma) {
            chans.push(parse_chtype(cur)?);
        }
    }
    cur.expect(&Tok::RParen, "`)`")?;
    Ok(TypeAnnot { label, ints, chans })
}

//! Parsing and printing of simple expressions. The same grammar, extended
//! with predicate applications and boolean constants, is used for formulas.

use super::lexer::{Cursor, Tok};
use super::{is_reserved, name, Name, Op, ParseError, SimpleExpr};

/// Expression tree produced by the parser before it is committed to either
/// a [`SimpleExpr`] or a formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PExpr {
    Var(Name),
    Int(i64),
    Bool(bool),
    Op(Op, Vec<PExpr>),
    App(Name, Vec<PExpr>),
}

impl PExpr {
    pub fn into_simple(self) -> Result<SimpleExpr, String> {
        Ok(match self {
            PExpr::Var(x) => SimpleExpr::Var(x),
            PExpr::Int(i) => SimpleExpr::IntLit(i),
            PExpr::Bool(b) => SimpleExpr::IntLit(b as i64),
            PExpr::Op(op, args) => SimpleExpr::Op(
                op,
                args.into_iter().map(PExpr::into_simple).collect::<Result<_, _>>()?,
            ),
            PExpr::App(f, _) => return Err(format!("predicate application `{f}(..)`")),
        })
    }
}

pub struct ExprParser<'a> {
    pub cur: &'a mut Cursor,
    /// Whether `ident(args)` denotes a predicate application.
    pub allow_apps: bool,
}

impl<'a> ExprParser<'a> {
    pub fn new(cur: &'a mut Cursor, allow_apps: bool) -> Self {
        ExprParser { cur, allow_apps }
    }

    pub fn parse(&mut self) -> Result<PExpr, ParseError> {
        self.or()
    }

    fn or(&mut self) -> Result<PExpr, ParseError> {
        let mut lhs = self.and()?;
        while self.cur.eat_kw("or") {
            let rhs = self.and()?;
            lhs = PExpr::Op(Op::Or, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<PExpr, ParseError> {
        let mut lhs = self.not()?;
        while self.cur.eat_kw("and") {
            let rhs = self.not()?;
            lhs = PExpr::Op(Op::And, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<PExpr, ParseError> {
        if self.cur.eat_kw("not") {
            let e = self.not()?;
            return Ok(PExpr::Op(Op::Not, vec![e]));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<PExpr, ParseError> {
        let lhs = self.add()?;
        let op = match self.cur.peek() {
            Tok::Lt => Op::Lt,
            Tok::Le => Op::Le,
            Tok::Eq | Tok::EqEq => Op::Eq,
            Tok::Ne => Op::Ne,
            Tok::Gt => Op::Gt,
            Tok::Ge => Op::Ge,
            _ => return Ok(lhs),
        };
        self.cur.bump();
        let rhs = self.add()?;
        Ok(PExpr::Op(op, vec![lhs, rhs]))
    }

    fn add(&mut self) -> Result<PExpr, ParseError> {
        let mut lhs = self.mul()?;
        loop {
            let op = match self.cur.peek() {
                Tok::Plus => Op::Add,
                Tok::Minus => Op::Sub,
                _ => return Ok(lhs),
            };
            self.cur.bump();
            let rhs = self.mul()?;
            lhs = PExpr::Op(op, vec![lhs, rhs]);
        }
    }

    fn mul(&mut self) -> Result<PExpr, ParseError> {
        let mut lhs = self.unary()?;
        while self.cur.eat(&Tok::Star) {
            let rhs = self.unary()?;
            lhs = PExpr::Op(Op::Mul, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<PExpr, ParseError> {
        if self.cur.eat(&Tok::Minus) {
            if let Tok::Int(n) = *self.cur.peek() {
                let value = if n == 1u64 << 63 {
                    i64::MIN
                } else {
                    i64::try_from(n).map(|v| -v).map_err(|_| self.cur.error(&["integer literal"]))?
                };
                self.cur.bump();
                return Ok(PExpr::Int(value));
            }
            let e = self.unary()?;
            return Ok(PExpr::Op(Op::Neg, vec![e]));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<PExpr, ParseError> {
        match self.cur.peek().clone() {
            Tok::Int(n) => {
                let v = i64::try_from(n).map_err(|_| self.cur.error(&["integer literal"]))?;
                self.cur.bump();
                Ok(PExpr::Int(v))
            }
            Tok::LParen => {
                self.cur.bump();
                let e = self.or()?;
                self.cur.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.cur.bump();
                Ok(PExpr::Bool(s == "true"))
            }
            Tok::Ident(s) if !is_reserved(&s) => {
                self.cur.bump();
                if self.allow_apps && *self.cur.peek() == Tok::LParen {
                    self.cur.bump();
                    let mut args = Vec::new();
                    if !self.cur.eat(&Tok::RParen) {
                        loop {
                            args.push(self.or()?);
                            if self.cur.eat(&Tok::RParen) {
                                break;
                            }
                            self.cur.expect(&Tok::Comma, "`,` or `)`")?;
                        }
                    }
                    return Ok(PExpr::App(name(&s), args));
                }
                Ok(PExpr::Var(name(&s)))
            }
            _ => Err(self.cur.error(&["expression"])),
        }
    }
}

/// Parses a simple expression (no predicate applications).
pub fn parse_simple(cur: &mut Cursor) -> Result<SimpleExpr, ParseError> {
    let (line, col) = cur.pos();
    let e = ExprParser::new(cur, false).parse()?;
    e.into_simple().map_err(|found| ParseError {
        line,
        col,
        expected: vec!["simple expression".into()],
        found,
    })
}

/// Standalone entry point: parses a complete simple expression.
pub fn parse_simple_expr(src: &str) -> Result<SimpleExpr, ParseError> {
    let mut cur = Cursor::new(src)?;
    let e = parse_simple(&mut cur)?;
    cur.expect_eof()?;
    Ok(e)
}

/// Binding strength of an operator in the printed syntax.
pub fn level(op: Op) -> u8 {
    match op {
        Op::Or => 1,
        Op::And => 2,
        Op::Not => 3,
        Op::Lt | Op::Le | Op::Eq | Op::Ne | Op::Gt | Op::Ge => 4,
        Op::Add | Op::Sub => 5,
        Op::Mul => 6,
        Op::Neg => 7,
    }
}

/// Operand levels `(left, right)` required by a binary operator.
pub fn operand_levels(op: Op) -> (u8, u8) {
    let l = level(op);
    if op.is_comparison() {
        (l + 1, l + 1)
    } else {
        (l, l + 1)
    }
}

pub fn print_expr(e: &SimpleExpr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &SimpleExpr, ctx: u8) {
    match e {
        SimpleExpr::Var(x) => out.push_str(x),
        SimpleExpr::IntLit(i) => out.push_str(&i.to_string()),
        SimpleExpr::Op(op, args) => {
            let l = level(*op);
            let paren = l < ctx;
            if paren {
                out.push('(');
            }
            match (op, args.as_slice()) {
                (Op::Neg, [a]) => {
                    out.push('-');
                    if matches!(a, SimpleExpr::IntLit(_) | SimpleExpr::Op(Op::Neg, _)) {
                        out.push('(');
                        write_expr(out, a, 0);
                        out.push(')');
                    } else {
                        write_expr(out, a, l);
                    }
                }
                (Op::Not, [a]) => {
                    out.push_str("not ");
                    write_expr(out, a, l);
                }
                (_, [a, b]) => {
                    let (la, lb) = operand_levels(*op);
                    write_expr(out, a, la);
                    out.push(' ');
                    out.push_str(op.symbol());
                    out.push(' ');
                    write_expr(out, b, lb);
                }
                _ => {
                    // Malformed arity; print in prefix form so the problem is visible.
                    out.push_str(op.symbol());
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        write_expr(out, a, 0);
                    }
                    out.push(')');
                }
            }
            if paren {
                out.push(')');
            }
        }
    }
}

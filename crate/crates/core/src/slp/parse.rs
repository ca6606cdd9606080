//! Lexer and recursive-descent parser for the program DSL.
//!
//! The grammar is line-oriented: statements end at a newline or `;`, blocks
//! are brace-delimited, and `#` comments run to end of line. See the
//! [module documentation](super) for the surface syntax.

use super::{
    CBinOp, CFn, CmpOp, ConstExpr, GateRhs, InvokeArg, MacroDef, MacroParam, Operand, Pred,
    Program, SlpError, Span, Stmt, StmtKind,
};
use crate::rational::Rat;

/// Names that cannot be used as variables or macros.
const RESERVED: &[&str] = &[
    "inputs", "outputs", "macro", "for", "if", "else", "in", "even", "odd", "len", "max", "abs",
    "indexof",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Dollar(String),
    Num(Rat),
    LArrow,
    PlusB,
    MinusB,
    StarB,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    DotDot,
    Newline,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier {s:?}"),
            Tok::Dollar(s) => write!(f, "constant parameter \"${s}\""),
            Tok::Num(r) => write!(f, "number {r}"),
            Tok::LArrow => f.write_str("\"<-\""),
            Tok::PlusB => f.write_str("\"+b\""),
            Tok::MinusB => f.write_str("\"-b\""),
            Tok::StarB => f.write_str("\"*b\""),
            Tok::Plus => f.write_str("\"+\""),
            Tok::Minus => f.write_str("\"-\""),
            Tok::Star => f.write_str("\"*\""),
            Tok::Slash => f.write_str("\"/\""),
            Tok::Caret => f.write_str("\"^\""),
            Tok::LParen => f.write_str("\"(\""),
            Tok::RParen => f.write_str("\")\""),
            Tok::LBrace => f.write_str("\"{\""),
            Tok::RBrace => f.write_str("\"}\""),
            Tok::LBracket => f.write_str("\"[\""),
            Tok::RBracket => f.write_str("\"]\""),
            Tok::Comma => f.write_str("\",\""),
            Tok::DotDot => f.write_str("\"..\""),
            Tok::Newline => f.write_str("end of line"),
            Tok::Lt => f.write_str("\"<\""),
            Tok::Le => f.write_str("\"<=\""),
            Tok::Gt => f.write_str("\">\""),
            Tok::Ge => f.write_str("\">=\""),
            Tok::EqEq => f.write_str("\"==\""),
            Tok::Ne => f.write_str("\"!=\""),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexer<'s> {
    src: &'s [u8],
    pos: usize,
    line: u32,
    col: u32,
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_cont(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

impl<'s> Lexer<'s> {
    fn new(src: &'s str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            col: self.col,
        }
    }

    fn error(&self, msg: impl Into<String>) -> SlpError {
        SlpError::Parse {
            span: self.span(),
            msg: msg.into(),
        }
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, Span)>, SlpError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                None => {
                    out.push((Tok::Eof, self.span()));
                    return Ok(out);
                }
                Some(b' ') | Some(b'\t') | Some(b'\r') => {
                    self.bump();
                }
                Some(b'#') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some(b'\n') | Some(b';') => {
                    let span = self.span();
                    self.bump();
                    // Collapse runs of separators into one.
                    if !matches!(out.last(), Some((Tok::Newline, _)) | None) {
                        out.push((Tok::Newline, span));
                    }
                }
                Some(c) => {
                    let span = self.span();
                    let tok = self.lex_token(c)?;
                    out.push((tok, span));
                }
            }
        }
    }

    fn lex_token(&mut self, c: u8) -> Result<Tok, SlpError> {
        if is_ident_start(c) {
            return Ok(Tok::Ident(self.lex_ident()));
        }
        if c.is_ascii_digit() {
            return self.lex_number();
        }
        match c {
            b'$' => {
                self.bump();
                match self.peek() {
                    Some(c2) if is_ident_start(c2) => Ok(Tok::Dollar(self.lex_ident())),
                    _ => Err(self.error("expected a name after \"$\"")),
                }
            }
            b'<' => {
                self.bump();
                match self.peek() {
                    Some(b'-') => {
                        self.bump();
                        Ok(Tok::LArrow)
                    }
                    Some(b'=') => {
                        self.bump();
                        Ok(Tok::Le)
                    }
                    _ => Ok(Tok::Lt),
                }
            }
            b'>' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Ok(Tok::Ge)
                } else {
                    Ok(Tok::Gt)
                }
            }
            b'=' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Ok(Tok::EqEq)
                } else {
                    Err(self.error("expected \"==\" (assignment is written \"<-\")"))
                }
            }
            b'!' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Ok(Tok::Ne)
                } else {
                    Err(self.error("expected \"!=\""))
                }
            }
            b'+' | b'-' | b'*' => {
                self.bump();
                // `+b`, `-b`, `*b` are gate operators when the `b` is not the
                // start of a longer identifier.
                if self.peek() == Some(b'b') && !self.peek_at(1).is_some_and(is_ident_cont) {
                    self.bump();
                    Ok(match c {
                        b'+' => Tok::PlusB,
                        b'-' => Tok::MinusB,
                        _ => Tok::StarB,
                    })
                } else {
                    Ok(match c {
                        b'+' => Tok::Plus,
                        b'-' => Tok::Minus,
                        _ => Tok::Star,
                    })
                }
            }
            b'/' => {
                self.bump();
                Ok(Tok::Slash)
            }
            b'^' => {
                self.bump();
                Ok(Tok::Caret)
            }
            b'(' => {
                self.bump();
                Ok(Tok::LParen)
            }
            b')' => {
                self.bump();
                Ok(Tok::RParen)
            }
            b'{' => {
                self.bump();
                Ok(Tok::LBrace)
            }
            b'}' => {
                self.bump();
                Ok(Tok::RBrace)
            }
            b'[' => {
                self.bump();
                Ok(Tok::LBracket)
            }
            b']' => {
                self.bump();
                Ok(Tok::RBracket)
            }
            b',' => {
                self.bump();
                Ok(Tok::Comma)
            }
            b'.' => {
                self.bump();
                if self.peek() == Some(b'.') {
                    self.bump();
                    Ok(Tok::DotDot)
                } else {
                    Err(self.error("unexpected \".\""))
                }
            }
            other => Err(self.error(format!("unexpected character {:?}", other as char))),
        }
    }

    fn lex_ident(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(is_ident_cont) {
            self.bump();
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn lex_number(&mut self) -> Result<Tok, SlpError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        // A '.' continues a decimal only when it is not the ".." range
        // operator and is followed by a digit.
        if self.peek() == Some(b'.')
            && self.peek_at(1) != Some(b'.')
            && self.peek_at(1).is_some_and(|c| c.is_ascii_digit())
        {
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse::<Rat>()
            .map(Tok::Num)
            .map_err(|e| self.error(e.to_string()))
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        let i = (self.pos + 1).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, msg: impl Into<String>) -> SlpError {
        SlpError::Parse {
            span: self.span(),
            msg: msg.into(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, SlpError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.error_here(format!("expected {tok}, found {}", self.peek())))
        }
    }

    fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.bump();
        }
    }

    /// Consumes a statement separator (newline, or implicitly before `}` / EOF).
    fn expect_separator(&mut self) -> Result<(), SlpError> {
        match self.peek() {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::RBrace | Tok::Eof => Ok(()),
            other => Err(self.error_here(format!("expected end of statement, found {other}"))),
        }
    }

    fn ident(&mut self) -> Result<(String, Span), SlpError> {
        match self.peek() {
            Tok::Ident(name) => {
                if RESERVED.contains(&name.as_str()) {
                    return Err(self.error_here(format!("{name:?} is a reserved word")));
                }
                let name = name.clone();
                let span = self.bump().1;
                Ok((name, span))
            }
            other => Err(self.error_here(format!("expected an identifier, found {other}"))),
        }
    }

    fn program(&mut self) -> Result<Program, SlpError> {
        let mut prog = Program::default();
        let mut seen_inputs = false;
        let mut seen_outputs = false;
        loop {
            self.skip_newlines();
            match self.peek() {
                Tok::Eof => break,
                Tok::Ident(kw) if kw == "inputs" => {
                    let span = self.bump().1;
                    if seen_inputs {
                        return Err(SlpError::DuplicateDecl {
                            name: "inputs".into(),
                            span,
                        });
                    }
                    seen_inputs = true;
                    prog.inputs = self.ident_list()?;
                }
                Tok::Ident(kw) if kw == "outputs" => {
                    let span = self.bump().1;
                    if seen_outputs {
                        return Err(SlpError::DuplicateDecl {
                            name: "outputs".into(),
                            span,
                        });
                    }
                    seen_outputs = true;
                    prog.outputs = self.ident_list()?;
                }
                Tok::Ident(kw) if kw == "macro" => {
                    let def = self.macro_def()?;
                    if prog.macros.iter().any(|m| m.name == def.name) {
                        return Err(SlpError::DuplicateMacro {
                            name: def.name,
                            span: def.span,
                        });
                    }
                    prog.macros.push(def);
                }
                _ => {
                    prog.body.push(self.stmt()?);
                    self.expect_separator()?;
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for name in &prog.inputs {
            if !seen.insert(name.clone()) {
                return Err(SlpError::DuplicateDecl {
                    name: name.clone(),
                    span: Span::default(),
                });
            }
        }
        Ok(prog)
    }

    fn ident_list(&mut self) -> Result<Vec<String>, SlpError> {
        let mut names = vec![self.ident()?.0];
        while *self.peek() == Tok::Comma {
            self.bump();
            names.push(self.ident()?.0);
        }
        self.expect_separator()?;
        Ok(names)
    }

    fn macro_def(&mut self) -> Result<MacroDef, SlpError> {
        let span = self.bump().1; // `macro`
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                match self.peek().clone() {
                    Tok::Ident(_) => params.push(MacroParam::Var(self.ident()?.0)),
                    Tok::Dollar(p) => {
                        self.bump();
                        params.push(MacroParam::Const(format!("${p}")));
                    }
                    other => {
                        return Err(self.error_here(format!("expected a parameter, found {other}")))
                    }
                }
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let body = self.block()?;
        Ok(MacroDef {
            name,
            params,
            body,
            span,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, SlpError> {
        self.skip_newlines();
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        loop {
            self.skip_newlines();
            if *self.peek() == Tok::RBrace {
                self.bump();
                return Ok(stmts);
            }
            if *self.peek() == Tok::Eof {
                return Err(self.error_here("unclosed block: expected \"}\""));
            }
            stmts.push(self.stmt()?);
            if *self.peek() != Tok::RBrace {
                self.expect_separator()?;
            }
        }
    }

    fn stmt(&mut self) -> Result<Stmt, SlpError> {
        let span = self.span();
        match self.peek() {
            Tok::Ident(kw) if kw == "for" => {
                self.bump();
                let (var, _) = self.ident()?;
                match self.bump() {
                    (Tok::Ident(kw), _) if kw == "in" => {}
                    (other, _) => {
                        return Err(self.error_here(format!("expected \"in\", found {other}")))
                    }
                }
                let lo = self.cexpr()?;
                self.expect(Tok::DotDot)?;
                let hi = self.cexpr()?;
                let body = self.block()?;
                Ok(Stmt {
                    kind: StmtKind::For { var, lo, hi, body },
                    span,
                })
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                let pred = self.pred()?;
                let then_body = self.block()?;
                let else_body = if matches!(self.peek(), Tok::Ident(kw) if kw == "else") {
                    self.bump();
                    self.block()?
                } else {
                    Vec::new()
                };
                Ok(Stmt {
                    kind: StmtKind::If {
                        pred,
                        then_body,
                        else_body,
                    },
                    span,
                })
            }
            Tok::Ident(_) => {
                let (name, name_span) = self.ident()?;
                match self.peek() {
                    Tok::LParen => {
                        self.bump();
                        let args = self.invoke_args()?;
                        Ok(Stmt {
                            kind: StmtKind::Invoke { name, args },
                            span,
                        })
                    }
                    Tok::LArrow => {
                        self.bump();
                        let rhs = self.gate_rhs()?;
                        Ok(Stmt {
                            kind: StmtKind::Assign { dst: name, rhs },
                            span,
                        })
                    }
                    other => Err(SlpError::Parse {
                        span: name_span,
                        msg: format!("expected \"<-\" or \"(\" after {name:?}, found {other}"),
                    }),
                }
            }
            other => Err(self.error_here(format!("expected a statement, found {other}"))),
        }
    }

    fn invoke_args(&mut self) -> Result<Vec<InvokeArg>, SlpError> {
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                // A bare name (followed by `,` or `)`) is a name argument;
                // anything else is a constant expression.
                if let Tok::Ident(name) = self.peek() {
                    if matches!(self.peek2(), Tok::Comma | Tok::RParen)
                        && !RESERVED.contains(&name.as_str())
                    {
                        let (name, span) = self.ident()?;
                        args.push(InvokeArg::Name(name, span));
                        if *self.peek() == Tok::Comma {
                            self.bump();
                            continue;
                        }
                        break;
                    }
                }
                args.push(InvokeArg::Expr(self.cexpr()?));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn gate_rhs(&mut self) -> Result<GateRhs, SlpError> {
        let first: Operand = if let Tok::Ident(_) = self.peek() {
            let (name, span) = self.ident()?;
            Operand::Var(name, span)
        } else {
            Operand::Lit(self.cexpr()?)
        };
        match self.peek() {
            Tok::PlusB => {
                self.bump();
                let second = self.operand()?;
                Ok(GateRhs::AddB(first, second))
            }
            Tok::MinusB => {
                self.bump();
                let second = self.operand()?;
                Ok(GateRhs::SubB(first, second))
            }
            Tok::StarB => {
                self.bump();
                let factor = self.cexpr()?;
                Ok(GateRhs::MulB(first, factor))
            }
            _ => match first {
                Operand::Lit(e) => Ok(GateRhs::Const(e)),
                Operand::Var(name, span) => Err(SlpError::Parse {
                    span,
                    msg: format!(
                        "expected \"+b\", \"-b\", or \"*b\" after variable {name:?} \
                         (a plain copy is written \"x <- {name} *b 1\")"
                    ),
                }),
            },
        }
    }

    fn operand(&mut self) -> Result<Operand, SlpError> {
        if let Tok::Ident(_) = self.peek() {
            let (name, span) = self.ident()?;
            Ok(Operand::Var(name, span))
        } else {
            Ok(Operand::Lit(self.cexpr()?))
        }
    }

    fn pred(&mut self) -> Result<Pred, SlpError> {
        if let Tok::Ident(kw) = self.peek() {
            if kw == "even" || kw == "odd" {
                let is_even = kw == "even";
                let span = self.bump().1;
                self.expect(Tok::LParen)?;
                let e = self.cexpr()?;
                self.expect(Tok::RParen)?;
                return Ok(if is_even {
                    Pred::Even(e, span)
                } else {
                    Pred::Odd(e, span)
                });
            }
        }
        let lhs = self.cexpr()?;
        let span = self.span();
        match self.bump().0 {
            Tok::EqEq => Ok(Pred::Cmp(CmpOp::Eq, lhs, self.cexpr()?)),
            Tok::Ne => Ok(Pred::Cmp(CmpOp::Ne, lhs, self.cexpr()?)),
            Tok::Lt => Ok(Pred::Cmp(CmpOp::Lt, lhs, self.cexpr()?)),
            Tok::Le => Ok(Pred::Cmp(CmpOp::Le, lhs, self.cexpr()?)),
            Tok::Gt => Ok(Pred::Cmp(CmpOp::Gt, lhs, self.cexpr()?)),
            Tok::Ge => Ok(Pred::Cmp(CmpOp::Ge, lhs, self.cexpr()?)),
            Tok::Ident(kw) if kw == "in" => Ok(Pred::In(lhs, self.cexpr()?, span)),
            other => Err(SlpError::Parse {
                span,
                msg: format!("expected a comparison or \"in\", found {other}"),
            }),
        }
    }

    fn cexpr(&mut self) -> Result<ConstExpr, SlpError> {
        let mut lhs = self.cterm()?;
        loop {
            let span = self.span();
            let op = match self.peek() {
                Tok::Plus => CBinOp::Add,
                Tok::Minus => CBinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.cterm()?;
            lhs = ConstExpr::Bin(op, Box::new(lhs), Box::new(rhs), span);
        }
    }

    fn cterm(&mut self) -> Result<ConstExpr, SlpError> {
        let mut lhs = self.cunary()?;
        loop {
            let span = self.span();
            let op = match self.peek() {
                Tok::Star => CBinOp::Mul,
                Tok::Slash => CBinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.cunary()?;
            lhs = ConstExpr::Bin(op, Box::new(lhs), Box::new(rhs), span);
        }
    }

    fn cunary(&mut self) -> Result<ConstExpr, SlpError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(ConstExpr::Neg(Box::new(self.cunary()?)));
        }
        self.cpower()
    }

    fn cpower(&mut self) -> Result<ConstExpr, SlpError> {
        let base = self.cpostfix()?;
        if *self.peek() == Tok::Caret {
            let span = self.span();
            self.bump();
            // Right-associative; the exponent may be negated.
            let exp = self.cunary()?;
            return Ok(ConstExpr::Bin(
                CBinOp::Pow,
                Box::new(base),
                Box::new(exp),
                span,
            ));
        }
        Ok(base)
    }

    fn cpostfix(&mut self) -> Result<ConstExpr, SlpError> {
        let mut e = self.cprimary()?;
        while *self.peek() == Tok::LBracket {
            let span = self.span();
            self.bump();
            let idx = self.cexpr()?;
            self.expect(Tok::RBracket)?;
            e = ConstExpr::Index(Box::new(e), Box::new(idx), span);
        }
        Ok(e)
    }

    fn cprimary(&mut self) -> Result<ConstExpr, SlpError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Num(_) => {
                let Tok::Num(r) = self.bump().0 else {
                    unreachable!()
                };
                Ok(ConstExpr::Lit(r))
            }
            Tok::Dollar(name) => {
                self.bump();
                Ok(ConstExpr::Ref(format!("${name}"), span))
            }
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "len" => Some(CFn::Len),
                    "max" => Some(CFn::Max),
                    "abs" => Some(CFn::Abs),
                    "indexof" => Some(CFn::IndexOf),
                    _ => None,
                };
                if let Some(func) = func {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let mut args = vec![self.cexpr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.cexpr()?);
                    }
                    self.expect(Tok::RParen)?;
                    return Ok(ConstExpr::Call(func, args, span));
                }
                if RESERVED.contains(&name.as_str()) {
                    return Err(self.error_here(format!("{name:?} is a reserved word")));
                }
                self.bump();
                Ok(ConstExpr::Ref(name, span))
            }
            Tok::LParen => {
                self.bump();
                let e = self.cexpr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket => {
                self.bump();
                if *self.peek() == Tok::RBracket {
                    self.bump();
                    return Ok(ConstExpr::List(Vec::new()));
                }
                let first = self.cexpr()?;
                if *self.peek() == Tok::DotDot {
                    self.bump();
                    let hi = self.cexpr()?;
                    self.expect(Tok::RBracket)?;
                    return Ok(ConstExpr::Range(Box::new(first), Box::new(hi)));
                }
                let mut items = vec![first];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    items.push(self.cexpr()?);
                }
                self.expect(Tok::RBracket)?;
                Ok(ConstExpr::List(items))
            }
            other => Err(self.error_here(format!("expected a constant expression, found {other}"))),
        }
    }
}

/// Parses DSL source text into a [`Program`].
pub fn parse_program(src: &str) -> Result<Program, SlpError> {
    let toks = Lexer::new(src).tokenize()?;
    let mut parser = Parser { toks, pos: 0 };
    parser.program()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_declarations_and_gates() {
        let p = parse_program(
            "# demo\ninputs a, b\noutputs x\nx <- a +b b\nx <- x -b 1/2\nx <- x *b 3/2\nx <- 0.25",
        )
        .unwrap();
        assert_eq!(p.inputs, vec!["a", "b"]);
        assert_eq!(p.outputs, vec!["x"]);
        assert_eq!(p.body.len(), 4);
        match &p.body[3].kind {
            StmtKind::Assign {
                rhs: GateRhs::Const(ConstExpr::Lit(r)),
                ..
            } => assert_eq!(*r, Rat::new(1, 4)),
            other => panic!("unexpected stmt {other:?}"),
        }
    }

    #[test]
    fn parses_macro_loop_and_if() {
        let p = parse_program(
            "macro Step(x, $S, $g) {
               xw <- x *b 1
               for i in 1..max($S) {
                 if i in $S { x <- x +b 2^-(i) } else { x <- x -b $g }
               }
             }
             inputs a
             Step(a, [1, 3], 1/4)",
        )
        .unwrap();
        assert_eq!(p.macros.len(), 1);
        assert_eq!(
            p.macros[0].params,
            vec![
                MacroParam::Var("x".into()),
                MacroParam::Const("$S".into()),
                MacroParam::Const("$g".into())
            ]
        );
        match &p.body[0].kind {
            StmtKind::Invoke { name, args } => {
                assert_eq!(name, "Step");
                assert_eq!(args.len(), 3);
                assert!(matches!(args[0], InvokeArg::Name(..)));
                assert!(matches!(args[1], InvokeArg::Expr(ConstExpr::List(_))));
            }
            other => panic!("unexpected stmt {other:?}"),
        }
    }

    #[test]
    fn range_and_decimal_do_not_collide() {
        let p = parse_program("inputs a\nfor i in 1..3 { a <- a +b 0.5 }").unwrap();
        match &p.body[0].kind {
            StmtKind::For { lo, hi, .. } => {
                assert_eq!(*lo, ConstExpr::Lit(Rat::int(1)));
                assert_eq!(*hi, ConstExpr::Lit(Rat::int(3)));
            }
            other => panic!("unexpected stmt {other:?}"),
        }
    }

    #[test]
    fn literal_first_operand() {
        let p = parse_program("inputs a\na <- 1 -b a").unwrap();
        match &p.body[0].kind {
            StmtKind::Assign {
                rhs: GateRhs::SubB(Operand::Lit(_), Operand::Var(..)),
                ..
            } => {}
            other => panic!("unexpected stmt {other:?}"),
        }
    }

    #[test]
    fn plain_copy_is_rejected_with_hint() {
        let err = parse_program("inputs a\nx <- a").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("*b 1"), "unhelpful message: {msg}");
    }

    #[test]
    fn reserved_words_are_rejected_as_names() {
        assert!(parse_program("inputs for").is_err());
        assert!(parse_program("max <- 1").is_err());
    }

    #[test]
    fn reports_positions() {
        let err = parse_program("inputs a\n  x <<- 1").unwrap_err();
        match err {
            SlpError::Parse { span, .. } => {
                assert_eq!(span.line, 2);
                assert!(span.col >= 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_declarations_rejected() {
        assert!(matches!(
            parse_program("inputs a\ninputs b"),
            Err(SlpError::DuplicateDecl { .. })
        ));
        assert!(matches!(
            parse_program("inputs a, a"),
            Err(SlpError::DuplicateDecl { .. })
        ));
        assert!(matches!(
            parse_program("macro M() { }\nmacro M() { }"),
            Err(SlpError::DuplicateMacro { .. })
        ));
    }
}

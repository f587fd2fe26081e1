//! Recursive-descent parser for `.ssir` text.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use super::lexer::{tokenize, Tok, Token};
use super::{
    visit, BaseType, BinOp, Binder, Block, ChoiceArm, ChoiceDef, ChoicePolarity, Expr, Loc, Param,
    ProcDef, Program, SessionType, Stmt, StmtKind, SwitchArm, TypeDef, TypeItem, UnOp, ENTRY_PROC,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Unresolved,
    NoEntry,
}

#[derive(Clone, Debug, Error)]
#[error("{loc}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub loc: Loc,
}

impl ParseError {
    fn syntax(message: impl Into<String>, loc: Loc) -> Self {
        ParseError {
            kind: ParseErrorKind::Syntax,
            message: message.into(),
            loc,
        }
    }

    fn unresolved(message: impl Into<String>, loc: Loc) -> Self {
        ParseError {
            kind: ParseErrorKind::Unresolved,
            message: message.into(),
            loc,
        }
    }
}

type PResult<T> = Result<T, ParseError>;

/// Parse and name-resolve a program.
///
/// Choice polarity is inferred from the first `?choice` / `!choice`
/// reference; conflicting references are left for the type checker to report.
pub fn parse(text: &str) -> PResult<Program> {
    let tokens = tokenize(text).map_err(|(m, loc)| ParseError::syntax(m, loc))?;
    let mut p = Parser { tokens, pos: 0 };
    let mut prog = p.program()?;
    resolve(&mut prog)?;
    Ok(prog)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

const STMT_KEYWORDS: &[&str] = &[
    "switch",
    "if",
    "while",
    "close",
    "wait",
    "async_wait",
    "send",
    "sync",
    "nop",
    "shift",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn loc(&self) -> Loc {
        self.tokens[self.pos].loc
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        Err(ParseError::syntax(
            format!("expected {expected}, found {}", self.peek().describe()),
            self.loc(),
        ))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.advance();
            Ok(())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.error(what),
        }
    }

    fn chan(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Chan(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.error("a channel `$name`"),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program {
            choices: Vec::new(),
            typedefs: Vec::new(),
            procs: Vec::new(),
            entry: ENTRY_PROC.to_string(),
        };
        while *self.peek() != Tok::Eof {
            if self.is_kw("choice") {
                prog.choices.push(self.choice()?);
            } else if self.is_kw("typedef") {
                prog.typedefs.push(self.typedef()?);
            } else {
                prog.procs.push(self.proc_def()?);
            }
        }
        Ok(prog)
    }

    fn choice(&mut self) -> PResult<ChoiceDef> {
        let loc = self.loc();
        self.expect_kw("choice")?;
        let name = self.ident("a choice name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut arms = Vec::new();
        while *self.peek() != Tok::RBrace {
            let ty = self.session_type()?;
            let label = self.ident("a label")?;
            self.expect(Tok::Semi, "`;`")?;
            arms.push(ChoiceArm { label, ty });
        }
        self.expect(Tok::RBrace, "`}`")?;
        self.expect(Tok::Semi, "`;`")?;
        if arms.is_empty() {
            return Err(ParseError::syntax(
                format!("choice `{name}` has no arms"),
                loc,
            ));
        }
        Ok(ChoiceDef {
            name,
            polarity: ChoicePolarity::External,
            arms,
            loc,
        })
    }

    fn typedef(&mut self) -> PResult<TypeDef> {
        let loc = self.loc();
        self.expect_kw("typedef")?;
        let ty = self.session_type()?;
        let name = self.ident("a type name")?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(TypeDef { name, ty, loc })
    }

    fn session_type(&mut self) -> PResult<SessionType> {
        self.expect(Tok::Lt, "`<`")?;
        let mut items = Vec::new();
        if *self.peek() != Tok::Gt {
            loop {
                let loc = self.loc();
                let item = self.type_item()?;
                if let Some(prev) = items.last() {
                    if TypeItem::is_terminal(prev) {
                        return Err(ParseError::syntax(
                            "`end` and choices may only appear last in a session type",
                            loc,
                        ));
                    }
                }
                items.push(item);
                if *self.peek() == Tok::Semi {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Gt, "`>`")?;
        Ok(SessionType::new(items))
    }

    fn type_item(&mut self) -> PResult<TypeItem> {
        if self.is_kw("end") {
            self.advance();
            return Ok(TypeItem::End);
        }
        let recv = match self.peek() {
            Tok::Question => true,
            Tok::Bang => false,
            _ => return self.error("`?`, `!` or `end`"),
        };
        self.advance();
        if self.is_kw("choice") {
            self.advance();
            let name = self.ident("a choice name")?;
            return Ok(if recv {
                TypeItem::RecvChoice(name)
            } else {
                TypeItem::SendChoice(name)
            });
        }
        let ty = self.base_type()?;
        Ok(if recv {
            TypeItem::RecvVal(ty)
        } else {
            TypeItem::SendVal(ty)
        })
    }

    fn base_type(&mut self) -> PResult<BaseType> {
        let name = self.ident("a type")?;
        Ok(match name.as_str() {
            "int" => BaseType::Int,
            "bool" => BaseType::Bool,
            _ => BaseType::Chan(name),
        })
    }

    fn proc_def(&mut self) -> PResult<ProcDef> {
        let loc = self.loc();
        let offered_ty = self.ident("`choice`, `typedef` or a process definition")?;
        let offered = self.chan()?;
        let name = self.ident("a process name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let ty = self.base_type()?;
                let param = match (self.peek().clone(), ty) {
                    (Tok::Chan(n), BaseType::Chan(t)) => {
                        self.advance();
                        Param::Chan { ty: t, name: n }
                    }
                    (Tok::Ident(n), ty @ (BaseType::Int | BaseType::Bool)) => {
                        self.advance();
                        Param::Val { ty, name: n }
                    }
                    _ => return self.error("a parameter name (`x` for values, `$c` for channels)"),
                };
                params.push(param);
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        let body = self.block()?;
        Ok(ProcDef {
            name,
            offered,
            offered_ty,
            params,
            body,
            loc,
        })
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            stmts.push(self.stmt()?);
        }
        self.advance();
        Ok(Arc::from(stmts))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let kind = match self.peek().clone() {
            Tok::Ident(kw) if STMT_KEYWORDS.contains(&kw.as_str()) => self.keyword_stmt(&kw)?,
            Tok::Chan(c) => {
                self.advance();
                self.chan_stmt(c, None)?
            }
            Tok::Ident(first) => {
                // `T $c = ...`, `int x = ...`, or `x = ...`
                match self.peek_at(1).clone() {
                    Tok::Chan(c) => {
                        self.advance();
                        self.advance();
                        self.chan_stmt(c, Some(BaseType::Chan(first)))?
                    }
                    Tok::Ident(_) => {
                        let ty = self.base_type()?;
                        let var = self.ident("a variable name")?;
                        self.var_stmt(var, Some(ty))?
                    }
                    _ => {
                        self.advance();
                        self.var_stmt(first, None)?
                    }
                }
            }
            _ => return self.error("a statement"),
        };
        Ok(Stmt::at(kind, loc))
    }

    fn call_chan(&mut self) -> PResult<String> {
        self.expect(Tok::LParen, "`(`")?;
        let c = self.chan()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(c)
    }

    fn keyword_stmt(&mut self, kw: &str) -> PResult<StmtKind> {
        self.advance();
        let kind = match kw {
            "switch" => {
                let chan = self.call_chan()?;
                self.expect(Tok::LBrace, "`{`")?;
                let mut arms = Vec::new();
                while self.is_kw("case") {
                    let loc = self.loc();
                    self.advance();
                    let label = self.ident("a label")?;
                    self.expect(Tok::Colon, "`:`")?;
                    let mut body = Vec::new();
                    while !self.is_kw("case") && *self.peek() != Tok::RBrace {
                        body.push(self.stmt()?);
                    }
                    arms.push(SwitchArm {
                        label,
                        body: Arc::from(body),
                        loc,
                    });
                }
                self.expect(Tok::RBrace, "`case` or `}`")?;
                return Ok(StmtKind::Switch { chan, arms });
            }
            "if" => {
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let then_body = self.block()?;
                let else_body = if self.is_kw("else") {
                    self.advance();
                    if self.is_kw("if") {
                        let s = self.stmt()?;
                        Arc::from(vec![s])
                    } else {
                        self.block()?
                    }
                } else {
                    Arc::from(Vec::new())
                };
                return Ok(StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                });
            }
            "while" => {
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                return Ok(StmtKind::While { cond, body });
            }
            "close" => StmtKind::Close(self.call_chan()?),
            "wait" => StmtKind::Wait(self.call_chan()?),
            "async_wait" => StmtKind::AsyncWait(self.call_chan()?),
            "nop" => StmtKind::Nop,
            "send" => {
                self.expect(Tok::LParen, "`(`")?;
                let chan = self.chan()?;
                self.expect(Tok::Comma, "`,`")?;
                let kind = if self.is_kw("shift") && *self.peek_at(1) == Tok::RParen {
                    self.advance();
                    StmtKind::SendShift(chan)
                } else {
                    StmtKind::SendVal {
                        chan,
                        expr: self.expr()?,
                    }
                };
                self.expect(Tok::RParen, "`)`")?;
                kind
            }
            "sync" => {
                self.expect(Tok::LParen, "`(`")?;
                let chan = self.chan()?;
                self.expect(Tok::Comma, "`,`")?;
                let kind = match self.advance() {
                    Tok::Ident(s) if s == "shift" => StmtKind::SyncShift(chan),
                    Tok::Ident(s) if s == "end" => StmtKind::SyncEnd(chan),
                    Tok::Ident(s) => StmtKind::SyncVar {
                        chan,
                        binder: Binder::Var(s),
                    },
                    Tok::Chan(s) => StmtKind::SyncVar {
                        chan,
                        binder: Binder::Chan(s),
                    },
                    _ => {
                        self.pos -= 1;
                        return self.error("`shift`, `end` or a variable");
                    }
                };
                self.expect(Tok::RParen, "`)`")?;
                kind
            }
            "shift" => {
                self.expect(Tok::Assign, "`=`")?;
                let fun = self.ident("`recv` or `async_recv`")?;
                let chan = self.call_chan()?;
                match fun.as_str() {
                    "recv" => StmtKind::RecvShift(chan),
                    "async_recv" => StmtKind::AsyncRecvShift(chan),
                    _ => {
                        self.pos -= 1;
                        return self.error("`recv` or `async_recv`");
                    }
                }
            }
            _ => unreachable!("keyword list out of sync"),
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(kind)
    }

    /// Statements starting with a channel: label send, forward, spawn, or a
    /// channel-valued receive.
    fn chan_stmt(&mut self, chan: String, decl: Option<BaseType>) -> PResult<StmtKind> {
        let kind = match self.peek().clone() {
            Tok::Dot if decl.is_none() => {
                self.advance();
                let label = self.ident("a label")?;
                StmtKind::SendLabel { chan, label }
            }
            Tok::Assign => {
                self.advance();
                match self.peek().clone() {
                    Tok::Chan(client) if decl.is_none() => {
                        self.advance();
                        StmtKind::Forward {
                            offered: chan,
                            client,
                        }
                    }
                    Tok::Ident(f) if f == "recv" || f == "async_recv" => {
                        self.advance();
                        let src = self.call_chan()?;
                        let binder = Binder::Chan(chan);
                        if f == "recv" {
                            StmtKind::RecvVal {
                                binder,
                                decl,
                                chan: src,
                            }
                        } else {
                            StmtKind::AsyncRecvVal {
                                binder,
                                decl,
                                chan: src,
                            }
                        }
                    }
                    Tok::Ident(f) if f == "spawn" => {
                        self.advance();
                        self.expect(Tok::LParen, "`(`")?;
                        let proc = self.ident("a process name")?;
                        let args = if *self.peek() == Tok::LParen {
                            self.args()?
                        } else {
                            Vec::new()
                        };
                        self.expect(Tok::RParen, "`)`")?;
                        StmtKind::Spawn {
                            chan,
                            decl,
                            proc,
                            args,
                        }
                    }
                    Tok::Ident(proc) => {
                        self.advance();
                        let args = self.args()?;
                        StmtKind::Spawn {
                            chan,
                            decl,
                            proc,
                            args,
                        }
                    }
                    _ => return self.error("a channel, `recv(...)` or a process call"),
                }
            }
            _ => return self.error("`.` or `=`"),
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(kind)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(args)
    }

    fn var_stmt(&mut self, var: String, decl: Option<BaseType>) -> PResult<StmtKind> {
        self.expect(Tok::Assign, "`=`")?;
        let recv_kind = match (self.peek(), self.peek_at(1)) {
            (Tok::Ident(f), Tok::LParen) if f == "recv" || f == "async_recv" => Some(f == "recv"),
            _ => None,
        };
        let kind = match recv_kind {
            Some(blocking) => {
                self.advance();
                let chan = self.call_chan()?;
                let binder = Binder::Var(var);
                if blocking {
                    StmtKind::RecvVal { binder, decl, chan }
                } else {
                    StmtKind::AsyncRecvVal { binder, decl, chan }
                }
            }
            None => StmtKind::Assign {
                var,
                decl,
                expr: self.expr()?,
            },
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(kind)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Mod,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Tok::Minus => {
                self.advance();
                // `-5` is a literal; `-(5)` and `-x` are negations
                if let Tok::Int(n) = *self.peek() {
                    self.advance();
                    return Ok(Expr::Int(n.wrapping_neg()));
                }
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            Tok::Bang => {
                self.advance();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(Expr::Int(n))
            }
            Tok::Chan(c) => {
                self.advance();
                Ok(Expr::Chan(c))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(s) => {
                self.advance();
                Ok(Expr::Var(s))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.error("an expression"),
        }
    }
}

fn resolve(prog: &mut Program) -> PResult<()> {
    let mut seen = BTreeSet::new();
    for c in &prog.choices {
        if !seen.insert(("choice", c.name.clone())) {
            return Err(ParseError::unresolved(
                format!("duplicate choice `{}`", c.name),
                c.loc,
            ));
        }
        let mut labels = BTreeSet::new();
        for a in &c.arms {
            if !labels.insert(a.label.as_str()) {
                return Err(ParseError::unresolved(
                    format!("duplicate label `{}` in choice `{}`", a.label, c.name),
                    c.loc,
                ));
            }
        }
    }
    for t in &prog.typedefs {
        if !seen.insert(("typedef", t.name.clone())) {
            return Err(ParseError::unresolved(
                format!("duplicate typedef `{}`", t.name),
                t.loc,
            ));
        }
    }
    for p in &prog.procs {
        if !seen.insert(("proc", p.name.clone())) {
            return Err(ParseError::unresolved(
                format!("duplicate process `{}`", p.name),
                p.loc,
            ));
        }
    }

    let choice_names: BTreeSet<String> = prog.choices.iter().map(|c| c.name.clone()).collect();
    let type_names: BTreeSet<String> = prog.typedefs.iter().map(|t| t.name.clone()).collect();
    let proc_names: BTreeSet<String> = prog.procs.iter().map(|p| p.name.clone()).collect();

    let check_base = |ty: &BaseType, loc: Loc| -> PResult<()> {
        match ty {
            BaseType::Chan(n) if !type_names.contains(n) => Err(ParseError::unresolved(
                format!("unknown session type `{n}`"),
                loc,
            )),
            _ => Ok(()),
        }
    };

    // choice polarity from first use
    let mut polarity: Vec<(String, ChoicePolarity)> = Vec::new();
    let mut sessions: Vec<(&SessionType, Loc)> = Vec::new();
    for c in &prog.choices {
        for a in &c.arms {
            sessions.push((&a.ty, c.loc));
        }
    }
    for t in &prog.typedefs {
        sessions.push((&t.ty, t.loc));
    }
    for (ty, loc) in sessions {
        for item in &ty.items {
            match item {
                TypeItem::RecvVal(b) | TypeItem::SendVal(b) => check_base(b, loc)?,
                TypeItem::RecvChoice(n) | TypeItem::SendChoice(n) => {
                    if !choice_names.contains(n) {
                        return Err(ParseError::unresolved(format!("unknown choice `{n}`"), loc));
                    }
                    let pol = if matches!(item, TypeItem::RecvChoice(_)) {
                        ChoicePolarity::External
                    } else {
                        ChoicePolarity::Internal
                    };
                    if !polarity.iter().any(|(c, _)| c == n) {
                        polarity.push((n.clone(), pol));
                    }
                }
                TypeItem::End => {}
            }
        }
    }
    for c in prog.choices.iter_mut() {
        if let Some((_, pol)) = polarity.iter().find(|(n, _)| *n == c.name) {
            c.polarity = *pol;
        }
    }

    for p in &prog.procs {
        check_base(&BaseType::Chan(p.offered_ty.clone()), p.loc)?;
        let mut names = BTreeSet::new();
        names.insert(format!("${}", p.offered));
        for param in &p.params {
            let (key, ty) = match param {
                Param::Val { ty, name } => (name.clone(), ty.clone()),
                Param::Chan { ty, name } => (format!("${name}"), BaseType::Chan(ty.clone())),
            };
            check_base(&ty, p.loc)?;
            if !names.insert(key.clone()) {
                return Err(ParseError::unresolved(
                    format!("parameter `{key}` of `{}` is declared twice", p.name),
                    p.loc,
                ));
            }
        }
        for s in visit::stmts(&p.body) {
            match &s.kind {
                StmtKind::Spawn { proc, decl, .. } => {
                    if !proc_names.contains(proc) {
                        return Err(ParseError::unresolved(
                            format!("unknown process `{proc}`"),
                            s.loc,
                        ));
                    }
                    if let Some(d) = decl {
                        check_base(d, s.loc)?;
                    }
                }
                StmtKind::RecvVal { decl: Some(d), .. }
                | StmtKind::AsyncRecvVal { decl: Some(d), .. }
                | StmtKind::Assign { decl: Some(d), .. } => check_base(d, s.loc)?,
                _ => {}
            }
        }
    }

    if prog.entry_proc().is_none() {
        return Err(ParseError {
            kind: ParseErrorKind::NoEntry,
            message: format!(
                "no entry process (expected a process named `{}`)",
                prog.entry
            ),
            loc: Loc::default(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUEUE_TYPES: &str = r#"
        choice queue {
          <?int; ?choice queue>  Enq;
          <!choice queue_elem>   Deq;
          <!bool; ?choice queue> IsEmpty;
          < >                    Dealloc;
        };
        choice queue_elem {
          <?choice queue>       None;
          <!int; ?choice queue> Some;
        };
        typedef <?choice queue> queue;
        typedef < > unit;
        unit $c main() { close($c); }
    "#;

    #[test]
    fn parses_queue_protocol() {
        let p = parse(QUEUE_TYPES).unwrap();
        let q = p.choice("queue").unwrap();
        let labels: Vec<_> = q.arms.iter().map(|a| a.label.as_str()).collect();
        assert_eq!(labels, ["Enq", "Deq", "IsEmpty", "Dealloc"]);
        assert_eq!(q.polarity, ChoicePolarity::External);
        assert_eq!(
            p.choice("queue_elem").unwrap().polarity,
            ChoicePolarity::Internal
        );
        assert_eq!(
            q.arm("Enq").unwrap().items,
            vec![
                TypeItem::RecvVal(BaseType::Int),
                TypeItem::RecvChoice("queue".into())
            ]
        );
        assert_eq!(q.arm("Dealloc").unwrap().items, vec![TypeItem::End]);
    }

    #[test]
    fn empty_input_has_no_entry() {
        let err = parse("").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NoEntry);
        assert!(err.message.contains("no entry process"));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse("typedef < > unit;\nunit $c main() {\n  close($c)\n}").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!((err.loc.line, err.loc.col), (4, 1));
    }

    #[test]
    fn unresolved_names() {
        let err = parse("typedef <?choice nope> t; t $c main() { close($c); }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Unresolved);
        let err = parse("typedef < > unit; unit $c main() { unit $d = ghost(); close($c); }")
            .unwrap_err();
        assert!(err.message.contains("ghost"));
    }

    #[test]
    fn spawn_spellings_are_one_construct() {
        let a =
            parse("typedef < > unit; unit $c main() { $d = spawn(main); wait($d); close($c); }")
                .unwrap();
        let b = parse("typedef < > unit; unit $c main() { $d = main(); wait($d); close($c); }")
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn terminal_item_must_be_last() {
        let err = parse("typedef <?choice q; !int> t; unit $c main() { close($c); }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn expression_precedence() {
        let p =
            parse("typedef < > unit; unit $c main() { x = 1 + 2 * 3 - -4; close($c); }").unwrap();
        let StmtKind::Assign { expr, .. } = &p.procs[0].body[0].kind else {
            panic!()
        };
        assert_eq!(
            *expr,
            Expr::binary(
                BinOp::Sub,
                Expr::binary(
                    BinOp::Add,
                    Expr::Int(1),
                    Expr::binary(BinOp::Mul, Expr::Int(2), Expr::Int(3))
                ),
                Expr::Int(-4)
            )
        );
    }
}

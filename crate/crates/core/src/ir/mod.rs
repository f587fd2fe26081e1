//! Abstract syntax of the session-typed intermediate language.
//!
//! The IR covers both the blocking statement forms (`recv`, `wait`, ...) and
//! the non-blocking ones introduced by the translation pass (`async_recv`,
//! `async_wait`, `sync`). Concrete syntax lives in [`parser`] and [`printer`];
//! the grammar is documented in `docs/grammar.md`.

mod lexer;
pub mod parser;
pub mod printer;
pub mod visit;

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub use parser::{parse, ParseError, ParseErrorKind};
pub use printer::print;

/// Source location of a syntax node.
///
/// Locations never take part in structural equality or hashing, so a program
/// compares equal to its pretty-printed and re-parsed self.
#[derive(Clone, Copy, Debug, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Loc {}

impl Hash for Loc {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Type of a value carried by a message or held in a variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BaseType {
    Int,
    Bool,
    /// A channel whose session is the named typedef.
    Chan(String),
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseType::Int => f.write_str("int"),
            BaseType::Bool => f.write_str("bool"),
            BaseType::Chan(name) => f.write_str(name),
        }
    }
}

/// One step of a session protocol, read from the provider's point of view.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeItem {
    RecvVal(BaseType),
    SendVal(BaseType),
    RecvChoice(String),
    SendChoice(String),
    End,
}

impl TypeItem {
    /// `End` and the two choice items close an item list.
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            TypeItem::End | TypeItem::RecvChoice(_) | TypeItem::SendChoice(_)
        )
    }
}

/// An item list such as `<?int; ?choice queue>`.
///
/// Lists are normalized on construction so that the last item is terminal:
/// a list without a terminal item is closed by an implicit `End`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SessionType {
    pub items: Vec<TypeItem>,
}

impl SessionType {
    pub fn new(mut items: Vec<TypeItem>) -> Self {
        if !items.last().is_some_and(TypeItem::is_terminal) {
            items.push(TypeItem::End);
        }
        SessionType { items }
    }

    pub fn end() -> Self {
        SessionType {
            items: vec![TypeItem::End],
        }
    }
}

/// Which side picks the label of a choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChoicePolarity {
    /// The provider receives the label (`?choice`).
    External,
    /// The provider sends the label (`!choice`).
    Internal,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChoiceArm {
    pub label: String,
    pub ty: SessionType,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChoiceDef {
    pub name: String,
    /// Inferred from how the choice is referenced; see [`parser::parse`].
    pub polarity: ChoicePolarity,
    pub arms: Vec<ChoiceArm>,
    pub loc: Loc,
}

impl ChoiceDef {
    pub fn arm(&self, label: &str) -> Option<&SessionType> {
        self.arms.iter().find(|a| a.label == label).map(|a| &a.ty)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TypeDef {
    pub name: String,
    pub ty: SessionType,
    pub loc: Loc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    /// A channel reference; only meaningful as a whole `send` payload or
    /// spawn argument.
    Chan(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Free value variables, in first-occurrence order.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut out, &mut Vec::new());
        out
    }

    /// Channel references, in first-occurrence order.
    pub fn chans(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut Vec::new(), &mut out);
        out
    }

    fn collect<'a>(&'a self, vars: &mut Vec<&'a str>, chans: &mut Vec<&'a str>) {
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Var(v) => {
                if !vars.contains(&v.as_str()) {
                    vars.push(v);
                }
            }
            Expr::Chan(c) => {
                if !chans.contains(&c.as_str()) {
                    chans.push(c);
                }
            }
            Expr::Unary(_, e) => e.collect(vars, chans),
            Expr::Binary(_, l, r) => {
                l.collect(vars, chans);
                r.collect(vars, chans);
            }
        }
    }
}

/// Left-hand side of a receive: either a value variable or a channel.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Binder {
    Var(String),
    Chan(String),
}

impl Binder {
    pub fn name(&self) -> &str {
        match self {
            Binder::Var(n) | Binder::Chan(n) => n,
        }
    }
}

impl fmt::Display for Binder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binder::Var(n) => f.write_str(n),
            Binder::Chan(n) => write!(f, "${n}"),
        }
    }
}

/// A pending receive request, as tracked by the non-blocking semantics and
/// the translator's request table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Request {
    Var(Binder),
    Shift,
    End,
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Request::Var(b) => write!(f, "{b}"),
            Request::Shift => f.write_str("shift"),
            Request::End => f.write_str("end"),
        }
    }
}

pub type Block = Arc<[Stmt]>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SwitchArm {
    pub label: String,
    pub body: Block,
    pub loc: Loc,
}

/// Statement forms. Channel names are stored without the `$` sigil.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
    /// `$c = P(args);` When `chan` is the offered channel this is a tail
    /// call: spawn followed by a forward.
    Spawn {
        chan: String,
        decl: Option<BaseType>,
        proc: String,
        args: Vec<Expr>,
    },
    /// `$offered = $client;`
    Forward {
        offered: String,
        client: String,
    },
    Close(String),
    Wait(String),
    SendVal {
        chan: String,
        expr: Expr,
    },
    RecvVal {
        binder: Binder,
        decl: Option<BaseType>,
        chan: String,
    },
    SendShift(String),
    RecvShift(String),
    SendLabel {
        chan: String,
        label: String,
    },
    Switch {
        chan: String,
        arms: Vec<SwitchArm>,
    },
    Assign {
        var: String,
        decl: Option<BaseType>,
        expr: Expr,
    },
    If {
        cond: Expr,
        then_body: Block,
        else_body: Block,
    },
    While {
        cond: Expr,
        body: Block,
    },
    AsyncRecvVal {
        binder: Binder,
        decl: Option<BaseType>,
        chan: String,
    },
    AsyncRecvShift(String),
    AsyncWait(String),
    SyncVar {
        chan: String,
        binder: Binder,
    },
    SyncShift(String),
    SyncEnd(String),
    Nop,
}

impl StmtKind {
    /// True for the constructs that only exist in non-blocking programs.
    pub fn is_nonblocking(&self) -> bool {
        matches!(
            self,
            StmtKind::AsyncRecvVal { .. }
                | StmtKind::AsyncRecvShift(_)
                | StmtKind::AsyncWait(_)
                | StmtKind::SyncVar { .. }
                | StmtKind::SyncShift(_)
                | StmtKind::SyncEnd(_)
        )
    }

    /// True for statements that exchange messages or manage channels.
    pub fn is_communication(&self) -> bool {
        !matches!(
            self,
            StmtKind::Assign { .. } | StmtKind::If { .. } | StmtKind::While { .. } | StmtKind::Nop
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt {
            kind,
            loc: Loc::default(),
        }
    }

    pub fn at(kind: StmtKind, loc: Loc) -> Self {
        Stmt { kind, loc }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Param {
    Val { ty: BaseType, name: String },
    Chan { ty: String, name: String },
}

impl Param {
    pub fn name(&self) -> &str {
        match self {
            Param::Val { name, .. } | Param::Chan { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProcDef {
    pub name: String,
    /// Name of the offered channel (without `$`).
    pub offered: String,
    /// Typedef naming the offered session.
    pub offered_ty: String,
    pub params: Vec<Param>,
    pub body: Block,
    pub loc: Loc,
}

pub const ENTRY_PROC: &str = "main";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub choices: Vec<ChoiceDef>,
    pub typedefs: Vec<TypeDef>,
    pub procs: Vec<ProcDef>,
    pub entry: String,
}

impl Program {
    pub fn choice(&self, name: &str) -> Option<&ChoiceDef> {
        self.choices.iter().find(|c| c.name == name)
    }

    pub fn typedef(&self, name: &str) -> Option<&TypeDef> {
        self.typedefs.iter().find(|t| t.name == name)
    }

    pub fn proc(&self, name: &str) -> Option<&ProcDef> {
        self.procs.iter().find(|p| p.name == name)
    }

    pub fn entry_proc(&self) -> Option<&ProcDef> {
        self.proc(&self.entry)
    }

    /// True when no process body contains a non-blocking construct.
    pub fn is_blocking_form(&self) -> bool {
        self.procs
            .iter()
            .all(|p| visit::stmts(&p.body).all(|s| !s.kind.is_nonblocking()))
    }
}

//! Linear session type checker.
//!
//! Walks every process body path by path, tracking for each live channel its
//! position in the session protocol, the current polarity, which side this
//! process holds, and (for non-blocking programs) the ordered list of pending
//! receive requests. Branches are checked independently and must agree on
//! channel state where they rejoin.

mod diag;
mod polarity;

use std::collections::{BTreeMap, BTreeSet};

pub use diag::{Code, Diagnostic};
pub use polarity::{
    initial_polarity, item_polarity, polarity_at, shift_boundaries, Polarity, PositionOutOfRange,
};

use crate::ir::{
    BaseType, BinOp, Binder, Block, Expr, Loc, Param, ProcDef, Program, Request, Stmt, StmtKind,
    TypeItem, UnOp,
};

/// Check a whole program. An empty result means it is well-typed.
pub fn check_program(prog: &Program) -> Vec<Diagnostic> {
    let mut diags = check_choice_usage(prog);
    if let Some(main) = prog.entry_proc() {
        if main.params.iter().any(|p| matches!(p, Param::Chan { .. })) {
            diags.push(Diagnostic::new(
                Code::E001,
                main.loc,
                format!(
                    "entry process `{}` must not take channel arguments",
                    main.name
                ),
            ));
        }
    }
    for p in &prog.procs {
        let mut ck = Checker {
            prog,
            proc: p,
            diags: Vec::new(),
        };
        ck.check_proc();
        for mut d in ck.diags {
            d.proc = Some(p.name.clone());
            diags.push(d);
        }
    }
    diags
}

fn check_choice_usage(prog: &Program) -> Vec<Diagnostic> {
    let mut uses: BTreeMap<&str, BTreeSet<bool>> = BTreeMap::new();
    let all = prog
        .choices
        .iter()
        .flat_map(|c| c.arms.iter().map(|a| &a.ty))
        .chain(prog.typedefs.iter().map(|t| &t.ty));
    for ty in all {
        for item in &ty.items {
            match item {
                TypeItem::RecvChoice(c) => {
                    uses.entry(c).or_default().insert(true);
                }
                TypeItem::SendChoice(c) => {
                    uses.entry(c).or_default().insert(false);
                }
                _ => {}
            }
        }
    }
    prog.choices
        .iter()
        .filter(|c| uses.get(c.name.as_str()).is_some_and(|s| s.len() > 1))
        .map(|c| {
            Diagnostic::new(
                Code::E005,
                c.loc,
                format!(
                    "choice `{}` is used both as external (`?`) and internal (`!`) choice",
                    c.name
                ),
            )
        })
        .collect()
}

/// Position inside a session protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Pos {
    Typedef(String, usize),
    Arm(String, String, usize),
    /// The session's `end` has been consumed.
    Done,
}

/// Canonical form of a position: positions sitting on a terminal item are
/// identified by that item, so `?choice queue` reached through different
/// arms compares equal.
#[derive(Clone, Debug, PartialEq, Eq)]
enum PosKey {
    Mid(Pos),
    Choice(bool, String),
    End,
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Provider,
    Client,
}

#[derive(Clone, Debug)]
struct ChanState {
    pos: Pos,
    polarity: Polarity,
    side: Side,
    pending: Vec<Request>,
}

#[derive(Clone, Debug)]
struct VarState {
    ty: BaseType,
    assigned: bool,
}

#[derive(Clone, Debug, Default)]
struct Env {
    vars: BTreeMap<String, VarState>,
    /// Binders of issued but unsynchronized requests, with their types.
    pending_binders: BTreeMap<Binder, BaseType>,
    chans: BTreeMap<String, ChanState>,
}

enum Flow {
    Continue(Env),
    Stop,
}

type CResult<T> = Result<T, Diagnostic>;

fn err<T>(code: Code, loc: Loc, msg: impl Into<String>) -> CResult<T> {
    Err(Diagnostic::new(code, loc, msg))
}

struct Checker<'a> {
    prog: &'a Program,
    proc: &'a ProcDef,
    diags: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn item(&self, pos: &Pos) -> Option<&'a TypeItem> {
        match pos {
            Pos::Typedef(t, i) => self.prog.typedef(t)?.ty.items.get(*i),
            Pos::Arm(c, l, i) => self.prog.choice(c)?.arm(l)?.items.get(*i),
            Pos::Done => None,
        }
    }

    fn key(&self, pos: &Pos) -> PosKey {
        match self.item(pos) {
            Some(TypeItem::RecvChoice(c)) => PosKey::Choice(true, c.clone()),
            Some(TypeItem::SendChoice(c)) => PosKey::Choice(false, c.clone()),
            Some(TypeItem::End) => PosKey::End,
            Some(_) => PosKey::Mid(pos.clone()),
            None => PosKey::Done,
        }
    }

    fn same_state(&self, a: &ChanState, b: &ChanState) -> bool {
        self.key(&a.pos) == self.key(&b.pos)
            && a.polarity == b.polarity
            && a.side == b.side
            && a.pending == b.pending
    }

    fn start(&self, ty: &str, side: Side) -> ChanState {
        let polarity = self
            .prog
            .typedef(ty)
            .map(|t| initial_polarity(&t.ty))
            .unwrap_or(Polarity::Positive);
        ChanState {
            pos: Pos::Typedef(ty.to_string(), 0),
            polarity,
            side,
            pending: Vec::new(),
        }
    }

    fn describe(&self, pos: &Pos) -> String {
        match self.item(pos) {
            Some(TypeItem::RecvVal(t)) => format!("`?{t}`"),
            Some(TypeItem::SendVal(t)) => format!("`!{t}`"),
            Some(TypeItem::RecvChoice(c)) => format!("`?choice {c}`"),
            Some(TypeItem::SendChoice(c)) => format!("`!choice {c}`"),
            Some(TypeItem::End) => "`end`".to_string(),
            None => "nothing (session ended)".to_string(),
        }
    }

    fn check_proc(&mut self) {
        let p = self.proc;
        let mut env = Env::default();
        env.chans
            .insert(p.offered.clone(), self.start(&p.offered_ty, Side::Provider));
        for param in &p.params {
            match param {
                Param::Val { ty, name } => {
                    env.vars.insert(
                        name.clone(),
                        VarState {
                            ty: ty.clone(),
                            assigned: true,
                        },
                    );
                }
                Param::Chan { ty, name } => {
                    env.chans.insert(name.clone(), self.start(ty, Side::Client));
                }
            }
        }
        if let Flow::Continue(_) = self.block(env, &p.body) {
            let loc = p.body.last().map(|s| s.loc).unwrap_or(p.loc);
            self.diags.push(Diagnostic::new(
                Code::E002,
                loc,
                format!(
                    "process `{}` can finish without closing or forwarding `${}`",
                    p.name, p.offered
                ),
            ));
        }
    }

    fn block(&mut self, env: Env, stmts: &Block) -> Flow {
        let mut flow = Flow::Continue(env);
        for s in stmts.iter() {
            let env = match flow {
                Flow::Continue(env) => env,
                Flow::Stop => {
                    self.diags.push(Diagnostic::new(
                        Code::E002,
                        s.loc,
                        "unreachable statement after the session was closed or forwarded",
                    ));
                    return Flow::Stop;
                }
            };
            flow = match self.stmt(env, s) {
                Ok(f) => f,
                Err(d) => {
                    self.diags.push(d);
                    return Flow::Stop;
                }
            };
        }
        flow
    }

    fn chan<'e>(&self, env: &'e mut Env, c: &str, loc: Loc) -> CResult<&'e mut ChanState> {
        if env
            .pending_binders
            .contains_key(&Binder::Chan(c.to_string()))
        {
            return err(
                Code::E004,
                loc,
                format!("channel `${c}` is used before its receive request is synchronized"),
            );
        }
        match env.chans.get_mut(c) {
            Some(cs) => Ok(cs),
            None => err(
                Code::E001,
                loc,
                format!("channel `${c}` is not available (unknown or already consumed)"),
            ),
        }
    }

    fn no_pending(cs: &ChanState, c: &str, loc: Loc) -> CResult<()> {
        if cs.pending.is_empty() {
            Ok(())
        } else {
            err(
                Code::E004,
                loc,
                format!(
                    "`${c}` has unsynchronized requests ({}); sync before using the channel",
                    list_requests(&cs.pending)
                ),
            )
        }
    }

    /// Consume the next protocol item of `c` for an action in which the holder
    /// sends (`holder_sends`) or receives.
    fn protocol_item(
        &self,
        cs: &ChanState,
        c: &str,
        holder_sends: bool,
        what: &str,
        loc: Loc,
    ) -> CResult<&'a TypeItem> {
        let Some(item) = self.item(&cs.pos) else {
            return err(
                Code::E002,
                loc,
                format!("{what} on `${c}`, but its session has ended"),
            );
        };
        let provider_sends = (cs.side == Side::Provider) == holder_sends;
        if provider_sends != (item_polarity(item) == Polarity::Positive) {
            return err(
                Code::E002,
                loc,
                format!(
                    "protocol mismatch: {what} on `${c}`, but the session expects {}",
                    self.describe(&cs.pos)
                ),
            );
        }
        if cs.polarity != item_polarity(item) {
            return err(
                Code::E003,
                loc,
                format!("missing shift on `${c}` before {what}"),
            );
        }
        Ok(item)
    }

    fn advance(pos: &Pos) -> Pos {
        match pos {
            Pos::Typedef(t, i) => Pos::Typedef(t.clone(), i + 1),
            Pos::Arm(c, l, i) => Pos::Arm(c.clone(), l.clone(), i + 1),
            Pos::Done => Pos::Done,
        }
    }

    fn shift(&self, env: &mut Env, c: &str, holder_sends: bool, loc: Loc) -> CResult<()> {
        let cs = self.chan(env, c, loc)?;
        let Some(item) = self.item(&cs.pos) else {
            return err(Code::E003, loc, format!("shift on ended session `${c}`"));
        };
        let next = item_polarity(item);
        if next == cs.polarity {
            return err(
                Code::E003,
                loc,
                format!(
                    "unexpected shift on `${c}`: the next item {} keeps the current polarity",
                    self.describe(&cs.pos)
                ),
            );
        }
        let holder_is_sender = (cs.polarity == Polarity::Positive) == (cs.side == Side::Provider);
        if holder_sends != holder_is_sender {
            return err(
                Code::E003,
                loc,
                format!(
                    "shift on `${c}` goes the wrong way: the other side must {} it",
                    if holder_sends { "send" } else { "receive" }
                ),
            );
        }
        cs.polarity = next;
        Ok(())
    }

    fn expr_type(&self, env: &Env, e: &Expr, loc: Loc) -> CResult<BaseType> {
        Ok(match e {
            Expr::Int(_) => BaseType::Int,
            Expr::Bool(_) => BaseType::Bool,
            Expr::Var(v) => {
                if env.pending_binders.contains_key(&Binder::Var(v.clone())) {
                    return err(
                        Code::E004,
                        loc,
                        format!("variable `{v}` is used before its receive is synchronized"),
                    );
                }
                match env.vars.get(v) {
                    Some(VarState { ty, assigned: true }) => ty.clone(),
                    Some(_) => {
                        return err(Code::E006, loc, format!("variable `{v}` may be unassigned"))
                    }
                    None => return err(Code::E006, loc, format!("unknown variable `{v}`")),
                }
            }
            Expr::Chan(c) => {
                return err(
                    Code::E006,
                    loc,
                    format!("channel `${c}` cannot be used inside an expression"),
                )
            }
            Expr::Unary(op, inner) => {
                let t = self.expr_type(env, inner, loc)?;
                let want = match op {
                    UnOp::Neg => BaseType::Int,
                    UnOp::Not => BaseType::Bool,
                };
                if t != want {
                    return err(
                        Code::E006,
                        loc,
                        format!("operand must be {want}, found {t}"),
                    );
                }
                want
            }
            Expr::Binary(op, l, r) => {
                let lt = self.expr_type(env, l, loc)?;
                let rt = self.expr_type(env, r, loc)?;
                let (operand, result) = match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                        (Some(BaseType::Int), BaseType::Int)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        (Some(BaseType::Int), BaseType::Bool)
                    }
                    BinOp::And | BinOp::Or => (Some(BaseType::Bool), BaseType::Bool),
                    BinOp::Eq | BinOp::Ne => (None, BaseType::Bool),
                };
                if lt != rt || operand.as_ref().is_some_and(|o| *o != lt) {
                    return err(
                        Code::E006,
                        loc,
                        format!("operator `{}` cannot combine {lt} and {rt}", op.symbol()),
                    );
                }
                result
            }
        })
    }

    fn cond(&self, env: &Env, e: &Expr, loc: Loc) -> CResult<()> {
        let t = self.expr_type(env, e, loc)?;
        if t != BaseType::Bool {
            return err(
                Code::E006,
                loc,
                format!("condition must be bool, found {t}"),
            );
        }
        Ok(())
    }

    fn check_decl(decl: &Option<BaseType>, actual: &BaseType, loc: Loc) -> CResult<()> {
        match decl {
            Some(d) if d != actual => err(
                Code::E006,
                loc,
                format!("declared type {d} does not match {actual}"),
            ),
            _ => Ok(()),
        }
    }

    fn assign_var(env: &mut Env, v: &str, ty: BaseType, loc: Loc) -> CResult<()> {
        if env
            .pending_binders
            .contains_key(&Binder::Var(v.to_string()))
        {
            return err(
                Code::E004,
                loc,
                format!("variable `{v}` is overwritten while its receive is still pending"),
            );
        }
        if let Some(existing) = env.vars.get(v) {
            if existing.ty != ty {
                return err(
                    Code::E006,
                    loc,
                    format!("variable `{v}` has type {}, cannot hold {ty}", existing.ty),
                );
            }
        }
        env.vars
            .insert(v.to_string(), VarState { ty, assigned: true });
        Ok(())
    }

    fn bind_chan(&self, env: &mut Env, c: &str, ty: &str, loc: Loc) -> CResult<()> {
        if env.chans.contains_key(c) {
            return err(
                Code::E001,
                loc,
                format!("channel `${c}` is still live and would be overwritten"),
            );
        }
        env.chans
            .insert(c.to_string(), self.start(ty, Side::Client));
        Ok(())
    }

    /// Move channel `c` out of the environment, requiring it to sit at the
    /// start of session `ty`.
    fn move_chan(&self, env: &mut Env, c: &str, ty: &str, loc: Loc) -> CResult<()> {
        let cs = self.chan(env, c, loc)?.clone();
        Self::no_pending(&cs, c, loc)?;
        let want = self.start(ty, Side::Client);
        if !self.same_state(&cs, &want) {
            return err(
                Code::E002,
                loc,
                format!(
                    "channel `${c}` is not in the initial state of `{ty}` (it expects {})",
                    self.describe(&cs.pos)
                ),
            );
        }
        env.chans.remove(c);
        Ok(())
    }

    /// Requirements for ending the process: nothing pending, no other channel
    /// left behind.
    fn finish(&self, env: &Env, keep: &[&str], loc: Loc) -> CResult<Flow> {
        for (c, cs) in &env.chans {
            Self::no_pending(cs, c, loc)?;
        }
        if let Some(b) = env.pending_binders.keys().next() {
            return err(
                Code::E004,
                loc,
                format!("request for `{b}` is never synchronized"),
            );
        }
        if let Some(c) = env.chans.keys().find(|c| !keep.contains(&c.as_str())) {
            return err(
                Code::E001,
                loc,
                format!("channel `${c}` is leaked when the process terminates"),
            );
        }
        Ok(Flow::Stop)
    }

    fn require_offered(&self, env: &mut Env, c: &str, what: &str, loc: Loc) -> CResult<()> {
        let cs = self.chan(env, c, loc)?;
        if cs.side != Side::Provider {
            return err(
                Code::E001,
                loc,
                format!("{what} `${c}`, but this process is its client, not its provider"),
            );
        }
        Ok(())
    }

    fn stmt(&mut self, mut env: Env, s: &Stmt) -> CResult<Flow> {
        let loc = s.loc;
        match &s.kind {
            StmtKind::Nop => {}
            StmtKind::Assign { var, decl, expr } => {
                let t = self.expr_type(&env, expr, loc)?;
                Self::check_decl(decl, &t, loc)?;
                Self::assign_var(&mut env, var, t, loc)?;
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                self.cond(&env, cond, loc)?;
                let a = self.block(env.clone(), then_body);
                let b = self.block(env, else_body);
                return self.join(vec![a, b], loc);
            }
            StmtKind::While { cond, body } => {
                self.cond(&env, cond, loc)?;
                if let Flow::Continue(after) = self.block(env.clone(), body) {
                    self.loop_invariant(&env, &after, loc)?;
                }
                if *cond == Expr::Bool(true) {
                    return Ok(Flow::Stop);
                }
            }
            StmtKind::SendVal { chan, expr } => {
                let cs = self.chan(&mut env, chan, loc)?.clone();
                Self::no_pending(&cs, chan, loc)?;
                let item = self.protocol_item(&cs, chan, true, "send", loc)?;
                let ty = match item {
                    TypeItem::SendVal(t) | TypeItem::RecvVal(t) => t.clone(),
                    _ => {
                        return err(
                            Code::E002,
                            loc,
                            format!(
                                "protocol mismatch: send on `${chan}`, but the session expects {}",
                                self.describe(&cs.pos)
                            ),
                        )
                    }
                };
                match (&ty, expr) {
                    (BaseType::Chan(t), Expr::Chan(d)) => {
                        if d == chan {
                            return err(
                                Code::E001,
                                loc,
                                format!("`${d}` cannot be sent over itself"),
                            );
                        }
                        self.move_chan(&mut env, d, t, loc)?;
                    }
                    (BaseType::Chan(t), _) => {
                        return err(Code::E006, loc, format!("expected a channel of type `{t}`"))
                    }
                    (t, e) => {
                        let et = self.expr_type(&env, e, loc)?;
                        if et != *t {
                            return err(
                                Code::E002,
                                loc,
                                format!("`${chan}` expects a {t} but the payload is {et}"),
                            );
                        }
                    }
                }
                let cs = self.chan(&mut env, chan, loc)?;
                cs.pos = Self::advance(&cs.pos);
            }
            StmtKind::RecvVal { binder, decl, chan }
            | StmtKind::AsyncRecvVal { binder, decl, chan } => {
                let asynchronous = matches!(s.kind, StmtKind::AsyncRecvVal { .. });
                let cs = self.chan(&mut env, chan, loc)?.clone();
                if !asynchronous {
                    Self::no_pending(&cs, chan, loc)?;
                }
                let item = self.protocol_item(&cs, chan, false, "receive", loc)?;
                let ty = match item {
                    TypeItem::SendVal(t) | TypeItem::RecvVal(t) => t.clone(),
                    _ => {
                        return err(
                            Code::E002,
                            loc,
                            format!(
                                "protocol mismatch: value receive on `${chan}`, but the session expects {}",
                                self.describe(&cs.pos)
                            ),
                        )
                    }
                };
                Self::check_decl(decl, &ty, loc)?;
                if env.pending_binders.contains_key(binder) {
                    return err(
                        Code::E004,
                        loc,
                        format!("`{binder}` already has a pending receive request"),
                    );
                }
                match (binder, &ty) {
                    (Binder::Var(_), BaseType::Chan(_))
                    | (Binder::Chan(_), BaseType::Int | BaseType::Bool) => {
                        return err(Code::E006, loc, format!("`{binder}` cannot receive a {ty}"))
                    }
                    _ => {}
                }
                if asynchronous {
                    if let Binder::Chan(d) = binder {
                        if env.chans.contains_key(d) {
                            return err(
                                Code::E001,
                                loc,
                                format!("channel `${d}` is still live and would be overwritten"),
                            );
                        }
                    }
                    if let Binder::Var(v) = binder {
                        if let Some(existing) = env.vars.get(v) {
                            if existing.ty != ty {
                                return err(
                                    Code::E006,
                                    loc,
                                    format!("variable `{v}` has type {}", existing.ty),
                                );
                            }
                        }
                    }
                    env.pending_binders.insert(binder.clone(), ty);
                    let cs = self.chan(&mut env, chan, loc)?;
                    cs.pending.push(Request::Var(binder.clone()));
                    cs.pos = Self::advance(&cs.pos);
                } else {
                    match binder {
                        Binder::Var(v) => Self::assign_var(&mut env, v, ty, loc)?,
                        Binder::Chan(d) => {
                            let BaseType::Chan(t) = &ty else {
                                unreachable!()
                            };
                            if d == chan {
                                return err(
                                    Code::E001,
                                    loc,
                                    format!("`${d}` would shadow the channel it is received on"),
                                );
                            }
                            self.bind_chan(&mut env, d, t, loc)?;
                        }
                    }
                    let cs = self.chan(&mut env, chan, loc)?;
                    cs.pos = Self::advance(&cs.pos);
                }
            }
            StmtKind::SendShift(c) => {
                let cs = self.chan(&mut env, c, loc)?.clone();
                Self::no_pending(&cs, c, loc)?;
                self.shift(&mut env, c, true, loc)?;
            }
            StmtKind::RecvShift(c) => {
                let cs = self.chan(&mut env, c, loc)?.clone();
                Self::no_pending(&cs, c, loc)?;
                self.shift(&mut env, c, false, loc)?;
            }
            StmtKind::AsyncRecvShift(c) => {
                self.shift(&mut env, c, false, loc)?;
                self.chan(&mut env, c, loc)?.pending.push(Request::Shift);
            }
            StmtKind::SendLabel { chan, label } => {
                let cs = self.chan(&mut env, chan, loc)?.clone();
                Self::no_pending(&cs, chan, loc)?;
                let item = self.protocol_item(&cs, chan, true, "label send", loc)?;
                let choice = match item {
                    TypeItem::SendChoice(ch) | TypeItem::RecvChoice(ch) => ch,
                    _ => {
                        return err(
                            Code::E002,
                            loc,
                            format!(
                                "protocol mismatch: label `{label}` sent on `${chan}`, but the session expects {}",
                                self.describe(&cs.pos)
                            ),
                        )
                    }
                };
                if self
                    .prog
                    .choice(choice)
                    .and_then(|c| c.arm(label))
                    .is_none()
                {
                    return err(
                        Code::E005,
                        loc,
                        format!("label `{label}` is not part of choice `{choice}`"),
                    );
                }
                let cs = self.chan(&mut env, chan, loc)?;
                cs.pos = Pos::Arm(choice.clone(), label.clone(), 0);
            }
            StmtKind::Switch { chan, arms } => {
                let cs = self.chan(&mut env, chan, loc)?.clone();
                Self::no_pending(&cs, chan, loc)?;
                let item = self.protocol_item(&cs, chan, false, "switch", loc)?;
                let choice_name = match item {
                    TypeItem::SendChoice(ch) | TypeItem::RecvChoice(ch) => ch,
                    _ => return err(
                        Code::E002,
                        loc,
                        format!(
                            "protocol mismatch: switch on `${chan}`, but the session expects {}",
                            self.describe(&cs.pos)
                        ),
                    ),
                };
                let Some(choice) = self.prog.choice(choice_name) else {
                    return err(Code::E005, loc, format!("unknown choice `{choice_name}`"));
                };
                let mut seen = BTreeSet::new();
                for a in arms {
                    if choice.arm(&a.label).is_none() {
                        return err(
                            Code::E005,
                            a.loc,
                            format!("label `{}` is not part of choice `{choice_name}`", a.label),
                        );
                    }
                    if !seen.insert(a.label.as_str()) {
                        return err(Code::E005, a.loc, format!("duplicate case `{}`", a.label));
                    }
                }
                if let Some(missing) = choice
                    .arms
                    .iter()
                    .find(|a| !seen.contains(a.label.as_str()))
                {
                    return err(
                        Code::E005,
                        loc,
                        format!(
                            "switch on `${chan}` does not handle label `{}`",
                            missing.label
                        ),
                    );
                }
                let mut flows = Vec::new();
                for a in arms {
                    let mut arm_env = env.clone();
                    arm_env.chans.get_mut(chan.as_str()).unwrap().pos =
                        Pos::Arm(choice_name.clone(), a.label.clone(), 0);
                    flows.push(self.block(arm_env, &a.body));
                }
                return self.join(flows, loc);
            }
            StmtKind::Close(c) => {
                self.require_offered(&mut env, c, "close of", loc)?;
                let cs = self.chan(&mut env, c, loc)?.clone();
                Self::no_pending(&cs, c, loc)?;
                self.protocol_item(&cs, c, true, "close", loc)
                    .and_then(|item| match item {
                        TypeItem::End => Ok(()),
                        _ => err(
                            Code::E002,
                            loc,
                            format!(
                                "close of `${c}`, but the session expects {}",
                                self.describe(&cs.pos)
                            ),
                        ),
                    })?;
                return self.finish(&env, &[c], loc);
            }
            StmtKind::Wait(c) | StmtKind::AsyncWait(c) => {
                let asynchronous = matches!(s.kind, StmtKind::AsyncWait(_));
                let cs = self.chan(&mut env, c, loc)?.clone();
                if cs.side == Side::Provider {
                    return err(
                        Code::E001,
                        loc,
                        format!("wait on `${c}` by its own provider"),
                    );
                }
                if !asynchronous {
                    Self::no_pending(&cs, c, loc)?;
                }
                let item = self.protocol_item(&cs, c, false, "wait", loc)?;
                if *item != TypeItem::End {
                    return err(
                        Code::E002,
                        loc,
                        format!(
                            "wait on `${c}`, but the session expects {}",
                            self.describe(&cs.pos)
                        ),
                    );
                }
                if asynchronous {
                    let cs = self.chan(&mut env, c, loc)?;
                    cs.pos = Pos::Done;
                    cs.pending.push(Request::End);
                } else {
                    env.chans.remove(c.as_str());
                }
            }
            StmtKind::SyncVar { chan, binder } => {
                self.sync(&mut env, chan, &Request::Var(binder.clone()), loc)?;
            }
            StmtKind::SyncShift(c) => self.sync(&mut env, c, &Request::Shift, loc)?,
            StmtKind::SyncEnd(c) => self.sync(&mut env, c, &Request::End, loc)?,
            StmtKind::Forward { offered, client } => {
                self.require_offered(&mut env, offered, "forward of", loc)?;
                let d = self.chan(&mut env, offered, loc)?.clone();
                let e = self.chan(&mut env, client, loc)?.clone();
                if e.side != Side::Client {
                    return err(
                        Code::E001,
                        loc,
                        format!("`${client}` is not a client channel"),
                    );
                }
                let as_client = ChanState {
                    side: Side::Client,
                    ..d.clone()
                };
                if !self.same_state(&as_client, &e) {
                    return err(
                        Code::E002,
                        loc,
                        format!(
                            "forward between different session states: `${offered}` expects {} ({:?}), `${client}` expects {} ({:?})",
                            self.describe(&d.pos),
                            d.polarity,
                            self.describe(&e.pos),
                            e.polarity
                        ),
                    );
                }
                return self.finish(&env, &[offered, client], loc);
            }
            StmtKind::Spawn {
                chan,
                decl,
                proc,
                args,
            } => {
                let Some(callee) = self.prog.proc(proc) else {
                    return err(Code::E002, loc, format!("unknown process `{proc}`"));
                };
                Self::check_decl(decl, &BaseType::Chan(callee.offered_ty.clone()), loc)?;
                if args.len() != callee.params.len() {
                    return err(
                        Code::E006,
                        loc,
                        format!(
                            "`{proc}` takes {} arguments, {} given",
                            callee.params.len(),
                            args.len()
                        ),
                    );
                }
                for (arg, param) in args.iter().zip(&callee.params) {
                    match (param, arg) {
                        (Param::Chan { ty, .. }, Expr::Chan(c)) => {
                            self.move_chan(&mut env, c, ty, loc)?
                        }
                        (Param::Chan { ty, .. }, _) => {
                            return err(
                                Code::E006,
                                loc,
                                format!("expected a channel of type `{ty}`"),
                            )
                        }
                        (Param::Val { ty, .. }, e) => {
                            let t = self.expr_type(&env, e, loc)?;
                            if t != *ty {
                                return err(
                                    Code::E006,
                                    loc,
                                    format!("argument of `{proc}` must be {ty}, found {t}"),
                                );
                            }
                        }
                    }
                }
                if *chan == self.proc.offered {
                    // tail call: spawn, then forward the offered channel to it
                    let cs = self.chan(&mut env, chan, loc)?.clone();
                    let want = ChanState {
                        side: Side::Provider,
                        ..self.start(&callee.offered_ty, Side::Provider)
                    };
                    if !self.same_state(&cs, &want) {
                        return err(
                            Code::E002,
                            loc,
                            format!(
                                "tail call to `{proc}` offers `{}` but `${chan}` expects {}",
                                callee.offered_ty,
                                self.describe(&cs.pos)
                            ),
                        );
                    }
                    return self.finish(&env, &[chan], loc);
                }
                self.bind_chan(&mut env, chan, &callee.offered_ty, loc)?;
            }
        }
        Ok(Flow::Continue(env))
    }

    fn sync(&self, env: &mut Env, c: &str, target: &Request, loc: Loc) -> CResult<()> {
        let cs = self.chan(env, c, loc)?;
        let Some(idx) = cs.pending.iter().position(|r| r == target) else {
            return err(
                Code::E004,
                loc,
                format!(
                    "sync({}) on `${c}` has no matching pending request (pending: {})",
                    target,
                    list_requests(&cs.pending)
                ),
            );
        };
        let drained: Vec<Request> = cs.pending.drain(..=idx).collect();
        let ended = drained.contains(&Request::End);
        for r in drained {
            if let Request::Var(b) = r {
                let ty = env
                    .pending_binders
                    .remove(&b)
                    .expect("pending binder tracked with its request");
                match &b {
                    Binder::Var(v) => {
                        env.vars.insert(v.clone(), VarState { ty, assigned: true });
                    }
                    Binder::Chan(d) => {
                        let BaseType::Chan(t) = &ty else {
                            unreachable!()
                        };
                        self.bind_chan(env, d, t, loc)?;
                    }
                }
            }
        }
        if ended {
            env.chans.remove(c);
        }
        Ok(())
    }

    fn loop_invariant(&self, before: &Env, after: &Env, loc: Loc) -> CResult<()> {
        let names_before: Vec<_> = before.chans.keys().collect();
        let names_after: Vec<_> = after.chans.keys().collect();
        if names_before != names_after {
            return err(
                Code::E001,
                loc,
                "loop body changes the set of live channels",
            );
        }
        for (c, cs) in &before.chans {
            if !self.same_state(cs, &after.chans[c]) {
                return err(
                    Code::E002,
                    loc,
                    format!("loop body does not return `${c}` to its loop-entry state"),
                );
            }
        }
        if before.pending_binders != after.pending_binders {
            return err(
                Code::E004,
                loc,
                "loop body changes the set of pending requests",
            );
        }
        Ok(())
    }

    fn join(&self, flows: Vec<Flow>, loc: Loc) -> CResult<Flow> {
        let mut envs = flows.into_iter().filter_map(|f| match f {
            Flow::Continue(e) => Some(e),
            Flow::Stop => None,
        });
        let Some(mut acc) = envs.next() else {
            return Ok(Flow::Stop);
        };
        for e in envs {
            let a: Vec<_> = acc.chans.keys().collect();
            let b: Vec<_> = e.chans.keys().collect();
            if a != b {
                return err(
                    Code::E001,
                    loc,
                    "branches leave different sets of live channels",
                );
            }
            for (c, cs) in &acc.chans {
                if !self.same_state(cs, &e.chans[c]) {
                    return err(
                        Code::E002,
                        loc,
                        format!("branches leave `${c}` in different protocol states"),
                    );
                }
            }
            if acc.pending_binders != e.pending_binders {
                return err(Code::E004, loc, "branches leave different pending requests");
            }
            let mut vars = BTreeMap::new();
            for (v, st) in &acc.vars {
                match e.vars.get(v) {
                    Some(other) if other.ty != st.ty => {
                        return err(
                            Code::E006,
                            loc,
                            format!("variable `{v}` has different types in different branches"),
                        )
                    }
                    Some(other) => {
                        vars.insert(
                            v.clone(),
                            VarState {
                                ty: st.ty.clone(),
                                assigned: st.assigned && other.assigned,
                            },
                        );
                    }
                    None => {
                        vars.insert(
                            v.clone(),
                            VarState {
                                ty: st.ty.clone(),
                                assigned: false,
                            },
                        );
                    }
                }
            }
            for (v, st) in &e.vars {
                vars.entry(v.clone()).or_insert(VarState {
                    ty: st.ty.clone(),
                    assigned: false,
                });
            }
            acc.vars = vars;
        }
        Ok(Flow::Continue(acc))
    }
}

fn list_requests(rs: &[Request]) -> String {
    if rs.is_empty() {
        return "none".to_string();
    }
    rs.iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

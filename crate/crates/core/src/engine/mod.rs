//! Executable cost semantics.
//!
//! A [`Machine`] is a configuration in the multiset-rewriting sense: a set of
//! process facts, one message queue per live channel, and per-process
//! variable cells. Each call to [`Machine::step`] applies exactly one rule
//! instance chosen from [`Machine::enabled`]. Internal statements (assignment,
//! `if`, `while`, `nop`) carry no cost and run eagerly between rule
//! applications.
//!
//! The same machine runs both receive disciplines. Under
//! [`Semantics::Blocking`] the non-blocking constructs are rejected; under
//! [`Semantics::NonBlocking`] receives may also be issued as requests that are
//! matched against arriving messages by `sync`.
//!
//! Channel identifiers are spawn paths (`0`, `0.1`, `0.1.2`, ...), so names
//! and reports do not depend on the order in which processes were scheduled.

mod blocking;
pub mod explore;
mod nonblocking;
pub mod sched;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::check::{initial_polarity, Polarity};
use crate::ir::{
    printer, BinOp, Binder, Block, Expr, Param, Program, Request, Stmt, StmtKind, UnOp,
};

pub use explore::{explore, ExploreLimits, ExploreResult};
pub use sched::{Policy, RoundRobin, Scheduler, SeededRandom};

/// Receive discipline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Blocking,
    NonBlocking,
}

/// Span and work of a process or message.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Stamp {
    pub span: u64,
    pub work: u64,
}

impl Stamp {
    pub fn new(span: u64, work: u64) -> Self {
        Stamp { span, work }
    }

    fn tick(&mut self) {
        self.span += 1;
        self.work += 1;
    }
}

impl fmt::Display for Stamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(s={}, w={})", self.span, self.work)
    }
}

/// A channel, named by the spawn path of the process that first provided it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChanId(Vec<u32>);

impl ChanId {
    pub fn root() -> Self {
        ChanId(vec![0])
    }

    pub fn child(&self, k: u32) -> Self {
        let mut path = self.0.clone();
        path.push(k);
        ChanId(path)
    }

    pub fn parse(text: &str) -> Option<Self> {
        text.split('.')
            .map(|p| p.parse().ok())
            .collect::<Option<Vec<u32>>>()
            .map(ChanId)
    }
}

impl fmt::Display for ChanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl Serialize for ChanId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Chan(ChanId),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Chan(c) => write!(f, "${c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MsgKind {
    Val(Value),
    Label(String),
    Shift,
    End,
    /// The provider forwarded; the client continues on the given channel.
    Fwd(ChanId),
}

impl MsgKind {
    pub fn name(&self) -> &'static str {
        match self {
            MsgKind::Val(_) => "val",
            MsgKind::Label(_) => "label",
            MsgKind::Shift => "shift",
            MsgKind::End => "end",
            MsgKind::Fwd(_) => "fwd",
        }
    }

    fn payload(&self) -> String {
        match self {
            MsgKind::Val(v) => v.to_string(),
            MsgKind::Label(l) => l.clone(),
            MsgKind::Fwd(c) => format!("${c}"),
            MsgKind::Shift | MsgKind::End => String::new(),
        }
    }
}

/// A queued message. `id` only links send and receive events in traces and
/// takes no part in equality.
#[derive(Clone, Debug)]
pub struct Msg {
    pub kind: MsgKind,
    pub stamp: Stamp,
    pub id: u64,
}

impl Msg {
    pub fn new(kind: MsgKind, stamp: Stamp) -> Self {
        Msg { kind, stamp, id: 0 }
    }
}

impl PartialEq for Msg {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.stamp == other.stamp
    }
}

impl Eq for Msg {}

impl Hash for Msg {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.kind.hash(h);
        self.stamp.hash(h);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    ToClient,
    ToProvider,
}

impl Direction {
    fn flip(self) -> Self {
        match self {
            Direction::ToClient => Direction::ToProvider,
            Direction::ToProvider => Direction::ToClient,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Queue {
    pub buffer: VecDeque<Msg>,
    pub direction: Direction,
    /// Process currently serving the channel.
    pub provider: ChanId,
    /// Stamps of forwards whose queue was spliced into this one while the
    /// client was the sender. The client absorbs them, as it would a `fwd`
    /// message, at its next dequeue.
    pub credits: Vec<Msg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Provider,
    Client,
}

/// A process's handle on a channel, with the receive requests it has issued
/// on it. Requests belong to the endpoint so they follow it across forwards.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub id: ChanId,
    pub role: Role,
    pub requests: VecDeque<Request>,
}

impl Endpoint {
    fn new(id: ChanId, role: Role) -> Self {
        Endpoint {
            id,
            role,
            requests: VecDeque::new(),
        }
    }

    fn incoming(&self) -> Direction {
        match self.role {
            Role::Provider => Direction::ToProvider,
            Role::Client => Direction::ToClient,
        }
    }
}

/// Continuation frame. Equality is structural (cheap when blocks share an
/// allocation); hashing only looks at the shape.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Frame {
    Seq {
        block: Block,
        pc: usize,
    },
    /// The loop statement at `block[idx]`.
    Loop {
        block: Block,
        idx: usize,
    },
}

impl Hash for Frame {
    fn hash<H: Hasher>(&self, h: &mut H) {
        let (k, b, i) = match self {
            Frame::Seq { block, pc } => (0u8, block, pc),
            Frame::Loop { block, idx } => (1u8, block, idx),
        };
        k.hash(h);
        b.len().hash(h);
        i.hash(h);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Proc {
    pub id: ChanId,
    pub name: String,
    /// Local name of the offered channel.
    pub offered: String,
    frames: Vec<Frame>,
    pub vars: BTreeMap<String, Value>,
    pub chans: BTreeMap<String, Endpoint>,
    pub stamp: Stamp,
    children: u32,
}

impl Proc {
    /// The communication statement the process is stopped at.
    pub fn current(&self) -> Option<&Stmt> {
        match self.frames.last()? {
            Frame::Seq { block, pc } => block.get(*pc),
            Frame::Loop { .. } => None,
        }
    }

    fn advance(&mut self) {
        if let Some(Frame::Seq { pc, .. }) = self.frames.last_mut() {
            *pc += 1;
        }
    }

    fn endpoint(&self, c: &str) -> Result<&Endpoint, EngineError> {
        self.chans
            .get(c)
            .ok_or_else(|| EngineError::UnboundChannel(c.to_string()))
    }

    fn endpoint_mut(&mut self, c: &str) -> Result<&mut Endpoint, EngineError> {
        self.chans
            .get_mut(c)
            .ok_or_else(|| EngineError::UnboundChannel(c.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Error)]
pub enum EngineError {
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("sync mismatch: {0}")]
    SyncMismatch(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unbound channel `${0}`")]
    UnboundChannel(String),
    #[error("type error: {0}")]
    TypeError(String),
    #[error("`{0}` is not available under blocking semantics")]
    Unsupported(String),
    #[error("unknown process `{0}`")]
    UnknownProc(String),
    #[error("bad entry arguments: {0}")]
    BadArguments(String),
    #[error("internal computation did not reach a communication step within {0} statements")]
    InternalBudget(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Outcome {
    Quiescent,
    Deadlock,
    StepLimit,
    RuntimeError,
}

impl Outcome {
    /// Process exit code for the command-line front end.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Quiescent => 0,
            Outcome::Deadlock => 3,
            Outcome::StepLimit => 4,
            Outcome::RuntimeError => 5,
        }
    }
}

/// Name of the rewriting rule an instance applies.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Spawn,
    DataS,
    LabelS,
    ShiftS,
    DataR,
    LabelR,
    ShiftR,
    Close,
    Wait,
    FwdS,
    FwdR,
    DataAsyncR,
    ShiftAsyncR,
    AsyncWait,
    /// One request/message match of a `sync` (sync_wait 1 and 2).
    SyncWait,
    /// The process is stuck in an error state; applying it reports the error.
    Fault(String),
}

impl Rule {
    /// Rules that add one unit of span and work to the acting process.
    pub fn is_costed(&self) -> bool {
        matches!(
            self,
            Rule::DataS
                | Rule::LabelS
                | Rule::DataR
                | Rule::LabelR
                | Rule::Close
                | Rule::Wait
                | Rule::DataAsyncR
                | Rule::AsyncWait
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instance {
    pub proc: ChanId,
    pub rule: Rule,
}

/// One delivered message: the observable behaviour of a run.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Delivery {
    pub chan: ChanId,
    pub kind: &'static str,
    pub payload: String,
}

/// One rule application, for `--trace` and for the causal-chain oracle.
#[derive(Clone, Debug, Serialize)]
pub struct TraceEvent {
    pub step: u64,
    pub proc: ChanId,
    pub rule: Rule,
    pub stmt: String,
    pub span: u64,
    pub work: u64,
    /// Message produced by the rule, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub produced: Option<u64>,
    /// Messages (and forward credits) consumed by the rule.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub consumed: Vec<u64>,
    /// Process created by a spawn.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub child: Option<ChanId>,
    /// Pending requests of the acting process after the step (non-blocking only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requests: Option<BTreeMap<String, Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProcReport {
    pub chan: ChanId,
    pub span: u64,
    pub work: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub span: u64,
    pub total_work: u64,
    pub root_work: u64,
    pub steps: u64,
    pub outcome: Outcome,
    pub processes: Vec<ProcReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;
const INTERNAL_BUDGET: u64 = 1_000_000;

/// Machine state. Equality and hashing cover the configuration only, not the
/// delivery log or message ids.
#[derive(Clone, Debug)]
pub struct Machine<'p> {
    prog: &'p Program,
    sem: Semantics,
    pub(crate) procs: BTreeMap<ChanId, Proc>,
    pub(crate) queues: BTreeMap<ChanId, Queue>,
    /// Channels spliced into another by a forward.
    aliases: BTreeMap<ChanId, ChanId>,
    /// Final stamps of terminated processes.
    finished: BTreeMap<ChanId, Stamp>,
    total_work: u64,
    steps: u64,
    error: Option<EngineError>,
    deliveries: Vec<Delivery>,
    next_msg: u64,
    trace: Option<Vec<TraceEvent>>,
    event: EventScratch,
}

#[derive(Clone, Debug, Default)]
struct EventScratch {
    produced: Option<u64>,
    consumed: Vec<u64>,
    child: Option<ChanId>,
}

impl PartialEq for Machine<'_> {
    fn eq(&self, o: &Self) -> bool {
        self.sem == o.sem
            && self.procs == o.procs
            && self.queues == o.queues
            && self.aliases == o.aliases
            && self.finished == o.finished
            && self.total_work == o.total_work
            && self.steps == o.steps
            && self.error == o.error
    }
}

impl Eq for Machine<'_> {}

impl Hash for Machine<'_> {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.procs.hash(h);
        self.queues.hash(h);
        self.aliases.hash(h);
        self.finished.hash(h);
        self.total_work.hash(h);
        self.steps.hash(h);
        self.error.hash(h);
    }
}

impl<'p> Machine<'p> {
    /// Initial configuration: the entry process with its value arguments.
    pub fn new(
        prog: &'p Program,
        sem: Semantics,
        args: &BTreeMap<String, Value>,
    ) -> Result<Self, EngineError> {
        let entry = prog
            .entry_proc()
            .ok_or_else(|| EngineError::UnknownProc(prog.entry.clone()))?;
        let mut vars = BTreeMap::new();
        for p in &entry.params {
            match p {
                Param::Val { name, .. } => {
                    let v = args.get(name).ok_or_else(|| {
                        EngineError::BadArguments(format!("missing value for `{name}`"))
                    })?;
                    vars.insert(name.clone(), v.clone());
                }
                Param::Chan { name, .. } => {
                    return Err(EngineError::BadArguments(format!(
                        "entry process cannot take channel `${name}`"
                    )))
                }
            }
        }
        if let Some(extra) = args.keys().find(|k| !vars.contains_key(*k)) {
            return Err(EngineError::BadArguments(format!(
                "`{}` has no parameter `{extra}`",
                entry.name
            )));
        }
        let mut m = Machine {
            prog,
            sem,
            procs: BTreeMap::new(),
            queues: BTreeMap::new(),
            aliases: BTreeMap::new(),
            finished: BTreeMap::new(),
            total_work: 0,
            steps: 0,
            error: None,
            deliveries: Vec::new(),
            next_msg: 0,
            trace: None,
            event: EventScratch::default(),
        };
        let root = ChanId::root();
        m.create(root, &entry.name, vars, BTreeMap::new(), Stamp::default())?;
        Ok(m)
    }

    pub fn semantics(&self) -> Semantics {
        self.sem
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.take().unwrap_or_default()
    }

    pub fn deliveries(&self) -> &[Delivery] {
        &self.deliveries
    }

    pub fn procs(&self) -> impl Iterator<Item = &Proc> {
        self.procs.values()
    }

    pub fn proc(&self, id: &ChanId) -> Option<&Proc> {
        self.procs.get(id)
    }

    pub fn queue(&self, id: &ChanId) -> Option<&Queue> {
        self.queues.get(id)
    }

    /// Direct access for rule-level tests that need specific stamps.
    pub fn queue_mut(&mut self, id: &ChanId) -> Option<&mut Queue> {
        self.queues.get_mut(id)
    }

    pub fn set_stamp(&mut self, id: &ChanId, stamp: Stamp) {
        if let Some(p) = self.procs.get_mut(id) {
            p.stamp = stamp;
        }
    }

    pub fn stamp_of(&self, id: &ChanId) -> Option<Stamp> {
        self.procs
            .get(id)
            .map(|p| p.stamp)
            .or_else(|| self.finished.get(id).copied())
    }

    pub fn total_work(&self) -> u64 {
        self.total_work
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn error(&self) -> Option<&EngineError> {
        self.error.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.procs.is_empty() || self.error.is_some()
    }

    fn resolve(&self, id: &ChanId) -> ChanId {
        let mut cur = id;
        while let Some(next) = self.aliases.get(cur) {
            cur = next;
        }
        cur.clone()
    }

    fn fresh_msg(&mut self, kind: MsgKind, stamp: Stamp) -> Msg {
        self.next_msg += 1;
        self.event.produced = Some(self.next_msg);
        Msg {
            kind,
            stamp,
            id: self.next_msg,
        }
    }

    fn create(
        &mut self,
        id: ChanId,
        proc_name: &str,
        vars: BTreeMap<String, Value>,
        mut chans: BTreeMap<String, Endpoint>,
        stamp: Stamp,
    ) -> Result<(), EngineError> {
        let def = self
            .prog
            .proc(proc_name)
            .ok_or_else(|| EngineError::UnknownProc(proc_name.to_string()))?;
        let polarity = self
            .prog
            .typedef(&def.offered_ty)
            .map(|t| initial_polarity(&t.ty))
            .unwrap_or(Polarity::Positive);
        let direction = match polarity {
            Polarity::Positive => Direction::ToClient,
            Polarity::Negative => Direction::ToProvider,
        };
        self.queues.insert(
            id.clone(),
            Queue {
                buffer: VecDeque::new(),
                direction,
                provider: id.clone(),
                credits: Vec::new(),
            },
        );
        chans.insert(
            def.offered.clone(),
            Endpoint::new(id.clone(), Role::Provider),
        );
        let proc = Proc {
            id: id.clone(),
            name: def.name.clone(),
            offered: def.offered.clone(),
            frames: vec![Frame::Seq {
                block: def.body.clone(),
                pc: 0,
            }],
            vars,
            chans,
            stamp,
            children: 0,
        };
        self.procs.insert(id.clone(), proc);
        self.normalize(&id)
    }

    /// Run internal statements of `id` until it reaches a communication
    /// statement.
    fn normalize(&mut self, id: &ChanId) -> Result<(), EngineError> {
        let Some(p) = self.procs.get_mut(id) else {
            return Ok(());
        };
        let mut budget = INTERNAL_BUDGET;
        loop {
            if budget == 0 {
                return Err(EngineError::InternalBudget(INTERNAL_BUDGET));
            }
            budget -= 1;
            let Some(frame) = p.frames.last().cloned() else {
                return Ok(());
            };
            match frame {
                Frame::Loop { block, idx } => {
                    let StmtKind::While { cond, body } = &block[idx].kind else {
                        unreachable!("loop frame points at a while statement")
                    };
                    if eval_bool(&p.vars, cond)? {
                        p.frames.push(Frame::Seq {
                            block: body.clone(),
                            pc: 0,
                        });
                    } else {
                        p.frames.pop();
                    }
                }
                Frame::Seq { block, pc } => {
                    let Some(s) = block.get(pc) else {
                        p.frames.pop();
                        continue;
                    };
                    match &s.kind {
                        StmtKind::Nop => p.advance(),
                        StmtKind::Assign { var, expr, .. } => {
                            let v = eval(&p.vars, expr)?;
                            p.vars.insert(var.clone(), v);
                            p.advance();
                        }
                        StmtKind::If {
                            cond,
                            then_body,
                            else_body,
                        } => {
                            let branch = if eval_bool(&p.vars, cond)? {
                                then_body.clone()
                            } else {
                                else_body.clone()
                            };
                            p.advance();
                            p.frames.push(Frame::Seq {
                                block: branch,
                                pc: 0,
                            });
                        }
                        StmtKind::While { .. } => {
                            p.advance();
                            p.frames.push(Frame::Loop { block, idx: pc });
                        }
                        _ => return Ok(()),
                    }
                }
            }
        }
    }

    /// Rule instances applicable in the current configuration, at most one
    /// per process, in process order.
    pub fn enabled(&self) -> Vec<Instance> {
        if self.error.is_some() {
            return Vec::new();
        }
        self.procs
            .values()
            .filter_map(|p| {
                self.instance_for(p).map(|rule| Instance {
                    proc: p.id.clone(),
                    rule,
                })
            })
            .collect()
    }

    fn fault(msg: impl Into<String>) -> Option<Rule> {
        Some(Rule::Fault(msg.into()))
    }

    fn instance_for(&self, p: &Proc) -> Option<Rule> {
        let Some(s) = p.current() else {
            return Self::fault(format!("process `{}` ran past the end of its body", p.name));
        };
        if s.kind.is_nonblocking() && self.sem == Semantics::Blocking {
            return Self::fault(EngineError::Unsupported(printer::stmt_head(s)).to_string());
        }
        match &s.kind {
            StmtKind::Spawn { .. } => Some(Rule::Spawn),
            StmtKind::Forward { offered, .. } => self.fwd_rule(p, offered),
            StmtKind::Close(_) => Some(Rule::Close),
            StmtKind::SendVal { chan, .. } => self.send_rule(p, chan, Rule::DataS),
            StmtKind::SendLabel { chan, .. } => self.send_rule(p, chan, Rule::LabelS),
            StmtKind::SendShift(chan) => self.send_rule(p, chan, Rule::ShiftS),
            StmtKind::RecvVal { chan, .. } => self.recv_rule(p, chan, Rule::DataR, "val"),
            StmtKind::RecvShift(chan) => self.recv_rule(p, chan, Rule::ShiftR, "shift"),
            StmtKind::Switch { chan, .. } => self.recv_rule(p, chan, Rule::LabelR, "label"),
            StmtKind::Wait(chan) => self.recv_rule(p, chan, Rule::Wait, "end"),
            StmtKind::AsyncRecvVal { .. } => Some(Rule::DataAsyncR),
            StmtKind::AsyncRecvShift(_) => Some(Rule::ShiftAsyncR),
            StmtKind::AsyncWait(_) => Some(Rule::AsyncWait),
            StmtKind::SyncVar { chan, binder } => {
                self.sync_rule(p, chan, &Request::Var(binder.clone()))
            }
            StmtKind::SyncShift(chan) => self.sync_rule(p, chan, &Request::Shift),
            StmtKind::SyncEnd(chan) => self.sync_rule(p, chan, &Request::End),
            StmtKind::Assign { .. }
            | StmtKind::If { .. }
            | StmtKind::While { .. }
            | StmtKind::Nop => Self::fault("internal statement left unexecuted"),
        }
    }

    /// Resolve the queue behind endpoint `c` of `p`.
    fn queue_of<'a>(&'a self, p: &'a Proc, c: &str) -> Result<(&'a Endpoint, &'a Queue), Rule> {
        let ep = p.endpoint(c).map_err(|e| Rule::Fault(e.to_string()))?;
        let id = self.resolve(&ep.id);
        let q = self
            .queues
            .get(&id)
            .ok_or_else(|| Rule::Fault(format!("channel ${id} has no queue")))?;
        Ok((ep, q))
    }

    /// A forward issued right after the provider sent a shift waits until
    /// the client has consumed it, so the queue is always spliced and the
    /// number of steps does not depend on the schedule.
    fn fwd_rule(&self, p: &Proc, offered: &str) -> Option<Rule> {
        let (_, q) = match self.queue_of(p, offered) {
            Ok(x) => x,
            Err(f) => return Some(f),
        };
        let trailing_shift = q.direction == Direction::ToClient
            && q.buffer.back().is_some_and(|m| m.kind == MsgKind::Shift);
        (!trailing_shift).then_some(Rule::FwdS)
    }

    fn send_rule(&self, p: &Proc, c: &str, rule: Rule) -> Option<Rule> {
        let (ep, q) = match self.queue_of(p, c) {
            Ok(x) => x,
            Err(f) => return Some(f),
        };
        if ep.role == Role::Client
            && matches!(
                q.buffer.front(),
                Some(Msg {
                    kind: MsgKind::Fwd(_),
                    ..
                })
            )
        {
            return Some(Rule::FwdR);
        }
        if !ep.requests.is_empty() {
            return Self::fault(format!("send on ${c} with unsynchronized requests"));
        }
        if q.direction == ep.incoming() {
            return Self::fault(format!("send on ${c} against the channel's direction"));
        }
        Some(rule)
    }

    fn recv_rule(&self, p: &Proc, c: &str, rule: Rule, want: &str) -> Option<Rule> {
        let (ep, q) = match self.queue_of(p, c) {
            Ok(x) => x,
            Err(f) => return Some(f),
        };
        if !ep.requests.is_empty() {
            return Self::fault(format!(
                "blocking receive on ${c} with unsynchronized requests"
            ));
        }
        let head = q.buffer.front()?;
        if ep.role == Role::Client {
            if let MsgKind::Fwd(_) = head.kind {
                return Some(Rule::FwdR);
            }
        }
        if q.direction != ep.incoming() {
            return None;
        }
        if head.kind.name() != want {
            return Self::fault(format!(
                "expected {want} on ${c}, found {}",
                head.kind.name()
            ));
        }
        Some(rule)
    }

    fn sync_rule(&self, p: &Proc, c: &str, target: &Request) -> Option<Rule> {
        let (ep, q) = match self.queue_of(p, c) {
            Ok(x) => x,
            Err(f) => return Some(f),
        };
        if !ep.requests.contains(target) {
            return Self::fault(
                EngineError::SyncMismatch(format!("no pending `{target}` request on ${c}"))
                    .to_string(),
            );
        }
        let head = q.buffer.front()?;
        if ep.role == Role::Client {
            if let MsgKind::Fwd(_) = head.kind {
                return Some(Rule::FwdR);
            }
        }
        if q.direction != ep.incoming() {
            return None;
        }
        let ok = matches!(
            (ep.requests.front(), &head.kind),
            (Some(Request::Var(_)), MsgKind::Val(_))
                | (Some(Request::Shift), MsgKind::Shift)
                | (Some(Request::End), MsgKind::End)
        );
        if !ok {
            return Self::fault(format!(
                "request `{}` on ${c} met a {} message",
                ep.requests
                    .front()
                    .map(|r| r.to_string())
                    .unwrap_or_default(),
                head.kind.name()
            ));
        }
        Some(Rule::SyncWait)
    }

    /// Apply one enabled rule instance.
    pub fn step(&mut self, inst: &Instance) -> Result<(), EngineError> {
        if let Rule::Fault(msg) = &inst.rule {
            let err = if msg.starts_with("sync mismatch") {
                EngineError::SyncMismatch(msg.clone())
            } else {
                EngineError::ProtocolViolation(msg.clone())
            };
            self.error = Some(err.clone());
            return Err(err);
        }
        self.event = EventScratch::default();
        let stmt_text = self
            .procs
            .get(&inst.proc)
            .and_then(|p| p.current())
            .map(printer::stmt_head)
            .unwrap_or_default();
        let result = self.apply(inst).and_then(|_| self.normalize(&inst.proc));
        self.steps += 1;
        if let Err(e) = &result {
            self.error = Some(e.clone());
        }
        if self.trace.is_some() {
            let stamp = self.stamp_of(&inst.proc).unwrap_or_default();
            let requests = (self.sem == Semantics::NonBlocking).then(|| {
                self.procs
                    .get(&inst.proc)
                    .map(|p| {
                        p.chans
                            .iter()
                            .filter(|(_, e)| !e.requests.is_empty())
                            .map(|(n, e)| {
                                (
                                    n.clone(),
                                    e.requests.iter().map(|r| r.to_string()).collect(),
                                )
                            })
                            .collect()
                    })
                    .unwrap_or_default()
            });
            let scratch = std::mem::take(&mut self.event);
            let ev = TraceEvent {
                step: self.steps,
                proc: inst.proc.clone(),
                rule: inst.rule.clone(),
                stmt: stmt_text,
                span: stamp.span,
                work: stamp.work,
                produced: scratch.produced,
                consumed: scratch.consumed,
                child: scratch.child,
                requests,
            };
            if let Some(t) = self.trace.as_mut() {
                t.push(ev);
            }
        }
        result
    }

    fn apply(&mut self, inst: &Instance) -> Result<(), EngineError> {
        let id = &inst.proc;
        let stmt = self
            .procs
            .get(id)
            .and_then(|p| p.current())
            .cloned()
            .ok_or_else(|| {
                EngineError::ProtocolViolation(format!("process ${id} has no statement"))
            })?;
        if inst.rule == Rule::FwdR {
            let chan = stmt_chan(&stmt.kind).ok_or_else(|| {
                EngineError::ProtocolViolation("forward receipt outside a channel operation".into())
            })?;
            return self.fwd_r(id, chan);
        }
        match &stmt.kind {
            StmtKind::Spawn {
                chan, proc, args, ..
            } => self.spawn(id, chan, proc, args),
            StmtKind::Forward { offered, client } => self.fwd_s(id, offered, client),
            StmtKind::Close(c) => self.close(id, c),
            StmtKind::SendVal { chan, expr } => self.send_val(id, chan, expr),
            StmtKind::SendLabel { chan, label } => {
                self.send_msg(id, chan, MsgKind::Label(label.clone()), true)
            }
            StmtKind::SendShift(chan) => self.send_msg(id, chan, MsgKind::Shift, false),
            StmtKind::RecvVal { binder, chan, .. } => self.recv_val(id, chan, binder),
            StmtKind::RecvShift(chan) => self.recv_shift(id, chan),
            StmtKind::Switch { chan, arms } => self.recv_label(id, chan, arms),
            StmtKind::Wait(chan) => self.wait(id, chan),
            StmtKind::AsyncRecvVal { binder, chan, .. } => {
                self.request(id, chan, Request::Var(binder.clone()))
            }
            StmtKind::AsyncRecvShift(chan) => self.request(id, chan, Request::Shift),
            StmtKind::AsyncWait(chan) => self.request(id, chan, Request::End),
            StmtKind::SyncVar { chan, binder } => {
                self.sync_match(id, chan, &Request::Var(binder.clone()))
            }
            StmtKind::SyncShift(chan) => self.sync_match(id, chan, &Request::Shift),
            StmtKind::SyncEnd(chan) => self.sync_match(id, chan, &Request::End),
            StmtKind::Assign { .. }
            | StmtKind::If { .. }
            | StmtKind::While { .. }
            | StmtKind::Nop => Ok(()),
        }
    }

    /// Pop the head message of the queue behind `p`'s endpoint `c`, first
    /// absorbing any forward credits if `p` is the client.
    fn dequeue(&mut self, id: &ChanId, c: &str) -> Result<(ChanId, Msg), EngineError> {
        let p = self.procs.get(id).expect("acting process exists");
        let ep = p.endpoint(c)?;
        let role = ep.role;
        let qid = self.resolve(&ep.id);
        let q = self.queues.get_mut(&qid).ok_or_else(|| {
            EngineError::ProtocolViolation(format!("channel ${qid} has no queue"))
        })?;
        let credits = if role == Role::Client {
            std::mem::take(&mut q.credits)
        } else {
            Vec::new()
        };
        let msg = q
            .buffer
            .pop_front()
            .ok_or_else(|| EngineError::ProtocolViolation(format!("empty queue on ${qid}")))?;
        let p = self.procs.get_mut(id).expect("acting process exists");
        for cr in credits {
            p.stamp.span = p.stamp.span.max(cr.stamp.span);
            p.stamp.work += cr.stamp.work;
            self.event.consumed.push(cr.id);
        }
        // the endpoint now names the resolved queue
        p.endpoint_mut(c)?.id = qid.clone();
        self.event.consumed.push(msg.id);
        self.deliveries.push(Delivery {
            chan: qid.clone(),
            kind: msg.kind.name(),
            payload: msg.kind.payload(),
        });
        Ok((qid, msg))
    }

    fn enqueue(
        &mut self,
        id: &ChanId,
        c: &str,
        kind: MsgKind,
        stamp: Stamp,
    ) -> Result<(), EngineError> {
        let p = self.procs.get(id).expect("acting process exists");
        let qid = self.resolve(&p.endpoint(c)?.id);
        let msg = self.fresh_msg(kind, stamp);
        let q = self.queues.get_mut(&qid).ok_or_else(|| {
            EngineError::ProtocolViolation(format!("channel ${qid} has no queue"))
        })?;
        if matches!(
            q.buffer.back(),
            Some(Msg {
                kind: MsgKind::End | MsgKind::Fwd(_),
                ..
            })
        ) {
            return Err(EngineError::ProtocolViolation(format!(
                "message enqueued after a terminal message on ${qid}"
            )));
        }
        q.buffer.push_back(msg);
        Ok(())
    }

    fn proc_mut(&mut self, id: &ChanId) -> &mut Proc {
        self.procs.get_mut(id).expect("acting process exists")
    }

    fn terminate(&mut self, id: &ChanId) {
        if let Some(p) = self.procs.remove(id) {
            self.finished.insert(id.clone(), p.stamp);
        }
    }

    /// Rule fwd_r: the client of a forwarded channel retargets to the new
    /// provider, taking `max` of spans and adding the forwarder's work.
    fn fwd_r(&mut self, id: &ChanId, c: &str) -> Result<(), EngineError> {
        let (qid, msg) = self.dequeue(id, c)?;
        let MsgKind::Fwd(target) = msg.kind else {
            return Err(EngineError::ProtocolViolation("expected a forward".into()));
        };
        if self.queues.get(&qid).is_some_and(|q| q.buffer.is_empty()) {
            self.queues.remove(&qid);
        }
        let target = self.resolve(&target);
        let p = self.proc_mut(id);
        p.stamp.span = p.stamp.span.max(msg.stamp.span);
        p.stamp.work += msg.stamp.work;
        p.endpoint_mut(c)?.id = target;
        Ok(())
    }

    /// Rule fwd_s. A provider that forwards while it is the sender appends a
    /// `fwd` message. If the client is the sender, the queue is spliced onto
    /// the target and the forward becomes a credit the client absorbs at its
    /// next dequeue.
    fn fwd_s(&mut self, id: &ChanId, offered: &str, client: &str) -> Result<(), EngineError> {
        let p = self.procs.get(id).expect("acting process exists");
        let d = p.endpoint(offered)?;
        let e = p.endpoint(client)?;
        if d.role != Role::Provider || e.role != Role::Client {
            return Err(EngineError::ProtocolViolation(format!(
                "forward ${offered} = ${client} with wrong endpoint roles"
            )));
        }
        if !d.requests.is_empty() || !e.requests.is_empty() {
            return Err(EngineError::ProtocolViolation(
                "forward with unsynchronized requests".into(),
            ));
        }
        let did = d.id.clone();
        let eid = self.resolve(&e.id);
        let stamp = p.stamp;
        let direction = self.queues.get(&did).map(|q| q.direction).ok_or_else(|| {
            EngineError::ProtocolViolation(format!("channel ${did} has no queue"))
        })?;
        match direction {
            Direction::ToClient => {
                self.enqueue(id, offered, MsgKind::Fwd(eid.clone()), stamp)?;
            }
            Direction::ToProvider => {
                let credit = self.fresh_msg(MsgKind::Fwd(eid.clone()), stamp);
                let dq = self.queues.remove(&did).expect("queue checked above");
                let eq = self.queues.get_mut(&eid).ok_or_else(|| {
                    EngineError::ProtocolViolation(format!("channel ${eid} has no queue"))
                })?;
                if eq.direction != Direction::ToProvider {
                    return Err(EngineError::ProtocolViolation(format!(
                        "forward joins ${did} and ${eid} with opposite directions"
                    )));
                }
                eq.buffer.extend(dq.buffer);
                eq.credits.extend(dq.credits);
                eq.credits.push(credit);
                self.aliases.insert(did, eid);
            }
        }
        self.terminate(id);
        Ok(())
    }

    fn spawn(
        &mut self,
        id: &ChanId,
        chan: &str,
        proc_name: &str,
        args: &[Expr],
    ) -> Result<(), EngineError> {
        let def = self
            .prog
            .proc(proc_name)
            .ok_or_else(|| EngineError::UnknownProc(proc_name.to_string()))?;
        if def.params.len() != args.len() {
            return Err(EngineError::TypeError(format!(
                "`{proc_name}` expects {} arguments",
                def.params.len()
            )));
        }
        let p = self.proc_mut(id);
        let mut vars = BTreeMap::new();
        let mut chans = BTreeMap::new();
        for (param, arg) in def.params.iter().zip(args) {
            match (param, arg) {
                (Param::Chan { name, .. }, Expr::Chan(c)) => {
                    let ep = p
                        .chans
                        .remove(c)
                        .ok_or_else(|| EngineError::UnboundChannel(c.clone()))?;
                    chans.insert(name.clone(), ep);
                }
                (Param::Val { name, .. }, e) => {
                    vars.insert(name.clone(), eval(&p.vars, e)?);
                }
                (Param::Chan { name, .. }, _) => {
                    return Err(EngineError::TypeError(format!(
                        "`{name}` expects a channel"
                    )))
                }
            }
        }
        p.children += 1;
        let child = p.id.child(p.children);
        let stamp = Stamp::new(p.stamp.span, 0);
        let tail = chan == p.offered;
        p.advance();
        if tail {
            // `$offered = P(...)`: spawn, then forward the offered channel
            const TAIL: &str = "%tail";
            p.chans
                .insert(TAIL.to_string(), Endpoint::new(child.clone(), Role::Client));
            let fwd = Stmt::new(StmtKind::Forward {
                offered: chan.to_string(),
                client: TAIL.to_string(),
            });
            p.frames.push(Frame::Seq {
                block: Arc::from(vec![fwd]),
                pc: 0,
            });
        } else {
            p.chans
                .insert(chan.to_string(), Endpoint::new(child.clone(), Role::Client));
        }
        self.event.child = Some(child.clone());
        self.create(child, proc_name, vars, chans, stamp)
    }

    fn close(&mut self, id: &ChanId, c: &str) -> Result<(), EngineError> {
        let p = self.proc_mut(id);
        let ep = p.endpoint(c)?;
        if ep.role != Role::Provider {
            return Err(EngineError::ProtocolViolation(format!(
                "close of client channel ${c}"
            )));
        }
        if !ep.requests.is_empty() {
            return Err(EngineError::ProtocolViolation(
                "close with unsynchronized requests".into(),
            ));
        }
        p.stamp.tick();
        let stamp = p.stamp;
        self.total_work += 1;
        self.enqueue(id, c, MsgKind::End, stamp)?;
        self.terminate(id);
        Ok(())
    }

    /// Report for the current configuration.
    pub fn report(&self, outcome: Outcome) -> RunReport {
        let mut stamps: BTreeMap<&ChanId, Stamp> =
            self.finished.iter().map(|(k, v)| (k, *v)).collect();
        for p in self.procs.values() {
            stamps.insert(&p.id, p.stamp);
        }
        let span = stamps.values().map(|s| s.span).max().unwrap_or(0);
        let root_work = stamps.get(&ChanId::root()).map(|s| s.work).unwrap_or(0);
        RunReport {
            span,
            total_work: self.total_work,
            root_work,
            steps: self.steps,
            outcome,
            processes: stamps
                .into_iter()
                .map(|(c, s)| ProcReport {
                    chan: c.clone(),
                    span: s.span,
                    work: s.work,
                })
                .collect(),
            error: self.error.as_ref().map(|e| e.to_string()),
        }
    }

    /// Outcome if no further step is taken.
    pub fn outcome(&self) -> Outcome {
        if self.error.is_some() {
            return Outcome::RuntimeError;
        }
        if self.procs.is_empty() {
            return Outcome::Quiescent;
        }
        if self.enabled().is_empty() {
            Outcome::Deadlock
        } else {
            Outcome::StepLimit
        }
    }

    /// Messages other than the root's final `end` left undelivered.
    pub fn undelivered(&self) -> Vec<(ChanId, &Msg)> {
        self.queues
            .iter()
            .flat_map(|(id, q)| q.buffer.iter().map(move |m| (id.clone(), m)))
            .filter(|(id, m)| !(*id == ChanId::root() && m.kind == MsgKind::End))
            .collect()
    }
}

fn stmt_chan(kind: &StmtKind) -> Option<&str> {
    Some(match kind {
        StmtKind::SendVal { chan, .. }
        | StmtKind::SendLabel { chan, .. }
        | StmtKind::RecvVal { chan, .. }
        | StmtKind::Switch { chan, .. }
        | StmtKind::SyncVar { chan, .. }
        | StmtKind::AsyncRecvVal { chan, .. } => chan,
        StmtKind::SendShift(c)
        | StmtKind::RecvShift(c)
        | StmtKind::Wait(c)
        | StmtKind::SyncShift(c)
        | StmtKind::SyncEnd(c)
        | StmtKind::AsyncRecvShift(c)
        | StmtKind::AsyncWait(c) => c,
        _ => return None,
    })
}

fn bind(p: &mut Proc, binder: &Binder, v: Value) -> Result<(), EngineError> {
    match (binder, v) {
        (Binder::Var(x), v @ (Value::Int(_) | Value::Bool(_))) => {
            p.vars.insert(x.clone(), v);
        }
        (Binder::Chan(d), Value::Chan(id)) => {
            p.chans.insert(d.clone(), Endpoint::new(id, Role::Client));
        }
        (b, v) => {
            return Err(EngineError::TypeError(format!("cannot bind {v} to `{b}`")));
        }
    }
    Ok(())
}

pub fn eval(vars: &BTreeMap<String, Value>, e: &Expr) -> Result<Value, EngineError> {
    Ok(match e {
        Expr::Int(n) => Value::Int(*n),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Var(v) => vars
            .get(v)
            .cloned()
            .ok_or_else(|| EngineError::UnboundVariable(v.clone()))?,
        Expr::Chan(c) => {
            return Err(EngineError::TypeError(format!(
                "channel ${c} used as a value"
            )))
        }
        Expr::Unary(UnOp::Neg, inner) => Value::Int(
            int(eval(vars, inner)?)?
                .checked_neg()
                .ok_or(EngineError::Overflow)?,
        ),
        Expr::Unary(UnOp::Not, inner) => Value::Bool(!boolean(eval(vars, inner)?)?),
        Expr::Binary(BinOp::And, l, r) => {
            Value::Bool(boolean(eval(vars, l)?)? && boolean(eval(vars, r)?)?)
        }
        Expr::Binary(BinOp::Or, l, r) => {
            Value::Bool(boolean(eval(vars, l)?)? || boolean(eval(vars, r)?)?)
        }
        Expr::Binary(op, l, r) => {
            let a = eval(vars, l)?;
            let b = eval(vars, r)?;
            match op {
                BinOp::Eq => Value::Bool(a == b),
                BinOp::Ne => Value::Bool(a != b),
                _ => {
                    let (x, y) = (int(a)?, int(b)?);
                    match op {
                        BinOp::Add => Value::Int(x.checked_add(y).ok_or(EngineError::Overflow)?),
                        BinOp::Sub => Value::Int(x.checked_sub(y).ok_or(EngineError::Overflow)?),
                        BinOp::Mul => Value::Int(x.checked_mul(y).ok_or(EngineError::Overflow)?),
                        BinOp::Div | BinOp::Mod if y == 0 => {
                            return Err(EngineError::DivisionByZero)
                        }
                        BinOp::Div => Value::Int(x.checked_div(y).ok_or(EngineError::Overflow)?),
                        BinOp::Mod => Value::Int(x.checked_rem(y).ok_or(EngineError::Overflow)?),
                        BinOp::Lt => Value::Bool(x < y),
                        BinOp::Le => Value::Bool(x <= y),
                        BinOp::Gt => Value::Bool(x > y),
                        BinOp::Ge => Value::Bool(x >= y),
                        BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or => unreachable!(),
                    }
                }
            }
        }
    })
}

fn int(v: Value) -> Result<i64, EngineError> {
    match v {
        Value::Int(n) => Ok(n),
        other => Err(EngineError::TypeError(format!(
            "expected int, found {other}"
        ))),
    }
}

fn boolean(v: Value) -> Result<bool, EngineError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(EngineError::TypeError(format!(
            "expected bool, found {other}"
        ))),
    }
}

fn eval_bool(vars: &BTreeMap<String, Value>, e: &Expr) -> Result<bool, EngineError> {
    boolean(eval(vars, e)?)
}

/// Settings for [`run`].
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub semantics: Semantics,
    pub policy: Policy,
    pub seed: u64,
    pub max_steps: u64,
    pub trace: bool,
    pub args: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn new(semantics: Semantics) -> Self {
        RunConfig {
            semantics,
            policy: Policy::RoundRobin,
            seed: 0,
            max_steps: DEFAULT_MAX_STEPS,
            trace: false,
            args: BTreeMap::new(),
        }
    }

    pub fn arg(mut self, name: &str, v: i64) -> Self {
        self.args.insert(name.to_string(), Value::Int(v));
        self
    }

    pub fn policy(mut self, policy: Policy, seed: u64) -> Self {
        self.policy = policy;
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub report: RunReport,
    pub deliveries: Vec<Delivery>,
    pub trace: Vec<TraceEvent>,
}

/// Run `prog` to quiescence, deadlock, error or the step limit.
pub fn run(prog: &Program, cfg: &RunConfig) -> RunResult {
    let mut m = match Machine::new(prog, cfg.semantics, &cfg.args) {
        Ok(m) => m,
        Err(e) => {
            return RunResult {
                report: RunReport {
                    span: 0,
                    total_work: 0,
                    root_work: 0,
                    steps: 0,
                    outcome: Outcome::RuntimeError,
                    processes: Vec::new(),
                    error: Some(e.to_string()),
                },
                deliveries: Vec::new(),
                trace: Vec::new(),
            }
        }
    };
    if cfg.trace {
        m.enable_trace();
    }
    let mut sched = cfg.policy.scheduler(cfg.seed);
    let outcome = run_machine(&mut m, sched.as_mut(), cfg.max_steps);
    RunResult {
        report: m.report(outcome),
        deliveries: m.deliveries.clone(),
        trace: m.take_trace(),
    }
}

/// Drive an existing machine with `sched`.
pub fn run_machine(m: &mut Machine<'_>, sched: &mut dyn Scheduler, max_steps: u64) -> Outcome {
    loop {
        if m.error.is_some() {
            return Outcome::RuntimeError;
        }
        if m.procs.is_empty() {
            return Outcome::Quiescent;
        }
        let enabled = m.enabled();
        if enabled.is_empty() {
            return Outcome::Deadlock;
        }
        if m.steps >= max_steps {
            return Outcome::StepLimit;
        }
        // faults are reported as soon as they become reachable, so the
        // outcome of an ill-formed program does not depend on the schedule
        let pick = match enabled
            .iter()
            .position(|i| matches!(i.rule, Rule::Fault(_)))
        {
            Some(f) => f,
            None => sched.pick(&enabled, m.steps).min(enabled.len() - 1),
        };
        if let Err(e) = m.step(&enabled[pick]) {
            return match e {
                EngineError::InternalBudget(_) => Outcome::StepLimit,
                _ => Outcome::RuntimeError,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse;

    const PING: &str = "
        typedef <?int> sink;
        typedef < > unit;
        sink $p pong() { int x = recv($p); shift = recv($p); close($p); }
        unit $c main() { sink $s = pong(); send($s, 7); send($s, shift); wait($s); close($c); }
    ";

    #[test]
    fn chan_ids_are_spawn_paths() {
        let c = ChanId::root().child(2).child(1);
        assert_eq!(c.to_string(), "0.2.1");
        assert_eq!(ChanId::parse("0.2.1"), Some(c));
    }

    #[test]
    fn empty_configuration_has_no_instances() {
        let p = parse("typedef < > unit; unit $c main() { close($c); }").unwrap();
        let mut m = Machine::new(&p, Semantics::Blocking, &BTreeMap::new()).unwrap();
        let e = m.enabled();
        assert_eq!(e.len(), 1);
        m.step(&e[0]).unwrap();
        assert!(m.enabled().is_empty());
        let r = m.report(m.outcome());
        assert_eq!(
            (r.span, r.total_work, r.outcome),
            (1, 1, Outcome::Quiescent)
        );
    }

    #[test]
    fn blocked_receiver_contributes_nothing() {
        let p = parse(PING).unwrap();
        let mut m = Machine::new(&p, Semantics::Blocking, &BTreeMap::new()).unwrap();
        let spawn = m.enabled();
        assert_eq!(spawn.len(), 1);
        m.step(&spawn[0]).unwrap();
        // child waits on an empty queue; only the parent's send is enabled
        let e = m.enabled();
        assert_eq!(
            e,
            vec![Instance {
                proc: ChanId::root(),
                rule: Rule::DataS
            }]
        );
    }

    #[test]
    fn ping_blocking_costs() {
        let p = parse(PING).unwrap();
        let r = run(&p, &RunConfig::new(Semantics::Blocking)).report;
        // parent send (1,1); child recv max(0,1)+1 = 2; child close (3,2);
        // parent wait max(1,3)+1 = 4, 1+2+1 = 4; parent close (5,5)
        assert_eq!((r.span, r.total_work, r.root_work), (5, 5, 5));
        assert_eq!(r.outcome, Outcome::Quiescent);
    }

    #[test]
    fn division_by_zero_is_a_runtime_error() {
        let p = parse("typedef < > unit; unit $c main() { int x = 1 / 0; close($c); }").unwrap();
        let r = run(&p, &RunConfig::new(Semantics::Blocking)).report;
        assert_eq!(r.outcome, Outcome::RuntimeError);
        assert_eq!(r.error.as_deref(), Some("division by zero"));
    }

    #[test]
    fn nonblocking_constructs_fault_under_blocking() {
        let p = parse(
            "typedef <!int> one; typedef < > unit;
             one $o f() { send($o, 1); close($o); }
             unit $c main() { one $d = f(); int x = async_recv($d); async_wait($d); sync($d, end); close($c); }",
        )
        .unwrap();
        let r = run(&p, &RunConfig::new(Semantics::Blocking)).report;
        assert_eq!(r.outcome, Outcome::RuntimeError);
        let r = run(&p, &RunConfig::new(Semantics::NonBlocking)).report;
        assert_eq!(r.outcome, Outcome::Quiescent);
    }
}

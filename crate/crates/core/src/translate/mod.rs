//! Blocking to non-blocking translation.
//!
//! Each receive becomes an asynchronous request, remembered in a table of
//! pending pairs. A `sync` is inserted only where a later statement needs
//! the requested value, needs to send on the channel, or ends the process.

mod sigma;

use std::sync::Arc;

use thiserror::Error;

pub use sigma::{
    check_exp, check_shift, generate_sync, generate_sync_ordered, sync_all, Pair, Sigma,
};

use crate::ir::{printer, visit, Binder, Block, Expr, Program, Request, Stmt, StmtKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslateError {
    #[error("input is not in blocking form: {0}")]
    NotBlocking(String),
    #[error("pair {0} is not pending")]
    NotPending(String),
}

/// Result of translating one statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransResult {
    pub stmts: Vec<Stmt>,
    pub sigma: Sigma,
    /// True when control never reaches the next statement.
    pub terminated: bool,
}

/// The table before and after one top-level statement of a process body,
/// with the statements emitted for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaStep {
    pub proc: String,
    pub line: u32,
    pub stmt: String,
    pub before: String,
    pub after: String,
}

/// Translate a whole program. Procedure signatures, choices and typedefs
/// are unchanged.
pub fn translate(prog: &Program) -> Result<Program, TranslateError> {
    translate_traced(prog).map(|(p, _)| p)
}

/// As [`translate`], also returning the table at every statement.
pub fn translate_traced(prog: &Program) -> Result<(Program, Vec<SigmaStep>), TranslateError> {
    if let Some(p) = prog
        .procs
        .iter()
        .find(|p| visit::stmts(&p.body).any(|s| s.kind.is_nonblocking()))
    {
        return Err(TranslateError::NotBlocking(format!(
            "process {} already uses asynchronous receives",
            p.name
        )));
    }
    let mut out = prog.clone();
    let mut steps = Vec::new();
    for p in &mut out.procs {
        let mut t = Translator {
            offered: Some(p.offered.clone()),
            trace: Some((p.name.clone(), &mut steps)),
        };
        let (stmts, _, _) = t.block(&p.body, Sigma::new())?;
        p.body = elide_nops(&Arc::from(stmts));
    }
    Ok((out, steps))
}

/// Translate one statement from table `sigma`. Without an offered channel,
/// spawns are never treated as tail calls.
pub fn translate_stmt(
    s: &Stmt,
    sigma: &Sigma,
    offered: Option<&str>,
) -> Result<TransResult, TranslateError> {
    let mut t = Translator {
        offered: offered.map(str::to_string),
        trace: None,
    };
    t.stmt(s, sigma.clone())
}

fn elide_nops(b: &Block) -> Block {
    visit::flat_map(b, &mut |s| match s.kind {
        StmtKind::Nop => vec![],
        _ => vec![s],
    })
}

struct Translator<'t> {
    offered: Option<String>,
    trace: Option<(String, &'t mut Vec<SigmaStep>)>,
}

/// Requests that must be matched before `name` is rebound: anything still
/// expected on the old endpoint and a pending request that would bind it.
fn check_rebind(sigma: &Sigma, name: &str) -> Vec<Pair> {
    let mut out = sigma.on(name);
    out.extend(sigma.binding(&Binder::Chan(name.to_string())));
    out
}

/// The request that will deliver channel `c` itself.
fn check_chan(sigma: &Sigma, c: &str) -> Vec<Pair> {
    sigma.binding(&Binder::Chan(c.to_string()))
}

fn rebind(sigma: &Sigma, b: &Binder) -> Vec<Pair> {
    match b {
        Binder::Var(_) => sigma.binding(b),
        Binder::Chan(c) => check_rebind(sigma, c),
    }
}

impl Translator<'_> {
    fn block(
        &mut self,
        b: &Block,
        mut sigma: Sigma,
    ) -> Result<(Vec<Stmt>, Sigma, bool), TranslateError> {
        let mut out = Vec::new();
        for s in b.iter() {
            let slot = self.trace.as_mut().map(|(proc, steps)| {
                steps.push(SigmaStep {
                    proc: proc.clone(),
                    line: s.loc.line,
                    stmt: printer::stmt_head(s),
                    before: sigma.to_string(),
                    after: String::new(),
                });
                steps.len() - 1
            });
            let r = self.stmt(s, sigma)?;
            if let (Some(i), Some((_, steps))) = (slot, self.trace.as_mut()) {
                steps[i].after = r.sigma.to_string();
            }
            out.extend(r.stmts);
            sigma = r.sigma;
            if r.terminated {
                return Ok((out, Sigma::new(), true));
            }
        }
        Ok((out, sigma, false))
    }

    fn stmt(&mut self, s: &Stmt, sigma: Sigma) -> Result<TransResult, TranslateError> {
        let keep = |kind: StmtKind| Stmt::at(kind, s.loc);
        let done = |stmts: Vec<Stmt>, sigma: Sigma, terminated: bool| TransResult {
            stmts,
            sigma,
            terminated,
        };
        match &s.kind {
            StmtKind::RecvVal { binder, decl, chan } => {
                let mut need = check_chan(&sigma, chan);
                need.extend(rebind(&sigma, binder));
                let (mut stmts, mut sigma) = generate_sync(&need, &sigma)?;
                stmts.push(keep(StmtKind::AsyncRecvVal {
                    binder: binder.clone(),
                    decl: decl.clone(),
                    chan: chan.clone(),
                }));
                sigma.push(chan, Request::Var(binder.clone()));
                Ok(done(stmts, sigma, false))
            }
            StmtKind::RecvShift(c) => {
                let (mut stmts, mut sigma) = generate_sync(&check_chan(&sigma, c), &sigma)?;
                stmts.push(keep(StmtKind::AsyncRecvShift(c.clone())));
                sigma.push(c, Request::Shift);
                Ok(done(stmts, sigma, false))
            }
            StmtKind::Wait(c) => {
                let (mut stmts, mut sigma) = generate_sync(&check_chan(&sigma, c), &sigma)?;
                stmts.push(keep(StmtKind::AsyncWait(c.clone())));
                sigma.push(c, Request::End);
                Ok(done(stmts, sigma, false))
            }
            StmtKind::Close(c) => {
                let (mut stmts, _) = generate_sync_ordered(&sync_all(&sigma), &sigma, Some(c))?;
                stmts.push(s.clone());
                Ok(done(stmts, Sigma::new(), true))
            }
            StmtKind::Forward { offered, .. } => {
                let (mut stmts, _) =
                    generate_sync_ordered(&sync_all(&sigma), &sigma, Some(offered))?;
                stmts.push(s.clone());
                Ok(done(stmts, Sigma::new(), true))
            }
            StmtKind::Spawn { chan, args, .. } => {
                if self.offered.as_deref() == Some(chan.as_str()) {
                    let (mut stmts, _) =
                        generate_sync_ordered(&sync_all(&sigma), &sigma, Some(chan))?;
                    stmts.push(s.clone());
                    return Ok(done(stmts, Sigma::new(), true));
                }
                let mut need: Vec<Pair> = args.iter().flat_map(|a| check_exp(&sigma, a)).collect();
                need.extend(check_rebind(&sigma, chan));
                let (mut stmts, sigma) = generate_sync(&need, &sigma)?;
                stmts.push(s.clone());
                Ok(done(stmts, sigma, false))
            }
            StmtKind::SendVal { chan, expr } => {
                let mut need = check_shift(&sigma, chan);
                need.extend(check_exp(&sigma, expr));
                need.extend(check_chan(&sigma, chan));
                let (mut stmts, sigma) = generate_sync(&need, &sigma)?;
                stmts.push(s.clone());
                Ok(done(stmts, sigma, false))
            }
            StmtKind::SendShift(chan) | StmtKind::SendLabel { chan, .. } => {
                let mut need = check_shift(&sigma, chan);
                need.extend(check_chan(&sigma, chan));
                let (mut stmts, sigma) = generate_sync(&need, &sigma)?;
                stmts.push(s.clone());
                Ok(done(stmts, sigma, false))
            }
            StmtKind::Assign { var, expr, .. } => {
                let mut need = check_exp(&sigma, expr);
                need.extend(sigma.binding(&Binder::Var(var.clone())));
                let (mut stmts, sigma) = generate_sync(&need, &sigma)?;
                stmts.push(s.clone());
                Ok(done(stmts, sigma, false))
            }
            StmtKind::Switch { chan, arms } => {
                let mut need = sigma.on(chan);
                need.extend(check_chan(&sigma, chan));
                let (mut stmts, sigma) = generate_sync(&need, &sigma)?;
                let mut outs = Vec::new();
                for a in arms {
                    outs.push(self.block(&a.body, sigma.clone())?);
                }
                let (bodies, sigma, terminated) = join(outs)?;
                let mut arms = arms.clone();
                for (a, b) in arms.iter_mut().zip(bodies) {
                    a.body = Arc::from(b);
                }
                stmts.push(keep(StmtKind::Switch {
                    chan: chan.clone(),
                    arms,
                }));
                Ok(done(stmts, sigma, terminated))
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let (mut stmts, sigma) = generate_sync(&check_exp(&sigma, cond), &sigma)?;
                let t = self.block(then_body, sigma.clone())?;
                let e = self.block(else_body, sigma)?;
                let (mut bodies, sigma, terminated) = join(vec![t, e])?;
                let else_body = Arc::from(bodies.pop().unwrap_or_default());
                let then_body = Arc::from(bodies.pop().unwrap_or_default());
                stmts.push(keep(StmtKind::If {
                    cond: cond.clone(),
                    then_body,
                    else_body,
                }));
                Ok(done(stmts, sigma, terminated))
            }
            StmtKind::While { cond, body } => {
                let forever = *cond == Expr::Bool(true);
                let (mut stmts, entry) = generate_sync(&check_exp(&sigma, cond), &sigma)?;
                let mark = self.trace.as_ref().map_or(0, |(_, steps)| steps.len());
                let (b, after, term) = self.block(body, entry.clone())?;
                if term || after.same_queues(&entry) {
                    stmts.push(keep(StmtKind::While {
                        cond: cond.clone(),
                        body: Arc::from(b),
                    }));
                    return Ok(done(stmts, entry, forever));
                }
                // the body leaves requests behind: enter and leave every
                // iteration with nothing pending
                if let Some((_, steps)) = self.trace.as_mut() {
                    steps.truncate(mark);
                }
                let (pre, _) = generate_sync(&sync_all(&entry), &entry)?;
                stmts.extend(pre);
                let (mut b, after, term) = self.block(body, Sigma::new())?;
                if !term {
                    let (post, _) = generate_sync(&sync_all(&after), &after)?;
                    b.extend(post);
                }
                stmts.push(keep(StmtKind::While {
                    cond: cond.clone(),
                    body: Arc::from(b),
                }));
                Ok(done(stmts, Sigma::new(), forever))
            }
            StmtKind::Nop => Ok(done(vec![s.clone()], sigma, false)),
            k => Err(TranslateError::NotBlocking(format!(
                "line {}: {}",
                s.loc.line,
                printer::stmt_head(&Stmt::new(k.clone()))
            ))),
        }
    }
}

/// Bring the tables at the ends of the live arms to their common part,
/// appending syncs where an arm has more pending. Forcing a late request
/// drains earlier ones on the same channel, so repeat until stable.
fn join(
    mut arms: Vec<(Vec<Stmt>, Sigma, bool)>,
) -> Result<(Vec<Vec<Stmt>>, Sigma, bool), TranslateError> {
    loop {
        let live: Vec<&Sigma> = arms.iter().filter(|a| !a.2).map(|a| &a.1).collect();
        let Some(first) = live.first() else {
            return Ok((arms.into_iter().map(|a| a.0).collect(), Sigma::new(), true));
        };
        let common: Vec<Pair> = first
            .pairs()
            .iter()
            .filter(|p| live.iter().all(|s| s.contains(p)))
            .cloned()
            .collect();
        let common = Sigma::from_pairs(common);
        if live.iter().all(|s| s.same_queues(&common)) {
            return Ok((arms.into_iter().map(|a| a.0).collect(), common, false));
        }
        for (stmts, sigma, term) in arms.iter_mut() {
            if *term || sigma.same_queues(&common) {
                continue;
            }
            let extra: Vec<Pair> = sigma
                .pairs()
                .iter()
                .filter(|p| !common.contains(p))
                .cloned()
                .collect();
            let (more, rest) = generate_sync(&extra, sigma)?;
            stmts.extend(more);
            *sigma = rest;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parser::parse;
    use crate::ir::printer::print;

    fn body(p: &Program, name: &str) -> String {
        let mut s = String::new();
        for st in p.proc(name).unwrap().body.iter() {
            s.push_str(&printer::stmt_head(st));
            s.push('\n');
        }
        s
    }

    fn translate_src(src: &str) -> Program {
        translate(&parse(src).unwrap()).unwrap()
    }

    #[test]
    fn receive_becomes_request() {
        let s = Stmt::new(StmtKind::RecvVal {
            binder: Binder::Var("y".into()),
            decl: None,
            chan: "q".into(),
        });
        let r = translate_stmt(&s, &Sigma::new(), None).unwrap();
        assert_eq!(r.stmts.len(), 2);
        assert_eq!(r.stmts[0].kind, StmtKind::Nop);
        assert!(matches!(r.stmts[1].kind, StmtKind::AsyncRecvVal { .. }));
        assert_eq!(r.sigma.to_string(), "{($q, y)}");
    }

    #[test]
    fn closing_syncs_everything() {
        let s = Stmt::new(StmtKind::Close("q".into()));
        let sigma = Sigma::from_pairs(vec![
            ("q".into(), Request::Shift),
            ("r".into(), Request::End),
        ]);
        let r = translate_stmt(&s, &sigma, Some("q")).unwrap();
        let heads: Vec<String> = r.stmts.iter().map(printer::stmt_head).collect();
        assert_eq!(heads, ["sync($r, end);", "sync($q, shift);", "close($q);"]);
        assert!(r.terminated && r.sigma.is_empty());
    }

    #[test]
    fn rejects_nonblocking_input() {
        let src =
            "typedef <?int> t;\nt $p main() { int y = async_recv($p); sync($p, y); close($p); }\n";
        let prog = parse(src).unwrap();
        assert!(matches!(
            translate(&prog),
            Err(TranslateError::NotBlocking(_))
        ));
    }

    #[test]
    fn send_forces_through_shift_only() {
        let src = "typedef <?int; ?int; !int> t;\n\
                   t $p main() { int a = recv($p); int b = recv($p); shift = recv($p); send($p, 1); close($p); }\n";
        let out = translate_src(src);
        assert_eq!(
            body(&out, "main"),
            "int a = async_recv($p);\nint b = async_recv($p);\nshift = async_recv($p);\n\
             sync($p, shift);\nsend($p, 1);\nclose($p);\n"
        );
    }

    #[test]
    fn nops_are_elided() {
        let out = translate_src("typedef < > unit;\nunit $c main() { int x = 1; close($c); }\n");
        assert!(!print(&out).contains("nop"));
    }

    #[test]
    fn branch_tables_are_reconciled() {
        let sigma = Sigma::from_pairs(vec![("q".into(), Request::Var(Binder::Var("y".into())))]);
        let a = (vec![], sigma.clone(), false);
        let b = (vec![], Sigma::new(), false);
        let (bodies, common, term) = join(vec![a, b]).unwrap();
        assert!(!term && common.is_empty());
        assert_eq!(bodies[0].len(), 1);
        assert!(bodies[1].is_empty());

        let dead = (vec![], Sigma::new(), true);
        let (_, common, term) = join(vec![(vec![], sigma.clone(), false), dead]).unwrap();
        assert!(!term);
        assert_eq!(common, sigma);
    }
}

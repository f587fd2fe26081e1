//! The request table and its helper functions.

use std::collections::BTreeMap;
use std::fmt;

use crate::ir::{Binder, Expr, Request, Stmt, StmtKind};

use super::TranslateError;

/// `(channel, request)`; channel names are stored without `$`.
pub type Pair = (String, Request);

/// Outstanding receive requests of one process, in issue order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sigma {
    pairs: Vec<Pair>,
}

impl Sigma {
    pub fn new() -> Self {
        Sigma::default()
    }

    pub fn from_pairs(pairs: Vec<Pair>) -> Self {
        Sigma { pairs }
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn push(&mut self, chan: &str, r: Request) {
        self.pairs.push((chan.to_string(), r));
    }

    pub fn contains(&self, p: &Pair) -> bool {
        self.pairs.contains(p)
    }

    /// Pending pairs on `chan`, in issue order.
    pub fn on(&self, chan: &str) -> Vec<Pair> {
        self.pairs
            .iter()
            .filter(|(c, _)| c == chan)
            .cloned()
            .collect()
    }

    /// Pairs whose request will bind `b`.
    pub fn binding(&self, b: &Binder) -> Vec<Pair> {
        self.pairs
            .iter()
            .filter(|(_, r)| matches!(r, Request::Var(x) if x == b))
            .cloned()
            .collect()
    }

    /// Per-channel request sequences. Two tables with the same projection
    /// describe the same runtime request queues.
    pub fn per_channel(&self) -> BTreeMap<&str, Vec<&Request>> {
        let mut m: BTreeMap<&str, Vec<&Request>> = BTreeMap::new();
        for (c, r) in &self.pairs {
            m.entry(c.as_str()).or_default().push(r);
        }
        m
    }

    pub fn same_queues(&self, other: &Sigma) -> bool {
        self.per_channel() == other.per_channel()
    }

    fn position(&self, p: &Pair) -> Option<usize> {
        self.pairs.iter().position(|q| q == p)
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (c, r)) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "(${c}, {r})")?;
        }
        f.write_str("}")
    }
}

/// Every pending pair, in issue order.
pub fn sync_all(sigma: &Sigma) -> Vec<Pair> {
    sigma.pairs.clone()
}

/// Pairs that must be synchronized before the holder may send on `chan`:
/// everything up to and including a pending shift request.
pub fn check_shift(sigma: &Sigma, chan: &str) -> Vec<Pair> {
    let on = sigma.on(chan);
    match on.iter().rposition(|(_, r)| *r == Request::Shift) {
        Some(i) => on[..=i].to_vec(),
        None => Vec::new(),
    }
}

/// Pairs that must be synchronized before `e` can be evaluated: requests
/// binding a variable of `e`, and for channel operands every request on the
/// channel plus the request that binds it.
pub fn check_exp(sigma: &Sigma, e: &Expr) -> Vec<Pair> {
    let mut out = Vec::new();
    for v in e.vars() {
        out.extend(sigma.binding(&Binder::Var(v.to_string())));
    }
    for c in e.chans() {
        out.extend(sigma.binding(&Binder::Chan(c.to_string())));
        out.extend(sigma.on(c));
    }
    out
}

/// Emit the syncs forcing `pairs`: one statement per channel, targeting the
/// latest forced request, since a sync drains everything before its target.
/// Channels are synchronized in issue order of their targets, except that
/// `last` (the channel being closed or forwarded) goes last. Nothing to do
/// yields a single `nop`.
pub fn generate_sync_ordered(
    pairs: &[Pair],
    sigma: &Sigma,
    last: Option<&str>,
) -> Result<(Vec<Stmt>, Sigma), TranslateError> {
    let mut targets: BTreeMap<&str, usize> = BTreeMap::new();
    for p in pairs {
        let i = sigma
            .position(p)
            .ok_or_else(|| TranslateError::NotPending(format!("(${}, {})", p.0, p.1)))?;
        let t = targets.entry(p.0.as_str()).or_insert(i);
        *t = (*t).max(i);
    }
    if targets.is_empty() {
        return Ok((vec![Stmt::new(StmtKind::Nop)], sigma.clone()));
    }
    let mut order: Vec<(&str, usize)> = targets.into_iter().collect();
    order.sort_by_key(|&(c, i)| (Some(c) == last, i));
    let mut rest = sigma.clone();
    let mut stmts = Vec::new();
    for (chan, i) in order {
        let (_, target) = &sigma.pairs[i];
        stmts.push(Stmt::new(sync_stmt(chan, target)));
        let drained: Vec<Pair> = sigma.pairs[..=i]
            .iter()
            .filter(|(c, _)| c == chan)
            .cloned()
            .collect();
        rest.pairs.retain(|p| !drained.contains(p));
    }
    Ok((stmts, rest))
}

pub fn generate_sync(pairs: &[Pair], sigma: &Sigma) -> Result<(Vec<Stmt>, Sigma), TranslateError> {
    generate_sync_ordered(pairs, sigma, None)
}

fn sync_stmt(chan: &str, r: &Request) -> StmtKind {
    let chan = chan.to_string();
    match r {
        Request::Var(b) => StmtKind::SyncVar {
            chan,
            binder: b.clone(),
        },
        Request::Shift => StmtKind::SyncShift(chan),
        Request::End => StmtKind::SyncEnd(chan),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::BinOp;

    fn var(x: &str) -> Request {
        Request::Var(Binder::Var(x.into()))
    }

    fn pair(c: &str, r: Request) -> Pair {
        (c.to_string(), r)
    }

    #[test]
    fn sync_all_lists_in_issue_order() {
        assert!(sync_all(&Sigma::new()).is_empty());
        let s = Sigma::from_pairs(vec![pair("q", Request::Shift), pair("r", Request::End)]);
        assert_eq!(
            sync_all(&s),
            vec![pair("q", Request::Shift), pair("r", Request::End)]
        );
    }

    #[test]
    fn empty_generate_is_nop() {
        let s = Sigma::from_pairs(vec![pair("q", var("y"))]);
        let (stmts, rest) = generate_sync(&[], &s).unwrap();
        assert_eq!(stmts, vec![Stmt::new(StmtKind::Nop)]);
        assert_eq!(rest, s);
    }

    #[test]
    fn one_sync_per_channel() {
        let s = Sigma::from_pairs(vec![pair("q", var("y")), pair("q", Request::Shift)]);
        let (stmts, rest) = generate_sync(&[pair("q", Request::Shift)], &s).unwrap();
        assert_eq!(stmts, vec![Stmt::new(StmtKind::SyncShift("q".into()))]);
        assert!(rest.is_empty());
    }

    #[test]
    fn pair_must_be_pending() {
        assert!(generate_sync(&[pair("q", Request::End)], &Sigma::new()).is_err());
    }

    #[test]
    fn closed_channel_is_synchronized_last() {
        let s = Sigma::from_pairs(vec![pair("q", Request::Shift), pair("r", Request::End)]);
        let (stmts, _) = generate_sync_ordered(&sync_all(&s), &s, Some("q")).unwrap();
        assert_eq!(
            stmts,
            vec![
                Stmt::new(StmtKind::SyncEnd("r".into())),
                Stmt::new(StmtKind::SyncShift("q".into()))
            ]
        );
    }

    #[test]
    fn shift_and_expression_checks() {
        let s = Sigma::from_pairs(vec![pair("q", Request::Shift)]);
        assert_eq!(check_shift(&s, "q"), vec![pair("q", Request::Shift)]);
        assert!(check_shift(&Sigma::new(), "q").is_empty());
        let r = Sigma::from_pairs(vec![pair("r", Request::Shift)]);
        assert!(check_shift(&r, "q").is_empty());

        let s = Sigma::from_pairs(vec![pair("q", var("y"))]);
        let e = Expr::binary(BinOp::Add, Expr::Var("y".into()), Expr::Int(1));
        assert_eq!(check_exp(&s, &e), vec![pair("q", var("y"))]);
        assert!(check_exp(&s, &Expr::Int(42)).is_empty());

        let s = Sigma::from_pairs(vec![pair("q", var("y")), pair("q", var("z"))]);
        assert_eq!(
            check_exp(&s, &Expr::Var("z".into())),
            vec![pair("q", var("z"))]
        );
        let (stmts, rest) = generate_sync(&check_exp(&s, &Expr::Var("z".into())), &s).unwrap();
        assert_eq!(stmts.len(), 1);
        assert!(rest.is_empty());
    }

    #[test]
    fn channel_operand_forces_its_requests() {
        let s = Sigma::from_pairs(vec![
            pair("a", Request::Var(Binder::Chan("d".into()))),
            pair("d", Request::End),
        ]);
        let got = check_exp(&s, &Expr::Chan("d".into()));
        assert_eq!(got.len(), 2);
    }
}

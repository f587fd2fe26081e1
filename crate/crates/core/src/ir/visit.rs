//! Traversal helpers over nested statement blocks.

use std::sync::Arc;

use super::{Block, Stmt, StmtKind};

/// Pre-order iterator over every statement of a block, nested ones included.
pub fn stmts(block: &Block) -> impl Iterator<Item = &Stmt> {
    let mut out = Vec::new();
    walk(block, &mut out);
    out.into_iter()
}

fn walk<'a>(block: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
    for s in block {
        out.push(s);
        for child in children(s) {
            walk(child, out);
        }
    }
}

/// Nested blocks of a statement, in source order.
pub fn children(s: &Stmt) -> Vec<&Block> {
    match &s.kind {
        StmtKind::Switch { arms, .. } => arms.iter().map(|a| &a.body).collect(),
        StmtKind::If {
            then_body,
            else_body,
            ..
        } => vec![then_body, else_body],
        StmtKind::While { body, .. } => vec![body],
        _ => Vec::new(),
    }
}

/// Address of a statement: alternating (index in block, child block index)
/// steps, ending with the index of the statement itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StmtPath(pub Vec<(usize, usize)>, pub usize);

/// Paths of every statement in pre-order.
pub fn paths(block: &Block) -> Vec<StmtPath> {
    let mut out = Vec::new();
    collect_paths(block, &mut Vec::new(), &mut out);
    out
}

fn collect_paths(block: &[Stmt], prefix: &mut Vec<(usize, usize)>, out: &mut Vec<StmtPath>) {
    for (i, s) in block.iter().enumerate() {
        out.push(StmtPath(prefix.clone(), i));
        for (c, child) in children(s).into_iter().enumerate() {
            prefix.push((i, c));
            collect_paths(child, prefix, out);
            prefix.pop();
        }
    }
}

pub fn get<'a>(block: &'a Block, path: &StmtPath) -> Option<&'a Stmt> {
    let mut cur: &Block = block;
    for &(i, c) in &path.0 {
        cur = children(cur.get(i)?).into_iter().nth(c)?;
    }
    cur.get(path.1)
}

/// Copy of `block` with the statement at `path` removed.
pub fn remove(block: &Block, path: &StmtPath) -> Option<Block> {
    edit(block, &path.0, &mut |stmts: &mut Vec<Stmt>| {
        if path.1 < stmts.len() {
            stmts.remove(path.1);
            true
        } else {
            false
        }
    })
}

fn edit(
    block: &Block,
    prefix: &[(usize, usize)],
    f: &mut dyn FnMut(&mut Vec<Stmt>) -> bool,
) -> Option<Block> {
    let mut stmts: Vec<Stmt> = block.to_vec();
    match prefix.split_first() {
        None => {
            if !f(&mut stmts) {
                return None;
            }
        }
        Some((&(i, c), rest)) => {
            let s = stmts.get_mut(i)?;
            let slot: &mut Block = match (&mut s.kind, c) {
                (StmtKind::Switch { arms, .. }, c) => &mut arms.get_mut(c)?.body,
                (StmtKind::If { then_body, .. }, 0) => then_body,
                (StmtKind::If { else_body, .. }, 1) => else_body,
                (StmtKind::While { body, .. }, 0) => body,
                _ => return None,
            };
            *slot = edit(slot, rest, f)?;
        }
    }
    Some(Arc::from(stmts))
}

/// Rebuild a block bottom-up, replacing each statement by zero or more
/// statements produced by `f`.
pub fn flat_map(block: &Block, f: &mut dyn FnMut(Stmt) -> Vec<Stmt>) -> Block {
    let mut out = Vec::with_capacity(block.len());
    for s in block.iter() {
        let mut s = s.clone();
        match &mut s.kind {
            StmtKind::Switch { arms, .. } => {
                for a in arms.iter_mut() {
                    a.body = flat_map(&a.body, f);
                }
            }
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                *then_body = flat_map(then_body, f);
                *else_body = flat_map(else_body, f);
            }
            StmtKind::While { body, .. } => *body = flat_map(body, f),
            _ => {}
        }
        out.extend(f(s));
    }
    Arc::from(out)
}

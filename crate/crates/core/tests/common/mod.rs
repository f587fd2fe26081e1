#![allow(dead_code)]

use std::collections::HashMap;
use std::fmt::Write;
use std::path::PathBuf;

use sessionspan::bench::{load_cases, BenchCase};
use sessionspan::engine::{ChanId, TraceEvent};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn cases() -> Vec<BenchCase> {
    load_cases(&corpus_dir()).expect("corpus manifest loads")
}

pub fn source(case: &BenchCase) -> String {
    std::fs::read_to_string(corpus_dir().join(&case.file)).expect("corpus file reads")
}

/// Span and work recomputed from a trace as a longest path: each event
/// depends on the previous event of its process, on the events that
/// produced the messages it consumed and, for a process's first event, on
/// the spawn that created it. Costed events weigh one.
pub fn dag_costs(trace: &[TraceEvent]) -> Result<(u64, u64), String> {
    let mut at: HashMap<ChanId, u64> = HashMap::new();
    let mut msgs: HashMap<u64, u64> = HashMap::new();
    let (mut span, mut work) = (0, 0);
    for ev in trace {
        let mut v = at.get(&ev.proc).copied().unwrap_or(0);
        for id in &ev.consumed {
            let m = msgs
                .get(id)
                .ok_or_else(|| format!("step {}: message {id} never produced", ev.step))?;
            v = v.max(*m);
        }
        if ev.rule.is_costed() {
            v += 1;
            work += 1;
        }
        if v != ev.span {
            return Err(format!(
                "step {} ({:?}): engine span {}, longest path {v}",
                ev.step, ev.rule, ev.span
            ));
        }
        if let Some(id) = ev.produced {
            msgs.insert(id, v);
        }
        if let Some(c) = &ev.child {
            at.insert(c.clone(), v);
        }
        at.insert(ev.proc.clone(), v);
        span = span.max(v);
    }
    Ok((span, work))
}

/// A random fork/join tree: leaves send a constant, inner nodes collect
/// their children in a random interleaving.
#[derive(Clone, Debug)]
pub enum Tree {
    Leaf(i64),
    Node {
        kids: Vec<Tree>,
        /// Drives the interleaving of spawn, receive and wait per child.
        picks: Vec<u8>,
        /// Use each received value right away.
        eager: bool,
        /// Hand the last child over by a tail call instead of receiving it.
        tail: bool,
    },
}

impl Tree {
    pub fn procs(&self) -> usize {
        match self {
            Tree::Leaf(_) => 1,
            Tree::Node { kids, .. } => 1 + kids.iter().map(Tree::procs).sum::<usize>(),
        }
    }
}

/// Render a tree as a program; process `pK` implements node K in preorder.
pub fn tree_program(t: &Tree) -> String {
    let mut out = String::from("typedef <!int> num;\ntypedef < > unit;\n\n");
    let mut next = 0;
    emit(t, &mut next, &mut out);
    out.push_str(
        "unit $c main() {\n  num $t = p0();\n  int v = recv($t);\n  wait($t);\n  close($c);\n}\n",
    );
    out
}

fn emit(t: &Tree, next: &mut usize, out: &mut String) -> usize {
    let me = *next;
    *next += 1;
    match t {
        Tree::Leaf(v) => {
            writeln!(
                out,
                "num $r p{me}() {{\n  send($r, {v});\n  close($r);\n}}\n"
            )
            .unwrap();
        }
        Tree::Node {
            kids,
            picks,
            eager,
            tail,
        } => {
            let ids: Vec<usize> = kids.iter().map(|k| emit(k, next, out)).collect();
            let collected = if *tail { ids.len() - 1 } else { ids.len() };
            let mut body = String::new();
            // per child: 0 = spawn next, 1 = recv next, 2 = wait next, 3 = done
            let mut stage = vec![0u8; collected];
            let mut p = picks.iter().cycle();
            while stage.iter().any(|&s| s < 3) {
                let open: Vec<usize> = (0..collected).filter(|&i| stage[i] < 3).collect();
                let i = open[*p.next().unwrap_or(&0) as usize % open.len()];
                let k = ids[i];
                match stage[i] {
                    0 => writeln!(body, "  num $c{i} = p{k}();").unwrap(),
                    1 => {
                        writeln!(body, "  int x{i} = recv($c{i});").unwrap();
                        if *eager {
                            writeln!(body, "  int y{i} = x{i} + 1;").unwrap();
                        }
                    }
                    _ => writeln!(body, "  wait($c{i});").unwrap(),
                }
                stage[i] += 1;
            }
            if *tail {
                writeln!(body, "  $r = p{}();", ids[collected]).unwrap();
            } else {
                let sum: Vec<String> = (0..collected).map(|i| format!("x{i}")).collect();
                writeln!(body, "  send($r, {});\n  close($r);", sum.join(" + ")).unwrap();
            }
            writeln!(out, "num $r p{me}() {{\n{body}}}\n").unwrap();
        }
    }
    me
}

pub mod strategy {
    use proptest::prelude::*;

    use super::Tree;

    pub fn tree() -> impl Strategy<Value = Tree> {
        let leaf = (0i64..100).prop_map(Tree::Leaf);
        leaf.prop_recursive(3, 12, 3, |inner| {
            (
                prop::collection::vec(inner, 1..=3),
                prop::collection::vec(any::<u8>(), 1..12),
                any::<bool>(),
                any::<bool>(),
            )
                .prop_map(|(kids, picks, eager, tail)| Tree::Node {
                    kids,
                    picks,
                    eager,
                    tail,
                })
        })
    }
}

pub fn case(name: &str, n: Option<i64>) -> BenchCase {
    cases()
        .into_iter()
        .find(|c| c.name == name && c.n == n)
        .unwrap_or_else(|| panic!("no corpus case {name} {n:?}"))
}

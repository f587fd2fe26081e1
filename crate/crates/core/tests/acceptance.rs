mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use sessionspan::bench::compare_source;
use sessionspan::check::check_program;
use sessionspan::engine::explore::{explore, ExploreLimits};
use sessionspan::engine::sched::Policy;
use sessionspan::engine::{
    run, ChanId, Instance, Machine, MsgKind, Outcome, Rule, RunConfig, Semantics, Stamp, Value,
};
use sessionspan::ir::parser::parse;
use sessionspan::ir::printer::stmt_head;
use sessionspan::ir::{visit, ProcDef, Program};
use sessionspan::translate::translate;

use common::{case, cases, corpus_dir, source};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn args(n: Option<i64>) -> BTreeMap<String, Value> {
    n.map(|n| ("n".to_string(), Value::Int(n)))
        .into_iter()
        .collect()
}

fn span_dominance() -> Check {
    let start = Instant::now();
    let mut n = 0;
    for k in cases() {
        let c = compare_source(&source(&k), k.n, 0).map_err(|e| format!("{}: {e}", k.name))?;
        if c.nonblocking.span > c.blocking.span {
            return Err(format!(
                "{} n={:?}: {} > {}",
                k.name, k.n, c.nonblocking.span, c.blocking.span
            ));
        }
        n += 1;
    }
    let t = start.elapsed();
    if t.as_secs_f64() >= 10.0 {
        return Err(format!("took {t:?}"));
    }
    Ok(format!("{n} cases in {:.2}s", t.as_secs_f64()))
}

fn work_preservation() -> Check {
    let mut n = 0;
    for k in cases() {
        let c = compare_source(&source(&k), k.n, 0).map_err(|e| format!("{}: {e}", k.name))?;
        if c.blocking.total_work != c.nonblocking.total_work {
            return Err(format!(
                "{} n={:?}: {} != {}",
                k.name, k.n, c.blocking.total_work, c.nonblocking.total_work
            ));
        }
        n += 1;
    }
    Ok(format!("{n} cases"))
}

fn strict_improvement() -> Check {
    let mut seen = Vec::new();
    for name in ["parfib", "reduce-naive"] {
        for k in cases()
            .into_iter()
            .filter(|k| k.name == name && k.n.is_some_and(|n| n >= 4))
        {
            let c = compare_source(&source(&k), k.n, 0).map_err(|e| e.to_string())?;
            if c.nonblocking.span >= c.blocking.span {
                return Err(format!(
                    "{name} n={:?}: {} vs {}",
                    k.n, c.nonblocking.span, c.blocking.span
                ));
            }
            seen.push(format!(
                "{name}/{}: {}<{}",
                k.n.unwrap(),
                c.nonblocking.span,
                c.blocking.span
            ));
        }
    }
    if seen.len() < 2 {
        return Err("no parfib or reduce-naive case with n >= 4".into());
    }
    Ok(seen.join(", "))
}

fn golden_translation() -> Check {
    let out =
        translate(&parse(&source(&case("queue", Some(8)))).unwrap()).map_err(|e| e.to_string())?;
    let golden = parse(include_str!("golden/queue_nonblocking.ssir")).map_err(|e| e.to_string())?;
    for name in ["elem", "empty"] {
        if out.proc(name).map(|p| &p.body) != golden.proc(name).map(|p| &p.body) {
            return Err(format!("`{name}` differs"));
        }
    }
    let heads = |p: &ProcDef| {
        visit::stmts(&p.body)
            .map(stmt_head)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let elem = heads(out.proc("elem").unwrap());
    for want in [
        "sync($q, y); send($r, y);",
        "sync($r, end); sync($q, shift); close($q);",
    ] {
        if !elem.contains(want) {
            return Err(format!("missing `{want}`"));
        }
    }
    Ok("elem and empty match".into())
}

/// Step arbitrary other instances until `want` is enabled.
fn drive_to(m: &mut Machine<'_>, want: &Instance) -> Result<(), String> {
    for _ in 0..1000 {
        let enabled = m.enabled();
        if enabled.contains(want) {
            return Ok(());
        }
        let other = enabled
            .first()
            .ok_or_else(|| format!("{want:?} never enabled"))?;
        m.step(other).map_err(|e| e.to_string())?;
    }
    Err(format!("{want:?} never enabled"))
}

fn inst(proc: &ChanId, rule: Rule) -> Instance {
    Instance {
        proc: proc.clone(),
        rule,
    }
}

fn expect(what: &str, got: Option<Stamp>, want: Stamp) -> Result<(), String> {
    if got != Some(want) {
        return Err(format!("{what}: got {got:?}, want {want:?}"));
    }
    Ok(())
}

fn last_msg(m: &Machine<'_>, q: &ChanId) -> Option<(MsgKind, Stamp)> {
    m.queue(q)?.buffer.back().map(|x| (x.kind.clone(), x.stamp))
}

fn set_head(m: &mut Machine<'_>, q: &ChanId, s: Stamp) -> Result<(), String> {
    let head = m
        .queue_mut(q)
        .and_then(|q| q.buffer.front_mut())
        .ok_or("empty queue")?;
    head.stamp = s;
    Ok(())
}

const PING: &str = include_str!("../../../corpus/ping.ssir");
const FWD: &str = "typedef <!int> num;\ntypedef < > unit;\n\
    num $o leaf() { send($o, 1); close($o); }\n\
    num $o mid() { num $x = leaf(); $o = $x; }\n\
    unit $c main() { num $m = mid(); int v = recv($m); wait($m); close($c); }\n";

fn rule_level() -> Check {
    let root = ChanId::root();
    let kid = root.child(1);
    let s = Stamp::new;

    // spawn: parent keeps (s, w), child starts at (s, 0)
    let p = parse(PING).unwrap();
    let mut m =
        Machine::new(&p, Semantics::Blocking, &BTreeMap::new()).map_err(|e| e.to_string())?;
    m.set_stamp(&root, s(3, 7));
    m.step(&inst(&root, Rule::Spawn))
        .map_err(|e| e.to_string())?;
    expect("spawn parent", m.stamp_of(&root), s(3, 7))?;
    expect("spawn child", m.stamp_of(&kid), s(3, 0))?;

    // data_r: max(s, s1) + 1, w + 1
    drive_to(&mut m, &inst(&kid, Rule::DataR))?;
    m.set_stamp(&kid, s(2, 5));
    set_head(&mut m, &kid, s(9, 1))?;
    m.step(&inst(&kid, Rule::DataR))
        .map_err(|e| e.to_string())?;
    expect("data_r", m.stamp_of(&kid), s(10, 6))?;

    // shift_s: free, the message carries (s, w)
    drive_to(&mut m, &inst(&root, Rule::ShiftS))?;
    m.set_stamp(&root, s(11, 4));
    m.step(&inst(&root, Rule::ShiftS))
        .map_err(|e| e.to_string())?;
    expect("shift_s sender", m.stamp_of(&root), s(11, 4))?;
    if last_msg(&m, &kid) != Some((MsgKind::Shift, s(11, 4))) {
        return Err(format!("shift_s message: {:?}", last_msg(&m, &kid)));
    }

    // close: end stamped (s + 1, w + 1)
    drive_to(&mut m, &inst(&kid, Rule::Close))?;
    m.set_stamp(&kid, s(4, 6));
    m.step(&inst(&kid, Rule::Close))
        .map_err(|e| e.to_string())?;
    if last_msg(&m, &kid) != Some((MsgKind::End, s(5, 7))) {
        return Err(format!("close message: {:?}", last_msg(&m, &kid)));
    }

    // wait: max(s, s1) + 1, w + w1 + 1
    drive_to(&mut m, &inst(&root, Rule::Wait))?;
    m.set_stamp(&root, s(3, 10));
    set_head(&mut m, &kid, s(8, 4))?;
    m.step(&inst(&root, Rule::Wait))
        .map_err(|e| e.to_string())?;
    expect("wait", m.stamp_of(&root), s(9, 15))?;

    // fwd_s: the fwd message carries (s, w); fwd_r: max(s, s1), w + w1
    let p = parse(FWD).unwrap();
    let mut m =
        Machine::new(&p, Semantics::Blocking, &BTreeMap::new()).map_err(|e| e.to_string())?;
    drive_to(&mut m, &inst(&kid, Rule::FwdS))?;
    m.set_stamp(&kid, s(6, 2));
    m.step(&inst(&kid, Rule::FwdS)).map_err(|e| e.to_string())?;
    match last_msg(&m, &kid) {
        Some((MsgKind::Fwd(_), st)) if st == s(6, 2) => {}
        other => return Err(format!("fwd_s message: {other:?}")),
    }
    drive_to(&mut m, &inst(&root, Rule::FwdR))?;
    m.set_stamp(&root, s(3, 4));
    m.step(&inst(&root, Rule::FwdR))
        .map_err(|e| e.to_string())?;
    expect("fwd_r", m.stamp_of(&root), s(6, 6))?;

    // data_async_r: s + 1, w + 1, nothing consumed
    let nb = translate(&parse(PING).unwrap()).unwrap();
    let mut m =
        Machine::new(&nb, Semantics::NonBlocking, &BTreeMap::new()).map_err(|e| e.to_string())?;
    drive_to(&mut m, &inst(&kid, Rule::DataAsyncR))?;
    m.set_stamp(&kid, s(4, 4));
    m.step(&inst(&kid, Rule::DataAsyncR))
        .map_err(|e| e.to_string())?;
    expect("data_async_r", m.stamp_of(&kid), s(5, 5))?;

    // sync_wait 1: a value request is matched, span catches up, same work
    drive_to(&mut m, &inst(&kid, Rule::SyncWait))?;
    m.set_stamp(&kid, s(2, 3));
    set_head(&mut m, &kid, s(7, 1))?;
    m.step(&inst(&kid, Rule::SyncWait))
        .map_err(|e| e.to_string())?;
    expect("sync_wait 1", m.stamp_of(&kid), s(7, 3))?;
    let x = m.proc(&kid).and_then(|p| p.vars.get("x").cloned());
    if x != Some(Value::Int(7)) {
        return Err(format!("sync_wait 1 cell: {x:?}"));
    }

    // sync_wait 2: end matched, max(s, s1), w + w1
    drive_to(&mut m, &inst(&root, Rule::SyncWait))?;
    let head = m
        .queue(&kid)
        .and_then(|q| q.buffer.front())
        .map(|x| x.kind.clone());
    if head != Some(MsgKind::End) {
        return Err(format!("sync_wait 2 head: {head:?}"));
    }
    m.set_stamp(&root, s(3, 4));
    set_head(&mut m, &kid, s(9, 6))?;
    m.step(&inst(&root, Rule::SyncWait))
        .map_err(|e| e.to_string())?;
    expect("sync_wait 2", m.stamp_of(&root), s(9, 10))?;

    Ok("spawn data_r shift_s close wait fwd_s fwd_r data_async_r sync_wait 1/2".into())
}

fn determinism() -> Check {
    let mut runs = 0;
    for k in cases() {
        let prog = parse(&source(&k)).unwrap();
        let nb = translate(&prog).map_err(|e| e.to_string())?;
        for (p, sem) in [(&prog, Semantics::Blocking), (&nb, Semantics::NonBlocking)] {
            let mut base = RunConfig::new(sem);
            base.args = args(k.n);
            let want = run(p, &base).report.to_json();
            for policy in Policy::ALL {
                for seed in 0..20 {
                    let got = run(p, &base.clone().policy(policy, seed)).report.to_json();
                    if got != want {
                        return Err(format!("{} {sem:?} {policy} seed {seed}", k.name));
                    }
                    runs += 1;
                }
            }
        }
    }
    Ok(format!("{runs} runs byte-identical"))
}

fn oracle_equivalence() -> Check {
    let mut checked = Vec::new();
    let mut candidates: Vec<(String, Option<i64>)> = Vec::new();
    for k in cases() {
        candidates.push((k.file.to_string_lossy().into_owned(), k.n));
        if k.n.is_some() {
            for n in 1..=2 {
                candidates.push((k.file.to_string_lossy().into_owned(), Some(n)));
            }
        }
    }
    candidates.sort();
    candidates.dedup();
    for (file, n) in candidates {
        let src = std::fs::read_to_string(corpus_dir().join(&file)).unwrap();
        let prog = parse(&src).unwrap();
        let nb = translate(&prog).map_err(|e| e.to_string())?;
        for (p, sem) in [(&prog, Semantics::Blocking), (&nb, Semantics::NonBlocking)] {
            let mut cfg = RunConfig::new(sem);
            cfg.args = args(n);
            cfg.max_steps = 100;
            let r = run(p, &cfg).report;
            if r.outcome != Outcome::Quiescent || r.processes.len() > 4 || r.steps > 30 {
                continue;
            }
            let m = Machine::new(p, sem, &cfg.args).map_err(|e| e.to_string())?;
            let res = explore(&m, ExploreLimits::default());
            let want = (r.span, r.total_work, r.outcome);
            if res.truncated || res.outcomes.len() != 1 || !res.outcomes.contains(&want) {
                return Err(format!(
                    "{file} n={n:?} {sem:?}: {:?} vs {want:?}",
                    res.outcomes
                ));
            }
            checked.push(format!(
                "{file}{}",
                n.map(|n| format!("/{n}")).unwrap_or_default()
            ));
        }
    }
    if checked.len() < 6 {
        return Err(format!("only {} small programs", checked.len()));
    }
    checked.dedup();
    Ok(format!(
        "{} program/semantics pairs ({})",
        checked.len(),
        checked.join(" ")
    ))
}

fn mutants(prog: &Program) -> Vec<(String, Program)> {
    let mut out = Vec::new();
    for (i, p) in prog.procs.iter().enumerate() {
        for path in visit::paths(&p.body) {
            let s = visit::get(&p.body, &path).expect("path from paths()");
            if !s.kind.is_communication() {
                continue;
            }
            let Some(body) = visit::remove(&p.body, &path) else {
                continue;
            };
            let mut m = prog.clone();
            m.procs[i].body = body;
            out.push((format!("{}:{} {}", p.name, s.loc.line, stmt_head(s)), m));
        }
    }
    out
}

fn mutation_gate() -> Check {
    let (mut total, mut by_checker, mut by_engine) = (0, 0, 0);
    let mut files: Vec<_> = cases().into_iter().map(|k| (k.file.clone(), k.n)).collect();
    files.sort();
    files.dedup_by(|a, b| a.0 == b.0);
    for (file, n) in files {
        let src = std::fs::read_to_string(corpus_dir().join(&file)).unwrap();
        let prog = parse(&src).unwrap();
        for (what, m) in mutants(&prog) {
            total += 1;
            if !check_program(&m).is_empty() {
                by_checker += 1;
                continue;
            }
            let mut cfg = RunConfig::new(Semantics::Blocking);
            cfg.args = args(n);
            cfg.max_steps = 100_000;
            if run(&m, &cfg).report.outcome != Outcome::Quiescent {
                by_engine += 1;
                continue;
            }
            return Err(format!(
                "{}: deleting `{what}` went unnoticed",
                file.display()
            ));
        }
    }
    Ok(format!(
        "{total} mutants: {by_checker} by the checker, {by_engine} by the engine"
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("1 span dominance", span_dominance),
        ("2 work preservation", work_preservation),
        ("3 strict span improvement", strict_improvement),
        ("4 golden translation", golden_translation),
        ("5 rule-level costs", rule_level),
        ("6 determinism", determinism),
        ("7 oracle equivalence", oracle_equivalence),
        ("8 type-safety gate", mutation_gate),
    ];
    let mut err = std::io::stderr().lock();
    let mut failed = Vec::new();
    for (name, f) in criteria {
        match f() {
            Ok(detail) => writeln!(err, "PASS {name}: {detail}").unwrap(),
            Err(why) => {
                writeln!(err, "FAIL {name}: {why}").unwrap();
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}

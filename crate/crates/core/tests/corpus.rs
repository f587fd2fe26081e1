mod common;

use std::collections::BTreeMap;

use sessionspan::bench::{compare_source, sweep_seq};
use sessionspan::check::check_program;
use sessionspan::engine::{run, Outcome, RunConfig, Semantics, Value};
use sessionspan::ir::parser::parse;
use sessionspan::ir::printer::print;
use sessionspan::translate::translate;

use common::{case, cases, corpus_dir, dag_costs, source};

#[test]
fn every_file_parses_checks_and_round_trips() {
    let mut files: Vec<_> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ssir"))
        .collect();
    files.sort();
    assert!(files.len() >= 10);
    for f in files {
        let src = std::fs::read_to_string(&f).unwrap();
        let prog = parse(&src).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        assert!(check_program(&prog).is_empty(), "{}", f.display());
        assert_eq!(parse(&print(&prog)).unwrap(), prog, "{}", f.display());
        let nb = translate(&prog).unwrap();
        assert!(check_program(&nb).is_empty(), "{} translated", f.display());
        assert_eq!(
            parse(&print(&nb)).unwrap(),
            nb,
            "{} translated",
            f.display()
        );
    }
}

#[test]
fn every_case_preserves_work_and_keeps_span() {
    for k in cases() {
        let c = compare_source(&source(&k), k.n, 1)
            .unwrap_or_else(|e| panic!("{} {:?}: {e}", k.name, k.n));
        assert!(c.span_dominated(), "{} {:?}", k.name, k.n);
        assert!(c.work_equal(), "{} {:?}", k.name, k.n);
        if k.expect_strict {
            assert!(c.nonblocking.span < c.blocking.span, "{} {:?}", k.name, k.n);
        }
    }
}

#[test]
fn spans_match_longest_path_oracle() {
    for k in cases() {
        let prog = parse(&source(&k)).unwrap();
        let nb = translate(&prog).unwrap();
        for (p, sem) in [(&prog, Semantics::Blocking), (&nb, Semantics::NonBlocking)] {
            let mut cfg = RunConfig::new(sem);
            cfg.trace = true;
            if let Some(n) = k.n {
                cfg = cfg.arg("n", n);
            }
            let res = run(p, &cfg);
            let (span, work) =
                dag_costs(&res.trace).unwrap_or_else(|e| panic!("{} {sem:?}: {e}", k.name));
            assert_eq!(span, res.report.span, "{} {sem:?}", k.name);
            assert_eq!(work, res.report.total_work, "{} {sem:?}", k.name);
        }
    }
}

#[test]
fn root_collects_all_work() {
    for k in cases() {
        let c = compare_source(&source(&k), k.n, 0).unwrap();
        for r in [&c.blocking, &c.nonblocking] {
            assert_eq!(r.outcome, Outcome::Quiescent);
            assert_eq!(r.root_work, r.total_work, "{}", k.name);
        }
    }
}

#[test]
fn ping_costs() {
    // hand-executed: send (1,1); recv max(0,1)+1 = 2; shift free; close
    // (3,3) stamped on end; wait max(1,3)+1 = 4 with work 1+2+1; close 5
    let c = compare_source(&source(&case("ping", None)), None, 3).unwrap();
    assert_eq!((c.blocking.span, c.blocking.total_work), (5, 5));
    // requests (1,1), (2,2) for the child; the parent's wait request is
    // (3,3) and its sync catches up with the end stamped 3
    assert_eq!((c.nonblocking.span, c.nonblocking.total_work), (3, 5));
}

#[test]
fn straight_line_program_has_equal_spans() {
    let c = compare_source(&source(&case("trivial", None)), None, 3).unwrap();
    assert_eq!(c.blocking, c.nonblocking);
}

#[test]
fn parfib_two_by_hand() {
    // fib(1) and fib(0) each end at span 2 (send, close). The parent at n=2
    // blocking: recv max(0,1)+1 = 2, wait max(2,2)+1 = 3, recv max(3,1)+1
    // = 4, wait 5, send 6, close 7; main: recv max(0,6)+1 = 7, wait
    // max(7,7)+1 = 8, close 9.
    let c = compare_source(&source(&case("parfib", Some(2))), Some(2), 0).unwrap();
    assert_eq!(c.blocking.span, 9);
    assert!(c.nonblocking.span < c.blocking.span);
}

#[test]
fn queue_sizes_sweep() {
    let src = source(&case("queue", Some(8)));
    for n in 0..6 {
        let c = compare_source(&src, Some(n), 0).unwrap();
        assert!(c.holds(), "n={n}");
    }
}

#[test]
fn sequential_sweep_is_clean() {
    let report = sweep_seq(&corpus_dir(), &cases(), 1);
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    assert_eq!(report.rows.len(), cases().len());
}

#[test]
fn missing_argument_is_a_runtime_error() {
    let prog = parse(&source(&case("queue", Some(8)))).unwrap();
    let r = run(&prog, &RunConfig::new(Semantics::Blocking)).report;
    assert_eq!(r.outcome, Outcome::RuntimeError);
    let mut args = BTreeMap::new();
    args.insert("n".to_string(), Value::Bool(true));
    let mut cfg = RunConfig::new(Semantics::Blocking);
    cfg.args = args;
    assert_eq!(run(&prog, &cfg).report.outcome, Outcome::RuntimeError);
}

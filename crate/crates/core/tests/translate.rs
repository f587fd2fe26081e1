use sessionspan::check::check_program;
use sessionspan::ir::parser::parse;
use sessionspan::ir::visit;
use sessionspan::ir::printer::print;
use sessionspan::translate::{translate, translate_traced, TranslateError};

const QUEUE: &str = include_str!("../../../corpus/queue.ssir");
const GOLDEN: &str = include_str!("golden/queue_nonblocking.ssir");

#[test]
fn queue_matches_hand_written_version() {
    let out = translate(&parse(QUEUE).unwrap()).unwrap();
    let golden = parse(GOLDEN).unwrap();
    for name in ["elem", "empty"] {
        let got = out.proc(name).unwrap();
        let want = golden.proc(name).unwrap();
        assert_eq!(got.body, want.body, "{name}:\n{}", print(&out));
    }
}

#[test]
fn output_type_checks_and_round_trips() {
    let out = translate(&parse(QUEUE).unwrap()).unwrap();
    assert!(check_program(&out).is_empty(), "{:?}", check_program(&out));
    assert!(check_program(&parse(GOLDEN).unwrap()).is_empty());
    let text = print(&out);
    assert_eq!(parse(&text).unwrap(), out);
}

#[test]
fn output_is_not_accepted_again() {
    let out = translate(&parse(QUEUE).unwrap()).unwrap();
    assert!(matches!(
        translate(&out),
        Err(TranslateError::NotBlocking(_))
    ));
}

#[test]
fn trace_covers_every_statement() {
    let prog = parse(QUEUE).unwrap();
    let (_, steps) = translate_traced(&prog).unwrap();
    let all: usize = prog.procs.iter().map(|p| visit::stmts(&p.body).count()).sum();
    assert_eq!(steps.len(), all);
    let close = steps
        .iter()
        .find(|s| s.proc == "elem" && s.stmt == "close($q);")
        .unwrap();
    assert_eq!(close.before, "{($q, shift), ($r, end)}");
    assert_eq!(close.after, "{}");
}

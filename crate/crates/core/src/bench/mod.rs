//! Blocking versus non-blocking comparison over a corpus.
//!
//! All quantities are engine counts (span, work, steps). Nothing here
//! measures wall-clock time.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::check::{check_program, Diagnostic};
use crate::engine::sched::Policy;
use crate::engine::{run, Outcome, RunConfig, RunReport, Semantics, Value};
use crate::ir::parser::{parse, ParseError};
use crate::ir::Program;
use crate::translate::{translate, TranslateError};

/// Environment variable overriding the corpus directory.
pub const CORPUS_ENV: &str = "SESSIONSPAN_CORPUS";
pub const MANIFEST: &str = "manifest.toml";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchCase {
    pub name: String,
    /// Source file, relative to the corpus directory.
    pub file: PathBuf,
    /// Size parameter, passed to the entry process as `n`.
    #[serde(default)]
    pub n: Option<i64>,
    /// Expect the non-blocking span to be strictly smaller.
    #[serde(default)]
    pub expect_strict: bool,
}

#[derive(Deserialize)]
struct Manifest {
    #[serde(default, rename = "case")]
    cases: Vec<BenchCase>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

/// Load the cases of a corpus directory: from `manifest.toml` when present,
/// otherwise one case per `*.ssir` file, in name order, with no size.
pub fn load_cases(dir: &Path) -> Result<Vec<BenchCase>, BenchError> {
    let manifest = dir.join(MANIFEST);
    if manifest.is_file() {
        let text = fs::read_to_string(&manifest).map_err(|source| BenchError::Io {
            path: manifest.clone(),
            source,
        })?;
        let m: Manifest = toml::from_str(&text).map_err(|e| BenchError::Manifest {
            path: manifest.clone(),
            message: e.to_string(),
        })?;
        return Ok(m.cases);
    }
    let entries = fs::read_dir(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ssir"))
        .collect();
    files.sort();
    Ok(files
        .into_iter()
        .map(|p| BenchCase {
            name: p
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned(),
            file: PathBuf::from(p.file_name().unwrap_or_default()),
            n: None,
            expect_strict: false,
        })
        .collect())
}

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{} type error(s), first: {}", .0.len(), .0[0])]
    Type(Vec<Diagnostic>),
    #[error("{0}")]
    Translate(#[from] TranslateError),
    #[error("{semantics:?} run ended {outcome:?}{}", .error.as_deref().map(|e| format!(": {e}")).unwrap_or_default())]
    Run {
        semantics: Semantics,
        outcome: Outcome,
        error: Option<String>,
    },
    #[error("{semantics:?} reports differ between schedules ({policy} seed {seed})")]
    Nondeterministic {
        semantics: Semantics,
        policy: Policy,
        seed: u64,
    },
}

/// One program run both ways.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Comparison {
    pub blocking: RunReport,
    pub nonblocking: RunReport,
}

impl Comparison {
    pub fn span_ratio(&self) -> f64 {
        ratio(self.nonblocking.span, self.blocking.span)
    }

    pub fn work_equal(&self) -> bool {
        self.blocking.total_work == self.nonblocking.total_work
    }

    pub fn span_dominated(&self) -> bool {
        self.nonblocking.span <= self.blocking.span
    }

    /// Work preserved and span not increased.
    pub fn holds(&self) -> bool {
        self.work_equal() && self.span_dominated()
    }
}

fn ratio(nb: u64, b: u64) -> f64 {
    if b == 0 {
        1.0
    } else {
        nb as f64 / b as f64
    }
}

/// Run `prog` under the blocking engine and its translation under the
/// non-blocking engine, each with `seeds` seeds of every policy. All
/// schedules must agree; the round-robin, seed 0 report is returned.
pub fn compare(
    prog: &Program,
    args: &BTreeMap<String, Value>,
    seeds: u64,
) -> Result<Comparison, CompareError> {
    let nb = translate(prog)?;
    Ok(Comparison {
        blocking: run_all(prog, Semantics::Blocking, args, seeds)?,
        nonblocking: run_all(&nb, Semantics::NonBlocking, args, seeds)?,
    })
}

fn run_all(
    prog: &Program,
    semantics: Semantics,
    args: &BTreeMap<String, Value>,
    seeds: u64,
) -> Result<RunReport, CompareError> {
    let mut cfg = RunConfig::new(semantics);
    cfg.args = args.clone();
    let first = run(prog, &cfg).report;
    if first.outcome != Outcome::Quiescent {
        return Err(CompareError::Run {
            semantics,
            outcome: first.outcome,
            error: first.error,
        });
    }
    for policy in Policy::ALL {
        for seed in 0..seeds {
            let r = run(prog, &cfg.clone().policy(policy, seed)).report;
            if r != first {
                return Err(CompareError::Nondeterministic {
                    semantics,
                    policy,
                    seed,
                });
            }
        }
    }
    Ok(first)
}

/// Parse, check and compare one source text.
pub fn compare_source(src: &str, n: Option<i64>, seeds: u64) -> Result<Comparison, CompareError> {
    let prog = parse(src)?;
    let diags = check_program(&prog);
    if !diags.is_empty() {
        return Err(CompareError::Type(diags));
    }
    let args = n
        .map(|n| ("n".to_string(), Value::Int(n)))
        .into_iter()
        .collect();
    compare(&prog, &args, seeds)
}

/// One line of the corpus table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub name: String,
    pub n: Option<i64>,
    pub span_b: u64,
    pub span_nb: u64,
    pub work_b: u64,
    pub work_nb: u64,
    pub ratio: f64,
    pub work_equal: bool,
    pub steps_b: u64,
    pub steps_nb: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub name: String,
    pub n: Option<i64>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BenchReport {
    /// Always "engine-steps": span, work and steps are counts, not times.
    pub metric: &'static str,
    pub rows: Vec<CompareRow>,
    pub failures: Vec<Failure>,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bench report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "name", "n", "span_b", "span_nb", "work_b", "work_nb", "ratio",
        ])
        .expect("write to memory");
        for r in &self.rows {
            w.write_record([
                r.name.clone(),
                r.n.map(|n| n.to_string()).unwrap_or_default(),
                r.span_b.to_string(),
                r.span_nb.to_string(),
                r.work_b.to_string(),
                r.work_nb.to_string(),
                format!("{:.4}", r.ratio),
            ])
            .expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

type CaseResult = (Option<CompareRow>, Option<Failure>);

/// Run one case. A row is produced whenever both engines finished; a
/// failure is recorded for errors and for violated expectations.
pub fn run_case(dir: &Path, case: &BenchCase, seeds: u64) -> CaseResult {
    let fail = |reason: String| Failure {
        name: case.name.clone(),
        n: case.n,
        reason,
    };
    let path = dir.join(&case.file);
    let src = match fs::read_to_string(&path) {
        Ok(s) => s,
        Err(e) => return (None, Some(fail(format!("{}: {e}", path.display())))),
    };
    let c = match compare_source(&src, case.n, seeds) {
        Ok(c) => c,
        Err(e) => return (None, Some(fail(e.to_string()))),
    };
    let row = CompareRow {
        name: case.name.clone(),
        n: case.n,
        span_b: c.blocking.span,
        span_nb: c.nonblocking.span,
        work_b: c.blocking.total_work,
        work_nb: c.nonblocking.total_work,
        ratio: c.span_ratio(),
        work_equal: c.work_equal(),
        steps_b: c.blocking.steps,
        steps_nb: c.nonblocking.steps,
    };
    let failure = if !c.span_dominated() {
        Some(fail(format!(
            "span increased: {} > {}",
            row.span_nb, row.span_b
        )))
    } else if !c.work_equal() {
        Some(fail(format!(
            "work changed: {} != {}",
            row.work_nb, row.work_b
        )))
    } else if case.expect_strict && row.span_nb >= row.span_b {
        Some(fail(format!(
            "expected a strict span improvement, got {} vs {}",
            row.span_nb, row.span_b
        )))
    } else {
        None
    };
    (Some(row), failure)
}

fn assemble(results: Vec<CaseResult>) -> BenchReport {
    let mut report = BenchReport {
        metric: "engine-steps",
        ..BenchReport::default()
    };
    for (row, failure) in results {
        report.rows.extend(row);
        report.failures.extend(failure);
    }
    report
}

/// Run every case on the current thread.
pub fn sweep_seq(dir: &Path, cases: &[BenchCase], seeds: u64) -> BenchReport {
    assemble(cases.iter().map(|c| run_case(dir, c, seeds)).collect())
}

/// Run cases on the rayon pool. Each case owns its engines; results keep
/// case order, so the report equals [`sweep_seq`]'s.
#[cfg(feature = "parallel")]
pub fn sweep_par(dir: &Path, cases: &[BenchCase], seeds: u64) -> BenchReport {
    use rayon::prelude::*;
    assemble(cases.par_iter().map(|c| run_case(dir, c, seeds)).collect())
}

/// Parallel when built with the `parallel` feature, sequential otherwise.
pub fn sweep(dir: &Path, cases: &[BenchCase], seeds: u64) -> BenchReport {
    #[cfg(feature = "parallel")]
    {
        sweep_par(dir, cases, seeds)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sweep_seq(dir, cases, seeds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STRAIGHT: &str = "typedef <!int> one;\ntypedef < > unit;\n\
        one $o giver() { send($o, 7); close($o); }\n\
        unit $c main() { one $g = giver(); int x = recv($g); wait($g); close($c); }\n";

    #[test]
    fn ratio_of_zero_span_is_one() {
        assert_eq!(ratio(0, 0), 1.0);
        assert_eq!(ratio(2, 4), 0.5);
    }

    #[test]
    fn straight_line_program_compares() {
        let c = compare_source(STRAIGHT, None, 2).unwrap();
        assert!(c.holds());
    }

    #[test]
    fn csv_header_and_rows() {
        let report = assemble(vec![(
            Some(CompareRow {
                name: "x".into(),
                n: Some(3),
                span_b: 4,
                span_nb: 2,
                work_b: 5,
                work_nb: 5,
                ratio: 0.5,
                work_equal: true,
                steps_b: 9,
                steps_nb: 11,
            }),
            None,
        )]);
        assert_eq!(
            report.to_csv(),
            "name,n,span_b,span_nb,work_b,work_nb,ratio\nx,3,4,2,5,5,0.5000\n"
        );
        assert!(report.to_json().contains("\"metric\": \"engine-steps\""));
    }

    #[test]
    fn manifest_parses() {
        let m: Manifest = toml::from_str(
            "[[case]]\nname = \"a\"\nfile = \"a.ssir\"\nn = 4\nexpect_strict = true\n\n\
             [[case]]\nname = \"b\"\nfile = \"b.ssir\"\n",
        )
        .unwrap();
        assert_eq!(m.cases.len(), 2);
        assert_eq!(m.cases[0].n, Some(4));
        assert!(!m.cases[1].expect_strict);
    }
}

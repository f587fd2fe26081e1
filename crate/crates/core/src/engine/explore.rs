//! Exhaustive schedule exploration for small programs.
//!
//! Depth-first search over every interleaving, with configurations
//! deduplicated. Used as an oracle for the claim that the cost of a
//! session-typed program does not depend on the schedule.

use std::collections::{BTreeSet, HashSet};

use super::{Machine, Outcome, Rule};

#[derive(Clone, Copy, Debug)]
pub struct ExploreLimits {
    pub max_states: usize,
    pub max_depth: u64,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits {
            max_states: 200_000,
            max_depth: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExploreResult {
    /// Distinct `(span, total_work, outcome)` triples over all maximal runs.
    pub outcomes: BTreeSet<(u64, u64, Outcome)>,
    pub states: usize,
    /// Largest number of live processes seen.
    pub max_procs: usize,
    /// Longest run, in steps.
    pub max_steps: u64,
    pub truncated: bool,
}

pub fn explore(start: &Machine<'_>, limits: ExploreLimits) -> ExploreResult {
    let mut res = ExploreResult {
        outcomes: BTreeSet::new(),
        states: 0,
        max_procs: 0,
        max_steps: 0,
        truncated: false,
    };
    let mut seen = HashSet::new();
    let mut stack = vec![start.clone()];
    while let Some(m) = stack.pop() {
        if !seen.insert(m.clone()) {
            continue;
        }
        res.states += 1;
        res.max_procs = res.max_procs.max(m.procs.len());
        res.max_steps = res.max_steps.max(m.steps);
        if res.states > limits.max_states || m.steps > limits.max_depth {
            res.truncated = true;
            break;
        }
        let enabled = m.enabled();
        if m.is_done() || enabled.is_empty() {
            let r = m.report(m.outcome());
            res.outcomes.insert((r.span, r.total_work, r.outcome));
            continue;
        }
        // as in `run_machine`, a reachable fault preempts everything else
        let choices: Vec<_> = match enabled.iter().find(|i| matches!(i.rule, Rule::Fault(_))) {
            Some(f) => vec![f.clone()],
            None => enabled,
        };
        for inst in choices.iter().rev() {
            let mut next = m.clone();
            // errors are recorded in the machine and surface as its outcome
            let _ = next.step(inst);
            stack.push(next);
        }
    }
    res
}

//! Scheduling policies.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Instance;

/// Picks one of the enabled rule instances. `enabled` is never empty.
pub trait Scheduler {
    fn pick(&mut self, enabled: &[Instance], step: u64) -> usize;
}

/// Cycles through the enabled set, starting `offset` positions in.
#[derive(Clone, Debug, Default)]
pub struct RoundRobin {
    pub offset: u64,
}

impl Scheduler for RoundRobin {
    fn pick(&mut self, enabled: &[Instance], step: u64) -> usize {
        (step.wrapping_add(self.offset) % enabled.len() as u64) as usize
    }
}

/// Uniform choice from a seeded ChaCha stream.
#[derive(Clone, Debug)]
pub struct SeededRandom {
    rng: ChaCha8Rng,
}

impl SeededRandom {
    pub fn new(seed: u64) -> Self {
        SeededRandom {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Scheduler for SeededRandom {
    fn pick(&mut self, enabled: &[Instance], _step: u64) -> usize {
        self.rng.gen_range(0..enabled.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    RoundRobin,
    Random,
}

impl Policy {
    pub const ALL: [Policy; 2] = [Policy::RoundRobin, Policy::Random];

    pub fn scheduler(self, seed: u64) -> Box<dyn Scheduler> {
        match self {
            Policy::RoundRobin => Box::new(RoundRobin { offset: seed }),
            Policy::Random => Box::new(SeededRandom::new(seed)),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::RoundRobin => "round-robin",
            Policy::Random => "random",
        })
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "round-robin" | "rr" => Ok(Policy::RoundRobin),
            "random" => Ok(Policy::Random),
            other => Err(format!(
                "unknown policy `{other}` (expected round-robin or random)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{ChanId, Rule};

    fn three() -> Vec<Instance> {
        (1..=3)
            .map(|k| Instance {
                proc: ChanId::root().child(k),
                rule: Rule::Spawn,
            })
            .collect()
    }

    #[test]
    fn random_is_reproducible() {
        let e = three();
        let a: Vec<usize> = {
            let mut s = SeededRandom::new(9);
            (0..20).map(|i| s.pick(&e, i)).collect()
        };
        let b: Vec<usize> = {
            let mut s = SeededRandom::new(9);
            (0..20).map(|i| s.pick(&e, i)).collect()
        };
        assert_eq!(a, b);
        assert!(a.iter().all(|&i| i < 3));
    }

    #[test]
    fn round_robin_rotates() {
        let e = three();
        let mut s = RoundRobin { offset: 1 };
        assert_eq!([s.pick(&e, 0), s.pick(&e, 1), s.pick(&e, 2)], [1, 2, 0]);
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.to_string().parse::<Policy>(), Ok(p));
        }
    }
}

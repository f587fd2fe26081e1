//! Session-typed concurrent IR with blocking and non-blocking receive.
//!
//! The crate provides the IR ([`ir`]), a linear session type checker
//! ([`check`]), an executable cost semantics for both receive disciplines
//! ([`engine`]), the blocking to non-blocking translation ([`translate`]) and
//! a corpus harness comparing the two ([`bench`]).

pub mod bench;
pub mod check;
pub mod engine;
pub mod ir;
pub mod translate;

use std::fmt;

use serde::Serialize;

use crate::ir::Loc;

/// Machine-readable diagnostic class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Code {
    /// Linearity: a channel is used twice, leaked, or unknown.
    E001,
    /// Protocol mismatch against the session type.
    E002,
    /// Missing, extra or misdirected shift.
    E003,
    /// Sync ordering: unsynchronized use or sync without a matching request.
    E004,
    /// Label or choice error.
    E005,
    /// Value typing: unbound variable or ill-typed expression.
    E006,
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: Code,
    pub message: String,
    pub line: u32,
    pub col: u32,
    /// Process the diagnostic was raised in, if any.
    pub proc: Option<String>,
}

impl Diagnostic {
    pub fn new(code: Code, loc: Loc, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            message: message.into(),
            line: loc.line,
            col: loc.col,
            proc: None,
        }
    }

    /// `file:line:col: CODE: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.line, self.col, self.code, self.message
        )?;
        if let Some(p) = &self.proc {
            write!(f, " (in `{p}`)")?;
        }
        Ok(())
    }
}

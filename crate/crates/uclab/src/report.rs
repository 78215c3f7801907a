//! Verification outcome records shared by the verifiers and the CLI.

use serde::{Deserialize, Serialize};

/// Whether a verifier ran with explicit constants or fitted them over an
/// ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Explicit,
    Fit,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Explicit => write!(f, "explicit"),
            Mode::Fit => write!(f, "fit"),
        }
    }
}

/// Fitted-constant metadata attached to fit-mode reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitInfo {
    pub constant: f64,
    pub alpha: Option<f64>,
    pub ensemble_size: usize,
}

/// Margins above this are flagged vacuous: the inequality holds, but only
/// because the explicit right-hand side is astronomically large.
pub const VACUOUS_MARGIN: f64 = 1e6;

/// One verification outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityReport {
    /// Stable inequality id, e.g. `thm3.6.three_ball.explicit`.
    pub id: String,
    pub mode: Mode,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs / lhs; +∞ when lhs = 0.
    pub margin: f64,
    /// pass ⇔ margin ≥ 1.
    pub pass: bool,
    /// margin exceeds [`VACUOUS_MARGIN`].
    pub vacuous: bool,
    /// Named constants entering the right-hand side.
    pub constants: Vec<(String, f64)>,
    pub fit: Option<FitInfo>,
    pub notes: Vec<String>,
}

impl InequalityReport {
    pub fn new(id: impl Into<String>, mode: Mode, lhs: f64, rhs: f64) -> Self {
        let margin = if lhs == 0.0 {
            f64::INFINITY
        } else {
            rhs / lhs
        };
        InequalityReport {
            id: id.into(),
            mode,
            lhs,
            rhs,
            margin,
            pass: margin >= 1.0 - 1e-12,
            vacuous: margin > VACUOUS_MARGIN,
            constants: Vec::new(),
            fit: None,
            notes: Vec::new(),
        }
    }

    pub fn with_constant(mut self, name: impl Into<String>, value: f64) -> Self {
        self.constants.push((name.into(), value));
        self
    }

    pub fn with_constants(mut self, entries: &[(&str, f64)]) -> Self {
        for (k, v) in entries {
            self.constants.push((k.to_string(), *v));
        }
        self
    }

    pub fn with_fit(mut self, fit: FitInfo) -> Self {
        self.fit = Some(fit);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

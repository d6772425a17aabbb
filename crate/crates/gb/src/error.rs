//! Error classes of the command-line tool and their exit codes.

use serde::Serialize;
use serde_json::json;

/// What went wrong, as seen by a calling script.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    /// The mathematics said no: a hypothesis of the requested check fails.
    HypothesisNotSatisfied,
    /// Bad arguments, unreadable files, unknown systems.
    Configuration,
    /// The numerics could not produce an answer.
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::HypothesisNotSatisfied => 1,
            ErrorClass::Configuration => 2,
            ErrorClass::Numerical => 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub class: ErrorClass,
    /// Short machine-readable tag, e.g. `unknown_system`.
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn config(kind: &str, message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Configuration, kind: kind.into(), message: message.into() }
    }

    pub fn numerical(kind: &str, message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Numerical, kind: kind.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }

    /// The document written to stderr.
    pub fn to_json(&self) -> String {
        json!({
            "error": {
                "class": self.class,
                "kind": self.kind,
                "message": self.message,
                "exit_code": self.exit_code(),
            }
        })
        .to_string()
    }
}

impl From<gb_core::Error> for CliError {
    fn from(e: gb_core::Error) -> Self {
        use gb_core::Error as E;
        let (class, kind) = match &e {
            E::DisconjugacyViolation { .. } => (ErrorClass::HypothesisNotSatisfied, "disconjugacy_violation"),
            E::UnknownSystem(_) => (ErrorClass::Configuration, "unknown_system"),
            E::InvalidArgument(_) => (ErrorClass::Configuration, "invalid_argument"),
            E::ConvexityViolation { .. } => (ErrorClass::Configuration, "convexity_violation"),
            E::TransformFailure { .. } => (ErrorClass::Numerical, "transform_failure"),
            E::NotConvex { .. } => (ErrorClass::Numerical, "not_convex"),
            E::Escape { .. } => (ErrorClass::Numerical, "escape"),
            E::NotPeriodic { .. } => (ErrorClass::Numerical, "not_periodic"),
            E::Pole { .. } => (ErrorClass::Numerical, "pole"),
            E::InsufficientWindow { .. } => (ErrorClass::Numerical, "insufficient_window"),
            E::ReconstructionDomain { .. } => (ErrorClass::Numerical, "reconstruction_domain"),
            E::DegenerateFrame { .. } => (ErrorClass::Numerical, "degenerate_frame"),
            E::SingularProjection { .. } => (ErrorClass::Numerical, "singular_projection"),
            E::NoContraction { .. } => (ErrorClass::Numerical, "no_contraction"),
            E::FitFailure { .. } => (ErrorClass::Numerical, "fit_failure"),
            E::DisjointSpans => (ErrorClass::Numerical, "disjoint_spans"),
        };
        CliError { class, kind: kind.into(), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config("io", e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
